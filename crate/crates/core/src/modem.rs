//! Square M-QAM as two independent Gray-labelled PAM rails with unit average
//! energy.
//!
//! Each complex symbol takes `log₂M` bits: the first half label the in-phase
//! rail, the second half the quadrature rail. On a rail, label 0 is the top
//! (most positive) level, so 4-QAM bits `00` map to `(+1/√2, +1/√2)`.

use crate::error::{dim_err, Error, Result};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Debug, PartialEq)]
pub struct Constellation {
    m: usize,
    levels: Vec<f64>,
    d_min: f64,
    bits_per_rail: usize,
    /// `label_of_level[i]` is the Gray label of `levels[i]`.
    label_of_level: Vec<u32>,
    /// `level_of_label[b]` is the index into `levels` for label `b`.
    level_of_label: Vec<usize>,
}

pub const SUPPORTED_ORDERS: [usize; 4] = [4, 16, 64, 256];

/// Builds unit-energy square QAM of order `m`.
pub fn make_qam(m: usize) -> Result<Constellation> {
    if !SUPPORTED_ORDERS.contains(&m) {
        return Err(Error::UnsupportedModulation(m.to_string()));
    }
    let l = (m as f64).sqrt().round() as usize;
    let bits_per_rail = l.trailing_zeros() as usize;
    let d_min = (6.0 / (m as f64 - 1.0)).sqrt();
    let levels: Vec<f64> = (0..l)
        .map(|i| (2.0 * i as f64 - (l as f64 - 1.0)) * d_min / 2.0)
        .collect();
    // position from the top for each label, via inverse Gray
    let mut level_of_label = vec![0; l];
    let mut label_of_level = vec![0u32; l];
    for (label, slot) in level_of_label.iter_mut().enumerate() {
        let mut pos = label as u32;
        let mut shift = pos >> 1;
        while shift != 0 {
            pos ^= shift;
            shift >>= 1;
        }
        let idx = l - 1 - pos as usize;
        *slot = idx;
        label_of_level[idx] = label as u32;
    }
    Ok(Constellation {
        m,
        levels,
        d_min,
        bits_per_rail,
        label_of_level,
        level_of_label,
    })
}

impl Constellation {
    pub fn order(&self) -> usize {
        self.m
    }

    /// PAM levels in ascending order.
    pub fn pam_levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    pub fn bits_per_symbol(&self) -> usize {
        2 * self.bits_per_rail
    }

    pub fn bits_per_rail(&self) -> usize {
        self.bits_per_rail
    }

    /// Gray label of each ascending level.
    pub fn rail_labels(&self) -> &[u32] {
        &self.label_of_level
    }

    pub fn name(&self) -> String {
        format!("{}qam", self.m)
    }

    fn rail_value(&self, bits: &[u8]) -> f64 {
        let label = bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
        self.levels[self.level_of_label[label]]
    }

    /// Index of the level nearest to `v`.
    pub fn slice(&self, v: f64) -> usize {
        let l = self.levels.len() as f64;
        let idx = (v / self.d_min + (l - 1.0) / 2.0).round();
        idx.clamp(0.0, l - 1.0) as usize
    }

    fn push_rail_bits(&self, level_idx: usize, out: &mut Vec<u8>) {
        let label = self.label_of_level[level_idx];
        for i in (0..self.bits_per_rail).rev() {
            out.push(((label >> i) & 1) as u8);
        }
    }

    /// Maps `K·log₂M` bits to the `2K` real rails `[Re x_1..Re x_K, Im x_1..Im x_K]`.
    pub fn modulate(&self, bits: &[u8], k: usize) -> Result<Vec<f64>> {
        let bps = self.bits_per_symbol();
        if bits.len() != k * bps {
            return Err(dim_err(
                "modulate",
                format!("{} bits for K={k} at {bps} bits/symbol", bits.len()),
            ));
        }
        let br = self.bits_per_rail;
        let mut s = vec![0.0; 2 * k];
        for q in 0..k {
            let sym = &bits[q * bps..(q + 1) * bps];
            s[q] = self.rail_value(&sym[..br]);
            s[k + q] = self.rail_value(&sym[br..]);
        }
        Ok(s)
    }

    /// Inverse of [`Constellation::modulate`]; rails are sliced to the nearest level.
    pub fn demap(&self, s: &[f64]) -> Result<Vec<u8>> {
        if s.len() % 2 != 0 {
            return Err(dim_err("demap", format!("odd rail count {}", s.len())));
        }
        let k = s.len() / 2;
        let mut bits = Vec::with_capacity(k * self.bits_per_symbol());
        self.demap_into(s, &mut bits);
        Ok(bits)
    }

    pub(crate) fn demap_into(&self, s: &[f64], out: &mut Vec<u8>) {
        let k = s.len() / 2;
        for q in 0..k {
            self.push_rail_bits(self.slice(s[q]), out);
            self.push_rail_bits(self.slice(s[k + q]), out);
        }
    }

    /// Mean of `|x|²` over all `M` points.
    pub fn average_energy(&self) -> f64 {
        let rail: f64 = self.levels.iter().map(|v| v * v).sum::<f64>() / self.levels.len() as f64;
        2.0 * rail
    }
}

/// CLI spelling of a modulation: `4qam`, `16qam`, `64qam`, `256qam`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Modulation(pub usize);

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let low = s.trim().to_ascii_lowercase();
        let digits = low.strip_suffix("qam").or_else(|| low.strip_suffix("-qam")).unwrap_or(&low);
        match digits.trim_end_matches('-').parse::<usize>() {
            Ok(m) if SUPPORTED_ORDERS.contains(&m) => Ok(Modulation(m)),
            _ => Err(Error::UnsupportedModulation(s.to_string())),
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}qam", self.0)
    }
}

impl Modulation {
    pub fn constellation(self) -> Result<Constellation> {
        make_qam(self.0)
    }
}
