//! Maximum-likelihood detection.
//!
//! With `HᵀH` block-diagonal over the grouping, the residual
//! `‖r̃ − g·H·s‖²` (where `g = √(ρ/N_t)`) splits into independent per-group
//! terms `g²·s_gᵀ(HᵀH)_gg·s_g − 2g·(Hᵀr̃)_gᵀ·s_g` plus a constant, so each
//! group is minimized on its own.

use crate::catalog::CodeDefinition;
use crate::error::{dim_err, Error, Result};
use crate::modem::Constellation;
use crate::numerics::{RealMatrix, C64};
use crate::qo::build_equivalent_channel;
use crate::sim::ChannelRealization;
use serde::Serialize;

/// Largest codebook the exhaustive oracle will enumerate.
pub const MAX_EXHAUSTIVE_CODEWORDS: u128 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DetectionResult {
    /// Decided real symbols `s_1..s_{2K}`, each a PAM level.
    pub symbols: Vec<f64>,
    /// Minimized metric of each group (per-group constant omitted).
    pub group_metrics: Vec<f64>,
    /// Candidates examined in each group.
    pub candidates_per_group: Vec<usize>,
}

/// Precomputed candidate tables for one (code, constellation) pair.
#[derive(Clone, Debug)]
pub struct GroupedDecoder {
    groups: Vec<Vec<usize>>,
    /// `tables[size]` holds every candidate of that length, flattened and in
    /// lexicographic order.
    tables: Vec<Vec<f64>>,
    num_real: usize,
    rows: usize,
}

fn candidate_table(levels: &[f64], len: usize) -> Vec<f64> {
    let l = levels.len();
    let count = l.pow(len as u32);
    let mut out = Vec::with_capacity(count * len);
    for idx in 0..count {
        let mut rem = idx;
        let start = out.len();
        out.resize(start + len, 0.0);
        for slot in out[start..].iter_mut().rev() {
            *slot = levels[rem % l];
            rem /= l;
        }
    }
    out
}

impl GroupedDecoder {
    pub fn new(code: &CodeDefinition, constellation: &Constellation, nr: usize) -> Self {
        let groups = code.grouping().groups().to_vec();
        let max = code.grouping().max_group_size();
        let tables = (0..=max)
            .map(|n| {
                if groups.iter().any(|g| g.len() == n) {
                    candidate_table(constellation.pam_levels(), n)
                } else {
                    Vec::new()
                }
            })
            .collect();
        Self {
            groups,
            tables,
            num_real: code.num_real(),
            rows: 2 * code.t() * nr,
        }
    }

    pub fn candidates_per_group(&self) -> Vec<usize> {
        self.groups
            .iter()
            .map(|g| self.tables[g.len()].len() / g.len())
            .collect()
    }

    /// Detects into `out` given the equivalent channel `h` and gain `g`.
    /// Returns the per-group minimized metrics.
    pub fn detect_into(&self, h: &RealMatrix, received: &[f64], gain: f64, out: &mut [f64]) -> Result<Vec<f64>> {
        if received.len() != self.rows || h.rows() != self.rows || h.cols() != self.num_real {
            return Err(dim_err(
                "grouped_ml_detect",
                format!(
                    "received {} / H {}x{}, expected {} / {}x{}",
                    received.len(),
                    h.rows(),
                    h.cols(),
                    self.rows,
                    self.rows,
                    self.num_real
                ),
            ));
        }
        let z = h.tr_mul_vec(received)?;
        let mut metrics = Vec::with_capacity(self.groups.len());
        let mut block = Vec::new();
        let mut col_a = vec![0.0; self.rows];
        for g in &self.groups {
            let n = g.len();
            block.clear();
            block.resize(n * n, 0.0);
            for a in 0..n {
                for (r, v) in col_a.iter_mut().enumerate() {
                    *v = h.get(r, g[a]);
                }
                for b in a..n {
                    let mut acc = 0.0;
                    for (r, &va) in col_a.iter().enumerate() {
                        acc += va * h.get(r, g[b]);
                    }
                    block[a * n + b] = acc * gain * gain;
                    block[b * n + a] = block[a * n + b];
                }
            }
            let zg: Vec<f64> = g.iter().map(|&p| 2.0 * gain * z[p]).collect();
            let table = &self.tables[n];
            let mut best = f64::INFINITY;
            let mut best_idx = 0;
            for (ci, cand) in table.chunks_exact(n).enumerate() {
                let mut m = 0.0;
                for a in 0..n {
                    let mut row = 0.0;
                    for b in 0..n {
                        row += block[a * n + b] * cand[b];
                    }
                    m += cand[a] * (row - zg[a]);
                }
                if m < best {
                    best = m;
                    best_idx = ci;
                }
            }
            for (k, &p) in g.iter().enumerate() {
                out[p] = table[best_idx * n + k];
            }
            metrics.push(best);
        }
        Ok(metrics)
    }
}

/// `√(ρ/N_t)`.
pub fn signal_gain(rho: f64, nt: usize) -> f64 {
    (rho / nt as f64).sqrt()
}

/// Group-wise ML detection. Ties go to the lexicographically smallest
/// candidate of each group.
pub fn grouped_ml_detect(
    code: &CodeDefinition,
    constellation: &Constellation,
    channel: &ChannelRealization,
    received: &[f64],
    rho: f64,
) -> Result<DetectionResult> {
    let nr = channel.nr();
    let eq = build_equivalent_channel(code, channel)?;
    let dec = GroupedDecoder::new(code, constellation, nr);
    let mut symbols = vec![0.0; code.num_real()];
    let group_metrics = dec.detect_into(&eq.h, received, signal_gain(rho, code.nt()), &mut symbols)?;
    Ok(DetectionResult {
        symbols,
        group_metrics,
        candidates_per_group: dec.candidates_per_group(),
    })
}

/// Brute-force ML over all `M^K` codewords by direct residual norm.
pub fn exhaustive_ml_detect(
    code: &CodeDefinition,
    constellation: &Constellation,
    channel: &ChannelRealization,
    received: &[f64],
    rho: f64,
) -> Result<DetectionResult> {
    let count = (constellation.order() as u128)
        .checked_pow(code.k() as u32)
        .unwrap_or(u128::MAX);
    if count > MAX_EXHAUSTIVE_CODEWORDS {
        return Err(Error::Budget { count, limit: MAX_EXHAUSTIVE_CODEWORDS });
    }
    let eq = build_equivalent_channel(code, channel)?;
    if received.len() != eq.h.rows() {
        return Err(dim_err(
            "exhaustive_ml_detect",
            format!("received {} rails, expected {}", received.len(), eq.h.rows()),
        ));
    }
    let gain = signal_gain(rho, code.nt());
    let levels = constellation.pam_levels();
    let l = levels.len();
    let n = code.num_real();
    let mut s = vec![0.0; n];
    let mut best = (f64::INFINITY, Vec::new());
    for idx in 0..count as usize {
        let mut rem = idx;
        for v in s.iter_mut().rev() {
            *v = levels[rem % l];
            rem /= l;
        }
        let hs = eq.h.mul_vec(&s)?;
        let res: f64 = received
            .iter()
            .zip(&hs)
            .map(|(r, y)| (r - gain * y).powi(2))
            .sum();
        if res < best.0 {
            best = (res, s.clone());
        }
    }
    Ok(DetectionResult {
        symbols: best.1,
        group_metrics: vec![best.0],
        candidates_per_group: vec![count as usize],
    })
}

/// Splits stacked real rails into per-antenna complex vectors of length `t`.
pub fn received_complex(received: &[f64], t: usize) -> Vec<Vec<C64>> {
    received
        .chunks_exact(2 * t)
        .map(|blk| (0..t).map(|i| C64::new(blk[i], blk[t + i])).collect())
        .collect()
}

/// Matched-filter terms of the four-antenna quasi-orthogonal code for one
/// receive antenna, as `[α, β, χ, δ, γ]` (with `φ = −γ`).
///
/// Rows 2 and 3 of the code carry conjugated symbols, so their
/// contributions pair `h_t*` with `r_t` rather than `h_t` with `r_t*`.
pub fn q4_terms(h: &[C64], r: &[C64]) -> [C64; 5] {
    let (h1, h2, h3, h4) = (h[0], h[1], h[2], h[3]);
    let (r1, r2, r3, r4) = (r[0].conj(), r[1], r[2], r[3].conj());
    let alpha = -(h1 * r1 + h2.conj() * r2 + h3.conj() * r3 + h4 * r4);
    let beta = -h4 * r1 + h3.conj() * r2 + h2.conj() * r3 - h1 * r4;
    let chi = -h2 * r1 + h1.conj() * r2 - h4.conj() * r3 + h3 * r4;
    let delta = -h3 * r1 - h4.conj() * r2 + h1.conj() * r3 + h2 * r4;
    let gamma = 2.0 * (h1 * h4.conj() - h2 * h3.conj()).re;
    [alpha, beta, chi, delta, C64::new(gamma, 0.0)]
}

/// Pair metrics of Q4_LT. `group` is 1..=4 for the pairs
/// (s1,s4), (s2,s3), (s5,s8), (s6,s7); `pair` holds the two real symbols in
/// that order. The value differs from the grouped metric only by a
/// candidate-independent constant.
pub fn metric_q4lt(
    group: usize,
    pair: (f64, f64),
    theta: f64,
    channel: &ChannelRealization,
    received: &[f64],
    gain: f64,
) -> Result<f64> {
    if !(1..=4).contains(&group) {
        return Err(Error::IndexOutOfRange { index: group, max: 4 });
    }
    check_q4_shapes(channel, received)?;
    let (b, a) = theta.sin_cos();
    let (sq, sv) = pair;
    let (uq, uv) = (a * sq - b * sv, b * sq + a * sv);
    let rx = received_complex(received, 4);
    let mut f = 0.0;
    for (i, r) in rx.iter().enumerate() {
        let h: Vec<C64> = (0..4).map(|j| channel.gains().get(j, i)).collect();
        let energy: f64 = h.iter().map(|z| z.norm_sqr()).sum();
        let [alpha, beta, chi, delta, gamma] = q4_terms(&h, r);
        let (t1, t2, cross) = match group {
            1 => (alpha, beta, gamma.re),
            2 => (chi, delta, -gamma.re),
            3 => (C64::i() * alpha, C64::i() * beta, gamma.re),
            _ => (C64::i() * chi, C64::i() * delta, -gamma.re),
        };
        f += gain * gain * energy * (uq * uq + uv * uv)
            + 2.0 * (gain * (t1 * uq + t2 * uv)).re
            + 2.0 * gain * gain * uq * uv * cross;
    }
    Ok(f)
}

/// Pair metrics of Q4_CR over complex symbols: `pair = 14` gives `f14(x1, x4)`
/// and `pair = 23` gives `f23(x2, x3)`, with `x3`, `x4` unrotated.
pub fn metric_q4cr(
    pair: usize,
    xa: C64,
    xb: C64,
    channel: &ChannelRealization,
    received: &[f64],
    gain: f64,
) -> Result<f64> {
    if pair != 14 && pair != 23 {
        return Err(Error::Config(format!("pair must be 14 or 23, got {pair}")));
    }
    check_q4_shapes(channel, received)?;
    let rot = C64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
    let rx = received_complex(received, 4);
    let mut f = 0.0;
    for (i, r) in rx.iter().enumerate() {
        let h: Vec<C64> = (0..4).map(|j| channel.gains().get(j, i)).collect();
        let energy: f64 = h.iter().map(|z| z.norm_sqr()).sum();
        let [alpha, beta, chi, delta, gamma] = q4_terms(&h, r);
        let (t1, t2, cross) = if pair == 14 { (alpha, beta, gamma.re) } else { (chi, delta, -gamma.re) };
        let lin = xa * t1 + xb * rot * t2;
        let quad = xa * xb.conj() * rot.conj() * cross;
        f += gain * gain * energy * (xa.norm_sqr() + xb.norm_sqr())
            + 2.0 * (gain * lin).re
            + 2.0 * gain * gain * quad.re;
    }
    Ok(f)
}

fn check_q4_shapes(channel: &ChannelRealization, received: &[f64]) -> Result<()> {
    if channel.nt() != 4 || received.len() != 8 * channel.nr() {
        return Err(dim_err(
            "q4 metric",
            format!(
                "needs a 4-antenna channel and 8 rails per receive antenna, got Nt={} and {} rails",
                channel.nt(),
                received.len()
            ),
        ));
    }
    Ok(())
}
