//! Rayleigh flat-fading Monte Carlo for bit and frame error rates.
//!
//! Seeding contract: frames are simulated in fixed batches. Batch `b` of SNR
//! point `i` draws from a ChaCha8 generator seeded with the base seed and
//! set to stream `(i << 32) | b`. A point accumulates whole batches in index
//! order and stops after the first batch at which the bit-error target or
//! the frame budget is reached. Batches are independent, so the counts do
//! not depend on how many workers compute them.

use crate::catalog::CodeDefinition;
use crate::decoder::{signal_gain, GroupedDecoder};
use crate::error::{dim_err, Error, Result};
use crate::modem::Constellation;
use crate::numerics::{ComplexMatrix, RealMatrix, C64};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;
use std::f64::consts::FRAC_1_SQRT_2;

/// Channel gains `h_{j,i}`, `N_t × N_r`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    h: ComplexMatrix,
}

impl ChannelRealization {
    pub fn new(h: ComplexMatrix) -> Result<Self> {
        if h.rows() == 0 || h.cols() == 0 {
            return Err(dim_err("ChannelRealization", "empty channel"));
        }
        Ok(Self { h })
    }

    pub fn gains(&self) -> &ComplexMatrix {
        &self.h
    }

    pub fn nt(&self) -> usize {
        self.h.rows()
    }

    pub fn nr(&self) -> usize {
        self.h.cols()
    }
}

fn complex_gaussian<R: RngCore + ?Sized>(rng: &mut R) -> C64 {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    C64::new(a * FRAC_1_SQRT_2, b * FRAC_1_SQRT_2)
}

/// i.i.d. `CN(0, 1)` gains.
pub fn draw_channel<R: RngCore + ?Sized>(rng: &mut R, nt: usize, nr: usize) -> ChannelRealization {
    let h = ComplexMatrix::from_fn(nt, nr, |_, _| complex_gaussian(rng));
    ChannelRealization { h }
}

/// `r̃ = √(ρ/N_t)·H·s̃ + η̃` with unit-variance complex noise per sample.
/// Pass `None` for the noiseless signal.
pub fn transmit(
    code: &CodeDefinition,
    s: &[f64],
    channel: &ChannelRealization,
    rho: f64,
    rng: Option<&mut dyn RngCore>,
) -> Result<Vec<f64>> {
    if channel.nt() != code.nt() {
        return Err(dim_err(
            "transmit",
            format!("channel Nt={} but code Nt={}", channel.nt(), code.nt()),
        ));
    }
    let c = code.encode(s)?;
    let y = c.matmul(channel.gains())?;
    let g = signal_gain(rho, code.nt());
    let (t, nr) = (code.t(), channel.nr());
    let mut out = vec![0.0; 2 * t * nr];
    for i in 0..nr {
        for row in 0..t {
            let z = y.get(row, i) * g;
            out[2 * t * i + row] = z.re;
            out[2 * t * i + t + row] = z.im;
        }
    }
    if let Some(rng) = rng {
        for v in out.iter_mut() {
            let n: f64 = rng.sample(StandardNormal);
            *v += n * FRAC_1_SQRT_2;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimConfig {
    pub code: String,
    pub modulation: usize,
    pub nr: usize,
    pub snr_db: Vec<f64>,
    pub min_bit_errors: u64,
    pub max_frames: u64,
    pub batch_frames: u64,
    pub seed: u64,
    pub workers: usize,
    /// Skip the remaining grid once a point's BER falls below this.
    pub stop_below_ber: Option<f64>,
}

impl SimConfig {
    pub fn new(code: &str, modulation: usize, nr: usize, snr_db: Vec<f64>, seed: u64) -> Self {
        Self {
            code: code.to_string(),
            modulation,
            nr,
            snr_db,
            min_bit_errors: 200,
            max_frames: 2_000_000,
            batch_frames: 1000,
            seed,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            stop_below_ber: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_empty() {
            return Err(Error::Config("empty SNR grid".into()));
        }
        if self.snr_db.windows(2).any(|w| !(w[1] > w[0])) || self.snr_db.iter().any(|v| v.is_nan()) {
            return Err(Error::Config("SNR grid must be strictly increasing".into()));
        }
        if self.min_bit_errors == 0 || self.max_frames == 0 || self.batch_frames == 0 {
            return Err(Error::Config("budgets must be positive".into()));
        }
        if self.nr == 0 || self.workers == 0 {
            return Err(Error::Config("nr and workers must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BerPoint {
    pub snr_db: f64,
    pub bits: u64,
    pub bit_errors: u64,
    pub frames: u64,
    pub frame_errors: u64,
    pub ber: f64,
    pub fer: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BerCurve {
    pub config: SimConfig,
    pub points: Vec<BerPoint>,
}

#[derive(Clone, Copy, Default)]
struct Counts {
    frames: u64,
    bits: u64,
    bit_errors: u64,
    frame_errors: u64,
}

/// Reusable per-batch buffers.
struct FrameKernel<'a> {
    code: &'a CodeDefinition,
    constellation: &'a Constellation,
    decoder: GroupedDecoder,
    nr: usize,
    gains: Vec<C64>,
    h: RealMatrix,
    bits: Vec<u8>,
    decided_bits: Vec<u8>,
    received: Vec<f64>,
    decided: Vec<f64>,
}

impl<'a> FrameKernel<'a> {
    fn new(code: &'a CodeDefinition, constellation: &'a Constellation, nr: usize) -> Self {
        let rows = 2 * code.t() * nr;
        Self {
            code,
            constellation,
            decoder: GroupedDecoder::new(code, constellation, nr),
            nr,
            gains: vec![C64::new(0.0, 0.0); code.nt() * nr],
            h: RealMatrix::zeros(rows, code.num_real()),
            bits: vec![0; code.k() * constellation.bits_per_symbol()],
            decided_bits: Vec::with_capacity(code.k() * constellation.bits_per_symbol()),
            received: vec![0.0; rows],
            decided: vec![0.0; code.num_real()],
        }
    }

    fn fill_h(&mut self) {
        let (t, nt) = (self.code.t(), self.code.nt());
        for (p, a) in self.code.dispersion().iter().enumerate() {
            let ad = a.data();
            for i in 0..self.nr {
                for row in 0..t {
                    let mut acc = C64::new(0.0, 0.0);
                    for j in 0..nt {
                        acc += ad[row * nt + j] * self.gains[j * self.nr + i];
                    }
                    self.h.set(2 * t * i + row, p, acc.re);
                    self.h.set(2 * t * i + t + row, p, acc.im);
                }
            }
        }
    }

    fn run_frames(&mut self, rng: &mut ChaCha8Rng, frames: u64, gain: f64) -> Result<Counts> {
        let mut c = Counts::default();
        for _ in 0..frames {
            for g in self.gains.iter_mut() {
                *g = complex_gaussian(rng);
            }
            for b in self.bits.iter_mut() {
                *b = rng.random::<bool>() as u8;
            }
            let s = self.constellation.modulate(&self.bits, self.code.k())?;
            self.fill_h();
            let hs = self.h.mul_vec(&s)?;
            for (r, y) in self.received.iter_mut().zip(&hs) {
                let n: f64 = rng.sample(StandardNormal);
                *r = gain * y + n * FRAC_1_SQRT_2;
            }
            self.decoder.detect_into(&self.h, &self.received, gain, &mut self.decided)?;
            self.decided_bits.clear();
            self.constellation.demap_into(&self.decided, &mut self.decided_bits);
            let errs = self
                .bits
                .iter()
                .zip(&self.decided_bits)
                .filter(|(a, b)| a != b)
                .count() as u64;
            c.frames += 1;
            c.bits += self.bits.len() as u64;
            c.bit_errors += errs;
            c.frame_errors += (errs > 0) as u64;
        }
        Ok(c)
    }
}

/// Generator for batch `batch` of SNR point `point`.
pub fn batch_rng(seed: u64, point: usize, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((point as u64) << 32) | batch);
    rng
}

/// Runs the Monte Carlo over the SNR grid.
pub fn run_ber(code: &CodeDefinition, constellation: &Constellation, config: &SimConfig) -> Result<BerCurve> {
    config.validate()?;
    if constellation.order() != config.modulation {
        return Err(Error::Config(format!(
            "constellation order {} does not match config modulation {}",
            constellation.order(),
            config.modulation
        )));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let mut points = Vec::with_capacity(config.snr_db.len());
    for (pi, &snr_db) in config.snr_db.iter().enumerate() {
        let rho = 10f64.powf(snr_db / 10.0);
        let gain = signal_gain(rho, code.nt());
        let mut total = Counts::default();
        let mut next_batch = 0u64;
        let batches = config.max_frames.div_ceil(config.batch_frames);
        'point: while next_batch < batches {
            let wave = (config.workers as u64).min(batches - next_batch);
            let results: Vec<Result<Counts>> = pool.install(|| {
                (next_batch..next_batch + wave)
                    .into_par_iter()
                    .map(|b| {
                        let frames = config.batch_frames.min(config.max_frames - b * config.batch_frames);
                        let mut rng = batch_rng(config.seed, pi, b);
                        FrameKernel::new(code, constellation, config.nr).run_frames(&mut rng, frames, gain)
                    })
                    .collect()
            });
            next_batch += wave;
            for r in results {
                let c = r?;
                total.frames += c.frames;
                total.bits += c.bits;
                total.bit_errors += c.bit_errors;
                total.frame_errors += c.frame_errors;
                if total.bit_errors >= config.min_bit_errors {
                    break 'point;
                }
            }
        }
        let ber = total.bit_errors as f64 / total.bits as f64;
        points.push(BerPoint {
            snr_db,
            bits: total.bits,
            bit_errors: total.bit_errors,
            frames: total.frames,
            frame_errors: total.frame_errors,
            ber,
            fer: total.frame_errors as f64 / total.frames as f64,
        });
        if config.stop_below_ber.is_some_and(|t| ber < t) {
            break;
        }
    }
    Ok(BerCurve {
        config: config.clone(),
        points,
    })
}

pub const CSV_HEADER: &str = "code,mod,nr,snr_db,bits,bit_errors,ber,frames,frame_errors,fer,seed";

impl BerCurve {
    /// CSV with a `#` config line; the worker count is left out so output is
    /// identical for any number of workers.
    pub fn to_csv(&self) -> String {
        curves_to_csv(std::slice::from_ref(self))
    }

    fn comment_line(&self, out: &mut String) {
        let c = &self.config;
        let _ = writeln!(
            out,
            "# code={} mod={}qam nr={} min_bit_errors={} max_frames={} batch_frames={} seed={} mapping=gray-per-rail noise=unit-complex-variance",
            c.code, c.modulation, c.nr, c.min_bit_errors, c.max_frames, c.batch_frames, c.seed
        );
    }

    fn rows(&self, out: &mut String) {
        let c = &self.config;
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{}qam,{},{},{},{},{:.6e},{},{},{:.6e},{}",
                c.code, c.modulation, c.nr, p.snr_db, p.bits, p.bit_errors, p.ber, p.frames, p.frame_errors, p.fer, c.seed
            );
        }
    }
}

/// One CSV for several curves: all config lines, one header, then the rows.
pub fn curves_to_csv(curves: &[BerCurve]) -> String {
    let mut out = String::new();
    for c in curves {
        c.comment_line(&mut out);
    }
    out.push_str(CSV_HEADER);
    out.push('\n');
    for c in curves {
        c.rows(&mut out);
    }
    out
}

/// Points with at least this many bit errors count in slope and gap estimates.
pub const MIN_ERRORS_FOR_ESTIMATE: u64 = 10;

fn usable(points: &[BerPoint]) -> Vec<(f64, f64)> {
    points
        .iter()
        .filter(|p| p.bit_errors >= MIN_ERRORS_FOR_ESTIMATE)
        .map(|p| (p.snr_db, p.ber.log10()))
        .collect()
}

/// SNR (dB) where the curve crosses `target`, interpolating `log₁₀ BER`
/// linearly in dB between the first bracketing pair of usable points.
pub fn snr_at_ber(points: &[BerPoint], target: f64) -> Option<f64> {
    let lt = target.log10();
    usable(points).windows(2).find_map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        (y0 >= lt && y1 <= lt && y0 != y1).then(|| x0 + (lt - y0) * (x1 - x0) / (y1 - y0))
    })
}

/// Least-squares slope of `log₁₀ BER` against SNR (dB) over the usable points
/// within one decade of the lowest usable BER. Negative for a falling curve.
pub fn final_decade_slope(points: &[BerPoint]) -> Option<f64> {
    let u = usable(points);
    let floor = u.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let sel: Vec<(f64, f64)> = u.into_iter().filter(|p| p.1 <= floor + 1.0).collect();
    if sel.len() < 2 {
        return None;
    }
    let n = sel.len() as f64;
    let mx = sel.iter().map(|p| p.0).sum::<f64>() / n;
    let my = sel.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = sel.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = sel.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Minimal log-scale BER plot, one polyline per curve.
pub fn svg_plot(curves: &[(&str, &[BerPoint])]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const M: f64 = 60.0;
    const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
    let pts: Vec<&BerPoint> = curves.iter().flat_map(|c| c.1.iter()).filter(|p| p.ber > 0.0).collect();
    let (xmin, xmax) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.snr_db), a.1.max(p.snr_db)));
    let ymin = pts.iter().map(|p| p.ber.log10().floor()).fold(0.0, f64::min).min(-1.0);
    let (xmin, xmax) = if xmin.is_finite() && xmax > xmin { (xmin, xmax) } else { (0.0, 1.0) };
    let sx = |x: f64| M + (x - xmin) / (xmax - xmin) * (W - 2.0 * M);
    let sy = |y: f64| M + (0.0 - y) / (0.0 - ymin) * (H - 2.0 * M);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let mut d = ymin as i32;
    while d <= 0 {
        let y = sy(d as f64);
        let _ = writeln!(s, r##"<line x1="{M}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">1e{d}</text>"##, W - M, M - 6.0, y + 4.0);
        d += 1;
    }
    let _ = writeln!(s, r#"<rect x="{M}" y="{M}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#, W - 2.0 * M, H - 2.0 * M);
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">SNR (dB)</text>"#, W / 2.0, H - 20.0);
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{xmin}</text><text x="{:.1}" y="{:.1}" text-anchor="middle">{xmax}</text>"#, sx(xmin), H - M + 16.0, sx(xmax), H - M + 16.0);
    for (ci, (name, points)) in curves.iter().enumerate() {
        let color = COLORS[ci % COLORS.len()];
        let coords: Vec<String> = points
            .iter()
            .filter(|p| p.ber > 0.0)
            .map(|p| format!("{:.1},{:.1}", sx(p.snr_db), sy(p.ber.log10())))
            .collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, coords.join(" "));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" fill="{color}">{name}</text>"#, W - M - 80.0, M + 16.0 * (ci + 1) as f64);
    }
    s.push_str("</svg>\n");
    s
}
