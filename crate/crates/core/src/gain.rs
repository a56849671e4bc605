//! Coding gain: codeword-distance determinants, minimum-determinant search,
//! diversity product and the angle searches built on them.
//!
//! Error patterns are integer multiples of `d_min`. The Gram determinant of
//! `ΔC` is homogeneous of degree `2·N_t` in the pattern, so searches run on
//! the integer multipliers and scale by `d_min^(2·N_t)` once at the end.

use crate::catalog::CodeDefinition;
use crate::error::{dim_err, Error, Result};
use crate::gclt::{self, apply_cr, apply_gclt, CrSpec, GcltSpec};
use crate::modem::Constellation;
use crate::numerics::{lu_det_in_place, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::cmp::Ordering;
use std::f64::consts::FRAC_PI_2;

/// Patterns above this count are refused by the full-scope search.
pub const MAX_FULL_PATTERNS: u128 = 10_000_000;

/// Minimum determinant above which a code counts as full diversity.
pub const FULL_DIVERSITY_THRESHOLD: f64 = 1e-9;

/// `½·atan(½)`, about 13.2825°.
pub fn optimal_theta_2d() -> f64 {
    0.5 * 0.5f64.atan()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchScope {
    WithinGroup,
    Full,
}

impl std::str::FromStr for SearchScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "within_group" | "group" => Ok(Self::WithinGroup),
            "full" => Ok(Self::Full),
            _ => Err(Error::Config(format!("unknown scope `{s}`; valid: within_group, full"))),
        }
    }
}

/// `det((ΔC)ᴴΔC)` for real-valued deltas `Δ_1..Δ_{2K}`.
pub fn distance_det(code: &CodeDefinition, deltas: &[f64]) -> Result<f64> {
    if deltas.len() != code.num_real() {
        return Err(dim_err(
            "distance_det",
            format!("{} deltas, expected 2K={}", deltas.len(), code.num_real()),
        ));
    }
    let dc = code.encode(deltas)?;
    let mut scratch = vec![C64::new(0.0, 0.0); code.nt() * code.nt()];
    Ok(gram_det(dc.data(), code.t(), code.nt(), &mut scratch))
}

/// Determinant of the Gram matrix of a row-major `t × nt` block.
fn gram_det(dc: &[C64], t: usize, nt: usize, g: &mut [C64]) -> f64 {
    for i in 0..nt {
        for j in i..nt {
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..t {
                acc += dc[r * nt + i].conj() * dc[r * nt + j];
            }
            g[i * nt + j] = acc;
            g[j * nt + i] = acc.conj();
        }
    }
    lu_det_in_place(nt, g).re.max(0.0)
}

/// Closed-form Q4_LT determinant: the Q4 Gram determinant evaluated at the
/// pair-rotated deltas `Δ̃_q = Δ_q cos θ − Δ_v sin θ`, `Δ̃_v = Δ_q sin θ + Δ_v cos θ`
/// for `(q, v)` in (1,4),(2,3),(5,8),(6,7).
pub fn q4lt_det_closed_form(deltas: &[f64], theta: f64) -> Result<f64> {
    if deltas.len() != 8 {
        return Err(dim_err("q4lt_det_closed_form", format!("{} deltas, expected 8", deltas.len())));
    }
    let (s, c) = theta.sin_cos();
    let mut d = [0.0; 8];
    for (q, v) in [(0, 3), (1, 2), (4, 7), (5, 6)] {
        d[q] = deltas[q] * c - deltas[v] * s;
        d[v] = deltas[q] * s + deltas[v] * c;
    }
    let a = (d[0] + d[3]).powi(2) + (d[1] - d[2]).powi(2) + (d[4] + d[7]).powi(2) + (d[5] - d[6]).powi(2);
    let b = (d[0] - d[3]).powi(2) + (d[1] + d[2]).powi(2) + (d[4] - d[7]).powi(2) + (d[5] + d[6]).powi(2);
    Ok((a * b).powi(2))
}

/// Normalized (by `d_min⁸`) determinants of the four error cases
/// `(0, n)`, `(m, 0)`, `(m, n)`, `(m, −n)` on one Q4_LT pair.
pub fn case_dets(m: u32, n: u32, theta: f64) -> [f64; 4] {
    let (m, n) = (m as f64, n as f64);
    let (c2, s2) = ((2.0 * theta).cos(), (2.0 * theta).sin());
    [
        (n * n * c2).powi(4),
        (m * m * c2).powi(4),
        ((m * m - n * n) * c2 - 2.0 * m * n * s2).powi(4),
        ((m * m - n * n) * c2 + 2.0 * m * n * s2).powi(4),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinDetReport {
    /// Scaled by the constellation's `d_min`.
    pub min_det: f64,
    /// Minimum over integer multipliers, before `d_min` scaling.
    pub min_det_unit: f64,
    /// Integer multipliers of `d_min`, one per real symbol.
    pub argmin: Vec<i32>,
    /// Scaled minimum for each group (within-group scope only).
    pub per_group: Vec<f64>,
    pub patterns: u64,
    pub scope: SearchScope,
}

#[derive(Clone, Debug, PartialEq)]
struct Best {
    det: f64,
    pattern: Vec<i32>,
}

impl Best {
    fn none() -> Self {
        Self { det: f64::INFINITY, pattern: Vec::new() }
    }

    /// Smaller determinant wins; ties go to the lexicographically smaller pattern.
    fn better(self, other: Self) -> Self {
        match self.det.partial_cmp(&other.det) {
            Some(Ordering::Less) => self,
            Some(Ordering::Greater) => other,
            _ => {
                if other.pattern.is_empty() || (!self.pattern.is_empty() && self.pattern <= other.pattern) {
                    self
                } else {
                    other
                }
            }
        }
    }
}

/// Exhaustive minimum over nonzero patterns on `support` with entries in
/// `−r..=r`. Returns the unscaled minimum and the full-length pattern.
fn search_support(code: &CodeDefinition, support: &[usize], r: i32) -> (Best, u64) {
    let (t, nt) = (code.t(), code.nt());
    let n = code.num_real();
    let mats: Vec<&[C64]> = support.iter().map(|&p| code.dispersion()[p].data()).collect();
    let base = (2 * r + 1) as u64;
    let total = base.pow(support.len() as u32);
    let chunk = 4096u64;
    let chunks = total.div_ceil(chunk);
    let best = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut best = Best::none();
            let mut dc = vec![C64::new(0.0, 0.0); t * nt];
            let mut g = vec![C64::new(0.0, 0.0); nt * nt];
            let mut digits = vec![0i32; support.len()];
            for idx in ci * chunk..((ci + 1) * chunk).min(total) {
                // most significant digit first, so index order is lexicographic
                let mut rem = idx;
                for d in digits.iter_mut().rev() {
                    *d = (rem % base) as i32 - r;
                    rem /= base;
                }
                if digits.iter().all(|&d| d == 0) {
                    continue;
                }
                dc.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
                for (&d, m) in digits.iter().zip(&mats) {
                    if d != 0 {
                        let w = d as f64;
                        for (a, b) in dc.iter_mut().zip(m.iter()) {
                            *a += b * w;
                        }
                    }
                }
                let det = gram_det(&dc, t, nt, &mut g);
                if det < best.det {
                    let mut pattern = vec![0i32; n];
                    for (&p, &d) in support.iter().zip(&digits) {
                        pattern[p] = d;
                    }
                    best = Best { det, pattern };
                }
            }
            best
        })
        .reduce(Best::none, Best::better);
    (best, total - 1)
}

/// Minimum codeword-distance determinant over error patterns drawn from the
/// PAM difference alphabet of `constellation`.
pub fn min_det_search(code: &CodeDefinition, constellation: &Constellation, scope: SearchScope) -> Result<MinDetReport> {
    let r = constellation.pam_levels().len() as i32 - 1;
    let scale = constellation.d_min().powi(2 * code.nt() as i32);
    match scope {
        SearchScope::WithinGroup => {
            let mut overall = Best::none();
            let mut per_group = Vec::new();
            let mut patterns = 0;
            for g in code.grouping().groups() {
                let (best, count) = search_support(code, g, r);
                patterns += count;
                per_group.push(best.det * scale);
                overall = overall.better(best);
            }
            Ok(MinDetReport {
                min_det: overall.det * scale,
                min_det_unit: overall.det,
                argmin: overall.pattern,
                per_group,
                patterns,
                scope,
            })
        }
        SearchScope::Full => {
            let count = full_pattern_count(code, constellation);
            if count > MAX_FULL_PATTERNS {
                return Err(Error::Budget { count, limit: MAX_FULL_PATTERNS });
            }
            let support: Vec<usize> = (0..code.num_real()).collect();
            let (best, patterns) = search_support(code, &support, r);
            Ok(MinDetReport {
                min_det: best.det * scale,
                min_det_unit: best.det,
                argmin: best.pattern,
                per_group: Vec::new(),
                patterns,
                scope,
            })
        }
    }
}

/// Number of nonzero patterns a full-scope search would enumerate.
pub fn full_pattern_count(code: &CodeDefinition, constellation: &Constellation) -> u128 {
    let base = 2 * constellation.pam_levels().len() as u128 - 1;
    base.checked_pow(code.num_real() as u32).map_or(u128::MAX, |v| v - 1)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiversityReport {
    pub zeta: f64,
    pub min_det: f64,
    pub full_diversity: bool,
}

/// `ζ = (1/(2√N_t))·Det_min^(1/(2T))`, zero when the code is not full diversity.
pub fn zeta_from_min_det(code: &CodeDefinition, min_det: f64) -> f64 {
    if min_det > FULL_DIVERSITY_THRESHOLD {
        min_det.powf(1.0 / (2.0 * code.t() as f64)) / (2.0 * (code.nt() as f64).sqrt())
    } else {
        0.0
    }
}

pub fn diversity_product(code: &CodeDefinition, constellation: &Constellation) -> Result<DiversityReport> {
    let report = min_det_search(code, constellation, SearchScope::WithinGroup)?;
    Ok(DiversityReport {
        zeta: zeta_from_min_det(code, report.min_det),
        min_det: report.min_det,
        full_diversity: report.min_det > FULL_DIVERSITY_THRESHOLD,
    })
}

/// Within-group minimum determinant of `base` after the same 2D rotation on
/// every pair, for each angle in `thetas` (radians).
pub fn theta_sweep(base: &CodeDefinition, constellation: &Constellation, thetas: &[f64]) -> Result<Vec<f64>> {
    thetas
        .iter()
        .map(|&th| {
            let spec = GcltSpec::uniform(base, &gclt::rotation_2d(th))?;
            let code = apply_gclt(base, &spec)?;
            Ok(min_det_search(&code, constellation, SearchScope::WithinGroup)?.min_det)
        })
        .collect()
}

/// Inclusive degree grid `start, start+step, …, stop`, built from integer
/// step counts so that endpoints are exact.
pub fn inclusive_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(Error::Config(format!("bad grid {start}:{step}:{stop}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThetaOptimum {
    pub theta_deg: f64,
    pub min_det: f64,
}

/// Grid search over θ in degrees; ties go to the smallest angle.
pub fn grid_search_theta(base: &CodeDefinition, constellation: &Constellation, grid_deg: &[f64]) -> Result<ThetaOptimum> {
    let rad: Vec<f64> = grid_deg.iter().map(|d| d.to_radians()).collect();
    let dets = theta_sweep(base, constellation, &rad)?;
    let mut best = 0;
    for (i, &d) in dets.iter().enumerate() {
        if d > dets[best] {
            best = i;
        }
    }
    Ok(ThetaOptimum {
        theta_deg: grid_deg[best],
        min_det: dets[best],
    })
}

/// ζ of T8 with one 4D mixing (in `order`) applied to all four groups.
pub fn t8_zeta(t8: &CodeDefinition, constellation: &Constellation, angles: &[f64; 6], order: &[usize; 6]) -> Result<f64> {
    let spec = GcltSpec::uniform(t8, &gclt::givens_4d_ordered(angles, order))?;
    let code = apply_gclt(t8, &spec)?;
    Ok(diversity_product(&code, constellation)?.zeta)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct T8SearchResult {
    pub angles_rad: [f64; 6],
    pub angles_deg: [f64; 6],
    pub zeta: f64,
    pub starts: usize,
    pub seed: u64,
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;
const SCAN_POINTS: usize = 24;
const SWEEPS: usize = 3;
const GOLDEN_ITERS: usize = 20;

/// Maximizes `f` along one coordinate: coarse scan over a period of π, then
/// golden-section refinement around the best scan point.
fn line_max(f: &dyn Fn(f64) -> f64, center: f64) -> (f64, f64) {
    let h = std::f64::consts::PI / SCAN_POINTS as f64;
    let mut best = (center, f(center));
    for i in 1..SCAN_POINTS {
        let x = center - FRAC_PI_2 + i as f64 * h;
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    let (mut a, mut b) = (best.0 - h, best.0 + h);
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_ITERS {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

/// Wraps an angle into `(−π/2, π/2]`; Givens factors are ±-symmetric under
/// a shift by π up to row signs, which leave ζ unchanged.
fn wrap_half_pi(x: f64) -> f64 {
    let p = std::f64::consts::PI;
    let mut y = (x + FRAC_PI_2).rem_euclid(p) - FRAC_PI_2;
    if y <= -FRAC_PI_2 {
        y += p;
    }
    y
}

/// Multi-start coordinate descent over the six T8 Givens angles, 4-QAM.
///
/// Start `i` draws its angles from a ChaCha8 stream keyed by `(seed, i)`, so
/// the result does not depend on how starts are spread over threads.
pub fn search_t8_angles(t8: &CodeDefinition, constellation: &Constellation, starts: usize, seed: u64) -> Result<T8SearchResult> {
    if starts == 0 {
        return Err(Error::Config("starts must be at least 1".into()));
    }
    let order = gclt::T8_GIVENS_ORDER;
    let results: Vec<Result<([f64; 6], f64)>> = (0..starts)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut x = [0.0; 6];
            for a in x.iter_mut() {
                *a = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
            }
            let eval = |x: &[f64; 6]| t8_zeta(t8, constellation, x, &order);
            let mut fx = eval(&x)?;
            for _ in 0..SWEEPS {
                for c in 0..6 {
                    let err = std::cell::Cell::new(None);
                    let f = |v: f64| {
                        let mut y = x;
                        y[c] = v;
                        eval(&y).unwrap_or_else(|e| {
                            err.set(Some(e));
                            f64::NEG_INFINITY
                        })
                    };
                    let (xc, fv) = line_max(&f, x[c]);
                    if let Some(e) = err.take() {
                        return Err(e);
                    }
                    if fv > fx {
                        x[c] = wrap_half_pi(xc);
                        fx = eval(&x)?;
                    }
                }
            }
            Ok((x, fx))
        })
        .collect();
    let mut best: Option<([f64; 6], f64)> = None;
    for r in results {
        let (x, fx) = r?;
        let replace = match &best {
            None => true,
            Some((bx, bf)) => fx > *bf || (fx == *bf && x.partial_cmp(bx) == Some(Ordering::Less)),
        };
        if replace {
            best = Some((x, fx));
        }
    }
    let (angles_rad, zeta) = best.expect("starts >= 1");
    Ok(T8SearchResult {
        angles_rad,
        angles_deg: angles_rad.map(f64::to_degrees),
        zeta,
        starts,
        seed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrSearchResult {
    /// One angle per symbol set, degrees.
    pub angles_deg: Vec<f64>,
    pub zeta: f64,
    pub symbol_sets: Vec<Vec<usize>>,
    pub symbols_per_group: usize,
}

/// ζ differences at or below this count as ties in [`cr_angle_search`].
pub const CR_TIE_TOLERANCE: f64 = 1e-12;

/// Grid search over rail-rotation angles. Each entry of `symbol_sets`
/// (1-based symbols) shares one angle; the grid is the Cartesian product of
/// `grid_deg` over the sets. Ties go to the lexicographically smallest angles.
pub fn cr_angle_search(
    base: &CodeDefinition,
    constellation: &Constellation,
    symbol_sets: &[Vec<usize>],
    grid_deg: &[f64],
) -> Result<CrSearchResult> {
    if symbol_sets.is_empty() || grid_deg.is_empty() {
        return Err(Error::Config("need at least one symbol set and one angle".into()));
    }
    if let Some(bad) = grid_deg.iter().find(|d| !(0.0..90.0).contains(*d)) {
        return Err(Error::InvalidAngle(bad.to_radians()));
    }
    let n = grid_deg.len();
    let total = n.checked_pow(symbol_sets.len() as u32).ok_or(Error::Budget {
        count: u128::MAX,
        limit: MAX_FULL_PATTERNS,
    })?;
    let mut best: Option<(Vec<f64>, f64, usize)> = None;
    for idx in 0..total {
        let mut rem = idx;
        let mut angles = vec![0.0; symbol_sets.len()];
        for a in angles.iter_mut().rev() {
            *a = grid_deg[rem % n];
            rem /= n;
        }
        let code = apply_cr(base, &cr_spec_for(symbol_sets, &angles)?)?;
        let z = diversity_product(&code, constellation)?.zeta;
        if best.as_ref().is_none_or(|(_, bz, _)| z > *bz + CR_TIE_TOLERANCE) {
            best = Some((angles, z, code.grouping().max_group_size()));
        }
    }
    let (angles_deg, zeta, size) = best.expect("non-empty grid");
    Ok(CrSearchResult {
        angles_deg,
        zeta,
        symbol_sets: symbol_sets.to_vec(),
        symbols_per_group: size,
    })
}

/// Rail rotation with one angle (degrees) per 1-based symbol set.
pub fn cr_spec_for(symbol_sets: &[Vec<usize>], angles_deg: &[f64]) -> Result<CrSpec> {
    let mut rot = Vec::new();
    for (set, &a) in symbol_sets.iter().zip(angles_deg) {
        for &q in set {
            if q == 0 {
                return Err(Error::IndexOutOfRange { index: 0, max: usize::MAX });
            }
            rot.push((q - 1, a.to_radians()));
        }
    }
    CrSpec::new(rot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{build, CodeName};
    use crate::modem::make_qam;
    use proptest::prelude::*;

    fn dmin4() -> f64 {
        2f64.sqrt()
    }

    #[test]
    fn distance_det_examples() {
        let q4 = build(CodeName::Q4).unwrap();
        assert_eq!(distance_det(&q4, &[0.0; 8]).unwrap(), 0.0);
        let mut e = [0.0; 8];
        e[0] = dmin4();
        assert!((distance_det(&q4, &e).unwrap() - dmin4().powi(8)).abs() < 1e-12);
        let lt = build(CodeName::Q4Lt).unwrap();
        e[3] = dmin4();
        assert!((distance_det(&lt, &e).unwrap() - 0.64 * dmin4().powi(8)).abs() < 1e-10);
        assert!(distance_det(&lt, &[0.0; 3]).is_err());
    }

    #[test]
    fn closed_form_examples() {
        let mut e = [0.0; 8];
        e[0] = dmin4();
        assert!((q4lt_det_closed_form(&e, 0.0).unwrap() - dmin4().powi(8)).abs() < 1e-12);
        e[3] = dmin4();
        let v = q4lt_det_closed_form(&e, optimal_theta_2d()).unwrap();
        assert!((v - 0.64 * dmin4().powi(8)).abs() < 1e-12);
    }

    #[test]
    fn case_dets_examples() {
        let th = optimal_theta_2d();
        for v in case_dets(1, 1, th) {
            assert!((v - 0.64).abs() < 1e-12);
        }
        assert!((case_dets(2, 1, th)[2] - 0.64).abs() < 1e-12);
        let z = case_dets(3, 2, std::f64::consts::FRAC_PI_4);
        assert!(z[0] < 1e-30 && z[1] < 1e-30);
    }

    #[test]
    fn case_dets_symmetry_and_floor() {
        for th in [0.0, 0.1, 0.3, 0.7] {
            let c = case_dets(1, 1, th);
            assert!((c[0] - c[1]).abs() < 1e-12 && (c[2] - c[3]).abs() < 1e-12);
        }
        let th = optimal_theta_2d();
        let mut lowest = f64::INFINITY;
        for m in 1..=15 {
            for n in 1..=15 {
                lowest = lowest.min(case_dets(m, n, th).into_iter().fold(f64::INFINITY, f64::min));
            }
        }
        assert!((lowest - 0.64).abs() < 1e-9, "{lowest}");
    }

    #[test]
    fn optimal_theta_value() {
        assert!((optimal_theta_2d().to_degrees() - 13.2825).abs() < 1e-4);
    }

    #[test]
    fn min_det_examples() {
        let c4 = make_qam(4).unwrap();
        let lt = build(CodeName::Q4Lt).unwrap();
        let r = min_det_search(&lt, &c4, SearchScope::WithinGroup).unwrap();
        assert!((r.min_det - 0.64 * dmin4().powi(8)).abs() < 1e-9);
        assert_eq!(r.per_group.len(), 4);
        assert_eq!(r.argmin.len(), 8);
        let q4 = build(CodeName::Q4).unwrap();
        assert_eq!(min_det_search(&q4, &c4, SearchScope::WithinGroup).unwrap().min_det, 0.0);
        let q8lt = build(CodeName::Q8Lt).unwrap();
        let want = 0.4096 * ((4.0f64 / 3.0).sqrt() * dmin4()).powi(16);
        let got = min_det_search(&q8lt, &c4, SearchScope::WithinGroup).unwrap().min_det;
        assert!((got - want).abs() < 1e-9 * want, "{got} vs {want}");
    }

    #[test]
    fn full_scope_guard() {
        let t8 = build(CodeName::T8Lt).unwrap();
        let c16 = make_qam(16).unwrap();
        assert!(matches!(
            min_det_search(&t8, &c16, SearchScope::Full),
            Err(Error::Budget { .. })
        ));
    }

    #[test]
    fn argmin_tie_break_is_lexicographic() {
        let c4 = make_qam(4).unwrap();
        let lt = build(CodeName::Q4Lt).unwrap();
        let r = min_det_search(&lt, &c4, SearchScope::WithinGroup).unwrap();
        // all four cases tie at θ_opt; the smallest pattern over group {1,4} is (−1, −1)
        assert_eq!(r.argmin, vec![-1, 0, 0, -1, 0, 0, 0, 0]);
    }

    #[test]
    fn zeta_ratio_lt_over_cr() {
        let c4 = make_qam(4).unwrap();
        let lt = diversity_product(&build(CodeName::Q4Lt).unwrap(), &c4).unwrap().zeta;
        let cr = diversity_product(&build(CodeName::Q4Cr).unwrap(), &c4).unwrap().zeta;
        assert!((lt / cr - 0.64f64.powf(0.125)).abs() < 1e-4);
    }

    #[test]
    fn inclusive_grid_is_inclusive() {
        let g = inclusive_grid(0.0, 45.0, 0.01).unwrap();
        assert_eq!(g.len(), 4501);
        assert!((g[4500] - 45.0).abs() < 1e-9);
        assert!(inclusive_grid(1.0, 0.0, 0.1).is_err());
        assert!(inclusive_grid(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn wrap_keeps_range() {
        let pi = std::f64::consts::PI;
        for x in [-5.0, -1.6, 0.0, 1.5, 1.6, 7.0] {
            let y = wrap_half_pi(x);
            assert!(y > -FRAC_PI_2 && y <= FRAC_PI_2);
            let turns = (x - y) / pi;
            assert!((turns - turns.round()).abs() < 1e-12);
        }
    }

    #[test]
    fn t8_search_single_start_is_reproducible() {
        let t8 = build(CodeName::T8).unwrap();
        let c4 = make_qam(4).unwrap();
        let a = search_t8_angles(&t8, &c4, 1, 9).unwrap();
        let b = search_t8_angles(&t8, &c4, 1, 9).unwrap();
        assert_eq!(a.angles_rad.map(f64::to_bits), b.angles_rad.map(f64::to_bits));
        assert!(a.zeta > 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]
        #[test]
        fn closed_form_matches_numeric(p in proptest::collection::vec(-3i32..=3, 8), th in 0.0f64..0.8) {
            let q4 = build(CodeName::Q4).unwrap();
            let code = apply_gclt(&q4, &GcltSpec::uniform(&q4, &gclt::rotation_2d(th)).unwrap()).unwrap();
            let e: Vec<f64> = p.iter().map(|&v| v as f64 * 0.6).collect();
            let num = distance_det(&code, &e).unwrap();
            let cf = q4lt_det_closed_form(&e, th).unwrap();
            prop_assert!((num - cf).abs() <= 1e-9 * cf.abs().max(1e-12), "{} vs {}", num, cf);
        }
    }
}
