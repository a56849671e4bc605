//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Run with `cargo test --test acceptance`.

use qostbc::catalog::{build, CodeName};
use qostbc::decoder::{exhaustive_ml_detect, grouped_ml_detect, metric_q4cr, metric_q4lt, signal_gain};
use qostbc::gain::{self, SearchScope};
use qostbc::gclt::{self, apply_gclt, GcltSpec};
use qostbc::modem::make_qam;
use qostbc::numerics::C64;
use qostbc::qo::gram_block_report;
use qostbc::sim::{self, draw_channel, transmit, BerCurve, SimConfig};
use qostbc::verify::SYMBOLS_PER_GROUP;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::process::Command;
use std::time::{Duration, Instant};

const ZETA_TOL: f64 = 1e-3;
const THETA_TOL_DEG: f64 = 0.05;
const THETA_DET_REL_TOL: f64 = 1e-6;
const CLOSED_FORM_REL_TOL: f64 = 1e-9;
const BLOCK_DIAG_RATIO: f64 = 1e-10;
const POWER_TOL: f64 = 1e-12;
const GAP_LIMIT_DB: f64 = 0.7;
const SLOPE_AGREEMENT: f64 = 0.25;
const UNROTATED_SLOPE_RATIO: f64 = 0.8;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let dt = start.elapsed();
    o.detail = format!("{} [{:.1}s]", o.detail, dt.as_secs_f64());
    if let Some(l) = limit {
        if dt > l {
            o.pass = false;
            o.detail.push_str(&format!(" exceeds {}s", l.as_secs()));
        }
    }
    o
}

fn zeta(name: CodeName) -> gain::DiversityReport {
    gain::diversity_product(&build(name).unwrap(), &make_qam(4).unwrap()).unwrap()
}

fn c1_four_antenna_zeta() -> Outcome {
    let cr = zeta(CodeName::Q4Cr).zeta;
    let lt = zeta(CodeName::Q4Lt).zeta;
    let flat: Vec<bool> = [CodeName::Q4, CodeName::Q8, CodeName::T8]
        .iter()
        .map(|&n| zeta(n).full_diversity)
        .collect();
    let pass = (cr - 0.3536).abs() <= ZETA_TOL && (lt - 0.3344).abs() <= ZETA_TOL && flat.iter().all(|f| !f);
    outcome(pass, format!("Q4_CR={cr:.5} Q4_LT={lt:.5} Q4/Q8/T8 full_diversity={flat:?}"))
}

fn c2_eight_antenna_zeta() -> Outcome {
    let q8 = zeta(CodeName::Q8Lt).zeta;
    let t8 = zeta(CodeName::T8Lt).zeta;
    let pass = (q8 - 0.2730).abs() <= ZETA_TOL && (t8 - 0.1531).abs() <= ZETA_TOL;
    outcome(pass, format!("Q8_LT={q8:.5} T8_LT={t8:.5}"))
}

fn c3_rotated() -> Outcome {
    let c4 = make_qam(4).unwrap();
    let q8 = gain::cr_angle_search(
        &build(CodeName::Q8).unwrap(),
        &c4,
        &[vec![4, 5, 6]],
        &gain::inclusive_grid(1.0, 89.0, 1.0).unwrap(),
    )
    .unwrap();
    let t8 = gain::cr_angle_search(
        &build(CodeName::T8).unwrap(),
        &c4,
        &[vec![3, 4], vec![5, 6], vec![7, 8]],
        &gain::inclusive_grid(7.5, 82.5, 7.5).unwrap(),
    )
    .unwrap();
    let pass = q8.zeta >= 0.286 && t8.zeta >= 0.216 && t8.symbols_per_group == 8;
    outcome(
        pass,
        format!(
            "Q8_CR={:.5} at {:?} deg; T8_CR={:.5} at {:?} deg",
            q8.zeta, q8.angles_deg, t8.zeta, t8.angles_deg
        ),
    )
}

fn c4_theta_optimum() -> Outcome {
    let q4 = build(CodeName::Q4).unwrap();
    let grid = gain::inclusive_grid(0.0, 45.0, 0.01).unwrap();
    let analytic = gain::optimal_theta_2d();
    let mut pass = true;
    let mut parts = Vec::new();
    for m in [4, 16] {
        let c = make_qam(m).unwrap();
        let best = gain::grid_search_theta(&q4, &c, &grid).unwrap();
        let at = gain::theta_sweep(&q4, &c, &[analytic]).unwrap()[0];
        let want = 0.64 * c.d_min().powi(8);
        let rel = (at - want).abs() / want;
        pass &= (best.theta_deg - analytic.to_degrees()).abs() <= THETA_TOL_DEG && rel <= THETA_DET_REL_TOL;
        parts.push(format!("{m}qam argmax={:.2} rel={rel:.1e}", best.theta_deg));
    }
    outcome(pass, parts.join(" "))
}

fn c5_closed_form() -> Outcome {
    let lt = build(CodeName::Q4Lt).unwrap();
    let th = gain::optimal_theta_2d();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let e: Vec<f64> = (0..8).map(|_| rng.random_range(-3i32..=3) as f64).collect();
        let num = gain::distance_det(&lt, &e).unwrap();
        let cf = gain::q4lt_det_closed_form(&e, th).unwrap();
        let err = (num - cf).abs() / cf.abs().max(1.0);
        worst = worst.max(err);
    }
    outcome(worst <= CLOSED_FORM_REL_TOL, format!("max relative error {worst:.2e} over 1e4 patterns"))
}

fn c6_within_group() -> Outcome {
    let c4 = make_qam(4).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for name in [CodeName::Q4, CodeName::Q4Cr, CodeName::Q4Lt] {
        let code = build(name).unwrap();
        let w = gain::min_det_search(&code, &c4, SearchScope::WithinGroup).unwrap();
        let f = gain::min_det_search(&code, &c4, SearchScope::Full).unwrap();
        pass &= w.min_det == f.min_det && f.patterns == 6560;
        parts.push(format!("{name}: {:.6} vs {:.6}", w.min_det, f.min_det));
    }
    outcome(pass, parts.join("; "))
}

fn c7_block_diagonal() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for name in CodeName::ALL {
        let code = build(name).unwrap();
        for nr in [1, 2] {
            for _ in 0..100 {
                let ch = draw_channel(&mut rng, code.nt(), nr);
                let r = gram_block_report(&code, &ch).unwrap();
                worst = worst.max(r.max_off_group / r.max_entry);
            }
        }
    }
    outcome(worst < BLOCK_DIAG_RATIO, format!("max off-group ratio {worst:.2e}"))
}

fn c8_grouping() -> Outcome {
    let one = |n| build(n).unwrap().grouping().one_based();
    let q4 = one(CodeName::Q4);
    let mut pass = q4 == vec![vec![1, 4], vec![2, 3], vec![5, 8], vec![6, 7]]
        && one(CodeName::Q4Cr) == vec![vec![1, 4, 5, 8], vec![2, 3, 6, 7]]
        && one(CodeName::Q4Lt) == q4;
    let mut bad = Vec::new();
    for (name, n) in SYMBOLS_PER_GROUP {
        let sizes = build(name).unwrap().grouping().sizes();
        if !sizes.iter().all(|&s| s == n) {
            pass = false;
            bad.push(format!("{name}={sizes:?}"));
        }
    }
    outcome(pass, format!("Q4={q4:?} mismatches={bad:?}"))
}

fn c9_decoder() -> Outcome {
    let c4 = make_qam(4).unwrap();
    let lv = c4.pam_levels().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut mismatches = 0;
    for name in [CodeName::Q4, CodeName::Q4Cr, CodeName::Q4Lt] {
        let code = build(name).unwrap();
        for _ in 0..1000 {
            let ch = draw_channel(&mut rng, 4, 1);
            let s: Vec<f64> = (0..8).map(|_| lv[rng.random_range(0..2)]).collect();
            let rho = 10f64.powf(rng.random_range(0.0..2.0));
            let r = transmit(&code, &s, &ch, rho, Some(&mut rng)).unwrap();
            let g = grouped_ml_detect(&code, &c4, &ch, &r, rho).unwrap();
            let e = exhaustive_ml_detect(&code, &c4, &ch, &r, rho).unwrap();
            mismatches += (g.symbols != e.symbols) as usize;
        }
    }
    // pair metrics against the generic decoder
    let lt = build(CodeName::Q4Lt).unwrap();
    let cr = build(CodeName::Q4Cr).unwrap();
    let th = gain::optimal_theta_2d();
    let pairs = [(0, 3), (1, 2), (4, 7), (5, 6)];
    let mut metric_mismatches = 0;
    for _ in 0..1000 {
        let ch = draw_channel(&mut rng, 4, 1);
        let rho = 10f64.powf(rng.random_range(0.0..2.0));
        let gain = signal_gain(rho, 4);
        let s: Vec<f64> = (0..8).map(|_| lv[rng.random_range(0..2)]).collect();
        let r = transmit(&lt, &s, &ch, rho, Some(&mut rng)).unwrap();
        let g = grouped_ml_detect(&lt, &c4, &ch, &r, rho).unwrap();
        for (gi, &(p, q)) in pairs.iter().enumerate() {
            let mut best = (f64::INFINITY, (0.0, 0.0));
            for &a in &lv {
                for &b in &lv {
                    let f = metric_q4lt(gi + 1, (a, b), th, &ch, &r, gain).unwrap();
                    if f < best.0 {
                        best = (f, (a, b));
                    }
                }
            }
            metric_mismatches += (best.1 != (g.symbols[p], g.symbols[q])) as usize;
        }
        let r = transmit(&cr, &s, &ch, rho, Some(&mut rng)).unwrap();
        let g = grouped_ml_detect(&cr, &c4, &ch, &r, rho).unwrap();
        let pts: Vec<C64> = lv.iter().flat_map(|&re| lv.iter().map(move |&im| C64::new(re, im))).collect();
        for (pair, (a, b)) in [(14, (0, 3)), (23, (1, 2))] {
            let mut best = (f64::INFINITY, (C64::new(0.0, 0.0), C64::new(0.0, 0.0)));
            for &xa in &pts {
                for &xb in &pts {
                    let f = metric_q4cr(pair, xa, xb, &ch, &r, gain).unwrap();
                    if f < best.0 {
                        best = (f, (xa, xb));
                    }
                }
            }
            let want = (C64::new(g.symbols[a], g.symbols[a + 4]), C64::new(g.symbols[b], g.symbols[b + 4]));
            metric_mismatches += (best.1 != want) as usize;
        }
    }
    outcome(
        mismatches == 0 && metric_mismatches == 0,
        format!("grouped/exhaustive mismatches {mismatches}/3000, pair-metric mismatches {metric_mismatches}/6000"),
    )
}

fn curve(name: CodeName, m: usize, stop_below: Option<f64>) -> BerCurve {
    let code = build(name).unwrap();
    let c = make_qam(m).unwrap();
    let mut cfg = SimConfig::new(name.as_str(), m, 1, gain::inclusive_grid(0.0, 24.0, 2.0).unwrap(), 2024);
    cfg.stop_below_ber = stop_below;
    sim::run_ber(&code, &c, &cfg).unwrap()
}

fn c10_ber() -> Outcome {
    let lt = curve(CodeName::Q4Lt, 4, None);
    let cr = curve(CodeName::Q4Cr, 4, None);
    let q4 = curve(CodeName::Q4, 4, None);
    let g4c = curve(CodeName::G4c, 16, None);
    let q8lt = curve(CodeName::Q8Lt, 4, Some(1e-4));
    let q8cr = curve(CodeName::Q8Cr, 4, Some(1e-4));
    let gap = |a: &BerCurve, b: &BerCurve| {
        Some(sim::snr_at_ber(&a.points, 1e-3)? - sim::snr_at_ber(&b.points, 1e-3)?)
    };
    let slope = |c: &BerCurve| sim::final_decade_slope(&c.points);
    let gap4 = gap(&lt, &cr);
    let gap8 = gap(&q8lt, &q8cr);
    let (s_lt, s_g4c, s_q4) = (slope(&lt), slope(&g4c), slope(&q4));
    let a = gap4.is_some_and(|g| g <= GAP_LIMIT_DB);
    let b = match (s_lt, s_g4c) {
        (Some(x), Some(y)) => (x - y).abs() <= SLOPE_AGREEMENT * x.abs().max(y.abs()),
        _ => false,
    };
    let c = match (s_q4, s_lt) {
        (Some(x), Some(y)) => x / y < UNROTATED_SLOPE_RATIO,
        _ => false,
    };
    let d = gap8.is_some_and(|g| g <= GAP_LIMIT_DB);
    outcome(
        a && b && c && d,
        format!(
            "(a) Q4 gap {gap4:.3?} dB (b) slopes Q4_LT {s_lt:.3?} G4C {s_g4c:.3?} (c) Q4 {s_q4:.3?} (d) Q8 gap {gap8:.3?} dB"
        ),
    )
}

fn c11_prop1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut failures = 0;
    for name in [CodeName::Q4, CodeName::Q8, CodeName::T8] {
        let code = build(name).unwrap();
        for _ in 0..100 {
            let mix = if code.grouping().max_group_size() == 2 {
                gclt::rotation_2d(rng.random_range(-3.2..3.2))
            } else {
                let mut a = [0.0; 6];
                a.iter_mut().for_each(|v| *v = rng.random_range(-3.2..3.2));
                gclt::givens_4d(&a)
            };
            let out = apply_gclt(&code, &GcltSpec::uniform(&code, &mix).unwrap()).unwrap();
            let p = out.validate_power();
            if out.grouping() != code.grouping() || p.max_deviation > POWER_TOL {
                failures += 1;
            }
        }
    }
    outcome(failures == 0, format!("{failures}/300 transforms broke grouping or power"))
}

fn cli(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_qostbc")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn c12_determinism() -> Outcome {
    let runs: &[&[&str]] = &[
        &["catalog"],
        &["catalog", "--code", "T8_CR"],
        &["analyze", "--code", "Q8_LT"],
        &["transform", "--code", "Q4", "--gclt-theta", "13.2825"],
        &["mindet", "--code", "Q4_LT", "--mod", "16qam"],
        &["divprod", "--mod", "4qam"],
        &["sweep-theta", "--mod", "4qam", "--start", "0", "--stop", "45", "--step", "0.5"],
        &["search-cr", "--code", "Q8", "--symbols", "4,5,6", "--grid", "20:5:40"],
        &["verify"],
    ];
    let mut bad = Vec::new();
    for args in runs {
        let a = cli(args);
        let b = cli(args);
        if a.0 != 0 || a != b {
            bad.push(args.join(" "));
        }
    }
    let worker_runs: &[&[&str]] = &[
        &["search-t8", "--starts", "3", "--seed", "4"],
        &["simulate", "--code", "Q4_LT", "--code", "G4C:16qam", "--snr", "0:4:12", "--seed", "7", "--max-frames", "20000"],
    ];
    for args in worker_runs {
        let mut outs = Vec::new();
        for w in ["1", "2", "3", "1"] {
            let mut v = args.to_vec();
            v.extend(["--workers", w]);
            outs.push(cli(&v));
        }
        if outs[0].0 != 0 || outs.iter().any(|o| *o != outs[0]) {
            bad.push(args.join(" "));
        }
    }
    outcome(bad.is_empty(), format!("non-reproducible: {bad:?}"))
}

fn main() {
    let criteria: Vec<(&str, Option<u64>, fn() -> Outcome)> = vec![
        ("1 diversity products, four antennas", Some(5), c1_four_antenna_zeta),
        ("2 diversity products, Q8_LT and T8_LT", Some(30), c2_eight_antenna_zeta),
        ("3 Q8_CR / T8_CR angle search", None, c3_rotated),
        ("4 optimal pair rotation angle", Some(10), c4_theta_optimum),
        ("5 closed-form determinant", None, c5_closed_form),
        ("6 within-group min-det equals full", None, c6_within_group),
        ("7 block-diagonal equivalent-channel Gram", None, c7_block_diagonal),
        ("8 grouping regression", None, c8_grouping),
        ("9 grouped decoder oracle equivalence", Some(60), c9_decoder),
        ("10 BER reproduction", None, c10_ber),
        ("11 GCLT preserves grouping and power", None, c11_prop1),
        ("12 CLI determinism", None, c12_determinism),
    ];
    let mut failed = 0;
    for (name, limit, f) in criteria {
        let o = timed(limit.map(Duration::from_secs), f);
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += !o.pass as usize;
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}
