//! Self-check suite behind the `verify` subcommand.

use crate::catalog::{build, CodeName};
use crate::decoder::{exhaustive_ml_detect, grouped_ml_detect};
use crate::error::Result;
use crate::gain::{self, diversity_product, distance_det, q4lt_det_closed_form, SearchScope};
use crate::gclt::{self, apply_gclt, GcltSpec};
use crate::modem::{make_qam, SUPPORTED_ORDERS};
use crate::qo::{gram_block_report, max_cross_group_violation, QO_TOLERANCE};
use crate::sim::{draw_channel, transmit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    match f() {
        Ok((passed, detail)) => CheckResult { name: name.into(), passed, detail },
        Err(e) => CheckResult {
            name: name.into(),
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

/// Expected real symbols per group for the nine quasi-orthogonal codes.
pub const SYMBOLS_PER_GROUP: [(CodeName, usize); 9] = [
    (CodeName::Q4, 2),
    (CodeName::Q4Cr, 4),
    (CodeName::Q4Lt, 2),
    (CodeName::Q8, 2),
    (CodeName::Q8Cr, 4),
    (CodeName::Q8Lt, 2),
    (CodeName::T8, 4),
    (CodeName::T8Cr, 8),
    (CodeName::T8Lt, 4),
];

/// Runs every check; `seed` drives all random draws.
pub fn run_checks(seed: u64) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let c4 = make_qam(4).expect("4-QAM");

    out.push(check("catalog power constraint", || {
        let mut bad = Vec::new();
        for name in CodeName::ALL {
            if !build(name)?.validate_power().ok {
                bad.push(name.as_str());
            }
        }
        Ok((bad.is_empty(), format!("violations: {bad:?}")))
    }));

    out.push(check("grouping regression", || {
        let q4 = build(CodeName::Q4)?.grouping().one_based();
        let cr = build(CodeName::Q4Cr)?.grouping().one_based();
        let lt = build(CodeName::Q4Lt)?.grouping().one_based();
        let mut ok = q4 == vec![vec![1, 4], vec![2, 3], vec![5, 8], vec![6, 7]]
            && cr == vec![vec![1, 4, 5, 8], vec![2, 3, 6, 7]]
            && lt == q4;
        let mut sizes = Vec::new();
        for (name, n) in SYMBOLS_PER_GROUP {
            let g = build(name)?.grouping().sizes();
            ok &= g.iter().all(|&s| s == n);
            sizes.push(format!("{name}={g:?}"));
        }
        Ok((ok, sizes.join(" ")))
    }));

    out.push(check("cross-group QO constraint", || {
        let mut worst = 0.0f64;
        for name in CodeName::ALL {
            worst = worst.max(max_cross_group_violation(&build(name)?)?);
        }
        Ok((worst < QO_TOLERANCE, format!("max violation {worst:.3e}")))
    }));

    out.push(check("block-diagonal HᵀH", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for name in CodeName::ALL {
            let code = build(name)?;
            for nr in [1, 2] {
                for _ in 0..25 {
                    let ch = draw_channel(&mut rng, code.nt(), nr);
                    let r = gram_block_report(&code, &ch)?;
                    worst = worst.max(r.max_off_group / r.max_entry);
                }
            }
        }
        Ok((worst < 1e-10, format!("max off-group ratio {worst:.3e}")))
    }));

    out.push(check("diversity products", || {
        let mut ok = true;
        let mut parts = Vec::new();
        for (name, want) in [
            (CodeName::Q4Cr, 0.3536),
            (CodeName::Q4Lt, 0.3344),
            (CodeName::Q8Lt, 0.2730),
            (CodeName::T8Lt, 0.1531),
        ] {
            let z = diversity_product(&build(name)?, &c4)?.zeta;
            ok &= (z - want).abs() <= 1e-3;
            parts.push(format!("{name}={z:.4}"));
        }
        for name in [CodeName::Q4, CodeName::Q8, CodeName::T8] {
            let r = diversity_product(&build(name)?, &c4)?;
            ok &= !r.full_diversity;
            parts.push(format!("{name} full={}", r.full_diversity));
        }
        Ok((ok, parts.join(" ")))
    }));

    out.push(check("rotated eight-antenna codes", || {
        let q8 = diversity_product(&build(CodeName::Q8Cr)?, &c4)?.zeta;
        let t8 = diversity_product(&build(CodeName::T8Cr)?, &c4)?.zeta;
        Ok((q8 >= 0.286 && t8 >= 0.216, format!("Q8_CR={q8:.4} T8_CR={t8:.4}")))
    }));

    out.push(check("closed-form determinant", || {
        let lt = build(CodeName::Q4Lt)?;
        let th = gain::optimal_theta_2d();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let e: Vec<f64> = (0..8).map(|_| rng.random_range(-3i32..=3) as f64).collect();
            let num = distance_det(&lt, &e)?;
            let cf = q4lt_det_closed_form(&e, th)?;
            if cf > 1e-9 {
                worst = worst.max((num - cf).abs() / cf);
            } else {
                worst = worst.max((num - cf).abs());
            }
        }
        Ok((worst < 1e-9, format!("max relative error {worst:.3e}")))
    }));

    out.push(check("within-group equals full min-det", || {
        let mut ok = true;
        for name in [CodeName::Q4, CodeName::Q4Cr, CodeName::Q4Lt] {
            let code = build(name)?;
            let a = gain::min_det_search(&code, &c4, SearchScope::WithinGroup)?.min_det;
            let b = gain::min_det_search(&code, &c4, SearchScope::Full)?.min_det;
            ok &= a == b;
        }
        Ok((ok, String::new()))
    }));

    out.push(check("grouped decoder equals exhaustive", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let mut mismatches = 0;
        for name in [CodeName::Q4, CodeName::Q4Cr, CodeName::Q4Lt] {
            let code = build(name)?;
            for _ in 0..100 {
                let ch = draw_channel(&mut rng, 4, 1);
                let s: Vec<f64> = (0..8).map(|_| c4.pam_levels()[rng.random_range(0..2)]).collect();
                let rho = 10f64.powf(rng.random_range(0.0..1.5));
                let r = transmit(&code, &s, &ch, rho, Some(&mut rng))?;
                let g = grouped_ml_detect(&code, &c4, &ch, &r, rho)?;
                let e = exhaustive_ml_detect(&code, &c4, &ch, &r, rho)?;
                mismatches += (g.symbols != e.symbols) as usize;
            }
        }
        Ok((mismatches == 0, format!("{mismatches} mismatches in 300 trials")))
    }));

    out.push(check("GCLT preserves grouping and power", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
        let mut ok = true;
        for name in [CodeName::Q4, CodeName::Q8, CodeName::T8] {
            let code = build(name)?;
            for _ in 0..10 {
                let mix = if code.grouping().max_group_size() == 2 {
                    gclt::rotation_2d(rng.random_range(-3.1..3.1))
                } else {
                    let mut a = [0.0; 6];
                    a.iter_mut().for_each(|v| *v = rng.random_range(-3.1..3.1));
                    gclt::givens_4d(&a)
                };
                let out = apply_gclt(&code, &GcltSpec::uniform(&code, &mix)?)?;
                ok &= out.grouping() == code.grouping() && out.validate_power().ok;
            }
        }
        Ok((ok, String::new()))
    }));

    out.push(check("modem energy and Gray labels", || {
        let mut ok = true;
        for m in SUPPORTED_ORDERS {
            let c = make_qam(m)?;
            ok &= (c.average_energy() - 1.0).abs() < 1e-12;
            ok &= c.rail_labels().windows(2).all(|w| (w[0] ^ w[1]).count_ones() == 1);
        }
        Ok((ok, String::new()))
    }));

    out
}
