//! Group-constrained linear transforms and constellation (rail) rotation.
//!
//! A GCLT replaces each dispersion matrix by a real combination of the
//! matrices in its own group and renormalizes power. Because cross-group
//! anticommutators are bilinear, the grouping survives any such mixing.

use crate::catalog::CodeDefinition;
use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, RealMatrix};
use serde::Serialize;
use std::f64::consts::FRAC_PI_2;

/// Orthogonality tolerance for angle-parameterized mixing matrices.
pub const ORTHO_TOLERANCE: f64 = 1e-12;

/// Plane pairs of the six 4D Givens factors, 0-based, in canonical order
/// (1,2),(1,3),(1,4),(2,3),(2,4),(3,4). Angle arrays index into this list.
pub const GIVENS_PLANES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Canonical left-to-right product order.
pub const CANONICAL_ORDER: [usize; 6] = [0, 1, 2, 3, 4, 5];

/// Product order G(2,4)·G(3,4)·G(1,3)·G(1,2)·G(1,4)·G(2,3), the one under
/// which the reference T8 angles give their stated diversity product.
pub const T8_GIVENS_ORDER: [usize; 6] = [4, 5, 1, 0, 2, 3];

/// `[[cos θ, sin θ], [−sin θ, cos θ]]`.
pub fn rotation_2d(theta: f64) -> RealMatrix {
    let (s, c) = theta.sin_cos();
    RealMatrix::from_fn(2, 2, |i, j| match (i, j) {
        (0, 0) | (1, 1) => c,
        (0, 1) => s,
        _ => -s,
    })
}

/// Single `n × n` Givens factor on plane `(i, k)` (0-based, `i < k`).
pub fn givens(n: usize, i: usize, k: usize, theta: f64) -> RealMatrix {
    let (s, c) = theta.sin_cos();
    let mut g = RealMatrix::identity(n);
    g.set(i, i, c);
    g.set(k, k, c);
    g.set(i, k, s);
    g.set(k, i, -s);
    g
}

/// Product of the six Givens factors in canonical order.
pub fn givens_4d(angles: &[f64; 6]) -> RealMatrix {
    givens_4d_ordered(angles, &CANONICAL_ORDER)
}

/// Product of the six Givens factors, `order[0]` leftmost. `angles` stays in
/// canonical plane order regardless of `order`.
pub fn givens_4d_ordered(angles: &[f64; 6], order: &[usize; 6]) -> RealMatrix {
    let mut acc = RealMatrix::identity(4);
    for &f in order {
        let (i, k) = GIVENS_PLANES[f];
        acc = acc
            .matmul(&givens(4, i, k, angles[f]))
            .expect("4x4 times 4x4");
    }
    acc
}

/// Mixing of one group: `Ã_{indices[r]} = Σ_c mixing[r][c] · A_{indices[c]}`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupMixing {
    indices: Vec<usize>,
    mixing: RealMatrix,
}

impl GroupMixing {
    /// Requires an orthogonal mixing matrix.
    pub fn new(indices: Vec<usize>, mixing: RealMatrix) -> Result<Self> {
        let gm = Self::new_raw(indices, mixing)?;
        let defect = gm.mixing.orthogonality_defect();
        if defect >= ORTHO_TOLERANCE {
            return Err(Error::Precondition(format!(
                "mixing for group {:?} is not orthogonal (defect {defect:.3e})",
                gm.one_based()
            )));
        }
        Ok(gm)
    }

    /// Accepts any square real mixing of matching size.
    pub fn new_raw(indices: Vec<usize>, mixing: RealMatrix) -> Result<Self> {
        if mixing.rows() != indices.len() || mixing.cols() != indices.len() {
            return Err(crate::error::dim_err(
                "GroupMixing",
                format!(
                    "{} indices but {}x{} mixing",
                    indices.len(),
                    mixing.rows(),
                    mixing.cols()
                ),
            ));
        }
        Ok(Self { indices, mixing })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn mixing(&self) -> &RealMatrix {
        &self.mixing
    }

    fn one_based(&self) -> Vec<usize> {
        self.indices.iter().map(|p| p + 1).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GcltSpec {
    groups: Vec<GroupMixing>,
}

impl GcltSpec {
    pub fn new(groups: Vec<GroupMixing>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for g in &groups {
            for &p in &g.indices {
                if !seen.insert(p) {
                    return Err(Error::InvalidGrouping(format!(
                        "index {} mixed by more than one group",
                        p + 1
                    )));
                }
            }
        }
        Ok(Self { groups })
    }

    /// Same mixing applied to every group of `code`, rows following each
    /// group's ascending index order.
    pub fn uniform(code: &CodeDefinition, mixing: &RealMatrix) -> Result<Self> {
        let groups = code
            .grouping()
            .groups()
            .iter()
            .map(|g| GroupMixing::new(g.clone(), mixing.clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(groups)
    }

    pub fn groups(&self) -> &[GroupMixing] {
        &self.groups
    }
}

/// Mixes within groups and rescales each output matrix back to `T·N_t/K`.
///
/// Every spec group must coincide (as a set) with a group of `code`; groups
/// the spec leaves out are passed through unchanged.
pub fn apply_gclt(code: &CodeDefinition, spec: &GcltSpec) -> Result<CodeDefinition> {
    let grouping = code.grouping();
    let d = code.dispersion();
    for g in &spec.groups {
        let first = *g.indices.first().ok_or_else(|| Error::GroupMismatch("empty group".into()))?;
        if first >= d.len() {
            return Err(Error::IndexOutOfRange { index: first + 1, max: d.len() });
        }
        let mut sorted = g.indices.clone();
        sorted.sort_unstable();
        if grouping.groups()[grouping.group_of(first)] != sorted {
            return Err(Error::GroupMismatch(format!(
                "spec group {:?} is not a group of {} (grouping {:?})",
                g.one_based(),
                code.name(),
                grouping.one_based()
            )));
        }
    }
    let target = code.power_target();
    let mut out = d.to_vec();
    for g in &spec.groups {
        for (r, &q) in g.indices.iter().enumerate() {
            let mut acc = ComplexMatrix::zeros(code.t(), code.nt());
            for (c, &v) in g.indices.iter().enumerate() {
                let alpha = g.mixing.get(r, c);
                if alpha != 0.0 {
                    acc.axpy(alpha, &d[v]);
                }
            }
            let energy = acc.frobenius_sq();
            if energy < 1e-24 {
                return Err(Error::DegenerateMixing { group: g.one_based() });
            }
            out[q] = acc.scale_real((target / energy).sqrt());
        }
    }
    code.with_dispersion(out)
}

/// Rail rotations `x_q → x_q·e^{jφ_q}` for selected complex symbols.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrSpec {
    /// `(symbol index, angle)`, symbol indices 0-based over `0..K`.
    rotations: Vec<(usize, f64)>,
}

impl CrSpec {
    /// Takes 0-based symbol indices and angles in `[0, π/2)`.
    pub fn new(rotations: Vec<(usize, f64)>) -> Result<Self> {
        for &(_, phi) in &rotations {
            if !(0.0..FRAC_PI_2).contains(&phi) {
                return Err(Error::InvalidAngle(phi));
            }
        }
        Ok(Self { rotations })
    }

    /// One angle for several 1-based symbol indices.
    pub fn uniform(symbols_one_based: &[usize], phi: f64) -> Result<Self> {
        let mut rot = Vec::with_capacity(symbols_one_based.len());
        for &q in symbols_one_based {
            if q == 0 {
                return Err(Error::IndexOutOfRange { index: 0, max: usize::MAX });
            }
            rot.push((q - 1, phi));
        }
        Self::new(rot)
    }

    pub fn rotations(&self) -> &[(usize, f64)] {
        &self.rotations
    }
}

/// Rotates the real/imaginary dispersion pair of each selected symbol:
/// `A'_q = cos φ·A_q + sin φ·A_{K+q}`, `A'_{K+q} = −sin φ·A_q + cos φ·A_{K+q}`.
pub fn apply_cr(code: &CodeDefinition, spec: &CrSpec) -> Result<CodeDefinition> {
    let k = code.k();
    let d = code.dispersion();
    let mut out = d.to_vec();
    for &(q, phi) in &spec.rotations {
        if q >= k {
            return Err(Error::IndexOutOfRange { index: q + 1, max: k });
        }
        let (s, c) = phi.sin_cos();
        let mut re = d[q].scale_real(c);
        re.axpy(s, &d[k + q]);
        let mut im = d[q].scale_real(-s);
        im.axpy(c, &d[k + q]);
        out[q] = re;
        out[k + q] = im;
    }
    code.with_dispersion(out)
}
