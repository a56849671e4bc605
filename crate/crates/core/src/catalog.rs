//! Named codes and the linear encoder `C = Σ s_p A_p`.
//!
//! Base codes (Q4, Q8, T8, G4C) are written as ordinary code-matrix
//! functions of the complex symbols and their dispersion matrices extracted
//! by probing with `e_q` and `j·e_q`. The rotated and transformed variants
//! are derived from the bases through [`crate::gclt`].

use crate::error::{dim_err, Error, Result};
use crate::gclt::{self, CrSpec, GcltSpec, GroupMixing};
use crate::numerics::{hermitian_product, ComplexMatrix, C64, J};
use crate::qo::{discover_grouping, Grouping, QO_TOLERANCE};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::str::FromStr;

/// Tolerance for the per-matrix power constraint.
pub const POWER_TOLERANCE: f64 = 1e-12;

/// Rail rotation applied to x3 and x4 of Q4.
pub const Q4_CR_ANGLE: f64 = FRAC_PI_4;

/// Rail rotation applied to x4, x5, x6 of Q8 (30°).
pub const Q8_CR_ANGLE: f64 = std::f64::consts::PI / 6.0;

/// T8_CR rail rotations as (1-based symbol pair, degrees). Each merged group
/// then carries four distinct angles 22.5° apart; x1 and x2 stay unrotated.
/// A single shared angle cannot work here since every two-symbol error
/// pattern of T8 is rank deficient.
pub const T8_CR_ROTATIONS: [([usize; 2], f64); 3] = [([3, 4], 22.5), ([5, 6], 45.0), ([7, 8], 67.5)];

/// Reference T8 angles in degrees, indexed (1,2),(1,3),(1,4),(2,3),(2,4),(3,4).
pub const T8_LT_ANGLES_DEG: [f64; 6] = [-45.66, 9.13, 37.78, 9.43, 44.24, -46.11];

/// Code names known to [`build`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CodeName {
    Q4,
    Q4Cr,
    Q4Lt,
    Q8,
    Q8Cr,
    Q8Lt,
    T8,
    T8Cr,
    T8Lt,
    G4c,
}

impl CodeName {
    pub const ALL: [CodeName; 10] = [
        CodeName::Q4,
        CodeName::Q4Cr,
        CodeName::Q4Lt,
        CodeName::Q8,
        CodeName::Q8Cr,
        CodeName::Q8Lt,
        CodeName::T8,
        CodeName::T8Cr,
        CodeName::T8Lt,
        CodeName::G4c,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CodeName::Q4 => "Q4",
            CodeName::Q4Cr => "Q4_CR",
            CodeName::Q4Lt => "Q4_LT",
            CodeName::Q8 => "Q8",
            CodeName::Q8Cr => "Q8_CR",
            CodeName::Q8Lt => "Q8_LT",
            CodeName::T8 => "T8",
            CodeName::T8Cr => "T8_CR",
            CodeName::T8Lt => "T8_LT",
            CodeName::G4c => "G4C",
        }
    }

    /// Declared rate `K/T` as a (numerator, denominator) pair.
    pub fn rate(self) -> (usize, usize) {
        match self {
            CodeName::Q8 | CodeName::Q8Cr | CodeName::Q8Lt => (3, 4),
            CodeName::G4c => (1, 2),
            _ => (1, 1),
        }
    }

    fn valid_list() -> String {
        Self::ALL.map(CodeName::as_str).join(", ")
    }
}

impl fmt::Display for CodeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CodeName {
    type Err = Error;

    /// Case-insensitive; `-` is accepted in place of `_`.
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == norm)
            .ok_or_else(|| Error::UnknownCode {
                name: s.to_string(),
                valid: Self::valid_list(),
            })
    }
}

/// A linear dispersion code: `2K` matrices of size `T × N_t` and the grouping
/// of real symbols induced by the QO constraint.
#[derive(Clone, Debug, PartialEq)]
pub struct CodeDefinition {
    name: String,
    t: usize,
    nt: usize,
    k: usize,
    dispersion: Vec<ComplexMatrix>,
    grouping: Grouping,
}

impl CodeDefinition {
    /// Validates shapes and discovers the grouping at [`QO_TOLERANCE`].
    pub fn new(
        name: impl Into<String>,
        t: usize,
        nt: usize,
        k: usize,
        dispersion: Vec<ComplexMatrix>,
    ) -> Result<Self> {
        Self::with_tolerance(name, t, nt, k, dispersion, QO_TOLERANCE)
    }

    pub fn with_tolerance(
        name: impl Into<String>,
        t: usize,
        nt: usize,
        k: usize,
        dispersion: Vec<ComplexMatrix>,
        tol: f64,
    ) -> Result<Self> {
        if k == 0 || t == 0 || nt == 0 {
            return Err(Error::Config("T, Nt and K must all be positive".into()));
        }
        if dispersion.len() != 2 * k {
            return Err(dim_err(
                "CodeDefinition::new",
                format!("{} dispersion matrices for K={k}, expected {}", dispersion.len(), 2 * k),
            ));
        }
        for (p, a) in dispersion.iter().enumerate() {
            if a.rows() != t || a.cols() != nt {
                return Err(dim_err(
                    "CodeDefinition::new",
                    format!(
                        "matrix {} is {}x{}, expected {t}x{nt}",
                        p + 1,
                        a.rows(),
                        a.cols()
                    ),
                ));
            }
        }
        let grouping = discover_grouping(&dispersion, tol)?;
        Ok(Self {
            name: name.into(),
            t,
            nt,
            k,
            dispersion,
            grouping,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of real symbols, `2K`.
    pub fn num_real(&self) -> usize {
        2 * self.k
    }

    pub fn dispersion(&self) -> &[ComplexMatrix] {
        &self.dispersion
    }

    pub fn grouping(&self) -> &Grouping {
        &self.grouping
    }

    /// Target trace `T·N_t/K`.
    pub fn power_target(&self) -> f64 {
        (self.t * self.nt) as f64 / self.k as f64
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Replaces the dispersion matrices, rediscovering the grouping.
    pub(crate) fn with_dispersion(&self, dispersion: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new(self.name.clone(), self.t, self.nt, self.k, dispersion)
    }

    /// `C = Σ_p s_p A_p`.
    pub fn encode(&self, s: &[f64]) -> Result<ComplexMatrix> {
        if s.len() != 2 * self.k {
            return Err(dim_err(
                "encode",
                format!("{} real symbols for K={}, expected {}", s.len(), self.k, 2 * self.k),
            ));
        }
        let mut c = ComplexMatrix::zeros(self.t, self.nt);
        for (a, &sp) in self.dispersion.iter().zip(s) {
            if sp != 0.0 {
                c.axpy(sp, a);
            }
        }
        Ok(c)
    }

    /// Encodes complex symbols `x_q = s_q + j·s_{K+q}`.
    pub fn encode_complex(&self, x: &[C64]) -> Result<ComplexMatrix> {
        if x.len() != self.k {
            return Err(dim_err(
                "encode_complex",
                format!("{} symbols, expected K={}", x.len(), self.k),
            ));
        }
        let s: Vec<f64> = x.iter().map(|z| z.re).chain(x.iter().map(|z| z.im)).collect();
        self.encode(&s)
    }

    pub fn validate_power(&self) -> PowerReport {
        let expected = self.power_target();
        let traces: Vec<f64> = self.dispersion.iter().map(ComplexMatrix::frobenius_sq).collect();
        let max_deviation = traces
            .iter()
            .map(|t| (t - expected).abs())
            .fold(0.0, f64::max);
        PowerReport {
            expected,
            traces,
            max_deviation,
            ok: max_deviation < POWER_TOLERANCE,
        }
    }

    /// Errors on the first matrix whose trace misses the target.
    pub fn require_power(&self) -> Result<()> {
        let report = self.validate_power();
        match report
            .traces
            .iter()
            .position(|t| (t - report.expected).abs() >= POWER_TOLERANCE)
        {
            None => Ok(()),
            Some(i) => Err(Error::PowerConstraint {
                index: i + 1,
                trace: report.traces[i],
                expected: report.expected,
            }),
        }
    }

    pub fn to_json(&self) -> CodeJson {
        CodeJson {
            name: self.name.clone(),
            t: self.t,
            nt: self.nt,
            k: self.k,
            matrices: self
                .dispersion
                .iter()
                .map(|a| {
                    (0..a.rows())
                        .map(|i| (0..a.cols()).map(|j| [a.get(i, j).re, a.get(i, j).im]).collect())
                        .collect()
                })
                .collect(),
            grouping: self.grouping.one_based(),
        }
    }

    /// Rebuilds a code from its JSON form. The grouping is rediscovered at
    /// `tol`; a stored grouping that disagrees is rejected.
    pub fn from_json(json: &CodeJson, tol: f64) -> Result<Self> {
        let mut dispersion = Vec::with_capacity(json.matrices.len());
        for m in &json.matrices {
            let rows: Vec<Vec<C64>> = m
                .iter()
                .map(|row| row.iter().map(|[re, im]| C64::new(*re, *im)).collect())
                .collect();
            dispersion.push(ComplexMatrix::from_rows(&rows)?);
        }
        let code = Self::with_tolerance(json.name.clone(), json.t, json.nt, json.k, dispersion, tol)?;
        if !json.grouping.is_empty() && json.grouping != code.grouping.one_based() {
            return Err(Error::InvalidGrouping(format!(
                "stored grouping {:?} differs from discovered {:?}",
                json.grouping,
                code.grouping.one_based()
            )));
        }
        Ok(code)
    }
}

/// Serialized code: matrices as `[row][col][re, im]`, grouping 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeJson {
    pub name: String,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "Nt")]
    pub nt: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub matrices: Vec<Vec<Vec<[f64; 2]>>>,
    #[serde(default)]
    pub grouping: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerReport {
    pub expected: f64,
    pub traces: Vec<f64>,
    pub max_deviation: f64,
    pub ok: bool,
}

/// Extracts dispersion matrices from a code-matrix function that is
/// real-linear in the symbols.
pub fn dispersion_from_fn(k: usize, f: impl Fn(&[C64]) -> Vec<Vec<C64>>) -> Result<Vec<ComplexMatrix>> {
    let mut out = Vec::with_capacity(2 * k);
    for unit in [C64::new(1.0, 0.0), J] {
        for q in 0..k {
            let mut x = vec![C64::new(0.0, 0.0); k];
            x[q] = unit;
            out.push(ComplexMatrix::from_rows(&f(&x))?);
        }
    }
    Ok(out)
}

fn q4_matrix(x: &[C64]) -> Vec<Vec<C64>> {
    let (x1, x2, x3, x4) = (x[0], x[1], x[2], x[3]);
    vec![
        vec![x1, x2, x3, x4],
        vec![-x2.conj(), x1.conj(), -x4.conj(), x3.conj()],
        vec![-x3.conj(), -x4.conj(), x1.conj(), x2.conj()],
        vec![x4, -x3, -x2, x1],
    ]
}

/// Rate-3/4 orthogonal design for four antennas.
fn g34(x1: C64, x2: C64, x3: C64) -> Vec<Vec<C64>> {
    let z = C64::new(0.0, 0.0);
    vec![
        vec![x1, x2, x3, z],
        vec![-x2.conj(), x1.conj(), z, x3],
        vec![-x3.conj(), z, x1.conj(), -x2],
        vec![z, -x3.conj(), x2.conj(), x1],
    ]
}

/// `[[A, B], [B, A]]` for square blocks of equal size.
fn abba_blocks(a: &[Vec<C64>], b: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let top = a.iter().zip(b).map(|(ra, rb)| [ra.as_slice(), rb].concat());
    let bottom = b.iter().zip(a).map(|(rb, ra)| [rb.as_slice(), ra].concat());
    top.chain(bottom).collect()
}

fn q8_matrix(x: &[C64]) -> Vec<Vec<C64>> {
    let scale = (4.0f64 / 3.0).sqrt();
    let a = g34(x[0], x[1], x[2]);
    let b = g34(J * x[3], J * x[4], J * x[5]);
    abba_blocks(&a, &b)
        .into_iter()
        .map(|row| row.into_iter().map(|z| z * scale).collect())
        .collect()
}

fn alamouti(a: C64, b: C64) -> Vec<Vec<C64>> {
    vec![vec![a, b], vec![-b.conj(), a.conj()]]
}

fn t8_matrix(x: &[C64]) -> Vec<Vec<C64>> {
    // symbol slot order and signs chosen so the grouping lands on the
    // expected index sets
    let y = [x[0], x[1], x[3], x[2], x[5], x[4], -x[6], -x[7]];
    let p = abba_blocks(&alamouti(y[0], y[1]), &alamouti(y[2], y[3]));
    let q = abba_blocks(&alamouti(y[4], y[5]), &alamouti(y[6], y[7]));
    abba_blocks(&p, &q)
}

fn g4c_matrix(x: &[C64]) -> Vec<Vec<C64>> {
    let (x1, x2, x3, x4) = (x[0], x[1], x[2], x[3]);
    let top = vec![
        vec![x1, x2, x3, x4],
        vec![-x2, x1, -x4, x3],
        vec![-x3, x4, x1, -x2],
        vec![-x4, -x3, x2, x1],
    ];
    let bottom: Vec<Vec<C64>> = top
        .iter()
        .map(|row| row.iter().map(|z| z.conj()).collect())
        .collect();
    top.into_iter().chain(bottom).collect()
}

fn base(name: CodeName, t: usize, nt: usize, k: usize, f: fn(&[C64]) -> Vec<Vec<C64>>) -> Result<CodeDefinition> {
    CodeDefinition::new(name.as_str(), t, nt, k, dispersion_from_fn(k, f)?)
}

/// Index sets (0-based) of the 2D pairs mixed by the Q4/Q8 transforms.
fn pair_spec(code: &CodeDefinition, theta: f64) -> Result<GcltSpec> {
    let mix = gclt::rotation_2d(theta);
    let groups = code
        .grouping()
        .groups()
        .iter()
        .map(|g| GroupMixing::new(g.clone(), mix.clone()))
        .collect::<Result<Vec<_>>>()?;
    GcltSpec::new(groups)
}

/// The T8 transform with the reference angles in the Givens order that
/// reproduces their stated diversity product (0.1530).
pub fn t8_lt_spec(code: &CodeDefinition, angles_rad: &[f64; 6]) -> Result<GcltSpec> {
    let mix = gclt::givens_4d_ordered(angles_rad, &gclt::T8_GIVENS_ORDER);
    let groups = code
        .grouping()
        .groups()
        .iter()
        .map(|g| GroupMixing::new(g.clone(), mix.clone()))
        .collect::<Result<Vec<_>>>()?;
    GcltSpec::new(groups)
}

pub fn t8_lt_angles_rad() -> [f64; 6] {
    T8_LT_ANGLES_DEG.map(f64::to_radians)
}

/// Builds a catalog code.
pub fn build(name: CodeName) -> Result<CodeDefinition> {
    let code = match name {
        CodeName::Q4 => base(name, 4, 4, 4, q4_matrix)?,
        CodeName::Q8 => base(name, 8, 8, 6, q8_matrix)?,
        CodeName::T8 => base(name, 8, 8, 8, t8_matrix)?,
        CodeName::G4c => base(name, 8, 4, 4, g4c_matrix)?,
        CodeName::Q4Cr => {
            let spec = CrSpec::uniform(&[3, 4], Q4_CR_ANGLE)?;
            gclt::apply_cr(&build(CodeName::Q4)?, &spec)?
        }
        CodeName::Q8Cr => {
            let spec = CrSpec::uniform(&[4, 5, 6], Q8_CR_ANGLE)?;
            gclt::apply_cr(&build(CodeName::Q8)?, &spec)?
        }
        CodeName::T8Cr => {
            let sets: Vec<Vec<usize>> = T8_CR_ROTATIONS.iter().map(|(s, _)| s.to_vec()).collect();
            let angles: Vec<f64> = T8_CR_ROTATIONS.iter().map(|r| r.1).collect();
            let spec = crate::gain::cr_spec_for(&sets, &angles)?;
            gclt::apply_cr(&build(CodeName::T8)?, &spec)?
        }
        CodeName::Q4Lt | CodeName::Q8Lt => {
            let b = build(if name == CodeName::Q4Lt { CodeName::Q4 } else { CodeName::Q8 })?;
            gclt::apply_gclt(&b, &pair_spec(&b, crate::gain::optimal_theta_2d())?)?
        }
        CodeName::T8Lt => {
            let b = build(CodeName::T8)?;
            gclt::apply_gclt(&b, &t8_lt_spec(&b, &t8_lt_angles_rad())?)?
        }
    };
    let code = code.renamed(name.as_str());
    code.require_power()?;
    Ok(code)
}

/// Builds by string name.
pub fn build_named(name: &str) -> Result<CodeDefinition> {
    build(name.parse()?)
}

/// `max |A_pᴴA_p − (T·N_t/K)/N_t · I|`, zero for codes whose dispersion
/// matrices are scaled unitaries.
pub fn unitarity_defect(code: &CodeDefinition) -> Result<f64> {
    let scale = code.power_target() / code.nt() as f64;
    let id = ComplexMatrix::identity(code.nt()).scale_real(scale);
    let mut worst = 0.0f64;
    for a in code.dispersion() {
        worst = worst.max(hermitian_product(a, a)?.max_abs_diff(&id));
    }
    Ok(worst)
}
