//! Quasi-orthogonality: the anticommutator test, grouping discovery and the
//! equivalent real channel whose Gram matrix the grouping block-diagonalizes.

use crate::catalog::CodeDefinition;
use crate::error::{dim_err, Error, Result};
use crate::numerics::{hermitian_product, ComplexMatrix, RealMatrix, C64};
use crate::sim::ChannelRealization;
use serde::Serialize;

/// Max-norm threshold on `A_pᴴA_q + A_qᴴA_p` below which a pair counts as
/// orthogonal.
pub const QO_TOLERANCE: f64 = 1e-12;

/// Partition of the real-symbol indices `0..2K` into jointly detected sets.
///
/// Indices are 0-based; [`Grouping::one_based`] gives the conventional form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Grouping {
    groups: Vec<Vec<usize>>,
    #[serde(skip)]
    owner: Vec<usize>,
}

impl Grouping {
    /// Validates that `groups` partitions `0..n`, then canonicalizes: each
    /// group sorted, groups ordered by smallest member.
    pub fn new(mut groups: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        let mut owner = vec![usize::MAX; n];
        for g in groups.iter_mut() {
            if g.is_empty() {
                return Err(Error::InvalidGrouping("empty group".into()));
            }
            g.sort_unstable();
        }
        groups.sort_by_key(|g| g[0]);
        for (gi, g) in groups.iter().enumerate() {
            for &p in g {
                if p >= n {
                    return Err(Error::IndexOutOfRange { index: p + 1, max: n });
                }
                if owner[p] != usize::MAX {
                    return Err(Error::InvalidGrouping(format!("index {} appears twice", p + 1)));
                }
                owner[p] = gi;
            }
        }
        if let Some(p) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(Error::InvalidGrouping(format!("index {} not covered", p + 1)));
        }
        Ok(Self { groups, owner })
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Group index holding real symbol `p`.
    pub fn group_of(&self, p: usize) -> usize {
        self.owner[p]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    pub fn max_group_size(&self) -> usize {
        self.groups.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn one_based(&self) -> Vec<Vec<usize>> {
        self.groups
            .iter()
            .map(|g| g.iter().map(|p| p + 1).collect())
            .collect()
    }
}

/// `‖A_pᴴA_q + A_qᴴA_p‖_max`.
pub fn anticommutator_norm(a_p: &ComplexMatrix, a_q: &ComplexMatrix) -> Result<f64> {
    if a_p.rows() != a_q.rows() || a_p.cols() != a_q.cols() {
        return Err(dim_err(
            "anticommutator_norm",
            format!(
                "{}x{} vs {}x{}",
                a_p.rows(),
                a_p.cols(),
                a_q.rows(),
                a_q.cols()
            ),
        ));
    }
    let pq = hermitian_product(a_p, a_q)?;
    let qp = hermitian_product(a_q, a_p)?;
    Ok(pq.add(&qp)?.max_abs())
}

/// True when the pair satisfies the QO constraint.
pub fn qo_pair_check(a_p: &ComplexMatrix, a_q: &ComplexMatrix) -> Result<bool> {
    qo_pair_check_tol(a_p, a_q, QO_TOLERANCE)
}

pub fn qo_pair_check_tol(a_p: &ComplexMatrix, a_q: &ComplexMatrix, tol: f64) -> Result<bool> {
    Ok(anticommutator_norm(a_p, a_q)? < tol)
}

/// Connected components of the graph whose edges are QO violations.
pub fn discover_grouping(dispersion: &[ComplexMatrix], tol: f64) -> Result<Grouping> {
    let n = dispersion.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for p in 0..n {
        for q in p + 1..n {
            if !qo_pair_check_tol(&dispersion[p], &dispersion[q], tol)? {
                let (rp, rq) = (find(&mut parent, p), find(&mut parent, q));
                if rp != rq {
                    parent[rp.max(rq)] = rp.min(rq);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for p in 0..n {
        let r = find(&mut parent, p);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(p);
    }
    Grouping::new(groups, n)
}

/// The `2K × 2K` table of pairwise QO checks; `true` marks an orthogonal pair.
pub fn qo_table(code: &CodeDefinition, tol: f64) -> Result<Vec<Vec<bool>>> {
    let d = code.dispersion();
    d.iter()
        .map(|a| d.iter().map(|b| qo_pair_check_tol(a, b, tol)).collect())
        .collect()
}

/// Worst anticommutator norm over pairs in different groups.
pub fn max_cross_group_violation(code: &CodeDefinition) -> Result<f64> {
    let d = code.dispersion();
    let g = code.grouping();
    let mut worst = 0.0f64;
    for p in 0..d.len() {
        for q in p + 1..d.len() {
            if g.group_of(p) != g.group_of(q) {
                worst = worst.max(anticommutator_norm(&d[p], &d[q])?);
            }
        }
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SkewReport {
    pub m_skew: bool,
    pub n_sym: bool,
}

/// Checks that `Re(A_pᴴA_q)` is skew-symmetric and `Im(A_pᴴA_q)` symmetric.
pub fn skew_symmetry_check(a_p: &ComplexMatrix, a_q: &ComplexMatrix) -> Result<SkewReport> {
    if !qo_pair_check(a_p, a_q)? {
        return Err(Error::Precondition(
            "pair violates the QO constraint (same group)".into(),
        ));
    }
    let prod = hermitian_product(a_p, a_q)?;
    let m = prod.real_part();
    let n = prod.imag_part();
    let mt = m.transpose();
    let m_skew = m
        .data()
        .iter()
        .zip(mt.data())
        .all(|(a, b)| (a + b).abs() < QO_TOLERANCE);
    Ok(SkewReport {
        m_skew,
        n_sym: n.max_abs_diff(&n.transpose()) < QO_TOLERANCE,
    })
}

/// The real matrix mapping stacked real symbols to stacked received rails.
#[derive(Clone, Debug, PartialEq)]
pub struct EquivalentChannel {
    pub h: RealMatrix,
}

/// Column `p`, receive block `i` holds `[Re(A_p h_i); Im(A_p h_i)]`, which is
/// the real expansion of `A_p` applied to `[Re h_i; Im h_i]`.
pub fn build_equivalent_channel(code: &CodeDefinition, channel: &ChannelRealization) -> Result<EquivalentChannel> {
    let hm = channel.gains();
    if hm.rows() != code.nt() {
        return Err(dim_err(
            "build_equivalent_channel",
            format!("channel has {} transmit rows, code has Nt={}", hm.rows(), code.nt()),
        ));
    }
    let (t, nr, n) = (code.t(), hm.cols(), code.num_real());
    let mut h = RealMatrix::zeros(2 * t * nr, n);
    let mut col = vec![C64::new(0.0, 0.0); code.nt()];
    for i in 0..nr {
        for (j, c) in col.iter_mut().enumerate() {
            *c = hm.get(j, i);
        }
        for (p, a) in code.dispersion().iter().enumerate() {
            let v = a.mul_vec(&col)?;
            for (row, z) in v.iter().enumerate() {
                h.set(2 * t * i + row, p, z.re);
                h.set(2 * t * i + t + row, p, z.im);
            }
        }
    }
    Ok(EquivalentChannel { h })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GramReport {
    pub gram: RealMatrix,
    pub max_off_group: f64,
    pub max_entry: f64,
}

/// `HᵀH` and its largest entry between different groups.
pub fn gram_block_report(code: &CodeDefinition, channel: &ChannelRealization) -> Result<GramReport> {
    let eq = build_equivalent_channel(code, channel)?;
    let gram = eq.h.gram();
    let g = code.grouping();
    let n = gram.rows();
    let mut max_off = 0.0f64;
    for p in 0..n {
        for q in 0..n {
            if g.group_of(p) != g.group_of(q) {
                max_off = max_off.max(gram.get(p, q).abs());
            }
        }
    }
    Ok(GramReport {
        max_entry: gram.max_abs(),
        gram,
        max_off_group: max_off,
    })
}
