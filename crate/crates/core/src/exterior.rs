//! Pointwise exterior algebra over a `q`-dimensional oriented inner-product space.
//!
//! Coframe indices are 0-based in code (`e^0 .. e^{q-1}`); the model file and the
//! CLI use the 1-based labels `e^1 .. e^q`. Basis `k`-forms `e^I` are enumerated in
//! lexicographic order of their increasing index lists, so matrix layouts are
//! reproducible.

use std::fmt;

use itertools::Itertools;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest codimension the bitmask representation supports.
pub const MAX_CODIM: usize = 16;

/// A strictly increasing list of coframe indices, stored as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct MultiIndex(u32);

impl MultiIndex {
    /// The empty multi-index (the basis element `1` of degree zero).
    pub const EMPTY: MultiIndex = MultiIndex(0);

    /// Builds a multi-index from a strictly increasing list of indices.
    pub fn new(indices: &[usize]) -> Result<Self> {
        let mut mask = 0u32;
        let mut last: Option<usize> = None;
        for &i in indices {
            if i >= MAX_CODIM {
                return Err(Error::IndexOutOfRange { index: i, q: MAX_CODIM });
            }
            if last.is_some_and(|l| l >= i) {
                return Err(Error::NotIncreasing(indices.to_vec()));
            }
            last = Some(i);
            mask |= 1 << i;
        }
        Ok(MultiIndex(mask))
    }

    pub fn single(i: usize) -> Self {
        MultiIndex(1 << i)
    }

    pub fn from_mask(mask: u32) -> Self {
        MultiIndex(mask)
    }

    pub fn mask(self) -> u32 {
        self.0
    }

    pub fn degree(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, i: usize) -> bool {
        i < 32 && self.0 & (1 << i) != 0
    }

    /// Indices in increasing order.
    pub fn indices(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |i| self.0 & (1 << i) != 0)
    }

    pub fn max_index(self) -> Option<usize> {
        (self.0 != 0).then(|| 31 - self.0.leading_zeros() as usize)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == 0 {
            return write!(f, "1");
        }
        let s = self.indices().map(|i| format!("e{}", i + 1)).join("^");
        write!(f, "{s}")
    }
}

/// Sorts a sequence of coframe indices, returning the permutation sign and the
/// resulting multi-index, or `None` if an index repeats.
pub fn sort_with_sign(seq: &[usize]) -> Option<(i8, MultiIndex)> {
    let mut mask = 0u32;
    let mut inversions = 0usize;
    for (a, &i) in seq.iter().enumerate() {
        if mask & (1 << i) != 0 {
            return None;
        }
        mask |= 1 << i;
        inversions += seq[..a].iter().filter(|&&j| j > i).count();
    }
    let sign = if inversions % 2 == 0 { 1 } else { -1 };
    Some((sign, MultiIndex(mask)))
}

/// Transverse orientation, fixed by the coframe order.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub enum Orientation {
    #[default]
    Positive,
    Negative,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }

    pub fn from_sign(s: i64) -> Option<Self> {
        match s {
            1 => Some(Orientation::Positive),
            -1 => Some(Orientation::Negative),
            _ => None,
        }
    }
}

/// Basis tables of `Λ^* R^q`.
#[derive(Clone, Debug)]
pub struct ExteriorAlgebra {
    q: usize,
    bases: Vec<Vec<MultiIndex>>,
    position: Vec<usize>,
}

impl ExteriorAlgebra {
    pub fn new(q: usize) -> Result<Self> {
        if q > MAX_CODIM {
            return Err(Error::CodimensionTooLarge(q));
        }
        let bases: Vec<Vec<MultiIndex>> = (0..=q)
            .map(|k| {
                (0..q)
                    .combinations(k)
                    .map(|c| MultiIndex::new(&c).expect("combinations are increasing"))
                    .collect()
            })
            .collect();
        let mut position = vec![usize::MAX; 1 << q];
        for basis in &bases {
            for (p, mi) in basis.iter().enumerate() {
                position[mi.mask() as usize] = p;
            }
        }
        Ok(ExteriorAlgebra { q, bases, position })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// `C(q, k)`; zero outside `0..=q`.
    pub fn dim(&self, k: usize) -> usize {
        self.bases.get(k).map_or(0, Vec::len)
    }

    pub fn basis(&self, k: usize) -> &[MultiIndex] {
        &self.bases[k]
    }

    /// Position of `mi` inside the basis of its own degree.
    pub fn position(&self, mi: MultiIndex) -> usize {
        self.position[mi.mask() as usize]
    }

    /// The top-degree multi-index `e^1 ∧ ... ∧ e^q`.
    pub fn top(&self) -> MultiIndex {
        MultiIndex((1u32 << self.q) - 1)
    }

    pub fn complement(&self, mi: MultiIndex) -> MultiIndex {
        MultiIndex(self.top().mask() & !mi.mask())
    }

    /// The sign `ε` with `e^I ∧ e^{I^c} = ε · e^1 ∧ ... ∧ e^q`.
    pub fn complement_sign(&self, mi: MultiIndex) -> i8 {
        let seq: Vec<usize> = mi.indices().chain(self.complement(mi).indices()).collect();
        sort_with_sign(&seq).expect("disjoint").0
    }

    fn check(&self, mi: MultiIndex) -> Result<()> {
        match mi.max_index() {
            Some(i) if i >= self.q => Err(Error::IndexOutOfRange { index: i, q: self.q }),
            _ => Ok(()),
        }
    }

    /// `e^I ∧ e^J` as a signed basis element, or `None` when the indices overlap.
    pub fn wedge_basis(&self, a: MultiIndex, b: MultiIndex) -> Result<Option<(i8, MultiIndex)>> {
        self.check(a)?;
        self.check(b)?;
        let seq: Vec<usize> = a.indices().chain(b.indices()).collect();
        Ok(sort_with_sign(&seq))
    }

    /// Interior product `e_i ⌟ e^I` for the basis vector `e_i` dual to `e^i`.
    pub fn contract_basis(&self, i: usize, mi: MultiIndex) -> Result<Option<(i8, MultiIndex)>> {
        if i >= self.q {
            return Err(Error::IndexOutOfRange { index: i, q: self.q });
        }
        self.check(mi)?;
        if !mi.contains(i) {
            return Ok(None);
        }
        let before = mi.indices().take_while(|&j| j < i).count();
        let sign = if before % 2 == 0 { 1 } else { -1 };
        Ok(Some((sign, MultiIndex(mi.mask() & !(1 << i)))))
    }

    /// Matrix of `ω ∧ ·` from degree `k` to `k+1` for a covector `ω = Σ ω_i e^i`.
    pub fn wedge_matrix(&self, covector: &[f64], k: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim(k + 1), self.dim(k));
        if k >= self.q {
            return m;
        }
        for (col, &mi) in self.bases[k].iter().enumerate() {
            for (i, &w) in covector.iter().enumerate() {
                if w == 0.0 || mi.contains(i) {
                    continue;
                }
                let (s, out) = self.wedge_basis(MultiIndex::single(i), mi).unwrap().unwrap();
                m[(self.position(out), col)] += f64::from(s) * w;
            }
        }
        m
    }

    /// Matrix of `v ⌟ ·` from degree `k` to `k-1` for a vector `v = Σ v^i e_i`.
    pub fn contract_matrix(&self, vector: &[f64], k: usize) -> DMatrix<f64> {
        if k == 0 {
            return DMatrix::zeros(0, self.dim(0));
        }
        let mut m = DMatrix::zeros(self.dim(k - 1), self.dim(k));
        for (col, &mi) in self.bases[k].iter().enumerate() {
            for (i, &v) in vector.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                if let Some((s, out)) = self.contract_basis(i, mi).unwrap() {
                    m[(self.position(out), col)] += f64::from(s) * v;
                }
            }
        }
        m
    }
}

/// Transverse metric in the coframe, with the induced Gram matrices on `Λ^k`.
#[derive(Clone, Debug)]
pub struct MetricGram {
    vectors: DMatrix<f64>,
    covectors: DMatrix<f64>,
    grams: Vec<DMatrix<f64>>,
    volume: f64,
    identity: bool,
}

impl MetricGram {
    /// `g` is the metric on vectors, `g_ij = g(e_i, e_j)`.
    pub fn new(g: DMatrix<f64>) -> Result<Self> {
        let q = g.nrows();
        if g.ncols() != q {
            return Err(Error::NonSpdMetric(format!("metric is {}x{}", q, g.ncols())));
        }
        let scale = g.amax().max(f64::MIN_POSITIVE);
        if (&g - g.transpose()).amax() > 1e-12 * scale {
            return Err(Error::NonSpdMetric("metric is not symmetric".into()));
        }
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonSpdMetric("metric has non-finite entries".into()));
        }
        let eig = g.clone().symmetric_eigen();
        if q > 0 && eig.eigenvalues.min() <= 0.0 {
            return Err(Error::NonSpdMetric(format!(
                "metric has eigenvalue {:e} <= 0",
                eig.eigenvalues.min()
            )));
        }
        let identity = g == DMatrix::identity(q, q);
        let covectors = if identity {
            g.clone()
        } else {
            g.clone()
                .try_inverse()
                .ok_or_else(|| Error::NonSpdMetric("singular metric".into()))?
        };
        let ext = ExteriorAlgebra::new(q)?;
        let grams = (0..=q).map(|k| minors(&ext, &covectors, k)).collect();
        let volume = if identity { 1.0 } else { g.determinant().sqrt() };
        Ok(MetricGram {
            vectors: g,
            covectors,
            grams,
            volume,
            identity,
        })
    }

    pub fn identity(q: usize) -> Self {
        MetricGram::new(DMatrix::identity(q, q)).expect("identity is SPD")
    }

    pub fn q(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// Inner products of the coframe, `⟨e^i, e^j⟩ = (g^{-1})_ij`.
    pub fn covectors(&self) -> &DMatrix<f64> {
        &self.covectors
    }

    /// Gram matrix of `{e^I}` in `Λ^k`.
    pub fn gram(&self, k: usize) -> &DMatrix<f64> {
        &self.grams[k]
    }

    /// `√det g`, so that the volume form is `√det g · e^1 ∧ ... ∧ e^q`.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Raises a covector to the metric-dual vector.
    pub fn sharp(&self, covector: &[f64]) -> Vec<f64> {
        if self.identity {
            return covector.to_vec();
        }
        let q = self.q();
        (0..q)
            .map(|i| (0..q).map(|j| self.covectors[(i, j)] * covector[j]).sum())
            .collect()
    }
}

fn minors(ext: &ExteriorAlgebra, cov: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let basis = ext.basis(k);
    let n = basis.len();
    DMatrix::from_fn(n, n, |r, c| {
        let rows: Vec<usize> = basis[r].indices().collect();
        let cols: Vec<usize> = basis[c].indices().collect();
        if k == 0 {
            return 1.0;
        }
        DMatrix::from_fn(k, k, |a, b| cov[(rows[a], cols[b])]).determinant()
    })
}

/// Gram matrix of the basis `k`-forms for the metric `g` on vectors.
pub fn induced_gram(g: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
    let metric = MetricGram::new(g.clone())?;
    if k > metric.q() {
        return Err(Error::DegreeOutOfRange {
            degree: k,
            q: metric.q(),
        });
    }
    Ok(metric.gram(k).clone())
}

/// Per-degree tables of the transversal Hodge star.
///
/// `block(k)` is `S_k` with `⋆̄ e^I = Σ_J (S_k)_{IJ} e^J`; `action(k)` is its
/// transpose, which acts on coefficient vectors.
#[derive(Clone, Debug)]
pub struct StarTable {
    orientation: Orientation,
    blocks: Vec<DMatrix<f64>>,
}

impl StarTable {
    pub fn new(metric: &MetricGram, orientation: Orientation) -> Result<Self> {
        let ext = ExteriorAlgebra::new(metric.q())?;
        let blocks = (0..=metric.q())
            .map(|k| star_block(&ext, metric, orientation, k))
            .collect();
        Ok(StarTable { orientation, blocks })
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn block(&self, k: usize) -> &DMatrix<f64> {
        &self.blocks[k]
    }

    pub fn action(&self, k: usize) -> DMatrix<f64> {
        self.blocks[k].transpose()
    }
}

/// Solves `e^L ∧ ⋆̄ e^I = ⟨e^L, e^I⟩ vol` for `⋆̄ e^I`, one row per `I`.
fn star_block(ext: &ExteriorAlgebra, metric: &MetricGram, o: Orientation, k: usize) -> DMatrix<f64> {
    let q = ext.q();
    let (rows, cols) = (ext.dim(k), ext.dim(q - k));
    let mut s = DMatrix::zeros(rows, cols);
    for (l_pos, &l) in ext.basis(k).iter().enumerate() {
        let comp = ext.complement(l);
        let eps = ext.complement_sign(l);
        let j = ext.position(comp);
        if metric.is_identity() {
            // signed permutation: only I = L contributes
            let sign = i64::from(eps) * if o == Orientation::Positive { 1 } else { -1 };
            s[(l_pos, j)] = sign as f64;
        } else {
            let gram = metric.gram(k);
            for i in 0..rows {
                s[(i, j)] = o.sign() * metric.volume() * gram[(l_pos, i)] * f64::from(eps);
            }
        }
    }
    s
}

/// `S_k` for the metric `g` and orientation; see [`StarTable`].
pub fn star_basis(g: &DMatrix<f64>, orientation: Orientation, k: usize) -> Result<DMatrix<f64>> {
    let metric = MetricGram::new(g.clone())?;
    if k > metric.q() {
        return Err(Error::DegreeOutOfRange {
            degree: k,
            q: metric.q(),
        });
    }
    let ext = ExteriorAlgebra::new(metric.q())?;
    Ok(star_block(&ext, &metric, orientation, k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(ix: &[usize]) -> MultiIndex {
        MultiIndex::new(ix).unwrap()
    }

    #[test]
    fn wedge_examples() {
        let ext = ExteriorAlgebra::new(3).unwrap();
        assert_eq!(ext.wedge_basis(mi(&[0]), mi(&[1])).unwrap(), Some((1, mi(&[0, 1]))));
        assert_eq!(ext.wedge_basis(mi(&[1]), mi(&[0])).unwrap(), Some((-1, mi(&[0, 1]))));
        assert_eq!(ext.wedge_basis(mi(&[0]), mi(&[0])).unwrap(), None);
        assert!(ext.wedge_basis(mi(&[3]), mi(&[0])).is_err());
    }

    #[test]
    fn contract_examples() {
        let ext = ExteriorAlgebra::new(3).unwrap();
        assert_eq!(ext.contract_basis(0, mi(&[0, 1])).unwrap(), Some((1, mi(&[1]))));
        assert_eq!(ext.contract_basis(1, mi(&[0, 1])).unwrap(), Some((-1, mi(&[0]))));
        assert_eq!(ext.contract_basis(2, mi(&[0, 1])).unwrap(), None);
        assert!(ext.contract_basis(3, mi(&[0])).is_err());
    }

    #[test]
    fn multi_index_rejects_unsorted() {
        assert!(MultiIndex::new(&[1, 0]).is_err());
        assert!(MultiIndex::new(&[1, 1]).is_err());
        assert_eq!(mi(&[0, 2]).to_string(), "e1^e3");
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let ext = ExteriorAlgebra::new(4).unwrap();
        let b: Vec<Vec<usize>> = ext.basis(2).iter().map(|m| m.indices().collect()).collect();
        assert_eq!(
            b,
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        for k in 0..=4 {
            for (p, &m) in ext.basis(k).iter().enumerate() {
                assert_eq!(ext.position(m), p);
            }
        }
    }

    #[test]
    fn star_q2_identity() {
        let s0 = star_basis(&DMatrix::identity(2, 2), Orientation::Positive, 0).unwrap();
        let s1 = star_basis(&DMatrix::identity(2, 2), Orientation::Positive, 1).unwrap();
        let s2 = star_basis(&DMatrix::identity(2, 2), Orientation::Positive, 2).unwrap();
        // ⋆̄1 = e1^e2, ⋆̄e1 = e2, ⋆̄e2 = -e1, ⋆̄(e1^e2) = 1
        assert_eq!(s0, DMatrix::from_row_slice(1, 1, &[1.0]));
        assert_eq!(s1, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        assert_eq!(s2, DMatrix::from_row_slice(1, 1, &[1.0]));
        let table = StarTable::new(&MetricGram::identity(2), Orientation::Positive).unwrap();
        let twice = table.action(1) * table.action(1);
        assert_eq!(twice, -DMatrix::<f64>::identity(2, 2));
    }

    #[test]
    fn star_squared_on_functions_q3() {
        let table = StarTable::new(&MetricGram::identity(3), Orientation::Positive).unwrap();
        assert_eq!(table.action(3) * table.action(0), DMatrix::<f64>::identity(1, 1));
    }

    #[test]
    fn induced_gram_diagonal_q2() {
        let (a, b) = (2.0, 5.0);
        let g = DMatrix::from_row_slice(2, 2, &[a, 0.0, 0.0, b]);
        let g1 = induced_gram(&g, 1).unwrap();
        let g2 = induced_gram(&g, 2).unwrap();
        // explicit 2x2 determinant of diag(1/a, 1/b)
        let det = (1.0 / a) * (1.0 / b) - 0.0 * 0.0;
        assert!((g1[(0, 0)] - 1.0 / a).abs() < 1e-15);
        assert!((g1[(1, 1)] - 1.0 / b).abs() < 1e-15);
        assert!((g2[(0, 0)] - det).abs() < 1e-15);
        assert_eq!(
            induced_gram(&DMatrix::identity(3, 3), 2).unwrap(),
            DMatrix::identity(3, 3)
        );
    }

    #[test]
    fn non_spd_metric_is_rejected() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(MetricGram::new(g), Err(Error::NonSpdMetric(_))));
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(MetricGram::new(g), Err(Error::NonSpdMetric(_))));
    }

    #[test]
    fn star_defining_relation_general_metric() {
        let g = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.5, -0.2, 0.1, -0.2, 1.0]);
        let metric = MetricGram::new(g).unwrap();
        let ext = ExteriorAlgebra::new(3).unwrap();
        for o in [Orientation::Positive, Orientation::Negative] {
            let table = StarTable::new(&metric, o).unwrap();
            for k in 0..=3 {
                for (a_pos, &a) in ext.basis(k).iter().enumerate() {
                    for (b_pos, _) in ext.basis(k).iter().enumerate() {
                        // α ∧ ⋆̄β coefficient on e^{123}
                        let mut top = 0.0;
                        for (j, &bj) in ext.basis(3 - k).iter().enumerate() {
                            if let Some((s, _)) = ext.wedge_basis(a, bj).unwrap() {
                                top += f64::from(s) * table.block(k)[(b_pos, j)];
                            }
                        }
                        let expect = metric.gram(k)[(a_pos, b_pos)] * metric.volume() * o.sign();
                        assert!((top - expect).abs() < 1e-12, "k={k} a={a_pos} b={b_pos}");
                    }
                }
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn close(a: &DMatrix<f64>, b: &DMatrix<f64>) -> bool {
            let scale = a.amax().max(b.amax()).max(1.0);
            (a - b).amax() <= 1e-12 * scale
        }

        fn spd(q: usize) -> impl Strategy<Value = DMatrix<f64>> {
            prop::collection::vec(-0.6f64..0.6, q * q).prop_map(move |v| {
                let l = DMatrix::from_row_slice(q, q, &v);
                &l * l.transpose() + DMatrix::identity(q, q)
            })
        }

        fn covector(q: usize) -> impl Strategy<Value = Vec<f64>> {
            prop::collection::vec(-2.0f64..2.0, q)
        }

        proptest! {
            #[test]
            fn wedge_is_graded_commutative(
                (q, a, b) in (1usize..=5).prop_flat_map(|q| (Just(q), covector(q), covector(q))),
            ) {
                let ext = ExteriorAlgebra::new(q).unwrap();
                for k in 0..q.saturating_sub(1) {
                    let ab = ext.wedge_matrix(&a, k + 1) * ext.wedge_matrix(&b, k);
                    let ba = ext.wedge_matrix(&b, k + 1) * ext.wedge_matrix(&a, k);
                    prop_assert!(close(&ab, &(-ba)));
                    let aa = ext.wedge_matrix(&a, k + 1) * ext.wedge_matrix(&a, k);
                    prop_assert!(aa.amax() < 1e-12);
                }
            }

            #[test]
            fn contraction_is_adjoint_of_wedge(
                (q, g, a) in (1usize..=4).prop_flat_map(|q| (Just(q), spd(q), covector(q))),
            ) {
                let ext = ExteriorAlgebra::new(q).unwrap();
                let metric = MetricGram::new(g).unwrap();
                let sharp = metric.sharp(&a);
                for k in 0..q {
                    let lhs = ext.wedge_matrix(&a, k).transpose() * metric.gram(k + 1);
                    let rhs = metric.gram(k) * ext.contract_matrix(&sharp, k + 1);
                    prop_assert!(close(&lhs, &rhs), "k={}", k);
                }
            }

            #[test]
            fn contraction_through_star(
                (q, g, a) in (1usize..=4).prop_flat_map(|q| (Just(q), spd(q), covector(q))),
                negative in any::<bool>(),
            ) {
                let o = if negative { Orientation::Negative } else { Orientation::Positive };
                let ext = ExteriorAlgebra::new(q).unwrap();
                let metric = MetricGram::new(g).unwrap();
                let table = StarTable::new(&metric, o).unwrap();
                let sharp = metric.sharp(&a);
                for k in 1..=q {
                    let sign = if (q * (k + 1)) % 2 == 0 { 1.0 } else { -1.0 };
                    let through = table.action(q - k + 1) * ext.wedge_matrix(&a, q - k) * table.action(k) * sign;
                    prop_assert!(close(&ext.contract_matrix(&sharp, k), &through), "k={}", k);
                }
            }

            #[test]
            fn star_squares_to_sign(
                (q, g) in (1usize..=5).prop_flat_map(|q| (Just(q), spd(q))),
            ) {
                let metric = MetricGram::new(g).unwrap();
                let table = StarTable::new(&metric, Orientation::Positive).unwrap();
                for k in 0..=q {
                    let sign = if (k * (q - k)) % 2 == 0 { 1.0 } else { -1.0 };
                    let twice = table.action(q - k) * table.action(k);
                    let n = twice.nrows();
                    prop_assert!(close(&twice, &(DMatrix::identity(n, n) * sign)));
                }
            }
        }
    }
}
