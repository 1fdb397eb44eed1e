//! Spectra of the basic and twisted Laplacians, harmonic counts and the
//! checks built on them.

mod checks;
mod cohomology;

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use checks::{
    conformal_compare, duality_check, hodge_split, rough_laplacian, weitzenbock_flat, weitzenbock_functions,
    ConformalReport, DualityReport, HodgeSplit, WeitzenbockReport,
};
pub use cohomology::{cohomology, cohomology_report, signature, CohomologyReport};

use crate::error::{Error, Result};
use crate::linalg::{c64, hermitian_eigen, hermitian_part, matvec, to_dense, SparseMatrix};
use crate::model::{BasicComplex, WeightPower};
use crate::operators::{Assembler, OperatorName};

/// Environment variable overriding the identity-suite tolerance (a float).
pub const TOLERANCE_ENV: &str = "FOLHODGE_TOL_OVERRIDE";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Eigenvalues below `harmonic · max(1, λ_max)` count as harmonic.
    pub harmonic: f64,
    /// Width factor of the exclusion band around the harmonic threshold.
    pub band: f64,
    /// Relative gap below which neighbouring eigenvalues form one cluster.
    pub cluster: f64,
    /// Largest acceptable relative residual of an operator identity.
    pub identity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            harmonic: 1e-8,
            band: 10.0,
            cluster: 1e-7,
            identity: 1e-10,
        }
    }
}

impl Tolerances {
    /// Defaults with the identity tolerance taken from [`TOLERANCE_ENV`] when set.
    pub fn from_env() -> Result<Self> {
        match std::env::var(TOLERANCE_ENV) {
            Ok(s) => Tolerances::default().with_overrides(&s),
            Err(_) => Ok(Tolerances::default()),
        }
    }

    /// Applies `key=value` pairs separated by commas; a bare number sets `identity`.
    pub fn with_overrides(mut self, overrides: &str) -> Result<Self> {
        for part in overrides.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part.split_once('=').unwrap_or(("identity", part));
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("tolerance override {part:?}")))?;
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "tolerance override {part:?} must be positive"
                )));
            }
            match key.trim() {
                "harmonic" => self.harmonic = v,
                "band" => self.band = v,
                "cluster" => self.cluster = v,
                "identity" => self.identity = v,
                other => return Err(Error::InvalidParameter(format!("unknown tolerance {other:?}"))),
            }
        }
        Ok(self)
    }
}

/// Eigen-decomposition of a Laplacian block in μ-orthonormal coordinates.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub operator: OperatorName,
    pub degree: usize,
    /// All eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors for the leading eigenvalues, as forms (μ-orthonormal columns).
    pub vectors: DMatrix<Complex64>,
    /// `‖L v − λ v‖` for each kept unit eigenvector, against the operator
    /// before Hermitian projection.
    pub residuals: Vec<f64>,
    /// Relative size of the non-Hermitian part that was discarded.
    pub hermitian_defect: f64,
    pub threshold: f64,
    pub tolerances: Tolerances,
}

impl Spectrum {
    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Number of eigenvalues below the harmonic threshold.
    pub fn harmonic_dimension(&self) -> usize {
        self.eigenvalues.iter().filter(|&&l| l < self.threshold).count()
    }

    /// True when no eigenvalue falls inside the band `[thr/band, thr·band)`.
    pub fn reliable(&self) -> bool {
        let band = self.tolerances.band;
        !self
            .eigenvalues
            .iter()
            .any(|&l| l >= self.threshold / band && l < self.threshold * band)
    }

    /// Harmonic counts at the lower and upper edges of the exclusion band.
    pub fn bracketing_counts(&self) -> (usize, usize) {
        let band = self.tolerances.band;
        let below = |t: f64| self.eigenvalues.iter().filter(|&&l| l < t).count();
        (below(self.threshold / band), below(self.threshold * band))
    }

    /// Eigenvalues nearest the threshold on either side, for diagnostics.
    pub fn threshold_neighbours(&self) -> (Option<f64>, Option<f64>) {
        let below = self.eigenvalues.iter().copied().rfind(|&l| l < self.threshold);
        let above = self.eigenvalues.iter().copied().find(|&l| l >= self.threshold);
        (below, above)
    }

    /// Index ranges of eigenvalue clusters among the first `count` values.
    pub fn clusters(&self, count: usize) -> Vec<std::ops::Range<usize>> {
        cluster_ranges(
            &self.eigenvalues[..count.min(self.eigenvalues.len())],
            self.tolerances.cluster,
        )
    }

    /// Leading eigenvalues with their multiplicities.
    pub fn multiplicities(&self, count: usize) -> Vec<(f64, usize)> {
        self.clusters(count)
            .into_iter()
            .map(|r| (self.eigenvalues[r.start], r.len()))
            .collect()
    }
}

/// Groups sorted values whose successive gap is below `relative · max(1, |λ|)`.
pub fn cluster_ranges(values: &[f64], relative: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        let split = i == values.len() || values[i] - values[i - 1] > relative * values[i].abs().max(1.0);
        if split {
            out.push(start..i);
            start = i;
        }
    }
    out
}

/// `W_to^{1/2} m W_from^{-1/2}`, the matrix of `m` between μ-orthonormal coordinates.
pub fn symmetrized(cx: &BasicComplex, m: &SparseMatrix, from: usize, to: usize) -> SparseMatrix {
    let left = cx.weight_matrix(to, WeightPower::Sqrt);
    let right = cx.weight_matrix(from, WeightPower::InvSqrt);
    &left * &(m * &right)
}

/// Maps μ-orthonormal coordinates back to form coefficients.
pub fn to_forms(cx: &BasicComplex, k: usize, y: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let inv = cx.weight_matrix(k, WeightPower::InvSqrt);
    let mut out = DMatrix::zeros(y.nrows(), y.ncols());
    for j in 0..y.ncols() {
        out.set_column(j, &matvec(&inv, &y.column(j).into_owned()));
    }
    out
}

/// Whether every coefficient of the model is constant on the grid, so that
/// operators commute with grid translations.
pub fn translation_invariant(cx: &BasicComplex) -> bool {
    let q = cx.q();
    let w = cx.weight();
    let flat_weight = w.iter().all(|&x| (x - w[0]).abs() <= 1e-15 * w[0].abs());
    let kappa = cx.kappa_samples();
    let flat_kappa = (0..cx.points())
        .all(|p| (0..q).all(|i| (kappa[p * q + i] - kappa[i]).abs() <= 1e-15 * kappa[i].abs().max(1.0)));
    flat_weight && flat_kappa
}

fn check_laplacian(name: OperatorName) -> Result<()> {
    match name {
        OperatorName::LaplacianB | OperatorName::LaplacianTilde => Ok(()),
        other => Err(Error::InvalidParameter(format!(
            "spectra are available for Laplacians only, not {other}"
        ))),
    }
}

/// Spectrum of `name` on `k`-forms, keeping eigenvectors for the first `keep` values.
pub fn spectrum(cx: &BasicComplex, name: OperatorName, k: usize, keep: usize, tol: Tolerances) -> Result<Spectrum> {
    check_laplacian(name)?;
    let asm = Assembler::new(cx);
    let op = asm.matrix(name, k)?;
    let dim = cx.dim(k);
    if keep > dim {
        return Err(Error::CountTooLarge { count: keep, dim });
    }
    let sym = symmetrized(cx, &op, k, k);
    let (eigenvalues, y, hermitian_defect) = if translation_invariant(cx) {
        fourier_eigen(cx, &sym, k, keep)
    } else {
        dense_eigen(&sym, keep)
    };
    let mut residuals = Vec::with_capacity(keep);
    for (j, &l) in eigenvalues.iter().take(keep).enumerate() {
        let col = y.column(j).into_owned();
        let r = matvec(&sym, &col) - &col * c64(l);
        residuals.push(r.norm());
    }
    let lmax = eigenvalues.last().copied().unwrap_or(0.0);
    Ok(Spectrum {
        operator: name,
        degree: k,
        vectors: to_forms(cx, k, &y),
        eigenvalues,
        residuals,
        hermitian_defect,
        threshold: tol.harmonic * lmax.max(1.0),
        tolerances: tol,
    })
}

fn dense_eigen(sym: &SparseMatrix, keep: usize) -> (Vec<f64>, DMatrix<Complex64>, f64) {
    let (h, defect) = hermitian_part(&to_dense(sym));
    let (values, vectors) = hermitian_eigen(h);
    let kept = vectors.columns(0, keep).into_owned();
    (values, kept, defect)
}

/// Block diagonalization over grid wavevectors for translation-invariant operators.
fn fourier_eigen(cx: &BasicComplex, sym: &SparseMatrix, k: usize, keep: usize) -> (Vec<f64>, DMatrix<Complex64>, f64) {
    let grid = cx.grid();
    let n = cx.exterior().dim(k);
    let points = grid.points();
    let axes = grid.axes();
    let phase = |p: usize, site: usize| -> Complex64 {
        let mut angle = 0.0;
        for a in 0..axes {
            let nn = grid.shape()[a];
            angle += (grid.index(p, a) * grid.index(site, a) % nn) as f64 / nn as f64;
        }
        Complex64::from_polar(1.0, TAU * angle)
    };
    // rows of the first grid point determine the whole operator
    let mut first_rows: Vec<Vec<(usize, Complex64)>> = Vec::with_capacity(n);
    for r in 0..n {
        let row = sym.row(r);
        first_rows.push(
            row.col_indices()
                .iter()
                .copied()
                .zip(row.values().iter().copied())
                .collect(),
        );
    }
    let mut pairs: Vec<(f64, usize, DVector<Complex64>)> = Vec::with_capacity(points * n);
    let mut skew = 0.0f64;
    let mut scale = 0.0f64;
    for p in 0..points {
        let mut block = DMatrix::<Complex64>::zeros(n, n);
        for (r, row) in first_rows.iter().enumerate() {
            for &(col, v) in row {
                let (site, comp) = (col / n, col % n);
                block[(r, comp)] += v * phase(p, site);
            }
        }
        skew = skew.max((&block - block.adjoint()).map(|z| z.norm()).max());
        scale = scale.max(block.map(|z| z.norm()).max());
        let (h, _) = hermitian_part(&block);
        let (values, vectors) = hermitian_eigen(h);
        for (j, l) in values.into_iter().enumerate() {
            pairs.push((l, p, vectors.column(j).into_owned()));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let norm = (points as f64).sqrt();
    let mut y = DMatrix::<Complex64>::zeros(points * n, keep);
    for (j, (_, p, w)) in pairs.iter().take(keep).enumerate() {
        for site in 0..points {
            let f = phase(*p, site) / c64(norm);
            for c in 0..n {
                y[(site * n + c, j)] = f * w[c];
            }
        }
    }
    let defect = if scale > 0.0 { 0.5 * skew / scale } else { 0.0 };
    (pairs.into_iter().map(|t| t.0).collect(), y, defect)
}
