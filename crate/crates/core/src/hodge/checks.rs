use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{spectrum, symmetrized, Spectrum, Tolerances};
use crate::error::{Error, Result};
use crate::linalg::{add_scaled, c64, dense_norm, matvec, to_dense, zero_sparse, SparseMatrix};
use crate::model::{BasicComplex, CoframeModel, FourierSeries, WeightPower};
use crate::operators::{Assembler, OperatorName};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityEntry {
    pub degree: usize,
    pub dual: usize,
    /// Largest `|λ_k − λ_{q−k}| / max(1, λ)` over the compared eigenvalues.
    pub eigenvalue_gap: f64,
    /// Largest relative eigen-residual of `⋆̄v` for the dual operator.
    pub vector_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub count: usize,
    pub entries: Vec<DualityEntry>,
}

impl DualityReport {
    pub fn max_eigenvalue_gap(&self) -> f64 {
        self.entries.iter().map(|e| e.eigenvalue_gap).fold(0.0, f64::max)
    }

    pub fn max_vector_residual(&self) -> f64 {
        self.entries.iter().map(|e| e.vector_residual).fold(0.0, f64::max)
    }
}

/// Compares the first `count` eigenvalues of the twisted Laplacian in degrees
/// `k` and `q − k`, and checks that `⋆̄` carries eigenvectors across.
pub fn duality_check(cx: &BasicComplex, count: usize, tol: Tolerances) -> Result<DualityReport> {
    let q = cx.q();
    let asm = Assembler::new(cx);
    let spectra: Vec<Spectrum> = (0..=q)
        .map(|k| spectrum(cx, OperatorName::LaplacianTilde, k, count.min(cx.dim(k)), tol))
        .collect::<Result<_>>()?;
    let mut entries = Vec::new();
    for k in 0..=q {
        let dual = q - k;
        let n = count.min(cx.dim(k)).min(cx.dim(dual));
        let gap = (0..n)
            .map(|i| {
                let (a, b) = (spectra[k].eigenvalues[i], spectra[dual].eigenvalues[i]);
                (a - b).abs() / a.abs().max(1.0)
            })
            .fold(0.0, f64::max);
        let star = asm.matrix(OperatorName::Star, k)?;
        let lap = asm.matrix(OperatorName::LaplacianTilde, dual)?;
        let mut worst = 0.0f64;
        for j in 0..n {
            let l = spectra[k].eigenvalues[j];
            let w = matvec(&star, &spectra[k].vectors.column(j).into_owned());
            let r = matvec(&lap, &w) - &w * c64(l);
            worst = worst.max(cx.norm(dual, &r) / (cx.norm(dual, &w) * l.abs().max(1.0)));
        }
        entries.push(DualityEntry {
            degree: k,
            dual,
            eigenvalue_gap: gap,
            vector_residual: worst,
        });
    }
    Ok(DualityReport { count, entries })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformalEntry {
    pub degree: usize,
    pub eigenvalue_gap: f64,
    /// Smallest `|⟨e^{h/2}v, v'⟩|` over simple eigenvalues (1 when there are none).
    pub simple_alignment: f64,
    /// Smallest principal cosine between matched eigenspaces of any multiplicity.
    pub subspace_alignment: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformalReport {
    pub count: usize,
    pub entries: Vec<ConformalEntry>,
}

impl ConformalReport {
    pub fn max_eigenvalue_gap(&self) -> f64 {
        self.entries.iter().map(|e| e.eigenvalue_gap).fold(0.0, f64::max)
    }

    pub fn min_simple_alignment(&self) -> f64 {
        self.entries.iter().map(|e| e.simple_alignment).fold(1.0, f64::min)
    }

    pub fn min_subspace_alignment(&self) -> f64 {
        self.entries.iter().map(|e| e.subspace_alignment).fold(1.0, f64::min)
    }
}

/// Compares the twisted spectra of `model` and of the model with `κ + dh`.
pub fn conformal_compare(
    model: &CoframeModel,
    h: &FourierSeries,
    count: usize,
    tol: Tolerances,
) -> Result<ConformalReport> {
    let h = h.without_mean();
    let base = BasicComplex::new(model.clone())?;
    let shifted = BasicComplex::new(model.with_kappa_shift(&h))?;
    let factor: Vec<Complex64> = base.grid().sample(&h).iter().map(|x| c64((0.5 * x).exp())).collect();
    let mut entries = Vec::new();
    for k in 0..=base.q() {
        let dim = base.dim(k);
        let keep = (count + 8).min(dim);
        let a = spectrum(&base, OperatorName::LaplacianTilde, k, keep, tol)?;
        let b = spectrum(&shifted, OperatorName::LaplacianTilde, k, keep, tol)?;
        let n = count.min(dim);
        let gap = (0..n)
            .map(|i| (a.eigenvalues[i] - b.eigenvalues[i]).abs() / a.eigenvalues[i].abs().max(1.0))
            .fold(0.0, f64::max);
        let conj = base.multiply(&factor, k);
        let mut simple = 1.0f64;
        let mut subspace = 1.0f64;
        for range in a.clusters(keep) {
            if range.start >= n || (range.end == keep && keep < dim) {
                continue;
            }
            let moved: Vec<DVector<Complex64>> = range
                .clone()
                .map(|j| matvec(&conj, &a.vectors.column(j).into_owned()))
                .collect();
            let overlap = DMatrix::from_fn(range.len(), range.len(), |i, j| {
                shifted.inner(k, &moved[i], &b.vectors.column(range.start + j).into_owned())
            });
            let cosine = overlap.singular_values().min();
            subspace = subspace.min(cosine);
            if range.len() == 1 {
                simple = simple.min(cosine);
            }
        }
        entries.push(ConformalEntry {
            degree: k,
            eigenvalue_gap: gap,
            simple_alignment: simple,
            subspace_alignment: subspace,
        });
    }
    Ok(ConformalReport { count, entries })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HodgeSplit {
    pub degree: usize,
    pub dim: usize,
    /// Rank of `d̃` into this degree.
    pub exact: usize,
    /// Rank of `δ̃` into this degree.
    pub coexact: usize,
    pub harmonic: usize,
    /// Largest spectral norm of the cross Gram matrices of the three subspaces.
    pub orthogonality: f64,
}

impl HodgeSplit {
    pub fn complete(&self) -> bool {
        self.exact + self.coexact + self.harmonic == self.dim
    }
}

fn range_basis(sym: &SparseMatrix, tol: Tolerances) -> DMatrix<Complex64> {
    let dense = to_dense(sym);
    if dense.is_empty() {
        return DMatrix::zeros(sym.nrows(), 0);
    }
    let svd = dense.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.max();
    let thr = tol.harmonic.sqrt() * smax.max(1.0);
    let cols: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] >= thr)
        .collect();
    DMatrix::from_columns(&cols.iter().map(|&i| u.column(i)).collect::<Vec<_>>())
}

/// Exact, coexact and harmonic parts of the `k`-forms for the twisted complex,
/// in μ-orthonormal coordinates.
pub fn hodge_split(cx: &BasicComplex, k: usize, tol: Tolerances) -> Result<HodgeSplit> {
    cx.check_degree(k)?;
    let q = cx.q();
    let dim = cx.dim(k);
    let asm = Assembler::new(cx);
    let exact = if k > 0 {
        range_basis(
            &symmetrized(cx, &*asm.matrix(OperatorName::DTilde, k - 1)?, k - 1, k),
            tol,
        )
    } else {
        DMatrix::zeros(dim, 0)
    };
    let coexact = if k < q {
        range_basis(
            &symmetrized(cx, &*asm.matrix(OperatorName::DeltaTilde, k + 1)?, k + 1, k),
            tol,
        )
    } else {
        DMatrix::zeros(dim, 0)
    };
    let full = spectrum(cx, OperatorName::LaplacianTilde, k, dim, tol)?;
    let h = full.harmonic_dimension();
    let root = to_dense(&cx.weight_matrix(k, WeightPower::Sqrt));
    let harmonic = &root * full.vectors.columns(0, h);
    let cross = |a: &DMatrix<Complex64>, b: &DMatrix<Complex64>| {
        if a.ncols() == 0 || b.ncols() == 0 {
            0.0
        } else {
            dense_norm(&(a.adjoint() * b))
        }
    };
    let orthogonality = cross(&exact, &coexact)
        .max(cross(&exact, &harmonic))
        .max(cross(&coexact, &harmonic));
    Ok(HodgeSplit {
        degree: k,
        dim,
        exact: exact.ncols(),
        coexact: coexact.ncols(),
        harmonic: h,
        orthogonality,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeitzenbockReport {
    /// Precondition residual (`‖δ_b κ‖ / ‖κ‖` for functions, 0 for the flat case).
    pub precondition: f64,
    /// Relative operator-norm residual per degree.
    pub residuals: Vec<(usize, f64)>,
}

impl WeitzenbockReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.1).fold(0.0, f64::max)
    }
}

/// `Δ̃⁰ = d*d + ¼|κ|²` on functions, valid when `δ_b κ = 0`.
pub fn weitzenbock_functions(cx: &BasicComplex) -> Result<WeitzenbockReport> {
    let asm = Assembler::new(cx);
    let q = cx.q();
    let kappa = cx.kappa_form();
    let delta_kappa = matvec(&*asm.matrix(OperatorName::DeltaB, 1)?, &kappa.coefficients);
    let kn = cx.norm(1, &kappa.coefficients);
    let precondition = if kn > 0.0 { cx.norm(0, &delta_kappa) / kn } else { 0.0 };
    let d0 = asm.matrix(OperatorName::D, 0)?;
    let rough = &asm.adjoint_matrix(&d0, 0, 1) * &*d0;
    let cov = cx.metric().covectors();
    let samples = cx.kappa_samples();
    let potential: Vec<Complex64> = (0..cx.points())
        .map(|p| {
            let k = &samples[p * q..(p + 1) * q];
            let mut s = 0.0;
            for i in 0..q {
                for j in 0..q {
                    s += k[i] * cov[(i, j)] * k[j];
                }
            }
            c64(0.25 * s)
        })
        .collect();
    let model = &rough + &cx.multiply(&potential, 0);
    let lap = asm.matrix(OperatorName::LaplacianTilde, 0)?;
    let diff = add_scaled(&lap, c64(-1.0), &model);
    let scale = asm.weighted_norm(&lap, Some(0), Some(0)).max(f64::MIN_POSITIVE);
    Ok(WeitzenbockReport {
        precondition,
        residuals: vec![(0, asm.weighted_norm(&diff, Some(0), Some(0)) / scale)],
    })
}

/// `−Σ g^{ab} ∂_a ∂_b`, acting componentwise on `k`-forms over the active axes.
pub fn rough_laplacian(cx: &BasicComplex, k: usize) -> Result<SparseMatrix> {
    cx.check_degree(k)?;
    let active = &cx.model().active;
    let cov = cx.metric().covectors();
    let n = cx.dim(k);
    let mut out = zero_sparse(n, n);
    for (a, ax) in active.iter().enumerate() {
        for (b, bx) in active.iter().enumerate() {
            let g = cov[(ax.coframe, bx.coframe)];
            if g != 0.0 {
                let term = &cx.partial(a, k)? * &cx.partial(b, k)?;
                out = add_scaled(&out, c64(-g), &term);
            }
        }
    }
    Ok(out)
}

/// `Δ̃ = ∇*∇` on every degree of a flat model (no structure constants, `κ = 0`).
pub fn weitzenbock_flat(cx: &BasicComplex) -> Result<WeitzenbockReport> {
    let model = cx.model();
    if !model.structure.iter().all(|s| s.value == 0.0) || cx.kappa_samples().iter().any(|&x| x != 0.0) {
        return Err(Error::InvalidParameter(
            "the flat Weitzenböck check needs vanishing structure constants and κ".into(),
        ));
    }
    if model.active.len() != model.q {
        return Err(Error::InvalidParameter(
            "the flat Weitzenböck check needs every coframe direction active".into(),
        ));
    }
    let asm = Assembler::new(cx);
    let mut residuals = Vec::new();
    for k in 0..=cx.q() {
        let lap = asm.matrix(OperatorName::LaplacianTilde, k)?;
        let diff = add_scaled(&lap, c64(-1.0), &rough_laplacian(cx, k)?);
        let scale = asm.weighted_norm(&lap, Some(k), Some(k)).max(f64::MIN_POSITIVE);
        residuals.push((k, asm.weighted_norm(&diff, Some(k), Some(k)) / scale));
    }
    Ok(WeitzenbockReport {
        precondition: 0.0,
        residuals,
    })
}
