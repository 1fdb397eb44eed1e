//! The admitted discretization of a coframe model.
//!
//! A `k`-form is a vector of length `points · C(q,k)`, point-major: the entry
//! for grid point `p` and basis form `e^I` sits at `p · C(q,k) + position(I)`.

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use num_complex::Complex64;
use sha2::{Digest, Sha256};

use super::spectral::{derivative_matrix, least_squares_potential, Grid, Potential};
use super::{invariant_differential, io, validate, CoframeModel, FourierSeries, ValidationReport};
use crate::error::{Error, Result};
use crate::exterior::{ExteriorAlgebra, MetricGram, MultiIndex, StarTable};
use crate::linalg::{block_diagonal, c64, matvec, real_to_complex, spd_sqrt, SparseMatrix};

/// A degree-`k` element of the discretized basic complex.
#[derive(Clone, Debug, PartialEq)]
pub struct BasicForm {
    pub degree: usize,
    pub coefficients: DVector<Complex64>,
    pub fingerprint: String,
}

impl BasicForm {
    pub fn max_imaginary(&self) -> f64 {
        self.coefficients.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_real(&self) -> bool {
        self.max_imaginary() < 1e-12
    }
}

/// Powers of the pointwise weight `μ(p) · √det g / points · G_k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightPower {
    Full,
    Inverse,
    Sqrt,
    InvSqrt,
}

/// A validated model together with its grid, weight and pointwise tables.
#[derive(Clone, Debug)]
pub struct BasicComplex {
    model: CoframeModel,
    report: ValidationReport,
    ext: ExteriorAlgebra,
    metric: MetricGram,
    star: Option<StarTable>,
    grid: Grid,
    derivatives: Vec<DMatrix<Complex64>>,
    invariant_d: Vec<DMatrix<f64>>,
    kappa: Vec<f64>,
    potential: Vec<f64>,
    weight: Vec<f64>,
    gram_roots: Vec<(DMatrix<f64>, DMatrix<f64>)>,
    gram_inverse: Vec<DMatrix<f64>>,
    fingerprint: String,
}

/// Short SHA-256 fingerprint of the canonical model file.
pub fn fingerprint(model: &CoframeModel) -> String {
    let digest = Sha256::digest(io::to_json(model).as_bytes());
    hex::encode(&digest[..8])
}

impl BasicComplex {
    /// Validates `model` and builds its discretization.
    pub fn new(model: CoframeModel) -> Result<Self> {
        let report = validate(&model);
        if !report.passed() {
            return Err(Error::Validation(Box::new(report)));
        }
        let q = model.q;
        let ext = ExteriorAlgebra::new(q)?;
        let metric = MetricGram::new(model.metric_matrix())?;
        let star = model.orientation.map(|o| StarTable::new(&metric, o)).transpose()?;
        let grid = Grid::new(&model.active);
        let derivatives = model
            .active
            .iter()
            .map(|a| derivative_matrix(a.grid, a.period))
            .collect();
        let invariant_d = (0..=q)
            .map(|k| invariant_differential(&ext, &model.structure, k))
            .collect();
        let points = grid.points();
        let mut kappa = vec![0.0; points * q];
        for i in 0..q {
            for (p, v) in grid.sample(&model.kappa_component(i)).into_iter().enumerate() {
                kappa[p * q + i] = v;
            }
        }
        let modular = &report.modular;
        let shifted: Vec<Complex64> = kappa
            .iter()
            .enumerate()
            .map(|(n, &v)| c64(v - modular[n % q]))
            .collect();
        let pot = least_squares_potential(&shifted, &grid, &model.active, &metric);
        let potential: Vec<f64> = pot.h.iter().map(|z| z.re).collect();
        let weight = potential.iter().map(|h| (-h).exp()).collect();
        let gram_roots = (0..=q).map(|k| spd_sqrt(metric.gram(k))).collect();
        let gram_inverse = (0..=q)
            .map(|k| {
                metric
                    .gram(k)
                    .clone()
                    .try_inverse()
                    .expect("Gram matrices of an SPD metric are invertible")
            })
            .collect();
        let fingerprint = fingerprint(&model);
        Ok(BasicComplex {
            model,
            report,
            ext,
            metric,
            star,
            grid,
            derivatives,
            invariant_d,
            kappa,
            potential,
            weight,
            gram_roots,
            gram_inverse,
            fingerprint,
        })
    }

    pub fn model(&self) -> &CoframeModel {
        &self.model
    }

    pub fn report(&self) -> &ValidationReport {
        &self.report
    }

    pub fn exterior(&self) -> &ExteriorAlgebra {
        &self.ext
    }

    pub fn metric(&self) -> &MetricGram {
        &self.metric
    }

    pub fn star_table(&self) -> Result<&StarTable> {
        self.star.as_ref().ok_or(Error::NotOriented)
    }

    pub fn oriented(&self) -> bool {
        self.star.is_some()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn q(&self) -> usize {
        self.model.q
    }

    pub fn points(&self) -> usize {
        self.grid.points()
    }

    /// Dimension of the discrete `k`-forms; zero above the top degree.
    pub fn dim(&self, k: usize) -> usize {
        self.points() * self.ext.dim(k)
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn taut(&self) -> bool {
        self.report.taut == Some(true)
    }

    /// Samples of `κ`, `q` components per point.
    pub fn kappa_samples(&self) -> &[f64] {
        &self.kappa
    }

    pub fn kappa_at(&self, p: usize) -> &[f64] {
        let q = self.q();
        &self.kappa[p * q..(p + 1) * q]
    }

    /// Mean-zero `h` with `dh = κ − modular`.
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// The weight `μ = e^{-h}`.
    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    pub fn modular(&self) -> &[f64] {
        &self.report.modular
    }

    pub fn derivative(&self, axis: usize) -> Result<&DMatrix<Complex64>> {
        self.derivatives.get(axis).ok_or(Error::AxisNotActive(axis))
    }

    pub fn check_degree(&self, k: usize) -> Result<()> {
        if k > self.q() {
            return Err(Error::DegreeOutOfRange { degree: k, q: self.q() });
        }
        Ok(())
    }

    pub fn zero_form(&self, k: usize) -> BasicForm {
        self.wrap(k, DVector::zeros(self.dim(k)))
    }

    pub fn wrap(&self, k: usize, coefficients: DVector<Complex64>) -> BasicForm {
        BasicForm {
            degree: k,
            coefficients,
            fingerprint: self.fingerprint.clone(),
        }
    }

    /// A form whose `e^I` component at each point is `f(coordinates, I)`.
    pub fn form_from_fn(&self, k: usize, f: impl Fn(&[f64], MultiIndex) -> Complex64) -> BasicForm {
        let basis = self.ext.basis(k);
        let n = basis.len();
        let mut v = DVector::zeros(self.dim(k));
        for p in 0..self.points() {
            let x = self.grid.coordinates(p);
            for (j, &mi) in basis.iter().enumerate() {
                v[p * n + j] = f(&x, mi);
            }
        }
        self.wrap(k, v)
    }

    pub fn function(&self, f: &FourierSeries) -> BasicForm {
        let vals = self.grid.sample(f);
        self.wrap(0, DVector::from_iterator(vals.len(), vals.into_iter().map(c64)))
    }

    /// `κ` as a one-form.
    pub fn kappa_form(&self) -> BasicForm {
        self.wrap(
            1,
            DVector::from_iterator(self.kappa.len(), self.kappa.iter().map(|&v| c64(v))),
        )
    }

    /// Exterior derivative from degree `k` to `k + 1`.
    pub fn exterior_derivative(&self, k: usize) -> SparseMatrix {
        let (nr, nc) = (self.ext.dim(k + 1), self.ext.dim(k));
        let points = self.points();
        let mut coo = CooMatrix::new(points * nr, points * nc);
        if nr == 0 || nc == 0 {
            return CsrMatrix::from(&coo);
        }
        let inv = &self.invariant_d[k];
        for p in 0..points {
            for (ci, &mi) in self.ext.basis(k).iter().enumerate() {
                for r in 0..nr {
                    if inv[(r, ci)] != 0.0 {
                        coo.push(p * nr + r, p * nc + ci, c64(inv[(r, ci)]));
                    }
                }
                for (a, axis) in self.model.active.iter().enumerate() {
                    let Some((s, out)) = self
                        .ext
                        .wedge_basis(MultiIndex::single(axis.coframe), mi)
                        .expect("in range")
                    else {
                        continue;
                    };
                    let row = p * nr + self.ext.position(out);
                    let stride = self.grid.stride(a);
                    let here = self.grid.index(p, a);
                    let base = p - here * stride;
                    let dm = &self.derivatives[a];
                    for m in 0..axis.grid {
                        let v = dm[(here, m)] * f64::from(s);
                        if v != Complex64::default() {
                            coo.push(row, (base + m * stride) * nc + ci, v);
                        }
                    }
                }
            }
        }
        CsrMatrix::from(&coo)
    }

    /// Componentwise derivative along active axis `axis` on `k`-forms.
    pub fn partial(&self, axis: usize, k: usize) -> Result<SparseMatrix> {
        let dm = self.derivative(axis)?;
        let n = self.ext.dim(k);
        let points = self.points();
        let stride = self.grid.stride(axis);
        let len = self.grid.shape()[axis];
        let mut coo = CooMatrix::new(points * n, points * n);
        for p in 0..points {
            let here = self.grid.index(p, axis);
            let base = p - here * stride;
            for m in 0..len {
                let v = dm[(here, m)];
                if v != Complex64::default() {
                    for c in 0..n {
                        coo.push(p * n + c, (base + m * stride) * n + c, v);
                    }
                }
            }
        }
        Ok(CsrMatrix::from(&coo))
    }

    /// `ω ∧ ·` from degree `k`, for a one-form given by `q` samples per point.
    pub fn wedge(&self, one_form: &[f64], k: usize) -> SparseMatrix {
        let q = self.q();
        let (nr, nc) = (self.ext.dim(k + 1), self.ext.dim(k));
        block_diagonal(self.points(), nr, nc, |p| {
            real_to_complex(&self.ext.wedge_matrix(&one_form[p * q..(p + 1) * q], k))
        })
    }

    /// `ω♯ ⌟ ·` from degree `k`, with `ω♯` the metric dual of the one-form.
    pub fn contract(&self, one_form: &[f64], k: usize) -> SparseMatrix {
        let q = self.q();
        let nr = if k == 0 { 0 } else { self.ext.dim(k - 1) };
        let nc = self.ext.dim(k);
        block_diagonal(self.points(), nr, nc, |p| {
            let sharp = self.metric.sharp(&one_form[p * q..(p + 1) * q]);
            real_to_complex(&self.ext.contract_matrix(&sharp, k))
        })
    }

    /// Transversal Hodge star from degree `k` to `q - k`.
    pub fn star(&self, k: usize) -> Result<SparseMatrix> {
        self.check_degree(k)?;
        let table = self.star_table()?;
        let block = real_to_complex(&table.action(k));
        Ok(block_diagonal(self.points(), block.nrows(), block.ncols(), |_| {
            block.clone()
        }))
    }

    /// Pointwise multiplication by a function on degree `k`.
    pub fn multiply(&self, f: &[Complex64], k: usize) -> SparseMatrix {
        let n = self.ext.dim(k);
        block_diagonal(self.points(), n, n, |p| DMatrix::identity(n, n) * f[p])
    }

    /// Block-diagonal weight matrix of the inner product on degree `k`.
    pub fn weight_matrix(&self, k: usize, power: WeightPower) -> SparseMatrix {
        let n = self.ext.dim(k);
        let base = self.metric.volume() / self.points() as f64;
        let block = match power {
            WeightPower::Full => self.metric.gram(k).clone(),
            WeightPower::Inverse => self.gram_inverse[k].clone(),
            WeightPower::Sqrt => self.gram_roots[k].0.clone(),
            WeightPower::InvSqrt => self.gram_roots[k].1.clone(),
        };
        let block = real_to_complex(&block);
        block_diagonal(self.points(), n, n, |p| {
            let w = base * self.weight[p];
            let s = match power {
                WeightPower::Full => w,
                WeightPower::Inverse => 1.0 / w,
                WeightPower::Sqrt => w.sqrt(),
                WeightPower::InvSqrt => 1.0 / w.sqrt(),
            };
            &block * c64(s)
        })
    }

    /// `⟨u, v⟩ = (1/points) Σ_p μ(p) √det g · u_pᴴ G_k v_p`.
    pub fn inner(&self, k: usize, u: &DVector<Complex64>, v: &DVector<Complex64>) -> Complex64 {
        let n = self.ext.dim(k);
        let g = self.metric.gram(k);
        let base = self.metric.volume() / self.points() as f64;
        let mut s = Complex64::default();
        for p in 0..self.points() {
            let mut local = Complex64::default();
            for i in 0..n {
                for j in 0..n {
                    local += u[p * n + i].conj() * g[(i, j)] * v[p * n + j];
                }
            }
            s += local * (base * self.weight[p]);
        }
        s
    }

    pub fn norm(&self, k: usize, u: &DVector<Complex64>) -> f64 {
        self.inner(k, u, u).re.max(0.0).sqrt()
    }

    /// Least-squares potential of a closed one-form.
    pub fn solve_exact_potential(&self, omega: &BasicForm) -> Result<Potential> {
        if omega.degree != 1 || omega.coefficients.len() != self.dim(1) {
            return Err(Error::DegreeOutOfRange {
                degree: omega.degree,
                q: self.q(),
            });
        }
        let d1 = self.exterior_derivative(1);
        let closed = self.norm(2, &matvec(&d1, &omega.coefficients));
        let wmax = self
            .model
            .active
            .iter()
            .map(|a| std::f64::consts::PI * a.grid as f64 / a.period)
            .fold(1.0, f64::max);
        let structure = self.model.structure.iter().map(|c| c.value.abs()).fold(0.0, f64::max);
        if closed > 1e-10 * self.norm(1, &omega.coefficients).max(1e-300) * (wmax + structure) {
            return Err(Error::NotClosed { residual: closed });
        }
        Ok(least_squares_potential(
            omega.coefficients.as_slice(),
            &self.grid,
            &self.model.active,
            &self.metric,
        ))
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::exterior::Orientation;
    use crate::linalg::to_dense;
    use crate::model::{ActiveAxis, StructureConstant};

    fn carriere(c: f64, n: usize) -> BasicComplex {
        BasicComplex::new(CoframeModel {
            q: 2,
            structure: vec![StructureConstant {
                target: 1,
                left: 0,
                right: 1,
                value: c,
            }],
            active: vec![ActiveAxis {
                coframe: 0,
                period: 1.0,
                grid: n,
            }],
            metric: vec![1.0, 0.0, 0.0, 1.0],
            kappa: BTreeMap::from([(0, FourierSeries::constant(1, c))]),
            orientation: Some(Orientation::Positive),
        })
        .unwrap()
    }

    #[test]
    fn carriere_d_on_one_forms() {
        // d(f α + g β) = (g' + c g) α∧β, oracle built from the sampled derivative
        let c = 0.9;
        let cx = carriere(c, 8);
        let d1 = to_dense(&cx.exterior_derivative(1));
        let dm = cx.derivative(0).unwrap();
        for j in 0..8 {
            for i in 0..8 {
                let expect_g = dm[(i, j)] + if i == j { c64(c) } else { c64(0.0) };
                assert!((d1[(i, 2 * j + 1)] - expect_g).norm() < 1e-14);
                assert!(d1[(i, 2 * j)].norm() < 1e-14);
            }
        }
    }

    #[test]
    fn constants_are_closed() {
        let cx = carriere(0.5, 16);
        let one = cx.function(&FourierSeries::constant(1, 1.0));
        let d0 = cx.exterior_derivative(0);
        assert!(matvec(&d0, &one.coefficients).camax() < 1e-13);
    }

    #[test]
    fn carriere_weight_is_flat() {
        let cx = carriere(0.5, 16);
        assert!(cx.weight().iter().all(|&w| (w - 1.0).abs() < 1e-15));
        assert!(!cx.taut());
    }

    #[test]
    fn potential_requires_closed_input() {
        let cx = carriere(0.5, 16);
        // f β with f = sin 2πt: d(fβ) = (f' + c f) α∧β ≠ 0
        let w = cx.form_from_fn(1, |x, mi| {
            if mi.contains(1) {
                c64((std::f64::consts::TAU * x[0]).sin())
            } else {
                c64(0.0)
            }
        });
        assert!(matches!(cx.solve_exact_potential(&w), Err(Error::NotClosed { .. })));
        let pot = cx.solve_exact_potential(&cx.kappa_form()).unwrap();
        assert!((pot.residual - 0.5).abs() < 1e-14);
    }

    #[test]
    fn fingerprint_is_stable() {
        assert_eq!(carriere(0.5, 16).fingerprint(), carriere(0.5, 16).fingerprint());
        assert_ne!(carriere(0.5, 16).fingerprint(), carriere(0.5, 32).fingerprint());
    }
}
