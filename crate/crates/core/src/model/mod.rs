//! Coframe models of basic complexes and their validation gates.

mod discrete;
mod fourier;
pub mod io;
pub mod spectral;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use discrete::{fingerprint, BasicComplex, BasicForm, WeightPower};
pub use fourier::{FourierSeries, FourierTerm};
use spectral::{least_squares_potential, wavenumber, Grid};

use crate::exterior::{sort_with_sign, ExteriorAlgebra, MetricGram, Orientation, MAX_CODIM};

/// `d e^target += value · e^left ∧ e^right` (0-based, `left < right`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StructureConstant {
    pub target: usize,
    pub left: usize,
    pub right: usize,
    pub value: f64,
}

/// A periodic coordinate `x` with `e_coframe = ∂/∂x`, sampled on `grid` points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActiveAxis {
    pub coframe: usize,
    pub period: f64,
    pub grid: usize,
}

/// Finite presentation of a reduced basic complex.
#[derive(Clone, Debug, PartialEq)]
pub struct CoframeModel {
    pub q: usize,
    pub structure: Vec<StructureConstant>,
    pub active: Vec<ActiveAxis>,
    /// Metric on frame vectors, row-major `q × q`.
    pub metric: Vec<f64>,
    /// Components of the mean curvature form by coframe index; absent means zero.
    pub kappa: BTreeMap<usize, FourierSeries>,
    /// `None` for models without a transverse orientation.
    pub orientation: Option<Orientation>,
}

impl CoframeModel {
    pub fn metric_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.q, self.q, &self.metric)
    }

    pub fn periods(&self) -> Vec<f64> {
        self.active.iter().map(|a| a.period).collect()
    }

    pub fn kappa_component(&self, i: usize) -> FourierSeries {
        self.kappa.get(&i).cloned().unwrap_or_default()
    }

    /// Antisymmetrized structure tensor `s[k][(i, j)]` with `d e^k = ½ Σ s^k_ij e^i ∧ e^j`.
    pub fn structure_tensor(&self) -> Vec<DMatrix<f64>> {
        let mut s = vec![DMatrix::zeros(self.q, self.q); self.q];
        for c in &self.structure {
            s[c.target][(c.left, c.right)] += c.value;
            s[c.target][(c.right, c.left)] -= c.value;
        }
        s
    }

    /// The constant one-form `Σ_j s^j_{ij} e^i`.
    pub fn modular_form(&self) -> Vec<f64> {
        let s = self.structure_tensor();
        (0..self.q).map(|i| (0..self.q).map(|j| s[j][(i, j)]).sum()).collect()
    }

    /// The same model with `κ` replaced by `κ + dh`; the mean of `h` is dropped.
    pub fn with_kappa_shift(&self, h: &FourierSeries) -> CoframeModel {
        let h = h.without_mean();
        let periods = self.periods();
        let mut out = self.clone();
        for (a, axis) in self.active.iter().enumerate() {
            let sum = out.kappa_component(axis.coframe).add(&h.derivative(a, &periods));
            if sum.is_zero() {
                out.kappa.remove(&axis.coframe);
            } else {
                out.kappa.insert(axis.coframe, sum);
            }
        }
        out
    }

    /// The same model with every grid size multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> CoframeModel {
        let mut out = self.clone();
        out.active.iter_mut().for_each(|a| a.grid *= factor);
        out
    }

    /// `dκ` computed exactly on the Fourier tables, keyed by `(i, j)` with `i < j`.
    pub fn kappa_differential(&self) -> BTreeMap<(usize, usize), FourierSeries> {
        let periods = self.periods();
        let mut out: BTreeMap<(usize, usize), FourierSeries> = BTreeMap::new();
        let mut push = |seq: [usize; 2], f: FourierSeries| {
            if let Some((s, mi)) = sort_with_sign(&seq) {
                let ix: Vec<usize> = mi.indices().collect();
                let e = out.entry((ix[0], ix[1])).or_default();
                *e = e.add(&f.scaled(f64::from(s)));
            }
        };
        for (&i, series) in &self.kappa {
            for (a, axis) in self.active.iter().enumerate() {
                push([axis.coframe, i], series.derivative(a, &periods));
            }
        }
        for c in &self.structure {
            push([c.left, c.right], self.kappa_component(c.target).scaled(c.value));
        }
        out
    }
}

/// Matrix of the invariant part of `d` from `Λ^k` to `Λ^{k+1}` (Leibniz rule on
/// the coframe with constant structure constants).
pub fn invariant_differential(ext: &ExteriorAlgebra, structure: &[StructureConstant], k: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(ext.dim(k + 1), ext.dim(k));
    if k >= ext.q() {
        return m;
    }
    for (col, &mi) in ext.basis(k).iter().enumerate() {
        let ix: Vec<usize> = mi.indices().collect();
        for (pos, &target) in ix.iter().enumerate() {
            let slot_sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
            for c in structure.iter().filter(|c| c.target == target) {
                let mut seq = ix[..pos].to_vec();
                seq.extend([c.left, c.right]);
                seq.extend(&ix[pos + 1..]);
                if let Some((s, out)) = sort_with_sign(&seq) {
                    m[(ext.position(out), col)] += slot_sign * f64::from(s) * c.value;
                }
            }
        }
    }
    m
}

/// Distinct reasons a model is refused.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureCode {
    BadCodimension,
    MalformedStructure,
    BadActiveAxis,
    BadGrid,
    NonSpdMetric,
    MalformedKappa,
    UnresolvedMode,
    DSquared,
    KappaNotClosed,
    NotRealizable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationFailure {
    pub code: FailureCode,
    pub message: String,
}

/// Outcome of [`validate`]. Residuals are `None` when a preceding structural
/// failure prevented their evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub failures: Vec<ValidationFailure>,
    pub metric_spd: bool,
    pub d_squared_residual: Option<f64>,
    pub d_kappa_residual: Option<f64>,
    pub realizability_residual: Option<f64>,
    pub taut_residual: Option<f64>,
    pub taut: Option<bool>,
    pub modular: Vec<f64>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn has(&self, code: FailureCode) -> bool {
        self.failures.iter().any(|f| f.code == code)
    }

    pub fn summary(&self) -> String {
        if self.failures.is_empty() {
            return "ok".into();
        }
        self.failures
            .iter()
            .map(|f| f.message.as_str())
            .collect::<Vec<_>>()
            .join("; ")
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |r: Option<f64>| r.map_or("-".to_string(), |v| format!("{:.3e}", v.abs()));
        writeln!(f, "metric spd        {}", self.metric_spd)?;
        writeln!(f, "d^2 residual      {}", show(self.d_squared_residual))?;
        writeln!(f, "d kappa residual  {}", show(self.d_kappa_residual))?;
        writeln!(f, "realizability     {}", show(self.realizability_residual))?;
        writeln!(f, "kappa exactness   {}", show(self.taut_residual))?;
        match self.taut {
            Some(t) => writeln!(f, "taut              {t}")?,
            None => writeln!(f, "taut              -")?,
        }
        write!(f, "status            {}", self.summary())
    }
}

struct Checker {
    failures: Vec<ValidationFailure>,
}

impl Checker {
    fn fail(&mut self, code: FailureCode, message: String) {
        self.failures.push(ValidationFailure { code, message });
    }
}

fn check_shape(model: &CoframeModel, ck: &mut Checker) {
    let q = model.q;
    if q == 0 || q > MAX_CODIM {
        ck.fail(FailureCode::BadCodimension, format!("q = {q} outside 1..={MAX_CODIM}"));
        return;
    }
    let mut seen = BTreeSet::new();
    for (n, c) in model.structure.iter().enumerate() {
        let bad = c.target >= q
            || c.left >= q
            || c.right >= q
            || c.left >= c.right
            || !c.value.is_finite()
            || !seen.insert((c.target, c.left, c.right));
        if bad {
            ck.fail(
                FailureCode::MalformedStructure,
                format!(
                    "structure[{n}]: entry ({}, {}, {}) must have distinct increasing indices in 1..={q}, finite value, no duplicates",
                    c.target + 1,
                    c.left + 1,
                    c.right + 1
                ),
            );
        }
    }
    let mut coframes = BTreeSet::new();
    for (n, a) in model.active.iter().enumerate() {
        if a.coframe >= q || !coframes.insert(a.coframe) {
            ck.fail(
                FailureCode::BadActiveAxis,
                format!("active[{n}]: coframe {} repeated or out of range", a.coframe + 1),
            );
        }
        if !(a.period.is_finite() && a.period > 0.0) {
            ck.fail(
                FailureCode::BadActiveAxis,
                format!("active[{n}]: period must be positive"),
            );
        }
        if a.grid < 8 || a.grid % 2 != 0 {
            ck.fail(
                FailureCode::BadGrid,
                format!("active[{n}]: grid size {} must be even and at least 8", a.grid),
            );
        }
    }
    if model.metric.len() != q * q {
        ck.fail(
            FailureCode::NonSpdMetric,
            format!("metric has {} entries, expected {}", model.metric.len(), q * q),
        );
    }
    for (&i, series) in &model.kappa {
        if i >= q {
            ck.fail(
                FailureCode::MalformedKappa,
                format!("kappa component {} out of range", i + 1),
            );
            continue;
        }
        for t in series.terms() {
            if t.mode.len() != model.active.len() || !t.cos.is_finite() || !t.sin.is_finite() {
                ck.fail(
                    FailureCode::MalformedKappa,
                    format!(
                        "kappa component {}: mode {:?} needs {} entries and finite coefficients",
                        i + 1,
                        t.mode,
                        model.active.len()
                    ),
                );
                continue;
            }
            for (a, &n) in t.mode.iter().enumerate() {
                if let Some(axis) = model.active.get(a) {
                    if 2 * n.unsigned_abs() as usize >= axis.grid {
                        ck.fail(
                            FailureCode::UnresolvedMode,
                            format!(
                                "kappa component {}: mode {n} on axis {} is not resolved by grid {}",
                                i + 1,
                                a + 1,
                                axis.grid
                            ),
                        );
                    }
                }
            }
        }
    }
}

/// Evaluates every admission gate of a model.
pub fn validate(model: &CoframeModel) -> ValidationReport {
    let mut ck = Checker { failures: Vec::new() };
    let mut report = ValidationReport {
        failures: Vec::new(),
        metric_spd: false,
        d_squared_residual: None,
        d_kappa_residual: None,
        realizability_residual: None,
        taut_residual: None,
        taut: None,
        modular: Vec::new(),
    };
    check_shape(model, &mut ck);
    if !ck.failures.is_empty() {
        report.failures = ck.failures;
        return report;
    }
    let q = model.q;
    let metric = match MetricGram::new(model.metric_matrix()) {
        Ok(m) => {
            report.metric_spd = true;
            Some(m)
        }
        Err(e) => {
            ck.fail(FailureCode::NonSpdMetric, e.to_string());
            None
        }
    };
    report.modular = model.modular_form();

    // d² = 0: active coframes must be closed and the invariant part must square to zero.
    let ext = ExteriorAlgebra::new(q).expect("q checked");
    let s_max = model.structure.iter().map(|c| c.value.abs()).fold(0.0, f64::max);
    let mut d2 = 0.0f64;
    for c in &model.structure {
        if model.active.iter().any(|a| a.coframe == c.target) {
            d2 = d2.max(c.value.abs());
        }
    }
    let ce: Vec<DMatrix<f64>> = (0..=q)
        .map(|k| invariant_differential(&ext, &model.structure, k))
        .collect();
    for k in 0..q.saturating_sub(1) {
        d2 = d2.max((&ce[k + 1] * &ce[k]).amax());
    }
    report.d_squared_residual = Some(d2);
    if d2 > 1e-12 * s_max.powi(2).max(1.0) {
        ck.fail(FailureCode::DSquared, format!("d^2 residual {d2:.3e}: structure constants violate the Jacobi identity or an active coframe is not closed"));
    }

    let dk = model.kappa_differential();
    let dk_res = dk.values().map(FourierSeries::coefficient_sum).fold(0.0, f64::max);
    report.d_kappa_residual = Some(dk_res);
    let kmax = model
        .kappa
        .values()
        .map(FourierSeries::coefficient_sum)
        .fold(0.0, f64::max);
    let wmax = model
        .active
        .iter()
        .map(|a| wavenumber(a.grid / 2, a.grid, a.period).abs())
        .fold(0.0, f64::max);
    if dk_res > 1e-12 * (kmax * (1.0 + wmax + s_max)).max(1.0) {
        ck.fail(
            FailureCode::KappaNotClosed,
            format!("kappa is not closed: d kappa residual {dk_res:.3e}"),
        );
    }

    if let (Some(metric), true) = (metric, ck.failures.is_empty()) {
        let grid = Grid::new(&model.active);
        let modular = &report.modular;
        let sample = |shift: &[f64]| -> Vec<Complex64> {
            let mut out = vec![Complex64::default(); grid.points() * q];
            for i in 0..q {
                let vals = grid.sample(&model.kappa_component(i));
                for (p, v) in vals.into_iter().enumerate() {
                    out[p * q + i] = Complex64::new(v - shift[i], 0.0);
                }
            }
            out
        };
        let realizable = least_squares_potential(&sample(modular), &grid, &model.active, &metric);
        report.realizability_residual = Some(realizable.residual);
        if !realizable.exact() {
            ck.fail(
                FailureCode::NotRealizable,
                format!(
                    "kappa minus the modular form is not exact (residual {:.3e})",
                    realizable.residual
                ),
            );
        }
        let exactness = least_squares_potential(&sample(&vec![0.0; q]), &grid, &model.active, &metric);
        report.taut_residual = Some(exactness.residual);
        report.taut = Some(exactness.exact());
    }
    report.failures = ck.failures;
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn carriere(c: f64, n: usize) -> CoframeModel {
        CoframeModel {
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
        }
    }

    #[test]
    fn carriere_passes_and_is_not_taut() {
        let c = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        let r = validate(&carriere(c, 16));
        assert!(r.passed(), "{}", r.summary());
        assert_eq!(r.taut, Some(false));
        assert_eq!(r.modular, vec![c, 0.0]);
        assert!(r.taut_residual.unwrap() > 0.9 * c);
    }

    #[test]
    fn flat_torus_passes_and_is_taut() {
        let m = CoframeModel {
            q: 2,
            structure: vec![],
            active: vec![
                ActiveAxis {
                    coframe: 0,
                    period: 1.0,
                    grid: 8,
                },
                ActiveAxis {
                    coframe: 1,
                    period: 1.0,
                    grid: 8,
                },
            ],
            metric: vec![1.0, 0.0, 0.0, 1.0],
            kappa: BTreeMap::new(),
            orientation: Some(Orientation::Positive),
        };
        let r = validate(&m);
        assert!(r.passed());
        assert_eq!(r.taut, Some(true));
        assert_eq!(m.modular_form(), vec![0.0, 0.0]);
        let shifted = m.with_kappa_shift(&FourierSeries::single(vec![1, 0], 0.0, 0.2));
        let r = validate(&shifted);
        assert!(r.passed(), "{}", r.summary());
        assert_eq!(r.taut, Some(true));
    }

    #[test]
    fn codimension_one_constant_kappa_is_not_realizable() {
        let m = CoframeModel {
            q: 1,
            structure: vec![],
            active: vec![ActiveAxis {
                coframe: 0,
                period: 1.0,
                grid: 16,
            }],
            metric: vec![1.0],
            kappa: BTreeMap::from([(0, FourierSeries::constant(1, 0.5))]),
            orientation: Some(Orientation::Positive),
        };
        let r = validate(&m);
        assert!(r.has(FailureCode::NotRealizable));
        assert!((r.realizability_residual.unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn distinct_failure_codes() {
        let mut m = carriere(1.0, 16);
        m.structure[0].left = 1;
        m.structure[0].right = 0;
        assert!(validate(&m).has(FailureCode::MalformedStructure));
        let mut m = carriere(1.0, 15);
        assert!(validate(&m).has(FailureCode::BadGrid));
        m.active[0].grid = 6;
        assert!(validate(&m).has(FailureCode::BadGrid));
        let mut m = carriere(1.0, 16);
        m.metric = vec![1.0, 2.0, 2.0, 1.0];
        let r = validate(&m);
        assert!(r.has(FailureCode::NonSpdMetric));
        assert!(r.summary().contains("metric"));
        let mut m = carriere(1.0, 16);
        m.kappa.insert(0, FourierSeries::single(vec![8], 1.0, 0.0));
        assert!(validate(&m).has(FailureCode::UnresolvedMode));
    }

    #[test]
    fn non_closed_kappa_is_rejected() {
        // κ = sin(2πx) e^2 on the flat torus has dκ = 2π cos(2πx) e^1 ∧ e^2.
        let mut m = carriere(0.0, 16);
        m.structure.clear();
        m.kappa = BTreeMap::from([(1, FourierSeries::single(vec![1], 0.0, 1.0))]);
        let r = validate(&m);
        assert!(r.has(FailureCode::KappaNotClosed));
        assert!(r.d_kappa_residual.unwrap() > 6.0);
    }

    #[test]
    fn jacobi_violation_is_rejected() {
        // d e^3 = e^1∧e^2 and d e^1 = e^1∧e^3 give d d e^3 = -e^1∧e^2∧e^3
        let m = CoframeModel {
            q: 3,
            structure: vec![
                StructureConstant {
                    target: 2,
                    left: 0,
                    right: 1,
                    value: 1.0,
                },
                StructureConstant {
                    target: 0,
                    left: 0,
                    right: 2,
                    value: 1.0,
                },
            ],
            active: vec![],
            metric: DMatrix::<f64>::identity(3, 3).as_slice().to_vec(),
            kappa: BTreeMap::new(),
            orientation: Some(Orientation::Positive),
        };
        let r = validate(&m);
        assert!(r.has(FailureCode::DSquared), "{r}");
    }

    #[test]
    fn active_coframe_must_be_closed() {
        let mut m = carriere(1.0, 16);
        m.structure[0].target = 0;
        m.kappa.clear();
        assert!(validate(&m).has(FailureCode::DSquared));
    }

    #[test]
    fn modular_form_of_product() {
        let c = 0.7;
        let mut m = carriere(c, 16);
        m.q = 3;
        m.metric = DMatrix::<f64>::identity(3, 3).as_slice().to_vec();
        assert_eq!(m.modular_form(), vec![c, 0.0, 0.0]);
    }

    #[test]
    fn invariant_differential_q2() {
        let ext = ExteriorAlgebra::new(2).unwrap();
        let s = [StructureConstant {
            target: 1,
            left: 0,
            right: 1,
            value: 2.0,
        }];
        let d1 = invariant_differential(&ext, &s, 1);
        assert_eq!(d1, DMatrix::from_row_slice(1, 2, &[0.0, 2.0]));
        assert_eq!(invariant_differential(&ext, &s, 0), DMatrix::zeros(2, 1));
    }
}
