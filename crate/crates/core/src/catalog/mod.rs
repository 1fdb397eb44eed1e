//! Built-in models and the suspension bookkeeping.

mod suspension;

use std::collections::BTreeMap;

use nalgebra::DMatrix;

pub use suspension::{suspension_report, FiberPattern, LinearRelation, SuspensionInput, SuspensionReport};

use crate::error::{Error, Result};
use crate::exterior::Orientation;
use crate::model::{ActiveAxis, CoframeModel, FourierSeries, StructureConstant};

/// The catalog entries addressable by name.
pub const NAMES: [&str; 5] = [
    "carriere",
    "flat-torus",
    "carriere-product",
    "suspension-7.2",
    "suspension-7.3",
];

/// `(3 + √5) / 2`, the larger eigenvalue of a hyperbolic matrix of trace 3.
pub fn golden_lambda() -> f64 {
    (3.0 + 5f64.sqrt()) / 2.0
}

/// Larger root of `λ + 1/λ = trace`.
pub fn lambda_from_trace(trace: f64) -> Result<f64> {
    if !(trace.is_finite() && trace > 2.0) {
        return Err(Error::InvalidParameter(format!("trace must exceed 2, got {trace}")));
    }
    Ok((trace + (trace * trace - 4.0).sqrt()) / 2.0)
}

fn check_grid(n: usize) -> Result<()> {
    if n < 8 || n % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "grid size {n} must be even and at least 8"
        )));
    }
    Ok(())
}

fn identity_metric(q: usize) -> Vec<f64> {
    DMatrix::<f64>::identity(q, q).as_slice().to_vec()
}

/// The suspension flow of a hyperbolic torus automorphism with eigenvalue `λ`,
/// reduced to the coframe `(α, β)` over the periodic coordinate `t`.
pub fn make_carriere(lambda: f64, n: usize) -> Result<CoframeModel> {
    if !(lambda.is_finite() && lambda > 1.0) {
        return Err(Error::InvalidParameter(format!("lambda must exceed 1, got {lambda}")));
    }
    check_grid(n)?;
    let c = lambda.ln();
    Ok(CoframeModel {
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
        metric: identity_metric(2),
        kappa: BTreeMap::from([(0, FourierSeries::constant(1, c))]),
        orientation: Some(Orientation::Positive),
    })
}

/// The flat `q`-torus with unit periods and `κ = dh`.
pub fn make_flat_torus(q: usize, n: usize, h: &FourierSeries) -> Result<CoframeModel> {
    if q == 0 {
        return Err(Error::InvalidParameter("q must be at least 1".into()));
    }
    check_grid(n)?;
    if let Some(t) = h.terms().iter().find(|t| t.mode.len() != q) {
        return Err(Error::InvalidParameter(format!(
            "potential mode {:?} needs {q} entries",
            t.mode
        )));
    }
    let base = CoframeModel {
        q,
        structure: Vec::new(),
        active: (0..q)
            .map(|c| ActiveAxis {
                coframe: c,
                period: 1.0,
                grid: n,
            })
            .collect(),
        metric: identity_metric(q),
        kappa: BTreeMap::new(),
        orientation: Some(Orientation::Positive),
    };
    Ok(base.with_kappa_shift(h))
}

/// How the extra circle factors of [`make_carriere_product`] are discretized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CircleMode {
    /// Only invariant forms along each circle (no coordinate dependence).
    #[default]
    Invariant,
    /// Each circle carries its own periodic coordinate on `grid` points.
    Active { grid: usize },
}

/// Carrière's model times `m` flat circles, coframe `(α, β, θ_1, ..., θ_m)`.
pub fn make_carriere_product(lambda: f64, m: usize, n: usize, circles: CircleMode) -> Result<CoframeModel> {
    if m == 0 {
        return Err(Error::InvalidParameter("at least one extra circle is required".into()));
    }
    let mut model = make_carriere(lambda, n)?;
    let q = 2 + m;
    model.q = q;
    model.metric = identity_metric(q);
    if let CircleMode::Active { grid } = circles {
        check_grid(grid)?;
        model.active.extend((2..q).map(|c| ActiveAxis {
            coframe: c,
            period: 1.0,
            grid,
        }));
        model.kappa = BTreeMap::from([(0, FourierSeries::constant(model.active.len(), lambda.ln()))]);
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate;

    #[test]
    fn trace_three_gives_golden_lambda() {
        let l = lambda_from_trace(3.0).unwrap();
        assert!((l - golden_lambda()).abs() < 1e-15);
        assert!((l + 1.0 / l - 3.0).abs() < 1e-14);
        assert!(lambda_from_trace(2.0).is_err());
    }

    #[test]
    fn catalog_models_validate() {
        let h = FourierSeries::single(vec![1, 0], 0.0, 0.2);
        let models = [
            make_carriere(golden_lambda(), 32).unwrap(),
            make_carriere(2.0, 16).unwrap(),
            make_flat_torus(2, 16, &FourierSeries::zero()).unwrap(),
            make_flat_torus(2, 16, &h).unwrap(),
            make_flat_torus(1, 16, &FourierSeries::zero()).unwrap(),
            make_carriere_product(golden_lambda(), 1, 32, CircleMode::Invariant).unwrap(),
            make_carriere_product(golden_lambda(), 2, 32, CircleMode::Invariant).unwrap(),
            make_carriere_product(golden_lambda(), 1, 8, CircleMode::Active { grid: 8 }).unwrap(),
        ];
        for m in &models {
            let r = validate(m);
            assert!(r.passed(), "{}", r.summary());
        }
        assert_eq!(validate(&models[0]).taut, Some(false));
        assert_eq!(validate(&models[3]).taut, Some(true));
        assert_eq!(models[5].modular_form(), vec![golden_lambda().ln(), 0.0, 0.0]);
    }

    #[test]
    fn bad_parameters() {
        assert!(make_carriere(1.0, 16).is_err());
        assert!(make_carriere(2.0, 15).is_err());
        assert!(make_flat_torus(0, 16, &FourierSeries::zero()).is_err());
        assert!(make_carriere_product(2.0, 0, 16, CircleMode::Invariant).is_err());
    }
}
