//! Real trigonometric series over the active coordinates.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

/// One term `cos·cos θ + sin·sin θ` with `θ = 2π Σ_a mode_a x_a / L_a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierTerm {
    pub mode: Vec<i64>,
    pub cos: f64,
    pub sin: f64,
}

/// A real function of the active coordinates, stored as a finite sum of
/// [`FourierTerm`]s. Terms are kept canonical: one term per `±mode` pair, with
/// the first nonzero mode entry positive, sorted by mode.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct FourierSeries {
    terms: Vec<FourierTerm>,
}

impl FourierSeries {
    pub fn zero() -> Self {
        FourierSeries::default()
    }

    pub fn constant(axes: usize, value: f64) -> Self {
        FourierSeries::from_terms(vec![FourierTerm {
            mode: vec![0; axes],
            cos: value,
            sin: 0.0,
        }])
    }

    pub fn single(mode: Vec<i64>, cos: f64, sin: f64) -> Self {
        FourierSeries::from_terms(vec![FourierTerm { mode, cos, sin }])
    }

    /// Canonicalizes: folds `-mode` onto `mode`, merges duplicates, drops exact zeros.
    pub fn from_terms(terms: Vec<FourierTerm>) -> Self {
        let mut merged: BTreeMap<Vec<i64>, (f64, f64)> = BTreeMap::new();
        for t in terms {
            let flip = t.mode.iter().find(|&&n| n != 0).is_some_and(|&n| n < 0);
            let (mode, sin) = if flip {
                (t.mode.iter().map(|n| -n).collect(), -t.sin)
            } else {
                (t.mode, t.sin)
            };
            let zero_mode = mode.iter().all(|&n| n == 0);
            let e = merged.entry(mode).or_insert((0.0, 0.0));
            e.0 += t.cos;
            if !zero_mode {
                e.1 += sin;
            }
        }
        let terms = merged
            .into_iter()
            .filter(|(_, (c, s))| *c != 0.0 || *s != 0.0)
            .map(|(mode, (cos, sin))| FourierTerm { mode, cos, sin })
            .collect();
        FourierSeries { terms }
    }

    pub fn terms(&self) -> &[FourierTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &[f64], periods: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let theta: f64 = t
                    .mode
                    .iter()
                    .zip(x)
                    .zip(periods)
                    .map(|((&n, &xa), &l)| TAU * n as f64 * xa / l)
                    .sum();
                t.cos * theta.cos() + t.sin * theta.sin()
            })
            .sum()
    }

    /// Exact partial derivative along `axis`.
    pub fn derivative(&self, axis: usize, periods: &[f64]) -> Self {
        let terms = self
            .terms
            .iter()
            .filter_map(|t| {
                let w = TAU * *t.mode.get(axis)? as f64 / periods[axis];
                Some(FourierTerm {
                    mode: t.mode.clone(),
                    cos: w * t.sin,
                    sin: -w * t.cos,
                })
            })
            .collect();
        FourierSeries::from_terms(terms)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let terms = self.terms.iter().map(|t| FourierTerm {
            mode: t.mode.clone(),
            cos: factor * t.cos,
            sin: factor * t.sin,
        });
        FourierSeries::from_terms(terms.collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        FourierSeries::from_terms(self.terms.iter().chain(&other.terms).cloned().collect())
    }

    pub fn mean(&self) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.mode.iter().all(|&n| n == 0))
            .map(|t| t.cos)
            .sum()
    }

    pub fn without_mean(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.mode.iter().any(|&n| n != 0))
            .cloned()
            .collect();
        FourierSeries { terms }
    }

    /// Largest absolute coefficient, a cheap sup-norm bound up to the term count.
    pub fn max_coefficient(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.cos.abs().max(t.sin.abs()))
            .fold(0.0, f64::max)
    }

    /// Sum of absolute coefficients, an upper bound for the sup norm.
    pub fn coefficient_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.cos.abs() + t.sin.abs()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_folding() {
        let s = FourierSeries::from_terms(vec![
            FourierTerm {
                mode: vec![-1],
                cos: 1.0,
                sin: 2.0,
            },
            FourierTerm {
                mode: vec![1],
                cos: 0.5,
                sin: 0.0,
            },
        ]);
        assert_eq!(
            s.terms(),
            &[FourierTerm {
                mode: vec![1],
                cos: 1.5,
                sin: -2.0
            }]
        );
        let x = [0.3];
        let direct = (TAU * -0.3f64).cos() + 2.0 * (TAU * -0.3f64).sin() + 0.5 * (TAU * 0.3f64).cos();
        assert!((s.eval(&x, &[1.0]) - direct).abs() < 1e-14);
    }

    #[test]
    fn derivative_of_sine() {
        let s = FourierSeries::single(vec![1, 0], 0.0, 1.0);
        let ds = s.derivative(0, &[1.0, 1.0]);
        assert_eq!(
            ds.terms(),
            &[FourierTerm {
                mode: vec![1, 0],
                cos: TAU,
                sin: 0.0
            }]
        );
        assert!(s.derivative(1, &[1.0, 1.0]).is_zero());
    }

    #[test]
    fn mean_and_zero() {
        let s = FourierSeries::constant(1, 2.0).add(&FourierSeries::single(vec![2], 1.0, 0.0));
        assert_eq!(s.mean(), 2.0);
        assert_eq!(s.without_mean().mean(), 0.0);
        assert!(s.add(&s.scaled(-1.0)).is_zero());
    }
}
