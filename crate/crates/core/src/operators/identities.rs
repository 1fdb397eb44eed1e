//! Residuals of the operator identities, as relative weighted operator norms.

use std::collections::HashMap;
use std::fmt;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Assembler, OperatorName};
use crate::error::Result;
use crate::linalg::{add_scaled, c64, matvec, SparseMatrix};
use crate::model::spectral::fft_inverse;
use crate::model::{BasicComplex, CoframeModel, FourierSeries};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub identity: String,
    pub degree: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub fingerprint: String,
    pub entries: Vec<IdentityResidual>,
}

impl IdentityReport {
    pub fn max_residual(&self) -> f64 {
        self.entries.iter().map(|e| e.residual).fold(0.0, f64::max)
    }

    pub fn worst(&self) -> Option<&IdentityResidual> {
        self.entries.iter().max_by(|a, b| a.residual.total_cmp(&b.residual))
    }

    pub fn get(&self, identity: &str, degree: usize) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.identity == identity && e.degree == degree)
            .map(|e| e.residual)
    }

    pub fn identities(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.entries.iter().map(|e| e.identity.as_str()).collect();
        names.dedup();
        names
    }
}

impl fmt::Display for IdentityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<22} {:>6} {:>12}", "identity", "degree", "residual")?;
        for e in &self.entries {
            writeln!(f, "{:<22} {:>6} {:>12.3e}", e.identity, e.degree, e.residual)?;
        }
        write!(f, "max residual {:.3e}", self.max_residual())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum Factor {
    Op(OperatorName, usize),
    /// μ-adjoint of an operator block on the given degree.
    Adjoint(OperatorName, usize),
    Identity(usize),
}

struct Term {
    coef: f64,
    factors: Vec<Option<Factor>>,
}

fn term(coef: f64, factors: Vec<Option<Factor>>) -> Term {
    Term { coef, factors }
}

struct Suite<'a> {
    asm: Assembler<'a>,
    q: usize,
    norms: HashMap<Factor, f64>,
}

impl Suite<'_> {
    fn op(&self, name: OperatorName, k: Option<usize>) -> Option<Factor> {
        k.filter(|&k| k <= self.q).map(|k| Factor::Op(name, k))
    }

    /// `(from, to)` degrees; `to` is `None` when the target space is zero.
    fn degrees(&self, f: Factor) -> (usize, Option<usize>) {
        match f {
            Factor::Op(name, k) => (k, name.codomain(k, self.q).first().copied()),
            Factor::Adjoint(name, k) => {
                let to = name
                    .codomain(k, self.q)
                    .first()
                    .copied()
                    .expect("adjoint of a nonzero block");
                (to, Some(k))
            }
            Factor::Identity(k) => (k, Some(k)),
        }
    }

    fn matrix(&self, f: Factor) -> Result<SparseMatrix> {
        Ok(match f {
            Factor::Op(name, k) => (*self.asm.matrix(name, k)?).clone(),
            Factor::Adjoint(name, k) => {
                let m = self.asm.matrix(name, k)?;
                let to = self.degrees(Factor::Op(name, k)).1.expect("nonzero block");
                self.asm.adjoint_matrix(&m, k, to)
            }
            Factor::Identity(k) => {
                let cx = self.asm.complex();
                cx.multiply(&vec![c64(1.0); cx.points()], k)
            }
        })
    }

    fn norm(&mut self, f: Factor) -> Result<f64> {
        if let Some(&n) = self.norms.get(&f) {
            return Ok(n);
        }
        let (from, to) = self.degrees(f);
        let n = self.asm.weighted_norm(&self.matrix(f)?, Some(from), to);
        self.norms.insert(f, n);
        Ok(n)
    }

    /// Relative residual of `Σ coef · Π factors`, or `None` when every term
    /// maps into or through a zero space.
    fn residual(&mut self, terms: Vec<Term>) -> Result<Option<f64>> {
        let mut total: Option<(SparseMatrix, usize, usize)> = None;
        let mut scale = 0.0f64;
        for t in terms {
            let Some(factors) = t.factors.into_iter().collect::<Option<Vec<Factor>>>() else {
                continue;
            };
            let mut chain_ok = true;
            for w in factors.windows(2) {
                let (from_outer, _) = self.degrees(w[0]);
                let (_, to_inner) = self.degrees(w[1]);
                chain_ok &= to_inner == Some(from_outer);
            }
            let (_, to) = self.degrees(factors[0]);
            let (from, _) = self.degrees(*factors.last().expect("nonempty"));
            let Some(to) = to.filter(|_| chain_ok) else { continue };
            let mut product = self.matrix(*factors.last().expect("nonempty"))?;
            let mut bound = t.coef.abs();
            for &f in factors.iter().rev().skip(1) {
                product = &self.matrix(f)? * &product;
            }
            for &f in &factors {
                bound *= self.norm(f)?;
            }
            scale = scale.max(bound);
            total = Some(match total {
                None => (crate::linalg::scale(&product, c64(t.coef)), from, to),
                Some((acc, f0, t0)) => {
                    debug_assert_eq!((f0, t0), (from, to));
                    (add_scaled(&acc, c64(t.coef), &product), f0, t0)
                }
            });
        }
        let Some((r, from, to)) = total else { return Ok(None) };
        let norm = self.asm.weighted_norm(&r, Some(from), Some(to));
        Ok(Some(if scale > 0.0 { norm / scale } else { norm }))
    }
}

fn s(e: usize) -> f64 {
    if e % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Evaluates every operator identity on every degree of `cx`.
///
/// Star-dependent identities are skipped for unoriented models, and the
/// involution identities for odd codimension.
pub fn identity_suite(cx: &BasicComplex) -> Result<IdentityReport> {
    use OperatorName::*;
    let q = cx.q();
    let mut suite = Suite {
        asm: Assembler::new(cx),
        q,
        norms: HashMap::new(),
    };
    let mut entries = Vec::new();
    let oriented = cx.oriented();
    let even = q % 2 == 0;
    for k in 0..=q {
        let up = Some(k + 1);
        let down = k.checked_sub(1);
        let dual = Some(q - k);
        let mut record = |name: &str, r: Option<f64>| {
            if let Some(residual) = r {
                entries.push(IdentityResidual {
                    identity: name.into(),
                    degree: k,
                    residual,
                });
            }
        };
        let sk = suite.op(Star, Some(k));
        if oriented {
            let r = suite.residual(vec![
                term(1.0, vec![suite.op(ContractKappa, dual), sk]),
                term(-s(k), vec![suite.op(Star, up), suite.op(WedgeKappa, Some(k))]),
            ])?;
            record("kappa-contract-star", r);
            let r = suite.residual(vec![
                term(1.0, vec![suite.op(Star, down), suite.op(ContractKappa, Some(k))]),
                term(-s(k + 1), vec![suite.op(WedgeKappa, dual), sk]),
            ])?;
            record("star-kappa-contract", r);
            let r = suite.residual(vec![
                term(1.0, vec![suite.op(DeltaB, dual), sk]),
                term(-s(k + 1), vec![suite.op(Star, up), suite.op(D, Some(k))]),
                term(s(k + 1), vec![suite.op(Star, up), suite.op(WedgeKappa, Some(k))]),
            ])?;
            record("delta-b-star", r);
            let r = suite.residual(vec![
                term(1.0, vec![suite.op(Star, down), suite.op(DeltaB, Some(k))]),
                term(-s(k), vec![suite.op(D, dual), sk]),
                term(s(k), vec![suite.op(WedgeKappa, dual), sk]),
            ])?;
            record("star-delta-b", r);
            let r = suite.residual(vec![
                term(1.0, vec![suite.op(DeltaTilde, dual), sk]),
                term(-s(k + 1), vec![suite.op(Star, up), suite.op(DTilde, Some(k))]),
            ])?;
            record("delta-tilde-star", r);
            let r = suite.residual(vec![
                term(1.0, vec![suite.op(Star, down), suite.op(DeltaTilde, Some(k))]),
                term(-s(k), vec![suite.op(DTilde, dual), sk]),
            ])?;
            record("star-delta-tilde", r);
            let r = suite.residual(vec![
                term(1.0, vec![suite.op(Star, up), suite.op(DTilde, Some(k))]),
                term(-s(k + 1), vec![suite.op(DeltaTilde, dual), sk]),
            ])?;
            record("star-d-tilde", r);
            let r = suite.residual(vec![
                term(1.0, vec![suite.op(DTilde, dual), sk]),
                term(-s(k), vec![suite.op(Star, down), suite.op(DeltaTilde, Some(k))]),
            ])?;
            record("d-tilde-star", r);
        }
        let r = suite.residual(vec![term(1.0, vec![suite.op(D, up), suite.op(D, Some(k))])])?;
        record("d-squared", r);
        let r = suite.residual(vec![term(1.0, vec![suite.op(DTilde, up), suite.op(DTilde, Some(k))])])?;
        record("d-tilde-squared", r);
        if oriented {
            let r = suite.residual(vec![term(
                1.0,
                vec![suite.op(DeltaTilde, down), suite.op(DeltaTilde, Some(k))],
            )])?;
            record("delta-tilde-squared", r);
            let r = suite.residual(vec![
                term(1.0, vec![sk, suite.op(LaplacianTilde, Some(k))]),
                term(-1.0, vec![suite.op(LaplacianTilde, dual), sk]),
            ])?;
            record("star-laplacian", r);
            if even {
                let jk = suite.op(StarInvolution, Some(k));
                let r = suite.residual(vec![
                    term(1.0, vec![suite.op(StarInvolution, dual), jk]),
                    term(-1.0, vec![Some(Factor::Identity(k))]),
                ])?;
                record("involution-squared", r);
                let lower = suite.residual(vec![
                    term(1.0, vec![suite.op(StarInvolution, up), suite.op(DTilde, Some(k))]),
                    term(1.0, vec![suite.op(DeltaTilde, dual), jk]),
                ])?;
                let raise = suite.residual(vec![
                    term(1.0, vec![suite.op(StarInvolution, down), suite.op(DeltaTilde, Some(k))]),
                    term(1.0, vec![suite.op(DTilde, dual), jk]),
                ])?;
                let both = match (lower, raise) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    (a, b) => a.or(b),
                };
                record("involution-dirac", both);
            }
            if k < q {
                let r = suite.residual(vec![
                    term(1.0, vec![suite.op(DeltaTilde, up)]),
                    term(-1.0, vec![Some(Factor::Adjoint(DTilde, k))]),
                ])?;
                record("adjoint-d-tilde", r);
            }
        }
    }
    Ok(IdentityReport {
        fingerprint: cx.fingerprint().to_string(),
        entries,
    })
}

/// A random form whose Fourier modes satisfy `|m_a| ≤ N_a / 4` on every axis.
pub(crate) fn band_limited_probe(cx: &BasicComplex, k: usize, rng: &mut ChaCha8Rng) -> DVector<Complex64> {
    let grid = cx.grid();
    let n = cx.exterior().dim(k);
    let mut out = DVector::zeros(cx.dim(k));
    for comp in 0..n {
        let mut modes = vec![Complex64::default(); grid.points()];
        for (p, v) in modes.iter_mut().enumerate() {
            let inside = (0..grid.axes()).all(|a| {
                let i = grid.index(p, a);
                let nn = grid.shape()[a];
                let m = if i <= nn / 2 { i } else { nn - i };
                4 * m <= nn
            });
            if inside {
                *v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        fft_inverse(&mut modes, grid);
        for (p, v) in modes.into_iter().enumerate() {
            out[p * n + comp] = v;
        }
    }
    out
}

/// Checks `d̃' = e^{h/2} d̃ e^{-h/2}` between `model` and the model with `κ + dh`,
/// on band-limited probe forms in every degree. Returns the largest relative
/// residual `‖(d̃' − e^{h/2} d̃ e^{-h/2}) v‖ / (‖d̃'‖ ‖v‖)`.
pub fn conjugation_residual(model: &CoframeModel, h: &FourierSeries, probes: usize) -> Result<f64> {
    let h = h.without_mean();
    let base = BasicComplex::new(model.clone())?;
    let shifted = BasicComplex::new(model.with_kappa_shift(&h))?;
    let hs = base.grid().sample(&h);
    let up: Vec<Complex64> = hs.iter().map(|x| c64((0.5 * x).exp())).collect();
    let down: Vec<Complex64> = hs.iter().map(|x| c64((-0.5 * x).exp())).collect();
    let asm = Assembler::new(&base);
    let asm2 = Assembler::new(&shifted);
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0f0);
    let mut worst = 0.0f64;
    for k in 0..base.q() {
        let target = asm2.matrix(OperatorName::DTilde, k)?;
        let conj = &base.multiply(&up, k + 1) * &(&*asm.matrix(OperatorName::DTilde, k)? * &base.multiply(&down, k));
        let scale = asm2.weighted_norm(&target, Some(k), Some(k + 1)).max(f64::MIN_POSITIVE);
        for _ in 0..probes {
            let v = band_limited_probe(&base, k, &mut rng);
            let diff = matvec(&target, &v) - matvec(&conj, &v);
            let r = shifted.norm(k + 1, &diff) / (scale * shifted.norm(k, &v));
            worst = worst.max(r);
        }
    }
    Ok(worst)
}
