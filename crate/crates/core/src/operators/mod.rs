//! Assembled operators between fixed degrees, and the identity suite.

mod identities;

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;
use std::str::FromStr;

use nalgebra_sparse::{CooMatrix, CsrMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use identities::{conjugation_residual, identity_suite, IdentityReport, IdentityResidual};

use crate::error::{Error, Result};
use crate::linalg::{add_scaled, adjoint, c64, scale, spectral_norm, zero_sparse, SparseMatrix};
use crate::model::{BasicComplex, WeightPower};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OperatorName {
    #[serde(rename = "d")]
    D,
    #[serde(rename = "wedge_kappa")]
    WedgeKappa,
    #[serde(rename = "contract_kappa")]
    ContractKappa,
    #[serde(rename = "star")]
    Star,
    #[serde(rename = "delta_b")]
    DeltaB,
    #[serde(rename = "delta_T")]
    DeltaT,
    #[serde(rename = "d_tilde")]
    DTilde,
    #[serde(rename = "delta_tilde")]
    DeltaTilde,
    #[serde(rename = "D_b")]
    Dirac,
    #[serde(rename = "Delta_b")]
    LaplacianB,
    #[serde(rename = "Delta_tilde")]
    LaplacianTilde,
    #[serde(rename = "star_involution")]
    StarInvolution,
}

impl OperatorName {
    pub const ALL: [OperatorName; 12] = [
        OperatorName::D,
        OperatorName::WedgeKappa,
        OperatorName::ContractKappa,
        OperatorName::Star,
        OperatorName::DeltaB,
        OperatorName::DeltaT,
        OperatorName::DTilde,
        OperatorName::DeltaTilde,
        OperatorName::Dirac,
        OperatorName::LaplacianB,
        OperatorName::LaplacianTilde,
        OperatorName::StarInvolution,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OperatorName::D => "d",
            OperatorName::WedgeKappa => "wedge_kappa",
            OperatorName::ContractKappa => "contract_kappa",
            OperatorName::Star => "star",
            OperatorName::DeltaB => "delta_b",
            OperatorName::DeltaT => "delta_T",
            OperatorName::DTilde => "d_tilde",
            OperatorName::DeltaTilde => "delta_tilde",
            OperatorName::Dirac => "D_b",
            OperatorName::LaplacianB => "Delta_b",
            OperatorName::LaplacianTilde => "Delta_tilde",
            OperatorName::StarInvolution => "star_involution",
        }
    }

    /// Target degrees of the block on `k`-forms, in row order; empty when the
    /// target space is zero.
    pub fn codomain(self, k: usize, q: usize) -> Vec<usize> {
        let up = (k < q).then_some(k + 1);
        let down = k.checked_sub(1);
        match self {
            OperatorName::D | OperatorName::WedgeKappa | OperatorName::DTilde => up.into_iter().collect(),
            OperatorName::ContractKappa | OperatorName::DeltaB | OperatorName::DeltaT | OperatorName::DeltaTilde => {
                down.into_iter().collect()
            }
            OperatorName::Star | OperatorName::StarInvolution => vec![q - k],
            OperatorName::Dirac => down.into_iter().chain(up).collect(),
            OperatorName::LaplacianB | OperatorName::LaplacianTilde => vec![k],
        }
    }

    pub fn needs_orientation(self) -> bool {
        matches!(
            self,
            OperatorName::Star
                | OperatorName::StarInvolution
                | OperatorName::DeltaB
                | OperatorName::DeltaT
                | OperatorName::DeltaTilde
                | OperatorName::Dirac
                | OperatorName::LaplacianB
                | OperatorName::LaplacianTilde
        )
    }
}

impl fmt::Display for OperatorName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OperatorName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let alias = match s {
            "twisted-laplacian" => Some(OperatorName::LaplacianTilde),
            "basic-laplacian" => Some(OperatorName::LaplacianB),
            "dirac" => Some(OperatorName::Dirac),
            "twisted-d" => Some(OperatorName::DTilde),
            "twisted-delta" => Some(OperatorName::DeltaTilde),
            "basic-delta" => Some(OperatorName::DeltaB),
            _ => None,
        };
        alias
            .or_else(|| OperatorName::ALL.into_iter().find(|n| n.as_str() == s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown operator {s:?}")))
    }
}

/// One assembled operator block.
#[derive(Clone, Debug)]
pub struct OperatorBlock {
    /// `None` for derived blocks such as adjoints.
    pub name: Option<OperatorName>,
    pub label: String,
    pub domain: usize,
    pub codomain: Vec<usize>,
    pub matrix: SparseMatrix,
    pub fingerprint: String,
}

impl OperatorBlock {
    /// `self ∘ inner`, checked for matching degrees and models.
    pub fn compose(&self, inner: &OperatorBlock) -> Result<OperatorBlock> {
        if self.fingerprint != inner.fingerprint {
            return Err(Error::ModelMismatch);
        }
        if inner.codomain != [self.domain] {
            return Err(Error::DegreeMismatch {
                left: self.label.clone(),
                right: inner.label.clone(),
            });
        }
        Ok(OperatorBlock {
            name: None,
            label: format!("{} . {}", self.label, inner.label),
            domain: inner.domain,
            codomain: self.codomain.clone(),
            matrix: &self.matrix * &inner.matrix,
            fingerprint: self.fingerprint.clone(),
        })
    }
}

fn sign(exponent: usize) -> f64 {
    if exponent % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `i^exponent`.
pub fn i_power(exponent: usize) -> Complex64 {
    match exponent % 4 {
        0 => c64(1.0),
        1 => Complex64::new(0.0, 1.0),
        2 => c64(-1.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn vstack(blocks: &[&SparseMatrix]) -> SparseMatrix {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let mut coo = CooMatrix::new(rows, cols);
    let mut offset = 0;
    for b in blocks {
        for (i, j, v) in b.triplet_iter() {
            coo.push(offset + i, j, *v);
        }
        offset += b.nrows();
    }
    CsrMatrix::from(&coo)
}

/// Memoizing assembler over one discretized model.
pub struct Assembler<'a> {
    cx: &'a BasicComplex,
    cache: RefCell<HashMap<(OperatorName, usize), Rc<SparseMatrix>>>,
}

impl<'a> Assembler<'a> {
    pub fn new(cx: &'a BasicComplex) -> Self {
        Assembler {
            cx,
            cache: RefCell::new(HashMap::new()),
        }
    }

    pub fn complex(&self) -> &BasicComplex {
        self.cx
    }

    /// The matrix of `name` on `k`-forms.
    pub fn matrix(&self, name: OperatorName, k: usize) -> Result<Rc<SparseMatrix>> {
        self.cx.check_degree(k)?;
        if name.needs_orientation() && !self.cx.oriented() {
            return Err(Error::NotOriented);
        }
        if let Some(m) = self.cache.borrow().get(&(name, k)) {
            return Ok(Rc::clone(m));
        }
        let m = Rc::new(self.build(name, k)?);
        self.cache.borrow_mut().insert((name, k), Rc::clone(&m));
        Ok(m)
    }

    fn build(&self, name: OperatorName, k: usize) -> Result<SparseMatrix> {
        let cx = self.cx;
        let q = cx.q();
        let half = c64(-0.5);
        Ok(match name {
            OperatorName::D => cx.exterior_derivative(k),
            OperatorName::WedgeKappa => cx.wedge(cx.kappa_samples(), k),
            OperatorName::ContractKappa => cx.contract(cx.kappa_samples(), k),
            OperatorName::Star => cx.star(k)?,
            OperatorName::DeltaB => {
                if k == 0 {
                    return Ok(zero_sparse(0, cx.dim(0)));
                }
                let m = q - k;
                let twisted = add_scaled(
                    &*self.matrix(OperatorName::D, m)?,
                    c64(-1.0),
                    &*self.matrix(OperatorName::WedgeKappa, m)?,
                );
                let inner = &twisted * &*self.matrix(OperatorName::Star, k)?;
                let outer = &*self.matrix(OperatorName::Star, m + 1)? * &inner;
                scale(&outer, c64(sign(q * (k + 1) + 1)))
            }
            OperatorName::DeltaT => add_scaled(
                &*self.matrix(OperatorName::DeltaB, k)?,
                c64(-1.0),
                &*self.matrix(OperatorName::ContractKappa, k)?,
            ),
            OperatorName::DTilde => add_scaled(
                &*self.matrix(OperatorName::D, k)?,
                half,
                &*self.matrix(OperatorName::WedgeKappa, k)?,
            ),
            OperatorName::DeltaTilde => add_scaled(
                &*self.matrix(OperatorName::DeltaB, k)?,
                half,
                &*self.matrix(OperatorName::ContractKappa, k)?,
            ),
            OperatorName::Dirac => {
                let down = self.matrix(OperatorName::DeltaTilde, k)?;
                let up = self.matrix(OperatorName::DTilde, k)?;
                vstack(&[&down, &up])
            }
            OperatorName::LaplacianB => self.laplacian(OperatorName::D, OperatorName::DeltaB, k)?,
            OperatorName::LaplacianTilde => self.laplacian(OperatorName::DTilde, OperatorName::DeltaTilde, k)?,
            OperatorName::StarInvolution => {
                if q % 2 != 0 {
                    return Err(Error::OddCodimension(q));
                }
                scale(
                    &*self.matrix(OperatorName::Star, k)?,
                    i_power(k * k.saturating_sub(1) + q / 2),
                )
            }
        })
    }

    fn laplacian(&self, up: OperatorName, down: OperatorName, k: usize) -> Result<SparseMatrix> {
        let q = self.cx.q();
        let n = self.cx.dim(k);
        let mut out = zero_sparse(n, n);
        if k > 0 {
            out = &out + &(&*self.matrix(up, k - 1)? * &*self.matrix(down, k)?);
        }
        if k < q {
            out = &out + &(&*self.matrix(down, k + 1)? * &*self.matrix(up, k)?);
        }
        Ok(out)
    }

    /// Weighted spectral norm of a matrix from degree `from` to degree `to`.
    pub fn weighted_norm(&self, m: &SparseMatrix, from: Option<usize>, to: Option<usize>) -> f64 {
        if m.nrows() == 0 || m.ncols() == 0 || m.nnz() == 0 {
            return 0.0;
        }
        let (Some(from), Some(to)) = (from, to) else { return 0.0 };
        let left = self.cx.weight_matrix(to, WeightPower::Sqrt);
        let right = self.cx.weight_matrix(from, WeightPower::InvSqrt);
        spectral_norm(&(&left * &(m * &right)))
    }

    /// Adjoint for the μ-weighted inner products, `W_from⁻¹ Aᴴ W_to`.
    pub fn adjoint_matrix(&self, m: &SparseMatrix, from: usize, to: usize) -> SparseMatrix {
        let left = self.cx.weight_matrix(from, WeightPower::Inverse);
        let right = self.cx.weight_matrix(to, WeightPower::Full);
        &left * &(&adjoint(m) * &right)
    }
}

/// Assembles `name` on `k`-forms of a validated model.
pub fn assemble(cx: &BasicComplex, name: OperatorName, k: usize) -> Result<OperatorBlock> {
    let matrix = Assembler::new(cx).matrix(name, k)?;
    Ok(OperatorBlock {
        name: Some(name),
        label: name.as_str().to_string(),
        domain: k,
        codomain: name.codomain(k, cx.q()),
        matrix: (*matrix).clone(),
        fingerprint: cx.fingerprint().to_string(),
    })
}

/// Adjoint of a single-target block for the μ-weighted inner product.
pub fn mu_adjoint(cx: &BasicComplex, block: &OperatorBlock) -> Result<OperatorBlock> {
    if block.fingerprint != cx.fingerprint() {
        return Err(Error::ModelMismatch);
    }
    if cx.weight().iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(Error::InvalidParameter("weight must be positive".into()));
    }
    let label = format!("mu_adjoint({})", block.label);
    let asm = Assembler::new(cx);
    match block.codomain.as_slice() {
        [to] => Ok(OperatorBlock {
            name: None,
            label,
            domain: *to,
            codomain: vec![block.domain],
            matrix: asm.adjoint_matrix(&block.matrix, block.domain, *to),
            fingerprint: block.fingerprint.clone(),
        }),
        [] => Err(Error::InvalidParameter(format!(
            "{} has a zero target space",
            block.label
        ))),
        _ => Err(Error::InvalidParameter(format!(
            "{} has a stacked target; adjoin its blocks",
            block.label
        ))),
    }
}
