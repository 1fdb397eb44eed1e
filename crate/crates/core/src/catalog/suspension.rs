//! Integer bookkeeping for suspensions over a base with known Betti numbers.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which invariant forms of the fiber foliation survive as basic classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FiberPattern {
    ConstantsOnly,
    ConstantsAndTransverseVolume,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuspensionInput {
    pub base_betti: Vec<u64>,
    pub pattern: FiberPattern,
    pub fiber_codim: usize,
    pub oriented: bool,
    pub taut: bool,
}

impl SuspensionInput {
    /// Named presets: `"7.2"` and `"7.3"`, both over a genus-two base.
    pub fn preset(name: &str) -> Result<Self> {
        let genus_two = vec![1, 4, 1];
        match name.trim_start_matches("suspension-") {
            "7.2" => Ok(SuspensionInput {
                base_betti: genus_two,
                pattern: FiberPattern::ConstantsOnly,
                fiber_codim: 1,
                oriented: false,
                taut: false,
            }),
            "7.3" => Ok(SuspensionInput {
                base_betti: genus_two,
                pattern: FiberPattern::ConstantsAndTransverseVolume,
                fiber_codim: 2,
                oriented: true,
                taut: false,
            }),
            other => Err(Error::InvalidParameter(format!("unknown suspension preset {other:?}"))),
        }
    }
}

/// `Σ coefficient · b̃_degree = rhs`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearRelation {
    pub terms: Vec<(i64, usize)>,
    pub rhs: i64,
}

impl fmt::Display for LinearRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, &(c, k)) in self.terms.iter().enumerate() {
            let mag = c.unsigned_abs();
            let coef = if mag == 1 { String::new() } else { mag.to_string() };
            match (n, c < 0) {
                (0, true) => write!(f, "-{coef}tb{k}")?,
                (0, false) => write!(f, "{coef}tb{k}")?,
                (_, true) => write!(f, " - {coef}tb{k}")?,
                (_, false) => write!(f, " + {coef}tb{k}")?,
            }
        }
        if self.terms.is_empty() {
            write!(f, "0")?;
        }
        write!(f, " = {}", self.rhs)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuspensionReport {
    pub q: usize,
    pub betti: Vec<u64>,
    pub euler: i64,
    /// Degrees whose twisted Betti number is forced to vanish.
    pub twisted_zero: Vec<usize>,
    /// Pairs of degrees with equal twisted Betti numbers.
    pub twisted_equal: Vec<(usize, usize)>,
    /// The Euler relation after substituting the constraints above.
    pub euler_relation: LinearRelation,
    /// Lower bounds `b̃_degree ≥ bound` implied by nonnegativity.
    pub lower_bounds: Vec<(usize, i64)>,
}

impl fmt::Display for SuspensionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let betti: Vec<String> = self.betti.iter().map(u64::to_string).collect();
        writeln!(f, "q         {}", self.q)?;
        writeln!(f, "betti     ({})", betti.join(", "))?;
        writeln!(f, "euler     {}", self.euler)?;
        for k in &self.twisted_zero {
            writeln!(f, "twisted   tb{k} = 0")?;
        }
        for (a, b) in &self.twisted_equal {
            writeln!(f, "twisted   tb{b} = tb{a}")?;
        }
        writeln!(f, "twisted   {}", self.euler_relation)?;
        for (k, b) in &self.lower_bounds {
            writeln!(f, "twisted   tb{k} >= {b}")?;
        }
        Ok(())
    }
}

/// Ordinary basic Betti numbers, Euler characteristic and the constraints on
/// the twisted Betti numbers of a suspension.
pub fn suspension_report(input: &SuspensionInput) -> Result<SuspensionReport> {
    if input.base_betti.is_empty() {
        return Err(Error::Suspension("base Betti numbers are empty".into()));
    }
    if input.fiber_codim == 0 {
        return Err(Error::Suspension("fiber codimension must be positive".into()));
    }
    if input.pattern == FiberPattern::ConstantsAndTransverseVolume && !input.oriented {
        return Err(Error::Suspension(
            "a transverse volume class requires a transversally oriented fiber".into(),
        ));
    }
    let base = &input.base_betti;
    let f = input.fiber_codim;
    let q = base.len() - 1 + f;
    let betti: Vec<u64> = (0..=q)
        .map(|k| {
            let mut b = base.get(k).copied().unwrap_or(0);
            if input.pattern == FiberPattern::ConstantsAndTransverseVolume && k >= f {
                b += base.get(k - f).copied().unwrap_or(0);
            }
            b
        })
        .collect();
    let parity = |k: usize| if k % 2 == 0 { 1i64 } else { -1 };
    let euler: i64 = betti.iter().enumerate().map(|(k, &b)| parity(k) * b as i64).sum();

    let twisted_zero: Vec<usize> = if input.taut { Vec::new() } else { vec![0, q] };
    let representative = |k: usize| if input.oriented { k.min(q - k) } else { k };
    let twisted_equal: Vec<(usize, usize)> = if input.oriented {
        (0..=q)
            .filter(|&k| k < q - k && !twisted_zero.contains(&k))
            .map(|k| (k, q - k))
            .collect()
    } else {
        Vec::new()
    };
    let mut coefficients = vec![0i64; q + 1];
    for k in (0..=q).filter(|k| !twisted_zero.contains(k)) {
        coefficients[representative(k)] += parity(k);
    }
    let terms: Vec<(i64, usize)> = (0..=q)
        .rev()
        .filter(|&k| coefficients[k] != 0)
        .map(|k| (coefficients[k], k))
        .collect();
    let rhs = euler;
    let mut lower_bounds = Vec::new();
    let negative: Vec<&(i64, usize)> = terms.iter().filter(|t| t.0 < 0).collect();
    let positive: Vec<&(i64, usize)> = terms.iter().filter(|t| t.0 > 0).collect();
    let single = match (rhs.signum(), negative.as_slice(), positive.as_slice()) {
        (-1, [only], _) => Some(**only),
        (1, _, [only]) => Some(**only),
        _ => None,
    };
    if let Some((c, k)) = single {
        let bound = (rhs.abs() + c.abs() - 1) / c.abs();
        lower_bounds.push((k, bound));
    }
    Ok(SuspensionReport {
        q,
        betti,
        euler,
        twisted_zero,
        twisted_equal,
        euler_relation: LinearRelation { terms, rhs },
        lower_bounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_codimension_three() {
        let r = suspension_report(&SuspensionInput::preset("7.2").unwrap()).unwrap();
        assert_eq!(r.betti, vec![1, 4, 1, 0]);
        assert_eq!(r.euler, -2);
        assert_eq!(
            r.euler_relation,
            LinearRelation {
                terms: vec![(1, 2), (-1, 1)],
                rhs: -2
            }
        );
        assert_eq!(r.lower_bounds, vec![(1, 2)]);
        assert_eq!(r.euler_relation.to_string(), "tb2 - tb1 = -2");
    }

    #[test]
    fn preset_codimension_four() {
        let r = suspension_report(&SuspensionInput::preset("suspension-7.3").unwrap()).unwrap();
        assert_eq!(r.betti, vec![1, 4, 2, 4, 1]);
        assert_eq!(r.euler, -4);
        assert_eq!(r.twisted_equal, vec![(1, 3)]);
        assert_eq!(
            r.euler_relation,
            LinearRelation {
                terms: vec![(1, 2), (-2, 1)],
                rhs: -4
            }
        );
        assert_eq!(r.lower_bounds, vec![(1, 2)]);
        assert_eq!(r.euler_relation.to_string(), "tb2 - 2tb1 = -4");
    }

    #[test]
    fn point_base() {
        let input = SuspensionInput {
            base_betti: vec![1],
            pattern: FiberPattern::ConstantsOnly,
            fiber_codim: 1,
            oriented: true,
            taut: true,
        };
        let r = suspension_report(&input).unwrap();
        assert_eq!(r.betti, vec![1, 0]);
        assert_eq!(r.euler, 1);
    }

    #[test]
    fn volume_needs_orientation() {
        let mut input = SuspensionInput::preset("7.3").unwrap();
        input.oriented = false;
        assert!(matches!(suspension_report(&input), Err(Error::Suspension(_))));
    }
}
