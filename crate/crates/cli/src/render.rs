use std::fmt::{self, Write as _};

use folhodge::hodge::{CohomologyReport, ConformalReport, DualityReport};
use folhodge::model::ValidationReport;
use folhodge::operators::IdentityReport;
use folhodge::report::SpectrumResult;
use serde::Serialize;

#[derive(Serialize)]
pub struct VerifyBody {
    pub passed: bool,
    pub tolerance: f64,
    pub max_residual: f64,
    pub validation: ValidationReport,
    pub identities: IdentityReport,
}

impl VerifyBody {
    pub fn new(validation: ValidationReport, identities: IdentityReport, tolerance: f64) -> Self {
        let max_residual = identities.max_residual();
        VerifyBody {
            passed: max_residual < tolerance,
            tolerance,
            max_residual,
            validation,
            identities,
        }
    }
}

impl fmt::Display for VerifyBody {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}\n", self.validation)?;
        writeln!(f, "{}", self.identities)?;
        writeln!(
            f,
            "tolerance {:.1e}: {}",
            self.tolerance,
            if self.passed { "pass" } else { "FAIL" }
        )
    }
}

#[derive(Serialize)]
pub struct SpectraBody<'a> {
    pub spectra: &'a [SpectrumResult],
}

#[derive(Serialize)]
pub struct CheckBody<'a, R> {
    pub passed: bool,
    pub tolerance: f64,
    #[serde(flatten)]
    pub report: &'a R,
}

fn pass(p: bool) -> &'static str {
    if p {
        "pass"
    } else {
        "FAIL"
    }
}

pub fn betti(r: &CohomologyReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "method       {}", r.method);
    let _ = writeln!(s, "grid         {:?}", r.grid);
    let _ = writeln!(s, "{:<6} {:>6} {:>8}", "degree", "betti", "twisted");
    for k in 0..=r.q {
        let _ = writeln!(s, "{:<6} {:>6} {:>8}", k, r.betti[k], r.twisted[k]);
    }
    let _ = writeln!(s, "euler        {} (twisted {})", r.euler, r.twisted_euler);
    let _ = writeln!(s, "taut         {}", r.taut);
    match r.signature {
        Some(sig) => {
            let _ = writeln!(s, "signature    {sig}");
        }
        None => {
            let _ = writeln!(s, "signature    -");
        }
    }
    let _ = writeln!(s, "reliable     {} (refined {})", r.reliable, r.refined);
    s
}

pub fn spectra(results: &[SpectrumResult]) -> String {
    let mut s = String::new();
    for r in results {
        let _ = writeln!(
            s,
            "{} degree {} (dimension {}, harmonic {}, reliable {})",
            r.operator, r.degree, r.dimension, r.harmonic_dimension, r.reliable
        );
        for (i, (l, res)) in r.eigenvalues.iter().zip(&r.residuals).enumerate() {
            let _ = writeln!(s, "  {i:>4}  {l:>22.12}  {res:.2e}");
        }
    }
    s
}

pub fn duality(b: &CheckBody<'_, DualityReport>) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<6} {:<4} {:>14} {:>14}",
        "degree", "dual", "value gap", "vector resid"
    );
    for e in &b.report.entries {
        let _ = writeln!(
            s,
            "{:<6} {:<4} {:>14.3e} {:>14.3e}",
            e.degree, e.dual, e.eigenvalue_gap, e.vector_residual
        );
    }
    let _ = writeln!(s, "tolerance {:.1e}: {}", b.tolerance, pass(b.passed));
    s
}

pub fn conformal(b: &CheckBody<'_, ConformalReport>) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<6} {:>14} {:>14} {:>14}",
        "degree", "value gap", "simple align", "subspace align"
    );
    for e in &b.report.entries {
        let _ = writeln!(
            s,
            "{:<6} {:>14.3e} {:>14.12} {:>14.12}",
            e.degree, e.eigenvalue_gap, e.simple_alignment, e.subspace_alignment
        );
    }
    let _ = writeln!(s, "tolerance {:.1e}: {}", b.tolerance, pass(b.passed));
    s
}
