use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{spectrum, symmetrized, Spectrum, Tolerances};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, hermitian_part, to_dense};
use crate::model::{BasicComplex, CoframeModel};
use crate::operators::{Assembler, OperatorName};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohomologyReport {
    pub fingerprint: String,
    pub q: usize,
    pub grid: Vec<usize>,
    pub oriented: bool,
    /// `"laplacian"` (harmonic counts) or `"rank"` (unoriented models).
    pub method: String,
    pub betti: Vec<usize>,
    pub twisted: Vec<usize>,
    pub euler: i64,
    pub twisted_euler: i64,
    pub taut: bool,
    /// Only for oriented models of even codimension.
    pub signature: Option<i64>,
    pub reliable: bool,
    /// Set when the grid was doubled to clear the threshold band.
    pub refined: bool,
    pub hermitian_defect: f64,
    /// Per degree, the nearest values below and above the threshold for the
    /// twisted operator (eigenvalues or squared singular values).
    pub margins: Vec<(Option<f64>, Option<f64>)>,
    /// Per degree, twisted harmonic counts at the two edges of the exclusion
    /// band (Laplacian method only); they differ where the count is ambiguous.
    pub brackets: Vec<(usize, usize)>,
}

fn euler(b: &[usize]) -> i64 {
    b.iter()
        .enumerate()
        .map(|(k, &x)| if k % 2 == 0 { x as i64 } else { -(x as i64) })
        .sum()
}

/// Harmonic counts on one grid; the result carries the reliability flag.
pub fn cohomology(cx: &BasicComplex, tol: Tolerances) -> Result<CohomologyReport> {
    let q = cx.q();
    let mut report = CohomologyReport {
        fingerprint: cx.fingerprint().to_string(),
        q,
        grid: cx.grid().shape().to_vec(),
        oriented: cx.oriented(),
        method: String::new(),
        betti: Vec::new(),
        twisted: Vec::new(),
        euler: 0,
        twisted_euler: 0,
        taut: cx.taut(),
        signature: None,
        reliable: true,
        refined: false,
        hermitian_defect: 0.0,
        margins: Vec::new(),
        brackets: Vec::new(),
    };
    if cx.oriented() {
        report.method = "laplacian".into();
        let keep_vectors = q % 2 == 0;
        let mut twisted_spectra = Vec::new();
        for k in 0..=q {
            let basic = spectrum(cx, OperatorName::LaplacianB, k, 0, tol)?;
            let keep = if keep_vectors { cx.dim(k) } else { 0 };
            let twisted = spectrum(cx, OperatorName::LaplacianTilde, k, keep, tol)?;
            report.betti.push(basic.harmonic_dimension());
            report.twisted.push(twisted.harmonic_dimension());
            report.reliable &= basic.reliable() && twisted.reliable();
            report.hermitian_defect = report
                .hermitian_defect
                .max(basic.hermitian_defect)
                .max(twisted.hermitian_defect);
            report.margins.push(twisted.threshold_neighbours());
            report.brackets.push(twisted.bracketing_counts());
            twisted_spectra.push(twisted);
        }
        if keep_vectors {
            report.signature = Some(signature(cx, &twisted_spectra)?);
        }
    } else {
        report.method = "rank".into();
        let asm = Assembler::new(cx);
        let mut ranks = Vec::new();
        for name in [OperatorName::D, OperatorName::DTilde] {
            let mut r = Vec::new();
            for k in 0..q {
                let m = asm.matrix(name, k)?;
                let (rank, near) = numerical_rank_of(cx, &m, k, tol);
                report.reliable &= near.is_none();
                r.push(rank);
                if name == OperatorName::DTilde {
                    report.margins.push((None, near));
                }
            }
            ranks.push(r);
        }
        for (out, r) in [&mut report.betti, &mut report.twisted].into_iter().zip(&ranks) {
            for k in 0..=q {
                let into = if k > 0 { r[k - 1] } else { 0 };
                let out_of = if k < q { r[k] } else { 0 };
                out.push(cx.dim(k) - into - out_of);
            }
        }
    }
    report.euler = euler(&report.betti);
    report.twisted_euler = euler(&report.twisted);
    let harmonic_taut = report.twisted[0] > 0;
    if report.reliable && harmonic_taut != cx.taut() {
        return Err(Error::TautnessMismatch {
            harmonic: harmonic_taut,
            exact: cx.taut(),
        });
    }
    Ok(report)
}

/// Rank of `m` from degree `k` with threshold `√harmonic · σ_max`; the second
/// value is a singular value inside the exclusion band, if any.
fn numerical_rank_of(
    cx: &BasicComplex,
    m: &crate::linalg::SparseMatrix,
    k: usize,
    tol: Tolerances,
) -> (usize, Option<f64>) {
    let sym = to_dense(&symmetrized(cx, m, k, k + 1));
    if sym.is_empty() {
        return (0, None);
    }
    let s = sym.singular_values();
    let smax = s.max();
    let thr = tol.harmonic.sqrt() * smax.max(1.0);
    let band = tol.band.sqrt();
    let near = s.iter().copied().find(|&x| x >= thr / band && x < thr * band);
    (s.iter().filter(|&&x| x >= thr).count(), near.map(|x| x * x))
}

/// Validates `model`, counts harmonic forms and doubles the grid once if the
/// threshold band is not clear.
pub fn cohomology_report(model: &CoframeModel, tol: Tolerances) -> Result<CohomologyReport> {
    let cx = BasicComplex::new(model.clone())?;
    let first = cohomology(&cx, tol)?;
    if first.reliable {
        return Ok(first);
    }
    let finer = BasicComplex::new(model.refined(2))?;
    let mut second = cohomology(&finer, tol)?;
    second.refined = true;
    if !second.reliable {
        return Err(Error::Unreliable(format!(
            "eigenvalues inside the band around the harmonic threshold {:e} at grids {:?} and {:?}",
            tol.harmonic, first.grid, second.grid
        )));
    }
    Ok(second)
}

/// Signature of the star involution on twisted harmonic forms, from spectra
/// that kept all eigenvectors.
pub fn signature(cx: &BasicComplex, spectra: &[Spectrum]) -> Result<i64> {
    let q = cx.q();
    if q % 2 != 0 {
        return Err(Error::OddCodimension(q));
    }
    let asm = Assembler::new(cx);
    let harmonic: Vec<usize> = spectra.iter().map(Spectrum::harmonic_dimension).collect();
    let offsets: Vec<usize> = harmonic
        .iter()
        .scan(0, |acc, &h| {
            let o = *acc;
            *acc += h;
            Some(o)
        })
        .collect();
    let total: usize = harmonic.iter().sum();
    if total == 0 {
        return Ok(0);
    }
    let mut m = DMatrix::<Complex64>::zeros(total, total);
    for k in 0..=q {
        let h = harmonic[k];
        let dual = q - k;
        if h == 0 || harmonic[dual] == 0 {
            continue;
        }
        let star = asm.matrix(OperatorName::StarInvolution, k)?;
        for j in 0..h {
            let image = crate::linalg::matvec(&star, &spectra[k].vectors.column(j).into_owned());
            for i in 0..harmonic[dual] {
                let v = spectra[dual].vectors.column(i).into_owned();
                m[(offsets[dual] + i, offsets[k] + j)] = cx.inner(dual, &v, &image);
            }
        }
    }
    let (h, _) = hermitian_part(&m);
    let (values, _) = hermitian_eigen(h);
    if let Some(bad) = values.iter().find(|v| v.abs() < 0.5) {
        return Err(Error::Unreliable(format!(
            "star involution on harmonic forms has eigenvalue {bad:e}"
        )));
    }
    Ok(values.iter().map(|&v| if v > 0.0 { 1 } else { -1 }).sum())
}
