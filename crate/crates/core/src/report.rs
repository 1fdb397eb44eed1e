//! Machine-readable outputs: versioned JSON envelopes, spectrum CSV files and
//! raw operator dumps.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hodge::Spectrum;
use crate::linalg::to_dense;
use crate::operators::OperatorBlock;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelRef {
    /// Catalog name with parameters, or the model file path.
    pub source: String,
    pub fingerprint: Option<String>,
}

/// Top-level JSON document for every command.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema_version: u32,
    pub command: String,
    pub model: ModelRef,
    #[serde(flatten)]
    pub body: T,
}

impl<T: Serialize> Envelope<T> {
    pub fn new(command: &str, source: &str, fingerprint: Option<String>, body: T) -> Self {
        Envelope {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            model: ModelRef {
                source: source.into(),
                fingerprint,
            },
            body,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Multiplicity {
    pub eigenvalue: f64,
    pub multiplicity: usize,
}

/// The leading part of a [`Spectrum`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub operator: String,
    pub degree: usize,
    pub dimension: usize,
    pub eigenvalues: Vec<f64>,
    pub multiplicities: Vec<Multiplicity>,
    pub residuals: Vec<f64>,
    pub threshold: f64,
    pub harmonic_dimension: usize,
    pub reliable: bool,
    pub hermitian_defect: f64,
}

impl SpectrumResult {
    pub fn from_spectrum(s: &Spectrum, count: usize) -> Self {
        let count = count.min(s.eigenvalues.len());
        SpectrumResult {
            operator: s.operator.as_str().to_string(),
            degree: s.degree,
            dimension: s.eigenvalues.len(),
            eigenvalues: s.eigenvalues[..count].to_vec(),
            multiplicities: s
                .multiplicities(count)
                .into_iter()
                .map(|(eigenvalue, multiplicity)| Multiplicity {
                    eigenvalue,
                    multiplicity,
                })
                .collect(),
            residuals: s.residuals.iter().take(count).copied().collect(),
            threshold: s.threshold,
            harmonic_dimension: s.harmonic_dimension(),
            reliable: s.reliable(),
            hermitian_defect: s.hermitian_defect,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    operator: String,
    degree: usize,
    index: usize,
    eigenvalue: f64,
    residual: f64,
}

/// Writes spectra as `operator,degree,index,eigenvalue,residual` rows.
pub fn write_spectrum_csv<W: Write>(out: W, spectra: &[SpectrumResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in spectra {
        for (index, (&eigenvalue, &residual)) in s.eigenvalues.iter().zip(&s.residuals).enumerate() {
            w.serialize(CsvRow {
                operator: s.operator.clone(),
                degree: s.degree,
                index,
                eigenvalue,
                residual,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads back `(operator, degree, eigenvalue)` triples from a spectrum CSV.
pub fn read_spectrum_csv<R: Read>(input: R) -> Result<Vec<(String, usize, f64)>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize::<CsvRow>()
        .map(|row| row.map(|x| (x.operator, x.degree, x.eigenvalue)).map_err(Error::from))
        .collect()
}

/// Descriptor written next to a raw matrix dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DumpDescriptor {
    pub name: String,
    pub degree: usize,
    pub codomain: Vec<usize>,
    pub rows: usize,
    pub cols: usize,
    pub fingerprint: String,
    /// Always `"column-major complex128 little-endian (re, im)"`.
    pub layout: String,
}

const DUMP_LAYOUT: &str = "column-major complex128 little-endian (re, im)";

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes the dense matrix of `block` to `path` and its descriptor to `path.json`.
pub fn write_dump(block: &OperatorBlock, path: &Path) -> Result<DumpDescriptor> {
    let dense = to_dense(&block.matrix);
    let mut bytes = Vec::with_capacity(dense.len() * 16);
    for z in dense.iter() {
        bytes.extend_from_slice(&z.re.to_le_bytes());
        bytes.extend_from_slice(&z.im.to_le_bytes());
    }
    let desc = DumpDescriptor {
        name: block.label.clone(),
        degree: block.domain,
        codomain: block.codomain.clone(),
        rows: dense.nrows(),
        cols: dense.ncols(),
        fingerprint: block.fingerprint.clone(),
        layout: DUMP_LAYOUT.into(),
    };
    std::fs::write(path, bytes)?;
    let mut json = serde_json::to_string_pretty(&desc)?;
    json.push('\n');
    std::fs::write(sidecar_path(path), json)?;
    Ok(desc)
}

pub fn read_dump(path: &Path) -> Result<(DumpDescriptor, DMatrix<Complex64>)> {
    let desc: DumpDescriptor = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
    let bytes = std::fs::read(path)?;
    if bytes.len() != desc.rows * desc.cols * 16 {
        return Err(Error::Schema(format!(
            "dump has {} bytes, descriptor expects {}x{}",
            bytes.len(),
            desc.rows,
            desc.cols
        )));
    }
    let values: Vec<Complex64> = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect();
    Ok((desc.clone(), DMatrix::from_vec(desc.rows, desc.cols, values)))
}
