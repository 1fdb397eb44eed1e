//! Model file format.
//!
//! Indices in the file are 1-based. `kappa` maps a coframe index to a table of
//! Fourier terms keyed by the comma-separated mode tuple:
//!
//! ```json
//! { "q": 2,
//!   "structure": [{ "k": 2, "i": 1, "j": 2, "value": 0.9624236501192069 }],
//!   "active": [{ "coframe": 1, "period": 1.0, "grid": 64 }],
//!   "metric": [1.0, 0.0, 0.0, 1.0],
//!   "kappa": { "1": { "0": { "cos": 0.9624236501192069, "sin": 0.0 } } },
//!   "orientation": 1 }
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{validate, ActiveAxis, CoframeModel, FourierSeries, FourierTerm, StructureConstant};
use crate::error::{Error, Result};
use crate::exterior::Orientation;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StructureEntry {
    k: usize,
    i: usize,
    j: usize,
    value: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActiveEntry {
    coframe: usize,
    period: f64,
    grid: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Coefficient {
    cos: f64,
    sin: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    q: usize,
    structure: Vec<StructureEntry>,
    active: Vec<ActiveEntry>,
    metric: Vec<f64>,
    kappa: BTreeMap<String, BTreeMap<String, Coefficient>>,
    orientation: Option<i64>,
}

fn one_based(value: usize, path: String) -> Result<usize> {
    value
        .checked_sub(1)
        .ok_or_else(|| Error::Schema(format!("{path}: indices are 1-based")))
}

fn mode_key(mode: &[i64]) -> String {
    mode.iter().map(i64::to_string).collect::<Vec<_>>().join(",")
}

fn parse_mode(key: &str, path: &str) -> Result<Vec<i64>> {
    if key.is_empty() {
        return Ok(Vec::new());
    }
    key.split(',')
        .map(|s| {
            s.trim()
                .parse::<i64>()
                .map_err(|_| Error::Schema(format!("{path}: bad mode key {key:?}")))
        })
        .collect()
}

impl TryFrom<ModelFile> for CoframeModel {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self> {
        let structure = f
            .structure
            .iter()
            .enumerate()
            .map(|(n, s)| {
                Ok(StructureConstant {
                    target: one_based(s.k, format!("structure[{n}].k"))?,
                    left: one_based(s.i, format!("structure[{n}].i"))?,
                    right: one_based(s.j, format!("structure[{n}].j"))?,
                    value: s.value,
                })
            })
            .collect::<Result<_>>()?;
        let active = f
            .active
            .iter()
            .enumerate()
            .map(|(n, a)| {
                Ok(ActiveAxis {
                    coframe: one_based(a.coframe, format!("active[{n}].coframe"))?,
                    period: a.period,
                    grid: a.grid,
                })
            })
            .collect::<Result<_>>()?;
        let mut kappa = BTreeMap::new();
        for (key, table) in &f.kappa {
            let path = format!("kappa.{key}");
            let idx: usize = key
                .parse()
                .map_err(|_| Error::Schema(format!("{path}: coframe key must be an integer")))?;
            let idx = one_based(idx, path.clone())?;
            let terms = table
                .iter()
                .map(|(mk, c)| {
                    Ok(FourierTerm {
                        mode: parse_mode(mk, &path)?,
                        cos: c.cos,
                        sin: c.sin,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let series = FourierSeries::from_terms(terms);
            if !series.is_zero() {
                kappa.insert(idx, series);
            }
        }
        let orientation = match f.orientation {
            None => None,
            Some(s) => Some(
                Orientation::from_sign(s).ok_or_else(|| Error::Schema("orientation: must be 1, -1 or null".into()))?,
            ),
        };
        Ok(CoframeModel {
            q: f.q,
            structure,
            active,
            metric: f.metric,
            kappa,
            orientation,
        })
    }
}

impl From<&CoframeModel> for ModelFile {
    fn from(m: &CoframeModel) -> Self {
        ModelFile {
            q: m.q,
            structure: m
                .structure
                .iter()
                .map(|s| StructureEntry {
                    k: s.target + 1,
                    i: s.left + 1,
                    j: s.right + 1,
                    value: s.value,
                })
                .collect(),
            active: m
                .active
                .iter()
                .map(|a| ActiveEntry {
                    coframe: a.coframe + 1,
                    period: a.period,
                    grid: a.grid,
                })
                .collect(),
            metric: m.metric.clone(),
            kappa: m
                .kappa
                .iter()
                .map(|(&i, s)| {
                    let table = s
                        .terms()
                        .iter()
                        .map(|t| (mode_key(&t.mode), Coefficient { cos: t.cos, sin: t.sin }))
                        .collect();
                    ((i + 1).to_string(), table)
                })
                .collect(),
            orientation: m.orientation.map(|o| o.sign() as i64),
        }
    }
}

/// Canonical serialization (pretty JSON with a trailing newline).
pub fn to_json(model: &CoframeModel) -> String {
    let mut s = serde_json::to_string_pretty(&ModelFile::from(model)).expect("model file serializes");
    s.push('\n');
    s
}

/// Parses a model file without validating it.
pub fn from_json(text: &str) -> Result<CoframeModel> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ModelFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Schema(format!("{path}: {}", e.into_inner()))
    })?;
    CoframeModel::try_from(file)
}

pub fn write_model(path: &Path, model: &CoframeModel) -> Result<()> {
    std::fs::write(path, to_json(model))?;
    Ok(())
}

/// Reads and validates a model file.
pub fn load_model(path: &Path) -> Result<CoframeModel> {
    let model = from_json(&std::fs::read_to_string(path)?)?;
    let report = validate(&model);
    if !report.passed() {
        return Err(Error::Validation(Box::new(report)));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FailureCode;

    const CARRIERE: &str = r#"{
  "q": 2,
  "structure": [{ "k": 2, "i": 1, "j": 2, "value": 0.9624236501192069 }],
  "active": [{ "coframe": 1, "period": 1.0, "grid": 16 }],
  "metric": [1.0, 0.0, 0.0, 1.0],
  "kappa": { "1": { "0": { "cos": 0.9624236501192069, "sin": 0.0 } } },
  "orientation": 1
}"#;

    #[test]
    fn round_trip_is_byte_identical() {
        let m = from_json(CARRIERE).unwrap();
        let once = to_json(&m);
        let twice = to_json(&from_json(&once).unwrap());
        assert_eq!(once, twice);
        assert_eq!(from_json(&once).unwrap(), m);
    }

    #[test]
    fn schema_errors_name_the_field() {
        let bad = CARRIERE.replace("\"grid\": 16", "\"grid\": \"x\"");
        let err = from_json(&bad).unwrap_err().to_string();
        assert!(err.contains("active[0].grid"), "{err}");
        let bad = CARRIERE.replace("\"k\": 2", "\"k\": 0");
        assert!(from_json(&bad).unwrap_err().to_string().contains("structure[0].k"));
        let bad = CARRIERE.replace("\"orientation\": 1", "\"orientation\": 2");
        assert!(from_json(&bad).unwrap_err().to_string().contains("orientation"));
    }

    #[test]
    fn load_runs_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        std::fs::write(&path, CARRIERE.replace("[1.0, 0.0, 0.0, 1.0]", "[1.0, 2.0, 2.0, 1.0]")).unwrap();
        match load_model(&path) {
            Err(Error::Validation(r)) => assert!(r.has(FailureCode::NonSpdMetric)),
            other => panic!("{other:?}"),
        }
        std::fs::write(&path, CARRIERE).unwrap();
        assert!(load_model(&path).is_ok());
    }

    #[test]
    fn null_orientation() {
        let m = from_json(&CARRIERE.replace("\"orientation\": 1", "\"orientation\": null")).unwrap();
        assert_eq!(m.orientation, None);
        assert!(to_json(&m).contains("\"orientation\": null"));
    }
}
