use std::path::PathBuf;

use folhodge::catalog::{golden_lambda, lambda_from_trace, SuspensionInput};
use folhodge::hodge::Tolerances;
use folhodge::model::{FourierSeries, FourierTerm};
use folhodge::operators::OperatorName;

use crate::args::{Cli, CommandArgs, Common, Format, OutputArgs, SourceArgs};
use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum ModelSource {
    Carriere { lambda: f64 },
    FlatTorus { q: usize, potential: FourierSeries },
    CarriereProduct { lambda: f64, circles: usize, active: bool },
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    Verify,
    Betti,
    Spectrum { op: OperatorName, degree: Option<usize> },
    Duality,
    Conformal { h: FourierSeries },
    Suspend { label: String, input: SuspensionInput },
    Dump { op: OperatorName, degree: usize },
    Model,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Betti => "betti",
            Command::Spectrum { .. } => "spectrum",
            Command::Duality => "duality",
            Command::Conformal { .. } => "conformal",
            Command::Suspend { .. } => "suspend",
            Command::Dump { .. } => "dump",
            Command::Model => "model",
        }
    }
}

/// One fully resolved invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    /// `None` only for `suspend`.
    pub source: Option<ModelSource>,
    pub grid: Option<usize>,
    pub count: Option<usize>,
    pub tolerances: Tolerances,
    pub format: Format,
    pub output: Option<PathBuf>,
}

/// Parses `MODE:COS:SIN` terms, e.g. `1:0:0.3` or `1,0:0.2:0`.
pub fn parse_series(terms: &[String]) -> Result<FourierSeries, CliError> {
    let mut out = Vec::new();
    for t in terms {
        let bad = || CliError::Usage(format!("Fourier term {t:?} is not MODE:COS:SIN"));
        let parts: Vec<&str> = t.split(':').collect();
        let [mode, cos, sin] = parts[..] else { return Err(bad()) };
        let mode = mode
            .split(',')
            .map(|m| m.trim().parse::<i64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| bad())?;
        let cos: f64 = cos.trim().parse().map_err(|_| bad())?;
        let sin: f64 = sin.trim().parse().map_err(|_| bad())?;
        if !(cos.is_finite() && sin.is_finite()) {
            return Err(bad());
        }
        out.push(FourierTerm { mode, cos, sin });
    }
    Ok(FourierSeries::from_terms(out))
}

fn parse_op(s: &str) -> Result<OperatorName, CliError> {
    s.parse().map_err(|e: folhodge::Error| CliError::Usage(e.to_string()))
}

fn lambda(src: &SourceArgs) -> Result<f64, CliError> {
    match (src.lambda, src.lambda_trace) {
        (Some(l), _) => Ok(l),
        (None, Some(t)) => lambda_from_trace(t).map_err(|e| CliError::Usage(e.to_string())),
        (None, None) => Ok(golden_lambda()),
    }
}

fn source(src: &SourceArgs) -> Result<ModelSource, CliError> {
    if let Some(path) = &src.model {
        return Ok(ModelSource::File(path.clone()));
    }
    let name = src
        .catalog
        .as_deref()
        .ok_or_else(|| CliError::Usage("one of --catalog or --model is required".into()))?;
    match name {
        "carriere" => Ok(ModelSource::Carriere { lambda: lambda(src)? }),
        "flat-torus" => Ok(ModelSource::FlatTorus {
            q: src.q,
            potential: parse_series(&src.potential)?,
        }),
        "carriere-product" => Ok(ModelSource::CarriereProduct {
            lambda: lambda(src)?,
            circles: src.circles,
            active: src.active_circles,
        }),
        "suspension-7.2" | "suspension-7.3" => Err(CliError::Usage(format!(
            "{name} is bookkeeping only; use the suspend command"
        ))),
        other => Err(CliError::Usage(format!(
            "unknown catalog name {other:?} (known: {})",
            folhodge::catalog::NAMES.join(", ")
        ))),
    }
}

fn tolerances(common: &Common) -> Result<Tolerances, CliError> {
    let mut tol = Tolerances::from_env().map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(h) = common.harmonic_threshold {
        tol.harmonic = h;
    }
    if let Some(i) = common.identity_tol {
        tol.identity = i;
    }
    Ok(tol)
}

impl RunConfig {
    fn from_common(command: Command, common: &Common) -> Result<Self, CliError> {
        Ok(RunConfig {
            command,
            source: Some(source(&common.source)?),
            grid: common.source.grid,
            count: common.count,
            tolerances: tolerances(common)?,
            format: common.output.format,
            output: common.output.output.clone(),
        })
    }

    fn bookkeeping(command: Command, output: &OutputArgs) -> Self {
        RunConfig {
            command,
            source: None,
            grid: None,
            count: None,
            tolerances: Tolerances::default(),
            format: output.format,
            output: output.output.clone(),
        }
    }

    /// Checks the invariants that clap cannot express.
    pub fn check(&self) -> Result<(), CliError> {
        let needs_model = !matches!(self.command, Command::Suspend { .. });
        if needs_model != self.source.is_some() {
            return Err(CliError::Usage("exactly one model source is required".into()));
        }
        let t = self.tolerances;
        if ![t.harmonic, t.band, t.cluster, t.identity]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0)
        {
            return Err(CliError::Usage("tolerances must be positive".into()));
        }
        if self.count == Some(0) {
            return Err(CliError::Usage("--count must be at least 1".into()));
        }
        if self.format == Format::Csv && !matches!(self.command, Command::Spectrum { .. }) {
            return Err(CliError::Usage("csv output is available for spectra only".into()));
        }
        if matches!(self.command, Command::Dump { .. }) && self.output.is_none() {
            return Err(CliError::Usage("dump needs --output".into()));
        }
        Ok(())
    }
}

impl TryFrom<Cli> for RunConfig {
    type Error = CliError;

    fn try_from(cli: Cli) -> Result<Self, CliError> {
        let config = match cli.command {
            CommandArgs::Verify(c) => RunConfig::from_common(Command::Verify, &c)?,
            CommandArgs::Betti(c) => RunConfig::from_common(Command::Betti, &c)?,
            CommandArgs::Spectrum { common, op, degree } => RunConfig::from_common(
                Command::Spectrum {
                    op: parse_op(&op)?,
                    degree,
                },
                &common,
            )?,
            CommandArgs::Duality(c) => RunConfig::from_common(Command::Duality, &c)?,
            CommandArgs::Conformal { common, h } => {
                RunConfig::from_common(Command::Conformal { h: parse_series(&h)? }, &common)?
            }
            CommandArgs::Dump { common, op, degree } => RunConfig::from_common(
                Command::Dump {
                    op: parse_op(&op)?,
                    degree,
                },
                &common,
            )?,
            CommandArgs::Model(c) => RunConfig::from_common(Command::Model, &c)?,
            CommandArgs::Suspend {
                preset,
                catalog,
                input,
                output,
            } => {
                let (label, input) = match (preset.or(catalog), input) {
                    (Some(name), _) => {
                        let label = if name.starts_with("suspension-") {
                            name.clone()
                        } else {
                            format!("suspension-{name}")
                        };
                        (
                            label,
                            SuspensionInput::preset(&name).map_err(|e| CliError::Usage(e.to_string()))?,
                        )
                    }
                    (None, Some(path)) => {
                        let text = std::fs::read_to_string(&path)
                            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
                        let parsed: SuspensionInput = serde_json::from_str(&text)
                            .map_err(|e| CliError::Core(folhodge::Error::Schema(format!("{}: {e}", path.display()))))?;
                        (path.display().to_string(), parsed)
                    }
                    (None, None) => return Err(CliError::Usage("suspend needs --preset, --catalog or --input".into())),
                };
                RunConfig::bookkeeping(Command::Suspend { label, input }, &output)
            }
        };
        config.check()?;
        Ok(config)
    }
}
