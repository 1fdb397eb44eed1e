//! Command-line front end: argument parsing, model loading, report emission.

pub mod args;
pub mod config;
mod render;

use std::ffi::OsString;
use std::io::Write;
use std::path::Path;

use clap::Parser;
use folhodge::catalog::{make_carriere, make_carriere_product, make_flat_torus, suspension_report, CircleMode};
use folhodge::hodge::{cohomology_report, conformal_compare, duality_check, spectrum};
use folhodge::model::io::{load_model, to_json};
use folhodge::model::{validate, BasicComplex, CoframeModel};
use folhodge::operators::{assemble, identity_suite};
use folhodge::report::{write_dump, write_spectrum_csv, Envelope, SpectrumResult};
use serde::Serialize;

pub use args::{Cli, Format};
pub use config::{Command, ModelSource, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RELIABILITY: i32 = 3;
pub const EXIT_USAGE: i32 = 4;

/// Acceptance level for spectral comparisons (duality, conformal eigenvalues).
pub const SPECTRAL_TOLERANCE: f64 = 1e-8;
/// Acceptance level for `1 - alignment` of conformally related eigenvectors.
pub const ALIGNMENT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] folhodge::Error),
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use folhodge::Error as E;
        match self {
            CliError::Usage(_) | CliError::Output(_) => EXIT_USAGE,
            CliError::Core(e) => match e {
                E::Validation(_) | E::Schema(_) | E::NonSpdMetric(_) | E::NotClosed { .. } | E::Suspension(_) => {
                    EXIT_VALIDATION
                }
                E::Unreliable(_) | E::TautnessMismatch { .. } => EXIT_RELIABILITY,
                _ => EXIT_USAGE,
            },
        }
    }
}

/// The rendered document and the exit code it should produce.
#[derive(Clone, Debug, PartialEq)]
pub struct Emitted {
    pub exit_code: i32,
    pub document: String,
}

/// Default grid: 64 points for one active axis, 32 per axis otherwise.
pub fn default_grid(active_axes: usize) -> usize {
    if active_axes <= 1 {
        64
    } else {
        32
    }
}

fn build_model(source: &ModelSource, grid: Option<usize>) -> Result<(CoframeModel, String), CliError> {
    let model = match source {
        ModelSource::Carriere { lambda } => {
            let n = grid.unwrap_or(default_grid(1));
            (make_carriere(*lambda, n)?, format!("carriere lambda={lambda} N={n}"))
        }
        ModelSource::FlatTorus { q, potential } => {
            let n = grid.unwrap_or(default_grid(*q));
            (
                make_flat_torus(*q, n, potential)?,
                format!("flat-torus q={q} N={n} potential_terms={}", potential.terms().len()),
            )
        }
        ModelSource::CarriereProduct {
            lambda,
            circles,
            active,
        } => {
            let n = grid.unwrap_or(default_grid(if *active { 1 + circles } else { 1 }));
            let mode = if *active {
                CircleMode::Active { grid: n }
            } else {
                CircleMode::Invariant
            };
            let label = format!("carriere-product lambda={lambda} circles={circles} active={active} N={n}");
            (make_carriere_product(*lambda, *circles, n, mode)?, label)
        }
        ModelSource::File(path) => {
            let mut model = load_model(path).map_err(|e| match e {
                folhodge::Error::Io(io) => CliError::Usage(format!("cannot read model file {}: {io}", path.display())),
                other => CliError::Core(other),
            })?;
            if let Some(n) = grid {
                for axis in &mut model.active {
                    axis.grid = n;
                }
            }
            let label = match grid {
                Some(n) => format!("{} N={n}", path.display()),
                None => path.display().to_string(),
            };
            (model, label)
        }
    };
    let report = validate(&model.0);
    if !report.passed() {
        return Err(folhodge::Error::Validation(Box::new(report)).into());
    }
    Ok(model)
}

fn envelope<T: Serialize>(cfg: &RunConfig, source: &str, fp: Option<String>, body: T) -> Result<String, CliError> {
    Ok(Envelope::new(cfg.command.name(), source, fp, body).to_json()?)
}

/// Executes one command and renders its document; failed checks give a
/// nonzero exit code alongside the document.
pub fn run(cfg: &RunConfig) -> Result<Emitted, CliError> {
    cfg.check()?;
    if let Command::Suspend { label, input } = &cfg.command {
        let report = suspension_report(input)?;
        let document = match cfg.format {
            Format::Json => envelope(cfg, label, None, &report)?,
            _ => format!("source    {label}\n{report}"),
        };
        return Ok(Emitted {
            exit_code: EXIT_OK,
            document,
        });
    }
    let source = cfg.source.as_ref().expect("checked");
    let (model, label) = build_model(source, cfg.grid)?;
    if cfg.command == Command::Model {
        return Ok(Emitted {
            exit_code: EXIT_OK,
            document: to_json(&model),
        });
    }
    let tol = cfg.tolerances;
    let fp = folhodge::model::fingerprint(&model);
    let text_header = format!("source       {label}\nfingerprint  {fp}\n");
    let json = cfg.format == Format::Json;
    let (passed, document) = match &cfg.command {
        Command::Verify => {
            let cx = BasicComplex::new(model)?;
            let identities = identity_suite(&cx)?;
            let body = render::VerifyBody::new(cx.report().clone(), identities, tol.identity);
            let passed = body.passed;
            (
                passed,
                if json {
                    envelope(cfg, &label, Some(fp), &body)?
                } else {
                    text_header + &body.to_string()
                },
            )
        }
        Command::Betti => {
            let report = cohomology_report(&model, tol)?;
            (
                true,
                if json {
                    envelope(cfg, &label, Some(fp), &report)?
                } else {
                    text_header + &render::betti(&report)
                },
            )
        }
        Command::Spectrum { op, degree } => {
            let cx = BasicComplex::new(model)?;
            let degrees: Vec<usize> = match degree {
                Some(k) => vec![*k],
                None => (0..=cx.q()).collect(),
            };
            let mut results = Vec::new();
            for k in degrees {
                cx.check_degree(k)?;
                let count = cfg.count.unwrap_or(10.min(cx.dim(k)));
                let s = spectrum(&cx, *op, k, count, tol)?;
                results.push(SpectrumResult::from_spectrum(&s, count));
            }
            let passed = results.iter().all(|r| r.reliable);
            let document = match cfg.format {
                Format::Json => envelope(cfg, &label, Some(fp), render::SpectraBody { spectra: &results })?,
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_spectrum_csv(&mut buf, &results)?;
                    String::from_utf8(buf).expect("csv is utf-8")
                }
                Format::Text => text_header + &render::spectra(&results),
            };
            (passed, document)
        }
        Command::Duality => {
            let cx = BasicComplex::new(model)?;
            let report = duality_check(&cx, cfg.count.unwrap_or(20), tol)?;
            let passed =
                report.max_eigenvalue_gap() < SPECTRAL_TOLERANCE && report.max_vector_residual() < SPECTRAL_TOLERANCE;
            let body = render::CheckBody {
                passed,
                tolerance: SPECTRAL_TOLERANCE,
                report: &report,
            };
            (
                passed,
                if json {
                    envelope(cfg, &label, Some(fp), &body)?
                } else {
                    text_header + &render::duality(&body)
                },
            )
        }
        Command::Conformal { h } => {
            let report = conformal_compare(&model, h, cfg.count.unwrap_or(10), tol)?;
            let passed = report.max_eigenvalue_gap() < SPECTRAL_TOLERANCE
                && report.min_simple_alignment() > 1.0 - ALIGNMENT_TOLERANCE
                && report.min_subspace_alignment() > 1.0 - ALIGNMENT_TOLERANCE;
            let body = render::CheckBody {
                passed,
                tolerance: SPECTRAL_TOLERANCE,
                report: &report,
            };
            (
                passed,
                if json {
                    envelope(cfg, &label, Some(fp), &body)?
                } else {
                    text_header + &render::conformal(&body)
                },
            )
        }
        Command::Dump { op, degree } => {
            let cx = BasicComplex::new(model)?;
            let block = assemble(&cx, *op, *degree)?;
            let path = cfg.output.as_ref().expect("checked");
            let desc = write_dump(&block, path)?;
            return Ok(Emitted {
                exit_code: EXIT_OK,
                document: serde_json::to_string_pretty(&desc).map_err(folhodge::Error::from)? + "\n",
            });
        }
        Command::Suspend { .. } | Command::Model => unreachable!("handled above"),
    };
    Ok(Emitted {
        exit_code: if passed { EXIT_OK } else { EXIT_RELIABILITY },
        document,
    })
}

/// Replaces `path` in one step via a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn report_error(e: &CliError) {
    eprintln!("error: {e}");
    if let CliError::Core(folhodge::Error::Validation(report)) = e {
        for line in report.to_string().lines() {
            eprintln!("  {line}");
        }
    }
}

/// Parses `args`, runs the command, writes the output and returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = RunConfig::try_from(cli).and_then(|cfg| {
        let emitted = run(&cfg)?;
        // dumps write their own files; the descriptor goes to stdout
        let to_file = cfg
            .output
            .as_ref()
            .filter(|_| !matches!(cfg.command, Command::Dump { .. }));
        match to_file {
            Some(path) => write_atomic(path, emitted.document.as_bytes())?,
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(emitted.document.as_bytes())?;
                out.flush()?;
            }
        }
        Ok(emitted.exit_code)
    });
    match result {
        Ok(code) => {
            if code == EXIT_RELIABILITY {
                eprintln!("error: check failed; see report");
            }
            code
        }
        Err(e) => {
            report_error(&e);
            e.exit_code()
        }
    }
}
