//! Subcommand bodies. Each returns the rendered report and the exit status.

use ngm_core::minorlimit::{default_schedule, limit_minor_inverse, spectral_limit};
use ngm_core::relapse::{r0_coupled_closed, r0_uncoupled_closed, relapse_limit_experiment};
use ngm_core::{eigenvalues, ConvergenceReport, DiagonalRay, Matrix, NgmPair};
use serde::Serialize;

use crate::config::{check_schedule, ModelConfig, SweepConfig};
use crate::error::{CliError, Result, EXIT_OK, EXIT_PROPERTY_FAILURE};
use crate::json;
use crate::verify::{self, Fault, VerifyReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Rendered report and process exit status.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Output {
    pub text: String,
    pub status: i32,
}

impl Output {
    fn ok(text: String) -> Self {
        Self {
            text,
            status: EXIT_OK,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct R0Report {
    pub mode: &'static str,
    pub labels: Vec<String>,
    /// `None` for an explicit pair, which has no closed form.
    pub closed_form: Option<f64>,
    pub spectral: f64,
    pub relative_gap: Option<f64>,
}

pub fn r0_report(cfg: &ModelConfig) -> Result<R0Report> {
    let pair = cfg.build()?;
    let (mode, closed_form) = match cfg {
        ModelConfig::Uncoupled {
            host,
            vector,
            stages,
        } => (
            "uncoupled",
            Some(r0_uncoupled_closed(host, vector, stages.unwrap_or(host.stages()))?.value),
        ),
        ModelConfig::Coupled {
            host1,
            host2,
            vector,
            stages1,
            stages2,
        } => (
            "coupled",
            Some(
                r0_coupled_closed(
                    host1,
                    host2,
                    vector,
                    stages1.unwrap_or(host1.stages()),
                    stages2.unwrap_or(host2.stages()),
                )?
                .value,
            ),
        ),
        ModelConfig::Pair { .. } => ("pair", None),
    };
    let spectral = ngm_core::ngm::r0(&pair)?;
    Ok(R0Report {
        mode,
        labels: pair.labels().to_vec(),
        closed_form,
        spectral,
        relative_gap: closed_form.map(|c| (spectral - c).abs() / c),
    })
}

pub fn cmd_r0(cfg: &ModelConfig, format: Format) -> Result<Output> {
    let report = r0_report(cfg)?;
    let text = match format {
        Format::Json => json::to_string(&report)?,
        Format::Csv => format!(
            "closed_form,spectral,relative_gap\n{},{},{}\n",
            report.closed_form.map(json::float).unwrap_or_default(),
            json::float(report.spectral),
            report.relative_gap.map(json::float).unwrap_or_default()
        ),
    };
    Ok(Output::ok(text))
}

#[derive(Debug, Serialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

/// Dump of a built pair; it parses back as a `"mode": "pair"` config.
#[derive(Debug, Serialize)]
pub struct NgmDump {
    pub mode: &'static str,
    pub labels: Vec<String>,
    pub f: Matrix,
    pub v: Matrix,
    pub ngm: Matrix,
    pub eigenvalues: Vec<Eigenvalue>,
    pub r0: f64,
}

pub fn ngm_dump(pair: &NgmPair) -> Result<NgmDump> {
    let ngm = pair.next_generation_matrix()?;
    let spectrum = eigenvalues(&ngm)?;
    Ok(NgmDump {
        mode: "pair",
        labels: pair.labels().to_vec(),
        f: pair.f().clone(),
        v: pair.v().clone(),
        eigenvalues: spectrum
            .values()
            .iter()
            .map(|z| Eigenvalue { re: z.re, im: z.im })
            .collect(),
        r0: spectrum.radius(),
        ngm,
    })
}

pub fn cmd_ngm(cfg: &ModelConfig, format: Format) -> Result<Output> {
    if format == Format::Csv {
        return Err(CliError::Config("ngm only writes json".into()));
    }
    let dump = ngm_dump(&cfg.build()?)?;
    Ok(Output::ok(json::to_string(&dump)?))
}

/// Runs the sweep; `override_schedule` replaces the config's schedule.
pub fn sweep_report(
    cfg: &SweepConfig,
    override_schedule: Option<&[f64]>,
) -> Result<ConvergenceReport> {
    let schedule = override_schedule.or(cfg.schedule());
    if let Some(s) = schedule {
        check_schedule(s)?;
    }
    let pick = |base: &Matrix| schedule.map_or_else(|| default_schedule(base), <[f64]>::to_vec);
    let report = match cfg {
        SweepConfig::Matrix { matrix, index, .. } => {
            let ray = DiagonalRay::new(matrix.clone(), *index)
                .map_err(|e| CliError::from_core("matrix", e))?;
            limit_minor_inverse(&ray, &pick(matrix))?.report
        }
        SweepConfig::Spectral { f, v, index, .. } => {
            let ray =
                DiagonalRay::new(v.clone(), *index).map_err(|e| CliError::from_core("v", e))?;
            spectral_limit(f, &ray, &pick(v))
                .map_err(|e| CliError::from_core("f", e))?
                .report
        }
        SweepConfig::Relapse {
            host1,
            host2,
            vector,
            stages,
            ..
        } => {
            host1
                .validate()
                .map_err(|e| CliError::from_core("host1", e))?;
            host2
                .validate()
                .map_err(|e| CliError::from_core("host2", e))?;
            vector
                .validate()
                .map_err(|e| CliError::from_core("vector", e))?;
            relapse_limit_experiment(host1, host2, vector, *stages, schedule)
                .map_err(|e| CliError::from_core("stages", e))?
                .limit
                .report
        }
    };
    Ok(report)
}

pub fn sweep_csv(report: &ConvergenceReport) -> String {
    let opt = |x: Option<f64>| x.map(json::float).unwrap_or_default();
    let mut out = String::from("t,raw_error,extrapolated_error,flagged\n");
    for p in &report.points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            json::float(p.t),
            opt(p.error),
            opt(p.extrapolated_error),
            p.flagged()
        ));
    }
    out
}

pub fn cmd_sweep(cfg: &SweepConfig, schedule: Option<&[f64]>, format: Format) -> Result<Output> {
    let report = sweep_report(cfg, schedule)?;
    let text = match format {
        Format::Csv => sweep_csv(&report),
        Format::Json => json::to_string(&report)?,
    };
    Ok(Output::ok(text))
}

pub fn verify_csv(report: &VerifyReport) -> String {
    let mut out = String::from("name,criterion,cases,errors,worst,tolerance,passed\n");
    for p in &report.properties {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            p.name,
            p.criterion,
            p.cases,
            p.errors,
            json::float(p.worst),
            json::float(p.tolerance),
            p.passed
        ));
    }
    out
}

pub fn cmd_verify(seed: u64, fault: Option<Fault>, format: Format) -> Result<Output> {
    let report = verify::run(seed, fault);
    let text = match format {
        Format::Json => json::to_string(&report)?,
        Format::Csv => verify_csv(&report),
    };
    Ok(Output {
        text,
        status: if report.passed {
            EXIT_OK
        } else {
            EXIT_PROPERTY_FAILURE
        },
    })
}
