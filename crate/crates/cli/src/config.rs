//! JSON run configurations.
//!
//! `r0` and `ngm` read a [`ModelConfig`] tagged by `"mode"`; `sweep` reads a
//! [`SweepConfig`] tagged by `"kind"`. Unknown fields are rejected.

use std::io::Read;
use std::path::Path;

use ngm_core::minorlimit::validate_schedule;
use ngm_core::relapse::{build_coupled_ngm, build_uncoupled_ngm};
use ngm_core::{HostParams, Matrix, NgmPair, VectorParams};
use serde::de::{DeserializeOwned, IgnoredAny};
use serde::Deserialize;

use crate::error::{CliError, Result};

/// A host-vector model or an explicit `(F, V)` pair.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    /// One host species and the vector. `stages` defaults to `host.mu.len()`.
    Uncoupled {
        host: HostParams,
        vector: VectorParams,
        stages: Option<usize>,
    },
    /// Two host species sharing the vector.
    Coupled {
        host1: HostParams,
        host2: HostParams,
        vector: VectorParams,
        stages1: Option<usize>,
        stages2: Option<usize>,
    },
    /// Explicit blocks, as written by `ngm`. The derived fields of that dump
    /// are accepted and ignored.
    Pair {
        f: Matrix,
        v: Matrix,
        labels: Option<Vec<String>>,
        #[serde(default, rename = "ngm")]
        _ngm: Option<IgnoredAny>,
        #[serde(default, rename = "eigenvalues")]
        _eigenvalues: Option<IgnoredAny>,
        #[serde(default, rename = "r0")]
        _r0: Option<IgnoredAny>,
    },
}

impl ModelConfig {
    /// Checks every rate, naming the offending field on failure.
    pub fn validate(&self) -> Result<()> {
        match self {
            ModelConfig::Uncoupled { host, vector, .. } => {
                host.validate()
                    .map_err(|e| CliError::from_core("host", e))?;
                vector
                    .validate()
                    .map_err(|e| CliError::from_core("vector", e))
            }
            ModelConfig::Coupled {
                host1,
                host2,
                vector,
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
                    .map_err(|e| CliError::from_core("vector", e))
            }
            ModelConfig::Pair { .. } => Ok(()),
        }
    }

    /// Builds the `(F, V)` pair described by the config.
    pub fn build(&self) -> Result<NgmPair> {
        self.validate()?;
        match self {
            ModelConfig::Uncoupled {
                host,
                vector,
                stages,
            } => build_uncoupled_ngm(host, vector, stages.unwrap_or(host.stages()))
                .map_err(|e| CliError::from_core("stages", e)),
            ModelConfig::Coupled {
                host1,
                host2,
                vector,
                stages1,
                stages2,
            } => build_coupled_ngm(
                host1,
                host2,
                vector,
                stages1.unwrap_or(host1.stages()),
                stages2.unwrap_or(host2.stages()),
            )
            .map_err(|e| CliError::from_core("stages", e)),
            ModelConfig::Pair { f, v, labels, .. } => {
                let labels = labels
                    .clone()
                    .unwrap_or_else(|| (1..=f.rows()).map(|k| format!("C{k}")).collect());
                NgmPair::new(f.clone(), v.clone(), labels)
                    .map_err(|e| CliError::from_core("pair", e))
            }
        }
    }
}

/// Input of the `sweep` command.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepConfig {
    /// Inverse of `matrix` with diagonal entry `index` (1-based) driven up.
    Matrix {
        matrix: Matrix,
        index: usize,
        schedule: Option<Vec<f64>>,
    },
    /// `ρ(F V(t)⁻¹)` with `V`'s diagonal entry `index` driven up.
    Spectral {
        f: Matrix,
        v: Matrix,
        index: usize,
        schedule: Option<Vec<f64>>,
    },
    /// Removal of species-1's last stage from the `(stages, stages)` coupled system.
    Relapse {
        host1: HostParams,
        host2: HostParams,
        vector: VectorParams,
        stages: usize,
        schedule: Option<Vec<f64>>,
    },
}

impl SweepConfig {
    pub fn schedule(&self) -> Option<&[f64]> {
        match self {
            SweepConfig::Matrix { schedule, .. }
            | SweepConfig::Spectral { schedule, .. }
            | SweepConfig::Relapse { schedule, .. } => schedule.as_deref(),
        }
    }
}

/// Parses `"t1,t2,..."` and checks that it is a positive, strictly increasing schedule.
pub fn parse_schedule(text: &str) -> Result<Vec<f64>> {
    let values = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Config(format!("schedule: cannot parse {s:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    check_schedule(&values)?;
    Ok(values)
}

pub fn check_schedule(values: &[f64]) -> Result<()> {
    validate_schedule(values).map_err(|e| CliError::from_core("schedule", e))
}

/// Reads the config text from `path`, or from stdin when `path` is `-`.
pub fn read_source(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text)?;
        Ok(text)
    } else {
        std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
    }
}

pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIT: &str = r#"{
        "mode": "uncoupled",
        "host": {"c": 1, "s_bar": 1, "alpha": [2, 1], "mu": [1]},
        "vector": {"f": 1, "c_v": 1, "s_v_bar": 1, "mu_tilde": 1}
    }"#;

    #[test]
    fn uncoupled_builds() {
        let cfg: ModelConfig = parse(UNIT).unwrap();
        let pair = cfg.build().unwrap();
        assert_eq!(pair.labels(), ["I1", "Iv"]);
    }

    #[test]
    fn unknown_field_rejected() {
        let text = UNIT.replace("\"mode\"", "\"extra\": 1, \"mode\"");
        let err = parse::<ModelConfig>(&text).unwrap_err();
        assert!(err.to_string().contains("extra"), "{err}");
    }

    #[test]
    fn negative_rate_names_field() {
        let cfg: ModelConfig = parse(&UNIT.replace("\"mu\": [1]", "\"mu\": [-1]")).unwrap();
        let err = cfg.build().unwrap_err();
        assert_eq!(err.exit_code(), crate::error::EXIT_CONFIG);
        assert!(err.to_string().contains("host: mu[1]"), "{err}");
    }

    #[test]
    fn missing_field_named() {
        let err = parse::<ModelConfig>(&UNIT.replace("\"c\": 1, ", "")).unwrap_err();
        assert!(err.to_string().contains("`c`"), "{err}");
    }

    #[test]
    fn schedules() {
        assert_eq!(
            parse_schedule("10, 100,1e3").unwrap(),
            vec![10.0, 100.0, 1000.0]
        );
        assert!(parse_schedule("10,5").is_err());
        assert!(parse_schedule("10,x").is_err());
    }

    #[test]
    fn sweep_kinds() {
        let cfg: SweepConfig = parse(
            r#"{"kind": "matrix", "matrix": [[2, 1], [1, 3]], "index": 1, "schedule": [10, 100]}"#,
        )
        .unwrap();
        assert_eq!(cfg.schedule(), Some(&[10.0, 100.0][..]));
    }
}
