//! Experiment configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use hjreg_core::hamilton_jacobi::Scheme;
use hjreg_core::io::DomainSpec;
use hjreg_core::regularity::BoundConstants;

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_domain")]
    pub domain: DomainSpec,
    pub n: usize,
    pub coefficient: CoefficientSpec,
    pub boundary: BoundarySpec,
    /// Constant right-hand side `m`.
    #[serde(default = "one")]
    pub rhs: f64,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub measurement: Option<MeasurementSettings>,
    #[serde(default)]
    pub seed: u64,
}

fn default_domain() -> DomainSpec {
    DomainSpec::Disk { radius: 1.0 }
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientSpec {
    Mueller {
        alpha: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    Constant {
        vector: [f64; 2],
    },
    File {
        path: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundarySpec {
    Zero,
    MuellerTrace,
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub tol: Option<f64>,
    pub max_cycles: usize,
    pub scheme: Scheme,
    /// Vanishing-viscosity runs for `solve-hj`, one per entry.
    pub epsilon_schedule: Vec<f64>,
    pub obstacle_tol: f64,
    pub obstacle_max_iters: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol: None,
            max_cycles: 2000,
            scheme: Scheme::Godunov,
            epsilon_schedule: Vec::new(),
            obstacle_tol: 1e-10,
            obstacle_max_iters: 1_000_000,
        }
    }
}

/// Which field `measure` works on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSource {
    /// The exact Müller solution; needs a Müller coefficient.
    Exact,
    Upper,
    Obstacle,
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PlaneSpec {
    /// Least squares over three spacings.
    Fit,
    Given { value: f64, gradient: [f64; 2] },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSettings {
    pub field: FieldSource,
    #[serde(default = "origin")]
    pub centers: Vec<[f64; 2]>,
    /// Explicit radii; otherwise lattice radii across `window`.
    #[serde(default)]
    pub radii: Option<Vec<f64>>,
    /// Defaults to `[8 spacing, depth / 4]`.
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    #[serde(default = "four")]
    pub per_octave: usize,
    #[serde(default = "fit")]
    pub plane: PlaneSpec,
    pub alpha: f64,
    #[serde(default)]
    pub beta: Option<f64>,
    /// Hölder seminorm `A` of the shift.
    #[serde(default = "one")]
    pub holder_a: f64,
    /// Anisotropic radii; empty skips the diagnostic.
    #[serde(default)]
    pub anisotropic_radii: Vec<f64>,
    #[serde(default)]
    pub levels: Vec<f64>,
    #[serde(default)]
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub constants: BoundConstants,
}

fn origin() -> Vec<[f64; 2]> {
    vec![[0.0, 0.0]]
}

fn four() -> usize {
    4
}

fn fit() -> PlaneSpec {
    PlaneSpec::Fit
}

impl ExperimentConfig {
    /// Parses `text`; relative paths are taken against `base`.
    pub fn parse(text: &str, base: &Path, origin: &str) -> Result<Self, CliError> {
        let mut cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("{origin}:{}:{}: {e}", e.line(), e.column())))?;
        cfg.resolve(base);
        cfg.validate().map_err(|m| CliError::Config(format!("{origin}: {m}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base, &path.display().to_string())
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let CoefficientSpec::File { path } = &mut self.coefficient {
            fix(path);
        }
        if let BoundarySpec::File { path } = &mut self.boundary {
            fix(path);
        }
        if let Some(MeasurementSettings { field: FieldSource::File { path }, .. }) = &mut self.measurement {
            fix(path);
        }
    }

    fn validate(&self) -> Result<(), String> {
        let exists = |field: &str, p: &Path| if p.is_file() { Ok(()) } else { Err(format!("{field}: no file at {}", p.display())) };
        if let CoefficientSpec::File { path } = &self.coefficient {
            exists("coefficient.file.path", path)?;
        }
        if let BoundarySpec::File { path } = &self.boundary {
            exists("boundary.file.path", path)?;
        }
        if let Some(m) = &self.measurement {
            if let FieldSource::File { path } = &m.field {
                exists("measurement.field.file.path", path)?;
            }
            if m.centers.is_empty() {
                return Err("measurement.centers: need at least one centre".into());
            }
            if m.per_octave == 0 {
                return Err("measurement.per_octave: must be positive".into());
            }
            if m.field == FieldSource::Exact && !matches!(self.coefficient, CoefficientSpec::Mueller { .. }) {
                return Err("measurement.field: exact needs a mueller coefficient".into());
            }
        }
        if self.boundary == BoundarySpec::MuellerTrace && !matches!(self.coefficient, CoefficientSpec::Mueller { .. }) {
            return Err("boundary: mueller_trace needs a mueller coefficient".into());
        }
        if !(self.rhs > 0.0) {
            return Err(format!("rhs: must be positive, got {}", self.rhs));
        }
        if self.solver.epsilon_schedule.iter().any(|e| !(*e > 0.0)) {
            return Err("solver.epsilon_schedule: entries must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MIN: &str = r#"{"n": 33, "coefficient": {"constant": {"vector": [0, 0]}}, "boundary": "zero"}"#;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = ExperimentConfig::parse(MIN, Path::new("."), "cfg").unwrap();
        assert_eq!(c.domain, DomainSpec::Disk { radius: 1.0 });
        assert_eq!(c.rhs, 1.0);
        assert_eq!(c.solver, SolverSettings::default());
        assert!(c.measurement.is_none());
    }

    #[test]
    fn diagnostics_name_line_and_field() {
        let bad = "{\n  \"n\": 33,\n  \"colour\": 1\n}";
        let msg = ExperimentConfig::parse(bad, Path::new("."), "cfg").unwrap_err().to_string();
        assert!(msg.contains("cfg:3:") && msg.contains("colour"), "{msg}");
        let two = r#"{"n": 33, "coefficient": {"constant": {"vector": [0, 0]}, "mueller": {"alpha": 0.5}}, "boundary": "zero"}"#;
        assert!(ExperimentConfig::parse(two, Path::new("."), "cfg").is_err());
        let trace = r#"{"n": 33, "coefficient": {"constant": {"vector": [0, 0]}}, "boundary": "mueller_trace"}"#;
        let msg = ExperimentConfig::parse(trace, Path::new("."), "cfg").unwrap_err().to_string();
        assert!(msg.contains("mueller_trace"), "{msg}");
    }

    #[test]
    fn missing_files_are_config_errors() {
        let cfg = r#"{"n": 33, "coefficient": {"file": {"path": "nope.txt"}}, "boundary": "zero"}"#;
        let e = ExperimentConfig::parse(cfg, Path::new("/nonexistent"), "cfg").unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("/nonexistent/nope.txt"));
    }
}
