//! Run configuration: one JSON document per invocation.

use std::path::{Path, PathBuf};

use retspec::problem::{ProblemConfig, DEFAULT_QUADRATURE};
use retspec::spectral::DEFAULT_REFINE_TOL;
use retspec::{dde::DEFAULT_STEPS, ProblemSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub range: Option<RangeConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub steps_per_segment: usize,
    pub refine_tol: f64,
    pub quadrature_points: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            steps_per_segment: DEFAULT_STEPS,
            refine_tol: DEFAULT_REFINE_TOL,
            quadrature_points: DEFAULT_QUADRATURE,
        }
    }
}

/// Either an index range or an `s` grid; exactly one must be given.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_min: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Range {
    Indices {
        n_min: usize,
        n_max: usize,
    },
    Grid {
        s_min: f64,
        s_max: f64,
        samples: usize,
    },
}

impl Range {
    pub fn indices(self) -> Option<(usize, usize)> {
        match self {
            Range::Indices { n_min, n_max } => Some((n_min, n_max)),
            Range::Grid { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub format: Format,
    /// Standard output when absent.
    #[serde(default)]
    pub path: Option<PathBuf>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RangeConfig {
    pub fn resolve(&self) -> Result<Range, CliError> {
        let n_any = self.n_min.is_some() || self.n_max.is_some();
        let s_any = self.s_min.is_some() || self.s_max.is_some() || self.samples.is_some();
        match (n_any, s_any) {
            (true, true) => Err(invalid(
                "range: give either n_min/n_max or s_min/s_max/samples, not both",
            )),
            (false, false) => Err(invalid("range: empty")),
            (true, false) => {
                let n_min = self.n_min.ok_or_else(|| invalid("range.n_min: missing"))?;
                let n_max = self.n_max.ok_or_else(|| invalid("range.n_max: missing"))?;
                if n_min == 0 {
                    return Err(invalid("range.n_min: must be at least 1"));
                }
                if n_max < n_min {
                    return Err(invalid("range.n_max: must not be below n_min"));
                }
                Ok(Range::Indices { n_min, n_max })
            }
            (false, true) => {
                let s_min = self.s_min.ok_or_else(|| invalid("range.s_min: missing"))?;
                let s_max = self.s_max.ok_or_else(|| invalid("range.s_max: missing"))?;
                let samples = self
                    .samples
                    .ok_or_else(|| invalid("range.samples: missing"))?;
                if !(s_min.is_finite() && s_min > 0.0) {
                    return Err(invalid("range.s_min: must be positive"));
                }
                if !(s_max.is_finite() && s_max >= s_min) {
                    return Err(invalid("range.s_max: must be finite and not below s_min"));
                }
                if samples == 0 {
                    return Err(invalid("range.samples: must be positive"));
                }
                Ok(Range::Grid {
                    s_min,
                    s_max,
                    samples,
                })
            }
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            invalid(format!("{path}: {}", e.inner()))
        })?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn check(&self) -> Result<(), CliError> {
        let s = &self.solver;
        if s.steps_per_segment == 0 {
            return Err(invalid("solver.steps_per_segment: must be positive"));
        }
        if !(s.refine_tol.is_finite() && s.refine_tol > 0.0) {
            return Err(invalid("solver.refine_tol: must be positive"));
        }
        if s.quadrature_points == 0 {
            return Err(invalid("solver.quadrature_points: must be positive"));
        }
        let p = &self.problem;
        for (key, v) in [
            ("alpha", p.alpha),
            ("beta", p.beta),
            ("coupling", p.coupling),
        ] {
            if !v.is_finite() {
                return Err(invalid(format!("problem.{key}: must be finite")));
            }
        }
        if let Some(r) = &self.range {
            r.resolve()?;
        }
        Ok(())
    }

    pub fn spec(&self) -> Result<ProblemSpec, CliError> {
        ProblemSpec::from_config(&self.problem).map_err(|e| invalid(format!("problem: {e}")))
    }

    pub fn range(&self) -> Result<Range, CliError> {
        self.range
            .as_ref()
            .ok_or_else(|| invalid("range: missing"))?
            .resolve()
    }
}
