use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bath::BathParams;
use crate::generator::BathTopology;
use crate::model::SystemParams;
use crate::propagator::Tolerances;

use super::ScanError;

pub const DEFAULT_HORIZON: f64 = 500.0;
pub const DEFAULT_SETTLE_WINDOW: f64 = 50.0;
pub const DEFAULT_SAMPLE_DT: f64 = 0.05;

fn default_horizon() -> f64 {
    DEFAULT_HORIZON
}
fn default_settle() -> f64 {
    DEFAULT_SETTLE_WINDOW
}
fn default_dt() -> f64 {
    DEFAULT_SAMPLE_DT
}
fn default_threshold() -> f64 {
    crate::measures::DEFAULT_THRESHOLD
}
fn yes() -> bool {
    true
}
fn separate() -> BathTopology {
    BathTopology::Separate
}

/// Everything needed to reproduce a run, scan or comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default = "yes")]
    pub markovian: bool,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_dt")]
    pub sample_dt: f64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_settle")]
    pub settle_window: f64,
    /// Frequencies defining n₁, n₂ in the twin correlation; (ω₁, ω₂) if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_frequencies: Option<[f64; 2]>,
    pub system: SystemParams,
    pub bath: BathParams,
    #[serde(default = "separate")]
    pub topology: BathTopology,
    pub initial: InitialState,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub non_markovian: NonMarkovianOptions,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub grid: Vec<GridAxis>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<PointOverride>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    /// Two-mode squeezing amplitude.
    pub r: f64,
    /// Frequency of the reference vacuum that is squeezed; ω₁ if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_ref: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonMarkovianOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saturation: Option<f64>,
    /// Evaluate the coefficients by quadrature at every step instead of
    /// interpolating a table. Slow.
    #[serde(default)]
    pub direct: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanParam {
    Omega2,
    Lambda,
    R,
    Gamma,
    #[serde(rename = "kT")]
    Kt,
    Cutoff,
    /// c₁/c₂ of a weighted common bath, with c₂ held fixed.
    WeightRatio,
}

impl ScanParam {
    pub fn column(&self) -> &'static str {
        match self {
            ScanParam::Omega2 => "omega2",
            ScanParam::Lambda => "lambda",
            ScanParam::R => "r",
            ScanParam::Gamma => "gamma",
            ScanParam::Kt => "kT",
            ScanParam::Cutoff => "cutoff",
            ScanParam::WeightRatio => "weight_ratio",
        }
    }
}

/// A scan axis: either `count` evenly spaced values from `start` to `stop`
/// inclusive, or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxis {
    pub param: ScanParam,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl GridAxis {
    pub fn linear(param: ScanParam, start: f64, stop: f64, count: usize) -> Self {
        Self {
            param,
            start: Some(start),
            stop: Some(stop),
            count: Some(count),
            values: None,
        }
    }

    pub fn explicit(param: ScanParam, values: Vec<f64>) -> Self {
        Self {
            param,
            start: None,
            stop: None,
            count: None,
            values: Some(values),
        }
    }

    pub fn values(&self) -> Result<Vec<f64>, ScanError> {
        let bad = |msg: &str| ScanError::Config(format!("grid axis {}: {msg}", self.param.column()));
        let out = match (&self.values, self.start, self.stop, self.count) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(n)) => match n {
                0 => Vec::new(),
                1 => vec![a],
                _ => (0..n)
                    .map(|i| {
                        if i + 1 == n {
                            b
                        } else {
                            a + (b - a) * i as f64 / (n - 1) as f64
                        }
                    })
                    .collect(),
            },
            _ => return Err(bad("give either `values` or all of `start`, `stop`, `count`")),
        };
        if out.is_empty() {
            return Err(bad("axis is empty"));
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(bad("values must be finite"));
        }
        Ok(out)
    }
}

/// A labelled variant of the base point, for multi-curve runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointOverride {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Also write a JSON-lines mirror next to the CSV.
    #[serde(default)]
    pub jsonl: bool,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ScanError> {
        toml::from_str(text).map_err(|e| ScanError::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self, ScanError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScanError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// A checked-in preset by name.
    pub fn preset(name: &str) -> Result<Self, ScanError> {
        let text = super::presets::source(name).ok_or_else(|| {
            ScanError::Config(format!(
                "unknown preset {name:?}; available: {}",
                super::presets::names().join(", ")
            ))
        })?;
        Self::from_toml_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn omega_ref(&self) -> f64 {
        self.initial.omega_ref.unwrap_or(self.system.omega1)
    }

    pub fn d_frequencies(&self) -> [f64; 2] {
        self.d_frequencies
            .unwrap_or([self.system.omega1, self.system.omega2])
    }

    /// Checks that do not depend on the physical point.
    pub fn validate_run_settings(&self) -> Result<(), ScanError> {
        let cfg = |m: String| Err(ScanError::Config(m));
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return cfg(format!("horizon must be positive, got {}", self.horizon));
        }
        if !(self.sample_dt > 0.0 && self.sample_dt <= self.horizon) {
            return cfg(format!(
                "sample_dt must lie in (0, horizon], got {}",
                self.sample_dt
            ));
        }
        if !(self.threshold > 0.0 && self.threshold.is_finite()) {
            return cfg(format!("threshold must be positive, got {}", self.threshold));
        }
        if !(self.settle_window >= 0.0 && self.settle_window < self.horizon) {
            return cfg(format!(
                "settle_window must lie in [0, horizon), got {}",
                self.settle_window
            ));
        }
        let t = self.tolerances;
        if !(t.rtol > 0.0 && t.atol >= 0.0 && t.rtol.is_finite() && t.atol.is_finite()) {
            return cfg(format!("invalid tolerances rtol = {}, atol = {}", t.rtol, t.atol));
        }
        if let Some([a, b]) = self.d_frequencies {
            if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                return cfg(format!("d_frequencies must be positive, got [{a}, {b}]"));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for p in &self.points {
            if !seen.insert(p.label.as_str()) {
                return cfg(format!("duplicate point label {:?}", p.label));
            }
        }
        Ok(())
    }

    /// The same experiment with one parameter replaced.
    pub fn with_param(&self, param: ScanParam, value: f64) -> Result<Self, ScanError> {
        let mut c = self.clone();
        match param {
            ScanParam::Omega2 => c.system.omega2 = value,
            ScanParam::Lambda => c.system.lambda = value,
            ScanParam::R => c.initial.r = value,
            ScanParam::Gamma => c.bath.gamma = value,
            ScanParam::Kt => c.bath.kt = value,
            ScanParam::Cutoff => c.bath.cutoff = value,
            ScanParam::WeightRatio => match c.topology {
                BathTopology::WeightedCommon { c2, .. } if c2 != 0.0 => {
                    c.topology = BathTopology::WeightedCommon { c1: value * c2, c2 }
                }
                _ => {
                    return Err(ScanError::Config(
                        "weight_ratio axis needs a weighted_common topology with c2 != 0".into(),
                    ))
                }
            },
        }
        Ok(c)
    }

    pub fn with_point(&self, p: &PointOverride) -> Self {
        let mut c = self.clone();
        c.system.omega2 = p.omega2.unwrap_or(c.system.omega2);
        c.system.lambda = p.lambda.unwrap_or(c.system.lambda);
        c.initial.r = p.r.unwrap_or(c.initial.r);
        c.points.clear();
        c.name = Some(p.label.clone());
        c
    }
}
