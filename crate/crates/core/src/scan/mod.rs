//! Experiment drivers: single runs, parameter scans of the death time and
//! Markovian versus non-Markovian comparisons.

mod config;
pub mod output;
pub mod presets;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bath::{BathError, ScheduleOptions};
use crate::generator::{markovian_generator, GeneratorError, MomentFlow, TimeDependentGenerator};
use crate::measures::{
    death_time, last_crossing, symplectic_eigenvalues, twin_correlation, DeathTime,
    MeasureError,
};
use crate::model::{tms_covariance, CovarianceMatrix, ModelError, ValidatedParams};
use crate::propagator::{evolve, EvolveOptions, IntegrationStats, PropagateError, Trajectory};

pub use config::{
    ExperimentConfig, GridAxis, InitialState, NonMarkovianOptions, OutputSpec, PointOverride,
    ScanParam, DEFAULT_HORIZON, DEFAULT_SAMPLE_DT, DEFAULT_SETTLE_WINDOW,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl ScanError {
    /// 1 for bad input (including unwritable output), 2 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScanError::Numerical(_) => 2,
            ScanError::Config(_) | ScanError::Io(_) => 1,
        }
    }
}

impl From<ModelError> for ScanError {
    fn from(e: ModelError) -> Self {
        ScanError::Config(e.to_string())
    }
}

impl From<BathError> for ScanError {
    fn from(e: BathError) -> Self {
        match e {
            BathError::MatsubaraNonconvergence { .. }
            | BathError::Quadrature(_)
            | BathError::MismatchedParams => ScanError::Numerical(e.to_string()),
            _ => ScanError::Config(e.to_string()),
        }
    }
}

impl From<GeneratorError> for ScanError {
    fn from(e: GeneratorError) -> Self {
        match e {
            GeneratorError::Bath(b) => b.into(),
            other => ScanError::Config(other.to_string()),
        }
    }
}

impl From<PropagateError> for ScanError {
    fn from(e: PropagateError) -> Self {
        match e {
            PropagateError::InvalidRequest(m) => ScanError::Config(m),
            other => ScanError::Numerical(other.to_string()),
        }
    }
}

impl From<MeasureError> for ScanError {
    fn from(e: MeasureError) -> Self {
        match e {
            MeasureError::InvalidRequest(m) => ScanError::Config(m),
            other => ScanError::Numerical(other.to_string()),
        }
    }
}

/// Derived quantities at one sample time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeRecord {
    pub t: f64,
    pub log_negativity: f64,
    pub twin_correlation: f64,
    /// Smallest symplectic eigenvalue of the partial transpose.
    pub nu_minus: f64,
    pub purity: f64,
    /// Upper triangle of σ, row major.
    pub sigma: [f64; 10],
}

impl TimeRecord {
    pub fn from_state(t: f64, s: &CovarianceMatrix, d_freqs: [f64; 2]) -> Result<Self, ScanError> {
        let (nu, _) = symplectic_eigenvalues(s, true)?;
        let mut sigma = [0.0; 10];
        let mut k = 0;
        for i in 0..4 {
            for j in i..4 {
                sigma[k] = s.entry(i, j);
                k += 1;
            }
        }
        Ok(Self {
            t,
            log_negativity: (-(2.0 * nu).log2()).max(0.0),
            twin_correlation: twin_correlation(s, d_freqs[0], d_freqs[1]),
            nu_minus: nu,
            purity: s.purity(),
            sigma,
        })
    }
}

/// The result of integrating one configuration.
#[derive(Debug, Clone)]
pub struct SingleRun {
    pub label: String,
    pub records: Vec<TimeRecord>,
    pub death_time: DeathTime,
    pub peak_log_negativity: f64,
    pub stats: IntegrationStats,
    pub trajectory: Trajectory,
}

impl SingleRun {
    /// Last time at which −d exceeds `threshold`, i.e. the death time of
    /// the nonclassical twin correlation. `None` if d is never negative.
    pub fn twin_death_time(&self, d_freqs: [f64; 2], threshold: f64) -> Option<f64> {
        let minus_d: Vec<f64> = self.records.iter().map(|r| -r.twin_correlation).collect();
        let times: Vec<f64> = self.records.iter().map(|r| r.t).collect();
        last_crossing(&times, &minus_d, threshold, |t| {
            self.trajectory
                .state_at(t)
                .map(|s| -twin_correlation(&s, d_freqs[0], d_freqs[1]))
        })
    }
}

enum Flow {
    Markovian(crate::generator::MomentGenerator),
    NonMarkovian(TimeDependentGenerator),
}

impl Flow {
    fn as_dyn(&self) -> &dyn MomentFlow {
        match self {
            Flow::Markovian(g) => g,
            Flow::NonMarkovian(g) => g,
        }
    }
}

fn build_flow(cfg: &ExperimentConfig, p: &ValidatedParams) -> Result<Flow, ScanError> {
    cfg.bath.validate()?;
    cfg.topology.validate()?;
    if cfg.markovian {
        return Ok(Flow::Markovian(markovian_generator(p, &cfg.bath, &cfg.topology)?));
    }
    let nm = &cfg.non_markovian;
    let g = if nm.direct {
        TimeDependentGenerator::direct(p, &cfg.bath, &cfg.topology)?
    } else {
        let opts = ScheduleOptions {
            step: nm.step,
            saturation: nm.saturation,
        };
        TimeDependentGenerator::new(p, &cfg.bath, &cfg.topology, cfg.horizon, &opts)?
    };
    Ok(Flow::NonMarkovian(g))
}

/// Integrates the base point of `cfg` (ignoring `grid` and `points`).
pub fn run_point(cfg: &ExperimentConfig) -> Result<SingleRun, ScanError> {
    cfg.validate_run_settings()?;
    let params = cfg.system.validate()?;
    let sigma0 = tms_covariance(cfg.initial.r, cfg.omega_ref())?;
    let flow = build_flow(cfg, &params)?;
    let opts = EvolveOptions::with_tolerances(cfg.tolerances);
    let traj = evolve(flow.as_dyn(), &sigma0, cfg.horizon, cfg.sample_dt, &opts)?;
    let d_freqs = cfg.d_frequencies();
    let records = traj
        .times()
        .iter()
        .zip(traj.states())
        .map(|(&t, s)| TimeRecord::from_state(t, s, d_freqs))
        .collect::<Result<Vec<_>, _>>()?;
    let dt = death_time(&traj, cfg.threshold, cfg.settle_window)?;
    let peak = records
        .iter()
        .map(|r| r.log_negativity)
        .fold(0.0, f64::max);
    Ok(SingleRun {
        label: cfg.name.clone().unwrap_or_else(|| "run".into()),
        records,
        death_time: dt,
        peak_log_negativity: peak,
        stats: *traj.stats(),
        trajectory: traj,
    })
}

/// Time series for a point configuration.
pub fn run_single(cfg: &ExperimentConfig) -> Result<SingleRun, ScanError> {
    if !cfg.grid.is_empty() || !cfg.points.is_empty() {
        return Err(ScanError::Config(
            "run_single needs a point configuration without grid or points".into(),
        ));
    }
    run_point(cfg)
}

/// One time series per entry of `points` (or the base point if there are
/// none), computed in parallel and returned in input order.
pub fn run_curves(cfg: &ExperimentConfig) -> Result<Vec<SingleRun>, ScanError> {
    if !cfg.grid.is_empty() {
        return Err(ScanError::Config("`run` takes no grid; use `scan`".into()));
    }
    cfg.validate_run_settings()?;
    if cfg.points.is_empty() {
        return Ok(vec![run_point(cfg)?]);
    }
    cfg.points
        .par_iter()
        .map(|p| run_point(&cfg.with_point(p)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Ok,
    /// Parameters outside the model's domain, e.g. |λ| ≥ ω₁ω₂.
    Skipped,
    /// Numerical failure at this point.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub index: usize,
    pub coords: Vec<f64>,
    pub status: PointStatus,
    pub death_time: Option<DeathTime>,
    pub peak_log_negativity: Option<f64>,
    pub message: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ScanOutput {
    pub axes: Vec<ScanParam>,
    pub shape: Vec<usize>,
    pub records: Vec<ScanRecord>,
}

impl ScanOutput {
    pub fn get(&self, i: usize, j: usize) -> &ScanRecord {
        let cols = self.shape.get(1).copied().unwrap_or(1);
        &self.records[i * cols + j]
    }
}

/// All grid points, first axis outermost. Points outside the model's
/// domain are recorded as skipped and numerical failures as failed; the
/// scan itself only fails on global configuration errors.
pub fn run_scan(cfg: &ExperimentConfig) -> Result<ScanOutput, ScanError> {
    if cfg.grid.is_empty() || cfg.grid.len() > 2 {
        return Err(ScanError::Config(format!(
            "a scan needs one or two grid axes, got {}",
            cfg.grid.len()
        )));
    }
    if !cfg.points.is_empty() {
        return Err(ScanError::Config("`points` cannot be combined with a grid".into()));
    }
    cfg.validate_run_settings()?;
    let axes: Vec<ScanParam> = cfg.grid.iter().map(|a| a.param).collect();
    if axes.len() == 2 && axes[0] == axes[1] {
        return Err(ScanError::Config("grid axes must differ".into()));
    }
    let values = cfg
        .grid
        .iter()
        .map(GridAxis::values)
        .collect::<Result<Vec<_>, _>>()?;
    for a in &axes {
        if *a == ScanParam::WeightRatio {
            cfg.with_param(*a, 1.0)?;
        }
    }
    let shape: Vec<usize> = values.iter().map(Vec::len).collect();
    let total: usize = shape.iter().product();
    let coords = |k: usize| -> Vec<f64> {
        if values.len() == 1 {
            vec![values[0][k]]
        } else {
            vec![values[0][k / shape[1]], values[1][k % shape[1]]]
        }
    };
    let records = (0..total)
        .into_par_iter()
        .map(|k| {
            let c = coords(k);
            let mut point = cfg.clone();
            point.grid.clear();
            for (a, v) in axes.iter().zip(&c) {
                point = point.with_param(*a, *v).expect("axes checked above");
            }
            match run_point(&point) {
                Ok(run) => ScanRecord {
                    index: k,
                    coords: c,
                    status: PointStatus::Ok,
                    death_time: Some(run.death_time),
                    peak_log_negativity: Some(run.peak_log_negativity),
                    message: None,
                },
                Err(e) => ScanRecord {
                    index: k,
                    coords: c,
                    status: if e.exit_code() == 2 {
                        PointStatus::Failed
                    } else {
                        PointStatus::Skipped
                    },
                    death_time: None,
                    peak_log_negativity: None,
                    message: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(ScanOutput {
        axes,
        shape,
        records,
    })
}

/// Markovian and non-Markovian evolutions of the same point on a shared
/// sample grid.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub markovian: SingleRun,
    pub non_markovian: SingleRun,
}

impl Comparison {
    /// t_F(non-Markovian) − t_F(Markovian); NaN unless both are finite.
    pub fn delta_death_time(&self) -> f64 {
        match (self.markovian.death_time, self.non_markovian.death_time) {
            (DeathTime::Finite { t_f: a }, DeathTime::Finite { t_f: b }) => b - a,
            _ => f64::NAN,
        }
    }

    pub fn relative_delta_death_time(&self) -> f64 {
        self.delta_death_time() / self.markovian.death_time.value()
    }

    pub fn delta_peak(&self) -> f64 {
        self.non_markovian.peak_log_negativity - self.markovian.peak_log_negativity
    }

    /// max E_N(non-Markovian) / max E_N(Markovian).
    pub fn peak_ratio(&self) -> f64 {
        self.non_markovian.peak_log_negativity / self.markovian.peak_log_negativity
    }

    /// Largest pointwise |ΔE_N| over the shared samples.
    pub fn max_abs_difference(&self) -> f64 {
        self.markovian
            .records
            .iter()
            .zip(&self.non_markovian.records)
            .map(|(a, b)| (a.log_negativity - b.log_negativity).abs())
            .fold(0.0, f64::max)
    }
}

pub fn run_compare(cfg: &ExperimentConfig) -> Result<Comparison, ScanError> {
    if !cfg.grid.is_empty() || !cfg.points.is_empty() {
        return Err(ScanError::Config(
            "`compare` needs a point configuration without grid or points".into(),
        ));
    }
    let variant = |markovian: bool, label: &str| {
        let mut c = cfg.clone();
        c.markovian = markovian;
        c.name = Some(label.into());
        c
    };
    let (m, n) = rayon::join(
        || run_point(&variant(true, "markovian")),
        || run_point(&variant(false, "non_markovian")),
    );
    Ok(Comparison {
        markovian: m?,
        non_markovian: n?,
    })
}
