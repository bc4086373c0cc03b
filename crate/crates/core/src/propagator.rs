//! Integration of the moment equations and Markovian steady states.

use nalgebra::{Matrix4, SMatrix, SVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generator::{MomentFlow, MomentGenerator};
use crate::model::CovarianceMatrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PropagateError {
    #[error("step size underflow at t = {t} (h = {h:e}); the configuration is stiff or unstable")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("state became non-finite at t = {0}")]
    NonFiniteState(f64),
    #[error("exceeded {0} integration steps")]
    TooManySteps(usize),
    #[error("invalid integration request: {0}")]
    InvalidRequest(String),
    #[error("drift is not dissipative: max Re(eig M) = {max_real:e}")]
    NotDissipative { max_real: f64 },
    #[error("Lyapunov system is singular")]
    SingularLyapunov,
    #[error("steady state requires a time-independent generator")]
    TimeDependent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub tolerances: Tolerances,
    pub initial_step: Option<f64>,
    pub max_step: Option<f64>,
    pub max_steps: usize,
    /// Keep the interpolant of every step so the trajectory can be
    /// evaluated between samples.
    pub keep_dense: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            initial_step: None,
            max_step: None,
            max_steps: 20_000_000,
            keep_dense: true,
        }
    }
}

impl EvolveOptions {
    pub fn with_tolerances(tolerances: Tolerances) -> Self {
        Self {
            tolerances,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    /// Largest normalized error estimate among accepted steps (≤ 1).
    pub max_local_error: f64,
}

#[derive(Debug, Clone)]
struct DenseSegment {
    t0: f64,
    h: f64,
    coeffs: [Matrix4<f64>; 5],
}

impl DenseSegment {
    fn eval(&self, t: f64) -> Matrix4<f64> {
        let s = ((t - self.t0) / self.h).clamp(0.0, 1.0);
        let s1 = 1.0 - s;
        let c = &self.coeffs;
        c[0] + (c[1] + (c[2] + (c[3] + c[4] * s1) * s) * s1) * s
    }
}

/// Sampled solution of the moment equations.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<CovarianceMatrix>,
    stats: IntegrationStats,
    dense: Vec<DenseSegment>,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[CovarianceMatrix] {
        &self.states
    }

    pub fn stats(&self) -> &IntegrationStats {
        &self.stats
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn has_dense_output(&self) -> bool {
        !self.dense.is_empty()
    }

    /// σ(t) from the step interpolants, or `None` outside the integrated
    /// range or without dense output.
    pub fn state_at(&self, t: f64) -> Option<CovarianceMatrix> {
        let first = self.dense.first()?;
        let last = self.dense.last()?;
        if t < first.t0 || t > last.t0 + last.h {
            return None;
        }
        let idx = self.dense.partition_point(|s| s.t0 + s.h < t);
        let seg = &self.dense[idx.min(self.dense.len() - 1)];
        Some(CovarianceMatrix::symmetrized(seg.eval(t)))
    }

    /// Builds a trajectory from explicit samples (no dense output).
    pub fn from_samples(times: Vec<f64>, states: Vec<CovarianceMatrix>) -> Result<Self, PropagateError> {
        if times.len() != states.len() {
            return Err(PropagateError::InvalidRequest(
                "times and states differ in length".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(PropagateError::InvalidRequest(
                "times must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            times,
            states,
            stats: IntegrationStats::default(),
            dense: Vec::new(),
        })
    }
}

const A: [[f64; 6]; 6] = [
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

fn symmetrize(m: Matrix4<f64>) -> Matrix4<f64> {
    0.5 * (m + m.transpose())
}

fn is_finite(m: &Matrix4<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

fn error_norm(err: &Matrix4<f64>, y0: &Matrix4<f64>, y1: &Matrix4<f64>, tol: &Tolerances) -> f64 {
    let mut acc = 0.0;
    for i in 0..16 {
        let scale = tol.atol + tol.rtol * y0[i].abs().max(y1[i].abs());
        acc += (err[i] / scale).powi(2);
    }
    (acc / 16.0).sqrt()
}

fn rms_scaled(v: &Matrix4<f64>, y: &Matrix4<f64>, tol: &Tolerances) -> f64 {
    let mut acc = 0.0;
    for i in 0..16 {
        acc += (v[i] / (tol.atol + tol.rtol * y[i].abs())).powi(2);
    }
    (acc / 16.0).sqrt()
}

struct Field<'a> {
    flow: &'a dyn MomentFlow,
    evaluations: usize,
}

impl Field<'_> {
    fn eval(&mut self, t: f64, y: &Matrix4<f64>) -> Matrix4<f64> {
        self.evaluations += 1;
        self.flow.generator_at(t).rate(y)
    }
}

// Hairer–Nørsett–Wanner starting step heuristic.
fn initial_step(field: &mut Field, t0: f64, y0: &Matrix4<f64>, f0: &Matrix4<f64>, tol: &Tolerances) -> f64 {
    let d0 = rms_scaled(y0, y0, tol);
    let d1 = rms_scaled(f0, y0, tol);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let y1 = y0 + f0 * h0;
    let f1 = field.eval(t0 + h0, &y1);
    let d2 = rms_scaled(&(f1 - f0), y0, tol) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}

/// Integrates from σ(0) = `sigma0` to `horizon`, sampling every
/// `sample_dt` (and at `horizon` itself).
pub fn evolve(
    flow: &dyn MomentFlow,
    sigma0: &CovarianceMatrix,
    horizon: f64,
    sample_dt: f64,
    opts: &EvolveOptions,
) -> Result<Trajectory, PropagateError> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(PropagateError::InvalidRequest(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    if !(sample_dt > 0.0 && sample_dt.is_finite()) {
        return Err(PropagateError::InvalidRequest(format!(
            "sample_dt must be positive, got {sample_dt}"
        )));
    }
    let tol = opts.tolerances;
    let nsamples = (horizon / sample_dt * (1.0 + 1e-12)).floor() as usize;
    let mut sample_times: Vec<f64> = (0..=nsamples).map(|k| k as f64 * sample_dt).collect();
    if horizon - sample_times[nsamples] > 1e-9 * sample_dt {
        sample_times.push(horizon);
    } else {
        sample_times[nsamples] = horizon;
    }

    let mut field = Field {
        flow,
        evaluations: 0,
    };
    let mut stats = IntegrationStats::default();
    let mut times = Vec::with_capacity(sample_times.len());
    let mut states = Vec::with_capacity(sample_times.len());
    let mut dense = Vec::new();
    times.push(0.0);
    states.push(*sigma0);
    let mut next_sample = 1;

    let mut t = 0.0;
    let mut y = *sigma0.matrix();
    let mut k1 = field.eval(t, &y);
    let max_step = opts.max_step.unwrap_or(horizon).min(horizon);
    let mut h = opts
        .initial_step
        .unwrap_or_else(|| initial_step(&mut field, t, &y, &k1, &tol));
    if let Some(limit) = flow.initial_step_limit() {
        h = h.min(limit);
    }
    h = h.min(max_step);
    let mut last_rejected = false;

    while t < horizon {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(PropagateError::TooManySteps(opts.max_steps));
        }
        let mut last = false;
        if t + h >= horizon || t + 1.01 * h >= horizon {
            h = horizon - t;
            last = true;
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(PropagateError::StepSizeUnderflow { t, h });
        }

        let mut k = [Matrix4::zeros(); 7];
        k[0] = k1;
        for s in 0..6 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s + 1) {
                if A[s][j] != 0.0 {
                    ys += kj * (h * A[s][j]);
                }
            }
            if s == 5 {
                // Stage 7 is evaluated at the propagated solution (FSAL).
                let y1 = symmetrize(ys);
                k[6] = symmetrize(field.eval(t + h, &y1));
            } else {
                k[s + 1] = field.eval(t + C[s] * h, &ys);
            }
        }
        let mut y1 = y;
        for (j, kj) in k.iter().enumerate().take(6) {
            if A[5][j] != 0.0 {
                y1 += kj * (h * A[5][j]);
            }
        }
        let y1 = symmetrize(y1);
        let mut err = Matrix4::zeros();
        for (j, kj) in k.iter().enumerate() {
            if E[j] != 0.0 {
                err += kj * (h * E[j]);
            }
        }
        let finite = is_finite(&y1) && is_finite(&k[6]);
        let en = if finite {
            error_norm(&err, &y, &y1, &tol)
        } else {
            f64::INFINITY
        };

        if en <= 1.0 {
            stats.accepted += 1;
            stats.max_local_error = stats.max_local_error.max(en);
            let t1 = if last { horizon } else { t + h };
            let c1 = y1 - y;
            let c2 = k[0] * h - c1;
            let c3 = c1 - k[6] * h - c2;
            let mut c4 = Matrix4::zeros();
            for (j, kj) in k.iter().enumerate() {
                if D[j] != 0.0 {
                    c4 += kj * (h * D[j]);
                }
            }
            let seg = DenseSegment {
                t0: t,
                h,
                coeffs: [y, c1, c2, c3, c4],
            };
            while next_sample < sample_times.len() && sample_times[next_sample] <= t1 {
                let ts = sample_times[next_sample];
                let ys = if ts == t1 { y1 } else { seg.eval(ts) };
                times.push(ts);
                states.push(CovarianceMatrix::symmetrized(ys));
                next_sample += 1;
            }
            if opts.keep_dense {
                dense.push(seg);
            }
            t = t1;
            y = y1;
            k1 = k[6];
            let fac = if en == 0.0 { 10.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 10.0) };
            let fac = if last_rejected { fac.min(1.0) } else { fac };
            h = (h * fac).min(max_step);
            last_rejected = false;
        } else {
            if !finite && h < 1e-10 {
                return Err(PropagateError::NonFiniteState(t));
            }
            stats.rejected += 1;
            let fac = if en.is_finite() {
                (0.9 * en.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.1
            };
            h *= fac;
            last_rejected = true;
        }
    }
    if !is_finite(&y) {
        return Err(PropagateError::NonFiniteState(t));
    }
    stats.evaluations = field.evaluations;
    Ok(Trajectory {
        times,
        states,
        stats,
        dense,
    })
}

/// Largest real part of the drift eigenvalues.
pub fn spectral_abscissa(g: &MomentGenerator) -> f64 {
    g.drift()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Solves M σ + σ Mᵀ + N = 0 through the 16×16 Kronecker system.
pub fn steady_state(g: &MomentGenerator) -> Result<CovarianceMatrix, PropagateError> {
    let max_real = spectral_abscissa(g);
    if !(max_real < -1e-12) {
        return Err(PropagateError::NotDissipative { max_real });
    }
    let m = g.drift();
    let mut a = SMatrix::<f64, 16, 16>::zeros();
    // Column-major vec: vec(Mσ) = (I⊗M) vec σ, vec(σMᵀ) = (M⊗I) vec σ.
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                a[(i + 4 * j, k + 4 * j)] += m[(i, k)];
                a[(i + 4 * j, i + 4 * k)] += m[(j, k)];
            }
        }
    }
    let rhs = -SVector::<f64, 16>::from_column_slice(g.diffusion().as_slice());
    let sol = a.lu().solve(&rhs).ok_or(PropagateError::SingularLyapunov)?;
    let sigma = Matrix4::from_column_slice(sol.as_slice());
    if !is_finite(&sigma) {
        return Err(PropagateError::SingularLyapunov);
    }
    Ok(CovarianceMatrix::symmetrized(sigma))
}

/// Steady state of any flow that is actually time independent.
pub fn steady_state_of(flow: &dyn MomentFlow) -> Result<CovarianceMatrix, PropagateError> {
    if flow.is_time_dependent() {
        return Err(PropagateError::TimeDependent);
    }
    steady_state(&flow.generator_at(0.0))
}
