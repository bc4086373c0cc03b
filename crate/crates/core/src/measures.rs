//! Entanglement and correlation measures of two-mode Gaussian states.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CovarianceMatrix, P1, P2, X1, X2};
use crate::propagator::Trajectory;

/// Default E_N level below which a state counts as separable.
pub const DEFAULT_THRESHOLD: f64 = 1e-10;
/// Time resolution of the refined death time.
pub const DEATH_TIME_RESOLUTION: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("covariance matrix is not positive definite")]
    NonPhysicalState,
    #[error("trajectory has no samples")]
    EmptyTrajectory,
    #[error("invalid death-time request: {0}")]
    InvalidRequest(String),
}

fn block(s: &CovarianceMatrix, rows: [usize; 2], cols: [usize; 2]) -> Matrix2<f64> {
    let m = s.matrix();
    Matrix2::new(
        m[(rows[0], cols[0])],
        m[(rows[0], cols[1])],
        m[(rows[1], cols[0])],
        m[(rows[1], cols[1])],
    )
}

/// Both symplectic eigenvalues (ν₋ ≤ ν₊) of σ, or of its partial
/// transpose (p₂ → −p₂) when requested.
pub fn symplectic_eigenvalues(
    sigma: &CovarianceMatrix,
    partial_transpose: bool,
) -> Result<(f64, f64), MeasureError> {
    if sigma.matrix().cholesky().is_none() {
        return Err(MeasureError::NonPhysicalState);
    }
    let (a, b, c) = (
        block(sigma, [X1, P1], [X1, P1]),
        block(sigma, [X2, P2], [X2, P2]),
        block(sigma, [X1, P1], [X2, P2]),
    );
    let sign = if partial_transpose { -1.0 } else { 1.0 };
    let delta = a.determinant() + b.determinant() + 2.0 * sign * c.determinant();
    let det = sigma.determinant();
    let disc = (delta * delta - 4.0 * det).max(0.0).sqrt();
    let minus_sq = 0.5 * (delta - disc);
    let plus_sq = 0.5 * (delta + disc);
    // Stable smaller root: ν₋² ν₊² = det σ.
    let minus_sq = if minus_sq < 1e-3 * plus_sq {
        det / plus_sq
    } else {
        minus_sq
    };
    Ok((minus_sq.max(0.0).sqrt(), plus_sq.sqrt()))
}

/// E_N = max(0, −log₂ 2ν̃₋).
pub fn log_negativity(sigma: &CovarianceMatrix) -> Result<f64, MeasureError> {
    let (nu, _) = symplectic_eigenvalues(sigma, true)?;
    Ok((-(2.0 * nu).log2()).max(0.0))
}

/// Tr ρ².
pub fn purity(sigma: &CovarianceMatrix) -> f64 {
    sigma.purity()
}

/// d = ⟨:(n₁ − n₂)²:⟩ with nᵢ defined through local frequencies.
///
/// Negative d signals nonclassical twin-beam correlations.
pub fn twin_correlation(sigma: &CovarianceMatrix, omega_a: f64, omega_b: f64) -> f64 {
    let s = |a, b| sigma.entry(a, b);
    let occupation = |x, p, w: f64| 0.5 * (w * s(x, x) + s(p, p) / w) - 0.5;
    let anomalous = |x, p, w: f64| {
        Complex64::new(0.5 * (w * s(x, x) - s(p, p) / w), s(x, p))
    };
    let n1 = occupation(X1, P1, omega_a);
    let n2 = occupation(X2, P2, omega_b);
    let m1 = anomalous(X1, P1, omega_a);
    let m2 = anomalous(X2, P2, omega_b);
    let r = (omega_a * omega_b).sqrt();
    let ra = (omega_a / omega_b).sqrt();
    // ⟨a₁a₂⟩ and ⟨a₁†a₂⟩
    let pair = 0.5
        * Complex64::new(
            r * s(X1, X2) - s(P1, P2) / r,
            ra * s(X1, P2) + s(P1, X2) / ra,
        );
    let hop = 0.5
        * Complex64::new(
            r * s(X1, X2) + s(P1, P2) / r,
            ra * s(X1, P2) - s(P1, X2) / ra,
        );
    2.0 * n1 * n1 + m1.norm_sqr() + 2.0 * n2 * n2 + m2.norm_sqr()
        - 2.0 * (n1 * n2 + hop.norm_sqr() + pair.norm_sqr())
}

/// Outcome of a death-time search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeathTime {
    Finite { t_f: f64 },
    CensoredAtHorizon { horizon: f64 },
    NeverEntangled,
}

impl DeathTime {
    /// t_F with censoring mapped to +∞ and never-entangled to 0.
    pub fn value(&self) -> f64 {
        match *self {
            DeathTime::Finite { t_f } => t_f,
            DeathTime::CensoredAtHorizon { .. } => f64::INFINITY,
            DeathTime::NeverEntangled => 0.0,
        }
    }

    pub fn is_censored(&self) -> bool {
        matches!(self, DeathTime::CensoredAtHorizon { .. })
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, DeathTime::Finite { .. })
    }
}

/// E_N at every sample.
pub fn log_negativity_series(traj: &Trajectory) -> Result<Vec<f64>, MeasureError> {
    traj.states().iter().map(log_negativity).collect()
}

/// d at every sample.
pub fn twin_correlation_series(traj: &Trajectory, omega_a: f64, omega_b: f64) -> Vec<f64> {
    traj.states()
        .iter()
        .map(|s| twin_correlation(s, omega_a, omega_b))
        .collect()
}

/// Last time at which `values` exceeds `threshold`, refined by bisection
/// on `refine` (or linear interpolation when `refine` yields nothing).
/// `None` if it never does.
pub fn last_crossing(
    times: &[f64],
    values: &[f64],
    threshold: f64,
    refine: impl Fn(f64) -> Option<f64>,
) -> Option<f64> {
    let last = values.iter().rposition(|&v| v > threshold)?;
    if last + 1 == values.len() {
        return Some(times[last]);
    }
    let (mut lo, mut hi) = (times[last], times[last + 1]);
    if refine(lo).is_none() {
        let (a, b) = (values[last] - threshold, values[last + 1] - threshold);
        return Some(lo + (hi - lo) * a / (a - b));
    }
    while hi - lo > DEATH_TIME_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        match refine(mid) {
            Some(v) if v > threshold => lo = mid,
            _ => hi = mid,
        }
    }
    Some(0.5 * (lo + hi))
}

/// Last time E_N exceeds `threshold`.
///
/// If E_N is above threshold anywhere in the final `settle_window` the
/// entanglement is taken to persist and the result is censored.
pub fn death_time(
    traj: &Trajectory,
    threshold: f64,
    settle_window: f64,
) -> Result<DeathTime, MeasureError> {
    if traj.is_empty() {
        return Err(MeasureError::EmptyTrajectory);
    }
    if !(threshold > 0.0) {
        return Err(MeasureError::InvalidRequest(format!(
            "threshold must be positive, got {threshold}"
        )));
    }
    let horizon = traj.horizon();
    if !(settle_window >= 0.0 && settle_window < horizon) {
        return Err(MeasureError::InvalidRequest(format!(
            "settle window {settle_window} must lie in [0, horizon = {horizon})"
        )));
    }
    let en = log_negativity_series(traj)?;
    let refine = |t: f64| traj.state_at(t).and_then(|s| log_negativity(&s).ok());
    match last_crossing(traj.times(), &en, threshold, refine) {
        None => Ok(DeathTime::NeverEntangled),
        Some(t) if t >= horizon - settle_window => Ok(DeathTime::CensoredAtHorizon { horizon }),
        Some(t) => Ok(DeathTime::Finite { t_f: t }),
    }
}
