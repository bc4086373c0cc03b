//! Ohmic Lorentz–Drude bath: spectral density, correlation kernels and the
//! master-equation coefficients built from them.
//!
//! For a mode of frequency Ω the coefficients reduce to four scalars,
//!
//!   e(Ω,t) = −∫₀ᵗ K(τ) cos Ωτ dτ,        g(Ω,t) = ∫₀ᵗ K(τ) sin Ωτ / Ω dτ,
//!   d(Ω,t) = ∫₀ᵗ C^A(τ) cos Ωτ dτ,       f(Ω,t) = ∫₀ᵗ C^A(τ) sin Ωτ / Ω dτ,
//!
//! with C^C = −iK, K(τ) = γΛ² e^(−Λτ). The 2×2 matrices are the normal-mode
//! projections Σ_± (u_± u_±ᵀ) · scalar(Ω_±).

mod matsubara;
mod schedule;

use std::f64::consts::PI;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::NormalModes;
use crate::numerics::special::{digamma, digamma_real, ohmic_vacuum_shape};
use crate::numerics::{integrate_panels, QuadError, QuadTolerance};

use matsubara::{ThermalSeries, Window};

pub use matsubara::MAX_TERMS as MATSUBARA_MAX_TERMS;
pub use schedule::{CoeffSchedule, ScheduleOptions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BathError {
    #[error("invalid bath parameters: {0}")]
    InvalidParams(String),
    #[error("spectral density requested at negative frequency {0}")]
    NegativeFrequency(f64),
    #[error("coefficient time must be non-negative and finite, got {0}")]
    NegativeTime(f64),
    #[error("mode frequency must be positive, got {0}")]
    NonPositiveModeFrequency(f64),
    #[error("Matsubara series needs {needed} terms, above the cap of {terms}; use kT = 0 or a larger temperature")]
    MatsubaraNonconvergence { terms: usize, needed: f64 },
    #[error("quadrature failure: {0}")]
    Quadrature(#[from] QuadError),
    #[error("coefficient sets come from different system or bath parameters")]
    MismatchedParams,
}

/// Lorentz–Drude bath parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathParams {
    pub gamma: f64,
    pub cutoff: f64,
    #[serde(rename = "kT")]
    pub kt: f64,
}

impl BathParams {
    pub fn new(gamma: f64, cutoff: f64, kt: f64) -> Result<Self, BathError> {
        let b = Self { gamma, cutoff, kt };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), BathError> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(BathError::InvalidParams(format!(
                "gamma must be finite and >= 0, got {}",
                self.gamma
            )));
        }
        if !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return Err(BathError::InvalidParams(format!(
                "cutoff must be finite and > 0, got {}",
                self.cutoff
            )));
        }
        if !(self.kt >= 0.0 && self.kt.is_finite()) {
            return Err(BathError::InvalidParams(format!(
                "kT must be finite and >= 0, got {}",
                self.kt
            )));
        }
        Ok(())
    }

    /// Same bath with a different coupling strength.
    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self { gamma, ..*self }
    }

    fn prefactor(&self) -> f64 {
        self.gamma * self.cutoff * self.cutoff
    }
}

/// J(Ω) = (2γ/π) Ω Λ² / (Λ² + Ω²).
pub fn spectral_density(omega: f64, b: &BathParams) -> Result<f64, BathError> {
    if omega < 0.0 {
        return Err(BathError::NegativeFrequency(omega));
    }
    let l2 = b.cutoff * b.cutoff;
    Ok(2.0 * b.gamma / PI * omega * l2 / (l2 + omega * omega))
}

/// Dissipation kernel C^C(τ) = −i ∫ J(Ω) sin Ωτ dΩ = −iγΛ² e^(−Λ|τ|) sgn τ.
pub fn kernel_cc(tau: f64, b: &BathParams) -> Complex64 {
    let k = b.prefactor() * (-b.cutoff * tau.abs()).exp();
    Complex64::new(0.0, if tau < 0.0 { k } else { -k })
}

/// Noise kernel C^A(τ) = ∫ J(Ω) coth(Ω/2kT) cos Ωτ dΩ, even in τ.
///
/// Log-divergent at τ = 0, where +∞ is returned.
pub fn kernel_ca(tau: f64, b: &BathParams) -> Result<f64, BathError> {
    b.validate()?;
    let tau = tau.abs();
    if tau == 0.0 {
        return Ok(if b.gamma == 0.0 { 0.0 } else { f64::INFINITY });
    }
    if b.kt == 0.0 {
        return Ok(vacuum_kernel(tau, b));
    }
    let series = ThermalSeries::new(b.gamma, b.cutoff, b.kt, 0.0)?;
    Ok(series.apply(&matsubara::Decay(tau))?.re)
}

fn vacuum_kernel(tau: f64, b: &BathParams) -> f64 {
    -b.prefactor() / PI * ohmic_vacuum_shape(b.cutoff * tau)
}

/// When a coefficient set applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CoeffTime {
    At(f64),
    Markovian,
}

/// Identity of the (modes, bath) pair a coefficient set was computed for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffOrigin {
    pub theta: f64,
    pub omega_minus: f64,
    pub omega_plus: f64,
    pub bath: BathParams,
}

impl CoeffOrigin {
    fn new(m: &NormalModes, b: &BathParams) -> Self {
        Self {
            theta: m.theta,
            omega_minus: m.omega_minus,
            omega_plus: m.omega_plus,
            bath: *b,
        }
    }

    fn same(&self, other: &Self) -> bool {
        self.theta.to_bits() == other.theta.to_bits()
            && self.omega_minus.to_bits() == other.omega_minus.to_bits()
            && self.omega_plus.to_bits() == other.omega_plus.to_bits()
            && self.bath == other.bath
    }
}

/// The sixteen master-equation coefficients at one time.
///
/// `eps2` is ε², `diffusion` is D, `anomalous` is F and `damping` is Γ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffSet {
    pub eps2: Matrix2<f64>,
    pub diffusion: Matrix2<f64>,
    pub anomalous: Matrix2<f64>,
    pub damping: Matrix2<f64>,
    pub time: CoeffTime,
    origin: CoeffOrigin,
}

/// Per-mode scalars (e, g, d, f).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct ModeScalars {
    pub shift: f64,
    pub damping: f64,
    pub diffusion: f64,
    pub anomalous: f64,
}

impl CoeffSet {
    fn from_modes(
        m: &NormalModes,
        b: &BathParams,
        minus: ModeScalars,
        plus: ModeScalars,
        time: CoeffTime,
    ) -> Self {
        let [(_, wm), (_, wp)] = m.projectors();
        let mix = |f: fn(&ModeScalars) -> f64| wm * f(&minus) + wp * f(&plus);
        Self {
            eps2: mix(|s| s.shift),
            diffusion: mix(|s| s.diffusion),
            anomalous: mix(|s| s.anomalous),
            damping: mix(|s| s.damping),
            time,
            origin: CoeffOrigin::new(m, b),
        }
    }

    /// Assemble a set directly from matrices, e.g. for tests or frozen
    /// coefficients.
    pub fn from_parts(
        eps2: Matrix2<f64>,
        diffusion: Matrix2<f64>,
        anomalous: Matrix2<f64>,
        damping: Matrix2<f64>,
        time: CoeffTime,
        m: &NormalModes,
        b: &BathParams,
    ) -> Self {
        Self {
            eps2,
            diffusion,
            anomalous,
            damping,
            time,
            origin: CoeffOrigin::new(m, b),
        }
    }

    pub fn origin(&self) -> &CoeffOrigin {
        &self.origin
    }

    /// The four matrices in the order (ε², D, F, Γ).
    pub fn matrices(&self) -> [Matrix2<f64>; 4] {
        [self.eps2, self.diffusion, self.anomalous, self.damping]
    }

    /// Largest absolute entry over all four matrices.
    pub fn max_abs(&self) -> f64 {
        self.matrices().iter().map(|m| m.amax()).fold(0.0, f64::max)
    }

    pub(crate) fn to_array(self) -> [f64; 16] {
        let mut out = [0.0; 16];
        for (k, m) in self.matrices().iter().enumerate() {
            out[4 * k..4 * k + 4].copy_from_slice(m.as_slice());
        }
        out
    }

    pub(crate) fn with_array(&self, a: &[f64; 16], time: CoeffTime) -> Self {
        let m = |k: usize| Matrix2::from_column_slice(&a[4 * k..4 * k + 4]);
        Self {
            eps2: m(0),
            diffusion: m(1),
            anomalous: m(2),
            damping: m(3),
            time,
            origin: self.origin,
        }
    }
}

fn check_modes(m: &NormalModes) -> Result<(), BathError> {
    for w in [m.omega_minus, m.omega_plus] {
        if !(w > 0.0 && w.is_finite()) {
            return Err(BathError::NonPositiveModeFrequency(w));
        }
    }
    Ok(())
}

fn dissipative_scalars(omega: f64, t: Option<f64>, b: &BathParams) -> (f64, f64) {
    let w = Complex64::new(b.cutoff, -omega);
    let psi = match t {
        Some(t) => matsubara::window_integral(w, t),
        None => w.inv(),
    };
    (-b.prefactor() * psi.re, b.prefactor() * psi.im / omega)
}

fn vacuum_tolerance(b: &BathParams) -> QuadTolerance {
    QuadTolerance {
        abs: 1e-13 * b.gamma,
        rel: 1e-10,
        max_intervals: 20_000,
    }
}

/// ∫₀ᵗ C^A(τ) e^(iΩτ) dτ at kT = 0, split at the cutoff scale and then
/// every half period.
fn vacuum_window(omega: f64, t: f64, b: &BathParams) -> Result<Complex64, BathError> {
    let mut breaks = vec![0.0];
    for s in [1.0 / b.cutoff, 10.0 / b.cutoff] {
        if s < t {
            breaks.push(s);
        }
    }
    let half_period = PI / omega;
    let mut x = breaks.last().copied().unwrap_or(0.0) + half_period;
    while x < t {
        breaks.push(x);
        x += half_period;
    }
    breaks.push(t);
    vacuum_window_between(omega, &breaks, b)
}

pub(crate) fn vacuum_window_between(
    omega: f64,
    breaks: &[f64],
    b: &BathParams,
) -> Result<Complex64, BathError> {
    let mut f = |tau: f64| Complex64::from_polar(vacuum_kernel(tau, b), omega * tau);
    Ok(integrate_panels(&mut f, breaks, &vacuum_tolerance(b))?.value)
}

fn mode_scalars_at(omega: f64, t: f64, b: &BathParams) -> Result<ModeScalars, BathError> {
    let (shift, damping) = dissipative_scalars(omega, Some(t), b);
    let noise = if t == 0.0 || b.gamma == 0.0 {
        Complex64::new(0.0, 0.0)
    } else if b.kt == 0.0 {
        vacuum_window(omega, t, b)?
    } else {
        ThermalSeries::new(b.gamma, b.cutoff, b.kt, omega)?.apply(&Window {
            omega,
            t: Some(t),
        })?
    };
    Ok(ModeScalars {
        shift,
        damping,
        diffusion: noise.re,
        anomalous: noise.im / omega,
    })
}

fn mode_scalars_markovian(omega: f64, b: &BathParams) -> Result<ModeScalars, BathError> {
    let (shift, damping) = dissipative_scalars(omega, None, b);
    let j = spectral_density(omega, b)?;
    let l2 = b.cutoff * b.cutoff;
    let diffusion = if b.kt == 0.0 {
        0.5 * PI * j
    } else {
        0.5 * PI * j / (omega / (2.0 * b.kt)).tanh()
    };
    // Principal-value part of ∫ C^A sin(Ωτ)/Ω, resummed with the digamma
    // function; tends to (2γΛ²/π) ln(Ω/Λ) / (Λ² + Ω²) as kT → 0.
    let log_part = if b.kt == 0.0 {
        (omega / b.cutoff).ln()
    } else {
        let a = 2.0 * PI * b.kt;
        let z = b.cutoff / a;
        digamma(Complex64::new(1.0, omega / a)).re - digamma_real(z) - 0.5 / z
    };
    let anomalous = 2.0 * b.gamma * l2 / PI * log_part / (l2 + omega * omega);
    Ok(ModeScalars {
        shift,
        damping,
        diffusion,
        anomalous,
    })
}

/// Finite-time coefficients with t ≥ 0.
pub fn coeffs_nonmarkovian(t: f64, m: &NormalModes, b: &BathParams) -> Result<CoeffSet, BathError> {
    b.validate()?;
    check_modes(m)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(BathError::NegativeTime(t));
    }
    let minus = mode_scalars_at(m.omega_minus, t, b)?;
    let plus = mode_scalars_at(m.omega_plus, t, b)?;
    Ok(CoeffSet::from_modes(m, b, minus, plus, CoeffTime::At(t)))
}

/// The t → ∞ limit of [`coeffs_nonmarkovian`].
///
/// `eps2` holds ε²(∞); pass the result through [`renormalize`] before use
/// in a master equation.
pub fn coeffs_markovian(m: &NormalModes, b: &BathParams) -> Result<CoeffSet, BathError> {
    b.validate()?;
    check_modes(m)?;
    let minus = mode_scalars_markovian(m.omega_minus, b)?;
    let plus = mode_scalars_markovian(m.omega_plus, b)?;
    Ok(CoeffSet::from_modes(m, b, minus, plus, CoeffTime::Markovian))
}

/// Counter-terms the frequency shift: ε²(t) → ε²(t) − ε²(∞), entrywise.
pub fn renormalize(c: &CoeffSet, c_inf: &CoeffSet) -> Result<CoeffSet, BathError> {
    if !c.origin.same(&c_inf.origin) || c_inf.time != CoeffTime::Markovian {
        return Err(BathError::MismatchedParams);
    }
    let eps2 = match c.time {
        CoeffTime::Markovian => Matrix2::zeros(),
        CoeffTime::At(_) => c.eps2 - c_inf.eps2,
    };
    Ok(CoeffSet { eps2, ..*c })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{normal_modes, SystemParams};
    use proptest::prelude::*;

    fn fig1_bath() -> BathParams {
        BathParams::new(0.001, 50.0, 10.0).unwrap()
    }

    fn modes(omega2: f64, lambda: f64) -> NormalModes {
        normal_modes(&SystemParams::new(omega2, lambda).validate().unwrap())
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn spectral_density_values() {
        let b = BathParams::new(0.3, 7.0, 1.0).unwrap();
        assert_eq!(spectral_density(0.0, &b).unwrap(), 0.0);
        assert!(rel(spectral_density(7.0, &b).unwrap(), 0.3 * 7.0 / PI) < 1e-15);
        let ten = spectral_density(70.0, &b).unwrap();
        assert!(rel(ten, 2.0 * 0.3 / PI * 70.0 / 101.0) < 1e-15);
        assert!(matches!(
            spectral_density(-1.0, &b),
            Err(BathError::NegativeFrequency(_))
        ));
    }

    #[test]
    fn params_are_validated() {
        assert!(BathParams::new(-1.0, 1.0, 1.0).is_err());
        assert!(BathParams::new(1.0, 0.0, 1.0).is_err());
        assert!(BathParams::new(1.0, 1.0, -0.1).is_err());
        assert!(BathParams::new(0.0, 1.0, 0.0).is_ok());
    }

    #[test]
    fn coefficients_vanish_at_zero_time() {
        for kt in [0.0, 2.0] {
            let b = BathParams::new(0.01, 20.0, kt).unwrap();
            let c = coeffs_nonmarkovian(0.0, &modes(1.4, 0.2), &b).unwrap();
            assert_eq!(c.max_abs(), 0.0);
        }
    }

    #[test]
    fn markovian_closed_forms() {
        // Resonant oscillators: θ = π/4 gives equal weights of both modes.
        let b = fig1_bath();
        let m = modes(1.0, 0.2);
        let c = coeffs_markovian(&m, &b).unwrap();
        let dm = spectral_density(m.omega_minus, &b).unwrap() / (m.omega_minus / 20.0).tanh();
        let dp = spectral_density(m.omega_plus, &b).unwrap() / (m.omega_plus / 20.0).tanh();
        assert!(rel(c.diffusion[(0, 0)], 0.25 * PI * (dm + dp)) < 1e-13);
        // Uncoupled: no cross damping.
        let c0 = coeffs_markovian(&modes(1.5, 0.0), &b).unwrap();
        assert_eq!(c0.damping[(0, 1)], 0.0);
        let g = 0.5 * PI * spectral_density(1.5, &b).unwrap() / 1.5;
        assert!(rel(c0.damping[(1, 1)], g) < 1e-13);
    }

    #[test]
    fn renormalize_contract() {
        let b = fig1_bath();
        let m = modes(1.3, 0.1);
        let inf = coeffs_markovian(&m, &b).unwrap();
        assert_eq!(renormalize(&inf, &inf).unwrap().eps2, Matrix2::zeros());
        let zero = coeffs_nonmarkovian(0.0, &m, &b).unwrap();
        let r = renormalize(&zero, &inf).unwrap();
        assert_eq!(r.eps2, -inf.eps2);
        let c = coeffs_nonmarkovian(0.05, &m, &b).unwrap();
        let r = renormalize(&c, &inf).unwrap();
        assert_eq!(r.diffusion, c.diffusion);
        assert_eq!(r.anomalous, c.anomalous);
        assert_eq!(r.damping, c.damping);
        let other = coeffs_markovian(&modes(1.3, 0.11), &b).unwrap();
        assert_eq!(
            renormalize(&c, &other).unwrap_err(),
            BathError::MismatchedParams
        );
        let other_bath = coeffs_markovian(&m, &b.with_gamma(0.002)).unwrap();
        assert!(renormalize(&c, &other_bath).is_err());
    }

    #[test]
    fn high_temperature_diffusion_is_classical() {
        let m = modes(1.2, 0.3);
        let b = BathParams::new(0.01, 30.0, 500.0).unwrap();
        let c = coeffs_markovian(&m, &b).unwrap();
        let [(wm, pm), (wp, pp)] = m.projectors();
        let classical = |w: f64| 2.0 * b.kt * 0.5 * PI * spectral_density(w, &b).unwrap() / w;
        let want = pm * classical(wm) + pp * classical(wp);
        assert!((c.diffusion - want).amax() < 1e-5 * want.amax());
        let cooler = coeffs_markovian(&m, &BathParams::new(0.01, 30.0, 50.0).unwrap()).unwrap();
        assert!(cooler.diffusion[(0, 0)] < c.diffusion[(0, 0)]);
    }

    #[test]
    fn coefficients_saturate_to_markovian_limit() {
        for (kt, lam) in [(0.1, 10.0), (1.0, 50.0), (10.0, 50.0), (3.0, 2.0 * PI * 3.0)] {
            let b = BathParams::new(0.01, lam, kt).unwrap();
            let m = modes(1.5, 0.4);
            let t = 100.0 / lam + 100.0 / (2.0 * PI * kt);
            let c = coeffs_nonmarkovian(t, &m, &b).unwrap();
            let inf = coeffs_markovian(&m, &b).unwrap();
            for (x, y) in c.matrices().iter().zip(inf.matrices().iter()) {
                assert!((x - y).amax() < 1e-8 * y.amax(), "kT={kt} Λ={lam}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn vacuum_bath_saturates_slowly_but_surely() {
        let b = BathParams::new(0.01, 20.0, 0.0).unwrap();
        let m = modes(1.3, 0.2);
        let inf = coeffs_markovian(&m, &b).unwrap();
        let c = coeffs_nonmarkovian(400.0, &m, &b).unwrap();
        // Algebraic kernel tail: the residual decays like 1/(Ω t²).
        assert!((c.diffusion - inf.diffusion).amax() < 1e-4 * inf.diffusion.amax());
        assert!((c.damping - inf.damping).amax() < 1e-12);
        assert!((c.anomalous - inf.anomalous).amax() < 1e-4 * inf.anomalous.amax());
    }

    #[test]
    fn degenerate_modes_are_finite() {
        let b = fig1_bath();
        let m = modes(1.0, 0.0);
        let c = coeffs_markovian(&m, &b).unwrap();
        let near = coeffs_markovian(&modes(1.0, 1e-7), &b).unwrap();
        assert!(c.max_abs().is_finite());
        assert!((c.diffusion - near.diffusion).amax() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn linear_in_gamma(t in 0.0f64..2.0, omega2 in 0.5f64..2.0, frac in -0.9f64..0.9) {
            let m = modes(omega2, frac * omega2);
            let b = BathParams::new(0.003, 25.0, 2.0).unwrap();
            let one = coeffs_nonmarkovian(t, &m, &b).unwrap();
            let two = coeffs_nonmarkovian(t, &m, &b.with_gamma(0.006)).unwrap();
            for (x, y) in one.matrices().iter().zip(two.matrices().iter()) {
                prop_assert!((2.0 * x - y).amax() <= 1e-13 * y.amax().max(1e-300));
            }
        }

        #[test]
        fn mode_exchange_swaps_diagonals(theta in -1.5f64..1.5, t in 0.01f64..1.0) {
            let b = BathParams::new(0.01, 20.0, 1.0).unwrap();
            let a = coeffs_nonmarkovian(t, &NormalModes::from_angle(theta, 0.8, 1.3), &b).unwrap();
            let s = coeffs_nonmarkovian(
                t,
                &NormalModes::from_angle(std::f64::consts::FRAC_PI_2 - theta, 0.8, 1.3),
                &b,
            )
            .unwrap();
            for (x, y) in a.matrices().iter().zip(s.matrices().iter()) {
                let tol = 1e-13 * x.amax().max(1e-300);
                prop_assert!((x[(0, 0)] - y[(1, 1)]).abs() <= tol);
                prop_assert!((x[(1, 1)] - y[(0, 0)]).abs() <= tol);
                prop_assert!((x[(0, 1)] - y[(0, 1)]).abs() <= tol);
                prop_assert!((x[(0, 1)] - x[(1, 0)]).abs() <= tol);
            }
        }

        #[test]
        fn coupling_sign_flips_off_diagonals(omega2 in 0.6f64..2.0, frac in 0.05f64..0.9) {
            let b = BathParams::new(0.01, 20.0, 1.0).unwrap();
            let lambda = frac * omega2;
            let p = coeffs_markovian(&modes(omega2, lambda), &b).unwrap();
            let n = coeffs_markovian(&modes(omega2, -lambda), &b).unwrap();
            for (x, y) in p.matrices().iter().zip(n.matrices().iter()) {
                let tol = 1e-12 * x.amax();
                prop_assert!((x[(0, 0)] - y[(0, 0)]).abs() <= tol);
                prop_assert!((x[(1, 1)] - y[(1, 1)]).abs() <= tol);
                prop_assert!((x[(0, 1)] + y[(0, 1)]).abs() <= tol);
            }
        }

        #[test]
        fn markovian_diagonals_are_non_negative(omega2 in 0.3f64..3.0, frac in -0.95f64..0.95, kt in 0.0f64..20.0) {
            let b = BathParams::new(0.01, 20.0, kt).unwrap();
            let c = coeffs_markovian(&modes(omega2, frac * omega2), &b).unwrap();
            for i in 0..2 {
                prop_assert!(c.diffusion[(i, i)] >= 0.0);
                prop_assert!(c.damping[(i, i)] >= 0.0);
            }
        }
    }
}
