//! System parameters, normal modes and Gaussian initial states.
//!
//! Units: ħ = 1, unit masses, and every frequency is expressed in units of
//! ω₁ (so `omega1` is 1 unless a caller explicitly rescales). Phase-space
//! vectors are ordered z = (x₁, p₁, x₂, p₂).

use std::ops::Deref;

use nalgebra::{Matrix2, Matrix4, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of x₁ in the phase-space vector.
pub const X1: usize = 0;
/// Index of p₁ in the phase-space vector.
pub const P1: usize = 1;
/// Index of x₂ in the phase-space vector.
pub const X2: usize = 2;
/// Index of p₂ in the phase-space vector.
pub const P2: usize = 3;

/// Position index of each oscillator.
pub const POSITIONS: [usize; 2] = [X1, X2];
/// Momentum index of each oscillator.
pub const MOMENTA: [usize; 2] = [P1, P2];

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("oscillator frequencies must be positive (omega1 = {omega1}, omega2 = {omega2})")]
    NonPositiveFrequency { omega1: f64, omega2: f64 },
    #[error(
        "coupling |lambda| = {lambda} reaches omega1*omega2 = {bound}; the lower normal mode is unstable"
    )]
    UnstablePotential { lambda: f64, bound: f64 },
    #[error("reference frequency must be positive, got {0}")]
    NonPositiveReference(f64),
    #[error("covariance matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("covariance matrix has non-finite entries")]
    NonFinite,
}

/// Bare oscillator parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    #[serde(default = "unit_frequency")]
    pub omega1: f64,
    pub omega2: f64,
    pub lambda: f64,
}

fn unit_frequency() -> f64 {
    1.0
}

impl SystemParams {
    /// Parameters in the natural units (ω₁ = 1).
    pub fn new(omega2: f64, lambda: f64) -> Self {
        Self {
            omega1: 1.0,
            omega2,
            lambda,
        }
    }

    pub fn validate(self) -> Result<ValidatedParams, ModelError> {
        validate_params(self)
    }
}

/// Checks the frequency and stability conditions.
pub fn validate_params(p: SystemParams) -> Result<ValidatedParams, ModelError> {
    if !(p.omega1 > 0.0 && p.omega2 > 0.0) {
        return Err(ModelError::NonPositiveFrequency {
            omega1: p.omega1,
            omega2: p.omega2,
        });
    }
    let bound = p.omega1 * p.omega2;
    if !(p.lambda.abs() < bound) {
        return Err(ModelError::UnstablePotential {
            lambda: p.lambda.abs(),
            bound,
        });
    }
    Ok(ValidatedParams(p))
}

/// Parameters that passed [`validate_params`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidatedParams(SystemParams);

impl Deref for ValidatedParams {
    type Target = SystemParams;

    fn deref(&self) -> &SystemParams {
        &self.0
    }
}

impl ValidatedParams {
    pub fn params(&self) -> SystemParams {
        self.0
    }

    /// Frequency of oscillator `i` (0 or 1).
    pub fn omega(&self, i: usize) -> f64 {
        if i == 0 {
            self.omega1
        } else {
            self.omega2
        }
    }

    /// Potential matrix V with H = p²/2 + xᵀVx/2.
    pub fn potential(&self) -> Matrix2<f64> {
        Matrix2::new(
            self.omega1 * self.omega1,
            self.lambda,
            self.lambda,
            self.omega2 * self.omega2,
        )
    }

    /// Quadratic form H_S = zᵀ H z / 2 in phase-space ordering.
    pub fn hamiltonian_matrix(&self) -> Matrix4<f64> {
        let v = self.potential();
        let mut h = Matrix4::zeros();
        for (i, &xi) in POSITIONS.iter().enumerate() {
            for (j, &xj) in POSITIONS.iter().enumerate() {
                h[(xi, xj)] = v[(i, j)];
            }
            h[(MOMENTA[i], MOMENTA[i])] = 1.0;
        }
        h
    }

    /// Sign-flipped coupling, the partner of the (x₂, p₂) → −(x₂, p₂) symmetry.
    pub fn with_flipped_coupling(&self) -> Self {
        ValidatedParams(SystemParams {
            lambda: -self.lambda,
            ..self.0
        })
    }
}

/// Normal-mode decomposition of the coupled potential.
///
/// `Q₋ = cos θ x₁ − sin θ x₂` oscillates at `omega_minus` and
/// `Q₊ = sin θ x₁ + cos θ x₂` at `omega_plus`. The rows of `rotation` are
/// the coefficient vectors of Q₋ and Q₊ respectively.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalModes {
    pub theta: f64,
    pub omega_plus: f64,
    pub omega_minus: f64,
    pub rotation: Matrix2<f64>,
}

impl NormalModes {
    /// Builds the mode data from an explicit mixing angle. Used to probe
    /// the θ → π/2 − θ structure of the bath coefficients.
    pub fn from_angle(theta: f64, omega_minus: f64, omega_plus: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self {
            theta,
            omega_plus,
            omega_minus,
            rotation: Matrix2::new(c, -s, s, c),
        }
    }

    /// Coefficients of Q₋ in (x₁, x₂).
    pub fn minus_vector(&self) -> Vector2<f64> {
        self.rotation.row(0).transpose()
    }

    /// Coefficients of Q₊ in (x₁, x₂).
    pub fn plus_vector(&self) -> Vector2<f64> {
        self.rotation.row(1).transpose()
    }

    /// `[(Ω₋, u₋u₋ᵀ), (Ω₊, u₊u₊ᵀ)]`: the free propagator of x_i is
    /// Σ_m (u_m u_mᵀ)_ij (cos Ω_m τ, sin Ω_m τ / Ω_m).
    pub fn projectors(&self) -> [(f64, Matrix2<f64>); 2] {
        let um = self.minus_vector();
        let up = self.plus_vector();
        [
            (self.omega_minus, um * um.transpose()),
            (self.omega_plus, up * up.transpose()),
        ]
    }
}

/// Eigenfrequencies and mixing angle of the coupled oscillators.
///
/// θ is half the two-argument arctangent of (2λ, ω₂² − ω₁²), which is
/// continuous through λ = 0 and gives θ = π/4 at resonance with λ > 0.
pub fn normal_modes(p: &ValidatedParams) -> NormalModes {
    let w1 = p.omega1 * p.omega1;
    let w2 = p.omega2 * p.omega2;
    let mean = 0.5 * (w1 + w2);
    let half_split = 0.5 * (4.0 * p.lambda * p.lambda + (w2 - w1).powi(2)).sqrt();
    let plus_sq = mean + half_split;
    // Product identity avoids cancellation as |λ| → ω₁ω₂.
    let minus_sq = (w1 * w2 - p.lambda * p.lambda) / plus_sq;
    let theta = 0.5 * (2.0 * p.lambda).atan2(w2 - w1);
    NormalModes::from_angle(theta, minus_sq.sqrt(), plus_sq.sqrt())
}

/// The symplectic form Ω with [z_a, z_b] = i Ω_ab.
pub fn symplectic_form() -> Matrix4<f64> {
    let mut omega = Matrix4::zeros();
    for i in 0..2 {
        omega[(POSITIONS[i], MOMENTA[i])] = 1.0;
        omega[(MOMENTA[i], POSITIONS[i])] = -1.0;
    }
    omega
}

/// diag(1, 1, −1, −1): the canonical map (x₂, p₂) → −(x₂, p₂).
pub fn second_mode_flip() -> Matrix4<f64> {
    Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, -1.0, -1.0))
}

/// Symmetrized second moments σ_ab = ⟨{z_a, z_b}⟩/2 of a zero-mean state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix(Matrix4<f64>);

impl CovarianceMatrix {
    /// Accepts a matrix that is symmetric to 1e-12 (relative to its largest
    /// entry) and stores its symmetric part.
    pub fn new(m: Matrix4<f64>) -> Result<Self, ModelError> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite);
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let asym = (m - m.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(ModelError::NotSymmetric(asym));
        }
        Ok(Self::symmetrized(m))
    }

    pub(crate) fn symmetrized(m: Matrix4<f64>) -> Self {
        Self(0.5 * (m + m.transpose()))
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix4<f64> {
        self.0
    }

    pub fn entry(&self, a: usize, b: usize) -> f64 {
        self.0[(a, b)]
    }

    /// Product of the two oscillators' ground states for the given
    /// reference frequencies.
    pub fn vacuum(omega_a: f64, omega_b: f64) -> Self {
        Self::thermal_product(omega_a, 0.0, omega_b, 0.0)
    }

    /// Product of single-mode thermal states with mean occupations
    /// `n_a`, `n_b`.
    pub fn thermal_product(omega_a: f64, n_a: f64, omega_b: f64, n_b: f64) -> Self {
        let mut m = Matrix4::zeros();
        for (i, (w, n)) in [(omega_a, n_a), (omega_b, n_b)].into_iter().enumerate() {
            let level = n + 0.5;
            m[(POSITIONS[i], POSITIONS[i])] = level / w;
            m[(MOMENTA[i], MOMENTA[i])] = level * w;
        }
        Self(m)
    }

    /// 2×2 block of oscillator `i`.
    pub fn mode_block(&self, i: usize) -> Matrix2<f64> {
        let (x, p) = (POSITIONS[i], MOMENTA[i]);
        Matrix2::new(self.0[(x, x)], self.0[(x, p)], self.0[(p, x)], self.0[(p, p)])
    }

    /// 2×2 covariance of the quadrature pair (u·x, u·p) for a unit vector u
    /// in oscillator space, e.g. u = (1, −1)/√2 for the x₋ mode.
    pub fn collective_block(&self, u: &Vector2<f64>) -> Matrix2<f64> {
        let mut s = nalgebra::Matrix2x4::zeros();
        for i in 0..2 {
            s[(0, POSITIONS[i])] = u[i];
            s[(1, MOMENTA[i])] = u[i];
        }
        s * self.0 * s.transpose()
    }

    /// S σ Sᵀ.
    pub fn transformed(&self, s: &Matrix4<f64>) -> Self {
        Self::symmetrized(s * self.0 * s.transpose())
    }

    /// The state after (x₂, p₂) → −(x₂, p₂).
    pub fn flip_second(&self) -> Self {
        self.transformed(&second_mode_flip())
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }

    /// Tr ρ² = 1/(4 √det σ) for a two-mode Gaussian state.
    pub fn purity(&self) -> f64 {
        0.25 / self.determinant().sqrt()
    }
}

/// Covariance of the two-mode squeezed vacuum with squeezing amplitude `r`.
///
/// x₊ = (x₁ + x₂)/√2 is squeezed (variance × e^(−2r)) and x₋ stretched,
/// relative to the vacuum of frequency `omega_ref`; the momenta are
/// conjugate. Negative `r` exchanges the roles, which is the same as the
/// (x₂, p₂) sign flip.
pub fn tms_covariance(r: f64, omega_ref: f64) -> Result<CovarianceMatrix, ModelError> {
    if !(omega_ref > 0.0) {
        return Err(ModelError::NonPositiveReference(omega_ref));
    }
    let (ch, sh) = ((2.0 * r).cosh(), (2.0 * r).sinh());
    let xx = 0.5 / omega_ref;
    let pp = 0.5 * omega_ref;
    let mut m = Matrix4::zeros();
    m[(X1, X1)] = xx * ch;
    m[(X2, X2)] = xx * ch;
    m[(X1, X2)] = -xx * sh;
    m[(X2, X1)] = -xx * sh;
    m[(P1, P1)] = pp * ch;
    m[(P2, P2)] = pp * ch;
    m[(P1, P2)] = pp * sh;
    m[(P2, P1)] = pp * sh;
    Ok(CovarianceMatrix(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    fn modes(omega2: f64, lambda: f64) -> NormalModes {
        normal_modes(&SystemParams::new(omega2, lambda).validate().unwrap())
    }

    #[test]
    fn validation_boundaries() {
        assert!(SystemParams::new(1.0, 0.5).validate().is_ok());
        assert!(matches!(
            SystemParams::new(1.0, 1.0).validate(),
            Err(ModelError::UnstablePotential { .. })
        ));
        assert!(SystemParams::new(2.0, -1.9).validate().is_ok());
        assert!(matches!(
            SystemParams::new(0.0, 0.0).validate(),
            Err(ModelError::NonPositiveFrequency { .. })
        ));
        let p = SystemParams {
            omega1: -1.0,
            omega2: 1.0,
            lambda: 0.0,
        };
        assert!(matches!(
            p.validate(),
            Err(ModelError::NonPositiveFrequency { .. })
        ));
        assert!(SystemParams::new(1.0, f64::NAN).validate().is_err());
    }

    #[test]
    fn uncoupled_detuned_modes() {
        let m = modes(2.0, 0.0);
        assert_eq!(m.theta, 0.0);
        assert!((m.omega_plus - 2.0).abs() < 1e-15);
        assert!((m.omega_minus - 1.0).abs() < 1e-15);
        // Q₊ ≡ x₂
        assert!((m.plus_vector() - Vector2::new(0.0, 1.0)).amax() < 1e-15);
    }

    #[test]
    fn resonant_modes() {
        let m = modes(1.0, 0.2);
        assert!((m.theta - FRAC_PI_4).abs() < 1e-15);
        assert!((m.omega_plus - 1.2f64.sqrt()).abs() < 1e-14);
        assert!((m.omega_minus - 0.8f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn modes_match_direct_eigendecomposition() {
        let p = SystemParams::new(1.5, 0.3).validate().unwrap();
        let m = normal_modes(&p);
        let eig = SymmetricEigen::new(p.potential());
        let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert!((m.omega_minus.powi(2) - ev[0]).abs() < 1e-13);
        assert!((m.omega_plus.powi(2) - ev[1]).abs() < 1e-13);
        // u₊ is the eigenvector of the larger eigenvalue, u₋ of the smaller.
        let v = p.potential();
        assert!((v * m.plus_vector() - ev[1] * m.plus_vector()).amax() < 1e-13);
        assert!((v * m.minus_vector() - ev[0] * m.minus_vector()).amax() < 1e-13);
        let sum = m.omega_plus.powi(2) + m.omega_minus.powi(2);
        let prod = m.omega_plus.powi(2) * m.omega_minus.powi(2);
        assert!((sum - (1.0 + 2.25)).abs() < 1e-12);
        assert!((prod - (2.25 - 0.09)).abs() < 1e-12);
    }

    #[test]
    fn vacuum_and_tms() {
        let v = tms_covariance(0.0, 1.3).unwrap();
        let d = v.matrix().diagonal();
        let want = [0.5 / 1.3, 0.65, 0.5 / 1.3, 0.65];
        for i in 0..4 {
            assert!((d[i] - want[i]).abs() < 1e-15);
        }
        assert_eq!(v, CovarianceMatrix::vacuum(1.3, 1.3));
        let s = tms_covariance(2.0, 1.0).unwrap();
        assert!((s.purity() - 1.0).abs() < 1e-10);
        let u = Vector2::new(1.0, 1.0) / 2f64.sqrt();
        let b = s.collective_block(&u);
        assert!((b[(0, 0)] - 0.5 * (-4.0f64).exp()).abs() < 1e-14);
        assert!((b[(0, 0)] * b[(1, 1)] - 0.25).abs() < 1e-12);
        assert!(tms_covariance(1.0, 0.0).is_err());
    }

    #[test]
    fn covariance_rejects_asymmetric_input() {
        let mut m = Matrix4::identity();
        m[(0, 1)] = 1e-6;
        assert!(matches!(
            CovarianceMatrix::new(m),
            Err(ModelError::NotSymmetric(_))
        ));
        m[(0, 1)] = f64::NAN;
        assert_eq!(CovarianceMatrix::new(m), Err(ModelError::NonFinite));
    }

    proptest! {
        #[test]
        fn spectrum_identities(omega2 in 0.2f64..3.0, frac in -0.999f64..0.999) {
            let lambda = frac * omega2;
            let m = modes(omega2, lambda);
            let sum = m.omega_plus.powi(2) + m.omega_minus.powi(2);
            let prod = m.omega_plus.powi(2) * m.omega_minus.powi(2);
            prop_assert!((sum - (1.0 + omega2 * omega2)).abs() < 1e-12 * sum.max(1.0));
            prop_assert!((prod - (omega2 * omega2 - lambda * lambda)).abs() < 1e-12 * sum.max(1.0));
            prop_assert!(m.omega_plus >= m.omega_minus && m.omega_minus > 0.0);
            let rtr = m.rotation.transpose() * m.rotation;
            prop_assert!((rtr - Matrix2::identity()).amax() < 1e-14);
        }

        #[test]
        fn spectrum_is_exchange_symmetric(omega2 in 0.2f64..3.0, frac in -0.99f64..0.99) {
            let lambda = frac * omega2;
            let a = modes(omega2, lambda);
            let b = normal_modes(&SystemParams { omega1: omega2, omega2: 1.0, lambda }.validate().unwrap());
            prop_assert!((a.omega_plus - b.omega_plus).abs() < 1e-12);
            prop_assert!((a.omega_minus - b.omega_minus).abs() < 1e-12);
        }

        #[test]
        fn tms_is_pure_and_flip_reverses_squeezing(r in -2.5f64..2.5, w in 0.3f64..3.0) {
            let s = tms_covariance(r, w).unwrap();
            prop_assert!((s.determinant() - 1.0 / 16.0).abs() < 1e-10 * (4.0 * r.abs()).exp().max(1.0));
            let flipped = tms_covariance(-r, w).unwrap();
            prop_assert!((flipped.matrix() - s.flip_second().matrix()).amax() < 1e-12);
        }
    }
}
