//! Second-moment equations dσ/dt = Mσ + σMᵀ + N for each bath topology.
//!
//! Every topology is a set of baths a coupling through s_a = Σ_i w_ai x_i,
//! all sharing one kernel. The master equation then only sees the
//! coupling matrix K = WᵀW: separate baths give K = 1, a common bath
//! coupling through c₁x₁ + c₂x₂ gives K = ccᵀ. With the coefficient
//! matrices of the bath module,
//!
//!   dp/dt ⊃ −(V + Kε²) x − KΓ p,
//!   N_pp = sym(KD),  N_{x_i p_j} = (KF)_ji / 2.

use nalgebra::{Matrix2, Matrix4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bath::{
    coeffs_markovian, coeffs_nonmarkovian, renormalize, BathError, BathParams, CoeffSchedule,
    CoeffSet, ScheduleOptions,
};
use crate::model::{normal_modes, symplectic_form, NormalModes, ValidatedParams, MOMENTA, POSITIONS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeneratorError {
    #[error("weighted common bath needs c1^2 + c2^2 > 0 and finite weights (got c1 = {c1}, c2 = {c2})")]
    ZeroWeights { c1: f64, c2: f64 },
    #[error("build_common needs a common-bath topology, got separate baths")]
    NotCommon,
    #[error(transparent)]
    Bath(#[from] BathError),
}

/// How the oscillators couple to their environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BathTopology {
    /// One independent bath per oscillator, identical spectra.
    Separate,
    /// One bath coupled to x₁ + x₂.
    Common,
    /// One bath coupled to c₁x₁ + c₂x₂; oscillator i feels an effective
    /// coupling strength cᵢ²γ.
    WeightedCommon { c1: f64, c2: f64 },
}

impl BathTopology {
    /// Common-bath weights that leave the Q₊ normal mode untouched:
    /// (c₁, c₂) = (cos θ, −sin θ), so the bath sees only Q₋.
    pub fn decoupling_weights(modes: &NormalModes) -> Self {
        let (s, c) = modes.theta.sin_cos();
        BathTopology::WeightedCommon { c1: c, c2: -s }
    }

    pub fn validate(&self) -> Result<(), GeneratorError> {
        if let BathTopology::WeightedCommon { c1, c2 } = *self {
            let n = c1 * c1 + c2 * c2;
            if !(n > 0.0 && n.is_finite()) {
                return Err(GeneratorError::ZeroWeights { c1, c2 });
            }
        }
        Ok(())
    }

    pub fn is_common(&self) -> bool {
        !matches!(self, BathTopology::Separate)
    }

    /// K = WᵀW.
    pub fn coupling_matrix(&self) -> Matrix2<f64> {
        match *self {
            BathTopology::Separate => Matrix2::identity(),
            BathTopology::Common => Matrix2::repeat(1.0),
            BathTopology::WeightedCommon { c1, c2 } => {
                Matrix2::new(c1 * c1, c1 * c2, c1 * c2, c2 * c2)
            }
        }
    }
}

/// A time-independent moment generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentGenerator {
    drift: Matrix4<f64>,
    diffusion: Matrix4<f64>,
}

impl MomentGenerator {
    pub fn new(drift: Matrix4<f64>, diffusion: Matrix4<f64>) -> Self {
        Self {
            drift,
            diffusion: 0.5 * (diffusion + diffusion.transpose()),
        }
    }

    /// Closed-system generator: N = 0 and M = Ω H.
    pub fn hamiltonian(p: &ValidatedParams) -> Self {
        Self {
            drift: symplectic_form() * p.hamiltonian_matrix(),
            diffusion: Matrix4::zeros(),
        }
    }

    /// M.
    pub fn drift(&self) -> &Matrix4<f64> {
        &self.drift
    }

    /// N.
    pub fn diffusion(&self) -> &Matrix4<f64> {
        &self.diffusion
    }

    /// dσ/dt at σ.
    pub fn rate(&self, sigma: &Matrix4<f64>) -> Matrix4<f64> {
        let ms = self.drift * sigma;
        ms + ms.transpose() + self.diffusion
    }

    /// Generator of S σ Sᵀ for an invertible linear map S.
    pub fn transformed(&self, s: &Matrix4<f64>) -> Option<Self> {
        let inv = s.try_inverse()?;
        Some(Self::new(s * self.drift * inv, s * self.diffusion * s.transpose()))
    }
}

fn place(target: &mut Matrix4<f64>, rows: [usize; 2], cols: [usize; 2], block: &Matrix2<f64>) {
    for i in 0..2 {
        for j in 0..2 {
            target[(rows[i], cols[j])] += block[(i, j)];
        }
    }
}

/// The generic assembler: any topology is a coupling matrix K.
pub fn assemble(p: &ValidatedParams, coupling: &Matrix2<f64>, c: &CoeffSet) -> MomentGenerator {
    let shift = coupling * c.eps2;
    let damping = coupling * c.damping;
    let noise = coupling * c.diffusion;
    let anomalous = coupling * c.anomalous;

    let mut h = p.hamiltonian_matrix();
    place(&mut h, POSITIONS, POSITIONS, &shift);
    place(&mut h, POSITIONS, MOMENTA, &damping);
    let drift = symplectic_form() * h;

    let mut n = Matrix4::zeros();
    place(&mut n, MOMENTA, MOMENTA, &noise);
    place(&mut n, POSITIONS, MOMENTA, &anomalous.transpose());
    MomentGenerator::new(drift, n)
}

/// Separate, identical baths for each oscillator.
pub fn build_separate(c: &CoeffSet, p: &ValidatedParams) -> MomentGenerator {
    assemble(p, &BathTopology::Separate.coupling_matrix(), c)
}

/// A single bath shared by both oscillators.
pub fn build_common(
    c: &CoeffSet,
    p: &ValidatedParams,
    w: &BathTopology,
) -> Result<MomentGenerator, GeneratorError> {
    if !w.is_common() {
        return Err(GeneratorError::NotCommon);
    }
    w.validate()?;
    Ok(assemble(p, &w.coupling_matrix(), c))
}

/// Dispatches on the topology.
pub fn build(
    c: &CoeffSet,
    p: &ValidatedParams,
    w: &BathTopology,
) -> Result<MomentGenerator, GeneratorError> {
    w.validate()?;
    Ok(assemble(p, &w.coupling_matrix(), c))
}

/// Markovian generator with ε² dropped by the counter-term.
pub fn markovian_generator(
    p: &ValidatedParams,
    b: &BathParams,
    w: &BathTopology,
) -> Result<MomentGenerator, GeneratorError> {
    let inf = coeffs_markovian(&normal_modes(p), b)?;
    build(&renormalize(&inf, &inf)?, p, w)
}

/// Anything the propagator can integrate.
pub trait MomentFlow: Sync {
    fn generator_at(&self, t: f64) -> MomentGenerator;

    fn is_time_dependent(&self) -> bool;

    /// Upper bound on the first integration step.
    fn initial_step_limit(&self) -> Option<f64> {
        None
    }
}

impl MomentFlow for MomentGenerator {
    fn generator_at(&self, _t: f64) -> MomentGenerator {
        *self
    }

    fn is_time_dependent(&self) -> bool {
        false
    }
}

/// Where a time-dependent generator takes its coefficients from.
#[derive(Debug, Clone)]
pub enum CoefficientSource {
    /// Spline table, the default.
    Tabulated(CoeffSchedule),
    /// Fresh quadrature at every evaluation; slow, for verification.
    Direct {
        modes: NormalModes,
        bath: BathParams,
        markovian: CoeffSet,
    },
    /// The same renormalized set at all times.
    Frozen(CoeffSet),
}

/// Non-Markovian generator with time-dependent, counter-termed coefficients.
#[derive(Debug, Clone)]
pub struct TimeDependentGenerator {
    params: ValidatedParams,
    coupling: Matrix2<f64>,
    source: CoefficientSource,
    cutoff: f64,
}

impl TimeDependentGenerator {
    /// Tabulates the coefficients up to `horizon`.
    pub fn new(
        p: &ValidatedParams,
        b: &BathParams,
        w: &BathTopology,
        horizon: f64,
        opts: &ScheduleOptions,
    ) -> Result<Self, GeneratorError> {
        w.validate()?;
        let schedule = CoeffSchedule::build(&normal_modes(p), b, horizon, opts)?;
        Ok(Self {
            params: *p,
            coupling: w.coupling_matrix(),
            source: CoefficientSource::Tabulated(schedule),
            cutoff: b.cutoff,
        })
    }

    pub fn direct(p: &ValidatedParams, b: &BathParams, w: &BathTopology) -> Result<Self, GeneratorError> {
        w.validate()?;
        let modes = normal_modes(p);
        let markovian = coeffs_markovian(&modes, b)?;
        Ok(Self {
            params: *p,
            coupling: w.coupling_matrix(),
            source: CoefficientSource::Direct {
                modes,
                bath: *b,
                markovian,
            },
            cutoff: b.cutoff,
        })
    }

    pub fn frozen(
        p: &ValidatedParams,
        c: &CoeffSet,
        w: &BathTopology,
        cutoff: f64,
    ) -> Result<Self, GeneratorError> {
        w.validate()?;
        Ok(Self {
            params: *p,
            coupling: w.coupling_matrix(),
            source: CoefficientSource::Frozen(*c),
            cutoff,
        })
    }

    pub fn source(&self) -> &CoefficientSource {
        &self.source
    }

    /// Renormalized coefficients at t.
    pub fn coefficients_at(&self, t: f64) -> CoeffSet {
        match &self.source {
            CoefficientSource::Tabulated(s) => s.at(t),
            CoefficientSource::Direct {
                modes,
                bath,
                markovian,
            } => {
                let raw = coeffs_nonmarkovian(t.max(0.0), modes, bath)
                    .expect("parameters validated at construction");
                renormalize(&raw, markovian).expect("same origin")
            }
            CoefficientSource::Frozen(c) => *c,
        }
    }
}

impl MomentFlow for TimeDependentGenerator {
    fn generator_at(&self, t: f64) -> MomentGenerator {
        assemble(&self.params, &self.coupling, &self.coefficients_at(t))
    }

    fn is_time_dependent(&self) -> bool {
        true
    }

    fn initial_step_limit(&self) -> Option<f64> {
        Some(0.1 / self.cutoff)
    }
}
