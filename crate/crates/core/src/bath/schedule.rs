//! Precomputed, spline-interpolated non-Markovian coefficients.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::model::NormalModes;
use crate::numerics::UniformSpline;

use super::{
    coeffs_markovian, coeffs_nonmarkovian, dissipative_scalars, renormalize,
    vacuum_window_between, BathError, BathParams, CoeffSet, CoeffTime, ModeScalars,
};

/// Decay lengths after which the finite-temperature coefficients are
/// replaced by their limits.
const SATURATION_DECAYS: f64 = 30.0;
/// Knots per shortest bath or system timescale.
const KNOTS_PER_SCALE: f64 = 20.0;
/// The coefficients start like t ln t, which splines resolve poorly; this
/// many knot intervals at the start are evaluated directly instead.
const DIRECT_INTERVALS: f64 = 16.0;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScheduleOptions {
    /// Override of the knot spacing.
    pub step: Option<f64>,
    /// Override of the time after which Markovian values are used.
    pub saturation: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CoeffSchedule {
    spline: UniformSpline<16>,
    markovian: CoeffSet,
    saturated: bool,
    modes: NormalModes,
    bath: BathParams,
    direct_until: f64,
}

impl CoeffSchedule {
    /// Tabulates the coefficients on [0, min(horizon, t_sat)].
    ///
    /// At kT > 0 the kernels decay exponentially and t_sat is 30 decay
    /// lengths of the slowest of e^(−Λτ), e^(−ν₁τ). At kT = 0 the noise
    /// kernel has an algebraic tail and the table spans the whole horizon,
    /// accumulated panel by panel.
    pub fn build(
        m: &NormalModes,
        b: &BathParams,
        horizon: f64,
        opts: &ScheduleOptions,
    ) -> Result<Self, BathError> {
        let markovian = coeffs_markovian(m, b)?;
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(BathError::NegativeTime(horizon));
        }
        let natural = if b.kt > 0.0 {
            SATURATION_DECAYS / b.cutoff.min(2.0 * PI * b.kt)
        } else {
            f64::INFINITY
        };
        let saturation = opts.saturation.unwrap_or(natural);
        let end = horizon.min(saturation);
        let target = opts
            .step
            .unwrap_or((1.0 / b.cutoff).min(1.0 / m.omega_plus) / KNOTS_PER_SCALE);
        let intervals = ((end / target).ceil() as usize).max(1);
        let step = end / intervals as f64;
        let times: Vec<f64> = (0..=intervals).map(|i| i as f64 * step).collect();

        let values = if b.kt > 0.0 || b.gamma == 0.0 {
            times
                .par_iter()
                .map(|&t| coeffs_nonmarkovian(t, m, b).map(|c| c.to_array()))
                .collect::<Result<Vec<_>, _>>()?
        } else {
            vacuum_table(&times, m, b, &markovian)?
        };
        Ok(Self {
            spline: UniformSpline::new(0.0, step, values),
            markovian,
            saturated: end >= saturation,
            modes: *m,
            bath: *b,
            direct_until: DIRECT_INTERVALS * step,
        })
    }

    /// Knot spacing.
    pub fn step(&self) -> f64 {
        self.spline.step()
    }

    pub fn knots(&self) -> usize {
        self.spline.len()
    }

    /// End of the tabulated range.
    pub fn table_end(&self) -> f64 {
        self.spline.end()
    }

    /// Whether times past the table use the Markovian limit.
    pub fn is_saturated(&self) -> bool {
        self.saturated
    }

    /// Raw coefficients at `t`, with ε² not yet counter-termed.
    pub fn raw_at(&self, t: f64) -> CoeffSet {
        if self.saturated && t >= self.spline.end() {
            return self.markovian;
        }
        let interpolated = || self.markovian.with_array(&self.spline.eval(t), CoeffTime::At(t));
        if t < self.direct_until && t > 0.0 {
            return coeffs_nonmarkovian(t, &self.modes, &self.bath).unwrap_or_else(|_| interpolated());
        }
        interpolated()
    }

    /// Renormalized coefficients at `t`, ready for a master equation.
    pub fn at(&self, t: f64) -> CoeffSet {
        renormalize(&self.raw_at(t), &self.markovian).expect("schedule owns its limit")
    }

    /// Unrenormalized t → ∞ limit.
    pub fn markovian(&self) -> &CoeffSet {
        &self.markovian
    }
}

fn vacuum_table(
    times: &[f64],
    m: &NormalModes,
    b: &BathParams,
    markovian: &CoeffSet,
) -> Result<Vec<[f64; 16]>, BathError> {
    let freqs = [m.omega_minus, m.omega_plus];
    let increments: Vec<[Complex64; 2]> = times
        .par_windows(2)
        .map(|w| {
            let mut out = [Complex64::new(0.0, 0.0); 2];
            for (k, &f) in freqs.iter().enumerate() {
                out[k] = vacuum_window_between(f, w, b)?;
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>, BathError>>()?;
    let mut acc = [Complex64::new(0.0, 0.0); 2];
    let mut out = Vec::with_capacity(times.len());
    for (i, &t) in times.iter().enumerate() {
        if i > 0 {
            acc[0] += increments[i - 1][0];
            acc[1] += increments[i - 1][1];
        }
        let scalars = |k: usize| {
            let (shift, damping) = dissipative_scalars(freqs[k], Some(t), b);
            ModeScalars {
                shift,
                damping,
                diffusion: acc[k].re,
                anomalous: acc[k].im / freqs[k],
            }
        };
        let c = CoeffSet::from_modes(m, b, scalars(0), scalars(1), CoeffTime::At(t));
        debug_assert!(c.origin.same(&markovian.origin));
        out.push(c.to_array());
    }
    Ok(out)
}
