//! Exponential-sum representation of the finite-temperature noise kernel.
//!
//! With a = 2πkT, z = Λ/a and ν_n = n a,
//!
//!   C^A(τ) / (γΛ²) = cot(πz) e^(−Λτ) + Σ_{n≥1} 4kT ν_n e^(−ν_n τ) / (ν_n² − Λ²).
//!
//! Any linear functional of the kernel is then Σ_k A_k φ(c_k) for the
//! transform φ of a single exponential e^(−cτ). The pole of cot(πz) at
//! integer z cancels against the Matsubara term closest to Λ; that pair is
//! grouped so nothing blows up when Λ sits on a Matsubara frequency.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::numerics::{integrate, QuadTolerance};

use super::BathError;

/// Explicit terms never drop below this.
const MIN_TERMS: usize = 2000;
/// Hard cap on explicitly summed Matsubara terms.
pub const MAX_TERMS: usize = 1_000_000;
// Relative accuracy requested from the tail integral.
const TAIL_REL: f64 = 1e-10;

/// The Laplace-type transform of e^(−cτ) that the caller wants summed.
pub(crate) trait ExpTransform {
    fn value(&self, c: f64) -> Complex64;
    fn slope(&self, c: f64) -> Complex64;
}

/// φ(c) = e^(−cτ): the kernel itself at τ.
pub(crate) struct Decay(pub f64);

impl ExpTransform for Decay {
    fn value(&self, c: f64) -> Complex64 {
        Complex64::new((-c * self.0).exp(), 0.0)
    }
    fn slope(&self, c: f64) -> Complex64 {
        Complex64::new(-self.0 * (-c * self.0).exp(), 0.0)
    }
}

/// φ(c) = ∫₀ᵗ e^(−cτ) e^(iΩτ) dτ, or its t → ∞ limit when `t` is `None`.
pub(crate) struct Window {
    pub omega: f64,
    pub t: Option<f64>,
}

impl Window {
    fn rate(&self, c: f64) -> Complex64 {
        Complex64::new(c, -self.omega)
    }
}

/// (1 − e^(−wt))/w without cancellation for small |wt|.
pub(crate) fn window_integral(w: Complex64, t: f64) -> Complex64 {
    let (a, b) = (w.re * t, w.im * t);
    let half = (0.5 * b).sin();
    let decay = (-a).exp();
    let num = Complex64::new(
        -(-a).exp_m1() * b.cos() + 2.0 * half * half,
        decay * b.sin(),
    );
    num / w
}

impl ExpTransform for Window {
    fn value(&self, c: f64) -> Complex64 {
        let w = self.rate(c);
        match self.t {
            Some(t) => window_integral(w, t),
            None => w.inv(),
        }
    }

    fn slope(&self, c: f64) -> Complex64 {
        let w = self.rate(c);
        match self.t {
            Some(t) => (t * (-w * t).exp() - window_integral(w, t)) / w,
            None => -(w * w).inv(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct ThermalSeries {
    gamma: f64,
    cutoff: f64,
    kt: f64,
    spacing: f64,
    nearest: usize,
    regular: f64,
    terms: usize,
}

fn cot_minus_pole(x: f64) -> f64 {
    // cot(x) − 1/x, evaluated by series near zero.
    if x.abs() < 0.1 {
        let x2 = x * x;
        -x * (1.0 / 3.0
            + x2 * (1.0 / 45.0 + x2 * (2.0 / 945.0 + x2 * (1.0 / 4725.0 + x2 * 2.0 / 93555.0))))
    } else {
        1.0 / x.tan() - 1.0 / x
    }
}

impl ThermalSeries {
    /// `frequency` is the largest oscillation frequency the transform will
    /// carry; it sets how many terms are summed explicitly.
    pub fn new(gamma: f64, cutoff: f64, kt: f64, frequency: f64) -> Result<Self, BathError> {
        debug_assert!(kt > 0.0);
        let spacing = 2.0 * PI * kt;
        let z = cutoff / spacing;
        let nearest = z.round() as usize;
        let regular = if nearest == 0 {
            1.0 / (PI * z).tan()
        } else {
            let delta = z - nearest as f64;
            cot_minus_pole(PI * delta) - 1.0 / (PI * (z + nearest as f64))
        };
        let want = 40.0 * (z + frequency / spacing + 1.0).ceil();
        if !(want <= MAX_TERMS as f64) {
            return Err(BathError::MatsubaraNonconvergence {
                terms: MAX_TERMS,
                needed: want,
            });
        }
        Ok(Self {
            gamma,
            cutoff,
            kt,
            spacing,
            nearest,
            regular,
            terms: (want as usize).max(MIN_TERMS).max(nearest + 1),
        })
    }

    fn matsubara(&self, x: f64) -> f64 {
        self.spacing * x
    }

    // Summand of the Matsubara sum at (real) index x, without γΛ².
    fn summand<T: ExpTransform>(&self, f: &T, x: f64) -> Complex64 {
        let nu = self.matsubara(x);
        f.value(nu) * (4.0 * self.kt * nu / (nu * nu - self.cutoff * self.cutoff))
    }

    /// Σ_k A_k φ(c_k) over the whole kernel.
    pub fn apply<T: ExpTransform>(&self, f: &T) -> Result<Complex64, BathError> {
        let lam = self.cutoff;
        let mut total = f.value(lam) * self.regular;
        if self.nearest > 0 {
            let nu = self.matsubara(self.nearest as f64);
            let psi = |c: f64| f.value(c) * c;
            let pair = if (nu - lam).abs() < 1e-6 * lam {
                let mid = 0.5 * (nu + lam);
                (f.value(mid) + f.slope(mid) * mid) / (nu + lam)
            } else {
                (psi(lam) - psi(nu)) / (lam * lam - nu * nu)
            };
            total += pair * (4.0 * self.kt);
        }
        for n in 1..=self.terms {
            if n != self.nearest {
                total += self.summand(f, n as f64);
            }
        }
        total += self.tail(f, total)?;
        Ok(total * (self.gamma * lam * lam))
    }

    // Σ_{n>N} by the midpoint-rule Euler–Maclaurin correction to the integral.
    fn tail<T: ExpTransform>(&self, f: &T, partial: Complex64) -> Result<Complex64, BathError> {
        let start = self.terms as f64 + 0.5;
        let g = |x: f64| self.summand(f, x);
        let tol = QuadTolerance {
            abs: 1e-16 * partial.norm().max(1e-300),
            rel: TAIL_REL,
            max_intervals: 500,
        };
        // x = start · e^v compresses the algebraic decay.
        let integral = integrate(
            |v: f64| {
                let x = start * v.exp();
                g(x) * x
            },
            0.0,
            45.0,
            &tol,
        )
        .map_err(BathError::Quadrature)?;
        let slope = g(start + 0.5) - g(start - 0.5);
        Ok(integral.value + slope / 24.0)
    }
}
