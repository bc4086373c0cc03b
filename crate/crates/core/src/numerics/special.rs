//! Exponential integrals on the positive real axis, and the digamma function.

use num_complex::Complex64;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const EPS: f64 = 1e-16;
// Beyond this the asymptotic expansions are accurate to machine precision.
const ASYMPTOTIC_FROM: f64 = 40.0;

/// E₁(x) = ∫ₓ^∞ e^(−t)/t dt for x > 0.
pub fn e1(x: f64) -> f64 {
    if x <= 1.0 {
        e1_series(x)
    } else {
        scaled_e1(x) * (-x).exp()
    }
}

/// e^x E₁(x), finite for all x > 0.
pub fn scaled_e1(x: f64) -> f64 {
    if x <= 1.0 {
        return e1_series(x) * x.exp();
    }
    // Modified Lentz evaluation of the continued fraction.
    let tiny = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

fn e1_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..200 {
        term *= -x / k as f64;
        let add = term / k as f64;
        sum += add;
        if add.abs() < EPS * sum.abs().max(1e-300) {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

/// Ei(x) = −PV ∫₋ₓ^∞ e^(−t)/t dt for x > 0.
pub fn ei(x: f64) -> f64 {
    scaled_ei(x) * x.exp()
}

/// e^(−x) Ei(x) for x > 0.
pub fn scaled_ei(x: f64) -> f64 {
    if x >= ASYMPTOTIC_FROM {
        return asymptotic_sum(x, 1.0);
    }
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..500 {
        term *= x / k as f64;
        let add = term / k as f64;
        sum += add;
        if add < EPS * sum {
            break;
        }
    }
    (EULER_GAMMA + x.ln() + sum) * (-x).exp()
}

// Σ_k sign^k k!/x^(k+1), truncated at the smallest term.
fn asymptotic_sum(x: f64, sign: f64) -> f64 {
    let mut term = 1.0 / x;
    let mut sum = term;
    for k in 1..200 {
        let next = term * sign * k as f64 / x;
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < EPS * sum.abs() {
            break;
        }
    }
    sum
}

/// e^(−y) Ei(y) − e^y E₁(y) for y > 0.
///
/// This is the shape of the zero-temperature Ohmic noise kernel. It
/// diverges like 2 ln y near zero and decays as 2/y² for large y; the
/// large-y branch sums the odd asymptotic terms directly so the
/// relative accuracy survives the cancellation.
pub fn ohmic_vacuum_shape(y: f64) -> f64 {
    if y >= ASYMPTOTIC_FROM {
        let inv = 1.0 / (y * y);
        let mut term = 2.0 * inv;
        let mut sum = term;
        let mut k = 1.0;
        loop {
            let next = term * (k + 1.0) * (k + 2.0) * inv;
            if next >= term || next < EPS * sum {
                break;
            }
            term = next;
            sum += term;
            k += 2.0;
        }
        sum
    } else {
        scaled_ei(y) - scaled_e1(y)
    }
}

/// Digamma ψ(w) for complex w away from the non-positive integers.
pub fn digamma(w: Complex64) -> Complex64 {
    let mut w = w;
    let mut shift = Complex64::new(0.0, 0.0);
    while w.re < 15.0 {
        shift -= w.inv();
        w += 1.0;
    }
    let inv2 = (w * w).inv();
    // Bernoulli terms B_2k / (2k) of the asymptotic expansion.
    const B: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 120.0,
        1.0 / 252.0,
        -1.0 / 240.0,
        1.0 / 132.0,
        -691.0 / 32760.0,
        1.0 / 12.0,
    ];
    let mut series = Complex64::new(0.0, 0.0);
    for &b in B.iter().rev() {
        series = (series + b) * inv2;
    }
    shift + w.ln() - 0.5 * w.inv() - series
}

/// Real digamma for x > 0.
pub fn digamma_real(x: f64) -> f64 {
    digamma(Complex64::new(x, 0.0)).re
}
