//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Scalar types the integrator accepts.
pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
    fn finite(&self) -> bool;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn finite(&self) -> bool {
        self.is_finite()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadTolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for QuadTolerance {
    fn default() -> Self {
        Self {
            abs: 1e-14,
            rel: 1e-11,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<V> {
    pub value: V,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("quadrature did not converge: error estimate {error:e} exceeds target {target:e} after {intervals} intervals")]
    NotConverged {
        error: f64,
        target: f64,
        intervals: usize,
    },
    #[error("integrand returned a non-finite value at x = {0}")]
    NonFinite(f64),
}

struct Panel<V> {
    a: f64,
    b: f64,
    value: V,
    error: f64,
}

impl<V> PartialEq for Panel<V> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<V> Eq for Panel<V> {}
impl<V> PartialOrd for Panel<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Panel<V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<V: QuadValue, F: FnMut(f64) -> V>(
    f: &mut F,
    a: f64,
    b: f64,
) -> Result<Panel<V>, QuadError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut eval = |x: f64| {
        let v = f(x);
        if v.finite() {
            Ok(v)
        } else {
            Err(QuadError::NonFinite(x))
        }
    };
    let fc = eval(center)?;
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = eval(center - dx)? + eval(center + dx)?;
        k = k + pair * w;
        if j % 2 == 1 {
            g = g + pair * WG[j / 2];
        }
    }
    let value = k * half;
    let error = ((k - g) * half).magnitude();
    Ok(Panel { a, b, value, error })
}

/// Integrates `f` over [a, b] to `max(tol.abs, tol.rel |I|)`.
///
/// The endpoints are never evaluated, so integrable endpoint
/// singularities are allowed.
pub fn integrate<V, F>(mut f: F, a: f64, b: f64, tol: &QuadTolerance) -> Result<QuadResult<V>, QuadError>
where
    V: QuadValue,
    F: FnMut(f64) -> V,
{
    integrate_panels(&mut f, &[a, b], tol)
}

/// Like [`integrate`] but starts from the given breakpoints.
pub fn integrate_panels<V, F>(
    f: &mut F,
    breaks: &[f64],
    tol: &QuadTolerance,
) -> Result<QuadResult<V>, QuadError>
where
    V: QuadValue,
    F: FnMut(f64) -> V,
{
    let mut heap = BinaryHeap::new();
    let mut total = V::zero();
    let mut error = 0.0;
    for w in breaks.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let p = kronrod(f, w[0], w[1])?;
        total = total + p.value;
        error += p.error;
        heap.push(p);
    }
    loop {
        let target = tol.abs.max(tol.rel * total.magnitude());
        if error <= target || heap.is_empty() {
            return Ok(QuadResult {
                value: total,
                error,
                intervals: heap.len(),
            });
        }
        if heap.len() >= tol.max_intervals {
            return Err(QuadError::NotConverged {
                error,
                target,
                intervals: heap.len(),
            });
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel below floating-point resolution.
            return Err(QuadError::NotConverged {
                error,
                target,
                intervals: heap.len() + 1,
            });
        }
        let left = kronrod(f, worst.a, mid)?;
        let right = kronrod(f, mid, worst.b)?;
        total = total - worst.value + left.value + right.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
}
