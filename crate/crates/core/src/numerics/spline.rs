//! Natural cubic splines on a uniform grid, vector valued.

#[derive(Debug, Clone)]
pub struct UniformSpline<const K: usize> {
    t0: f64,
    step: f64,
    values: Vec<[f64; K]>,
    second: Vec<[f64; K]>,
}

impl<const K: usize> UniformSpline<K> {
    /// Interpolates `values[i]` at `t0 + i * step`. Needs at least two knots.
    #[allow(clippy::needless_range_loop)]
    pub fn new(t0: f64, step: f64, values: Vec<[f64; K]>) -> Self {
        assert!(values.len() >= 2, "spline needs at least two knots");
        assert!(step > 0.0);
        let n = values.len();
        let mut second = vec![[0.0; K]; n];
        if n > 2 {
            // Thomas algorithm for M_{i-1} + 4 M_i + M_{i+1} = 6 Δ²y_i / h²,
            // with M_0 = M_{n-1} = 0.
            let m = n - 2;
            let mut cprime = vec![0.0; m];
            let mut rhs = vec![[0.0; K]; m];
            let scale = 6.0 / (step * step);
            for i in 0..m {
                for k in 0..K {
                    rhs[i][k] = scale * (values[i + 2][k] - 2.0 * values[i + 1][k] + values[i][k]);
                }
            }
            let mut denom = 4.0;
            cprime[0] = 1.0 / denom;
            for k in 0..K {
                rhs[0][k] /= denom;
            }
            for i in 1..m {
                denom = 4.0 - cprime[i - 1];
                cprime[i] = 1.0 / denom;
                for k in 0..K {
                    rhs[i][k] = (rhs[i][k] - rhs[i - 1][k]) / denom;
                }
            }
            for i in (0..m.saturating_sub(1)).rev() {
                for k in 0..K {
                    rhs[i][k] -= cprime[i] * rhs[i + 1][k];
                }
            }
            second[1..=m].copy_from_slice(&rhs);
        }
        Self {
            t0,
            step,
            values,
            second,
        }
    }

    pub fn start(&self) -> f64 {
        self.t0
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn end(&self) -> f64 {
        self.t0 + self.step * (self.values.len() - 1) as f64
    }

    /// Value at `t`, clamped to the knot range.
    pub fn eval(&self, t: f64) -> [f64; K] {
        let n = self.values.len();
        if t <= self.t0 {
            return self.values[0];
        }
        if t >= self.end() {
            return self.values[n - 1];
        }
        let u = (t - self.t0) / self.step;
        let i = (u.floor() as usize).min(n - 2);
        let b = u - i as f64;
        let a = 1.0 - b;
        let h2 = self.step * self.step / 6.0;
        let (y0, y1) = (&self.values[i], &self.values[i + 1]);
        let (m0, m1) = (&self.second[i], &self.second[i + 1]);
        let mut out = [0.0; K];
        for k in 0..K {
            out[k] = a * y0[k]
                + b * y1[k]
                + h2 * ((a * a * a - a) * m0[k] + (b * b * b - b) * m1[k]);
        }
        out
    }
}
