//! Truncated Fock-space oracle: integrates the density-matrix master
//! equation
//!
//!   dρ/dt = −i[H,ρ] + Σ_il { −(i/2)E_il [x_i,{x_l,ρ}] − ½D_il [x_i,[x_l,ρ]]
//!                           − (i/2)G_il [x_i,{p_l,ρ}] + ½F_il [x_i,[p_l,ρ]] }
//!
//! with (E, D, F, G) = K·(ε², D, F, Γ) by fixed-step RK4 and reads the
//! second moments off ρ. Nothing here shares code with the moment
//! equations under test.

#![allow(dead_code)]

use nalgebra::Matrix2;
use num_complex::Complex64;

type C = Complex64;

const I: C = C::new(0.0, 1.0);

#[derive(Clone, Debug)]
pub struct Sparse {
    rows: Vec<Vec<(usize, C)>>,
}

impl Sparse {
    fn zeros(n: usize) -> Self {
        Self { rows: vec![Vec::new(); n] }
    }

    fn identity(n: usize) -> Self {
        Self {
            rows: (0..n).map(|i| vec![(i, C::new(1.0, 0.0))]).collect(),
        }
    }

    fn dim(&self) -> usize {
        self.rows.len()
    }

    fn push(&mut self, i: usize, j: usize, v: C) {
        if v == C::new(0.0, 0.0) {
            return;
        }
        match self.rows[i].iter_mut().find(|(k, _)| *k == j) {
            Some((_, x)) => *x += v,
            None => self.rows[i].push((j, v)),
        }
    }

    fn mul(&self, other: &Sparse) -> Sparse {
        let mut out = Sparse::zeros(self.dim());
        for (i, row) in self.rows.iter().enumerate() {
            for &(k, a) in row {
                for &(j, b) in &other.rows[k] {
                    out.push(i, j, a * b);
                }
            }
        }
        out
    }

    fn scaled(&self, s: C) -> Sparse {
        Sparse {
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|&(j, v)| (j, v * s)).collect())
                .collect(),
        }
    }

    fn add(&self, other: &Sparse) -> Sparse {
        let mut out = self.clone();
        for (i, row) in other.rows.iter().enumerate() {
            for &(j, v) in row {
                out.push(i, j, v);
            }
        }
        out
    }

    fn kron(a: &Sparse, b: &Sparse) -> Sparse {
        let nb = b.dim();
        let mut out = Sparse::zeros(a.dim() * nb);
        for (i, ra) in a.rows.iter().enumerate() {
            for &(k, va) in ra {
                for (j, rb) in b.rows.iter().enumerate() {
                    for &(l, vb) in rb {
                        out.push(i * nb + j, k * nb + l, va * vb);
                    }
                }
            }
        }
        out
    }

    /// out += A ρ
    fn left_acc(&self, rho: &[C], out: &mut [C], n: usize) {
        for (i, row) in self.rows.iter().enumerate() {
            let o = &mut out[i * n..(i + 1) * n];
            for &(k, a) in row {
                let src = &rho[k * n..(k + 1) * n];
                for (x, y) in o.iter_mut().zip(src) {
                    *x += a * y;
                }
            }
        }
    }

    /// out += ρ B
    fn right_acc(&self, rho: &[C], out: &mut [C], n: usize) {
        for i in 0..n {
            let src = &rho[i * n..(i + 1) * n];
            let o = &mut out[i * n..(i + 1) * n];
            for (k, row) in self.rows.iter().enumerate() {
                let r = src[k];
                if r == C::new(0.0, 0.0) {
                    continue;
                }
                for &(j, b) in row {
                    o[j] += r * b;
                }
            }
        }
    }

    fn right(&self, rho: &[C], n: usize) -> Vec<C> {
        let mut out = vec![C::new(0.0, 0.0); n * n];
        self.right_acc(rho, &mut out, n);
        out
    }

    fn trace_with(&self, rho: &[C], n: usize) -> C {
        let mut t = C::new(0.0, 0.0);
        for (i, row) in self.rows.iter().enumerate() {
            for &(k, a) in row {
                t += a * rho[k * n + i];
            }
        }
        t
    }
}

/// Two oscillators, each truncated to `levels` Fock states of a
/// unit-frequency reference oscillator.
pub struct FockOracle {
    n: usize,
    x: [Sparse; 2],
    p: [Sparse; 2],
    /// [i][l] → (x_i x_l, x_i p_l, p_l x_i)
    products: Vec<Vec<(Sparse, Sparse, Sparse)>>,
}

/// Bath coefficient matrices already multiplied by the coupling matrix.
#[derive(Clone, Copy, Debug)]
pub struct Dissipator {
    pub shift: Matrix2<f64>,
    pub diffusion: Matrix2<f64>,
    pub anomalous: Matrix2<f64>,
    pub damping: Matrix2<f64>,
}

impl FockOracle {
    pub fn new(levels: usize) -> Self {
        let mut a = Sparse::zeros(levels);
        for k in 1..levels {
            a.push(k - 1, k, C::new((k as f64).sqrt(), 0.0));
        }
        let mut ad = Sparse::zeros(levels);
        for k in 1..levels {
            ad.push(k, k - 1, C::new((k as f64).sqrt(), 0.0));
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let x = a.add(&ad).scaled(C::new(s, 0.0));
        let p = ad.add(&a.scaled(C::new(-1.0, 0.0))).scaled(C::new(0.0, s));
        let id = Sparse::identity(levels);
        let x = [Sparse::kron(&x, &id), Sparse::kron(&id, &x)];
        let p = [Sparse::kron(&p, &id), Sparse::kron(&id, &p)];
        let products = (0..2)
            .map(|i| {
                (0..2)
                    .map(|l| (x[i].mul(&x[l]), x[i].mul(&p[l]), p[l].mul(&x[i])))
                    .collect()
            })
            .collect();
        Self {
            n: levels * levels,
            x,
            p,
            products,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// |ψ⟩ = Σ (−tanh r)ⁿ/cosh r |n, n⟩, renormalized after truncation.
    pub fn tms(&self, r: f64) -> Vec<C> {
        let levels = (self.n as f64).sqrt().round() as usize;
        let mut psi = vec![0.0; self.n];
        for k in 0..levels {
            psi[k * levels + k] = (-r.tanh()).powi(k as i32) / r.cosh();
        }
        let norm: f64 = psi.iter().map(|v| v * v).sum();
        let mut rho = vec![C::new(0.0, 0.0); self.n * self.n];
        for i in 0..self.n {
            for j in 0..self.n {
                rho[i * self.n + j] = C::new(psi[i] * psi[j] / norm, 0.0);
            }
        }
        rho
    }

    fn hamiltonian(&self, omega: [f64; 2], lambda: f64) -> Sparse {
        let mut h = Sparse::zeros(self.n);
        for i in 0..2 {
            h = h
                .add(&self.p[i].mul(&self.p[i]).scaled(C::new(0.5, 0.0)))
                .add(&self.x[i].mul(&self.x[i]).scaled(C::new(0.5 * omega[i] * omega[i], 0.0)));
        }
        h.add(&self.x[0].mul(&self.x[1]).scaled(C::new(lambda, 0.0)))
    }

    fn generator(&self, h: &Sparse, d: &Dissipator) -> Superop {
        let (e, dd, f, g) = (d.shift, d.diffusion, d.anomalous, d.damping);
        let mut ml = h.scaled(-I);
        let mut mr = h.scaled(I);
        let mut r_ops = [Sparse::zeros(self.n), Sparse::zeros(self.n)];
        let mut s_ops = [Sparse::zeros(self.n), Sparse::zeros(self.n)];
        for i in 0..2 {
            for l in 0..2 {
                let (xx, xp, px) = &self.products[i][l];
                let lx = &self.products[l][i].0;
                ml = ml
                    .add(&xx.scaled(-0.5 * I * e[(i, l)] - 0.5 * dd[(i, l)]))
                    .add(&xp.scaled(-0.5 * I * g[(i, l)] + 0.5 * f[(i, l)]));
                mr = mr
                    .add(&lx.scaled(0.5 * I * e[(i, l)] - 0.5 * dd[(i, l)]))
                    .add(&px.scaled(0.5 * I * g[(i, l)] + 0.5 * f[(i, l)]));
                let cx = -0.5 * I * e[(i, l)] + 0.5 * dd[(i, l)] + 0.5 * I * e[(l, i)] + 0.5 * dd[(l, i)];
                r_ops[i] = r_ops[i]
                    .add(&self.x[l].scaled(cx))
                    .add(&self.p[l].scaled(-0.5 * I * g[(i, l)] - 0.5 * f[(i, l)]));
                s_ops[l] = s_ops[l].add(&self.x[i].scaled(0.5 * I * g[(i, l)] - 0.5 * f[(i, l)]));
            }
        }
        Superop {
            n: self.n,
            ml,
            mr,
            left: [self.x[0].clone(), self.x[1].clone(), self.p[0].clone(), self.p[1].clone()],
            right: [r_ops[0].clone(), r_ops[1].clone(), s_ops[0].clone(), s_ops[1].clone()],
        }
    }

    /// Symmetrized second moments in (x₁, p₁, x₂, p₂) order.
    pub fn moments(&self, rho: &[C]) -> [[f64; 4]; 4] {
        let z = [&self.x[0], &self.p[0], &self.x[1], &self.p[1]];
        let mut m = [[0.0; 4]; 4];
        for a in 0..4 {
            for b in a..4 {
                let ab = z[a].mul(z[b]).trace_with(rho, self.n);
                let ba = z[b].mul(z[a]).trace_with(rho, self.n);
                m[a][b] = 0.5 * (ab + ba).re;
                m[b][a] = m[a][b];
            }
        }
        m
    }

    pub fn trace(&self, rho: &[C]) -> f64 {
        (0..self.n).map(|i| rho[i * self.n + i].re).sum()
    }

    /// RK4 from ρ(0) = `rho`, returning the moments at each multiple of
    /// `every` up to `t_end`. `coeffs(t)` supplies the dissipator.
    pub fn evolve(
        &self,
        mut rho: Vec<C>,
        omega: [f64; 2],
        lambda: f64,
        coeffs: impl Fn(f64) -> Dissipator,
        t_end: f64,
        dt: f64,
        every: f64,
    ) -> Vec<(f64, [[f64; 4]; 4])> {
        let h = self.hamiltonian(omega, lambda);
        let steps = (t_end / dt).round() as usize;
        let stride = (every / dt).round() as usize;
        let markovian = {
            let a = coeffs(0.0);
            let b = coeffs(t_end);
            a.shift == b.shift && a.diffusion == b.diffusion && a.damping == b.damping && a.anomalous == b.anomalous
        };
        let fixed = self.generator(&h, &coeffs(0.0));
        let at = |t: f64| if markovian { fixed.clone() } else { self.generator(&h, &coeffs(t)) };
        let mut out = vec![(0.0, self.moments(&rho))];
        let n2 = self.n * self.n;
        for k in 0..steps {
            let t = k as f64 * dt;
            let (g0, gm, g1) = (at(t), at(t + 0.5 * dt), at(t + dt));
            let k1 = g0.apply(&rho);
            let tmp: Vec<C> = (0..n2).map(|i| rho[i] + 0.5 * dt * k1[i]).collect();
            let k2 = gm.apply(&tmp);
            let tmp: Vec<C> = (0..n2).map(|i| rho[i] + 0.5 * dt * k2[i]).collect();
            let k3 = gm.apply(&tmp);
            let tmp: Vec<C> = (0..n2).map(|i| rho[i] + dt * k3[i]).collect();
            let k4 = g1.apply(&tmp);
            for i in 0..n2 {
                rho[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            if (k + 1) % stride == 0 {
                out.push(((k + 1) as f64 * dt, self.moments(&rho)));
            }
        }
        out
    }
}

#[derive(Clone)]
struct Superop {
    n: usize,
    ml: Sparse,
    mr: Sparse,
    left: [Sparse; 4],
    right: [Sparse; 4],
}

impl Superop {
    fn apply(&self, rho: &[C]) -> Vec<C> {
        let n = self.n;
        let mut out = vec![C::new(0.0, 0.0); n * n];
        self.ml.left_acc(rho, &mut out, n);
        self.mr.right_acc(rho, &mut out, n);
        for (l, r) in self.left.iter().zip(&self.right) {
            let tmp = r.right(rho, n);
            l.left_acc(&tmp, &mut out, n);
        }
        out
    }
}
