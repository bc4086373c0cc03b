#![allow(dead_code, clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod fock;

use twinosc::bath::{coeffs_markovian, renormalize, BathParams, CoeffSet};
use twinosc::generator::{markovian_generator, BathTopology, TimeDependentGenerator};
use twinosc::model::{normal_modes, tms_covariance, SystemParams};
use twinosc::propagator::{evolve, EvolveOptions, Tolerances};

use fock::{Dissipator, FockOracle};

const FOCK_DT: f64 = 0.01;

pub struct OracleCase {
    pub system: SystemParams,
    pub bath: BathParams,
    pub topology: BathTopology,
    pub r: f64,
    pub markovian: bool,
    pub levels: usize,
    pub t_end: f64,
}

fn dissipator(c: &CoeffSet, w: &BathTopology) -> Dissipator {
    let k = w.coupling_matrix();
    Dissipator {
        shift: k * c.eps2,
        diffusion: k * c.diffusion,
        anomalous: k * c.anomalous,
        damping: k * c.damping,
    }
}

/// Largest ‖σ_moments − σ_Fock‖max / ‖σ_Fock‖max over 20 samples up to
/// about t_end.
pub fn fock_discrepancy(case: &OracleCase) -> f64 {
    let p = case.system.validate().unwrap();
    let stride = (case.t_end / 20.0 / FOCK_DT).round();
    let every = stride * FOCK_DT;
    let t_end = 20.0 * every;
    let oracle = FockOracle::new(case.levels);
    let rho0 = oracle.tms(case.r);
    let sigma0 = tms_covariance(case.r, 1.0).unwrap();
    let opts = EvolveOptions::with_tolerances(Tolerances { rtol: 1e-10, atol: 1e-13 });
    let omega = [case.system.omega1, case.system.omega2];
    let (traj, reference) = if case.markovian {
        let inf = coeffs_markovian(&normal_modes(&p), &case.bath).unwrap();
        let c = renormalize(&inf, &inf).unwrap();
        let g = markovian_generator(&p, &case.bath, &case.topology).unwrap();
        let traj = evolve(&g, &sigma0, t_end, every, &opts).unwrap();
        let d = dissipator(&c, &case.topology);
        let fock = oracle.evolve(rho0, omega, case.system.lambda, |_| d, t_end, FOCK_DT, every);
        (traj, fock)
    } else {
        let g = TimeDependentGenerator::new(&p, &case.bath, &case.topology, t_end, &Default::default())
            .unwrap();
        let traj = evolve(&g, &sigma0, t_end, every, &opts).unwrap();
        let w = case.topology;
        let fock = oracle.evolve(
            rho0,
            omega,
            case.system.lambda,
            |t| dissipator(&g.coefficients_at(t), &w),
            t_end,
            FOCK_DT,
            every,
        );
        (traj, fock)
    };
    let mut worst: f64 = 0.0;
    for ((t, m), (tf, s)) in traj.times().iter().zip(traj.states()).zip(&reference) {
        assert!((t - tf).abs() < 1e-9, "sample grids differ: {t} vs {tf}");
        let mut scale: f64 = 0.0;
        let mut diff: f64 = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                scale = scale.max(s[a][b].abs());
                diff = diff.max((m.entry(a, b) - s[a][b]).abs());
            }
        }
        worst = worst.max(diff / scale);
    }
    worst
}
