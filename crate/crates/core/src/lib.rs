#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Gaussian dynamics of two coupled, detuned harmonic oscillators in Ohmic
//! baths: master-equation coefficients, second-moment propagation,
//! entanglement measures and parameter scans.

pub mod bath;
pub mod model;
pub mod numerics;
pub mod generator;
pub mod measures;
pub mod propagator;
pub mod scan;
