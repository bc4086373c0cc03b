//! Small numerical building blocks: quadrature, splines, special functions.

pub mod quadrature;
pub mod special;
pub mod spline;

pub use quadrature::{integrate, integrate_panels, QuadError, QuadResult, QuadTolerance};
pub use spline::UniformSpline;
