//! Numerical lab for pullback attractors of non-autonomous scalar parabolic
//! equations driven by a flow on a hull.

// `!(x > 0.0)` is how parameter checks reject NaN along with the rest.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attractor;
pub mod classify;
pub mod coefficient;
pub mod cocycle;
pub mod hull;
pub mod output;
pub mod parabolic;
pub mod scalar_ode;
pub mod scenario;
pub mod cli;

pub use classify::Classification;
pub use coefficient::{Affine, Coefficient};
pub use hull::{DriverSpec, HullPoint, LimitTag};
