//! Displacement profiles of a loaded self-similar binary-tree frame.
//!
//! A planar binary tree of Timoshenko bars (geometrically halving lengths,
//! geometrically shrinking sections) carries a unit load spread over its
//! top nodes. The crate computes, per unit load:
//!
//! - exact finite-level vertical and horizontal node displacements, three
//!   independent ways: closed-form series ([`closedform`]), direct
//!   per-bar unit-load summation, and a frame stiffness solve
//!   ([`mechanics`]);
//! - their infinite-level limits ([`limits`]): an exponential-Takagi-class
//!   curve for the vertical profile and a linear combination of rescaled
//!   inverse β-Cantor staircases for the horizontal one, with divergence
//!   classification and rigorous tail bounds;
//! - the underlying special functions and curve sampling ([`fractals`]);
//! - analytic fractal dimensions of both profiles, their coupling
//!   identity, and an empirical box-counting estimator ([`dimension`]);
//! - randomized cross-validation of all three displacement routes
//!   ([`verify`]).

pub mod closedform;
pub mod dimension;
pub mod fractals;
pub mod limits;
pub mod mechanics;
pub mod model;
pub mod verify;

pub use closedform::{displacement_at_level, horizontal_displacement, vertical_displacement};
pub use fractals::{sample_curve, CurveKind, CurveSamples};
pub use limits::{classify, horizontal_limit, tail_bound, vertical_limit, LimitResult};
pub use model::{Displacement, DisplacementKind, ExactPos, NodeRef, TreeParams};
