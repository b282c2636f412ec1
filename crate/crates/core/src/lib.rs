//! Optimal power flow with convex piecewise-linear generator costs.
//!
//! The crate builds the twelve combinations of a power-flow model
//! ({AC, SOC, DC}) and a piecewise-linear cost encoding ({Ψ, λ, Δ, Φ}) as
//! instances of a small structured model representation, solves them with an
//! embedded primal-dual interior-point method, and compares the encodings on
//! solution quality and runtime.
//!
//! | module           | contents                                                    |
//! |------------------|-------------------------------------------------------------|
//! | [`netdata`]      | Matpower case parsing, per-unit network data, validation    |
//! | [`pwlcost`]      | piecewise-linear cost curves, cleanup and evaluation        |
//! | [`modelir`]      | variables, constraint blocks with analytic derivatives      |
//! | [`formulations`] | AC / SOC / DC builders and the four cost encodings          |
//! | [`ipm`]          | interior-point solver and KKT audit                         |
//! | [`bench`]        | formulation grid, objective deltas, runtime ratios, reports |
//!
//! Runnable walkthroughs live in the crate's `examples/` directory; bundled
//! test networks live in `data/`.

// index loops mirror the matrix algebra; `!(a <= b)` also rejects NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod netdata;
pub mod pwlcost;
pub mod modelir;
pub mod ipm;
pub mod formulations;
pub mod bench;
