//! Exact computations for quotients of torus endomorphisms (QOTEs) in the
//! affine crystallographic model: orbifold data, pi-injectivity, and the
//! quotient-by-H reduction.

pub mod analysis;
pub mod cli;
pub mod figure;
pub mod injectivity;
pub mod lattice;
pub mod orbifold;
pub mod qote;
pub mod sweep;
pub mod torus;
