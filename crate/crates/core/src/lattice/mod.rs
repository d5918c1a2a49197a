//! Exact rational and integer-lattice linear algebra.

mod congruence;
mod matrix;
mod normal_form;
mod rat;

pub use congruence::{solve_congruence, CosetComponent, CosetFamily};
pub use matrix::{IntMatrix, Mat2Q, Mat2Z, Vec2Q};
pub use normal_form::{
    column_hermite, smith, smith_normal_form, superlattice_basis, unimodular_inverse, Smith,
    SuperLattice,
};
pub use rat::{q, ParseRatError, Rat};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LatticeError {
    #[error("congruence has no solution modulo the integer lattice")]
    EmptySolution,
}
