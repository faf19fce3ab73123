//! Coefficient universes and finite-field routines.

pub mod field;
pub mod poly;
pub mod ring;

pub use field::{absolute_trace, as_solve_ff, extend_factor, identity_embedding, solve_id_minus_frob, AsFfSolution, AsTower};
pub use ring::{fixed_points_coeff, partial_frobenius_coeff, Coeff, FactorTag, Ring, RingEmbedding, RingTag, TensorCoeff};
