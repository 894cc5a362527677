//! Computations with untwisted wild character varieties for `GL_n(C)`.
//!
//! The crate builds fission, multi-fission and Stokes-model spaces, evaluates
//! their moment maps and quasi-Hamiltonian two-forms, implements the
//! unfolding maps from irregular to tame data and checks the resulting
//! identities. Every computation is generic over [`Scalar`], so the same code
//! runs over the Gaussian rationals (exact) or in double precision (float).

pub mod assembly;
pub mod blocks;
pub mod centralizer;
pub mod error;
pub mod irregular;
pub mod jet;
pub mod json;
pub mod linalg;
pub mod matrix;
pub mod random;
pub mod scalar;
pub mod spaces;
pub mod triangular;
pub mod unfolding;
pub mod verify;

pub use blocks::{BlockLayout, Partition, Subgroup};
pub use error::{Result, WcvError};
pub use jet::Jet;
pub use linalg::Tolerance;
pub use matrix::{trace_form, GroupElem, LieElem, Matrix};
pub use scalar::{ComplexScalar, Exact, Float, Mode, Scalar};
