// Negated float comparisons below are NaN guards.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod evolution;
pub mod hamiltonian;
pub mod jet;
pub mod kernel;
pub mod linalg;
pub mod oracle;
pub mod solver;
