//! Sparse direct solves and dense stability diagnostics.

pub mod dense;
pub mod lu;
pub mod sparse;

pub use dense::{
    dense_smallest_generalized_singular_value, smallest_generalized_eigenvalue, smallest_generalized_singular_value,
    DENSE_CAP,
};
pub use lu::{fill_reducing_order, lu_solve, LuFactors, SolveError, SolveReport};
pub use sparse::{CsrMatrix, TripletBuilder};
