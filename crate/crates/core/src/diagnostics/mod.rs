//! Error norms, mesh-dependent energy norms and numerical stability checks.

mod norms;
mod stability;

use thiserror::Error;

use crate::forms::AssemblyError;
use crate::linear_solve::SolveError;

pub use norms::{
    error_norms, error_norms_with_degree, korn_boundary_seminorm, rigid_motion_norm_check, side_means, triple_norm_compressible,
    triple_norm_incompressible, ErrorReport, RigidMotionCheck, ERROR_QUADRATURE_DEGREE,
};
pub use stability::{
    compressible_stability, discrete_infsup_constant, discrete_korn_constant, galerkin_orthogonality_residual,
    incompressible_stability, korn_grams, triple_norm_gram_compressible, triple_norm_gram_incompressible,
    StabilityReport,
};

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("exact {0} field provides no gradient")]
    MissingDerivative(&'static str),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}
