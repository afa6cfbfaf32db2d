//! Penalty-free nonsymmetric Nitsche finite elements for 2D linear elasticity.
//!
//! Dirichlet data is imposed weakly through boundary flux terms with no
//! penalty parameter: the consistency term is subtracted and its transpose
//! added, and stability rests on an inf-sup condition rather than
//! coercivity. Both the compressible (displacement) problem and the
//! incompressible problem with equal-order velocity/pressure pairs and
//! Galerkin least-squares pressure stabilization are supported.

pub mod fem_space;
pub mod diagnostics;
pub mod experiments;
pub mod forms;
pub mod linear_solve;
pub mod mesh;
