//! Bilinear and linear forms of the penalty-free Nitsche formulations.
//!
//! Matrices are stored with rows indexing test functions and columns
//! indexing trial functions: `M[i][j] = A_h(phi_j, phi_i)`.
//!
//! Element matrices are computed concurrently and scattered in element
//! order, so assembled matrices are bit-identical across thread counts.

pub mod compressible;
pub(crate) mod element;
pub mod incompressible;

use thiserror::Error;

use crate::fem_space::SpaceError;
use crate::linear_solve::{lu_solve, CsrMatrix, SolveError, SolveReport};
use crate::mesh::MeshError;

pub use compressible::{
    assemble_neumann_load, assemble_nitsche_b, assemble_strong_system, assemble_volume_a, assemble_weak_system,
};
pub use incompressible::{
    assemble_incompressible_system, assemble_mixed_nitsche_b, assemble_mixed_volume, assemble_stabilization_s,
    BcMode, MixedOptions, MixedSystem, StabilizationLength,
};

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("operation needs a {expected}-component space, got {got}")]
    WrongComponents { expected: usize, got: usize },
    #[error("velocity and pressure spaces live on different meshes")]
    MismatchedMeshes,
    #[error("velocity order {velocity} differs from pressure order {pressure}")]
    MismatchedOrders { velocity: usize, pressure: usize },
    #[error("invalid material parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// Lamé parameters and the pressure stabilization parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    pub mu: f64,
    pub lambda: f64,
    pub gamma: f64,
}

pub const DEFAULT_GAMMA: f64 = 0.1;

impl MaterialParams {
    pub fn new(mu: f64, lambda: f64) -> Result<Self, AssemblyError> {
        Self::with_gamma(mu, lambda, DEFAULT_GAMMA)
    }

    pub fn with_gamma(mu: f64, lambda: f64, gamma: f64) -> Result<Self, AssemblyError> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(AssemblyError::InvalidParams(format!("mu must be positive, got {mu}")));
        }
        if !(lambda >= 0.0) {
            return Err(AssemblyError::InvalidParams(format!("lambda must be non-negative, got {lambda}")));
        }
        if !(gamma > 0.0) {
            return Err(AssemblyError::InvalidParams(format!("gamma must be positive, got {gamma}")));
        }
        Ok(MaterialParams { mu, lambda, gamma })
    }

    /// Plane Lamé parameters from Young's modulus and Poisson's ratio.
    pub fn from_young_poisson(young: f64, poisson: f64) -> Result<Self, AssemblyError> {
        if !(young > 0.0) || !(-1.0 < poisson && poisson < 0.5) {
            return Err(AssemblyError::InvalidParams(format!(
                "need E > 0 and -1 < nu < 1/2, got E={young}, nu={poisson}"
            )));
        }
        let (mu, lambda) = young_poisson_to_lame(young, poisson);
        Self::new(mu, lambda)
    }

    pub fn young(&self) -> f64 {
        self.mu * (3.0 * self.lambda + 2.0 * self.mu) / (self.lambda + self.mu)
    }

    pub fn poisson(&self) -> f64 {
        self.lambda / (2.0 * (self.lambda + self.mu))
    }
}

/// `mu = E / (2 (1 + nu))`, `lambda = E nu / ((1 + nu)(1 - 2 nu))`.
pub fn young_poisson_to_lame(young: f64, poisson: f64) -> (f64, f64) {
    let mu = young / (2.0 * (1.0 + poisson));
    let lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
    (mu, lambda)
}

/// Quadrature degrees used during assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureDegrees {
    /// Element matrices (stiffness, coupling, stabilization).
    pub matrix: usize,
    /// Right-hand sides involving analytic data.
    pub rhs: usize,
    /// Boundary matrices.
    pub boundary: usize,
    /// Boundary right-hand sides involving analytic data.
    pub boundary_rhs: usize,
}

impl QuadratureDegrees {
    pub fn for_order(order: usize) -> Self {
        QuadratureDegrees {
            matrix: 2 * order + 2,
            rhs: 10,
            boundary: 2 * order + 2,
            boundary_rhs: 10,
        }
    }
}

/// How the solved unknowns relate to the finite element coefficient vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintMeta {
    /// Full coefficient index of each matrix row among the finite element
    /// unknowns; rows beyond `free.len()` are Lagrange multipliers.
    pub free: Vec<usize>,
    /// Full-length vector holding prescribed values of eliminated DOFs.
    pub prescribed: Vec<f64>,
    /// Number of trailing multiplier unknowns (e.g. a pressure-mean constraint).
    pub multipliers: usize,
}

impl ConstraintMeta {
    pub fn unconstrained(n: usize) -> Self {
        ConstraintMeta {
            free: (0..n).collect(),
            prescribed: vec![0.0; n],
            multipliers: 0,
        }
    }

    pub fn eliminated_count(&self) -> usize {
        self.prescribed.len() - self.free.len()
    }
}

/// Sparse system `matrix x = rhs` plus the bookkeeping to recover the
/// finite element coefficients.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Length of the finite element coefficient vector.
    pub dof_count: usize,
    pub constraint: ConstraintMeta,
}

impl AssembledSystem {
    /// Solves and expands to the full coefficient vector (multipliers dropped).
    pub fn solve(&self) -> Result<(Vec<f64>, SolveReport), SolveError> {
        let (x, report) = lu_solve(&self.matrix, &self.rhs)?;
        Ok((self.expand(&x), report))
    }

    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut full = self.constraint.prescribed.clone();
        for (r, &i) in self.constraint.free.iter().enumerate() {
            full[i] = x[r];
        }
        full
    }

    /// Multiplier values from a reduced solution vector.
    pub fn multipliers<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        &x[self.constraint.free.len()..]
    }
}

/// Eliminates `fixed` DOFs (with values) from `matrix x = rhs`. Indices at
/// or beyond `dof_count` are treated as multipliers and kept.
pub(crate) fn eliminate(
    matrix: &CsrMatrix,
    rhs: &[f64],
    dof_count: usize,
    fixed: &[(usize, f64)],
) -> AssembledSystem {
    let n = matrix.nrows();
    let mut prescribed = vec![0.0; dof_count];
    let mut is_fixed = vec![false; n];
    for &(i, v) in fixed {
        is_fixed[i] = true;
        prescribed[i] = v;
    }
    let free: Vec<usize> = (0..dof_count).filter(|&i| !is_fixed[i]).collect();
    let keep: Vec<usize> = free.iter().copied().chain(dof_count..n).collect();
    let mut full_prescribed = prescribed.clone();
    full_prescribed.resize(n, 0.0);
    let lifted = matrix.mul_vec(&full_prescribed);
    let reduced_rhs = keep.iter().map(|&i| rhs[i] - lifted[i]).collect();
    AssembledSystem {
        matrix: matrix.submatrix(&keep, &keep),
        rhs: reduced_rhs,
        dof_count,
        constraint: ConstraintMeta {
            free,
            prescribed,
            multipliers: n - dof_count,
        },
    }
}

/// `sigma(w) n = 2 mu eps(w) n + lambda div(w) n` for a gradient `grad[c][d]`.
#[inline]
pub fn traction(grad: &[[f64; 2]; 2], n: [f64; 2], mu: f64, lambda: f64) -> [f64; 2] {
    let div = grad[0][0] + grad[1][1];
    let e01 = 0.5 * (grad[0][1] + grad[1][0]);
    [
        2.0 * mu * (grad[0][0] * n[0] + e01 * n[1]) + lambda * div * n[0],
        2.0 * mu * (e01 * n[0] + grad[1][1] * n[1]) + lambda * div * n[1],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn material_conversions_reproduce_published_pairs() {
        let (mu, lambda) = young_poisson_to_lame(1e5, 0.3333);
        assert_eq!((mu.round(), lambda.round()), (37501.0, 74979.0));
        let (mu, lambda) = young_poisson_to_lame(250.0, 0.4999);
        assert_eq!(mu.round(), 83.0);
        // Exact value is 416611.1; the commonly quoted 416610 is truncated.
        assert!((lambda - 416611.1).abs() < 0.05);
        assert!((lambda - 416610.0).abs() / 416610.0 < 5e-6);
        let p = MaterialParams::from_young_poisson(1e5, 0.3333).unwrap();
        assert!((p.young() - 1e5).abs() < 1e-9 * 1e5);
        assert!((p.poisson() - 0.3333).abs() < 1e-12);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(MaterialParams::new(0.0, 1.0).is_err());
        assert!(MaterialParams::new(1.0, -1.0).is_err());
        assert!(MaterialParams::with_gamma(1.0, 1.0, 0.0).is_err());
        assert!(MaterialParams::from_young_poisson(1.0, 0.5).is_err());
    }

    #[test]
    fn elimination_lifts_prescribed_values() {
        // [2 1; 1 3] x = b with x1 fixed to 1.
        let m = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)]);
        let sys = eliminate(&m, &[3.0, 4.0], 2, &[(1, 1.0)]);
        assert_eq!(sys.matrix.nrows(), 1);
        assert_eq!(sys.rhs, vec![2.0]);
        let (x, _) = sys.solve().unwrap();
        assert_eq!(x, vec![1.0, 1.0]);
    }
}
