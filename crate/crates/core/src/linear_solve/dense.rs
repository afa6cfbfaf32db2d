//! Dense generalized eigen/singular value computations for stability diagnostics.

use nalgebra::{Cholesky, DMatrix, Dyn};

use super::lu::SolveError;
use super::sparse::CsrMatrix;

/// Largest system accepted by the dense diagnostics.
pub const DENSE_CAP: usize = 5000;

fn check_size(n: usize) -> Result<(), SolveError> {
    if n > DENSE_CAP {
        return Err(SolveError::TooLarge { size: n, cap: DENSE_CAP });
    }
    Ok(())
}

/// Cholesky factor of a symmetric positive definite matrix.
fn spd_factor(n: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>, SolveError> {
    let scale = n.amax();
    if !n.is_square() || scale == 0.0 || (n - n.transpose()).amax() > 1e-12 * scale {
        return Err(SolveError::NotSpd);
    }
    Cholesky::new(n.clone()).ok_or(SolveError::NotSpd)
}

/// `L^{-1} A L^{-T}` for the Cholesky factor `N = L L^T`.
fn congruence(chol: &Cholesky<f64, Dyn>, a: &DMatrix<f64>) -> DMatrix<f64> {
    let l = chol.l();
    let x = l.solve_lower_triangular(a).expect("nonsingular Cholesky factor");
    l.solve_lower_triangular(&x.transpose())
        .expect("nonsingular Cholesky factor")
        .transpose()
}

/// `min_u max_v (v^T A u) / (||u||_N ||v||_N)`: the smallest singular value
/// of `N^{-1/2} A N^{-1/2}`.
pub fn smallest_generalized_singular_value(a: &CsrMatrix, n: &CsrMatrix) -> Result<f64, SolveError> {
    dense_smallest_generalized_singular_value(&a.to_dense_checked()?, &n.to_dense_checked()?)
}

pub fn dense_smallest_generalized_singular_value(a: &DMatrix<f64>, n: &DMatrix<f64>) -> Result<f64, SolveError> {
    check_size(a.nrows())?;
    if a.shape() != n.shape() {
        return Err(SolveError::DimensionMismatch {
            expected: n.nrows(),
            got: a.nrows(),
        });
    }
    let chol = spd_factor(n)?;
    let b = congruence(&chol, a);
    Ok(b.singular_values().min())
}

/// Smallest `theta` with `K x = theta M x`, `K` symmetric and `M` SPD.
pub fn smallest_generalized_eigenvalue(k: &CsrMatrix, m: &CsrMatrix) -> Result<f64, SolveError> {
    let (k, m) = (k.to_dense_checked()?, m.to_dense_checked()?);
    let chol = spd_factor(&m)?;
    let c = congruence(&chol, &k);
    let c = (&c + c.transpose()) * 0.5;
    Ok(c.symmetric_eigenvalues().min())
}

impl CsrMatrix {
    pub(crate) fn to_dense_checked(&self) -> Result<DMatrix<f64>, SolveError> {
        check_size(self.nrows().max(self.ncols()))?;
        Ok(self.to_dense())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn identity_and_diagonal() {
        let i = CsrMatrix::identity(4);
        assert!((smallest_generalized_singular_value(&i, &i).unwrap() - 1.0).abs() < 1e-14);
        let d = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (1, 1, 0.5)]);
        let id = CsrMatrix::identity(2);
        assert!((smallest_generalized_singular_value(&d, &id).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn non_spd_norm_rejected() {
        let a = CsrMatrix::identity(2);
        let indefinite = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, -1.0)]);
        assert_eq!(smallest_generalized_singular_value(&a, &indefinite), Err(SolveError::NotSpd));
        let nonsym = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 0.5), (1, 1, 1.0)]);
        assert_eq!(smallest_generalized_singular_value(&a, &nonsym), Err(SolveError::NotSpd));
    }

    #[test]
    fn size_cap() {
        let big = CsrMatrix::identity(DENSE_CAP + 1);
        assert!(matches!(
            smallest_generalized_singular_value(&big, &big),
            Err(SolveError::TooLarge { .. })
        ));
    }

    #[test]
    fn generalized_eigenvalue_of_scaled_identity() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(1);
        let g = DMatrix::from_fn(6, 6, |_, _| rng.random_range(-1.0..1.0));
        let m = &g * g.transpose() + DMatrix::identity(6, 6);
        let k = &m * 3.0;
        let theta = smallest_generalized_eigenvalue(&CsrMatrix::from_dense(&k), &CsrMatrix::from_dense(&m)).unwrap();
        assert!((theta - 3.0).abs() < 1e-12);
    }
}
