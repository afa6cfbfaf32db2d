//! Manufactured solutions with analytic first and second derivatives.

use std::f64::consts::PI;

use crate::fem_space::{ScalarField, VectorField};
use crate::forms::MaterialParams;
use crate::mesh::Point;

/// `u = ((x^5 - x^4)(y^3 - y^2), (x^4 - x^3)(y^6 - y^5))`, vanishing on the unit square boundary.
#[derive(Debug, Clone, Copy, Default)]
pub struct PolynomialDisplacement;

/// `(p(t), p'(t), p''(t))` for `p = t^a - t^b`.
fn poly(t: f64, a: i32, b: i32) -> [f64; 3] {
    let (fa, fb) = (a as f64, b as f64);
    [
        t.powi(a) - t.powi(b),
        fa * t.powi(a - 1) - fb * t.powi(b - 1),
        fa * (fa - 1.0) * t.powi(a - 2) - fb * (fb - 1.0) * t.powi(b - 2),
    ]
}

impl PolynomialDisplacement {
    fn factors(x: Point) -> ([f64; 3], [f64; 3], [f64; 3], [f64; 3]) {
        (poly(x[0], 5, 4), poly(x[1], 3, 2), poly(x[0], 4, 3), poly(x[1], 6, 5))
    }
}

impl VectorField for PolynomialDisplacement {
    fn value(&self, x: Point) -> [f64; 2] {
        let (a, b, c, d) = Self::factors(x);
        [a[0] * b[0], c[0] * d[0]]
    }

    fn gradient(&self, x: Point) -> Option<[[f64; 2]; 2]> {
        let (a, b, c, d) = Self::factors(x);
        Some([[a[1] * b[0], a[0] * b[1]], [c[1] * d[0], c[0] * d[1]]])
    }

    fn hessian(&self, x: Point) -> Option<[[[f64; 2]; 2]; 2]> {
        let (a, b, c, d) = Self::factors(x);
        Some([
            [[a[2] * b[0], a[1] * b[1]], [a[1] * b[1], a[0] * b[2]]],
            [[c[2] * d[0], c[1] * d[1]], [c[1] * d[1], c[0] * d[2]]],
        ])
    }
}

/// `-div sigma(u) = -mu lap u - (mu + lambda) grad div u` from the exact Hessian.
#[derive(Debug, Clone, Copy)]
pub struct ElasticForcing<U> {
    pub exact: U,
    pub mu: f64,
    pub lambda: f64,
}

impl<U: VectorField> VectorField for ElasticForcing<U> {
    fn value(&self, x: Point) -> [f64; 2] {
        let h = self.exact.hessian(x).expect("forcing needs an exact Hessian");
        let grad_div = [h[0][0][0] + h[1][1][0], h[0][0][1] + h[1][1][1]];
        let lap = [h[0][0][0] + h[0][1][1], h[1][0][0] + h[1][1][1]];
        [
            -self.mu * lap[0] - (self.mu + self.lambda) * grad_div[0],
            -self.mu * lap[1] - (self.mu + self.lambda) * grad_div[1],
        ]
    }
}

/// `p = -lambda div u`, the pressure of a displacement in the mixed form.
#[derive(Debug, Clone, Copy)]
pub struct VolumetricPressure<U> {
    pub exact: U,
    pub lambda: f64,
}

impl<U: VectorField> ScalarField for VolumetricPressure<U> {
    fn value(&self, x: Point) -> f64 {
        let g = self.exact.gradient(x).expect("pressure needs an exact gradient");
        -self.lambda * (g[0][0] + g[1][1])
    }

    fn gradient(&self, x: Point) -> Option<[f64; 2]> {
        let h = self.exact.hessian(x)?;
        Some([
            -self.lambda * (h[0][0][0] + h[1][1][0]),
            -self.lambda * (h[0][0][1] + h[1][1][1]),
        ])
    }
}

const W: f64 = 4.0 * PI;

/// `u = (sin 4 pi x cos 4 pi y, -cos 4 pi x sin 4 pi y)`, divergence free.
#[derive(Debug, Clone, Copy, Default)]
pub struct VortexVelocity;

impl VectorField for VortexVelocity {
    fn value(&self, x: Point) -> [f64; 2] {
        let (sx, cx) = (W * x[0]).sin_cos();
        let (sy, cy) = (W * x[1]).sin_cos();
        [sx * cy, -cx * sy]
    }

    fn gradient(&self, x: Point) -> Option<[[f64; 2]; 2]> {
        let (sx, cx) = (W * x[0]).sin_cos();
        let (sy, cy) = (W * x[1]).sin_cos();
        Some([[W * cx * cy, -W * sx * sy], [W * sx * sy, -W * cx * cy]])
    }

    fn hessian(&self, x: Point) -> Option<[[[f64; 2]; 2]; 2]> {
        let (sx, cx) = (W * x[0]).sin_cos();
        let (sy, cy) = (W * x[1]).sin_cos();
        let w2 = W * W;
        Some([
            [[-w2 * sx * cy, -w2 * cx * sy], [-w2 * cx * sy, -w2 * sx * cy]],
            [[w2 * cx * sy, w2 * sx * cy], [w2 * sx * cy, w2 * cx * sy]],
        ])
    }
}

/// `p = pi cos 4 pi x cos 4 pi y`, zero mean on the unit square.
#[derive(Debug, Clone, Copy, Default)]
pub struct VortexPressure;

impl ScalarField for VortexPressure {
    fn value(&self, x: Point) -> f64 {
        PI * (W * x[0]).cos() * (W * x[1]).cos()
    }

    fn gradient(&self, x: Point) -> Option<[f64; 2]> {
        let (sx, cx) = (W * x[0]).sin_cos();
        let (sy, cy) = (W * x[1]).sin_cos();
        Some([-PI * W * sx * cy, -PI * W * cx * sy])
    }
}

/// `-2 mu div eps(u) + grad p` for the vortex pair.
#[derive(Debug, Clone, Copy)]
pub struct StokesForcing {
    pub mu: f64,
}

impl VectorField for StokesForcing {
    fn value(&self, x: Point) -> [f64; 2] {
        let h = VortexVelocity.hessian(x).unwrap();
        let gp = VortexPressure.gradient(x).unwrap();
        let mut f = [0.0; 2];
        for (a, fa) in f.iter_mut().enumerate() {
            let lap = h[a][0][0] + h[a][1][1];
            let grad_div = h[0][0][a] + h[1][1][a];
            *fa = -self.mu * (lap + grad_div) + gp[a];
        }
        f
    }
}

/// Exact displacement, body force and Dirichlet data of the polynomial problem.
#[derive(Debug, Clone, Copy)]
pub struct ManufacturedCompressible {
    pub exact: PolynomialDisplacement,
    pub forcing: ElasticForcing<PolynomialDisplacement>,
    pub boundary: PolynomialDisplacement,
}

pub fn manufactured_compressible(params: &MaterialParams) -> ManufacturedCompressible {
    ManufacturedCompressible {
        exact: PolynomialDisplacement,
        forcing: ElasticForcing {
            exact: PolynomialDisplacement,
            mu: params.mu,
            lambda: params.lambda,
        },
        boundary: PolynomialDisplacement,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ManufacturedIncompressible {
    pub velocity: VortexVelocity,
    pub pressure: VortexPressure,
    pub forcing: StokesForcing,
    pub boundary: VortexVelocity,
}

pub fn manufactured_incompressible(mu: f64) -> ManufacturedIncompressible {
    ManufacturedIncompressible {
        velocity: VortexVelocity,
        pressure: VortexPressure,
        forcing: StokesForcing { mu },
        boundary: VortexVelocity,
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};

    use super::*;

    #[test]
    fn polynomial_values_and_trace() {
        let u = PolynomialDisplacement.value([0.5, 0.5]);
        assert_eq!(u, [1.0 / 256.0, 1.0 / 1024.0]);
        for t in [0.0, 0.13, 0.5, 0.77, 1.0] {
            for x in [[t, 0.0], [t, 1.0], [0.0, t], [1.0, t]] {
                assert_eq!(PolynomialDisplacement.value(x), [0.0, 0.0]);
            }
        }
    }

    #[test]
    fn vortex_is_divergence_free_and_forcing_matches() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for _ in 0..20 {
            let x = [rng.random::<f64>(), rng.random::<f64>()];
            let g = VortexVelocity.gradient(x).unwrap();
            assert!((g[0][0] + g[1][1]).abs() < 1e-12);
            let (sx, cx) = (W * x[0]).sin_cos();
            let (sy, cy) = (W * x[1]).sin_cos();
            let f = StokesForcing { mu: 1.0 }.value(x);
            let pi2 = PI * PI;
            assert!((f[0] - 28.0 * pi2 * sx * cy).abs() < 1e-10);
            assert!((f[1] + 36.0 * pi2 * cx * sy).abs() < 1e-10);
        }
    }

    #[test]
    fn derivative_contracts_match_differences() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let h = 1e-6;
        for _ in 0..10 {
            let x = [rng.random::<f64>(), rng.random::<f64>()];
            for f in [&PolynomialDisplacement as &dyn VectorField, &VortexVelocity] {
                let g = f.gradient(x).unwrap();
                let hs = f.hessian(x).unwrap();
                for d in 0..2 {
                    let mut xp = x;
                    let mut xm = x;
                    xp[d] += h;
                    xm[d] -= h;
                    let (up, um) = (f.value(xp), f.value(xm));
                    let (gp, gm) = (f.gradient(xp).unwrap(), f.gradient(xm).unwrap());
                    for c in 0..2 {
                        let scale = 1.0 + g[c][d].abs();
                        assert!(((up[c] - um[c]) / (2.0 * h) - g[c][d]).abs() < 1e-6 * scale);
                        for a in 0..2 {
                            let fd = (gp[c][a] - gm[c][a]) / (2.0 * h);
                            assert!((fd - hs[c][a][d]).abs() < 1e-5 * (1.0 + hs[c][a][d].abs()));
                        }
                    }
                }
            }
        }
    }
}
