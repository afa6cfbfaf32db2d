//! Gauss rules on the unit interval and collapsed (Duffy) Gauss rules on the
//! reference triangle `{(x, y) : x, y >= 0, x + y <= 1}`.

use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    /// Reference-triangle coordinates.
    pub points: Vec<[f64; 2]>,
    /// Weights, summing to the reference area 1/2.
    pub weights: Vec<f64>,
    pub exact_degree: usize,
}

#[derive(Debug, Clone)]
pub struct EdgeRule {
    /// Parameters in `[0, 1]`.
    pub points: Vec<f64>,
    /// Weights, summing to 1.
    pub weights: Vec<f64>,
    pub exact_degree: usize,
}

/// `m`-point Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..(m + 1) / 2 {
        // Chebyshev-type initial guess, then Newton on P_m.
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Map [-1, 1] -> [0, 1]; x is descending in i.
        nodes[i] = 0.5 * (1.0 - x);
        nodes[m - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[m - 1 - i] = 0.5 * w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.5;
    }
    (nodes, weights)
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if m == 0 {
        return (1.0, 0.0);
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

impl EdgeRule {
    /// Gauss rule exact for polynomials of degree `degree` on `[0, 1]`.
    pub fn new(degree: usize) -> Self {
        let m = degree / 2 + 1;
        let (points, weights) = gauss_legendre(m);
        EdgeRule {
            points,
            weights,
            exact_degree: 2 * m - 1,
        }
    }
}

impl QuadratureRule {
    /// Collapsed Gauss rule exact for total degree `degree` on the reference triangle.
    pub fn triangle(degree: usize) -> Self {
        // The Duffy Jacobian raises the degree in the collapsed direction by one.
        let m = (degree + 3) / 2;
        let (s, ws) = gauss_legendre(m);
        let mut points = Vec::with_capacity(m * m);
        let mut weights = Vec::with_capacity(m * m);
        for (si, wsi) in s.iter().zip(&ws) {
            for (ti, wti) in s.iter().zip(&ws) {
                points.push([*si, (1.0 - si) * ti]);
                weights.push(wsi * wti * (1.0 - si));
            }
        }
        QuadratureRule {
            points,
            weights,
            exact_degree: 2 * m - 2,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Exact integral of x^a y^b over the reference triangle: a! b! / (a + b + 2)!
    fn monomial_integral(a: u32, b: u32) -> f64 {
        let fact = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
        fact(a) * fact(b) / fact(a + b + 2)
    }

    #[test]
    fn weights_sum_to_reference_measure() {
        for d in 0..=20 {
            let q = QuadratureRule::triangle(d);
            assert!((q.weights.iter().sum::<f64>() - 0.5).abs() < 1e-14, "degree {d}");
            assert!(q.exact_degree >= d);
            let e = EdgeRule::new(d);
            assert!((e.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!(e.exact_degree >= d);
        }
    }

    #[test]
    fn triangle_monomials_exact() {
        for d in [2, 4, 6, 10, 16] {
            let q = QuadratureRule::triangle(d);
            for a in 0..=d as u32 {
                for b in 0..=(d as u32 - a) {
                    let approx: f64 = q
                        .points
                        .iter()
                        .zip(&q.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    let exact = monomial_integral(a, b);
                    assert!((approx - exact).abs() <= 1e-12 * exact.max(1e-300) + 1e-16, "x^{a} y^{b}, degree {d}");
                }
            }
        }
    }

    #[test]
    fn edge_monomials_exact() {
        for d in [1, 3, 6, 16] {
            let e = EdgeRule::new(d);
            for a in 0..=d as i32 {
                let approx: f64 = e.points.iter().zip(&e.weights).map(|(t, w)| w * t.powi(a)).sum();
                assert!((approx - 1.0 / (a as f64 + 1.0)).abs() < 1e-13);
            }
        }
    }

    proptest! {
        #[test]
        fn random_polynomials_of_exact_degree(coeffs in prop::collection::vec(-1.0f64..1.0, 45), d in 1usize..=8) {
            let q = QuadratureRule::triangle(d);
            let mut exact = 0.0;
            let mut idx = 0;
            let mut terms = Vec::new();
            for a in 0..=d as u32 {
                for b in 0..=(d as u32 - a) {
                    let c = coeffs[idx % coeffs.len()];
                    idx += 1;
                    exact += c * monomial_integral(a, b);
                    terms.push((a, b, c));
                }
            }
            let approx: f64 = q.points.iter().zip(&q.weights).map(|(p, w)| {
                w * terms.iter().map(|(a, b, c)| c * p[0].powi(*a as i32) * p[1].powi(*b as i32)).sum::<f64>()
            }).sum();
            let scale = terms.iter().map(|(a, b, c)| c.abs() * monomial_integral(*a, *b)).sum::<f64>();
            prop_assert!((approx - exact).abs() <= 1e-12 * scale.max(1e-12));
        }
    }
}
