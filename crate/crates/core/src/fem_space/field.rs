//! Analytic fields and their transfer onto finite element spaces.

use super::geometry::ElementMap;
use super::quadrature::QuadratureRule;
use super::space::{DiscreteField, FeSpace};
use crate::mesh::{Mesh, Point};

/// A 2-vector valued function of position with optional derivative contracts.
pub trait VectorField: Sync {
    fn value(&self, x: Point) -> [f64; 2];

    /// `grad[c][d] = d(u_c)/dx_d`.
    fn gradient(&self, _x: Point) -> Option<[[f64; 2]; 2]> {
        None
    }

    /// `hess[c][a][b] = d^2(u_c)/(dx_a dx_b)`.
    fn hessian(&self, _x: Point) -> Option<[[[f64; 2]; 2]; 2]> {
        None
    }
}

/// A scalar function of position with an optional gradient contract.
pub trait ScalarField: Sync {
    fn value(&self, x: Point) -> f64;

    fn gradient(&self, _x: Point) -> Option<[f64; 2]> {
        None
    }
}

/// Constant vector field with zero derivatives.
#[derive(Debug, Clone, Copy)]
pub struct ConstantVector(pub [f64; 2]);

impl VectorField for ConstantVector {
    fn value(&self, _x: Point) -> [f64; 2] {
        self.0
    }
    fn gradient(&self, _x: Point) -> Option<[[f64; 2]; 2]> {
        Some([[0.0; 2]; 2])
    }
    fn hessian(&self, _x: Point) -> Option<[[[f64; 2]; 2]; 2]> {
        Some([[[0.0; 2]; 2]; 2])
    }
}

pub const ZERO_VECTOR: ConstantVector = ConstantVector([0.0, 0.0]);

/// Constant scalar field.
#[derive(Debug, Clone, Copy)]
pub struct ConstantScalar(pub f64);

impl ScalarField for ConstantScalar {
    fn value(&self, _x: Point) -> f64 {
        self.0
    }
    fn gradient(&self, _x: Point) -> Option<[f64; 2]> {
        Some([0.0; 2])
    }
}

/// Vector field from closures; the gradient closure is optional.
pub struct VectorFn<F, G = fn(Point) -> [[f64; 2]; 2]> {
    value: F,
    gradient: Option<G>,
}

impl<F> VectorFn<F>
where
    F: Fn(Point) -> [f64; 2] + Sync,
{
    pub fn new(value: F) -> Self {
        VectorFn { value, gradient: None }
    }
}

impl<F, G> VectorFn<F, G>
where
    F: Fn(Point) -> [f64; 2] + Sync,
    G: Fn(Point) -> [[f64; 2]; 2] + Sync,
{
    pub fn with_gradient(value: F, gradient: G) -> Self {
        VectorFn {
            value,
            gradient: Some(gradient),
        }
    }
}

impl<F, G> VectorField for VectorFn<F, G>
where
    F: Fn(Point) -> [f64; 2] + Sync,
    G: Fn(Point) -> [[f64; 2]; 2] + Sync,
{
    fn value(&self, x: Point) -> [f64; 2] {
        (self.value)(x)
    }
    fn gradient(&self, x: Point) -> Option<[[f64; 2]; 2]> {
        self.gradient.as_ref().map(|g| g(x))
    }
}

/// Scalar field from closures; the gradient closure is optional.
pub struct ScalarFn<F, G = fn(Point) -> [f64; 2]> {
    value: F,
    gradient: Option<G>,
}

impl<F> ScalarFn<F>
where
    F: Fn(Point) -> f64 + Sync,
{
    pub fn new(value: F) -> Self {
        ScalarFn { value, gradient: None }
    }
}

impl<F, G> ScalarFn<F, G>
where
    F: Fn(Point) -> f64 + Sync,
    G: Fn(Point) -> [f64; 2] + Sync,
{
    pub fn with_gradient(value: F, gradient: G) -> Self {
        ScalarFn {
            value,
            gradient: Some(gradient),
        }
    }
}

impl<F, G> ScalarField for ScalarFn<F, G>
where
    F: Fn(Point) -> f64 + Sync,
    G: Fn(Point) -> [f64; 2] + Sync,
{
    fn value(&self, x: Point) -> f64 {
        (self.value)(x)
    }
    fn gradient(&self, x: Point) -> Option<[f64; 2]> {
        self.gradient.as_ref().map(|g| g(x))
    }
}

/// Nodal interpolation of a vector field onto a 2-component space.
pub fn interpolate_vector<'a>(space: &'a FeSpace, field: &dyn VectorField) -> DiscreteField<'a> {
    assert_eq!(space.components(), 2, "vector interpolation needs a 2-component space");
    let coeffs = space
        .node_coords()
        .iter()
        .flat_map(|x| field.value(*x))
        .collect();
    DiscreteField::new(space, coeffs).expect("length matches by construction")
}

/// Nodal interpolation of a scalar field onto a 1-component space.
pub fn interpolate_scalar<'a>(space: &'a FeSpace, field: &dyn ScalarField) -> DiscreteField<'a> {
    assert_eq!(space.components(), 1, "scalar interpolation needs a 1-component space");
    let coeffs = space.node_coords().iter().map(|x| field.value(*x)).collect();
    DiscreteField::new(space, coeffs).expect("length matches by construction")
}

/// `sum_K int_K integrand dx` with a rule exact to `degree` on each triangle.
pub fn integrate_field(mesh: &Mesh, integrand: impl Fn(Point) -> f64, degree: usize) -> f64 {
    let rule = QuadratureRule::triangle(degree);
    let mut total = 0.0;
    for k in 0..mesh.triangles().len() {
        let map = ElementMap::new(mesh, k);
        let local: f64 = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(p, w)| w * integrand(map.to_physical(*p)))
            .sum();
        total += local * map.det;
    }
    total
}
