use rayon::prelude::*;

use super::DiagnosticsError;
use crate::fem_space::basis::eval_basis;
use crate::fem_space::space::BasisTable;
use crate::fem_space::{DiscreteField, EdgeRule, ElementMap, PointEval, QuadratureRule, ScalarField, VectorField};
use crate::forms::MaterialParams;
use crate::mesh::{BoundaryEdge, Mesh, Point};

/// Quadrature degree for all error integrals.
pub const ERROR_QUADRATURE_DEGREE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ErrorReport {
    pub l2_error: f64,
    pub h1_semi_error: f64,
    pub triple_norm_error: f64,
    pub pressure_l2_error: Option<f64>,
    pub h_max: f64,
}

/// `sum_K int_K integrand`, with basis data of `order` tabulated at the points.
fn integrate_cells<F>(mesh: &Mesh, order: usize, degree: usize, integrand: F) -> f64
where
    F: Fn(usize, &ElementMap, Point, &[f64], &[[f64; 2]]) -> f64 + Sync,
{
    let rule = QuadratureRule::triangle(degree);
    let table = BasisTable::for_rule(order, &rule);
    let parts: Vec<f64> = (0..mesh.triangles().len())
        .into_par_iter()
        .map(|k| {
            let map = ElementMap::new(mesh, k);
            let mut s = 0.0;
            for (q, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                s += w * integrand(k, &map, map.to_physical(*p), &table.values[q], &table.grads[q]);
            }
            s * map.det
        })
        .collect();
    parts.iter().sum()
}

/// `sum_e int_e integrand` over the given boundary edges.
fn integrate_edges<F>(mesh: &Mesh, edges: &[&BoundaryEdge], order: usize, degree: usize, integrand: F) -> f64
where
    F: Fn(&BoundaryEdge, &ElementMap, Point, &[f64], &[[f64; 2]]) -> f64 + Sync,
{
    let rule = EdgeRule::new(degree);
    let parts: Vec<f64> = edges
        .par_iter()
        .map(|e| {
            let map = ElementMap::new(mesh, e.triangle);
            let [a, b] = e.vertices.map(|v| mesh.vertices()[v]);
            let len = mesh.edge_length(e);
            let mut s = 0.0;
            for (t, w) in rule.points.iter().zip(&rule.weights) {
                let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                let (v, g) = eval_basis(order, map.to_reference(x));
                s += w * integrand(e, &map, x, &v, &g);
            }
            s * len
        })
        .collect();
    parts.iter().sum()
}

/// `exact - discrete` for a vector quantity; either part may be absent.
#[derive(Clone, Copy)]
struct VectorDiff<'a> {
    discrete: Option<&'a DiscreteField<'a>>,
    exact: Option<&'a dyn VectorField>,
}

impl VectorDiff<'_> {
    fn order(&self) -> usize {
        self.discrete.map_or(1, |d| d.space().order())
    }

    fn eval(&self, k: usize, map: &ElementMap, x: Point, v: &[f64], g: &[[f64; 2]]) -> PointEval {
        let mut out = PointEval::default();
        if let Some(e) = self.exact {
            out.value = e.value(x);
            out.gradient = e.gradient(x).unwrap_or_default();
        }
        if let Some(d) = self.discrete {
            let h = d.eval_with(k, map, v, g);
            for c in 0..2 {
                out.value[c] -= h.value[c];
                for j in 0..2 {
                    out.gradient[c][j] -= h.gradient[c][j];
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy)]
struct ScalarDiff<'a> {
    discrete: Option<&'a DiscreteField<'a>>,
    exact: Option<&'a dyn ScalarField>,
}

impl ScalarDiff<'_> {
    fn eval(&self, k: usize, map: &ElementMap, x: Point, v: &[f64], g: &[[f64; 2]]) -> (f64, [f64; 2]) {
        let (mut val, mut grad) = (0.0, [0.0; 2]);
        if let Some(e) = self.exact {
            val = e.value(x);
            grad = e.gradient(x).unwrap_or_default();
        }
        if let Some(d) = self.discrete {
            let h = d.eval_with(k, map, v, g);
            val -= h.value[0];
            grad[0] -= h.gradient[0][0];
            grad[1] -= h.gradient[0][1];
        }
        (val, grad)
    }
}

fn grad_sq(g: &[[f64; 2]; 2]) -> f64 {
    g.iter().flatten().map(|x| x * x).sum()
}

/// `mu (|grad w|^2 + |h^-1/2 w|^2_bd)` and `lambda (|div w|^2 + |h^-1/2 w.n|^2_bd)`, squared.
fn compressible_parts(mesh: &Mesh, w: VectorDiff, degree: usize) -> (f64, f64) {
    let order = w.order();
    let vol = |f: fn(&PointEval) -> f64| {
        integrate_cells(mesh, order, degree, |k, map, x, v, g| f(&w.eval(k, map, x, v, g)))
    };
    let grad = vol(|e| grad_sq(&e.gradient));
    let div = vol(|e| (e.gradient[0][0] + e.gradient[1][1]).powi(2));
    let edges: Vec<&BoundaryEdge> = mesh.boundary_edges().iter().collect();
    let (bv, bn) = {
        let bv = integrate_edges(mesh, &edges, order, degree, |e, map, x, v, g| {
            let p = w.eval(e.triangle, map, x, v, g);
            (p.value[0].powi(2) + p.value[1].powi(2)) / map.h
        });
        let bn = integrate_edges(mesh, &edges, order, degree, |e, map, x, v, g| {
            let p = w.eval(e.triangle, map, x, v, g);
            (p.value[0] * e.normal[0] + p.value[1] * e.normal[1]).powi(2) / map.h
        });
        (bv, bn)
    };
    (grad + bv, div + bn)
}

fn pressure_part(mesh: &Mesh, q: ScalarDiff, order: usize, degree: usize) -> f64 {
    integrate_cells(mesh, order, degree, |k, map, x, v, g| {
        let (_, gr) = q.eval(k, map, x, v, g);
        map.h * map.h * (gr[0] * gr[0] + gr[1] * gr[1])
    })
}

fn degree_for(order: usize) -> usize {
    2 * order + 2
}

/// `|||w|||` of the compressible problem; `h` is the owning element's diameter.
pub fn triple_norm_compressible(field: &DiscreteField, params: &MaterialParams) -> f64 {
    let w = VectorDiff { discrete: Some(field), exact: None };
    let (m, l) = compressible_parts(field.space().mesh(), w, degree_for(field.space().order()));
    (params.mu * m + params.lambda * l).sqrt()
}

/// `|||(w, r)|||` of the incompressible problem.
pub fn triple_norm_incompressible(v: &DiscreteField, p: &DiscreteField, params: &MaterialParams) -> f64 {
    let mesh = v.space().mesh();
    let deg = degree_for(v.space().order());
    let (m, _) = compressible_parts(mesh, VectorDiff { discrete: Some(v), exact: None }, deg);
    let pr = pressure_part(mesh, ScalarDiff { discrete: Some(p), exact: None }, p.space().order(), deg);
    (params.mu * m + pr / params.mu).sqrt()
}

/// L2, H1-seminorm and energy-norm errors against exact fields. With a
/// pressure pair the energy norm is the incompressible one.
pub fn error_norms(
    u_h: &DiscreteField,
    exact_u: &dyn VectorField,
    pressure: Option<(&DiscreteField, &dyn ScalarField)>,
    params: &MaterialParams,
) -> Result<ErrorReport, DiagnosticsError> {
    error_norms_with_degree(u_h, exact_u, pressure, params, ERROR_QUADRATURE_DEGREE)
}

/// [`error_norms`] with an explicit quadrature degree.
pub fn error_norms_with_degree(
    u_h: &DiscreteField,
    exact_u: &dyn VectorField,
    pressure: Option<(&DiscreteField, &dyn ScalarField)>,
    params: &MaterialParams,
    deg: usize,
) -> Result<ErrorReport, DiagnosticsError> {
    let mesh = u_h.space().mesh();
    let probe = mesh.vertices()[0];
    if exact_u.gradient(probe).is_none() {
        return Err(DiagnosticsError::MissingDerivative("displacement"));
    }
    let order = u_h.space().order();
    let w = VectorDiff { discrete: Some(u_h), exact: Some(exact_u) };
    let l2 = integrate_cells(mesh, order, deg, |k, map, x, v, g| {
        let e = w.eval(k, map, x, v, g);
        e.value[0].powi(2) + e.value[1].powi(2)
    });
    let h1 = integrate_cells(mesh, order, deg, |k, map, x, v, g| grad_sq(&w.eval(k, map, x, v, g).gradient));
    let (m, l) = compressible_parts(mesh, w, deg);
    let (triple, pressure_l2) = match pressure {
        None => ((params.mu * m + params.lambda * l).sqrt(), None),
        Some((p_h, exact_p)) => {
            if exact_p.gradient(probe).is_none() {
                return Err(DiagnosticsError::MissingDerivative("pressure"));
            }
            let q = ScalarDiff { discrete: Some(p_h), exact: Some(exact_p) };
            let po = p_h.space().order();
            let pl2 = integrate_cells(mesh, po, deg, |k, map, x, v, g| q.eval(k, map, x, v, g).0.powi(2));
            let pr = pressure_part(mesh, q, po, deg);
            ((params.mu * m + pr / params.mu).sqrt(), Some(pl2.sqrt()))
        }
    };
    Ok(ErrorReport {
        l2_error: l2.sqrt(),
        h1_semi_error: h1.sqrt(),
        triple_norm_error: triple,
        pressure_l2_error: pressure_l2,
        h_max: mesh.quality().h_max,
    })
}

/// Mean of a field over each polygon side, in side order.
pub fn side_means(field: &DiscreteField) -> Vec<[f64; 2]> {
    let space = field.space();
    let mesh = space.mesh();
    let w = VectorDiff { discrete: Some(field), exact: None };
    mesh.all_sides()
        .into_iter()
        .map(|s| {
            let edges: Vec<&BoundaryEdge> = mesh.side_edges(s).collect();
            let len: f64 = edges.iter().map(|e| mesh.edge_length(e)).sum();
            let comp = |c: usize| {
                integrate_edges(mesh, &edges, space.order(), space.order(), |e, map, x, v, g| {
                    -w.eval(e.triangle, map, x, v, g).value[c]
                }) / len
            };
            [comp(0), comp(1)]
        })
        .collect()
}

/// `|u|_Gamma = (sum_i |Gamma_i| |mean_{Gamma_i} u|^2)^{1/2}` over polygon sides.
pub fn korn_boundary_seminorm(field: &DiscreteField) -> f64 {
    let mesh = field.space().mesh();
    side_means(field)
        .iter()
        .zip(mesh.sides())
        .map(|(m, s)| s.length() * (m[0] * m[0] + m[1] * m[1]))
        .sum::<f64>()
        .sqrt()
}

/// Gram matrix of `{(1,0), (0,1), (y - yc, -(x - xc))}` in the `|.|_Gamma`
/// inner product, with `(xc, yc)` the centroid of the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidMotionCheck {
    pub gram: [[f64; 3]; 3],
    pub min_eigenvalue: f64,
}

pub fn rigid_motion_norm_check(mesh: &Mesh) -> RigidMotionCheck {
    let mut gram = [[0.0; 3]; 3];
    let (mut area, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for k in 0..mesh.triangles().len() {
        let a = mesh.area(k);
        let p = mesh.triangle_points(k);
        area += a;
        cx += a * (p[0][0] + p[1][0] + p[2][0]) / 3.0;
        cy += a * (p[0][1] + p[1][1] + p[2][1]) / 3.0;
    }
    let (cx, cy) = (cx / area, cy / area);
    for s in mesh.sides() {
        let (a, b) = (s.start, s.end);
        let len = s.length();
        // Side integrals of the basis (linear integrands: midpoint rule is exact).
        let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        let m = [[len, 0.0], [0.0, len], [len * (mid[1] - cy), -len * (mid[0] - cx)]];
        for i in 0..3 {
            for j in 0..3 {
                gram[i][j] += (m[i][0] * m[j][0] + m[i][1] * m[j][1]) / len;
            }
        }
    }
    let g = nalgebra::Matrix3::from_fn(|i, j| gram[i][j]);
    let min_eigenvalue = g.symmetric_eigenvalues().min();
    RigidMotionCheck { gram, min_eigenvalue }
}
