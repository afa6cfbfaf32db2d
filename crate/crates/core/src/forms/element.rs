//! Element and boundary-edge quadrature data shared by the assemblers.

use rayon::prelude::*;

use crate::fem_space::basis::{eval_basis, eval_hessians};
use crate::fem_space::{EdgeRule, ElementMap, QuadratureRule};
use crate::linear_solve::{CsrMatrix, TripletBuilder};
use crate::mesh::{BoundaryEdge, Mesh, Point, SideId};

/// Basis data of one order at the points of a triangle rule, mapped to a cell.
pub(crate) struct CellQuad {
    pub map: ElementMap,
    /// Physical points.
    pub points: Vec<Point>,
    /// Quadrature weight times `det J`.
    pub weights: Vec<f64>,
    /// `values[q][i]`.
    pub values: Vec<Vec<f64>>,
    /// Physical gradients `grads[q][i]`.
    pub grads: Vec<Vec<[f64; 2]>>,
    /// Physical Hessians per shape function (constant on affine cells).
    pub hessians: Vec<[[f64; 2]; 2]>,
}

/// Reference tabulation reused across cells.
pub(crate) struct RefTable {
    pub rule: QuadratureRule,
    values: Vec<Vec<f64>>,
    grads: Vec<Vec<[f64; 2]>>,
    hessians: Vec<[[f64; 2]; 2]>,
}

impl RefTable {
    pub fn new(order: usize, degree: usize) -> Self {
        let rule = QuadratureRule::triangle(degree);
        let (values, grads) = rule.points.iter().map(|p| eval_basis(order, *p)).unzip();
        RefTable {
            rule,
            values,
            grads,
            hessians: eval_hessians(order),
        }
    }

    pub fn on_cell(&self, mesh: &Mesh, k: usize) -> CellQuad {
        let map = ElementMap::new(mesh, k);
        CellQuad {
            points: self.rule.points.iter().map(|p| map.to_physical(*p)).collect(),
            weights: self.rule.weights.iter().map(|w| w * map.det).collect(),
            values: self.values.clone(),
            grads: self
                .grads
                .iter()
                .map(|gq| gq.iter().map(|g| map.gradient(*g)).collect())
                .collect(),
            hessians: self.hessians.iter().map(|h| map.hessian(*h)).collect(),
            map,
        }
    }
}

/// Basis data of the owning cell at the points of a boundary-edge rule.
pub(crate) struct EdgeQuad {
    pub triangle: usize,
    pub normal: [f64; 2],
    /// Diameter of the owning cell.
    pub h: f64,
    pub points: Vec<Point>,
    /// Quadrature weight times edge length.
    pub weights: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub grads: Vec<Vec<[f64; 2]>>,
}

impl EdgeQuad {
    pub fn new(mesh: &Mesh, edge: &BoundaryEdge, order: usize, rule: &EdgeRule) -> Self {
        let map = ElementMap::new(mesh, edge.triangle);
        let [a, b] = edge.vertices;
        let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
        let len = mesh.edge_length(edge);
        let mut out = EdgeQuad {
            triangle: edge.triangle,
            normal: edge.normal,
            h: map.h,
            points: Vec::with_capacity(rule.points.len()),
            weights: Vec::with_capacity(rule.points.len()),
            values: Vec::with_capacity(rule.points.len()),
            grads: Vec::with_capacity(rule.points.len()),
        };
        for (t, w) in rule.points.iter().zip(&rule.weights) {
            let x = [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])];
            let (v, g) = eval_basis(order, map.to_reference(x));
            out.points.push(x);
            out.weights.push(w * len);
            out.values.push(v);
            out.grads.push(g.iter().map(|g| map.gradient(*g)).collect());
        }
        out
    }
}

/// A dense local matrix with its global row and column indices.
pub(crate) struct LocalMatrix {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    /// Row-major `rows.len() x cols.len()`.
    pub values: Vec<f64>,
}

impl LocalMatrix {
    pub fn zeros(rows: Vec<usize>, cols: Vec<usize>) -> Self {
        let n = rows.len() * cols.len();
        LocalMatrix {
            rows,
            cols,
            values: vec![0.0; n],
        }
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let nc = self.cols.len();
        self.values[i * nc + j] += v;
    }
}

/// Computes local matrices concurrently and scatters them in input order.
pub(crate) fn assemble_matrix<F>(nrows: usize, ncols: usize, items: usize, local: F) -> CsrMatrix
where
    F: Fn(usize) -> Vec<LocalMatrix> + Sync,
{
    let locals: Vec<Vec<LocalMatrix>> = (0..items).into_par_iter().map(&local).collect();
    let cap = locals.iter().flatten().map(|l| l.values.len()).sum();
    let mut b = TripletBuilder::with_capacity(nrows, ncols, cap);
    for l in locals.iter().flatten() {
        let nc = l.cols.len();
        for (i, &r) in l.rows.iter().enumerate() {
            for (j, &c) in l.cols.iter().enumerate() {
                b.push(r, c, l.values[i * nc + j]);
            }
        }
    }
    b.build()
}

/// Computes local vectors concurrently and sums them in input order.
pub(crate) fn assemble_vector<F>(n: usize, items: usize, local: F) -> Vec<f64>
where
    F: Fn(usize) -> Vec<(usize, f64)> + Sync,
{
    let locals: Vec<Vec<(usize, f64)>> = (0..items).into_par_iter().map(&local).collect();
    let mut out = vec![0.0; n];
    for (i, v) in locals.into_iter().flatten() {
        out[i] += v;
    }
    out
}

/// Boundary edges lying on any of `sides`, in mesh order.
pub(crate) fn edges_on<'m>(mesh: &'m Mesh, sides: &[SideId]) -> Vec<&'m BoundaryEdge> {
    mesh.boundary_edges()
        .iter()
        .filter(|e| sides.contains(&e.side))
        .collect()
}

pub(crate) fn check_sides(mesh: &Mesh, sides: &[SideId]) -> Result<(), crate::mesh::MeshError> {
    match sides.iter().find(|s| s.0 >= mesh.sides().len()) {
        Some(s) => Err(crate::mesh::MeshError::UnknownSide(format!("#{}", s.0))),
        None => Ok(()),
    }
}
