use std::sync::Arc;

use thiserror::Error;

use super::basis::{eval_basis, local_count, P2_EDGE_NODES};
use super::geometry::ElementMap;
use super::quadrature::QuadratureRule;
use crate::mesh::{Mesh, Point, SideId};

#[derive(Debug, Error, PartialEq)]
pub enum SpaceError {
    #[error("unsupported polynomial order {0}, expected 1 or 2")]
    UnsupportedOrder(usize),
    #[error("unsupported component count {0}, expected 1 or 2")]
    UnsupportedComponents(usize),
    #[error("coefficient vector has length {got}, space has {expected} dofs")]
    LengthMismatch { expected: usize, got: usize },
}

/// Continuous Lagrange space of order 1 or 2, scalar or 2-vector valued.
///
/// Nodes are numbered vertices first (mesh order), then edges sorted by
/// endpoint indices. Vector DOFs are interleaved: node `a` carries DOFs
/// `2a` (x) and `2a + 1` (y).
#[derive(Debug, Clone)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    order: usize,
    components: usize,
    node_coords: Vec<Point>,
    cell_nodes: Vec<usize>,
    edges: Vec<[usize; 2]>,
}

impl FeSpace {
    pub fn new(mesh: Arc<Mesh>, order: usize, components: usize) -> Result<Self, SpaceError> {
        if !(1..=2).contains(&order) {
            return Err(SpaceError::UnsupportedOrder(order));
        }
        if !(1..=2).contains(&components) {
            return Err(SpaceError::UnsupportedComponents(components));
        }
        let nv = mesh.vertices().len();
        let edges = mesh.edges();
        let mut node_coords = mesh.vertices().to_vec();
        let per_cell = local_count(order);
        let mut cell_nodes = Vec::with_capacity(per_cell * mesh.triangles().len());
        if order == 2 {
            let v = mesh.vertices();
            node_coords.extend(
                edges
                    .iter()
                    .map(|[a, b]| [0.5 * (v[*a][0] + v[*b][0]), 0.5 * (v[*a][1] + v[*b][1])]),
            );
        }
        for t in mesh.triangles() {
            cell_nodes.extend_from_slice(t);
            if order == 2 {
                for [a, b] in P2_EDGE_NODES {
                    let key = [t[a].min(t[b]), t[a].max(t[b])];
                    let e = edges.binary_search(&key).expect("edge of a mesh triangle");
                    cell_nodes.push(nv + e);
                }
            }
        }
        Ok(FeSpace {
            mesh,
            order,
            components,
            node_coords,
            cell_nodes,
            edges,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn node_count(&self) -> usize {
        self.node_coords.len()
    }

    pub fn dof_count(&self) -> usize {
        self.node_count() * self.components
    }

    pub fn node_coords(&self) -> &[Point] {
        &self.node_coords
    }

    pub fn local_count(&self) -> usize {
        local_count(self.order)
    }

    pub fn cell_nodes(&self, k: usize) -> &[usize] {
        let n = self.local_count();
        &self.cell_nodes[k * n..(k + 1) * n]
    }

    pub fn dof(&self, node: usize, component: usize) -> usize {
        node * self.components + component
    }

    /// Interleaved DOFs of cell `k`: `[node0.x, node0.y, node1.x, ...]`.
    pub fn cell_dofs(&self, k: usize) -> Vec<usize> {
        self.cell_nodes(k)
            .iter()
            .flat_map(|&a| (0..self.components).map(move |c| a * self.components + c))
            .collect()
    }

    /// Nodes lying on the given sides (vertices and, for order 2, edge midpoints), sorted.
    pub fn side_nodes(&self, sides: &[SideId]) -> Vec<usize> {
        let nv = self.mesh.vertices().len();
        let mut nodes = Vec::new();
        for e in self.mesh.boundary_edges().iter().filter(|e| sides.contains(&e.side)) {
            nodes.extend_from_slice(&e.vertices);
            if self.order == 2 {
                let [a, b] = e.vertices;
                let idx = self.edges.binary_search(&[a.min(b), a.max(b)]).unwrap();
                nodes.push(nv + idx);
            }
        }
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }

    /// DOF indices supported on the whole boundary.
    pub fn boundary_dofs(&self) -> Vec<usize> {
        self.side_nodes(&self.mesh.all_sides())
            .into_iter()
            .flat_map(|a| (0..self.components).map(move |c| a * self.components + c))
            .collect()
    }

    /// Local nodes of cell `k` that lie on its local edge `e` (opposite vertex `e`).
    pub fn local_edge_nodes(&self, e: usize) -> Vec<usize> {
        let [a, b] = crate::mesh::LOCAL_EDGES[e];
        let mut nodes = vec![a, b];
        if self.order == 2 {
            // Midpoint nodes: 3 on (0,1), 4 on (1,2), 5 on (2,0).
            nodes.push(match e {
                0 => 4,
                1 => 5,
                _ => 3,
            });
        }
        nodes
    }
}

/// Coefficient vector over an [`FeSpace`].
#[derive(Debug, Clone)]
pub struct DiscreteField<'a> {
    space: &'a FeSpace,
    coefficients: Vec<f64>,
}

/// Pointwise value and gradient of a (scalar or vector) field; unused
/// components stay zero. `gradient[c][d]` is `d(u_c)/dx_d`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PointEval {
    pub value: [f64; 2],
    pub gradient: [[f64; 2]; 2],
}

impl<'a> DiscreteField<'a> {
    pub fn new(space: &'a FeSpace, coefficients: Vec<f64>) -> Result<Self, SpaceError> {
        if coefficients.len() != space.dof_count() {
            return Err(SpaceError::LengthMismatch {
                expected: space.dof_count(),
                got: coefficients.len(),
            });
        }
        Ok(DiscreteField { space, coefficients })
    }

    pub fn zeros(space: &'a FeSpace) -> Self {
        DiscreteField {
            space,
            coefficients: vec![0.0; space.dof_count()],
        }
    }

    pub fn space(&self) -> &'a FeSpace {
        self.space
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coefficients
    }

    pub fn into_coefficients(self) -> Vec<f64> {
        self.coefficients
    }

    /// Evaluates on cell `k` from precomputed reference basis values and gradients.
    pub fn eval_with(&self, k: usize, map: &ElementMap, values: &[f64], ref_grads: &[[f64; 2]]) -> PointEval {
        let nc = self.space.components;
        let mut out = PointEval::default();
        for (i, &node) in self.space.cell_nodes(k).iter().enumerate() {
            let g = map.gradient(ref_grads[i]);
            for c in 0..nc {
                let coef = self.coefficients[node * nc + c];
                out.value[c] += coef * values[i];
                out.gradient[c][0] += coef * g[0];
                out.gradient[c][1] += coef * g[1];
            }
        }
        out
    }

    /// Evaluates on cell `k` at reference point `p`.
    pub fn eval_reference(&self, k: usize, p: [f64; 2]) -> PointEval {
        let map = ElementMap::new(self.space.mesh(), k);
        let (v, g) = eval_basis(self.space.order, p);
        self.eval_with(k, &map, &v, &g)
    }

    /// Evaluates at a physical point lying in cell `k`.
    pub fn eval_physical(&self, k: usize, x: Point) -> PointEval {
        let map = ElementMap::new(self.space.mesh(), k);
        let (v, g) = eval_basis(self.space.order, map.to_reference(x));
        self.eval_with(k, &map, &v, &g)
    }
}

/// Basis values and reference gradients tabulated at the points of a rule.
#[derive(Debug, Clone)]
pub(crate) struct BasisTable {
    pub values: Vec<Vec<f64>>,
    pub grads: Vec<Vec<[f64; 2]>>,
}

impl BasisTable {
    pub fn new(order: usize, points: &[[f64; 2]]) -> Self {
        let (values, grads) = points.iter().map(|p| eval_basis(order, *p)).unzip();
        BasisTable { values, grads }
    }

    pub fn for_rule(order: usize, rule: &QuadratureRule) -> Self {
        Self::new(order, &rule.points)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_unit_square_mesh;
    use rand::{Rng, SeedableRng};

    fn square(n: usize) -> Arc<Mesh> {
        Arc::new(build_unit_square_mesh(n).unwrap())
    }

    #[test]
    fn dof_counts() {
        let m = square(1);
        assert_eq!(FeSpace::new(m.clone(), 1, 1).unwrap().dof_count(), 4);
        assert_eq!(FeSpace::new(m.clone(), 2, 1).unwrap().dof_count(), 9);
        assert_eq!(FeSpace::new(m.clone(), 1, 2).unwrap().dof_count(), 8);
        assert_eq!(FeSpace::new(m.clone(), 3, 1).unwrap_err(), SpaceError::UnsupportedOrder(3));
        assert_eq!(FeSpace::new(m, 1, 3).unwrap_err(), SpaceError::UnsupportedComponents(3));
        let m = square(5);
        let (v, e) = (m.vertices().len(), m.edges().len());
        for (k, c) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            let s = FeSpace::new(m.clone(), k, c).unwrap();
            let scalar = if k == 1 { v } else { v + e };
            assert_eq!(s.dof_count(), c * scalar);
            for t in 0..m.triangles().len() {
                assert_eq!(s.cell_dofs(t).len(), c * (k + 1) * (k + 2) / 2);
            }
        }
    }

    #[test]
    fn boundary_dofs_of_square() {
        let s = FeSpace::new(square(3), 2, 2).unwrap();
        // 4n boundary vertices plus 4n edge midpoints, two components each.
        assert_eq!(s.boundary_dofs().len(), 2 * (12 + 12));
        for d in s.boundary_dofs() {
            let x = s.node_coords()[d / 2];
            assert!(x[0].abs() < 1e-14 || x[1].abs() < 1e-14 || (x[0] - 1.0).abs() < 1e-14 || (x[1] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn local_edge_nodes_lie_on_the_edge() {
        let s = FeSpace::new(square(2), 2, 1).unwrap();
        let nodes = super::super::basis::reference_nodes(2);
        for e in 0..3 {
            let [a, b] = crate::mesh::LOCAL_EDGES[e];
            for l in s.local_edge_nodes(e) {
                let (pa, pb, p) = (nodes[a], nodes[b], nodes[l]);
                let cross = (pb[0] - pa[0]) * (p[1] - pa[1]) - (pb[1] - pa[1]) * (p[0] - pa[0]);
                assert!(cross.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn continuity_across_shared_edges() {
        let mesh = square(4);
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for order in [1, 2] {
            let s = FeSpace::new(mesh.clone(), order, 2).unwrap();
            let coeffs: Vec<f64> = (0..s.dof_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let u = DiscreteField::new(&s, coeffs).unwrap();
            // Each interior edge is shared by exactly two triangles; compare both sides.
            let mut owners = std::collections::HashMap::<[usize; 2], Vec<usize>>::new();
            for (k, t) in mesh.triangles().iter().enumerate() {
                for [a, b] in crate::mesh::LOCAL_EDGES {
                    owners.entry([t[a].min(t[b]), t[a].max(t[b])]).or_default().push(k);
                }
            }
            for (edge, ks) in owners.iter().filter(|(_, ks)| ks.len() == 2) {
                let (pa, pb) = (mesh.vertices()[edge[0]], mesh.vertices()[edge[1]]);
                for _ in 0..3 {
                    let t: f64 = rng.random_range(0.0..1.0);
                    let x = [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])];
                    let v0 = u.eval_physical(ks[0], x).value;
                    let v1 = u.eval_physical(ks[1], x).value;
                    assert!((v0[0] - v1[0]).abs() < 1e-12 && (v0[1] - v1[1]).abs() < 1e-12);
                }
            }
        }
    }
}
