//! Equal-order velocity/pressure Nitsche formulation for (nearly) incompressible
//! elasticity with a residual-based pressure stabilization.
//!
//! Unknowns are ordered `[velocity, pressure, multiplier?]`. The discrete
//! stress is `2 mu eps(u) - p I`, so the traction seen by Neumann data is
//! `(2 mu eps(u) - p I) n`.

use std::sync::Arc;

use super::compressible::body_load;
use super::element::{assemble_matrix, assemble_vector, check_sides, edges_on, EdgeQuad, LocalMatrix, RefTable};
use super::{eliminate, AssembledSystem, AssemblyError, ConstraintMeta, MaterialParams, QuadratureDegrees};
use crate::fem_space::{EdgeRule, FeSpace, VectorField};
use crate::linear_solve::{CsrMatrix, SolveError, SolveReport, TripletBuilder};
use crate::mesh::SideId;

/// How Dirichlet velocity data enters the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcMode {
    #[default]
    Weak,
    Strong,
}

impl BcMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            BcMode::Weak => "weak",
            BcMode::Strong => "strong",
        }
    }
}

/// Length scale `h` inside the stabilization integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StabilizationLength {
    /// Diameter of each element.
    #[default]
    Element,
    /// Largest element diameter of the mesh.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedOptions {
    pub bc_mode: BcMode,
    /// Replaces `div u = 0` by the compressible relation with this `lambda`.
    pub nearly_lambda: Option<f64>,
    /// Appends one multiplier enforcing a zero pressure mean.
    pub mean_constraint: bool,
    pub h_mode: StabilizationLength,
}

impl Default for MixedOptions {
    fn default() -> Self {
        MixedOptions {
            bc_mode: BcMode::Weak,
            nearly_lambda: None,
            mean_constraint: true,
            h_mode: StabilizationLength::Element,
        }
    }
}

/// Assembled mixed system; coefficients are `[velocity, pressure]`.
#[derive(Debug, Clone)]
pub struct MixedSystem {
    pub system: AssembledSystem,
    pub velocity_dofs: usize,
    pub pressure_dofs: usize,
}

impl MixedSystem {
    /// Solves and splits into velocity and pressure coefficients.
    pub fn solve(&self) -> Result<(Vec<f64>, Vec<f64>, SolveReport), SolveError> {
        let (mut full, report) = self.system.solve()?;
        let p = full.split_off(self.velocity_dofs);
        Ok((full, p, report))
    }

    pub fn split<'a>(&self, full: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        full.split_at(self.velocity_dofs)
    }
}

fn check_pair(v: &FeSpace, p: &FeSpace) -> Result<(), AssemblyError> {
    if v.components() != 2 {
        return Err(AssemblyError::WrongComponents { expected: 2, got: v.components() });
    }
    if p.components() != 1 {
        return Err(AssemblyError::WrongComponents { expected: 1, got: p.components() });
    }
    let same = Arc::ptr_eq(v.mesh_arc(), p.mesh_arc())
        || (v.mesh().vertices() == p.mesh().vertices() && v.mesh().triangles() == p.mesh().triangles());
    if !same {
        return Err(AssemblyError::MismatchedMeshes);
    }
    if v.order() != p.order() {
        return Err(AssemblyError::MismatchedOrders { velocity: v.order(), pressure: p.order() });
    }
    Ok(())
}

fn mixed_dofs(v: &FeSpace, p: &FeSpace, k: usize) -> (Vec<usize>, Vec<usize>) {
    let nv = v.dof_count();
    (v.cell_dofs(k), p.cell_dofs(k).into_iter().map(|d| nv + d).collect())
}

/// `(2 mu eps(u), eps(v)) - (p, div v) + (div u, q)`.
pub fn assemble_mixed_volume(
    vspace: &FeSpace,
    pspace: &FeSpace,
    params: &MaterialParams,
) -> Result<CsrMatrix, AssemblyError> {
    check_pair(vspace, pspace)?;
    let mu = params.mu;
    let mesh = vspace.mesh();
    let table = RefTable::new(vspace.order(), QuadratureDegrees::for_order(vspace.order()).matrix);
    let nl = vspace.local_count();
    let n = vspace.dof_count() + pspace.dof_count();
    Ok(assemble_matrix(n, n, mesh.triangles().len(), |k| {
        let cq = table.on_cell(mesh, k);
        let (vd, pd) = mixed_dofs(vspace, pspace, k);
        let all: Vec<usize> = vd.iter().chain(&pd).copied().collect();
        let mut lm = LocalMatrix::zeros(all.clone(), all);
        let np0 = 2 * nl;
        for (q, w) in cq.weights.iter().enumerate() {
            let (g, vals) = (&cq.grads[q], &cq.values[q]);
            for i in 0..nl {
                for j in 0..nl {
                    let gg = g[i][0] * g[j][0] + g[i][1] * g[j][1];
                    for c in 0..2 {
                        for d in 0..2 {
                            let mut v = mu * g[i][d] * g[j][c];
                            if c == d {
                                v += mu * gg;
                            }
                            lm.add(2 * i + c, 2 * j + d, w * v);
                        }
                        lm.add(2 * i + c, np0 + j, -w * vals[j] * g[i][c]);
                        lm.add(np0 + i, 2 * j + c, w * vals[i] * g[j][c]);
                    }
                }
            }
        }
        vec![lm]
    }))
}

/// Boundary form `b(u, v, p) = <(2 mu eps(u) - p I) n, v>` on `sides`, stored
/// with test rows `(v, q)` and trial columns `(u, p)`; pressure-test rows are
/// empty. The scheme uses `-B + B^T`.
pub fn assemble_mixed_nitsche_b(
    vspace: &FeSpace,
    pspace: &FeSpace,
    params: &MaterialParams,
    sides: &[SideId],
) -> Result<CsrMatrix, AssemblyError> {
    check_pair(vspace, pspace)?;
    let mesh = vspace.mesh();
    check_sides(mesh, sides)?;
    let mu = params.mu;
    let rule = EdgeRule::new(QuadratureDegrees::for_order(vspace.order()).boundary);
    let edges = edges_on(mesh, sides);
    let nl = vspace.local_count();
    let n = vspace.dof_count() + pspace.dof_count();
    Ok(assemble_matrix(n, n, edges.len(), |e| {
        let eq = EdgeQuad::new(mesh, edges[e], vspace.order(), &rule);
        let (vd, pd) = mixed_dofs(vspace, pspace, eq.triangle);
        let cols: Vec<usize> = vd.iter().chain(&pd).copied().collect();
        let mut lm = LocalMatrix::zeros(vd, cols);
        let nrm = eq.normal;
        for (q, w) in eq.weights.iter().enumerate() {
            let (vals, g) = (&eq.values[q], &eq.grads[q]);
            for i in 0..nl {
                for j in 0..nl {
                    let gn = g[j][0] * nrm[0] + g[j][1] * nrm[1];
                    for c in 0..2 {
                        for d in 0..2 {
                            let mut v = mu * g[j][c] * nrm[d];
                            if c == d {
                                v += mu * gn;
                            }
                            lm.add(2 * i + c, 2 * j + d, w * vals[i] * v);
                        }
                        lm.add(2 * i + c, 2 * nl + j, -w * vals[i] * vals[j] * nrm[c]);
                    }
                }
            }
        }
        vec![lm]
    }))
}

/// Squared stabilization length per element.
fn h_squared(vspace: &FeSpace, mode: StabilizationLength) -> Vec<f64> {
    let mesh = vspace.mesh();
    let global = mesh.quality().h_max;
    (0..mesh.triangles().len())
        .map(|k| match mode {
            StabilizationLength::Element => mesh.diameter(k).powi(2),
            StabilizationLength::Global => global * global,
        })
        .collect()
}

/// `(gamma/mu) sum_K h^2 int_K (-2 mu div eps(u) + grad p) . grad q`.
pub fn assemble_stabilization_s(
    vspace: &FeSpace,
    pspace: &FeSpace,
    params: &MaterialParams,
    h_mode: StabilizationLength,
) -> Result<CsrMatrix, AssemblyError> {
    check_pair(vspace, pspace)?;
    let (mu, gamma) = (params.mu, params.gamma);
    let mesh = vspace.mesh();
    let h2 = h_squared(vspace, h_mode);
    let table = RefTable::new(vspace.order(), QuadratureDegrees::for_order(vspace.order()).matrix);
    let nl = vspace.local_count();
    let n = vspace.dof_count() + pspace.dof_count();
    Ok(assemble_matrix(n, n, mesh.triangles().len(), |k| {
        let cq = table.on_cell(mesh, k);
        let (vd, pd) = mixed_dofs(vspace, pspace, k);
        let cols: Vec<usize> = vd.iter().chain(&pd).copied().collect();
        let mut lm = LocalMatrix::zeros(pd, cols);
        let s = gamma / mu * h2[k];
        let hs = &cq.hessians;
        for (q, w) in cq.weights.iter().enumerate() {
            let g = &cq.grads[q];
            for i in 0..nl {
                for j in 0..nl {
                    if vspace.order() > 1 {
                        let tr = hs[j][0][0] + hs[j][1][1];
                        for d in 0..2 {
                            let v = tr * g[i][d] + hs[j][0][d] * g[i][0] + hs[j][1][d] * g[i][1];
                            lm.add(i, 2 * j + d, -gamma * h2[k] * w * v);
                        }
                    }
                    lm.add(i, 2 * nl + j, s * w * (g[i][0] * g[j][0] + g[i][1] * g[j][1]));
                }
            }
        }
        vec![lm]
    }))
}

/// Pressure mass matrix embedded in the mixed index space.
fn pressure_mass(vspace: &FeSpace, pspace: &FeSpace, scale: f64) -> CsrMatrix {
    let mesh = vspace.mesh();
    let table = RefTable::new(vspace.order(), QuadratureDegrees::for_order(vspace.order()).matrix);
    let nl = vspace.local_count();
    let n = vspace.dof_count() + pspace.dof_count();
    assemble_matrix(n, n, mesh.triangles().len(), |k| {
        let cq = table.on_cell(mesh, k);
        let (_, pd) = mixed_dofs(vspace, pspace, k);
        let mut lm = LocalMatrix::zeros(pd.clone(), pd);
        for (q, w) in cq.weights.iter().enumerate() {
            for i in 0..nl {
                for j in 0..nl {
                    lm.add(i, j, scale * w * cq.values[q][i] * cq.values[q][j]);
                }
            }
        }
        vec![lm]
    })
}

/// `int N_i` for every pressure basis function.
pub(crate) fn pressure_integrals(pspace: &FeSpace) -> Vec<f64> {
    let mesh = pspace.mesh();
    let table = RefTable::new(pspace.order(), pspace.order());
    assemble_vector(pspace.dof_count(), mesh.triangles().len(), |k| {
        let cq = table.on_cell(mesh, k);
        let mut local = vec![0.0; pspace.local_count()];
        for (q, w) in cq.weights.iter().enumerate() {
            for (l, v) in local.iter_mut().zip(&cq.values[q]) {
                *l += w * v;
            }
        }
        pspace.cell_dofs(k).into_iter().zip(local).collect()
    })
}

/// Pressure-row data `(gamma/mu) sum_K h^2 (f, grad q)`.
fn stabilization_load(
    vspace: &FeSpace,
    pspace: &FeSpace,
    params: &MaterialParams,
    f: &dyn VectorField,
    h_mode: StabilizationLength,
) -> Vec<f64> {
    let mesh = vspace.mesh();
    let h2 = h_squared(vspace, h_mode);
    let table = RefTable::new(pspace.order(), QuadratureDegrees::for_order(pspace.order()).rhs);
    let nl = pspace.local_count();
    assemble_vector(pspace.dof_count(), mesh.triangles().len(), |k| {
        let cq = table.on_cell(mesh, k);
        let s = params.gamma / params.mu * h2[k];
        let mut local = vec![0.0; nl];
        for (q, w) in cq.weights.iter().enumerate() {
            let fv = f.value(cq.points[q]);
            for (i, l) in local.iter_mut().enumerate() {
                let g = cq.grads[q][i];
                *l += s * w * (fv[0] * g[0] + fv[1] * g[1]);
            }
        }
        pspace.cell_dofs(k).into_iter().zip(local).collect()
    })
}

/// Boundary data `b(v, g, q) = <2 mu eps(v) n, g> - <q, g.n>` on `sides`.
fn boundary_lift(
    vspace: &FeSpace,
    pspace: &FeSpace,
    params: &MaterialParams,
    g: &dyn VectorField,
    sides: &[SideId],
) -> Vec<f64> {
    let mesh = vspace.mesh();
    let rule = EdgeRule::new(QuadratureDegrees::for_order(vspace.order()).boundary_rhs);
    let edges = edges_on(mesh, sides);
    let nl = vspace.local_count();
    let mu = params.mu;
    let nv = vspace.dof_count();
    assemble_vector(nv + pspace.dof_count(), edges.len(), |e| {
        let eq = EdgeQuad::new(mesh, edges[e], vspace.order(), &rule);
        let (vd, pd) = mixed_dofs(vspace, pspace, eq.triangle);
        let mut local = vec![0.0; 3 * nl];
        let n = eq.normal;
        for (q, w) in eq.weights.iter().enumerate() {
            let gv = g.value(eq.points[q]);
            let gn = gv[0] * n[0] + gv[1] * n[1];
            for i in 0..nl {
                let gi = eq.grads[q][i];
                let gin = gi[0] * n[0] + gi[1] * n[1];
                let gig = gi[0] * gv[0] + gi[1] * gv[1];
                for c in 0..2 {
                    local[2 * i + c] += w * mu * (gv[c] * gin + gig * n[c]);
                }
                local[2 * nl + i] -= w * eq.values[q][i] * gn;
            }
        }
        vd.into_iter().chain(pd).zip(local).collect()
    })
}

/// Full stabilized system with Dirichlet velocity `g` on `dirichlet` sides.
pub fn assemble_incompressible_system(
    vspace: &FeSpace,
    pspace: &FeSpace,
    params: &MaterialParams,
    f: &dyn VectorField,
    g: &dyn VectorField,
    dirichlet: &[SideId],
    options: &MixedOptions,
) -> Result<MixedSystem, AssemblyError> {
    check_pair(vspace, pspace)?;
    check_sides(vspace.mesh(), dirichlet)?;
    if !(params.gamma > 0.0) {
        return Err(AssemblyError::InvalidParams(format!("gamma must be positive, got {}", params.gamma)));
    }
    if let Some(l) = options.nearly_lambda {
        if !(l > 0.0) {
            return Err(AssemblyError::InvalidParams(format!("nearly_lambda must be positive, got {l}")));
        }
    }
    let nv = vspace.dof_count();
    let np = pspace.dof_count();
    let n = nv + np;
    let mut matrix = assemble_mixed_volume(vspace, pspace, params)?.add_scaled(
        1.0,
        &assemble_stabilization_s(vspace, pspace, params, options.h_mode)?,
        1.0,
    );
    let deg = QuadratureDegrees::for_order(vspace.order());
    let mut rhs = body_load(vspace, f, deg.rhs);
    rhs.extend(stabilization_load(vspace, pspace, params, f, options.h_mode));
    if options.bc_mode == BcMode::Weak {
        let b = assemble_mixed_nitsche_b(vspace, pspace, params, dirichlet)?;
        matrix = matrix.add_scaled(1.0, &b.transpose().add_scaled(1.0, &b, -1.0), 1.0);
        let lift = boundary_lift(vspace, pspace, params, g, dirichlet);
        rhs.iter_mut().zip(&lift).for_each(|(r, l)| *r += l);
    }
    if let Some(l) = options.nearly_lambda {
        // Stress 2 mu eps - p I with p = -lambda div u, i.e. div u + p / lambda = 0.
        matrix = matrix.add_scaled(1.0, &pressure_mass(vspace, pspace, 1.0 / l), 1.0);
    }
    if options.mean_constraint {
        let m = pressure_integrals(pspace);
        let mut t = TripletBuilder::with_capacity(n + 1, n + 1, matrix.nnz() + 2 * np);
        for i in 0..n {
            let (cols, vals) = matrix.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                t.push(i, j, v);
            }
            if i >= nv {
                t.push(i, n, m[i - nv]);
            }
        }
        for (j, v) in m.iter().enumerate() {
            t.push(n, nv + j, *v);
        }
        matrix = t.build();
        rhs.push(0.0);
    }
    let system = match options.bc_mode {
        BcMode::Weak => AssembledSystem {
            constraint: ConstraintMeta {
                free: (0..n).collect(),
                prescribed: vec![0.0; n],
                multipliers: usize::from(options.mean_constraint),
            },
            matrix,
            rhs,
            dof_count: n,
        },
        BcMode::Strong => {
            let fixed: Vec<(usize, f64)> = vspace
                .side_nodes(dirichlet)
                .into_iter()
                .flat_map(|node| {
                    let v = g.value(vspace.node_coords()[node]);
                    [(vspace.dof(node, 0), v[0]), (vspace.dof(node, 1), v[1])]
                })
                .collect();
            eliminate(&matrix, &rhs, n, &fixed)
        }
    };
    Ok(MixedSystem { system, velocity_dofs: nv, pressure_dofs: np })
}
