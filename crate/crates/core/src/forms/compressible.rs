//! Compressible linear elasticity with weakly imposed Dirichlet data.
//!
//! `A_h(u,v) = a(u,v) - b(u,v) + b(v,u)` and `L_h(v) = (f,v) + b(v,g)` where
//! `b(u,v) = <sigma(u) n, v>` on the Dirichlet sides. There is no penalty.

use super::element::{assemble_matrix, assemble_vector, check_sides, edges_on, EdgeQuad, LocalMatrix, RefTable};
use super::{eliminate, traction, AssembledSystem, AssemblyError, ConstraintMeta, MaterialParams, QuadratureDegrees};
use crate::fem_space::{EdgeRule, FeSpace, VectorField};
use crate::linear_solve::CsrMatrix;
use crate::mesh::SideId;

fn require_vector(space: &FeSpace) -> Result<(), AssemblyError> {
    if space.components() != 2 {
        return Err(AssemblyError::WrongComponents {
            expected: 2,
            got: space.components(),
        });
    }
    Ok(())
}

/// Volume form `(2 mu eps(u), eps(v)) + (lambda div u, div v)`.
pub fn assemble_volume_a(space: &FeSpace, params: &MaterialParams) -> Result<CsrMatrix, AssemblyError> {
    require_vector(space)?;
    let (mu, lambda) = (params.mu, params.lambda);
    let table = RefTable::new(space.order(), QuadratureDegrees::for_order(space.order()).matrix);
    let mesh = space.mesh();
    let nl = space.local_count();
    let n = space.dof_count();
    Ok(assemble_matrix(n, n, mesh.triangles().len(), |k| {
        let cq = table.on_cell(mesh, k);
        let dofs = space.cell_dofs(k);
        let mut lm = LocalMatrix::zeros(dofs.clone(), dofs);
        for (q, w) in cq.weights.iter().enumerate() {
            let g = &cq.grads[q];
            for i in 0..nl {
                for j in 0..nl {
                    let gg = g[i][0] * g[j][0] + g[i][1] * g[j][1];
                    for c in 0..2 {
                        for d in 0..2 {
                            let mut v = mu * g[i][d] * g[j][c] + lambda * g[i][c] * g[j][d];
                            if c == d {
                                v += mu * gg;
                            }
                            lm.add(2 * i + c, 2 * j + d, w * v);
                        }
                    }
                }
            }
        }
        vec![lm]
    }))
}

/// Boundary form `b(u,v) = <2 mu eps(u) n, v> + <lambda div u, v.n>` on `sides`,
/// stored as `B[test][trial]`.
pub fn assemble_nitsche_b(
    space: &FeSpace,
    params: &MaterialParams,
    sides: &[SideId],
) -> Result<CsrMatrix, AssemblyError> {
    require_vector(space)?;
    let mesh = space.mesh();
    check_sides(mesh, sides)?;
    let (mu, lambda) = (params.mu, params.lambda);
    let rule = EdgeRule::new(QuadratureDegrees::for_order(space.order()).boundary);
    let edges = edges_on(mesh, sides);
    let nl = space.local_count();
    let n = space.dof_count();
    Ok(assemble_matrix(n, n, edges.len(), |e| {
        let eq = EdgeQuad::new(mesh, edges[e], space.order(), &rule);
        let dofs = space.cell_dofs(eq.triangle);
        let nrm = eq.normal;
        let mut lm = LocalMatrix::zeros(dofs.clone(), dofs);
        for (q, w) in eq.weights.iter().enumerate() {
            let (vals, g) = (&eq.values[q], &eq.grads[q]);
            for i in 0..nl {
                for j in 0..nl {
                    let gn = g[j][0] * nrm[0] + g[j][1] * nrm[1];
                    for c in 0..2 {
                        for d in 0..2 {
                            let mut v = mu * g[j][c] * nrm[d] + lambda * g[j][d] * nrm[c];
                            if c == d {
                                v += mu * gn;
                            }
                            lm.add(2 * i + c, 2 * j + d, w * vals[i] * v);
                        }
                    }
                }
            }
        }
        vec![lm]
    }))
}

/// `(f, phi_i)` for every vector basis function.
pub(crate) fn body_load(space: &FeSpace, f: &dyn VectorField, degree: usize) -> Vec<f64> {
    let table = RefTable::new(space.order(), degree);
    let mesh = space.mesh();
    let nl = space.local_count();
    assemble_vector(space.dof_count(), mesh.triangles().len(), |k| {
        let cq = table.on_cell(mesh, k);
        let dofs = space.cell_dofs(k);
        let mut local = vec![0.0; 2 * nl];
        for (q, w) in cq.weights.iter().enumerate() {
            let fv = f.value(cq.points[q]);
            for i in 0..nl {
                local[2 * i] += w * fv[0] * cq.values[q][i];
                local[2 * i + 1] += w * fv[1] * cq.values[q][i];
            }
        }
        dofs.into_iter().zip(local).collect()
    })
}

/// `b(phi_i, g) = <sigma(phi_i) n, g>` on `sides`.
fn boundary_lift(space: &FeSpace, params: &MaterialParams, g: &dyn VectorField, sides: &[SideId], degree: usize) -> Vec<f64> {
    let mesh = space.mesh();
    let rule = EdgeRule::new(degree);
    let edges = edges_on(mesh, sides);
    let nl = space.local_count();
    assemble_vector(space.dof_count(), edges.len(), |e| {
        let eq = EdgeQuad::new(mesh, edges[e], space.order(), &rule);
        let dofs = space.cell_dofs(eq.triangle);
        let mut local = vec![0.0; 2 * nl];
        for (q, w) in eq.weights.iter().enumerate() {
            let gv = g.value(eq.points[q]);
            for i in 0..nl {
                let gi = eq.grads[q][i];
                for c in 0..2 {
                    let mut grad = [[0.0; 2]; 2];
                    grad[c] = gi;
                    let t = traction(&grad, eq.normal, params.mu, params.lambda);
                    local[2 * i + c] += w * (t[0] * gv[0] + t[1] * gv[1]);
                }
            }
        }
        dofs.into_iter().zip(local).collect()
    })
}

/// Penalty-free nonsymmetric Nitsche system with Dirichlet data `g` on
/// `dirichlet` sides. No unknowns are eliminated.
pub fn assemble_weak_system(
    space: &FeSpace,
    params: &MaterialParams,
    f: &dyn VectorField,
    g: &dyn VectorField,
    dirichlet: &[SideId],
) -> Result<AssembledSystem, AssemblyError> {
    let a = assemble_volume_a(space, params)?;
    let b = assemble_nitsche_b(space, params, dirichlet)?;
    let matrix = a.add_scaled(1.0, &b.add_scaled(-1.0, &b.transpose(), 1.0), 1.0);
    let deg = QuadratureDegrees::for_order(space.order());
    let mut rhs = body_load(space, f, deg.rhs);
    let lift = boundary_lift(space, params, g, dirichlet, deg.boundary_rhs);
    rhs.iter_mut().zip(&lift).for_each(|(r, l)| *r += l);
    let n = space.dof_count();
    Ok(AssembledSystem {
        matrix,
        rhs,
        dof_count: n,
        constraint: ConstraintMeta::unconstrained(n),
    })
}

/// Volume form with Dirichlet DOFs on `dirichlet` sides fixed to nodal values of `g`.
pub fn assemble_strong_system(
    space: &FeSpace,
    params: &MaterialParams,
    f: &dyn VectorField,
    g: &dyn VectorField,
    dirichlet: &[SideId],
) -> Result<AssembledSystem, AssemblyError> {
    check_sides(space.mesh(), dirichlet)?;
    let a = assemble_volume_a(space, params)?;
    let rhs = body_load(space, f, QuadratureDegrees::for_order(space.order()).rhs);
    let fixed: Vec<(usize, f64)> = space
        .side_nodes(dirichlet)
        .into_iter()
        .flat_map(|node| {
            let v = g.value(space.node_coords()[node]);
            [(space.dof(node, 0), v[0]), (space.dof(node, 1), v[1])]
        })
        .collect();
    Ok(eliminate(&a, &rhs, space.dof_count(), &fixed))
}

/// `int_side t . phi_i ds` for a prescribed traction `t`.
pub fn assemble_neumann_load(
    space: &FeSpace,
    side: SideId,
    t: &dyn VectorField,
    degree: usize,
) -> Result<Vec<f64>, AssemblyError> {
    require_vector(space)?;
    let mesh = space.mesh();
    check_sides(mesh, &[side])?;
    let rule = EdgeRule::new(degree);
    let edges = edges_on(mesh, &[side]);
    let nl = space.local_count();
    Ok(assemble_vector(space.dof_count(), edges.len(), |e| {
        let eq = EdgeQuad::new(mesh, edges[e], space.order(), &rule);
        let dofs = space.cell_dofs(eq.triangle);
        let mut local = vec![0.0; 2 * nl];
        for (q, w) in eq.weights.iter().enumerate() {
            let tv = t.value(eq.points[q]);
            for i in 0..nl {
                local[2 * i] += w * tv[0] * eq.values[q][i];
                local[2 * i + 1] += w * tv[1] * eq.values[q][i];
            }
        }
        dofs.into_iter().zip(local).collect()
    }))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::fem_space::{interpolate_vector, ConstantVector, VectorFn, ZERO_VECTOR};
    use crate::mesh::{build_cook_mesh, build_unit_square_mesh, reference_triangle_mesh, Mesh};

    fn reference_triangle() -> Arc<Mesh> {
        Arc::new(reference_triangle_mesh())
    }

    fn coeffs(space: &FeSpace, f: impl Fn([f64; 2]) -> [f64; 2] + Sync) -> Vec<f64> {
        interpolate_vector(space, &VectorFn::new(f)).into_coefficients()
    }

    fn unit() -> MaterialParams {
        MaterialParams::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn volume_energy_of_constant_strain() {
        let mesh = reference_triangle();
        for k in [1, 2] {
            let s = FeSpace::new(mesh.clone(), k, 2).unwrap();
            let a = assemble_volume_a(&s, &unit()).unwrap();
            let u = coeffs(&s, |x| [x[0], 0.0]);
            assert!((a.bilinear(&u, &u) - 1.5).abs() < 1e-13);
            let rot = coeffs(&s, |x| [x[1], -x[0]]);
            assert!(a.bilinear(&rot, &rot).abs() < 1e-13);
            let tr = coeffs(&s, |_| [1.0, 0.0]);
            assert!(a.bilinear(&tr, &tr).abs() < 1e-13);
        }
    }

    #[test]
    fn scalar_space_rejected() {
        let s = FeSpace::new(Arc::new(build_unit_square_mesh(2).unwrap()), 1, 1).unwrap();
        assert!(matches!(
            assemble_volume_a(&s, &unit()),
            Err(AssemblyError::WrongComponents { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn boundary_form_examples() {
        let mesh = Arc::new(build_unit_square_mesh(3).unwrap());
        let s = FeSpace::new(mesh.clone(), 1, 2).unwrap();
        let u = coeffs(&s, |x| [x[0], 0.0]);
        let v = coeffs(&s, |_| [1.0, 0.0]);
        let right = assemble_nitsche_b(&s, &unit(), &[mesh.side_id("right").unwrap()]).unwrap();
        assert!((right.bilinear(&v, &u) - 3.0).abs() < 1e-12);
        let bottom = assemble_nitsche_b(&s, &unit(), &[mesh.side_id("bottom").unwrap()]).unwrap();
        assert!(bottom.bilinear(&v, &u).abs() < 1e-12);
        let all = assemble_nitsche_b(&s, &unit(), &mesh.all_sides()).unwrap();
        let c = coeffs(&s, |_| [0.3, -2.0]);
        assert!(all.mul_vec(&c).iter().all(|x| x.abs() < 1e-12));
        assert!(assemble_nitsche_b(&s, &unit(), &[SideId(9)]).is_err());
    }

    #[test]
    fn weak_matrix_minus_volume_is_antisymmetric() {
        let mesh = Arc::new(build_unit_square_mesh(4).unwrap());
        let s = FeSpace::new(mesh.clone(), 2, 2).unwrap();
        let p = MaterialParams::new(2.0, 5.0).unwrap();
        let sys = assemble_weak_system(&s, &p, &ZERO_VECTOR, &ZERO_VECTOR, &mesh.all_sides()).unwrap();
        let a = assemble_volume_a(&s, &p).unwrap();
        let d = sys.matrix.add_scaled(1.0, &a, -1.0).to_dense();
        assert!((&d + d.transpose()).amax() < 1e-12);
        let (x, _) = sys.solve().unwrap();
        assert!(x.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn volume_matrix_has_three_rigid_modes() {
        let mesh = Arc::new(build_unit_square_mesh(3).unwrap());
        let s = FeSpace::new(mesh, 1, 2).unwrap();
        let a = assemble_volume_a(&s, &unit()).unwrap().to_dense();
        let mut ev: Vec<f64> = a.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let top = ev[ev.len() - 1];
        assert!(ev[..3].iter().all(|e| e.abs() <= 1e-10 * top));
        assert!(ev[3] > 1e-6 * top);
    }

    #[test]
    fn patch_test_weak_and_strong() {
        let mesh = Arc::new(build_unit_square_mesh(4).unwrap());
        let lin = |x: [f64; 2]| [0.1 + 2.0 * x[0] - 0.5 * x[1], -0.3 + 0.7 * x[0] + 1.2 * x[1]];
        let g = VectorFn::new(lin);
        let p = MaterialParams::new(1.3, 7.0).unwrap();
        for k in [1, 2] {
            let s = FeSpace::new(mesh.clone(), k, 2).unwrap();
            let exact = coeffs(&s, lin);
            for sys in [
                assemble_weak_system(&s, &p, &ZERO_VECTOR, &g, &mesh.all_sides()).unwrap(),
                assemble_strong_system(&s, &p, &ZERO_VECTOR, &g, &mesh.all_sides()).unwrap(),
            ] {
                let (x, _) = sys.solve().unwrap();
                let err = x.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(err < 1e-10, "k={k} err={err}");
            }
        }
    }

    #[test]
    fn cook_traction_total() {
        let mesh = Arc::new(build_cook_mesh(4).unwrap());
        let s = FeSpace::new(mesh.clone(), 2, 2).unwrap();
        let ab = mesh.side_id("AB").unwrap();
        let load = assemble_neumann_load(&s, ab, &ConstantVector([0.0, 100.0]), 4).unwrap();
        let ey = coeffs(&s, |_| [0.0, 1.0]);
        let ex = coeffs(&s, |_| [1.0, 0.0]);
        let dot = |a: &[f64]| load.iter().zip(a).map(|(x, y)| x * y).sum::<f64>();
        assert!((dot(&ey) - 1600.0).abs() < 1e-9);
        assert!(dot(&ex).abs() < 1e-12);
        let zero = assemble_neumann_load(&s, ab, &ZERO_VECTOR, 4).unwrap();
        assert!(zero.iter().all(|v| *v == 0.0));
    }
}
