use nalgebra::DMatrix;

use super::DiagnosticsError;
use crate::fem_space::{DiscreteField, EdgeRule, FeSpace, VectorField, ZERO_VECTOR};
use crate::forms::element::{assemble_matrix, assemble_vector, edges_on, EdgeQuad, LocalMatrix, RefTable};
use crate::forms::{
    assemble_incompressible_system, assemble_weak_system, traction, AssemblyError, MaterialParams, MixedOptions,
    QuadratureDegrees, StabilizationLength,
};
use crate::linear_solve::{
    dense_smallest_generalized_singular_value, smallest_generalized_eigenvalue, smallest_generalized_singular_value,
    CsrMatrix, TripletBuilder,
};
use crate::mesh::SideId;

use super::norms::ERROR_QUADRATURE_DEGREE;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct StabilityReport {
    pub beta_h: f64,
    pub korn_const_h: Option<f64>,
    pub h_max: f64,
    pub dofs: usize,
    pub mu: f64,
    pub lambda: f64,
    pub gamma: f64,
}

/// `min_u max_v v^T A u / (||u||_N ||v||_N)` for an SPD Gram matrix `N`.
pub fn discrete_infsup_constant(matrix: &CsrMatrix, gram: &CsrMatrix) -> Result<f64, DiagnosticsError> {
    Ok(smallest_generalized_singular_value(matrix, gram)?)
}

/// Integrand weights of the vector Gram matrices below.
#[derive(Clone, Copy)]
struct VectorForm {
    grad: f64,
    sym: f64,
    div: f64,
    mass: f64,
}

/// `int grad. w_grad + eps:eps w_sym + div div w_div + u.v w_mass`.
fn vector_volume(space: &FeSpace, form: VectorForm) -> CsrMatrix {
    let mesh = space.mesh();
    let table = RefTable::new(space.order(), QuadratureDegrees::for_order(space.order()).matrix);
    let nl = space.local_count();
    let n = space.dof_count();
    assemble_matrix(n, n, mesh.triangles().len(), |k| {
        let cq = table.on_cell(mesh, k);
        let dofs = space.cell_dofs(k);
        let mut lm = LocalMatrix::zeros(dofs.clone(), dofs);
        for (q, w) in cq.weights.iter().enumerate() {
            let (g, v) = (&cq.grads[q], &cq.values[q]);
            for i in 0..nl {
                for j in 0..nl {
                    let gg = g[i][0] * g[j][0] + g[i][1] * g[j][1];
                    for c in 0..2 {
                        for d in 0..2 {
                            let mut val = form.sym * 0.5 * g[i][d] * g[j][c] + form.div * g[i][c] * g[j][d];
                            if c == d {
                                val += (form.grad + form.sym * 0.5) * gg + form.mass * v[i] * v[j];
                            }
                            lm.add(2 * i + c, 2 * j + d, w * val);
                        }
                    }
                }
            }
        }
        vec![lm]
    })
}

/// `int_bd h^-1 (w_val u.v + w_normal (u.n)(v.n))` over the whole boundary.
fn vector_boundary(space: &FeSpace, w_val: f64, w_normal: f64) -> CsrMatrix {
    let mesh = space.mesh();
    let rule = EdgeRule::new(QuadratureDegrees::for_order(space.order()).boundary);
    let edges = edges_on(mesh, &mesh.all_sides());
    let nl = space.local_count();
    let n = space.dof_count();
    assemble_matrix(n, n, edges.len(), |e| {
        let eq = EdgeQuad::new(mesh, edges[e], space.order(), &rule);
        let dofs = space.cell_dofs(eq.triangle);
        let mut lm = LocalMatrix::zeros(dofs.clone(), dofs);
        let nr = eq.normal;
        for (q, w) in eq.weights.iter().enumerate() {
            let v = &eq.values[q];
            for i in 0..nl {
                for j in 0..nl {
                    for c in 0..2 {
                        for d in 0..2 {
                            let mut val = w_normal * nr[c] * nr[d];
                            if c == d {
                                val += w_val;
                            }
                            lm.add(2 * i + c, 2 * j + d, w * v[i] * v[j] * val / eq.h);
                        }
                    }
                }
            }
        }
        vec![lm]
    })
}

/// Gram matrix of the compressible energy norm.
pub fn triple_norm_gram_compressible(space: &FeSpace, params: &MaterialParams) -> CsrMatrix {
    let (mu, lambda) = (params.mu, params.lambda);
    let vol = vector_volume(space, VectorForm { grad: mu, sym: 0.0, div: lambda, mass: 0.0 });
    vol.add_scaled(1.0, &vector_boundary(space, mu, lambda), 1.0)
}

/// Gram matrix of the incompressible energy norm over `[velocity, pressure]`.
pub fn triple_norm_gram_incompressible(
    vspace: &FeSpace,
    pspace: &FeSpace,
    params: &MaterialParams,
    h_mode: StabilizationLength,
) -> CsrMatrix {
    let mu = params.mu;
    let nv = vspace.dof_count();
    let n = nv + pspace.dof_count();
    let vel = triple_norm_gram_compressible(vspace, &MaterialParams { lambda: 0.0, ..*params });
    let mesh = pspace.mesh();
    let h_max = mesh.quality().h_max;
    let table = RefTable::new(pspace.order(), QuadratureDegrees::for_order(pspace.order()).matrix);
    let nl = pspace.local_count();
    let pres = assemble_matrix(n, n, mesh.triangles().len(), |k| {
        let cq = table.on_cell(mesh, k);
        let dofs: Vec<usize> = pspace.cell_dofs(k).into_iter().map(|d| nv + d).collect();
        let h = match h_mode {
            StabilizationLength::Element => cq.map.h,
            StabilizationLength::Global => h_max,
        };
        let mut lm = LocalMatrix::zeros(dofs.clone(), dofs);
        for (q, w) in cq.weights.iter().enumerate() {
            let g = &cq.grads[q];
            for i in 0..nl {
                for j in 0..nl {
                    lm.add(i, j, w * h * h / mu * (g[i][0] * g[j][0] + g[i][1] * g[j][1]));
                }
            }
        }
        vec![lm]
    });
    let mut t = TripletBuilder::with_capacity(n, n, vel.nnz() + pres.nnz());
    for i in 0..nv {
        let (cols, vals) = vel.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            t.push(i, j, v);
        }
    }
    let mut out = t.build();
    out = out.add_scaled(1.0, &pres, 1.0);
    out
}

/// `(E, Gamma, H1)` Gram matrices: `||eps(u)||^2`, `|u|_Gamma^2` and `||u||_{H1}^2`.
pub fn korn_grams(space: &FeSpace) -> Result<(CsrMatrix, CsrMatrix, CsrMatrix), AssemblyError> {
    if space.components() != 2 {
        return Err(AssemblyError::WrongComponents { expected: 2, got: space.components() });
    }
    let eps = vector_volume(space, VectorForm { grad: 0.0, sym: 1.0, div: 0.0, mass: 0.0 });
    let h1 = vector_volume(space, VectorForm { grad: 1.0, sym: 0.0, div: 0.0, mass: 1.0 });
    let mesh = space.mesh();
    let n = space.dof_count();
    let rule = EdgeRule::new(space.order());
    let mut t = TripletBuilder::new(n, n);
    for s in mesh.all_sides() {
        let len = mesh.side(s).length();
        let edges = edges_on(mesh, &[s]);
        // Side integrals of every basis function, per component.
        let m = assemble_vector(n, edges.len(), |e| {
            let eq = EdgeQuad::new(mesh, edges[e], space.order(), &rule);
            let dofs = space.cell_dofs(eq.triangle);
            let mut out = Vec::with_capacity(dofs.len());
            for (i, pair) in dofs.chunks(2).enumerate() {
                let v: f64 = eq.weights.iter().zip(&eq.values).map(|(w, vals)| w * vals[i]).sum();
                out.push((pair[0], v));
                out.push((pair[1], v));
            }
            out
        });
        let support: Vec<usize> = (0..n).filter(|&i| m[i] != 0.0).collect();
        for &i in &support {
            for &j in &support {
                if i % 2 == j % 2 {
                    t.push(i, j, m[i] * m[j] / len);
                }
            }
        }
    }
    Ok((eps, t.build(), h1))
}

/// `C_K,h = min_u sqrt((||eps(u)||^2 + |u|_Gamma^2) / ||u||_{H1}^2)`.
pub fn discrete_korn_constant(space: &FeSpace) -> Result<f64, DiagnosticsError> {
    let (eps, gamma, h1) = korn_grams(space)?;
    let lhs = eps.add_scaled(1.0, &gamma, 1.0);
    Ok(smallest_generalized_eigenvalue(&lhs, &h1)?.max(0.0).sqrt())
}

/// Inf-sup constant of the compressible weak system in the energy norm,
/// optionally with the discrete Korn constant.
pub fn compressible_stability(
    space: &FeSpace,
    params: &MaterialParams,
    dirichlet: &[SideId],
    with_korn: bool,
) -> Result<StabilityReport, DiagnosticsError> {
    let sys = assemble_weak_system(space, params, &ZERO_VECTOR, &ZERO_VECTOR, dirichlet)?;
    let gram = triple_norm_gram_compressible(space, params);
    let beta_h = discrete_infsup_constant(&sys.matrix, &gram)?;
    let korn_const_h = if with_korn { Some(discrete_korn_constant(space)?) } else { None };
    Ok(StabilityReport {
        beta_h,
        korn_const_h,
        h_max: space.mesh().quality().h_max,
        dofs: space.dof_count(),
        mu: params.mu,
        lambda: params.lambda,
        gamma: params.gamma,
    })
}

/// Inf-sup constant of the weak stabilized system on zero-mean pressures.
pub fn incompressible_stability(
    vspace: &FeSpace,
    pspace: &FeSpace,
    params: &MaterialParams,
    h_mode: StabilizationLength,
    with_korn: bool,
) -> Result<StabilityReport, DiagnosticsError> {
    let opts = MixedOptions { mean_constraint: false, h_mode, ..Default::default() };
    let dirichlet = vspace.mesh().all_sides();
    let sys = assemble_incompressible_system(vspace, pspace, params, &ZERO_VECTOR, &ZERO_VECTOR, &dirichlet, &opts)?;
    let gram = triple_norm_gram_incompressible(vspace, pspace, params, h_mode);
    let a = sys.system.matrix.to_dense_checked().map_err(DiagnosticsError::Solve)?;
    let g = gram.to_dense_checked().map_err(DiagnosticsError::Solve)?;
    let means = crate::forms::incompressible::pressure_integrals(pspace);
    let t = zero_mean_basis(vspace.dof_count(), &means);
    let beta_h = dense_smallest_generalized_singular_value(&(t.transpose() * &a * &t), &(t.transpose() * &g * &t))?;
    let korn_const_h = if with_korn { Some(discrete_korn_constant(vspace)?) } else { None };
    Ok(StabilityReport {
        beta_h,
        korn_const_h,
        h_max: vspace.mesh().quality().h_max,
        dofs: vspace.dof_count() + pspace.dof_count() - 1,
        mu: params.mu,
        lambda: params.lambda,
        gamma: params.gamma,
    })
}

/// Basis of `{(u, p): sum_j m_j p_j = 0}`: the last pressure coefficient is
/// eliminated.
fn zero_mean_basis(nv: usize, means: &[f64]) -> DMatrix<f64> {
    let np = means.len();
    let n = nv + np;
    let last = n - 1;
    let mut t = DMatrix::zeros(n, n - 1);
    for j in 0..n - 1 {
        t[(j, j)] = 1.0;
        if j >= nv {
            t[(last, j)] = -means[j - nv] / means[np - 1];
        }
    }
    t
}

/// `A_h(u, phi_i)` for an exact displacement with derivatives, by high-order quadrature.
fn exact_action(
    space: &FeSpace,
    params: &MaterialParams,
    exact: &dyn VectorField,
    dirichlet: &[SideId],
) -> Result<Vec<f64>, DiagnosticsError> {
    let mesh = space.mesh();
    let (mu, lambda) = (params.mu, params.lambda);
    let grad_of = |x| exact.gradient(x).ok_or(DiagnosticsError::MissingDerivative("displacement"));
    grad_of(mesh.vertices()[0])?;
    let nl = space.local_count();
    let table = RefTable::new(space.order(), ERROR_QUADRATURE_DEGREE);
    let mut out = assemble_vector(space.dof_count(), mesh.triangles().len(), |k| {
        let cq = table.on_cell(mesh, k);
        let mut local = vec![0.0; 2 * nl];
        for (q, w) in cq.weights.iter().enumerate() {
            let gu = exact.gradient(cq.points[q]).unwrap_or_default();
            let div = gu[0][0] + gu[1][1];
            let sigma = |c: usize, d: usize| {
                mu * (gu[c][d] + gu[d][c]) + if c == d { lambda * div } else { 0.0 }
            };
            for i in 0..nl {
                let g = cq.grads[q][i];
                for c in 0..2 {
                    local[2 * i + c] += w * (sigma(c, 0) * g[0] + sigma(c, 1) * g[1]);
                }
            }
        }
        space.cell_dofs(k).into_iter().zip(local).collect()
    });
    let rule = EdgeRule::new(ERROR_QUADRATURE_DEGREE);
    let edges = edges_on(mesh, dirichlet);
    let bnd = assemble_vector(space.dof_count(), edges.len(), |e| {
        let eq = EdgeQuad::new(mesh, edges[e], space.order(), &rule);
        let mut local = vec![0.0; 2 * nl];
        for (q, w) in eq.weights.iter().enumerate() {
            let x = eq.points[q];
            let u = exact.value(x);
            let su = traction(&exact.gradient(x).unwrap_or_default(), eq.normal, mu, lambda);
            for i in 0..nl {
                for c in 0..2 {
                    let mut gi = [[0.0; 2]; 2];
                    gi[c] = eq.grads[q][i];
                    let sv = traction(&gi, eq.normal, mu, lambda);
                    // -b(u, v) + b(v, u)
                    local[2 * i + c] += w * (-su[c] * eq.values[q][i] + sv[0] * u[0] + sv[1] * u[1]);
                }
            }
        }
        space.cell_dofs(eq.triangle).into_iter().zip(local).collect()
    });
    out.iter_mut().zip(&bnd).for_each(|(o, b)| *o += b);
    Ok(out)
}

/// `max_i |A_h(u - u_h, phi_i)| / ||row_i(A_h)||` for the compressible weak system.
pub fn galerkin_orthogonality_residual(
    u_h: &DiscreteField,
    params: &MaterialParams,
    exact: &dyn VectorField,
    dirichlet: &[SideId],
) -> Result<f64, DiagnosticsError> {
    let space = u_h.space();
    let sys = assemble_weak_system(space, params, &ZERO_VECTOR, &ZERO_VECTOR, dirichlet)?;
    let au = exact_action(space, params, exact, dirichlet)?;
    let ah = sys.matrix.mul_vec(u_h.coefficients());
    Ok((0..au.len())
        .map(|i| {
            let scale = sys.matrix.row_norm(i);
            if scale == 0.0 {
                0.0
            } else {
                (au[i] - ah[i]).abs() / scale
            }
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::fem_space::{interpolate_vector, VectorFn};
    use crate::forms::assemble_strong_system;
    use crate::linear_solve::dense_smallest_generalized_singular_value;
    use crate::mesh::build_unit_square_mesh;

    fn square(n: usize) -> Arc<crate::mesh::Mesh> {
        Arc::new(build_unit_square_mesh(n).unwrap())
    }

    #[test]
    fn coercive_toy_gives_unit_constant() {
        let mesh = square(4);
        let s = FeSpace::new(mesh.clone(), 1, 2).unwrap();
        let p = MaterialParams::new(1.0, 1.0).unwrap();
        let sys = assemble_strong_system(&s, &p, &ZERO_VECTOR, &ZERO_VECTOR, &mesh.all_sides()).unwrap();
        let beta = discrete_infsup_constant(&sys.matrix, &sys.matrix).unwrap();
        assert!((beta - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rotation_rayleigh_quotient() {
        let s = FeSpace::new(square(3), 1, 2).unwrap();
        let (eps, gamma, h1) = korn_grams(&s).unwrap();
        let r = interpolate_vector(&s, &VectorFn::new(|x| [x[1], -x[0]])).into_coefficients();
        assert!(eps.bilinear(&r, &r).abs() < 1e-13);
        assert!((gamma.bilinear(&r, &r) - 3.0).abs() < 1e-13);
        // ||(y,-x)||^2_{H1} = 2/3 + 2.
        assert!((h1.bilinear(&r, &r) - 8.0 / 3.0).abs() < 1e-13);
        let c = discrete_korn_constant(&s).unwrap();
        assert!(c > 0.0 && c * c <= 3.0 / (8.0 / 3.0) + 1e-12);
    }

    #[test]
    fn compressible_beta_orders_with_lambda() {
        let s = FeSpace::new(square(4), 1, 2).unwrap();
        let all = s.mesh().all_sides();
        let b1 = compressible_stability(&s, &MaterialParams::new(1.0, 1.0).unwrap(), &all, false).unwrap();
        let b2 = compressible_stability(&s, &MaterialParams::new(1.0, 1e3).unwrap(), &all, false).unwrap();
        assert!(b1.beta_h > 0.0 && b2.beta_h < b1.beta_h);
    }

    #[test]
    fn incompressible_beta_positive() {
        let mesh = square(2);
        let v = FeSpace::new(mesh.clone(), 1, 2).unwrap();
        let p = FeSpace::new(mesh, 1, 1).unwrap();
        let r = incompressible_stability(&v, &p, &MaterialParams::with_gamma(1.0, 0.0, 0.1).unwrap(), StabilizationLength::Element, true)
            .unwrap();
        assert!(r.beta_h > 0.0 && r.korn_const_h.unwrap() > 0.0);
    }

    #[test]
    fn zero_mean_basis_spans_constraint() {
        let t = zero_mean_basis(2, &[1.0, 2.0, 4.0]);
        let m = DMatrix::from_row_slice(1, 5, &[0.0, 0.0, 1.0, 2.0, 4.0]);
        assert!((m * &t).amax() < 1e-15);
        let a = DMatrix::<f64>::identity(5, 5);
        assert!(dense_smallest_generalized_singular_value(&(t.transpose() * &a * &t), &(t.transpose() * &t)).unwrap() > 0.99);
    }

    #[test]
    fn weak_matrix_matches_exact_action_on_quadratics() {
        // For fields inside the P2 space the matrix and the quadrature of the
        // continuous form must agree.
        let mesh = square(3);
        let s = FeSpace::new(mesh.clone(), 2, 2).unwrap();
        let p = MaterialParams::new(1.7, 2.9).unwrap();
        let u = VectorFn::with_gradient(
            |x: [f64; 2]| [x[0] * x[1] - x[1] * x[1], 0.5 * x[0] * x[0] + x[1]],
            |x: [f64; 2]| [[x[1], x[0] - 2.0 * x[1]], [x[0], 1.0]],
        );
        let sides = [mesh.side_id("left").unwrap(), mesh.side_id("top").unwrap()];
        let sys = assemble_weak_system(&s, &p, &ZERO_VECTOR, &ZERO_VECTOR, &sides).unwrap();
        let ui = interpolate_vector(&s, &u).into_coefficients();
        let mu = sys.matrix.mul_vec(&ui);
        let ex = exact_action(&s, &p, &u, &sides).unwrap();
        let err = mu.iter().zip(&ex).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn orthogonality_residual_discriminates() {
        let mesh = square(3);
        let s = FeSpace::new(mesh.clone(), 2, 2).unwrap();
        let p = MaterialParams::new(1.0, 1.0).unwrap();
        let zero = DiscreteField::zeros(&s);
        let exact0 = VectorFn::with_gradient(|_| [0.0, 0.0], |_| [[0.0; 2]; 2]);
        assert_eq!(galerkin_orthogonality_residual(&zero, &p, &exact0, &mesh.all_sides()).unwrap(), 0.0);
    }
}
