//! Sweep drivers. Meshes of a sweep are solved concurrently and the rows are
//! gathered in mesh-size order.

use std::sync::Arc;

use rayon::prelude::*;

use super::config::{ExperimentConfig, Formulation, Problem};
use super::manufactured::{manufactured_compressible, manufactured_incompressible, VolumetricPressure};
use super::table::{ConvergenceTable, TableRow};
use super::ExperimentError;
use crate::diagnostics::{compressible_stability, error_norms_with_degree, incompressible_stability, StabilityReport};
use crate::fem_space::{ConstantVector, DiscreteField, FeSpace, ZERO_VECTOR};
use crate::forms::{
    assemble_incompressible_system, assemble_neumann_load, assemble_strong_system, assemble_weak_system, BcMode,
    MaterialParams, MixedOptions, StabilizationLength,
};
use crate::linear_solve::{SolveReport, DENSE_CAP};
use crate::mesh::{build_cook_mesh, build_unit_square_mesh, COOK_A};

/// Traction applied on side AB of Cook's membrane.
pub const COOK_TRACTION: [f64; 2] = [0.0, 100.0];

/// Coefficients of a solved displacement (and pressure) problem.
#[derive(Debug, Clone)]
pub struct Solution {
    pub velocity_space: FeSpace,
    pub velocity: Vec<f64>,
    pub pressure: Option<(FeSpace, Vec<f64>)>,
    pub report: SolveReport,
}

impl Solution {
    pub fn dofs(&self) -> usize {
        self.velocity.len() + self.pressure.as_ref().map_or(0, |p| p.1.len())
    }
}

fn solve_err(n: usize) -> impl Fn(crate::linear_solve::SolveError) -> ExperimentError {
    move |source| ExperimentError::Solve { n, source }
}

/// Polynomial manufactured problem on the `n x n` unit square mesh.
pub fn solve_manufactured_compressible(
    n: usize,
    order: usize,
    params: &MaterialParams,
    bc_mode: BcMode,
) -> Result<Solution, ExperimentError> {
    let mesh = Arc::new(build_unit_square_mesh(n)?);
    let space = FeSpace::new(mesh.clone(), order, 2)?;
    let m = manufactured_compressible(params);
    let sides = mesh.all_sides();
    let sys = match bc_mode {
        BcMode::Weak => assemble_weak_system(&space, params, &m.forcing, &m.boundary, &sides)?,
        BcMode::Strong => assemble_strong_system(&space, params, &m.forcing, &m.boundary, &sides)?,
    };
    let (velocity, report) = sys.solve().map_err(solve_err(n))?;
    Ok(Solution { velocity_space: space, velocity, pressure: None, report })
}

/// Vortex manufactured problem (`nearly = None`) or the polynomial problem in
/// mixed form with the given `lambda`.
pub fn solve_manufactured_mixed(
    n: usize,
    order: usize,
    params: &MaterialParams,
    bc_mode: BcMode,
    h_mode: StabilizationLength,
    nearly: Option<f64>,
) -> Result<Solution, ExperimentError> {
    let mesh = Arc::new(build_unit_square_mesh(n)?);
    let vspace = FeSpace::new(mesh.clone(), order, 2)?;
    let pspace = FeSpace::new(mesh.clone(), order, 1)?;
    let sides = mesh.all_sides();
    let opts = MixedOptions { bc_mode, nearly_lambda: nearly, mean_constraint: nearly.is_none(), h_mode };
    let sys = match nearly {
        None => {
            let m = manufactured_incompressible(params.mu);
            assemble_incompressible_system(&vspace, &pspace, params, &m.forcing, &m.boundary, &sides, &opts)?
        }
        Some(lambda) => {
            let m = manufactured_compressible(&MaterialParams { lambda, ..*params });
            assemble_incompressible_system(&vspace, &pspace, params, &m.forcing, &m.boundary, &sides, &opts)?
        }
    };
    let (velocity, pressure, report) = sys.solve().map_err(solve_err(n))?;
    Ok(Solution { velocity_space: vspace, velocity, pressure: Some((pspace, pressure)), report })
}

/// Cook's membrane: clamped on CD, traction on AB. Returns the solution and
/// the vertical displacement at A.
pub fn solve_cook(
    n: usize,
    order: usize,
    params: &MaterialParams,
    bc_mode: BcMode,
    formulation: Formulation,
    h_mode: StabilizationLength,
) -> Result<(Solution, f64), ExperimentError> {
    let mesh = Arc::new(build_cook_mesh(n)?);
    let vspace = FeSpace::new(mesh.clone(), order, 2)?;
    let clamped = [mesh.side_id("CD")?];
    let loaded = mesh.side_id("AB")?;
    let load = assemble_neumann_load(&vspace, loaded, &ConstantVector(COOK_TRACTION), 2 * order)?;
    let tip = mesh.nearest_vertex(COOK_A);
    let sol = match formulation {
        Formulation::Compressible => {
            let mut sys = match bc_mode {
                BcMode::Weak => assemble_weak_system(&vspace, params, &ZERO_VECTOR, &ZERO_VECTOR, &clamped)?,
                BcMode::Strong => assemble_strong_system(&vspace, params, &ZERO_VECTOR, &ZERO_VECTOR, &clamped)?,
            };
            for (r, &i) in sys.constraint.free.iter().enumerate() {
                sys.rhs[r] += load[i];
            }
            let (velocity, report) = sys.solve().map_err(solve_err(n))?;
            Solution { velocity_space: vspace, velocity, pressure: None, report }
        }
        Formulation::NearlyIncompressible => {
            let pspace = FeSpace::new(mesh.clone(), order, 1)?;
            let opts = MixedOptions { bc_mode, nearly_lambda: Some(params.lambda), mean_constraint: false, h_mode };
            let mut sys =
                assemble_incompressible_system(&vspace, &pspace, params, &ZERO_VECTOR, &ZERO_VECTOR, &clamped, &opts)?;
            for (r, &i) in sys.system.constraint.free.iter().enumerate() {
                if i < load.len() {
                    sys.system.rhs[r] += load[i];
                }
            }
            let (velocity, pressure, report) = sys.solve().map_err(solve_err(n))?;
            Solution { velocity_space: vspace, velocity, pressure: Some((pspace, pressure)), report }
        }
    };
    let qoi = sol.velocity[sol.velocity_space.dof(tip, 1)];
    Ok((sol, qoi))
}

fn row_from(n: usize, sol: &Solution) -> TableRow {
    TableRow {
        n,
        h_max: sol.velocity_space.mesh().quality().h_max,
        dofs: sol.dofs(),
        ..TableRow::default()
    }
}

fn sweep<F>(cfg: &ExperimentConfig, per_mesh: F) -> Result<Vec<TableRow>, ExperimentError>
where
    F: Fn(usize) -> Result<TableRow, ExperimentError> + Sync,
{
    let sizes = cfg.sizes();
    let rows: Vec<Result<TableRow, ExperimentError>> = if cfg.deterministic {
        sizes.iter().map(|&n| per_mesh(n)).collect()
    } else {
        sizes.par_iter().map(|&n| per_mesh(n)).collect()
    };
    rows.into_iter().collect()
}

fn stability_for(cfg: &ExperimentConfig, n: usize, params: &MaterialParams) -> Result<StabilityReport, ExperimentError> {
    let mesh = Arc::new(build_unit_square_mesh(n)?);
    let vspace = FeSpace::new(mesh.clone(), cfg.order, 2)?;
    let korn = cfg.diagnostics.korn;
    let report = match cfg.problem {
        Problem::Incompressible => {
            let pspace = FeSpace::new(mesh, cfg.order, 1)?;
            incompressible_stability(&vspace, &pspace, params, cfg.params.stabilization_length, korn)?
        }
        _ => compressible_stability(&vspace, params, &mesh.all_sides(), korn)?,
    };
    Ok(report)
}

/// Error table of a manufactured problem over the configured mesh sizes.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceTable, ExperimentError> {
    cfg.validate()?;
    let params = cfg.material()?;
    let h_mode = cfg.params.stabilization_length;
    let rows = sweep(cfg, |n| {
        let (sol, errors) = match cfg.problem {
            Problem::Compressible => {
                let sol = solve_manufactured_compressible(n, cfg.order, &params, cfg.bc_mode)?;
                let u_h = DiscreteField::new(&sol.velocity_space, sol.velocity.clone())?;
                let m = manufactured_compressible(&params);
                let e = error_norms_with_degree(&u_h, &m.exact, None, &params, cfg.quadrature.error)?;
                (sol, e)
            }
            Problem::Incompressible => {
                let sol = solve_manufactured_mixed(n, cfg.order, &params, cfg.bc_mode, h_mode, None)?;
                let (ps, pc) = sol.pressure.as_ref().expect("mixed solve has a pressure");
                let u_h = DiscreteField::new(&sol.velocity_space, sol.velocity.clone())?;
                let p_h = DiscreteField::new(ps, pc.clone())?;
                let m = manufactured_incompressible(params.mu);
                let e = error_norms_with_degree(&u_h, &m.velocity, Some((&p_h, &m.pressure)), &params, cfg.quadrature.error)?;
                (sol, e)
            }
            Problem::NearlyIncompressible => {
                let sol = solve_manufactured_mixed(n, cfg.order, &params, cfg.bc_mode, h_mode, Some(params.lambda))?;
                let (ps, pc) = sol.pressure.as_ref().expect("mixed solve has a pressure");
                let u_h = DiscreteField::new(&sol.velocity_space, sol.velocity.clone())?;
                let p_h = DiscreteField::new(ps, pc.clone())?;
                let m = manufactured_compressible(&params);
                let p = VolumetricPressure { exact: m.exact, lambda: params.lambda };
                let e = error_norms_with_degree(&u_h, &m.exact, Some((&p_h, &p)), &params, cfg.quadrature.error)?;
                (sol, e)
            }
            Problem::Cook => return Err(ExperimentError::Config("use run_cook for Cook's membrane".into())),
        };
        let mut row = row_from(n, &sol);
        row.errors = Some(errors);
        if cfg.diagnostics.enabled && row.dofs <= DENSE_CAP {
            row.stability = Some(stability_for(cfg, n, &params)?);
        }
        Ok(row)
    })?;
    Ok(ConvergenceTable::new(cfg.problem.as_str(), cfg.order, cfg.bc_mode, rows))
}

/// Tip displacement series on Cook's membrane.
pub fn run_cook(cfg: &ExperimentConfig) -> Result<ConvergenceTable, ExperimentError> {
    cfg.validate()?;
    let params = cfg.material()?;
    let rows = sweep(cfg, |n| {
        let (sol, qoi) = solve_cook(n, cfg.order, &params, cfg.bc_mode, cfg.formulation, cfg.params.stabilization_length)?;
        let mut row = row_from(n, &sol);
        row.qoi = Some(qoi);
        Ok(row)
    })?;
    let label = match cfg.formulation {
        Formulation::Compressible => "cook",
        Formulation::NearlyIncompressible => "cook_nearly_incompressible",
    };
    Ok(ConvergenceTable::new(label, cfg.order, cfg.bc_mode, rows))
}

/// Inf-sup (and optionally Korn) constants on the unit square over the mesh sizes.
pub fn run_stability_diagnostics(cfg: &ExperimentConfig) -> Result<ConvergenceTable, ExperimentError> {
    cfg.validate()?;
    let params = cfg.material()?;
    if cfg.problem == Problem::Cook {
        return Err(ExperimentError::Config("stability diagnostics run on the unit square".into()));
    }
    let rows = sweep(cfg, |n| {
        let s = stability_for(cfg, n, &params)?;
        Ok(TableRow { n, h_max: s.h_max, dofs: s.dofs, stability: Some(s), ..TableRow::default() })
    })?;
    Ok(ConvergenceTable::new(cfg.problem.as_str(), cfg.order, cfg.bc_mode, rows))
}

/// Dispatches on the configured problem.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ConvergenceTable, ExperimentError> {
    match cfg.problem {
        Problem::Cook => run_cook(cfg),
        _ => run_convergence(cfg),
    }
}
