//! Drivers for the numerical studies: manufactured convergence sweeps,
//! Cook's membrane and stability diagnostics, with CSV and SVG output.

pub mod config;
pub mod manufactured;
pub mod plot;
pub mod run;
pub mod table;

use thiserror::Error;

use crate::diagnostics::DiagnosticsError;
use crate::fem_space::SpaceError;
use crate::forms::AssemblyError;
use crate::linear_solve::SolveError;
use crate::mesh::MeshError;

pub use config::{CheckConfig, ExperimentConfig, Formulation, Problem};
pub use manufactured::{manufactured_compressible, manufactured_incompressible};
pub use plot::{emit_plot, series_from_rows, AxesSpec, PlotSeries};
pub use run::{
    run_convergence, run_cook, run_experiment, run_stability_diagnostics, solve_cook, solve_manufactured_compressible,
    solve_manufactured_mixed, Solution,
};
pub use table::{observed_rate, read_csv_rows, write_csv_rows, CheckOutcome, ConvergenceTable, CsvRow, TableRow, CSV_HEADER};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("solver failed on the n={n} mesh: {source}")]
    Solve {
        n: usize,
        #[source]
        source: SolveError,
    },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("plot: {0}")]
    Plot(String),
}

impl ExperimentError {
    /// True when a linear solve or dense decomposition failed.
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, ExperimentError::Solve { .. } | ExperimentError::Diagnostics(DiagnosticsError::Solve(_)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solver_failures_are_classified() {
        let singular = || SolveError::Singular { step: 0, column: 0 };
        assert!(ExperimentError::Solve { n: 4, source: singular() }.is_solver_failure());
        assert!(ExperimentError::Diagnostics(DiagnosticsError::Solve(singular())).is_solver_failure());
        assert!(!ExperimentError::Config("x".into()).is_solver_failure());
        assert!(!ExperimentError::Plot("x".into()).is_solver_failure());
    }
}
