use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use nitsche_core::experiments::{
    emit_plot, read_csv_rows, run_experiment, run_stability_diagnostics, series_from_rows, AxesSpec, ConvergenceTable,
    ExperimentConfig, ExperimentError, Problem,
};
use nitsche_core::forms::BcMode;
use nitsche_core::mesh::{build_cook_mesh, build_unit_square_mesh};

const EXIT_SOLVER: u8 = 2;
const EXIT_CHECK: u8 = 3;

#[derive(Parser)]
#[command(name = "nitsche", version, about = "Penalty-free Nitsche finite elements for elasticity")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    Square,
    Cook,
}

#[derive(clap::Args)]
struct Overrides {
    /// Write outputs here instead of the config's `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run the mesh sweep in order on one thread.
    #[arg(long)]
    deterministic: bool,
    #[arg(long)]
    order: Option<usize>,
    /// Comma separated subdivisions, e.g. 8,16,32.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    bc_mode: Option<Bc>,
    /// Exit with status 3 if a `[check]` threshold is violated.
    #[arg(long)]
    check: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Bc {
    Weak,
    Strong,
}

#[derive(Subcommand)]
enum Command {
    /// Write a mesh in the plain-text dump format.
    Mesh {
        #[arg(long, value_enum)]
        shape: Shape,
        #[arg(long)]
        n: usize,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the experiment described by a config file and write a CSV table.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Inf-sup and Korn constants over the configured mesh sizes.
    Diagnose {
        #[arg(long)]
        config: PathBuf,
        /// Also compute the discrete Korn constant.
        #[arg(long)]
        korn: bool,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Log-log SVG plot of columns of a results CSV against h_max.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "err_l2,err_h1")]
        columns: Vec<String>,
        /// Reference slopes drawn as triangles.
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        slopes: Vec<f64>,
        #[arg(long, default_value = "Error versus mesh size")]
        title: String,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let solver = e.chain().any(|c| c.downcast_ref::<ExperimentError>().is_some_and(|x| x.is_solver_failure()));
            if solver {
                ExitCode::from(EXIT_SOLVER)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Mesh { shape, n, out } => {
            let mesh = match shape {
                Shape::Square => build_unit_square_mesh(n)?,
                Shape::Cook => build_cook_mesh(n)?,
            };
            emit(out.as_deref(), mesh.to_text().as_bytes())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { config, opts } => {
            let cfg = load(&config, &opts)?;
            info!("running {} with k={} on sizes {:?}", cfg.problem.as_str(), cfg.order, cfg.sizes());
            let table = run_experiment(&cfg)?;
            finish(&cfg, &table, &opts)
        }
        Command::Diagnose { config, korn, opts } => {
            let mut cfg = load(&config, &opts)?;
            cfg.diagnostics.korn |= korn;
            let table = run_stability_diagnostics(&cfg)?;
            finish(&cfg, &table, &opts)
        }
        Command::Plot { csv, out, columns, slopes, title } => {
            let file = fs::File::open(&csv).with_context(|| format!("opening {}", csv.display()))?;
            let rows = read_csv_rows(file)?;
            let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
            let series = series_from_rows(&rows, &cols)?;
            let axes = AxesSpec { title, x_label: "h_max".into(), y_label: "error".into(), reference_slopes: slopes };
            emit(Some(&out), emit_plot(&series, &axes)?.as_bytes())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn load(path: &Path, opts: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path).with_context(|| format!("reading {}", path.display()))?;
    if opts.deterministic {
        cfg.deterministic = true;
    }
    if let Some(k) = opts.order {
        cfg.order = k;
    }
    if let Some(s) = &opts.sizes {
        cfg.mesh_sizes = s.clone();
    }
    if let Some(bc) = opts.bc_mode {
        cfg.bc_mode = match bc {
            Bc::Weak => BcMode::Weak,
            Bc::Strong => BcMode::Strong,
        };
    }
    if let Some(dir) = &opts.out {
        cfg.output.dir = Some(dir.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn finish(cfg: &ExperimentConfig, table: &ConvergenceTable, opts: &Overrides) -> Result<ExitCode> {
    let dir = cfg.output.dir.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut csv = Vec::new();
    table.write_csv(&mut csv)?;
    let csv_path = dir.join(&cfg.output.csv);
    emit(Some(&csv_path), &csv)?;
    println!("wrote {}", csv_path.display());

    if let Some(name) = &cfg.output.plot {
        let columns: &[&str] = match cfg.problem {
            Problem::Cook => &["qoi"],
            _ if table.rows.iter().all(|r| r.errors.is_none()) => &["beta_h", "korn_h"],
            _ => &["err_l2", "err_h1", "err_p_l2"],
        };
        let series = series_from_rows(&table.csv_rows(), columns)?;
        let k = cfg.order as f64;
        let axes = AxesSpec {
            title: format!("{} k={} {}", table.problem, cfg.order, cfg.bc_mode.as_str()),
            x_label: "h_max".into(),
            y_label: columns.join(", "),
            reference_slopes: vec![k, k + 1.0],
        };
        let path = dir.join(name);
        emit(Some(&path), emit_plot(&series, &axes)?.as_bytes())?;
        println!("wrote {}", path.display());
    }

    if !opts.check {
        return Ok(ExitCode::SUCCESS);
    }
    let Some(check) = &cfg.check else {
        bail!("--check given but the config has no [check] section");
    };
    let mut ok = true;
    for c in table.check(check) {
        let value = c.value.map_or("n/a".to_string(), |v| format!("{v:.4}"));
        println!("check {} = {value}: {}", c.name, if c.passed { "ok" } else { "VIOLATED" });
        ok &= c.passed;
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(EXIT_CHECK) })
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => std::io::stdout().write_all(bytes).context("writing to stdout"),
    }
}
