use std::sync::Arc;

use nitsche_core::experiments::*;
use nitsche_core::fem_space::{DiscreteField, FeSpace};
use nitsche_core::forms::*;
use nitsche_core::mesh::build_unit_square_mesh;

fn small_config(problem: Problem) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(problem, 1);
    cfg.mesh_sizes = vec![2, 4, 8];
    cfg
}

fn csv_bytes(t: &ConvergenceTable) -> Vec<u8> {
    let mut out = Vec::new();
    t.write_csv(&mut out).unwrap();
    out
}

#[test]
fn csv_is_identical_for_parallel_and_sequential_sweeps() {
    for problem in [Problem::Compressible, Problem::Incompressible, Problem::Cook] {
        let mut cfg = small_config(problem);
        let a = csv_bytes(&run_experiment(&cfg).unwrap());
        cfg.deterministic = true;
        let b = csv_bytes(&run_experiment(&cfg).unwrap());
        assert_eq!(a, b, "{problem:?}");
    }
}

#[test]
fn csv_round_trip_and_header() {
    let t = run_experiment(&small_config(Problem::Compressible)).unwrap();
    let bytes = csv_bytes(&t);
    let text = String::from_utf8(bytes.clone()).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
    let rows = read_csv_rows(bytes.as_slice()).unwrap();
    assert_eq!(rows, t.csv_rows());
    assert!(rows[0].err_p_l2.is_none() && rows[0].qoi.is_none());
    assert!(rows[0].slope_h1.is_none() && rows[1].slope_h1.is_some());
}

#[test]
fn written_file_matches_in_memory_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let t = run_experiment(&small_config(Problem::Cook)).unwrap();
    t.write_csv(std::fs::File::create(&path).unwrap()).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), csv_bytes(&t));
    let rows = read_csv_rows(std::fs::File::open(&path).unwrap()).unwrap();
    assert!(rows.iter().all(|r| r.problem == "cook" && r.qoi.is_some()));
}

fn golden_series() -> (Vec<PlotSeries>, AxesSpec) {
    let series = vec![
        PlotSeries { label: "L2".into(), points: vec![(0.5, 0.1), (0.25, 0.025), (0.125, 0.00625)] },
        PlotSeries { label: "H1".into(), points: vec![(0.5, 0.4), (0.25, 0.2), (0.125, 0.1)] },
    ];
    let axes = AxesSpec {
        title: "golden".into(),
        x_label: "h_max".into(),
        y_label: "error".into(),
        reference_slopes: vec![1.0, 2.0],
    };
    (series, axes)
}

#[test]
fn svg_matches_golden_file() {
    let (series, axes) = golden_series();
    let svg = emit_plot(&series, &axes).unwrap();
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/golden_plot.svg");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(path, &svg).unwrap();
    }
    let expected = std::fs::read_to_string(path).unwrap();
    assert_eq!(svg, expected);
}

#[test]
fn nearly_incompressible_agrees_with_compressible_at_moderate_lambda() {
    // Both discretise the same elasticity problem; their difference must
    // shrink with h at least as fast as the displacement error.
    let p = MaterialParams::new(1.0, 10.0).unwrap();
    let m = manufactured_compressible(&p);
    let mut prev: Option<f64> = None;
    for n in [4, 8, 16] {
        let c = solve_manufactured_compressible(n, 2, &p, BcMode::Weak).unwrap();
        let x = solve_manufactured_mixed(n, 2, &p, BcMode::Weak, StabilizationLength::Element, Some(p.lambda)).unwrap();
        let diff: Vec<f64> = c.velocity.iter().zip(&x.velocity).map(|(a, b)| a - b).collect();
        let space = FeSpace::new(Arc::new(build_unit_square_mesh(n).unwrap()), 2, 2).unwrap();
        let d = DiscreteField::new(&space, diff).unwrap();
        let zero = nitsche_core::fem_space::ZERO_VECTOR;
        let dn = nitsche_core::diagnostics::error_norms(&d, &zero, None, &p).unwrap().h1_semi_error;
        let uc = DiscreteField::new(&c.velocity_space, c.velocity.clone()).unwrap();
        let e = nitsche_core::diagnostics::error_norms(&uc, &m.exact, None, &p).unwrap().h1_semi_error;
        assert!(dn < 2.0 * e, "n={n}: difference {dn:.3e} vs error {e:.3e}");
        if let Some(q) = prev {
            assert!(dn < 0.5 * q, "n={n}: {dn:.3e} after {q:.3e}");
        }
        prev = Some(dn);
    }
}
