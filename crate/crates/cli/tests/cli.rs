use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nitsche(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nitsche")).args(args).current_dir(cwd).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("cfg.toml");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

const SMALL: &str = r#"
problem = "compressible"
order = 1
mesh_sizes = [2, 4, 8]

[output]
csv = "r.csv"
plot = "r.svg"
"#;

#[test]
fn mesh_dump_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    for shape in ["square", "cook"] {
        let a = nitsche(&["mesh", "--shape", shape, "--n", "3"], dir.path());
        assert!(a.status.success());
        let b = nitsche(&["mesh", "--shape", shape, "--n", "3", "--out", "m.txt"], dir.path());
        assert!(b.status.success());
        assert_eq!(a.stdout, fs::read(dir.path().join("m.txt")).unwrap());
        let mesh = nitsche_core::mesh::Mesh::from_text(std::str::from_utf8(&a.stdout).unwrap()).unwrap();
        assert_eq!(mesh.triangles().len(), 18);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = nitsche(&["run", "--config", &cfg, "--out", "a"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = nitsche(&["run", "--config", &cfg, "--out", "b", "--deterministic", "--threads", "1"], dir.path());
    assert!(o.status.success());
    for f in ["r.csv", "r.svg"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        assert_eq!(a, fs::read(dir.path().join("b").join(f)).unwrap(), "{f}");
    }
    let csv = fs::read_to_string(dir.path().join("a/r.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = nitsche(&["run", "--config", &cfg, "--out", ".", "--sizes", "2,3", "--order", "2", "--bc-mode", "strong"], dir.path());
    assert!(o.status.success());
    let rows = nitsche_core::experiments::read_csv_rows(fs::File::open(dir.path().join("r.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.k == 2 && r.bc_mode == "strong"));
}

#[test]
fn check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let pass = write_config(dir.path(), &format!("{SMALL}\n[check]\nslope_l2 = [1.0, 3.0]\n"));
    assert_eq!(nitsche(&["run", "--config", &pass, "--out", ".", "--check"], dir.path()).status.code(), Some(0));
    let fail = write_config(dir.path(), &format!("{SMALL}\n[check]\nslope_l2 = [5.0, 6.0]\n"));
    let o = nitsche(&["run", "--config", &fail, "--out", ".", "--check"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stdout).contains("VIOLATED"));
    // Without --check the thresholds are not enforced.
    assert_eq!(nitsche(&["run", "--config", &fail, "--out", "."], dir.path()).status.code(), Some(0));
}

#[test]
fn bad_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "problem = \"compressible\"\norder = 7\n");
    let o = nitsche(&["run", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("order"));
    let o = nitsche(&["run", "--config", "missing.toml"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn diagnose_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "problem = \"compressible\"\nmesh_sizes = [2, 4]\n[output]\ncsv = \"d.csv\"\n");
    let o = nitsche(&["diagnose", "--config", &cfg, "--out", ".", "--korn"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = nitsche_core::experiments::read_csv_rows(fs::File::open(dir.path().join("d.csv")).unwrap()).unwrap();
    assert!(rows.iter().all(|r| r.beta_h.unwrap() > 0.0 && r.korn_h.unwrap() > 0.0));
    let o = nitsche(&["plot", "--csv", "d.csv", "--out", "d.svg", "--columns", "beta_h,korn_h"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::read_to_string(dir.path().join("d.svg")).unwrap().starts_with("<svg"));
    let o = nitsche(&["plot", "--csv", "d.csv", "--out", "e.svg", "--columns", "nope"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solver_failure_exit_code() {
    // The dense diagnostics refuse systems above their size cap.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "problem = \"compressible\"\nmesh_sizes = [120]\n");
    let o = nitsche(&["diagnose", "--config", &cfg, "--out", "."], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}
