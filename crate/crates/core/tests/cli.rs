use std::fs;
use std::path::Path;
use std::process::Command;

use stefan_relax::output::read_table;
use stefan_relax::run::SWEEP_HEADER;

fn stefan_relax(mode: &str, config: &str, dir: &Path, extra: &[&str]) -> i32 {
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, config).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_stefan-relax"))
        .arg(mode)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .status()
        .unwrap();
    status.code().unwrap()
}

#[test]
fn sweep_writes_monotone_table() {
    let dir = tempfile::tempdir().unwrap();
    let code = stefan_relax("sweep", "scenario = melting_bar\neps_list = 0.2, 0.1, 0.05, 0.025\n", dir.path(), &[]);
    assert_eq!(code, 0);
    let table = read_table(&dir.path().join("out/sweep.csv")).unwrap();
    assert_eq!(table.header, SWEEP_HEADER.to_vec());
    assert_eq!(table.rows.len(), 4);
    let err = table.column("err_theta_L2Q").unwrap();
    assert!(err.windows(2).all(|w| w[1] < w[0]), "{err:?}");
    assert!(table.column("wall_ms").unwrap().iter().all(|&t| t == 0.0));
}

#[test]
fn stefan_run_on_equilibrium_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(stefan_relax("run-stefan", "scenario = mushy_plateau\n", dir.path(), &[]), 0);
    let theta = read_table(&dir.path().join("out/theta.csv")).unwrap();
    let chi = read_table(&dir.path().join("out/chi.csv")).unwrap();
    assert_eq!(theta.header, vec!["t", "node_0", "node_1"]);
    assert_eq!(chi.rows.len(), 101);
    for (t, c) in theta.rows.iter().zip(&chi.rows) {
        assert_eq!(&t[1..], &[0.0, 0.0]);
        assert_eq!(&c[1..], &[0.5, 0.5]);
    }
    let res = read_table(&dir.path().join("out/residual.csv")).unwrap();
    assert!(res.column("energy_residual").unwrap().iter().all(|&r| r == 0.0));
}

#[test]
fn zero_perturbation_gives_zero_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let code = stefan_relax("contdep", "scenario = ode_decay\neps = 0.1\ndelta = 0, 1e-3\n", dir.path(), &[]);
    assert_eq!(code, 0);
    let t = read_table(&dir.path().join("out/contdep.csv")).unwrap();
    assert_eq!(t.rows[0], vec![0.0, 0.0, 0.0, 0.0]);
    assert!(t.rows[1][3] > 0.0);
}

#[test]
fn flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let code = stefan_relax(
        "run-relaxed",
        "scenario = melting_bar\neps = 0.5\n",
        dir.path(),
        &["--eps", "0.1", "--dt", "0.01", "--nodes", "21"],
    );
    assert_eq!(code, 0);
    let theta = read_table(&dir.path().join("out/theta.csv")).unwrap();
    assert_eq!(theta.rows.len(), 51);
    assert_eq!(theta.header.len(), 22);
    let est = read_table(&dir.path().join("out/estimates.csv")).unwrap();
    assert_eq!(est.rows[0][0], 0.1);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // validation
    assert_eq!(stefan_relax("run-relaxed", "scenario = ode_decay\neps = 1.5\n", dir.path(), &[]), 1);
    assert_eq!(stefan_relax("compare", "scenario = ode_decay\n", dir.path(), &[]), 1);
    // solver failure: one Picard iteration cannot converge
    let code = stefan_relax(
        "run-relaxed",
        "scenario = ode_decay\neps = 0.1\ninner_max = 1\ndt_policy = fixed\n",
        dir.path(),
        &[],
    );
    assert_eq!(code, 2);
    assert!(dir.path().join("out/diagnostics.txt").exists());
    // invariant: the theta norm of the linear decay grows past 1.5x as eps shrinks
    let code = stefan_relax("check-estimates", "scenario = ode_decay\neps_list = 0.5, 0.01\n", dir.path(), &[]);
    assert_eq!(code, 3);
    let diag = fs::read_to_string(dir.path().join("out/diagnostics.txt")).unwrap();
    assert!(diag.contains("norm_theta_L2Q"), "{diag}");
}
