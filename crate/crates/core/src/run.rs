//! Mode dispatch and result files for the command-line driver.

use std::fs;
use std::path::{Path, PathBuf};

use log::{error, info};

use crate::analysis::{
    continuous_dependence_check, eps_sweep, equilibrated, estimate_report, estimate_uniformity, hat, SweepConfig,
    SweepResult,
};
use crate::config::{ExperimentConfig, Mode};
use crate::error::{Error, Result};
use crate::mesh::assemble;
use crate::output::{field_table, write_table, Table};
use crate::relaxed::solve_relaxed_with;
use crate::scenarios::Scenario;
use crate::stefan::{bdf_residual, solve_stefan_with};

/// Bound on `sup|chi_eps| / (M + eta)` slack used by the estimate check.
pub const MAX_PRINCIPLE_TOL: f64 = 1e-9;
/// Allowed growth of the bounded quantities over the sweep.
pub const UNIFORMITY_FACTOR: f64 = 1.5;

pub const SWEEP_HEADER: [&str; 11] = [
    "eps",
    "err_theta_L2Q",
    "err_chihat_L2Q",
    "norm_theta_L2Q",
    "norm_thetahat_LinfV",
    "sqrt_eps_norm_theta_L2V",
    "norm_chi_LinfQ",
    "eps_norm_chiprime_L2Q",
    "eta",
    "iters_max",
    "wall_ms",
];

pub const ESTIMATE_HEADER: [&str; 7] = [
    "eps",
    "norm_theta_L2Q",
    "norm_thetahat_LinfV",
    "sqrt_eps_norm_theta_L2V",
    "norm_chi_LinfQ",
    "eps_norm_chiprime_L2Q",
    "eta",
];

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Convergence { .. } | Error::Singular(_) | Error::NonMaximal { .. } => 2,
        Error::Invariant(_) => 3,
        _ => 1,
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    /// Postcondition failures that did not abort the run.
    pub violations: Vec<String>,
    /// Per-row solver failures of a sweep.
    pub failures: Vec<String>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if !self.failures.is_empty() {
            2
        } else if !self.violations.is_empty() {
            3
        } else {
            0
        }
    }
}

struct Writer {
    dir: PathBuf,
    report: RunReport,
}

impl Writer {
    fn write(&mut self, name: &str, table: &Table) -> Result<()> {
        let path = self.dir.join(name);
        write_table(&path, table)?;
        info!("wrote {}", path.display());
        self.report.files.push(path);
        Ok(())
    }
}

/// Runs the configured mode; writes `diagnostics.txt` into the output
/// directory when the run fails or a postcondition is violated.
pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    fs::create_dir_all(&config.out)?;
    let outcome = run_mode(config);
    let diag = config.out.join("diagnostics.txt");
    match &outcome {
        Ok(report) if report.exit_code() == 0 => {
            if diag.exists() {
                fs::remove_file(&diag)?;
            }
        }
        Ok(report) => {
            let mut text = String::new();
            for line in report.failures.iter().chain(&report.violations) {
                text.push_str(line);
                text.push('\n');
            }
            fs::write(&diag, text)?;
        }
        Err(e) => {
            error!("{e}");
            fs::write(&diag, format!("{e}\n"))?;
        }
    }
    outcome
}

fn run_mode(config: &ExperimentConfig) -> Result<RunReport> {
    let mode = config.mode()?;
    let scenario = config.scenario.build()?;
    let mut w = Writer {
        dir: config.out.clone(),
        report: RunReport::default(),
    };
    match mode {
        Mode::RunRelaxed => run_relaxed(config, &scenario, &mut w)?,
        Mode::RunStefan => run_stefan(config, &scenario, &mut w)?,
        Mode::Sweep => {
            let sweep = sweep(config, &scenario)?;
            w.write("sweep.csv", &sweep_table(&sweep))?;
            collect_failures(&sweep, &mut w.report);
        }
        Mode::CheckEstimates => check_estimates(config, &scenario, &mut w)?,
        Mode::Compare => compare(config, &scenario, &mut w)?,
        Mode::Contdep => contdep(config, &scenario, &mut w)?,
    }
    Ok(w.report)
}

fn eps_of(config: &ExperimentConfig) -> Result<f64> {
    config.eps.ok_or_else(|| Error::Validation("this mode needs `eps`".into()))
}

fn run_relaxed(config: &ExperimentConfig, s: &Scenario, w: &mut Writer) -> Result<()> {
    let eps = eps_of(config)?;
    let ops = assemble(&s.mesh);
    let traj = solve_relaxed_with(&ops, &s.data, &config.relaxed(eps)?)?;
    w.write("theta.csv", &field_table(&traj.times, &traj.theta))?;
    w.write("chi.csv", &field_table(&traj.times, &traj.chi))?;
    let est = estimate_report(&ops, &traj, &s.data, eps, &s.params.name.to_string())?;
    let mut t = Table::new(ESTIMATE_HEADER);
    t.push(estimate_row(&est));
    w.write("estimates.csv", &t)?;
    w.report.violations.extend(traj.warnings);
    Ok(())
}

fn run_stefan(config: &ExperimentConfig, s: &Scenario, w: &mut Writer) -> Result<()> {
    let ops = assemble(&s.mesh);
    let data = equilibrated(&ops, &s.data)?;
    if data.theta0 != s.data.theta0 || data.chi0 != s.data.chi0 {
        info!("initial phase moved onto the constraint set at fixed enthalpy");
    }
    let traj = solve_stefan_with(&ops, &data, &config.stefan)?;
    w.write("theta.csv", &field_table(&traj.times, &traj.theta))?;
    w.write("chi.csv", &field_table(&traj.times, &traj.chi))?;
    let res = bdf_residual(&ops, &traj, &data)?;
    let mut t = Table::new(["step", "t", "energy_residual", "constraint_residual"]);
    for (n, (e, c)) in res.energy.iter().zip(&res.constraint).enumerate() {
        t.push(vec![n as f64, traj.times[n], *e, *c]);
    }
    w.write("residual.csv", &t)?;
    let limit = 10.0 * config.stefan.tol * (1.0 + data.t_final);
    if res.max_energy() > limit {
        w.report
            .violations
            .push(format!("time-integrated residual {:.3e} exceeds {limit:.1e}", res.max_energy()));
    }
    Ok(())
}

fn sweep(config: &ExperimentConfig, s: &Scenario) -> Result<SweepResult> {
    let ops = assemble(&s.mesh);
    let first = *config
        .eps_list
        .first()
        .ok_or_else(|| Error::Validation("eps_list is empty".into()))?;
    let cfg = SweepConfig {
        relaxed: config.relaxed(first)?,
        stefan: config.stefan.clone(),
        record_timing: config.record_timing,
    };
    eps_sweep(&ops, &s.params.name.to_string(), &s.data, |_| s.data.clone(), &config.eps_list, &cfg)
}

fn collect_failures(sweep: &SweepResult, report: &mut RunReport) {
    for row in sweep.failures() {
        report
            .failures
            .push(format!("eps = {}: {}", row.eps, row.failure.as_deref().unwrap_or("")));
    }
}

fn estimate_row(e: &crate::analysis::EstimateReport) -> Vec<f64> {
    vec![
        e.eps,
        e.norm_theta_L2Q,
        e.norm_thetahat_LinfV,
        e.sqrt_eps_norm_theta_L2V,
        e.norm_chi_LinfQ,
        e.eps_norm_chiprime_L2Q,
        e.eta,
    ]
}

pub fn sweep_table(sweep: &SweepResult) -> Table {
    let mut t = Table::new(SWEEP_HEADER);
    for r in &sweep.rows {
        let e = &r.estimates;
        t.push(vec![
            r.eps,
            r.err_theta_L2Q,
            r.err_chihat_L2Q,
            e.norm_theta_L2Q,
            e.norm_thetahat_LinfV,
            e.sqrt_eps_norm_theta_L2V,
            e.norm_chi_LinfQ,
            e.eps_norm_chiprime_L2Q,
            e.eta,
            r.iters_max as f64,
            r.wall_ms,
        ]);
    }
    t
}

fn check_estimates(config: &ExperimentConfig, s: &Scenario, w: &mut Writer) -> Result<()> {
    let sweep = sweep(config, s)?;
    collect_failures(&sweep, &mut w.report);
    let mut est = Table::new(ESTIMATE_HEADER);
    for r in &sweep.rows {
        est.push(estimate_row(&r.estimates));
    }
    w.write("estimates.csv", &est)?;

    // quantity index follows EstimateReport::bounded_quantities, 5 = maximum principle
    let mut check = Table::new(["quantity", "reference", "worst", "worst_eps", "limit", "passed"]);
    for (q, c) in estimate_uniformity(&sweep.rows, UNIFORMITY_FACTOR).iter().enumerate() {
        let limit = UNIFORMITY_FACTOR * c.reference;
        check.push(vec![q as f64, c.reference, c.worst, c.worst_eps, limit, f64::from(u8::from(c.passed))]);
        if !c.passed {
            w.report.violations.push(format!(
                "{} reaches {:.6e} at eps = {}, above {UNIFORMITY_FACTOR} x {:.6e}",
                c.quantity, c.worst, c.worst_eps, c.reference
            ));
        }
    }
    let bound = s.data.graph().bound() + s.data.eta();
    let (worst, worst_eps) = sweep
        .rows
        .iter()
        .map(|r| (r.estimates.norm_chi_LinfQ, r.eps))
        .fold((0.0, f64::NAN), |a, x| if x.0 > a.0 || x.0.is_nan() { x } else { a });
    let ok = worst <= bound + MAX_PRINCIPLE_TOL;
    check.push(vec![5.0, bound, worst, worst_eps, bound + MAX_PRINCIPLE_TOL, f64::from(u8::from(ok))]);
    if !ok {
        w.report
            .violations
            .push(format!("max |chi| = {worst:.12e} exceeds M + eta = {bound}"));
    }
    w.write("check.csv", &check)?;
    Ok(())
}

fn compare(config: &ExperimentConfig, s: &Scenario, w: &mut Writer) -> Result<()> {
    let eps = eps_of(config)?;
    let ops = assemble(&s.mesh);
    let relaxed = solve_relaxed_with(&ops, &s.data, &config.relaxed(eps)?)?;
    let limit = equilibrated(&ops, &s.data)?;
    let stefan = solve_stefan_with(&ops, &limit, &config.stefan)?;
    let dt = relaxed.dt;
    let (hr, hs) = (hat(&relaxed.chi, dt), hat(&stefan.chi, dt));
    let dist = |a: &[f64], b: &[f64]| {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        ops.inner(&d, &d).sqrt()
    };
    let mut t = Table::new(["step", "t", "err_theta_L2", "err_chi_L2", "err_chihat_L2"]);
    for n in 0..relaxed.theta.len() {
        t.push(vec![
            n as f64,
            relaxed.times[n],
            dist(&relaxed.theta[n], &stefan.theta[n]),
            dist(&relaxed.chi[n], &stefan.chi[n]),
            dist(&hr[n], &hs[n]),
        ]);
    }
    w.write("compare.csv", &t)?;
    w.report.violations.extend(relaxed.warnings);
    Ok(())
}

fn contdep(config: &ExperimentConfig, s: &Scenario, w: &mut Writer) -> Result<()> {
    let eps = eps_of(config)?;
    let ops = assemble(&s.mesh);
    let cfg = config.relaxed(eps)?;
    let mut t = Table::new(["delta", "lhs", "rhs", "ratio"]);
    for &delta in &config.deltas {
        let mut other = s.data.clone();
        // theta0 perturbation on free nodes keeps the Dirichlet data
        for &i in &ops.free_nodes {
            other.theta0[i] += delta;
        }
        let cd = continuous_dependence_check(&ops, &s.data, &other, &cfg)?;
        t.push(vec![delta, cd.lhs, cd.rhs, cd.ratio]);
    }
    w.write("contdep.csv", &t)?;
    Ok(())
}

/// Reads a config file, applies overrides and runs it.
pub fn run_file(path: &Path, overrides: &crate::config::Overrides) -> Result<RunReport> {
    let text = fs::read_to_string(path)?;
    let mut cfg = crate::config::parse_config(&text)?;
    cfg.apply(overrides)?;
    run(&cfg)
}
