//! Time integrals, a-priori estimate reports, the epsilon sweep against the
//! enthalpy reference and the continuous-dependence ratio.

use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::DiscreteOperators;
use crate::problem::{ProblemData, Trajectory};
use crate::relaxed::{solve_relaxed_with, RelaxedConfig};
use crate::stefan::{enthalpy_decompose, solve_stefan_with, StefanConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum HatRule {
    /// `hat(v)^n = dt * sum_{k<n} v^k`
    #[default]
    Left,
    /// `hat(v)^n = dt * sum_{1<=k<=n} v^k`
    Right,
}

/// Left-rectangle time integral of a field sequence; `hat(v)^0 = 0`.
pub fn hat(fields: &[Vec<f64>], dt: f64) -> Vec<Vec<f64>> {
    hat_with(fields, dt, HatRule::Left)
}

pub fn hat_with(fields: &[Vec<f64>], dt: f64, rule: HatRule) -> Vec<Vec<f64>> {
    let Some(first) = fields.first() else {
        return Vec::new();
    };
    let mut acc = vec![0.0; first.len()];
    let mut out = Vec::with_capacity(fields.len());
    out.push(acc.clone());
    for n in 1..fields.len() {
        let src = match rule {
            HatRule::Left => &fields[n - 1],
            HatRule::Right => &fields[n],
        };
        for (a, v) in acc.iter_mut().zip(src) {
            *a += dt * v;
        }
        out.push(acc.clone());
    }
    out
}

/// Forward difference quotients `(v^{n+1} - v^n) / dt`, one per step.
pub fn difference_quotients(fields: &[Vec<f64>], dt: f64) -> Vec<Vec<f64>> {
    fields
        .windows(2)
        .map(|w| w[1].iter().zip(&w[0]).map(|(b, a)| (b - a) / dt).collect())
        .collect()
}

#[allow(non_snake_case)]
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateReport {
    pub scenario: String,
    pub eps: f64,
    pub norm_theta_L2Q: f64,
    pub norm_thetahat_LinfV: f64,
    pub sqrt_eps_norm_theta_L2V: f64,
    pub norm_chi_LinfQ: f64,
    pub eps_norm_chiprime_L2Q: f64,
    pub eta: f64,
}

impl EstimateReport {
    /// Names and values of the quantities bounded independently of `eps`.
    pub fn bounded_quantities(&self) -> [(&'static str, f64); 5] {
        [
            ("norm_theta_L2Q", self.norm_theta_L2Q),
            ("norm_thetahat_LinfV", self.norm_thetahat_LinfV),
            ("sqrt_eps_norm_theta_L2V", self.sqrt_eps_norm_theta_L2V),
            ("norm_chi_LinfQ", self.norm_chi_LinfQ),
            ("eps_norm_chiprime_L2Q", self.eps_norm_chiprime_L2Q),
        ]
    }

    fn nan(scenario: &str, eps: f64) -> Self {
        EstimateReport {
            scenario: scenario.to_string(),
            eps,
            norm_theta_L2Q: f64::NAN,
            norm_thetahat_LinfV: f64::NAN,
            sqrt_eps_norm_theta_L2V: f64::NAN,
            norm_chi_LinfQ: f64::NAN,
            eps_norm_chiprime_L2Q: f64::NAN,
            eta: f64::NAN,
        }
    }
}

pub fn estimate_report(
    ops: &DiscreteOperators,
    traj: &Trajectory,
    data: &ProblemData,
    eps: f64,
    scenario: &str,
) -> Result<EstimateReport> {
    let dt = traj.dt;
    let theta = ops.trajectory_norms(&traj.theta, dt)?;
    let chi = ops.trajectory_norms(&traj.chi, dt)?;
    let theta_hat = hat(&traj.theta, dt);
    let mut hat_linf_v = 0.0_f64;
    for v in &theta_hat {
        hat_linf_v = hat_linf_v.max(ops.v_norm(v)?);
    }
    let chi_prime: f64 = difference_quotients(&traj.chi, dt)
        .iter()
        .map(|q| dt * ops.inner(q, q))
        .sum::<f64>()
        .sqrt();
    Ok(EstimateReport {
        scenario: scenario.to_string(),
        eps,
        norm_theta_L2Q: theta.l2_q,
        norm_thetahat_LinfV: hat_linf_v,
        sqrt_eps_norm_theta_L2V: eps.sqrt() * theta.l2_t_v,
        norm_chi_LinfQ: chi.linf_q,
        eps_norm_chiprime_L2Q: eps * chi_prime,
        eta: data.eta(),
    })
}

/// Limit data whose initial phase is moved onto the constraint set while the
/// initial enthalpy `theta0 + chi0` is kept. Dirichlet nodes keep `theta = 0`
/// and get the phase projected onto `alpha(u(0))`.
pub fn equilibrated(ops: &DiscreteOperators, data: &ProblemData) -> Result<ProblemData> {
    let graph = data.graph();
    let u0 = data.u.at(0);
    let mut out = data.clone();
    let mut free = vec![false; ops.n_nodes()];
    for &i in &ops.free_nodes {
        free[i] = true;
    }
    for i in 0..ops.n_nodes() {
        let e = data.theta0[i] + data.chi0[i];
        if free[i] {
            let (t, c) = enthalpy_decompose(e, u0[i], graph)?;
            out.theta0[i] = t;
            out.chi0[i] = c;
        } else {
            out.theta0[i] = 0.0;
            out.chi0[i] = graph.eval(u0[i])?.project(data.chi0[i]);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub relaxed: RelaxedConfig,
    pub stefan: StefanConfig,
    /// Wall times are written as 0 unless set, which keeps outputs bitwise
    /// reproducible.
    pub record_timing: bool,
}

#[allow(non_snake_case)]
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub eps: f64,
    pub err_theta_L2Q: f64,
    pub err_chihat_L2Q: f64,
    pub estimates: EstimateReport,
    pub iters_max: usize,
    pub wall_ms: f64,
    pub failure: Option<String>,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub scenario: String,
    pub rows: Vec<SweepRow>,
    pub reference: Trajectory,
    /// Trajectories of the successful rows, aligned with `rows`.
    pub trajectories: Vec<Option<Trajectory>>,
}

impl SweepResult {
    pub fn failures(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.failure.is_some())
    }
}

/// Runs the relaxed problem for every `eps` (rows in parallel) and measures
/// the distance to the enthalpy solution of `limit`. `family(eps)` supplies
/// the perturbed data of each row.
pub fn eps_sweep<F>(
    ops: &DiscreteOperators,
    scenario: &str,
    limit: &ProblemData,
    family: F,
    eps_list: &[f64],
    config: &SweepConfig,
) -> Result<SweepResult>
where
    F: Fn(f64) -> ProblemData + Sync,
{
    if eps_list.is_empty() {
        return Err(Error::Parameter("eps list is empty".into()));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Parameter("eps list must be strictly decreasing".into()));
    }
    for &eps in eps_list {
        config.relaxed.with_eps(eps)?;
    }
    let limit = equilibrated(ops, limit)?;
    let reference = solve_stefan_with(ops, &limit, &config.stefan)?;
    let chi_hat_ref = hat(&reference.chi, reference.dt);

    let outcomes: Vec<(SweepRow, Option<Trajectory>)> = eps_list
        .par_iter()
        .map(|&eps| {
            let start = Instant::now();
            let data = family(eps);
            let run = config
                .relaxed
                .with_eps(eps)
                .and_then(|cfg| solve_relaxed_with(ops, &data, &cfg))
                .and_then(|traj| {
                    let err_theta = ops.l2_q_distance(&traj.theta, &reference.theta, traj.dt)?;
                    let err_chihat = ops.l2_q_distance(&hat(&traj.chi, traj.dt), &chi_hat_ref, traj.dt)?;
                    let est = estimate_report(ops, &traj, &data, eps, scenario)?;
                    Ok((err_theta, err_chihat, est, traj))
                });
            let wall_ms = if config.record_timing {
                start.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            };
            match run {
                Ok((err_theta, err_chihat, est, traj)) => {
                    info!("eps = {eps:e}: err_theta = {err_theta:.6e}, err_chihat = {err_chihat:.6e}");
                    let row = SweepRow {
                        eps,
                        err_theta_L2Q: err_theta,
                        err_chihat_L2Q: err_chihat,
                        estimates: est,
                        iters_max: traj.max_iterations(),
                        wall_ms,
                        failure: None,
                    };
                    (row, Some(traj))
                }
                Err(e) => {
                    warn!("eps = {eps:e}: {e}");
                    let row = SweepRow {
                        eps,
                        err_theta_L2Q: f64::NAN,
                        err_chihat_L2Q: f64::NAN,
                        estimates: EstimateReport::nan(scenario, eps),
                        iters_max: 0,
                        wall_ms,
                        failure: Some(e.to_string()),
                    };
                    (row, None)
                }
            }
        })
        .collect();
    let (rows, trajectories) = outcomes.into_iter().unzip();
    Ok(SweepResult {
        scenario: scenario.to_string(),
        rows,
        reference,
        trajectories,
    })
}

/// Result of checking that each bounded quantity stays within `factor` times
/// its value in the first sweep row.
#[derive(Clone, Debug, PartialEq)]
pub struct UniformityCheck {
    pub quantity: &'static str,
    pub reference: f64,
    pub worst: f64,
    pub worst_eps: f64,
    pub passed: bool,
}

pub fn estimate_uniformity(rows: &[SweepRow], factor: f64) -> Vec<UniformityCheck> {
    let Some(first) = rows.first() else {
        return Vec::new();
    };
    first
        .estimates
        .bounded_quantities()
        .iter()
        .enumerate()
        .map(|(q, &(name, reference))| {
            let (worst, worst_eps) = rows
                .iter()
                .map(|r| (r.estimates.bounded_quantities()[q].1, r.eps))
                .fold((f64::NEG_INFINITY, f64::NAN), |acc, x| if x.0 > acc.0 || x.0.is_nan() { x } else { acc });
            UniformityCheck {
                quantity: name,
                reference,
                worst,
                worst_eps,
                passed: worst.is_finite() && worst <= factor * reference,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuousDependence {
    /// `max_n (|theta1 - theta2|^2 + |chi1 - chi2|^2)`
    pub lhs: f64,
    /// Data-difference bracket: initial values, `f` in `L1(0,T;H)`, `u` in `L2(Q)`.
    pub rhs: f64,
    /// `lhs / rhs`, 0 when both runs coincide.
    pub ratio: f64,
}

pub fn continuous_dependence_check(
    ops: &DiscreteOperators,
    data1: &ProblemData,
    data2: &ProblemData,
    config: &RelaxedConfig,
) -> Result<ContinuousDependence> {
    if data1.n_steps != data2.n_steps || data1.t_final != data2.t_final {
        return Err(Error::Parameter("both data sets must share the time grid".into()));
    }
    let t1 = solve_relaxed_with(ops, data1, config)?;
    let t2 = solve_relaxed_with(ops, data2, config)?;
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>();
    let sq = |v: &[f64]| ops.inner(v, v);

    let lhs = (0..=data1.n_steps)
        .map(|n| sq(&diff(&t1.theta[n], &t2.theta[n])) + sq(&diff(&t1.chi[n], &t2.chi[n])))
        .fold(0.0, f64::max);

    let dt = data1.dt();
    let mut f_l1 = 0.0;
    let mut u_l2 = 0.0;
    for n in 1..=data1.n_steps {
        f_l1 += dt * sq(&diff(data1.f.at(n), data2.f.at(n))).sqrt();
        u_l2 += dt * sq(&diff(data1.u.at(n), data2.u.at(n)));
    }
    let rhs = sq(&diff(&data1.theta0, &data2.theta0)) + sq(&diff(&data1.chi0, &data2.chi0)) + f_l1 * f_l1 + u_l2;
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
    Ok(ContinuousDependence { lhs, rhs, ratio })
}
