//! Time stepping for the phase-relaxation system
//!
//! ```text
//! (theta + chi)' + A theta = f,      eps chi' = psi(theta + u, chi)
//! ```
//!
//! Each backward-Euler step is a fixed point of `X -> chi_X`: `theta_X`
//! solves the linear heat step driven by the phase increment `X - chi^n`, and
//! `chi_X = chi^n + (dt/eps) psi(theta_X + u, X)` nodewise. The map is a
//! contraction when `2 L dt / eps < 1`; `dt <= eps / (4L)` is the
//! recommended regime. Stalled steps can be retried with halved substeps.

use std::fmt;
use std::str::FromStr;

use log::warn;

use crate::error::{Error, Result};
use crate::linalg::Tridiagonal;
use crate::mesh::{assemble, DiscreteOperators, DomainMesh};
use crate::problem::{ProblemData, Trajectory};

pub const DEFAULT_INNER_TOL: f64 = 1e-10;
pub const DEFAULT_INNER_MAX: usize = 100;
/// Largest number of successive step halvings under [`DtPolicy::HalveOnStall`].
pub const MAX_HALVINGS: u32 = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DtPolicy {
    #[default]
    Fixed,
    HalveOnStall,
}

impl fmt::Display for DtPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DtPolicy::Fixed => "fixed",
            DtPolicy::HalveOnStall => "halve_on_stall",
        })
    }
}

impl FromStr for DtPolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "fixed" => Ok(DtPolicy::Fixed),
            "halve_on_stall" => Ok(DtPolicy::HalveOnStall),
            other => Err(format!("unknown dt policy `{other}` (expected fixed or halve_on_stall)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelaxedConfig {
    pub eps: f64,
    pub inner_tol: f64,
    pub inner_max: usize,
    pub dt_policy: DtPolicy,
    /// Raise postcondition violations as errors instead of logging them.
    pub verify: bool,
}

impl RelaxedConfig {
    pub fn new(eps: f64) -> Result<Self> {
        let cfg = RelaxedConfig {
            eps,
            inner_tol: DEFAULT_INNER_TOL,
            inner_max: DEFAULT_INNER_MAX,
            dt_policy: DtPolicy::Fixed,
            verify: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        let cfg = RelaxedConfig { eps, ..self.clone() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::Parameter(format!("eps = {} must lie in (0, 1]", self.eps)));
        }
        if !(self.inner_tol > 0.0 && self.inner_tol.is_finite()) {
            return Err(Error::Parameter(format!("inner_tol = {} must be positive", self.inner_tol)));
        }
        if self.inner_max == 0 {
            return Err(Error::Parameter("inner_max must be at least 1".into()));
        }
        Ok(())
    }
}

/// Result of one relaxed step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub theta: Vec<f64>,
    pub chi: Vec<f64>,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

/// Backward-Euler heat operator `M/dt + K` restricted to the free nodes.
struct HeatStep {
    dt: f64,
    matrix: Tridiagonal,
}

impl HeatStep {
    fn new(ops: &DiscreteOperators, dt: f64) -> Self {
        let free = &ops.free_nodes;
        let nf = free.len();
        let mut matrix = Tridiagonal::zeros(nf);
        for (k, &i) in free.iter().enumerate() {
            matrix.diag[k] = ops.mass[i] / dt + ops.stiffness_free.diag[i];
            if k + 1 < nf {
                matrix.upper[k] = ops.stiffness_free.upper[i];
                matrix.lower[k] = ops.stiffness_free.lower[i];
            }
        }
        HeatStep { dt, matrix }
    }

    /// `theta` solving `(M/dt + K) theta = M (theta_n - (x - chi_n))/dt + M f`
    /// on the free nodes, zero on Dirichlet nodes.
    fn solve(
        &self,
        ops: &DiscreteOperators,
        theta_n: &[f64],
        chi_n: &[f64],
        x: &[f64],
        f: &[f64],
    ) -> Result<Vec<f64>> {
        let rhs: Vec<f64> = ops
            .free_nodes
            .iter()
            .map(|&i| ops.mass[i] * ((theta_n[i] - (x[i] - chi_n[i])) / self.dt + f[i]))
            .collect();
        let sol = self.matrix.solve(&rhs)?;
        let mut theta = vec![0.0; theta_n.len()];
        for (k, &i) in ops.free_nodes.iter().enumerate() {
            theta[i] = sol[k];
        }
        Ok(theta)
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Stepper holding the assembled operators of one run.
pub struct RelaxedSolver<'a> {
    ops: &'a DiscreteOperators,
    data: &'a ProblemData,
    config: &'a RelaxedConfig,
    heat: HeatStep,
    eta: f64,
}

impl<'a> RelaxedSolver<'a> {
    pub fn new(ops: &'a DiscreteOperators, data: &'a ProblemData, config: &'a RelaxedConfig) -> Result<Self> {
        config.validate()?;
        let heat = HeatStep::new(ops, data.dt());
        Ok(RelaxedSolver {
            ops,
            data,
            config,
            heat,
            eta: data.eta(),
        })
    }

    /// Advances `(theta^n, chi^n)` to level `n + 1`.
    pub fn step(&self, theta_n: &[f64], chi_n: &[f64], n: usize) -> Result<StepOutcome> {
        if theta_n.iter().chain(chi_n).any(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("state at step {n} is not finite")));
        }
        let f = self.data.f.at(n + 1);
        let u = self.data.u.at(n + 1);
        self.advance(theta_n, chi_n, f, u, &self.heat, 0, n)
    }

    #[allow(clippy::too_many_arguments)]
    fn advance(
        &self,
        theta_n: &[f64],
        chi_n: &[f64],
        f: &[f64],
        u: &[f64],
        heat: &HeatStep,
        depth: u32,
        n: usize,
    ) -> Result<StepOutcome> {
        match self.picard(theta_n, chi_n, f, u, heat) {
            Ok((theta, chi, iterations)) => {
                let warnings = self.postconditions(theta_n, chi_n, &theta, &chi, f, u, heat.dt, n)?;
                Ok(StepOutcome {
                    theta,
                    chi,
                    iterations,
                    warnings,
                })
            }
            Err(last_update) => {
                if self.config.dt_policy == DtPolicy::HalveOnStall && depth < MAX_HALVINGS {
                    let half = HeatStep::new(self.ops, heat.dt / 2.0);
                    let first = self.advance(theta_n, chi_n, f, u, &half, depth + 1, n)?;
                    let second = self.advance(&first.theta, &first.chi, f, u, &half, depth + 1, n)?;
                    let mut warnings = first.warnings;
                    warnings.extend(second.warnings);
                    Ok(StepOutcome {
                        theta: second.theta,
                        chi: second.chi,
                        iterations: first.iterations + second.iterations,
                        warnings,
                    })
                } else {
                    Err(Error::Convergence {
                        step: n,
                        iterations: self.config.inner_max,
                        last_update,
                    })
                }
            }
        }
    }

    /// Picard iteration; `Err` carries the last update size on stall.
    fn picard(
        &self,
        theta_n: &[f64],
        chi_n: &[f64],
        f: &[f64],
        u: &[f64],
        heat: &HeatStep,
    ) -> std::result::Result<(Vec<f64>, Vec<f64>, usize), f64> {
        let rate = heat.dt / self.config.eps;
        let psi = &self.data.psi;
        let mut x = chi_n.to_vec();
        let mut theta = heat.solve(self.ops, theta_n, chi_n, &x, f).map_err(|_| f64::NAN)?;
        let mut last = f64::INFINITY;
        for k in 1..=self.config.inner_max {
            let x_new: Vec<f64> = (0..x.len())
                .map(|i| chi_n[i] + rate * psi.eval(theta[i] + u[i], x[i]))
                .collect();
            let theta_new = heat.solve(self.ops, theta_n, chi_n, &x_new, f).map_err(|_| f64::NAN)?;
            let update = max_diff(&x_new, &x).max(max_diff(&theta_new, &theta));
            x = x_new;
            theta = theta_new;
            if !update.is_finite() {
                return Err(update);
            }
            if update < self.config.inner_tol {
                return Ok((theta, x, k));
            }
            last = update;
        }
        Err(last)
    }

    #[allow(clippy::too_many_arguments)]
    fn postconditions(
        &self,
        theta_n: &[f64],
        chi_n: &[f64],
        theta: &[f64],
        chi: &[f64],
        f: &[f64],
        u: &[f64],
        dt: f64,
        n: usize,
    ) -> Result<Vec<String>> {
        let tol = self.config.inner_tol;
        let mut problems = Vec::new();

        let energy = energy_residual(self.ops, theta_n, chi_n, theta, chi, f, dt);
        if energy >= 10.0 * tol {
            problems.push(format!("step {n}: energy residual {energy:.3e} exceeds {:.1e}", 10.0 * tol));
        }
        let rate = dt / self.config.eps;
        let phase = (0..chi.len())
            .map(|i| (chi[i] - chi_n[i] - rate * self.data.psi.eval(theta[i] + u[i], chi[i])).abs())
            .fold(0.0, f64::max);
        if phase >= 10.0 * tol {
            problems.push(format!("step {n}: phase residual {phase:.3e} exceeds {:.1e}", 10.0 * tol));
        }
        let bound = self.data.graph().bound() + self.eta + tol;
        let peak = chi.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        if peak > bound {
            problems.push(format!("step {n}: max |chi| = {peak} exceeds M + eta + tol = {bound}"));
        }

        if problems.is_empty() {
            Ok(problems)
        } else if self.config.verify {
            Err(Error::Invariant(problems.join("; ")))
        } else {
            for p in &problems {
                warn!("{p}");
            }
            Ok(problems)
        }
    }
}

/// Mass-weighted H-norm over the free nodes of
/// `(theta - theta_n + chi - chi_n)/dt + M^{-1} K theta - f`.
pub fn energy_residual(
    ops: &DiscreteOperators,
    theta_n: &[f64],
    chi_n: &[f64],
    theta: &[f64],
    chi: &[f64],
    f: &[f64],
    dt: f64,
) -> f64 {
    let k_theta = ops.stiffness_free.mul_vec(theta);
    ops.free_nodes
        .iter()
        .map(|&i| {
            let r = (theta[i] - theta_n[i] + chi[i] - chi_n[i]) / dt + k_theta[i] / ops.mass[i] - f[i];
            ops.mass[i] * r * r
        })
        .sum::<f64>()
        .sqrt()
}

/// One step from `(theta_n, chi_n)` at level `n`.
pub fn relaxed_step(
    ops: &DiscreteOperators,
    data: &ProblemData,
    config: &RelaxedConfig,
    theta_n: &[f64],
    chi_n: &[f64],
    n: usize,
) -> Result<StepOutcome> {
    RelaxedSolver::new(ops, data, config)?.step(theta_n, chi_n, n)
}

pub fn solve_relaxed(mesh: &DomainMesh, data: &ProblemData, config: &RelaxedConfig) -> Result<Trajectory> {
    data.validate(mesh)?;
    let ops = assemble(mesh);
    solve_relaxed_with(&ops, data, config)
}

pub fn solve_relaxed_with(ops: &DiscreteOperators, data: &ProblemData, config: &RelaxedConfig) -> Result<Trajectory> {
    let violation = data.constraint_violation();
    if violation > 0.0 {
        warn!("initial phase is {violation:.3e} away from the constraint set (eta = {:.3e})", data.eta());
    }
    let solver = RelaxedSolver::new(ops, data, config)?;
    let mut theta = Vec::with_capacity(data.n_steps + 1);
    let mut chi = Vec::with_capacity(data.n_steps + 1);
    let mut iterations = Vec::with_capacity(data.n_steps);
    let mut warnings = Vec::new();
    theta.push(data.theta0.clone());
    chi.push(data.chi0.clone());
    for n in 0..data.n_steps {
        let out = solver.step(&theta[n], &chi[n], n)?;
        theta.push(out.theta);
        chi.push(out.chi);
        iterations.push(out.iterations);
        warnings.extend(out.warnings);
    }
    Ok(Trajectory {
        dt: data.dt(),
        times: data.times(),
        theta,
        chi,
        iterations,
        warnings,
    })
}
