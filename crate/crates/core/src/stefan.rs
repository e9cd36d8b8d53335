//! Enthalpy method for the limit Stefan problem
//!
//! ```text
//! (theta + chi)' + A theta = f,      chi ∈ alpha(theta + u)
//! ```
//!
//! The unknown of each backward-Euler step is the nodal enthalpy
//! `e = theta + chi`; temperature and phase are recovered nodewise through the
//! resolvent of `alpha`, so the phase constraint holds exactly at every level.
//! The step system is piecewise linear and monotone. It is solved by a
//! semismooth Newton iteration on the free nodes, with nonlinear Gauss-Seidel
//! sweeps (exact nodal solves via the resolvent) as fallback or on request.

use std::fmt;
use std::str::FromStr;

use log::warn;

use crate::error::{Error, Result};
use crate::graphs::{MonotoneGraph, MEMBERSHIP_TOL};
use crate::linalg::Tridiagonal;
use crate::mesh::{assemble, DiscreteOperators, DomainMesh};
use crate::problem::{ProblemData, Trajectory};

/// Tolerance of the phase constraint along a trajectory.
pub const CONSTRAINT_TOL: f64 = 1e-10;
const NEWTON_MAX: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StefanMethod {
    /// Semismooth Newton, Gauss-Seidel if it fails to converge.
    #[default]
    Newton,
    GaussSeidel,
}

impl fmt::Display for StefanMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StefanMethod::Newton => "newton",
            StefanMethod::GaussSeidel => "gauss_seidel",
        })
    }
}

impl FromStr for StefanMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "newton" => Ok(StefanMethod::Newton),
            "gauss_seidel" => Ok(StefanMethod::GaussSeidel),
            other => Err(format!("unknown Stefan method `{other}` (expected newton or gauss_seidel)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StefanConfig {
    pub tol: f64,
    /// Gauss-Seidel sweep cap.
    pub max_sweeps: usize,
    pub method: StefanMethod,
    pub verify: bool,
}

impl Default for StefanConfig {
    fn default() -> Self {
        StefanConfig {
            tol: 1e-10,
            max_sweeps: 500,
            method: StefanMethod::Newton,
            verify: false,
        }
    }
}

impl StefanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Parameter(format!("Stefan tolerance {} must be positive", self.tol)));
        }
        if self.max_sweeps == 0 {
            return Err(Error::Parameter("Stefan sweep cap must be at least 1".into()));
        }
        Ok(())
    }
}

/// Nodal enthalpy with its temperature/phase split.
#[derive(Clone, Debug, PartialEq)]
pub struct EnthalpyState {
    pub e: Vec<f64>,
    pub theta: Vec<f64>,
    pub chi: Vec<f64>,
}

/// Splits `e = theta + chi` with `chi ∈ alpha(theta + u)`.
pub fn enthalpy_decompose(e: f64, u: f64, graph: &MonotoneGraph) -> Result<(f64, f64)> {
    let w = graph.resolvent(1.0, e + u)?;
    let theta = w - u;
    Ok((theta, e - theta))
}

/// Same as [`enthalpy_decompose`] plus `d theta / d e`.
fn decompose_with_slope(e: f64, u: f64, graph: &MonotoneGraph) -> Result<(f64, f64, f64)> {
    let (w, slope) = graph.resolvent_with_slope(1.0, e + u)?;
    let theta = w - u;
    Ok((theta, e - theta, slope))
}

impl EnthalpyState {
    /// Builds the state from nodal enthalpy; Dirichlet nodes get `theta = 0`
    /// and keep `chi` (projected onto `alpha(u)`).
    fn from_enthalpy(e: Vec<f64>, u: &[f64], graph: &MonotoneGraph, mesh_dirichlet: &[bool]) -> Result<Self> {
        let n = e.len();
        let mut theta = vec![0.0; n];
        let mut chi = vec![0.0; n];
        let mut e = e;
        for i in 0..n {
            if mesh_dirichlet[i] {
                let c = graph.eval(u[i])?.project(e[i]);
                chi[i] = c;
                e[i] = c;
            } else {
                let (t, c) = enthalpy_decompose(e[i], u[i], graph)?;
                theta[i] = t;
                chi[i] = c;
            }
        }
        Ok(EnthalpyState { e, theta, chi })
    }

    /// Largest nodal distance of `chi` from `alpha(theta + u)`.
    pub fn constraint_gap(&self, u: &[f64], graph: &MonotoneGraph) -> f64 {
        (0..self.e.len())
            .map(|i| match graph.eval_near(self.theta[i] + u[i], MEMBERSHIP_TOL) {
                Ok(img) => img.distance(self.chi[i]),
                Err(_) => f64::INFINITY,
            })
            .fold(0.0, f64::max)
    }
}

pub struct StefanSolver<'a> {
    ops: &'a DiscreteOperators,
    data: &'a ProblemData,
    config: &'a StefanConfig,
    dirichlet: Vec<bool>,
}

impl<'a> StefanSolver<'a> {
    pub fn new(ops: &'a DiscreteOperators, data: &'a ProblemData, config: &'a StefanConfig) -> Result<Self> {
        config.validate()?;
        let mut dirichlet = vec![true; ops.n_nodes()];
        for &i in &ops.free_nodes {
            dirichlet[i] = false;
        }
        Ok(StefanSolver {
            ops,
            data,
            config,
            dirichlet,
        })
    }

    pub fn initial_state(&self) -> Result<EnthalpyState> {
        let gap = self.data.constraint_violation();
        if gap > CONSTRAINT_TOL {
            return Err(Error::Validation(format!(
                "initial phase violates chi0 ∈ alpha(theta0 + u(0)) by {gap:.3e}"
            )));
        }
        let e = self.data.theta0.iter().zip(&self.data.chi0).map(|(t, c)| t + c).collect();
        EnthalpyState::from_enthalpy(e, self.data.u.at(0), self.data.graph(), &self.dirichlet)
    }

    /// Scaled residual `dt/m_i * F_i(e)` of the step system at the free
    /// nodes, together with the nodal temperatures and slopes.
    fn residual(&self, e: &[f64], e_prev: &[f64], f: &[f64], u: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let dt = self.data.dt();
        let graph = self.data.graph();
        let n = e.len();
        let mut theta = vec![0.0; n];
        let mut slope = vec![0.0; n];
        for &i in &self.ops.free_nodes {
            let (t, _, s) = decompose_with_slope(e[i], u[i], graph)?;
            theta[i] = t;
            slope[i] = s;
        }
        let k_theta = self.ops.stiffness_free.mul_vec(&theta);
        let mut r = vec![0.0; n];
        for &i in &self.ops.free_nodes {
            r[i] = e[i] - e_prev[i] + dt * (k_theta[i] / self.ops.mass[i] - f[i]);
        }
        Ok((r, theta, slope))
    }

    fn newton(&self, e: &mut [f64], e_prev: &[f64], f: &[f64], u: &[f64]) -> Result<Option<usize>> {
        let dt = self.data.dt();
        let free = &self.ops.free_nodes;
        let k = &self.ops.stiffness_free;
        for it in 1..=NEWTON_MAX {
            let (r, _, slope) = self.residual(e, e_prev, f, u)?;
            let norm = free.iter().fold(0.0_f64, |m, &i| m.max(r[i].abs()));
            if norm < self.config.tol * 1e-2 {
                return Ok(Some(it - 1));
            }
            // J = I + dt M^{-1} K diag(slope), scaled rows
            let nf = free.len();
            let mut jac = Tridiagonal::zeros(nf);
            for (row, &i) in free.iter().enumerate() {
                let scale = dt / self.ops.mass[i];
                jac.diag[row] = 1.0 + scale * k.diag[i] * slope[i];
                if row + 1 < nf {
                    let j = free[row + 1];
                    jac.upper[row] = scale * k.upper[i] * slope[j];
                    jac.lower[row] = dt / self.ops.mass[j] * k.lower[i] * slope[i];
                }
            }
            let rhs: Vec<f64> = free.iter().map(|&i| -r[i]).collect();
            let delta = jac.solve(&rhs)?;
            let mut step = 0.0_f64;
            for (row, &i) in free.iter().enumerate() {
                e[i] += delta[row];
                step = step.max(delta[row].abs());
            }
            if !step.is_finite() {
                return Ok(None);
            }
            if step < self.config.tol * 1e-3 {
                return Ok(Some(it));
            }
        }
        Ok(None)
    }

    fn gauss_seidel(&self, e: &mut [f64], e_prev: &[f64], f: &[f64], u: &[f64], step: usize) -> Result<usize> {
        let dt = self.data.dt();
        let graph = self.data.graph();
        let k = &self.ops.stiffness_free;
        let n = e.len();
        let mut theta = vec![0.0; n];
        for &i in &self.ops.free_nodes {
            theta[i] = enthalpy_decompose(e[i], u[i], graph)?.0;
        }
        let mut last = f64::INFINITY;
        for sweep in 1..=self.config.max_sweeps {
            let mut update = 0.0_f64;
            for &i in &self.ops.free_nodes {
                let m = self.ops.mass[i] / dt;
                let mut b = m * e_prev[i] + self.ops.mass[i] * f[i];
                if i > 0 {
                    b -= k.lower[i - 1] * theta[i - 1];
                }
                if i + 1 < n {
                    b -= k.upper[i] * theta[i + 1];
                }
                // (m + k_ii) w + m chi = b + (m + k_ii) u,  chi ∈ alpha(w)
                let d = m + k.diag[i];
                let lambda = m / d;
                let target = (b + d * u[i]) / d;
                let w = graph.resolvent(lambda, target)?;
                let new_theta = w - u[i];
                let new_e = new_theta + (target - w) / lambda;
                update = update.max((new_e - e[i]).abs());
                e[i] = new_e;
                theta[i] = new_theta;
            }
            if update < self.config.tol {
                return Ok(sweep);
            }
            last = update;
        }
        Err(Error::Convergence {
            step,
            iterations: self.config.max_sweeps,
            last_update: last,
        })
    }

    /// Advances the state from level `n` to `n + 1`; returns the new state and
    /// the number of Newton iterations or Gauss-Seidel sweeps spent.
    pub fn step(&self, state: &EnthalpyState, n: usize) -> Result<(EnthalpyState, usize)> {
        let f = self.data.f.at(n + 1);
        let u = self.data.u.at(n + 1);
        let mut e = state.e.clone();
        let iterations = match self.config.method {
            StefanMethod::Newton => match self.newton(&mut e, &state.e, f, u)? {
                Some(it) => it,
                None => {
                    warn!("step {n}: Newton did not converge, falling back to Gauss-Seidel");
                    e.clone_from(&state.e);
                    NEWTON_MAX + self.gauss_seidel(&mut e, &state.e, f, u, n)?
                }
            },
            StefanMethod::GaussSeidel => self.gauss_seidel(&mut e, &state.e, f, u, n)?,
        };
        let next = EnthalpyState::from_enthalpy(e, u, self.data.graph(), &self.dirichlet)?;

        let (r, _, _) = self.residual(&next.e, &state.e, f, u)?;
        let residual = self.ops.free_nodes.iter().fold(0.0_f64, |m, &i| m.max(r[i].abs()));
        let gap = next.constraint_gap(u, self.data.graph());
        let mut problems = Vec::new();
        if residual >= 10.0 * self.config.tol {
            problems.push(format!("step {n}: enthalpy residual {residual:.3e} exceeds {:.1e}", 10.0 * self.config.tol));
        }
        if gap > CONSTRAINT_TOL {
            problems.push(format!("step {n}: phase constraint violated by {gap:.3e}"));
        }
        if !problems.is_empty() {
            if self.config.verify {
                return Err(Error::Invariant(problems.join("; ")));
            }
            for p in &problems {
                warn!("{p}");
            }
        }
        Ok((next, iterations))
    }
}

pub fn stefan_step(
    ops: &DiscreteOperators,
    data: &ProblemData,
    config: &StefanConfig,
    state: &EnthalpyState,
    n: usize,
) -> Result<EnthalpyState> {
    StefanSolver::new(ops, data, config)?.step(state, n).map(|(s, _)| s)
}

pub fn solve_stefan(mesh: &DomainMesh, data: &ProblemData, config: &StefanConfig) -> Result<Trajectory> {
    data.validate(mesh)?;
    let ops = assemble(mesh);
    solve_stefan_with(&ops, data, config)
}

pub fn solve_stefan_with(ops: &DiscreteOperators, data: &ProblemData, config: &StefanConfig) -> Result<Trajectory> {
    let solver = StefanSolver::new(ops, data, config)?;
    let mut state = solver.initial_state()?;
    let mut theta = Vec::with_capacity(data.n_steps + 1);
    let mut chi = Vec::with_capacity(data.n_steps + 1);
    let mut iterations = Vec::with_capacity(data.n_steps);
    theta.push(state.theta.clone());
    chi.push(state.chi.clone());
    for n in 0..data.n_steps {
        let (next, it) = solver.step(&state, n)?;
        theta.push(next.theta.clone());
        chi.push(next.chi.clone());
        iterations.push(it);
        state = next;
    }
    Ok(Trajectory {
        dt: data.dt(),
        times: data.times(),
        theta,
        chi,
        iterations,
        warnings: Vec::new(),
    })
}

/// Residuals of the time-integrated formulation along a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct BdfResidual {
    /// Mass-weighted norm over the free nodes of
    /// `theta^n + chi^n + M^{-1} K hat(theta)^n - hat(f)^n - theta0 - chi0`.
    pub energy: Vec<f64>,
    /// Mass-weighted norm of the distance of `chi^n` from `alpha(theta^n + u^n)`.
    pub constraint: Vec<f64>,
}

impl BdfResidual {
    pub fn max_energy(&self) -> f64 {
        self.energy.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_constraint(&self) -> f64 {
        self.constraint.iter().copied().fold(0.0, f64::max)
    }
}

/// Evaluates the time-integrated balance with the backward-Euler-consistent
/// quadrature `hat(v)^n = dt * sum_{k=1..n} v^k`, under which the enthalpy
/// scheme telescopes exactly.
pub fn bdf_residual(ops: &DiscreteOperators, traj: &Trajectory, data: &ProblemData) -> Result<BdfResidual> {
    if traj.theta.len() != data.n_steps + 1 || traj.chi.len() != data.n_steps + 1 {
        return Err(Error::Parameter(format!(
            "trajectory has {} levels, data expects {}",
            traj.theta.len(),
            data.n_steps + 1
        )));
    }
    let n_nodes = ops.n_nodes();
    let dt = data.dt();
    let graph = data.graph();
    let e0: Vec<f64> = data.theta0.iter().zip(&data.chi0).map(|(t, c)| t + c).collect();
    let mut theta_hat = vec![0.0; n_nodes];
    let mut f_hat = vec![0.0; n_nodes];
    let mut energy = Vec::with_capacity(data.n_steps + 1);
    let mut constraint = Vec::with_capacity(data.n_steps + 1);
    for n in 0..=data.n_steps {
        if n > 0 {
            let f = data.f.at(n);
            for i in 0..n_nodes {
                theta_hat[i] += dt * traj.theta[n][i];
                f_hat[i] += dt * f[i];
            }
        }
        let k_hat = ops.stiffness_free.mul_vec(&theta_hat);
        let r2: f64 = ops
            .free_nodes
            .iter()
            .map(|&i| {
                let r = traj.theta[n][i] + traj.chi[n][i] + k_hat[i] / ops.mass[i] - f_hat[i] - e0[i];
                ops.mass[i] * r * r
            })
            .sum();
        energy.push(r2.sqrt());

        let u = data.u.at(n);
        let c2: f64 = (0..n_nodes)
            .map(|i| {
                let gap = graph
                    .eval_near(traj.theta[n][i] + u[i], MEMBERSHIP_TOL)
                    .map(|img| img.distance(traj.chi[n][i]))
                    .unwrap_or(f64::INFINITY);
                ops.mass[i] * gap * gap
            })
            .sum();
        constraint.push(c2.sqrt());
    }
    Ok(BdfResidual { energy, constraint })
}
