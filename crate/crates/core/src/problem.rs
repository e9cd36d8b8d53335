//! Problem data shared by the relaxed and the limit solvers, and the
//! trajectory type they both produce.

use crate::error::{Error, Result};
use crate::graphs::{MonotoneGraph, RelaxationFunction, MEMBERSHIP_TOL};
use crate::mesh::DomainMesh;

/// A nodal field given either once for all times or per time level.
#[derive(Clone, Debug, PartialEq)]
pub enum TimeField {
    Stationary(Vec<f64>),
    /// One field per time level `0..=n_steps`.
    Sampled(Vec<Vec<f64>>),
}

impl TimeField {
    pub fn zeros(n_nodes: usize) -> Self {
        TimeField::Stationary(vec![0.0; n_nodes])
    }

    pub fn at(&self, n: usize) -> &[f64] {
        match self {
            TimeField::Stationary(v) => v,
            TimeField::Sampled(levels) => &levels[n],
        }
    }

    fn check(&self, what: &str, n_nodes: usize, n_steps: usize) -> Result<()> {
        let levels: Vec<&Vec<f64>> = match self {
            TimeField::Stationary(v) => vec![v],
            TimeField::Sampled(levels) => {
                if levels.len() != n_steps + 1 {
                    return Err(Error::Parameter(format!(
                        "{what} has {} time levels, expected {}",
                        levels.len(),
                        n_steps + 1
                    )));
                }
                levels.iter().collect()
            }
        };
        for v in levels {
            if v.len() != n_nodes {
                return Err(Error::Parameter(format!(
                    "{what} has {} nodal values, mesh has {n_nodes}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Parameter(format!("{what} contains non-finite values")));
            }
        }
        Ok(())
    }

    /// Pointwise `self + scale * other`, sampled on `n_steps + 1` levels when
    /// either operand is time dependent.
    pub fn perturbed(&self, other: &TimeField, scale: f64, n_steps: usize) -> TimeField {
        let add = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + scale * y).collect::<Vec<_>>();
        match (self, other) {
            (TimeField::Stationary(a), TimeField::Stationary(b)) => TimeField::Stationary(add(a, b)),
            _ => TimeField::Sampled((0..=n_steps).map(|n| add(self.at(n), other.at(n))).collect()),
        }
    }
}

/// Data of one relaxed or limit problem on a fixed mesh and time grid.
///
/// `f` is the nodal source of the homogeneous-boundary energy balance and
/// `u` the lifting that shifts the temperature argument of the relaxation
/// law and of the phase constraint.
#[derive(Clone, Debug)]
pub struct ProblemData {
    pub f: TimeField,
    pub u: TimeField,
    pub theta0: Vec<f64>,
    pub chi0: Vec<f64>,
    pub t_final: f64,
    pub n_steps: usize,
    pub psi: RelaxationFunction,
}

impl ProblemData {
    pub fn validate(&self, mesh: &DomainMesh) -> Result<()> {
        let n = mesh.n_nodes();
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::Parameter(format!("final time {} must be positive", self.t_final)));
        }
        if self.n_steps == 0 {
            return Err(Error::Parameter("n_steps must be at least 1".into()));
        }
        self.f.check("source f", n, self.n_steps)?;
        self.u.check("lifting u", n, self.n_steps)?;
        for (what, v) in [("theta0", &self.theta0), ("chi0", &self.chi0)] {
            if v.len() != n {
                return Err(Error::Parameter(format!("{what} has {} values, mesh has {n} nodes", v.len())));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Parameter(format!("{what} contains non-finite values")));
            }
        }
        for i in 0..n {
            if mesh.is_dirichlet(i) && self.theta0[i] != 0.0 {
                return Err(Error::Parameter(format!(
                    "theta0 must vanish at the Dirichlet node {i}, got {}",
                    self.theta0[i]
                )));
            }
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }

    pub fn graph(&self) -> &MonotoneGraph {
        self.psi.graph()
    }

    pub fn times(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..=self.n_steps)
            .map(|n| if n == self.n_steps { self.t_final } else { n as f64 * dt })
            .collect()
    }

    /// Largest distance of `chi0` from `alpha(theta0 + u(0))` over the nodes.
    pub fn constraint_violation(&self) -> f64 {
        let u0 = self.u.at(0);
        self.theta0
            .iter()
            .zip(&self.chi0)
            .zip(u0)
            .map(|((t, c), u)| match self.graph().eval_near(t + u, MEMBERSHIP_TOL) {
                Ok(img) => img.distance(*c),
                Err(_) => f64::INFINITY,
            })
            .fold(0.0, f64::max)
    }

    /// `max(0, max|chi0| - M)`.
    pub fn eta(&self) -> f64 {
        let m = self.graph().bound();
        let peak = self.chi0.iter().fold(0.0_f64, |a, c| a.max(c.abs()));
        (peak - m).max(0.0)
    }
}

/// Time-indexed nodal fields of a solver run.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub times: Vec<f64>,
    pub theta: Vec<Vec<f64>>,
    pub chi: Vec<Vec<f64>>,
    /// Inner iterations spent on each step (`n_steps` entries).
    pub iterations: Vec<usize>,
    /// Invariant violations that were logged instead of raised.
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn n_steps(&self) -> usize {
        self.times.len().saturating_sub(1)
    }

    pub fn enthalpy(&self, n: usize) -> Vec<f64> {
        self.theta[n].iter().zip(&self.chi[n]).map(|(t, c)| t + c).collect()
    }

    pub fn max_iterations(&self) -> usize {
        self.iterations.iter().copied().max().unwrap_or(0)
    }

    pub fn max_abs_chi(&self) -> f64 {
        self.chi
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0, |m, c| m.max(c.abs()))
    }
}
