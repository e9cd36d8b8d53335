//! Uniform 1-D meshes, P1 finite-element operators with lumped mass, and the
//! discrete space and space-time norms used by the solvers and reports.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::Tridiagonal;

/// Endpoint condition for the (homogeneous) temperature unknown.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryCondition {
    /// `theta = 0`
    Dirichlet,
    /// zero normal derivative
    Neumann,
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryCondition::Dirichlet => "dirichlet",
            BoundaryCondition::Neumann => "neumann",
        })
    }
}

impl FromStr for BoundaryCondition {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dirichlet" | "d" => Ok(BoundaryCondition::Dirichlet),
            "neumann" | "n" => Ok(BoundaryCondition::Neumann),
            other => Err(format!("unknown boundary condition `{other}` (expected dirichlet or neumann)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DomainMesh {
    a: f64,
    b: f64,
    n_nodes: usize,
    left: BoundaryCondition,
    right: BoundaryCondition,
}

pub fn build_mesh(
    a: f64,
    b: f64,
    n_nodes: usize,
    left: BoundaryCondition,
    right: BoundaryCondition,
) -> Result<DomainMesh> {
    if !(a.is_finite() && b.is_finite()) || a >= b {
        return Err(Error::Parameter(format!("mesh interval ({a}, {b}) needs a < b")));
    }
    if n_nodes < 2 {
        return Err(Error::Parameter(format!("mesh needs at least 2 nodes, got {n_nodes}")));
    }
    let has_dirichlet = left == BoundaryCondition::Dirichlet || right == BoundaryCondition::Dirichlet;
    if has_dirichlet && n_nodes < 3 {
        return Err(Error::Parameter(
            "a Dirichlet endpoint needs at least one interior node (n_nodes >= 3)".into(),
        ));
    }
    Ok(DomainMesh {
        a,
        b,
        n_nodes,
        left,
        right,
    })
}

impl DomainMesh {
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn left_bc(&self) -> BoundaryCondition {
        self.left
    }

    pub fn right_bc(&self) -> BoundaryCondition {
        self.right
    }

    pub fn h(&self) -> f64 {
        (self.b - self.a) / (self.n_nodes - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n_nodes {
            self.b
        } else {
            self.a + self.h() * i as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes).map(|i| self.node(i)).collect()
    }

    pub fn is_pure_neumann(&self) -> bool {
        self.left == BoundaryCondition::Neumann && self.right == BoundaryCondition::Neumann
    }

    pub fn is_dirichlet(&self, i: usize) -> bool {
        (i == 0 && self.left == BoundaryCondition::Dirichlet)
            || (i + 1 == self.n_nodes && self.right == BoundaryCondition::Dirichlet)
    }
}

/// Assembled operators of a [`DomainMesh`].
#[derive(Clone, Debug)]
pub struct DiscreteOperators {
    /// Lumped mass weights.
    pub mass: Vec<f64>,
    /// Stiffness matrix with Dirichlet rows and columns replaced by identity.
    pub stiffness: Tridiagonal,
    /// Stiffness matrix before boundary constraints.
    pub stiffness_free: Tridiagonal,
    /// Unconstrained node indices, ascending and contiguous.
    pub free_nodes: Vec<usize>,
    h: f64,
}

pub fn assemble(mesh: &DomainMesh) -> DiscreteOperators {
    let n = mesh.n_nodes();
    let h = mesh.h();
    let mut mass = vec![h; n];
    mass[0] = h / 2.0;
    mass[n - 1] = h / 2.0;

    let mut k = Tridiagonal::zeros(n);
    for e in 0..n - 1 {
        k.diag[e] += 1.0 / h;
        k.diag[e + 1] += 1.0 / h;
        k.upper[e] -= 1.0 / h;
        k.lower[e] -= 1.0 / h;
    }
    let mut constrained = k.clone();
    for i in [0, n - 1] {
        if mesh.is_dirichlet(i) {
            constrained.diag[i] = 1.0;
            if i > 0 {
                constrained.lower[i - 1] = 0.0;
                constrained.upper[i - 1] = 0.0;
            }
            if i + 1 < n {
                constrained.upper[i] = 0.0;
                constrained.lower[i] = 0.0;
            }
        }
    }
    let free_nodes = (0..n).filter(|&i| !mesh.is_dirichlet(i)).collect();
    DiscreteOperators {
        mass,
        stiffness: constrained,
        stiffness_free: k,
        free_nodes,
        h,
    }
}

/// Space norms of a single nodal field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldNorms {
    pub l2: f64,
    pub v_seminorm: f64,
    pub v_norm: f64,
    pub linf: f64,
}

/// Space-time norms of a time-uniform sequence of nodal fields.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryNorms {
    pub l2_q: f64,
    pub l2_t_v: f64,
    pub linf_t_v: f64,
    pub linf_q: f64,
}

impl DiscreteOperators {
    pub fn n_nodes(&self) -> usize {
        self.mass.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.n_nodes() {
            return Err(Error::Parameter(format!(
                "field has {} values, mesh has {} nodes",
                v.len(),
                self.n_nodes()
            )));
        }
        Ok(())
    }

    /// Mass-weighted inner product.
    pub fn inner(&self, v: &[f64], w: &[f64]) -> f64 {
        self.mass.iter().zip(v).zip(w).map(|((m, a), b)| m * a * b).sum()
    }

    pub fn l2(&self, v: &[f64]) -> Result<f64> {
        self.check_len(v)?;
        Ok(self.inner(v, v).sqrt())
    }

    /// `sqrt(v^T K v)` with the unconstrained stiffness, i.e. the L2 norm of
    /// the gradient of the piecewise-linear interpolant.
    pub fn v_seminorm(&self, v: &[f64]) -> Result<f64> {
        self.check_len(v)?;
        let s: f64 = v.windows(2).map(|p| (p[1] - p[0]).powi(2) / self.h).sum();
        Ok(s.sqrt())
    }

    pub fn v_norm(&self, v: &[f64]) -> Result<f64> {
        let l2 = self.l2(v)?;
        let semi = self.v_seminorm(v)?;
        Ok((l2 * l2 + semi * semi).sqrt())
    }

    pub fn norms(&self, v: &[f64]) -> Result<FieldNorms> {
        let l2 = self.l2(v)?;
        let v_seminorm = self.v_seminorm(v)?;
        Ok(FieldNorms {
            l2,
            v_seminorm,
            v_norm: (l2 * l2 + v_seminorm * v_seminorm).sqrt(),
            linf: v.iter().fold(0.0, |m, x| m.max(x.abs())),
        })
    }

    /// Time norms use the left-endpoint rectangle rule: the last field only
    /// enters the maxima.
    pub fn trajectory_norms(&self, fields: &[Vec<f64>], dt: f64) -> Result<TrajectoryNorms> {
        if dt.is_nan() || dt <= 0.0 {
            return Err(Error::Parameter(format!("time step {dt} must be positive")));
        }
        let mut out = TrajectoryNorms {
            l2_q: 0.0,
            l2_t_v: 0.0,
            linf_t_v: 0.0,
            linf_q: 0.0,
        };
        let last = fields.len().saturating_sub(1);
        for (n, v) in fields.iter().enumerate() {
            let f = self.norms(v)?;
            if n < last {
                out.l2_q += dt * f.l2 * f.l2;
                out.l2_t_v += dt * f.v_norm * f.v_norm;
            }
            out.linf_t_v = out.linf_t_v.max(f.v_norm);
            out.linf_q = out.linf_q.max(f.linf);
        }
        out.l2_q = out.l2_q.sqrt();
        out.l2_t_v = out.l2_t_v.sqrt();
        Ok(out)
    }

    /// `L2(Q)` norm of the difference of two trajectories.
    pub fn l2_q_distance(&self, a: &[Vec<f64>], b: &[Vec<f64>], dt: f64) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::Parameter(format!(
                "trajectories have {} and {} time levels",
                a.len(),
                b.len()
            )));
        }
        let diff: Vec<Vec<f64>> = a
            .iter()
            .zip(b)
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect())
            .collect();
        Ok(self.trajectory_norms(&diff, dt)?.l2_q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use BoundaryCondition::*;

    #[test]
    fn three_node_mesh() {
        let m = build_mesh(0.0, 1.0, 3, Dirichlet, Dirichlet).unwrap();
        assert_eq!(m.nodes(), vec![0.0, 0.5, 1.0]);
        assert_eq!(m.h(), 0.5);
        assert!(build_mesh(0.0, 1.0, 2, Neumann, Neumann).is_ok());
        assert!(build_mesh(1.0, 0.0, 3, Neumann, Neumann).is_err());
        assert!(build_mesh(0.0, 1.0, 1, Neumann, Neumann).is_err());
        assert!(build_mesh(0.0, 1.0, 2, Dirichlet, Neumann).is_err());
    }

    #[test]
    fn neumann_assembly() {
        let m = build_mesh(0.0, 1.0, 3, Neumann, Neumann).unwrap();
        let ops = assemble(&m);
        let expected = [[2.0, -2.0, 0.0], [-2.0, 4.0, -2.0], [0.0, -2.0, 2.0]];
        for (i, row) in expected.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert_eq!(ops.stiffness.get(i, j), v, "entry ({i}, {j})");
            }
        }
        assert_eq!(ops.mass, vec![0.25, 0.5, 0.25]);
        assert_eq!(ops.stiffness.mul_vec(&[1.0, 1.0, 1.0]), vec![0.0, 0.0, 0.0]);
        assert_eq!(ops.free_nodes, vec![0, 1, 2]);
    }

    #[test]
    fn dirichlet_rows_are_constrained() {
        let m = build_mesh(0.0, 1.0, 3, Dirichlet, Neumann).unwrap();
        let ops = assemble(&m);
        assert_eq!(ops.free_nodes, vec![1, 2]);
        assert_eq!(ops.stiffness.get(0, 0), 1.0);
        assert_eq!(ops.stiffness.get(0, 1), 0.0);
        assert_eq!(ops.stiffness.get(1, 0), 0.0);
        assert_eq!(ops.stiffness.get(1, 1), 4.0);
    }

    #[test]
    fn norm_examples() {
        let m = build_mesh(0.0, 1.0, 3, Neumann, Neumann).unwrap();
        let ops = assemble(&m);
        assert_eq!(ops.l2(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
        let semi = ops.v_seminorm(&[0.0, 0.5, 1.0]).unwrap();
        assert!((semi * semi - 1.0).abs() < 1e-15);
        let zero = vec![vec![0.0; 3]; 4];
        let tn = ops.trajectory_norms(&zero, 0.1).unwrap();
        assert_eq!(tn, TrajectoryNorms { l2_q: 0.0, l2_t_v: 0.0, linf_t_v: 0.0, linf_q: 0.0 });
        assert!(ops.l2(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn quadratic_form_matches_seminorm() {
        let m = build_mesh(0.0, 2.0, 7, Neumann, Neumann).unwrap();
        let ops = assemble(&m);
        let v: Vec<f64> = m.nodes().iter().map(|x| x.sin() + x * x).collect();
        let kv = ops.stiffness_free.mul_vec(&v);
        let q: f64 = v.iter().zip(&kv).map(|(a, b)| a * b).sum();
        let s = ops.v_seminorm(&v).unwrap();
        assert!((q - s * s).abs() < 1e-12);
    }

    #[test]
    fn constant_trajectory_norm_scales_with_sqrt_t() {
        let m = build_mesh(0.0, 1.0, 11, Neumann, Neumann).unwrap();
        let ops = assemble(&m);
        let v: Vec<f64> = m.nodes().iter().map(|x| 1.0 + x).collect();
        let traj = vec![v.clone(); 21];
        let dt = 0.05;
        let tn = ops.trajectory_norms(&traj, dt).unwrap();
        let expected = (20.0 * dt).sqrt() * ops.l2(&v).unwrap();
        assert!((tn.l2_q - expected).abs() < 1e-14);
    }
}
