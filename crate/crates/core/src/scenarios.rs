//! Shipped test problems.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graphs::PsiPreset;
use crate::mesh::{build_mesh, BoundaryCondition, DomainMesh};
use crate::problem::{ProblemData, TimeField};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioName {
    /// `eps chi' = -chi` with no diffusion: spatially constant data on a
    /// two-node Neumann mesh.
    OdeDecay,
    /// Mushy equilibrium `e = 0.5` under the sign graph.
    MushyPlateau,
    /// Dirichlet bar with affine lifting and a localized heat source.
    MeltingBar,
    /// Liquid bar with insulated ends frozen by a negative source.
    NeumannFreeze,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 4] = [
        ScenarioName::OdeDecay,
        ScenarioName::MushyPlateau,
        ScenarioName::MeltingBar,
        ScenarioName::NeumannFreeze,
    ];

    pub fn defaults(self) -> ScenarioParams {
        use BoundaryCondition::*;
        let (nodes, bc, psi, t_final, n_steps) = match self {
            ScenarioName::OdeDecay => (2, (Neumann, Neumann), PsiPreset::Zero, 1.0, 1000),
            ScenarioName::MushyPlateau => (2, (Neumann, Neumann), PsiPreset::Sign, 1.0, 100),
            ScenarioName::MeltingBar => (201, (Dirichlet, Dirichlet), PsiPreset::MeltingClamp, 0.5, 500),
            ScenarioName::NeumannFreeze => (201, (Neumann, Neumann), PsiPreset::MeltingTanh, 0.5, 500),
        };
        ScenarioParams {
            name: self,
            a: 0.0,
            b: 1.0,
            nodes,
            left_bc: bc.0,
            right_bc: bc.1,
            psi,
            t_final,
            n_steps,
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScenarioName::OdeDecay => "ode_decay",
            ScenarioName::MushyPlateau => "mushy_plateau",
            ScenarioName::MeltingBar => "melting_bar",
            ScenarioName::NeumannFreeze => "neumann_freeze",
        })
    }
}

impl FromStr for ScenarioName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        ScenarioName::ALL
            .into_iter()
            .find(|n| n.to_string() == s.trim())
            .ok_or_else(|| format!("unknown scenario `{}`", s.trim()))
    }
}

/// Mesh, time grid and relaxation law of a scenario; every field can be
/// overridden before [`ScenarioParams::build`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScenarioParams {
    pub name: ScenarioName,
    pub a: f64,
    pub b: f64,
    pub nodes: usize,
    pub left_bc: BoundaryCondition,
    pub right_bc: BoundaryCondition,
    pub psi: PsiPreset,
    pub t_final: f64,
    pub n_steps: usize,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub params: ScenarioParams,
    pub mesh: DomainMesh,
    pub data: ProblemData,
}

fn bump(x: f64, center: f64, width: f64) -> f64 {
    (-((x - center) / width).powi(2)).exp()
}

impl ScenarioParams {
    pub fn build(&self) -> Result<Scenario> {
        let mesh = build_mesh(self.a, self.b, self.nodes, self.left_bc, self.right_bc)?;
        let n = mesh.n_nodes();
        // position in the unit interval
        let xs: Vec<f64> = mesh.nodes().iter().map(|x| (x - self.a) / (self.b - self.a)).collect();
        let (theta0, chi0, f, u) = match self.name {
            ScenarioName::OdeDecay => (vec![0.0; n], vec![1.0; n], vec![0.0; n], vec![0.0; n]),
            ScenarioName::MushyPlateau => (vec![0.0; n], vec![0.5; n], vec![0.0; n], vec![0.0; n]),
            ScenarioName::MeltingBar => {
                let u: Vec<f64> = xs.iter().map(|x| 1.0 - 2.0 * x).collect();
                let chi0 = u.iter().map(|&v| if v > 0.0 { 1.0 } else if v < 0.0 { -1.0 } else { 0.0 }).collect();
                let f = xs.iter().map(|&x| 20.0 * bump(x, 0.7, 0.05)).collect();
                (vec![0.0; n], chi0, f, u)
            }
            ScenarioName::NeumannFreeze => {
                let f = xs.iter().map(|&x| -6.0 * bump(x, 0.3, 0.1)).collect();
                (vec![0.1; n], vec![1.0; n], f, vec![0.0; n])
            }
        };
        let data = ProblemData {
            f: TimeField::Stationary(f),
            u: TimeField::Stationary(u),
            theta0,
            chi0,
            t_final: self.t_final,
            n_steps: self.n_steps,
            psi: self.psi.build(),
        };
        data.validate(&mesh)?;
        Ok(Scenario {
            params: *self,
            mesh,
            data,
        })
    }
}

pub fn build_scenario(name: &str) -> Result<Scenario> {
    let name: ScenarioName = name.parse().map_err(Error::Validation)?;
    name.defaults().build()
}
