//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comment
//! scenario = melting_bar
//! mode = sweep
//! eps_list = 0.2, 0.1, 0.05, 0.025
//! ```

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graphs::PsiPreset;
use crate::mesh::BoundaryCondition;
use crate::relaxed::{DtPolicy, RelaxedConfig, DEFAULT_INNER_MAX, DEFAULT_INNER_TOL};
use crate::scenarios::{ScenarioName, ScenarioParams};
use crate::stefan::StefanConfig;

pub const DEFAULT_EPS_LIST: [f64; 5] = [0.2, 0.1, 0.05, 0.025, 0.0125];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    RunRelaxed,
    RunStefan,
    Sweep,
    CheckEstimates,
    Compare,
    Contdep,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::RunRelaxed,
        Mode::RunStefan,
        Mode::Sweep,
        Mode::CheckEstimates,
        Mode::Compare,
        Mode::Contdep,
    ];

    fn needs_eps(self) -> bool {
        matches!(self, Mode::RunRelaxed | Mode::Compare | Mode::Contdep)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::RunRelaxed => "run-relaxed",
            Mode::RunStefan => "run-stefan",
            Mode::Sweep => "sweep",
            Mode::CheckEstimates => "check-estimates",
            Mode::Compare => "compare",
            Mode::Contdep => "contdep",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.to_string() == s.trim())
            .ok_or_else(|| format!("unknown mode `{}`", s.trim()))
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub mode: Option<Mode>,
    pub scenario: ScenarioParams,
    pub eps: Option<f64>,
    pub eps_list: Vec<f64>,
    pub deltas: Vec<f64>,
    pub inner_tol: f64,
    pub inner_max: usize,
    pub dt_policy: DtPolicy,
    pub stefan: StefanConfig,
    pub out: PathBuf,
    pub verify: bool,
    pub record_timing: bool,
}

/// Command-line overrides applied on top of the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub out: Option<PathBuf>,
    pub eps: Option<f64>,
    pub dt: Option<f64>,
    pub nodes: Option<usize>,
}

const KEYS: [&str; 23] = [
    "scenario",
    "mode",
    "a",
    "b",
    "nodes",
    "left_bc",
    "right_bc",
    "T",
    "n_steps",
    "dt",
    "psi",
    "eps",
    "eps_list",
    "delta",
    "inner_tol",
    "inner_max",
    "dt_policy",
    "stefan_tol",
    "stefan_max",
    "stefan_method",
    "out",
    "verify",
    "record_timing",
];

fn parse_value<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| Error::Parse {
        line,
        key: key.to_string(),
        message: format!("cannot parse `{value}`: {e}"),
    })
}

fn parse_list(line: usize, key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|s| parse_value::<f64>(line, key, s.trim()))
        .collect()
}

fn check(ok: bool, line: usize, key: &str, message: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Parse {
            line,
            key: key.to_string(),
            message: message.into(),
        })
    }
}

/// Number of steps for a requested step size, which must divide `T`.
pub fn steps_for_dt(t_final: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Validation(format!("dt = {dt} must be positive")));
    }
    let n = (t_final / dt).round();
    if n < 1.0 || ((n * dt - t_final) / t_final).abs() > 1e-9 {
        return Err(Error::Validation(format!("dt = {dt} does not divide T = {t_final}")));
    }
    Ok(n as usize)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut entries: Vec<(usize, String, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::Parse {
                line,
                key: content.to_string(),
                message: "expected `key = value`".into(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        check(KEYS.contains(&key), line, key, "unknown key")?;
        check(!value.is_empty(), line, key, "empty value")?;
        if let Some((first, ..)) = entries.iter().find(|(_, k, _)| k == key) {
            return Err(Error::Parse {
                line,
                key: key.to_string(),
                message: format!("duplicate key (first set on line {first})"),
            });
        }
        entries.push((line, key.to_string(), value.to_string()));
    }

    let Some((line, _, name)) = entries.iter().find(|(_, k, _)| k == "scenario") else {
        return Err(Error::Parse {
            line: 0,
            key: "scenario".into(),
            message: "missing required key".into(),
        });
    };
    let name: ScenarioName = parse_value(*line, "scenario", name)?;
    let mut cfg = ExperimentConfig {
        mode: None,
        scenario: name.defaults(),
        eps: None,
        eps_list: DEFAULT_EPS_LIST.to_vec(),
        deltas: vec![1e-3],
        inner_tol: DEFAULT_INNER_TOL,
        inner_max: DEFAULT_INNER_MAX,
        dt_policy: DtPolicy::HalveOnStall,
        stefan: StefanConfig::default(),
        out: PathBuf::from("results"),
        verify: false,
        record_timing: false,
    };
    let mut dt = None;

    for (line, key, value) in &entries {
        let (line, key, value) = (*line, key.as_str(), value.as_str());
        let p = &mut cfg.scenario;
        match key {
            "scenario" => {}
            "mode" => cfg.mode = Some(parse_value(line, key, value)?),
            "a" => p.a = parse_value(line, key, value)?,
            "b" => p.b = parse_value(line, key, value)?,
            "nodes" => {
                p.nodes = parse_value(line, key, value)?;
                check(p.nodes >= 2, line, key, "need at least 2 nodes")?;
            }
            "left_bc" => p.left_bc = parse_value::<BoundaryCondition>(line, key, value)?,
            "right_bc" => p.right_bc = parse_value::<BoundaryCondition>(line, key, value)?,
            "T" => {
                p.t_final = parse_value(line, key, value)?;
                check(p.t_final > 0.0 && p.t_final.is_finite(), line, key, "T must be positive")?;
            }
            "n_steps" => {
                p.n_steps = parse_value(line, key, value)?;
                check(p.n_steps >= 1, line, key, "need at least one step")?;
            }
            "dt" => dt = Some((line, parse_value::<f64>(line, key, value)?)),
            "psi" => p.psi = parse_value::<PsiPreset>(line, key, value)?,
            "eps" => {
                let eps: f64 = parse_value(line, key, value)?;
                check(eps > 0.0 && eps <= 1.0, line, key, format!("eps = {eps} must lie in (0, 1]"))?;
                cfg.eps = Some(eps);
            }
            "eps_list" => {
                let list = parse_list(line, key, value)?;
                check(list.iter().all(|&e| e > 0.0 && e < 1.0), line, key, "every eps must lie in (0, 1)")?;
                check(list.windows(2).all(|w| w[1] < w[0]), line, key, "eps_list must be strictly decreasing")?;
                cfg.eps_list = list;
            }
            "delta" => {
                let list = parse_list(line, key, value)?;
                check(list.iter().all(|d| d.is_finite()), line, key, "non-finite perturbation")?;
                cfg.deltas = list;
            }
            "inner_tol" => {
                cfg.inner_tol = parse_value(line, key, value)?;
                check(cfg.inner_tol > 0.0, line, key, "tolerance must be positive")?;
            }
            "inner_max" => {
                cfg.inner_max = parse_value(line, key, value)?;
                check(cfg.inner_max >= 1, line, key, "need at least one iteration")?;
            }
            "dt_policy" => cfg.dt_policy = parse_value(line, key, value)?,
            "stefan_tol" => {
                cfg.stefan.tol = parse_value(line, key, value)?;
                check(cfg.stefan.tol > 0.0, line, key, "tolerance must be positive")?;
            }
            "stefan_max" => {
                cfg.stefan.max_sweeps = parse_value(line, key, value)?;
                check(cfg.stefan.max_sweeps >= 1, line, key, "need at least one sweep")?;
            }
            "stefan_method" => cfg.stefan.method = parse_value(line, key, value)?,
            "out" => cfg.out = PathBuf::from(value),
            "verify" => cfg.verify = parse_value(line, key, value)?,
            "record_timing" => cfg.record_timing = parse_value(line, key, value)?,
            _ => unreachable!("key list checked above"),
        }
    }
    check(
        cfg.scenario.a < cfg.scenario.b,
        0,
        "a",
        format!("a = {} must be smaller than b = {}", cfg.scenario.a, cfg.scenario.b),
    )?;
    if let Some((line, dt)) = dt {
        cfg.scenario.n_steps = steps_for_dt(cfg.scenario.t_final, dt).map_err(|e| Error::Parse {
            line,
            key: "dt".into(),
            message: e.to_string(),
        })?;
    }
    cfg.stefan.verify = cfg.verify;
    if let Some(mode) = cfg.mode {
        cfg.check_mode(mode)?;
    }
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(m) = o.mode {
            self.mode = Some(m);
        }
        if let Some(out) = &o.out {
            self.out.clone_from(out);
        }
        if let Some(eps) = o.eps {
            if !(eps > 0.0 && eps <= 1.0) {
                return Err(Error::Validation(format!("--eps {eps} must lie in (0, 1]")));
            }
            self.eps = Some(eps);
        }
        if let Some(nodes) = o.nodes {
            if nodes < 2 {
                return Err(Error::Validation("--nodes must be at least 2".into()));
            }
            self.scenario.nodes = nodes;
        }
        if let Some(dt) = o.dt {
            self.scenario.n_steps = steps_for_dt(self.scenario.t_final, dt)?;
        }
        if let Some(mode) = self.mode {
            self.check_mode(mode)?;
        }
        Ok(())
    }

    fn check_mode(&self, mode: Mode) -> Result<()> {
        if mode.needs_eps() && self.eps.is_none() {
            return Err(Error::Validation(format!("mode {mode} needs `eps`")));
        }
        Ok(())
    }

    pub fn mode(&self) -> Result<Mode> {
        self.mode.ok_or_else(|| Error::Validation("no mode given".into()))
    }

    pub fn relaxed(&self, eps: f64) -> Result<RelaxedConfig> {
        let cfg = RelaxedConfig {
            eps,
            inner_tol: self.inner_tol,
            inner_max: self.inner_max,
            dt_policy: self.dt_policy,
            verify: self.verify,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config("scenario = ode_decay\nmode = run-relaxed\neps = 1.0\n").unwrap();
        assert_eq!(cfg.mode, Some(Mode::RunRelaxed));
        assert_eq!(cfg.eps, Some(1.0));
        assert_eq!(cfg.inner_tol, 1e-10);
        assert_eq!(cfg.inner_max, 100);
        assert_eq!(cfg.scenario.n_steps, 1000);
        assert_eq!(cfg.eps_list, DEFAULT_EPS_LIST.to_vec());
    }

    #[test]
    fn eps_above_one_is_rejected() {
        let err = parse_config("scenario = ode_decay\neps = 1.5").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, ref key, .. } if key == "eps"), "{err}");
    }

    #[test]
    fn missing_scenario() {
        let err = parse_config("mode = sweep\n").unwrap_err();
        assert!(matches!(err, Error::Parse { ref key, .. } if key == "scenario"));
    }

    #[test]
    fn unknown_and_duplicate_keys() {
        let err = parse_config("scenario = ode_decay\ncolour = red").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_config("scenario = ode_decay\neps = 0.1\neps = 0.2").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        let err = parse_config("scenario = ode_decay\npsi = cubic").unwrap_err();
        assert!(matches!(err, Error::Parse { ref key, .. } if key == "psi"));
    }

    #[test]
    fn comments_lists_and_dt() {
        let text = "# sweep\nscenario = melting_bar # inline\neps_list = 0.2, 0.1\ndt = 0.01\npsi = melting(p = tanh)\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.eps_list, vec![0.2, 0.1]);
        assert_eq!(cfg.scenario.n_steps, 50);
        assert_eq!(cfg.scenario.psi, PsiPreset::MeltingTanh);
        assert!(parse_config("scenario = melting_bar\neps_list = 0.1, 0.2").is_err());
        assert!(parse_config("scenario = melting_bar\ndt = 0.3").is_err());
    }

    #[test]
    fn overrides() {
        let mut cfg = parse_config("scenario = melting_bar").unwrap();
        cfg.apply(&Overrides {
            mode: Some(Mode::RunRelaxed),
            eps: Some(0.05),
            nodes: Some(51),
            dt: Some(0.01),
            out: None,
        })
        .unwrap();
        assert_eq!(cfg.scenario.nodes, 51);
        assert_eq!(cfg.scenario.n_steps, 50);
        assert_eq!(cfg.eps, Some(0.05));
        let mut cfg = parse_config("scenario = melting_bar").unwrap();
        assert!(cfg.apply(&Overrides { mode: Some(Mode::Compare), ..Overrides::default() }).is_err());
    }
}
