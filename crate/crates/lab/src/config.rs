//! Declarative experiment configuration: a TOML file with one table per
//! command, layered over per-command defaults, then command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use dampwave::grid::{min_half_width, GridSpec};
use dampwave::solver::SolverControl;
use dampwave::MomentClass;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Gaussian-derivative data are below `1e-12` beyond this radius.
pub const DATA_RADIUS: f64 = 11.0;
/// Largest spacing used by automatic grids; `|u|^p` is only `C^p` at sign
/// changes and coarser grids leave ringing above the boundary tolerance.
pub const AUTO_SPACING: f64 = 1.0 / 32.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Decay,
    Lifespan,
    Sweep,
    Odi,
    Predict,
    VerifyPropagators,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Decay => "decay",
            Self::Lifespan => "lifespan",
            Self::Sweep => "sweep",
            Self::Odi => "odi",
            Self::Predict => "predict",
            Self::VerifyPropagators => "verify-propagators",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "decay" => Self::Decay,
            "lifespan" => Self::Lifespan,
            "sweep" => Self::Sweep,
            "odi" => Self::Odi,
            "predict" => Self::Predict,
            "verify-propagators" => Self::VerifyPropagators,
            _ => return Err(LabError::Config(format!("unknown command {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams {
    pub half_width: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative slope tolerance for lifespan sweeps and ODI fits.
    pub slope: f64,
    /// Absolute slope tolerance for decay fits.
    pub decay: f64,
    /// Absolute slope tolerance for heat-residual fits.
    pub residual: f64,
    pub r2_min: f64,
    pub lambert_r2: f64,
    /// Local error per solver step.
    pub solver: f64,
    pub dt_max: f64,
    /// Rerun every lifespan at doubled resolution.
    pub refine: bool,
    /// Largest accepted relative change of `T_high` under refinement.
    pub refinement: f64,
    /// Blow-up threshold; `max(1e6 ε, 1e4)` when absent.
    pub threshold: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            slope: 0.2,
            decay: 0.05,
            residual: 0.1,
            r2_min: 0.98,
            lambert_r2: 0.95,
            solver: 1e-7,
            dt_max: 0.5,
            refine: true,
            refinement: 0.02,
            threshold: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayParams {
    pub t_min: f64,
    pub samples: usize,
    pub window: (f64, f64),
    /// Lebesgue index of the decaying norm.
    pub norm_p: f64,
}

impl Default for DecayParams {
    fn default() -> Self {
        Self {
            t_min: 1.0,
            samples: 41,
            window: (1e2, 1e4),
            norm_p: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OdiMode {
    /// Single memory inequality, slope against `-(p-1)/(1-β)`.
    Lemma,
    /// Two-phase corridor inequality, slope against the lifespan law.
    Corridor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OdiParams {
    pub mode: OdiMode,
    pub beta: f64,
    pub gamma: f64,
    pub t0: f64,
    pub dt: f64,
    pub c1: f64,
    pub c2: f64,
    pub m1: f64,
    /// Constant in the phase-1 end time of the corridor mode.
    pub c_tilde: f64,
}

impl Default for OdiParams {
    fn default() -> Self {
        Self {
            mode: OdiMode::Lemma,
            beta: 0.5,
            gamma: 0.0,
            t0: 4.0,
            dt: 0.05,
            c1: 1.0,
            c2: 1.0,
            m1: 1.0,
            c_tilde: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictParams {
    pub c: f64,
    pub big_c: f64,
    pub c_tilde: f64,
}

impl Default for PredictParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            big_c: 1.0,
            c_tilde: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyParams {
    pub times: Vec<f64>,
}

impl Default for VerifyParams {
    fn default() -> Self {
        Self {
            times: vec![1.0, 5.0, 20.0, 100.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    pub p: f64,
    pub class: MomentClass,
    pub eps_list: Vec<f64>,
    /// Sized from the horizon when absent.
    #[serde(default)]
    pub grid: Option<GridParams>,
    pub horizon: f64,
    pub output_dir: PathBuf,
    pub workers: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub decay: DecayParams,
    #[serde(default)]
    pub odi: OdiParams,
    #[serde(default)]
    pub predict: PredictParams,
    #[serde(default)]
    pub verify: VerifyParams,
}

/// `n` points from `hi` down to `hi / 10^{decades}`, evenly spaced in log.
pub fn log_spaced_desc(hi: f64, decades: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| hi * 10f64.powf(-decades * i as f64 / (n - 1).max(1) as f64))
        .collect()
}

impl ExperimentConfig {
    pub fn defaults_for(command: Command) -> Self {
        let base = Self {
            command,
            p: 1.25,
            class: MomentClass::M0ZeroM1Nonzero,
            // half-decade spacing
            eps_list: log_spaced_desc(0.4, 2.0, 5),
            grid: None,
            horizon: 100.0,
            output_dir: PathBuf::from(format!("lab-out/{}", command.as_str())),
            workers: 1,
            tolerances: Tolerances::default(),
            decay: DecayParams::default(),
            odi: OdiParams::default(),
            predict: PredictParams::default(),
            verify: VerifyParams::default(),
        };
        match command {
            Command::Sweep => base,
            Command::Lifespan => Self {
                tolerances: Tolerances {
                    refine: false,
                    ..Tolerances::default()
                },
                ..base
            },
            Command::Decay => Self {
                p: 2.0,
                eps_list: vec![1.0],
                grid: Some(GridParams {
                    half_width: 2000.0,
                    points: 1 << 15,
                }),
                horizon: 1e4,
                ..base
            },
            Command::Odi => Self {
                p: 2.0,
                eps_list: log_spaced_desc(10f64.powf(-1.5), 1.5, 5),
                horizon: 1e7,
                tolerances: Tolerances {
                    slope: 0.1,
                    ..Tolerances::default()
                },
                ..base
            },
            Command::Predict => Self {
                p: 1.5,
                eps_list: vec![0.1, 0.01, 0.001],
                ..base
            },
            Command::VerifyPropagators => Self {
                p: 2.0,
                eps_list: vec![1.0],
                grid: Some(GridParams {
                    half_width: 200.0,
                    points: 4096,
                }),
                ..base
            },
        }
    }

    /// Defaults for `command`, overlaid with the tables of a TOML document.
    pub fn from_toml_str(command: Option<Command>, text: &str) -> Result<Self> {
        let file: toml::Table = text.parse()?;
        let command = match (command, file.get("command")) {
            (Some(c), _) => c,
            (None, Some(toml::Value::String(s))) => s.parse()?,
            (None, Some(_)) => return Err(LabError::Config("command must be a string".into())),
            (None, None) => return Err(LabError::Config("no command given".into())),
        };
        let mut merged = toml::Table::try_from(Self::defaults_for(command))?;
        merge(&mut merged, file);
        merged.insert("command".into(), toml::Value::String(command.as_str().into()));
        let cfg: Self = merged.try_into()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(command: Option<Command>, path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::from_toml_str(command, &std::fs::read_to_string(p)?),
            None => {
                let command = command.ok_or_else(|| LabError::Config("no command given".into()))?;
                let cfg = Self::defaults_for(command);
                cfg.validate()?;
                Ok(cfg)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps_list.is_empty() {
            return Err(LabError::Config("eps_list is empty".into()));
        }
        if self.eps_list.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(LabError::Config("eps_list entries must be positive".into()));
        }
        if self.eps_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(LabError::Config("eps_list must be sorted in descending order".into()));
        }
        if !(self.p > 1.0 && self.p <= 3.0) {
            return Err(LabError::Config(format!("p = {} outside (1, 3]", self.p)));
        }
        if self.workers == 0 {
            return Err(LabError::Config("workers must be positive".into()));
        }
        if !(self.horizon > 0.0) {
            return Err(LabError::Config("horizon must be positive".into()));
        }
        if let Some(g) = self.grid {
            GridSpec::new(g.half_width, g.points)?;
        }
        Ok(())
    }

    /// The configured grid, or one sized for the horizon.
    pub fn grid_spec(&self) -> Result<GridSpec> {
        Ok(match self.grid {
            Some(g) => GridSpec::new(g.half_width, g.points)?,
            None => auto_grid(self.horizon)?,
        })
    }

    /// Same configuration with the grid made explicit.
    pub fn resolved(&self) -> Result<Self> {
        let spec = self.grid_spec()?;
        Ok(Self {
            grid: Some(GridParams {
                half_width: spec.half_width(),
                points: spec.points(),
            }),
            ..self.clone()
        })
    }

    pub fn solver_control(&self) -> SolverControl {
        SolverControl {
            horizon: self.horizon,
            tol: self.tolerances.solver,
            dt_max: self.tolerances.dt_max,
            threshold: self.tolerances.threshold,
            ..SolverControl::default()
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}

/// Half-width from the truncation rule, rounded up to a multiple of 8, with
/// spacing at most [`AUTO_SPACING`].
pub fn auto_grid(horizon: f64) -> Result<GridSpec> {
    let l = (min_half_width(horizon, DATA_RADIUS) / 8.0).ceil() * 8.0;
    let n = ((2.0 * l / AUTO_SPACING).ceil() as usize).next_power_of_two().max(16);
    Ok(GridSpec::new(l, n)?)
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_overrides_defaults() {
        let cfg = ExperimentConfig::from_toml_str(
            None,
            "command = \"sweep\"\np = 1.5\n[tolerances]\nslope = 0.3\n",
        )
        .unwrap();
        assert_eq!(cfg.command, Command::Sweep);
        assert_eq!(cfg.p, 1.5);
        assert_eq!(cfg.tolerances.slope, 0.3);
        assert_eq!(cfg.tolerances.solver, Tolerances::default().solver);
        assert_eq!(cfg.eps_list.len(), 5);
    }

    #[test]
    fn rejects_bad_lists_and_exponents() {
        let bad = |body: &str| ExperimentConfig::from_toml_str(Some(Command::Sweep), body).is_err();
        assert!(bad("eps_list = []"));
        assert!(bad("eps_list = [0.1, 0.2]"));
        assert!(bad("eps_list = [0.2, -0.1]"));
        assert!(bad("p = 3.5"));
        assert!(bad("p = 1.0"));
        assert!(bad("workers = 0"));
        assert!(bad("unknown_key = 1"));
        assert!(!bad("eps_list = [0.2, 0.1]"));
    }

    #[test]
    fn round_trips_through_toml() {
        for c in [Command::Decay, Command::Sweep, Command::Odi, Command::Predict] {
            let cfg = ExperimentConfig::defaults_for(c).resolved().unwrap();
            let text = cfg.to_toml_string().unwrap();
            let back = ExperimentConfig::from_toml_str(None, &text).unwrap();
            assert_eq!(back, cfg);
        }
    }

    #[test]
    fn auto_grid_obeys_truncation_rule() {
        let g = auto_grid(60.0).unwrap();
        assert!(g.half_width() >= 10.5 * 60f64.sqrt() + DATA_RADIUS);
        assert!(g.spacing() <= AUTO_SPACING);
    }
}
