use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::diagnostics::EnergyConfig;
use crate::dynamics::{DynamicsParams, Regime, ScheduleSpec};
use crate::error::{Error, Result};
use crate::integrator::{ErrorScale, IntegratorConfig};
use crate::problems::{default_offset, Corpus, Objective, ObjectiveDef, Point};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_TAIL_FRACTION: f64 = 0.3;
pub const DEFAULT_T_END: f64 = 1e4;
/// Absolute tolerance of the built-in run configs. Trajectories on `quad_pd_5`
/// decay far below any fixed absolute floor, so their error control is
/// relative to the state norm.
pub const BUILTIN_ABS_TOL: f64 = 1e-300;

fn schema_version() -> u32 {
    CONFIG_SCHEMA_VERSION
}

fn tail_fraction() -> f64 {
    DEFAULT_TAIL_FRACTION
}

fn t_end() -> f64 {
    DEFAULT_T_END
}

/// One continuous run, as read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub objective_id: String,
    /// Inline definition; takes the place of a corpus lookup when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<ObjectiveDef>,
    pub dynamics: DynamicsParams,
    pub schedule: ScheduleSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<Vec<f64>>,
    #[serde(default = "t_end")]
    pub t_end: f64,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<EnergyConfig>,
    #[serde(default = "tail_fraction")]
    pub tail_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<PathBuf>,
}

fn field(path: &str, message: impl Into<String>) -> Error {
    Error::Config { path: path.to_string(), message: message.into() }
}

/// Deserializes `text`, reporting failures with the JSON path of the offending field.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { "<root>".to_string() } else { path };
        field(&path, e.into_inner().to_string())
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_json(&text).map_err(|e| in_file(e, path))
}

/// Prefixes the field path of a config error with the file it came from.
pub fn in_file(e: Error, file: &Path) -> Error {
    match e {
        Error::Config { path, message } => Error::Config { path: format!("{}: {path}", file.display()), message },
        other => other,
    }
}

/// Parameters used by the per-regime default runs: `α = 2, q = ½, γ = 1, β = 0,
/// a = 1`, and `p = 1.8`, `0.9` or `1.5` for the weak, strong and critical regimes.
pub fn regime_default_params() -> DynamicsParams {
    DynamicsParams::new(2.0, 0.5, 1.0, 0.0, 1.0).expect("valid defaults")
}

pub fn regime_default_p(regime: Regime) -> Option<f64> {
    match regime {
        Regime::Weak => Some(1.8),
        Regime::Strong => Some(0.9),
        Regime::Critical => Some(1.5),
        Regime::Outside => None,
    }
}

impl RunConfig {
    pub fn new(objective_id: &str, dynamics: DynamicsParams, schedule: ScheduleSpec, t_end: f64) -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            objective_id: objective_id.to_string(),
            objective: None,
            dynamics,
            schedule,
            x0: None,
            v0: None,
            t_end,
            integrator: IntegratorConfig {
                abs_tol: BUILTIN_ABS_TOL,
                error_scale: ErrorScale::StateNorm,
                ..IntegratorConfig::default()
            },
            energy: None,
            tail_fraction: DEFAULT_TAIL_FRACTION,
            outputs: None,
        }
    }

    /// Default run of `objective_id` in `regime`, started at `x* + offset` at rest.
    pub fn regime_default(objective_id: &str, regime: Regime) -> Result<Self> {
        let p = regime_default_p(regime)
            .ok_or_else(|| Error::InvalidInput("there is no default run outside the classified regimes".into()))?;
        Ok(Self::new(objective_id, regime_default_params(), ScheduleSpec::power(1.0, p), DEFAULT_T_END))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// The objective this config refers to.
    pub fn resolve_objective(&self, corpus: &Corpus) -> Result<Objective> {
        match &self.objective {
            Some(def) => Objective::from_def(self.objective_id.clone(), def.clone())
                .map_err(|e| field("objective", e.to_string())),
            None => corpus.get(&self.objective_id).cloned().map_err(|e| field("objective_id", e.to_string())),
        }
    }

    pub fn energy_config(&self) -> EnergyConfig {
        self.energy.unwrap_or_else(|| EnergyConfig::defaults(self.dynamics.alpha()))
    }

    /// Initial position and velocity for `obj`.
    pub fn initial_state(&self, obj: &Objective) -> Result<(Point, Point)> {
        let dim = obj.dim();
        let vec = |name: &str, v: &Option<Vec<f64>>, default: Point| -> Result<Point> {
            match v {
                None => Ok(default),
                Some(v) if v.len() != dim => Err(field(name, format!("expected {dim} entries, got {}", v.len()))),
                Some(v) if v.iter().any(|x| !x.is_finite()) => Err(field(name, "entries must be finite")),
                Some(v) => Ok(Point::from_column_slice(v)),
            }
        };
        let x0 = vec("x0", &self.x0, obj.minimal_norm_minimizer() + default_offset(dim))?;
        let v0 = vec("v0", &self.v0, Point::zeros(dim))?;
        Ok((x0, v0))
    }

    /// Checks everything that does not need the integrator.
    pub fn validate(&self, corpus: &Corpus) -> Result<Objective> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(field(
                "schema_version",
                format!("unsupported version {}, expected {CONFIG_SCHEMA_VERSION}", self.schema_version),
            ));
        }
        let obj = self.resolve_objective(corpus)?;
        self.schedule.build().map_err(|e| field("schedule", e.to_string()))?;
        if !(self.t_end > self.dynamics.t0() && self.t_end.is_finite()) {
            return Err(field("t_end", format!("must be finite and exceed t0 = {}", self.dynamics.t0())));
        }
        self.integrator.validate().map_err(|e| field("integrator", e.to_string()))?;
        self.energy_config()
            .validate(self.dynamics.alpha(), self.dynamics.gamma())
            .map_err(|e| field("energy", e.to_string()))?;
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(field("tail_fraction", format!("must lie in (0, 1], got {}", self.tail_fraction)));
        }
        self.initial_state(&obj)?;
        Ok(obj)
    }
}

fn iterations() -> u64 {
    100_000
}

fn history_points() -> usize {
    200
}

fn n0() -> u64 {
    1
}

/// A run of the discrete algorithm. Keys mirror the algorithm parameters;
/// `s` defaults to `1/(2L̂)` estimated at the starting point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub objective_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<ObjectiveDef>,
    pub alpha: f64,
    pub q: f64,
    pub gamma: f64,
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    pub a: f64,
    pub p: f64,
    #[serde(default = "n0")]
    pub n0: u64,
    #[serde(default = "iterations")]
    pub iterations: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x1: Option<Vec<f64>>,
    #[serde(default = "history_points")]
    pub history_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<PathBuf>,
}

impl DiscreteConfig {
    /// `α = 2, q = ½, γ = 1, β = 0, p = 0.9, a = 0.1`, `N = 10⁵`, default stepsize.
    pub fn exploratory(objective_id: &str) -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            objective_id: objective_id.to_string(),
            objective: None,
            alpha: 2.0,
            q: 0.5,
            gamma: 1.0,
            beta: 0.0,
            s: None,
            a: 0.1,
            p: 0.9,
            n0: 1,
            iterations: iterations(),
            x0: None,
            x1: None,
            history_points: history_points(),
            outputs: None,
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn resolve_objective(&self, corpus: &Corpus) -> Result<Objective> {
        match &self.objective {
            Some(def) => Objective::from_def(self.objective_id.clone(), def.clone())
                .map_err(|e| field("objective", e.to_string())),
            None => corpus.get(&self.objective_id).cloned().map_err(|e| field("objective_id", e.to_string())),
        }
    }

    /// `(x_{n0−1}, x_{n0})`; both default to `x* + offset`.
    pub fn initial_pair(&self, obj: &Objective) -> Result<(Point, Point)> {
        let dim = obj.dim();
        let default = obj.minimal_norm_minimizer() + default_offset(dim);
        let vec = |name: &str, v: &Option<Vec<f64>>, default: &Point| -> Result<Point> {
            match v {
                None => Ok(default.clone()),
                Some(v) if v.len() != dim => Err(field(name, format!("expected {dim} entries, got {}", v.len()))),
                Some(v) => Ok(Point::from_column_slice(v)),
            }
        };
        let x0 = vec("x0", &self.x0, &default)?;
        let x1 = vec("x1", &self.x1, &x0)?;
        Ok((x0, x1))
    }
}
