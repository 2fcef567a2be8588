//! Time integration of the first-order system over `[t0, T]`.
//!
//! [`integrate`] is the production path (adaptive Dormand–Prince 5(4) with
//! dense output onto a log-spaced sample grid); [`reference_integrate`] is a
//! fixed-step classical RK4 kept as an independent oracle.

mod dopri;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Dynamics, DynamicsParams, State};
use crate::error::{check_dim, Error, Result};
use crate::problems::Point;

pub const DEFAULT_SAMPLE_COUNT: usize = 200;

/// How the local error of each component is weighed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorScale {
    /// `abs_tol + rel_tol·|y_i|` per component.
    #[default]
    Componentwise,
    /// `abs_tol + rel_tol·‖y‖_∞` for every component: relative to the whole
    /// state, so trajectories decaying to zero keep their relative accuracy
    /// without small components forcing tiny steps.
    StateNorm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub error_scale: ErrorScale,
    /// First trial step; chosen automatically when absent.
    pub initial_step: Option<f64>,
    /// Unbounded when absent from JSON.
    #[serde(skip_serializing_if = "is_unbounded")]
    pub max_step: f64,
    /// Caps the step at `fraction · t`; the coefficients vary on the scale of t.
    pub max_step_fraction: Option<f64>,
    /// Explicit sample times; default is `sample_count` log-spaced points on `[t0, T]`.
    pub sample_times: Option<Vec<f64>>,
    pub sample_count: usize,
    pub max_steps: usize,
}

fn is_unbounded(v: &f64) -> bool {
    *v == f64::INFINITY
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            error_scale: ErrorScale::Componentwise,
            initial_step: None,
            max_step: f64::INFINITY,
            max_step_fraction: Some(0.1),
            sample_times: None,
            sample_count: DEFAULT_SAMPLE_COUNT,
            max_steps: 50_000_000,
        }
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let mut g: Vec<f64> = (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect();
            g[0] = lo;
            g[n - 1] = hi;
            g
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad("integrator tolerances must be positive");
        }
        if let Some(h) = self.initial_step {
            if !(h > 0.0) {
                return bad("initial_step must be positive");
            }
        }
        if !(self.max_step > 0.0) {
            return bad("max_step must be positive");
        }
        if let Some(f) = self.max_step_fraction {
            if !(f > 0.0) {
                return bad("max_step_fraction must be positive");
            }
        }
        if self.sample_times.is_none() && self.sample_count < 2 {
            return bad("sample_count must be at least 2");
        }
        Ok(())
    }

    /// The effective sample grid on `[t0, t_end]`.
    pub fn sample_grid(&self, t0: f64, t_end: f64) -> Result<Vec<f64>> {
        match &self.sample_times {
            None => Ok(log_grid(t0, t_end, self.sample_count)),
            Some(ts) => {
                if ts.is_empty() {
                    return Err(Error::InvalidInput("sample_times must not be empty".into()));
                }
                if ts.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidInput("sample_times must be strictly increasing".into()));
                }
                if ts[0] < t0 || ts[ts.len() - 1] > t_end {
                    return Err(Error::InvalidInput(format!("sample_times must lie in [{t0}, {t_end}]")));
                }
                Ok(ts.clone())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub steps: u64,
    pub rejections: u64,
    pub gradient_evals: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub objective_id: String,
    pub params: DynamicsParams,
    pub schedule: String,
    pub method: String,
    pub stats: IntegratorStats,
}

/// Samples `(t, x, ẋ)` of a solution on a strictly increasing time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<State>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.x.len())
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> &State {
        self.samples.last().expect("trajectory has samples")
    }

    /// Largest `max(‖Δx‖∞, ‖Δv‖∞)` between two trajectories on the same grid.
    pub fn max_deviation(&self, other: &Trajectory) -> Result<f64> {
        if self.samples.len() != other.samples.len() {
            return Err(Error::InvalidInput("trajectories have different sample counts".into()));
        }
        let mut worst: f64 = 0.0;
        for (a, b) in self.samples.iter().zip(&other.samples) {
            if a.t != b.t {
                return Err(Error::InvalidInput(format!("sample times differ: {} vs {}", a.t, b.t)));
            }
            worst = worst.max((&a.x - &b.x).amax()).max((&a.v - &b.v).amax());
        }
        Ok(worst)
    }
}

fn stack(x: &Point, v: &Point) -> DVector<f64> {
    let d = x.len();
    let mut y = DVector::zeros(2 * d);
    y.rows_mut(0, d).copy_from(x);
    y.rows_mut(d, d).copy_from(v);
    y
}

fn unstack(t: f64, y: &DVector<f64>) -> State {
    let d = y.len() / 2;
    State::new(t, y.rows(0, d).into_owned(), y.rows(d, d).into_owned())
}

fn check_inputs(sys: &Dynamics<'_>, x0: &Point, v0: &Point, t_end: f64) -> Result<()> {
    check_dim(sys.dim(), x0.len())?;
    check_dim(sys.dim(), v0.len())?;
    if !(t_end > sys.params.t0()) {
        return Err(Error::InvalidInput(format!("T = {t_end} must exceed t0 = {}", sys.params.t0())));
    }
    if x0.iter().chain(v0.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("initial data must be finite".into()));
    }
    Ok(())
}

fn meta(sys: &Dynamics<'_>, method: &str, stats: IntegratorStats) -> TrajectoryMeta {
    TrajectoryMeta {
        objective_id: sys.objective.id().to_string(),
        params: sys.params,
        schedule: sys.schedule.describe(),
        method: method.to_string(),
        stats,
    }
}

/// Adaptive integration from `(x0, v0)` at `t0` to `t_end`, sampled on the
/// configured grid.
pub fn integrate(sys: &Dynamics<'_>, x0: &Point, v0: &Point, t_end: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    check_inputs(sys, x0, v0, t_end)?;
    cfg.validate()?;
    let t0 = sys.params.t0();
    let grid = cfg.sample_grid(t0, t_end)?;

    let settings = dopri::Settings {
        rel_tol: cfg.rel_tol,
        abs_tol: cfg.abs_tol,
        error_scale: cfg.error_scale,
        initial_step: cfg.initial_step,
        max_step: cfg.max_step,
        max_step_fraction: cfg.max_step_fraction,
        max_steps: cfg.max_steps,
    };
    let mut counters = dopri::Counters::default();
    let mut samples = Vec::with_capacity(grid.len());
    let mut next = 0;
    let y0 = stack(x0, v0);
    while next < grid.len() && grid[next] <= t0 {
        samples.push(unstack(grid[next], &y0));
        next += 1;
    }
    let f = |t: f64, y: &DVector<f64>| sys.field_stacked(t, y);
    dopri::solve(f, t0, y0, t_end, &settings, &mut counters, |dense| {
        let t_new = dense.t_end();
        while next < grid.len() && grid[next] <= t_new {
            let y = dense.eval(grid[next]);
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { t: grid[next], what: "interpolated state".into() });
            }
            samples.push(unstack(grid[next], &y));
            next += 1;
        }
        Ok(())
    })?;

    let stats = IntegratorStats {
        steps: counters.steps,
        rejections: counters.rejections,
        gradient_evals: counters.evals,
    };
    Ok(Trajectory { samples, meta: meta(sys, "dopri5", stats) })
}

fn rk4_step(sys: &Dynamics<'_>, t: f64, y: &DVector<f64>, h: f64) -> DVector<f64> {
    let k1 = sys.field_stacked(t, y);
    let k2 = sys.field_stacked(t + 0.5 * h, &(y + &k1 * (0.5 * h)));
    let k3 = sys.field_stacked(t + 0.5 * h, &(y + &k2 * (0.5 * h)));
    let k4 = sys.field_stacked(t + h, &(y + &k3 * h));
    y + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0)
}

/// Classical fixed-step RK4, landing exactly on each sample time by
/// shortening the step that would cross it. Requires `h ≤ (T − t0)/10⁴`.
pub fn reference_integrate(
    sys: &Dynamics<'_>,
    x0: &Point,
    v0: &Point,
    t_end: f64,
    h: f64,
    sample_times: &[f64],
) -> Result<Trajectory> {
    check_inputs(sys, x0, v0, t_end)?;
    let t0 = sys.params.t0();
    if !(h > 0.0 && h <= (t_end - t0) / 1e4) {
        return Err(Error::InvalidInput(format!("reference step h = {h} must satisfy 0 < h <= (T - t0)/1e4")));
    }
    let grid = IntegratorConfig { sample_times: Some(sample_times.to_vec()), ..Default::default() }
        .sample_grid(t0, t_end)?;

    let mut stats = IntegratorStats::default();
    let mut samples = Vec::with_capacity(grid.len());
    let mut t = t0;
    let mut y = stack(x0, v0);
    for &ts in &grid {
        while ts - t > 1e-12 * ts.abs().max(1.0) {
            let step = h.min(ts - t);
            y = rk4_step(sys, t, &y, step);
            stats.steps += 1;
            stats.gradient_evals += 4;
            t = if step < h { ts } else { t + step };
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { t, what: "reference state".into() });
            }
        }
        samples.push(unstack(ts, &y));
    }
    Ok(Trajectory { samples, meta: meta(sys, "rk4", stats) })
}
