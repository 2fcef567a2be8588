//! The inertial gradient algorithm with Tikhonov term obtained by explicit
//! discretization of the continuous system,
//!
//! ```text
//! x_{n+1} = x_n + (1 − α/n^q)(x_n − x_{n−1})
//!           − s ∇g(x_n + (γ + β/n^q)(x_n − x_{n−1})) − ε_n x_n,   ε_n = a n^{-p},
//! ```
//!
//! and an algebraic check that one step of it is the finite-difference
//! scheme of the continuous system in disguise.

use serde::{Deserialize, Serialize};

use crate::dynamics::DynamicsParams;
use crate::error::{check_dim, Error, Result};
use crate::integrator::log_grid;
use crate::problems::{Objective, Point};

/// Norm beyond which a run is declared divergent.
pub const DIVERGENCE_NORM: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DiscreteParamsRaw", into = "DiscreteParamsRaw")]
pub struct DiscreteParams {
    alpha: f64,
    q: f64,
    gamma: f64,
    beta: f64,
    s: f64,
    a: f64,
    p: f64,
    n0: u64,
}

fn default_n0() -> u64 {
    1
}

#[derive(Serialize, Deserialize)]
struct DiscreteParamsRaw {
    alpha: f64,
    q: f64,
    gamma: f64,
    beta: f64,
    s: f64,
    a: f64,
    p: f64,
    #[serde(default = "default_n0")]
    n0: u64,
}

impl TryFrom<DiscreteParamsRaw> for DiscreteParams {
    type Error = Error;
    fn try_from(r: DiscreteParamsRaw) -> Result<Self> {
        Self::new(r.alpha, r.q, r.gamma, r.beta, r.s, r.a, r.p, r.n0)
    }
}

impl From<DiscreteParams> for DiscreteParamsRaw {
    fn from(p: DiscreteParams) -> Self {
        Self { alpha: p.alpha, q: p.q, gamma: p.gamma, beta: p.beta, s: p.s, a: p.a, p: p.p, n0: p.n0 }
    }
}

impl DiscreteParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(alpha: f64, q: f64, gamma: f64, beta: f64, s: f64, a: f64, p: f64, n0: u64) -> Result<Self> {
        if n0 == 0 {
            return Err(Error::InvalidInput("n0 must be at least 1".into()));
        }
        // same admissibility as the continuous parameters, with t0 = n0
        DynamicsParams::new(alpha, q, gamma, beta, n0 as f64)?;
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidInput(format!("stepsize s must be positive, got {s}")));
        }
        if !(a > 0.0 && a.is_finite() && p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidInput(format!("schedule a = {a}, p = {p} must be positive")));
        }
        Ok(Self { alpha, q, gamma, beta, s, a, p, n0 })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn stepsize(&self) -> f64 {
        self.s
    }
    pub fn n0(&self) -> u64 {
        self.n0
    }

    pub fn eps(&self, n: u64) -> f64 {
        self.a * (n as f64).powf(-self.p)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterateState {
    pub n: u64,
    pub x_prev: Point,
    pub x_curr: Point,
}

fn raw_step(
    obj: &Objective,
    momentum: f64,
    extrapolation: f64,
    s: f64,
    eps: f64,
    x_prev: &Point,
    x_curr: &Point,
) -> Point {
    let d = x_curr - x_prev;
    let grad = obj.gradient(&(x_curr + &d * extrapolation));
    x_curr + d * momentum - grad * s - x_curr * eps
}

/// `x_{n+1}` from `(x_{n−1}, x_n)`; one gradient evaluation.
pub fn step(params: &DiscreteParams, obj: &Objective, st: &IterateState) -> Result<Point> {
    check_dim(obj.dim(), st.x_prev.len())?;
    check_dim(obj.dim(), st.x_curr.len())?;
    if st.n == 0 {
        return Err(Error::InvalidInput("iteration index must be at least 1".into()));
    }
    let nq = (st.n as f64).powf(params.q);
    let next = raw_step(
        obj,
        1.0 - params.alpha / nq,
        params.gamma + params.beta / nq,
        params.s,
        params.eps(st.n),
        &st.x_prev,
        &st.x_curr,
    );
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { t: st.n as f64, what: "discrete iterate".into() });
    }
    Ok(next)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub n: u64,
    pub gap: f64,
    pub dist_to_xstar: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteRun {
    pub history: Vec<HistoryEntry>,
    pub final_gap: f64,
    pub final_dist_to_xstar: f64,
    pub iterations: u64,
    #[serde(skip)]
    pub final_x: Point,
}

/// Runs `iterations` steps from `x_{n0−1} = x0`, `x_{n0} = x1`, recording
/// `g(x_n) − g*` and `‖x_n − x*‖` on a log grid of about `history_points`
/// indices.
pub fn run(
    params: &DiscreteParams,
    obj: &Objective,
    x0: &Point,
    x1: &Point,
    iterations: u64,
    history_points: usize,
) -> Result<DiscreteRun> {
    if iterations == 0 {
        return Err(Error::InvalidInput("iteration count must be at least 1".into()));
    }
    check_dim(obj.dim(), x0.len())?;
    check_dim(obj.dim(), x1.len())?;
    let n0 = params.n0;
    let n_end = n0 + iterations;
    let mut marks: Vec<u64> = log_grid(n0 as f64, n_end as f64, history_points.max(2))
        .into_iter()
        .map(|v| v.round() as u64)
        .collect();
    marks.dedup();

    let xs = obj.minimal_norm_minimizer();
    let entry = |n: u64, x: &Point| HistoryEntry { n, gap: obj.gap(x), dist_to_xstar: (x - xs).norm() };

    let mut history = Vec::with_capacity(marks.len());
    let mut mark = 0;
    let mut st = IterateState { n: n0, x_prev: x0.clone(), x_curr: x1.clone() };
    loop {
        if mark < marks.len() && marks[mark] == st.n {
            history.push(entry(st.n, &st.x_curr));
            mark += 1;
        }
        let norm = st.x_curr.norm();
        if !(norm <= DIVERGENCE_NORM) {
            return Err(Error::Diverged { n: st.n, norm });
        }
        if st.n == n_end {
            break;
        }
        let next = step(params, obj, &st)?;
        st.x_prev = std::mem::replace(&mut st.x_curr, next);
        st.n += 1;
    }
    let last = entry(st.n, &st.x_curr);
    Ok(DiscreteRun {
        history,
        final_gap: last.gap,
        final_dist_to_xstar: last.dist_to_xstar,
        iterations,
        final_x: st.x_curr,
    })
}

/// Largest Hessian eigenvalue at `at`, by power iteration.
pub fn estimate_lipschitz(obj: &Objective, at: &Point, iterations: usize) -> f64 {
    let h = obj.hessian(at);
    let mut v = Point::from_fn(obj.dim(), |i, _| 1.0 + 0.1 * i as f64);
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..iterations {
        let w = &h * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = v.dot(&w);
        v = w / norm;
    }
    lambda
}

/// `s = 1/(2L̂)` with `L̂` from [`estimate_lipschitz`].
pub fn default_stepsize(obj: &Objective, at: &Point) -> f64 {
    let l = estimate_lipschitz(obj, at, 200);
    if l > 0.0 {
        0.5 / l
    } else {
        1.0
    }
}

/// Coefficients of the continuous system sampled at `t_n = nh`, before
/// renaming: `ᾱ, γ̄, β̄, ε̄_n` and `q`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RawDiscretization {
    pub alpha_bar: f64,
    pub q: f64,
    pub gamma_bar: f64,
    pub beta_bar: f64,
    pub eps_bar_n: f64,
}

/// Renamed coefficients of the algorithm. Kept apart from
/// [`RawDiscretization`] so the two parameter sets never alias.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Substitution {
    pub s: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub beta: f64,
    pub eps_n: f64,
}

impl Substitution {
    /// Multiplying the finite-difference scheme by `h²` gives
    /// `s = h²`, `α = h^{1−q}ᾱ`, `γ = γ̄/h`, `β = β̄/h^{q+1}`, `ε_n = h²ε̄_n`.
    pub fn from_stepsize(h: f64, raw: &RawDiscretization) -> Self {
        Self {
            s: h * h,
            alpha: h.powf(1.0 - raw.q) * raw.alpha_bar,
            gamma: raw.gamma_bar / h,
            beta: raw.beta_bar / h.powf(raw.q + 1.0),
            eps_n: h * h * raw.eps_bar_n,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquivalenceReport {
    pub holds: bool,
    pub relative_residual: f64,
}

/// Relative tolerance of the equivalence check.
pub const EQUIVALENCE_TOL: f64 = 1e-12;

/// Compares one algorithm step under `subst` with the finite-difference scheme
///
/// ```text
/// (x_{n+1} − 2x_n + x_{n−1})/h² + ᾱ/(h^{q+1}n^q)(x_n − x_{n−1})
///   + ∇g(x_n + (γ̄/h + β̄/(h^{q+1}n^q))(x_n − x_{n−1})) + ε̄_n x_n = 0
/// ```
///
/// solved for `x_{n+1}`. The residual is relative to the largest term of the step.
#[allow(clippy::too_many_arguments)]
pub fn euler_equivalence_check_with(
    obj: &Objective,
    h: f64,
    raw: &RawDiscretization,
    subst: &Substitution,
    n: u64,
    x_prev: &Point,
    x_curr: &Point,
) -> Result<EquivalenceReport> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("h must be positive, got {h}")));
    }
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    check_dim(obj.dim(), x_prev.len())?;
    check_dim(obj.dim(), x_curr.len())?;
    let nq = (n as f64).powf(raw.q);
    let d = x_curr - x_prev;

    // finite-difference route, in the raw coefficients
    let hq1 = h.powf(raw.q + 1.0);
    let arg_fd = x_curr + &d * (raw.gamma_bar / h + raw.beta_bar / (hq1 * nq));
    let accel = &d * (raw.alpha_bar / (hq1 * nq)) + obj.gradient(&arg_fd) + x_curr * raw.eps_bar_n;
    let fd = x_curr * 2.0 - x_prev - accel * (h * h);

    // algorithm route, in the renamed coefficients
    let momentum = 1.0 - subst.alpha / nq;
    let arg_alg = x_curr + &d * (subst.gamma + subst.beta / nq);
    let grad_alg = obj.gradient(&arg_alg);
    let alg = raw_step(obj, momentum, subst.gamma + subst.beta / nq, subst.s, subst.eps_n, x_prev, x_curr);

    let scale = [
        x_curr.amax(),
        x_prev.amax(),
        (&d * momentum).amax(),
        (&grad_alg * subst.s).amax(),
        (x_curr * subst.eps_n).amax(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let diff = (&fd - &alg).amax();
    let relative_residual = if scale > 0.0 { diff / scale } else { diff };
    Ok(EquivalenceReport { holds: relative_residual <= EQUIVALENCE_TOL, relative_residual })
}

/// [`euler_equivalence_check_with`] under [`Substitution::from_stepsize`].
pub fn euler_equivalence_check(
    obj: &Objective,
    h: f64,
    raw: &RawDiscretization,
    n: u64,
    x_prev: &Point,
    x_curr: &Point,
) -> Result<EquivalenceReport> {
    euler_equivalence_check_with(obj, h, raw, &Substitution::from_stepsize(h, raw), n, x_prev, x_curr)
}
