//! The second-order system
//!
//! ```text
//! ẍ + (α/t^q) ẋ + ∇g(x + β(t) ẋ) + ε(t) x = 0,   β(t) = γ + β/t^q,
//! ```
//!
//! in first-order form, its parameters, and the regime classification of
//! power-law Tikhonov schedules.

mod regime;
mod schedule;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::problems::{Objective, Point};

pub use regime::{
    check_conditions, check_conditions_for, classify_regime, ConditionReport, Regime,
    RegimeClassification, CRITICAL_TOL, SAMPLED_GRID_POINTS, SAMPLED_T_MAX,
};
pub use schedule::{LogPowerSchedule, PowerSchedule, ScheduleKind, ScheduleSpec, TikhonovSchedule};

/// Damping parameters `(α, q, γ, β)` and starting time `t0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DynamicsParamsRaw", into = "DynamicsParamsRaw")]
pub struct DynamicsParams {
    alpha: f64,
    q: f64,
    gamma: f64,
    beta: f64,
    t0: f64,
}

fn default_t0() -> f64 {
    1.0
}

#[derive(Serialize, Deserialize)]
struct DynamicsParamsRaw {
    alpha: f64,
    q: f64,
    gamma: f64,
    beta: f64,
    #[serde(default = "default_t0")]
    t0: f64,
}

impl TryFrom<DynamicsParamsRaw> for DynamicsParams {
    type Error = Error;
    fn try_from(r: DynamicsParamsRaw) -> Result<Self> {
        Self::new(r.alpha, r.q, r.gamma, r.beta, r.t0)
    }
}

impl From<DynamicsParams> for DynamicsParamsRaw {
    fn from(p: DynamicsParams) -> Self {
        Self { alpha: p.alpha, q: p.q, gamma: p.gamma, beta: p.beta, t0: p.t0 }
    }
}

impl DynamicsParams {
    pub fn new(alpha: f64, q: f64, gamma: f64, beta: f64, t0: f64) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if ![alpha, q, gamma, beta, t0].iter().all(|v| v.is_finite()) {
            return bad("dynamics parameters must be finite".into());
        }
        if alpha <= 0.0 {
            return bad(format!("alpha must be positive, got {alpha}"));
        }
        if !(q > 0.0 && q < 1.0) {
            return bad(format!("q must lie in (0, 1), got {q}"));
        }
        if t0 <= 0.0 {
            return bad(format!("t0 must be positive, got {t0}"));
        }
        if gamma < 0.0 {
            return bad(format!("gamma must be nonnegative, got {gamma}"));
        }
        if gamma == 0.0 && beta <= 0.0 {
            return bad(format!("gamma = 0 requires beta > 0, got beta = {beta}"));
        }
        if beta < 0.0 {
            let threshold = (beta / gamma).abs().powf(1.0 / q);
            if t0 <= threshold {
                return bad(format!("beta < 0 requires t0 > |beta/gamma|^(1/q) = {threshold}, got t0 = {t0}"));
            }
        }
        Ok(Self { alpha, q, gamma, beta, t0 })
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

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// `β(t) = γ + β t^{-q}`, positive for every `t ≥ t0`.
    pub fn beta_of(&self, t: f64) -> Result<f64> {
        if !(t >= self.t0) {
            return Err(Error::InvalidInput(format!("t = {t} precedes t0 = {}", self.t0)));
        }
        Ok(self.beta_at(t))
    }

    pub(crate) fn beta_at(&self, t: f64) -> f64 {
        self.gamma + self.beta * t.powf(-self.q)
    }

    /// `β'(t) = −qβ t^{-q-1}`.
    pub fn beta_dot(&self, t: f64) -> f64 {
        -self.q * self.beta * t.powf(-self.q - 1.0)
    }

    /// Viscous coefficient `α/t^q`.
    pub fn damping(&self, t: f64) -> f64 {
        self.alpha * t.powf(-self.q)
    }
}

/// A point `(t, x, ẋ)` of phase space.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub t: f64,
    pub x: Point,
    pub v: Point,
}

impl State {
    pub fn new(t: f64, x: Point, v: Point) -> Self {
        Self { t, x, v }
    }
}

/// The vector field `F(t, u, v) = (v, −(α/t^q)v − ε(t)u − ∇g(u + β(t)v))`
/// bound to a parameter set, a schedule and an objective.
#[derive(Clone, Copy, Debug)]
pub struct Dynamics<'a> {
    pub params: DynamicsParams,
    pub schedule: &'a dyn TikhonovSchedule,
    pub objective: &'a Objective,
}

impl<'a> Dynamics<'a> {
    pub fn new(params: DynamicsParams, schedule: &'a dyn TikhonovSchedule, objective: &'a Objective) -> Self {
        Self { params, schedule, objective }
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    /// `(ẋ, ẍ)` at `s`, with one gradient evaluation.
    pub fn rhs(&self, s: &State) -> Result<(Point, Point)> {
        if !(s.t >= self.params.t0) {
            return Err(Error::InvalidInput(format!("t = {} precedes t0 = {}", s.t, self.params.t0)));
        }
        check_dim(self.dim(), s.x.len())?;
        check_dim(self.dim(), s.v.len())?;
        Ok(self.field(s.t, &s.x, &s.v))
    }

    pub(crate) fn field(&self, t: f64, x: &Point, v: &Point) -> (Point, Point) {
        let shifted = x + v * self.params.beta_at(t);
        let grad = self.objective.gradient(&shifted);
        let dv = -(v * self.params.damping(t)) - x * self.schedule.eval(t) - grad;
        (v.clone(), dv)
    }

    /// Same field on the stacked state `y = (x, ẋ)`.
    pub(crate) fn field_stacked(&self, t: f64, y: &DVector<f64>) -> DVector<f64> {
        let d = self.dim();
        let x = y.rows(0, d).into_owned();
        let v = y.rows(d, d).into_owned();
        let (dx, dv) = self.field(t, &x, &v);
        let mut out = DVector::zeros(2 * d);
        out.rows_mut(0, d).copy_from(&dx);
        out.rows_mut(d, d).copy_from(&dv);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dvector, DMatrix};
    use proptest::prelude::*;

    fn scalar_half_square() -> Objective {
        Objective::quadratic("half_x2", DMatrix::identity(1, 1), dvector![0.0], 0.0).unwrap()
    }

    #[test]
    fn beta_of_examples() {
        let p = DynamicsParams::new(2.0, 0.5, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(p.beta_of(3.0).unwrap(), 1.0);
        let p = DynamicsParams::new(2.0, 0.5, 0.0, 1.0, 1.0).unwrap();
        assert!((p.beta_of(4.0).unwrap() - 0.5).abs() < 1e-15);
        let p = DynamicsParams::new(2.0, 0.5, 1.0, -1.0, 1.5).unwrap();
        assert!((p.beta_of(4.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(p.beta_of(1.0).is_err());
    }

    #[test]
    fn parameter_admissibility() {
        assert!(DynamicsParams::new(0.0, 0.5, 1.0, 0.0, 1.0).is_err());
        assert!(DynamicsParams::new(2.0, 1.0, 1.0, 0.0, 1.0).is_err());
        assert!(DynamicsParams::new(2.0, 0.5, 0.0, 0.0, 1.0).is_err());
        assert!(DynamicsParams::new(2.0, 0.5, 0.0, -1.0, 1.0).is_err());
        // |beta/gamma|^(1/q) = 4
        assert!(DynamicsParams::new(2.0, 0.5, 1.0, -2.0, 4.0).is_err());
        assert!(DynamicsParams::new(2.0, 0.5, 1.0, -2.0, 4.01).is_ok());
        assert!(serde_json::from_str::<DynamicsParams>(r#"{"alpha":2,"q":1.5,"gamma":1,"beta":0}"#).is_err());
        let p: DynamicsParams = serde_json::from_str(r#"{"alpha":2,"q":0.5,"gamma":1,"beta":0}"#).unwrap();
        assert_eq!(p.t0(), 1.0);
    }

    #[test]
    fn rhs_examples() {
        let sphere = Objective::quadratic("s", DMatrix::identity(2, 2), DVector::zeros(2), 0.0).unwrap();
        let sched = PowerSchedule::new(1.0, 1.8).unwrap();
        let params = DynamicsParams::new(2.0, 0.5, 1.0, 0.0, 1.0).unwrap();
        let dynm = Dynamics::new(params, &sched, &sphere);
        let (dx, dv) = dynm.rhs(&State::new(7.0, DVector::zeros(2), DVector::zeros(2))).unwrap();
        assert_eq!(dx, DVector::zeros(2));
        assert_eq!(dv, DVector::zeros(2));

        let g = scalar_half_square();
        let dynm = Dynamics::new(params, &sched, &g);
        let (dx, dv) = dynm.rhs(&State::new(1.0, dvector![1.0], dvector![0.0])).unwrap();
        assert_eq!((dx[0], dv[0]), (0.0, -2.0));
        let (dx, dv) = dynm.rhs(&State::new(1.0, dvector![1.0], dvector![1.0])).unwrap();
        assert_eq!((dx[0], dv[0]), (1.0, -5.0));
    }

    #[test]
    fn rhs_rejects_bad_input() {
        let g = scalar_half_square();
        let sched = PowerSchedule::new(1.0, 1.8).unwrap();
        let params = DynamicsParams::new(2.0, 0.5, 1.0, 0.0, 1.0).unwrap();
        let dynm = Dynamics::new(params, &sched, &g);
        assert!(dynm.rhs(&State::new(0.5, dvector![1.0], dvector![0.0])).is_err());
        assert!(dynm.rhs(&State::new(1.0, dvector![1.0, 2.0], dvector![0.0])).is_err());
    }

    proptest! {
        #[test]
        fn beta_positive_after_t0(
            q in 0.05f64..0.95,
            gamma in 0.01f64..3.0,
            beta in -3.0f64..3.0,
            slack in 1.0001f64..3.0,
            dt in 0.0f64..1e4,
        ) {
            let t0 = if beta < 0.0 { (beta / gamma).abs().powf(1.0 / q).max(1e-3) * slack } else { 1.0 };
            let p = DynamicsParams::new(1.0, q, gamma, beta, t0).unwrap();
            prop_assert!(p.beta_of(t0 + dt).unwrap() > 0.0);
        }

        #[test]
        fn rhs_is_deterministic(x in -5.0f64..5.0, v in -5.0f64..5.0, t in 1.0f64..1e3) {
            let g = scalar_half_square();
            let sched = PowerSchedule::new(1.0, 0.9).unwrap();
            let params = DynamicsParams::new(2.0, 0.5, 1.0, 0.3, 1.0).unwrap();
            let dynm = Dynamics::new(params, &sched, &g);
            let s = State::new(t, dvector![x], dvector![v]);
            let a = dynm.rhs(&s).unwrap();
            let b = dynm.rhs(&s).unwrap();
            prop_assert_eq!(a.0[0].to_bits(), b.0[0].to_bits());
            prop_assert_eq!(a.1[0].to_bits(), b.1[0].to_bits());
        }
    }
}
