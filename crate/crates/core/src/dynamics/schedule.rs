use std::f64::consts::E;
use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A Tikhonov parametrization `ε : [t0, ∞) → R₊`, nonincreasing, C¹ and
/// vanishing at infinity.
pub trait TikhonovSchedule: Debug + Send + Sync {
    fn eval(&self, t: f64) -> f64;
    fn deriv(&self, t: f64) -> f64;
    fn describe(&self) -> String;

    /// The power-law parameters, when the schedule is exactly `a·t^{-p}`.
    fn as_power(&self) -> Option<PowerSchedule> {
        None
    }
}

/// `ε(t) = a·t^{-p}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PowerScheduleRaw", into = "PowerScheduleRaw")]
pub struct PowerSchedule {
    a: f64,
    p: f64,
}

#[derive(Serialize, Deserialize)]
struct PowerScheduleRaw {
    a: f64,
    p: f64,
}

impl TryFrom<PowerScheduleRaw> for PowerSchedule {
    type Error = Error;
    fn try_from(r: PowerScheduleRaw) -> Result<Self> {
        Self::new(r.a, r.p)
    }
}

impl From<PowerSchedule> for PowerScheduleRaw {
    fn from(s: PowerSchedule) -> Self {
        Self { a: s.a, p: s.p }
    }
}

impl PowerSchedule {
    pub fn new(a: f64, p: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidInput(format!("schedule coefficient a must be positive, got {a}")));
        }
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidInput(format!("schedule exponent p must be positive, got {p}")));
        }
        Ok(Self { a, p })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

impl TikhonovSchedule for PowerSchedule {
    fn eval(&self, t: f64) -> f64 {
        self.a * t.powf(-self.p)
    }

    fn deriv(&self, t: f64) -> f64 {
        -self.p * self.a * t.powf(-self.p - 1.0)
    }

    fn describe(&self) -> String {
        format!("{}*t^-{}", self.a, self.p)
    }

    fn as_power(&self) -> Option<PowerSchedule> {
        Some(*self)
    }
}

/// `ε(t) = a·t^{-p} / ln(e + t)`: a power law with a logarithmic correction,
/// used to exercise the sampled condition checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogPowerSchedule {
    a: f64,
    p: f64,
}

impl LogPowerSchedule {
    pub fn new(a: f64, p: f64) -> Result<Self> {
        let base = PowerSchedule::new(a, p)?;
        Ok(Self { a: base.a, p: base.p })
    }
}

impl TikhonovSchedule for LogPowerSchedule {
    fn eval(&self, t: f64) -> f64 {
        self.a * t.powf(-self.p) / (E + t).ln()
    }

    fn deriv(&self, t: f64) -> f64 {
        let l = (E + t).ln();
        -self.eval(t) * (self.p / t + 1.0 / ((E + t) * l))
    }

    fn describe(&self) -> String {
        format!("{}*t^-{}/ln(e+t)", self.a, self.p)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    #[default]
    Power,
    LogPower,
}

/// Schedule as it appears in run configs: `{"a": .., "p": .., "kind": "power"}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    #[serde(default)]
    pub kind: ScheduleKind,
    pub a: f64,
    pub p: f64,
}

impl ScheduleSpec {
    pub fn power(a: f64, p: f64) -> Self {
        Self { kind: ScheduleKind::Power, a, p }
    }

    pub fn build(&self) -> Result<Box<dyn TikhonovSchedule>> {
        Ok(match self.kind {
            ScheduleKind::Power => Box::new(PowerSchedule::new(self.a, self.p)?),
            ScheduleKind::LogPower => Box::new(LogPowerSchedule::new(self.a, self.p)?),
        })
    }
}
