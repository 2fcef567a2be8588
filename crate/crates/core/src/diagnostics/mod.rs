//! Energy functionals, per-sample estimate quantities, integral
//! accumulators and log-log decay fits.

mod fit;
mod integrals;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Dynamics, State};
use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::problems::{Point, TIKHONOV_TOL};

pub use fit::{fit_decay_exponent, DecayFit, MIN_FIT_POINTS};
pub use integrals::{accumulate, accumulate_series, Accumulator, DecadeIncrement, IntegralAccumulators};

/// Free parameter `b` of the two Lyapunov functions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyConfig {
    pub b_weak: f64,
    pub b_strong: f64,
}

impl EnergyConfig {
    /// `b = α/2` for the weak energy and `b = α/4` for the strong one.
    pub fn defaults(alpha: f64) -> Self {
        Self { b_weak: alpha / 2.0, b_strong: alpha / 4.0 }
    }

    pub fn validate(&self, alpha: f64, gamma: f64) -> Result<()> {
        if !(self.b_weak > 0.0 && self.b_weak < alpha) {
            return Err(Error::InvalidInput(format!("b_weak must lie in (0, alpha), got {}", self.b_weak)));
        }
        let strong_max = if gamma > 0.0 { alpha / 2.0 } else { alpha };
        if !(self.b_strong > 0.0 && self.b_strong < strong_max) {
            return Err(Error::InvalidInput(format!(
                "b_strong must lie in (0, {strong_max}), got {}",
                self.b_strong
            )));
        }
        Ok(())
    }
}

/// An energy value and whether it was evaluated before the time where all
/// its coefficients are nonnegative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyValue {
    pub value: f64,
    pub pre_asymptotic: bool,
}

/// `W = g(x) + ½‖ẋ‖² + (ε(t)/2)‖x‖²`, nonincreasing along every trajectory.
pub fn energy_w(sys: &Dynamics<'_>, s: &State) -> f64 {
    sys.objective.value(&s.x) + 0.5 * s.v.norm_squared() + 0.5 * sys.schedule.eval(s.t) * s.x.norm_squared()
}

/// Weak-convergence energy
///
/// ```text
/// E = t^{2q}(g(x+β(t)ẋ) − g*) + (t^{2q}ε/2)‖x‖² + ½‖b(x−x*) + t^q ẋ‖²
///     + (b(α − q t^{q−1} − b)/2)‖x − x*‖²
/// ```
///
/// flagged pre-asymptotic while `α − q t^{q−1} − b < 0`.
pub fn energy_weak(sys: &Dynamics<'_>, cfg: &EnergyConfig, s: &State) -> EnergyValue {
    let p = &sys.params;
    let (t, q, b) = (s.t, p.q(), cfg.b_weak);
    let xs = sys.objective.minimal_norm_minimizer();
    let t2q = t.powf(2.0 * q);
    let tq = t.powf(q);
    let shifted = &s.x + &s.v * p.beta_at(t);
    let dx = &s.x - xs;
    let coef = p.alpha() - q * t.powf(q - 1.0) - b;
    let value = t2q * sys.objective.gap(&shifted)
        + 0.5 * t2q * sys.schedule.eval(t) * s.x.norm_squared()
        + 0.5 * (&dx * b + &s.v * tq).norm_squared()
        + 0.5 * b * coef * dx.norm_squared();
    EnergyValue { value, pre_asymptotic: coef < 0.0 }
}

/// Coefficients `(a(t), c(t), d(t))` of the strong-convergence energy.
pub fn strong_coefficients(sys: &Dynamics<'_>, b: f64, t: f64) -> (f64, f64, f64, bool) {
    let p = &sys.params;
    let q = p.q();
    let c = t.powf(q);
    let beta = p.beta_at(t);
    let eps = sys.schedule.eval(t);
    let denom = 1.0 + p.beta_dot(t) - p.alpha() * beta / c + beta * beta * eps;
    let a = (c * c - b * c * beta) / denom;
    let d = b * (p.alpha() - b - q * t.powf(q - 1.0));
    let pre = !(denom > 0.0) || !(a >= 0.0) || d < 0.0;
    (a, c, d, pre)
}

/// Strong-convergence energy around the Tikhonov point `x_t`
///
/// ```text
/// E = a(t)(g_t(x+β(t)ẋ) − g_t(x_t)) + ½‖b(x−x_t) + c(t)ẋ‖² + (d(t)/2)‖x−x_t‖²
/// ```
///
/// with `g_t = g + (ε(t)/2)‖·‖²`, `c = t^q`, `d = b(α − b − q t^{q−1})` and
/// `a = (c² − bcβ(t)) / (1 + β'(t) − αβ(t)/t^q + β(t)²ε(t))`.
pub fn energy_strong_at(sys: &Dynamics<'_>, cfg: &EnergyConfig, s: &State, x_t: &Point) -> EnergyValue {
    let b = cfg.b_strong;
    let t = s.t;
    let eps = sys.schedule.eval(t);
    let (a, c, d, pre) = strong_coefficients(sys, b, t);
    let shifted = &s.x + &s.v * sys.params.beta_at(t);
    let obj = sys.objective;
    // g_t(y) − g_t(x_t) arranged to avoid cancelling g* out of two O(1) values
    let gt_gap = (obj.gap(&shifted) - obj.gap(x_t)) + 0.5 * eps * (shifted.norm_squared() - x_t.norm_squared());
    let dx = &s.x - x_t;
    let value = a * gt_gap + 0.5 * (&dx * b + &s.v * c).norm_squared() + 0.5 * d * dx.norm_squared();
    EnergyValue { value, pre_asymptotic: pre }
}

/// [`energy_strong_at`] with `x_t` solved for here.
pub fn energy_strong(sys: &Dynamics<'_>, cfg: &EnergyConfig, s: &State) -> Result<EnergyValue> {
    let x_t = sys.objective.tikhonov_point(sys.schedule.eval(s.t), TIKHONOV_TOL)?;
    Ok(energy_strong_at(sys, cfg, s, &x_t))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleDiagnostics {
    pub t: f64,
    /// `g(x + β(t)ẋ) − g*`
    pub gap_shifted: f64,
    /// `g(x) − g*`
    pub gap_plain: f64,
    pub speed: f64,
    pub grad_shifted_norm: f64,
    /// `‖∇g(x + β(t)ẋ) + ε(t)x‖`
    pub reg_grad_norm: f64,
    pub dist_to_xstar: f64,
    pub dist_to_tikhonov: f64,
    pub w: f64,
    pub e_weak: f64,
    pub e_strong: f64,
    pub e_weak_pre_asymptotic: bool,
    pub e_strong_pre_asymptotic: bool,
}

impl SampleDiagnostics {
    pub const COLUMNS: [&'static str; 12] = [
        "gap_shifted",
        "gap_plain",
        "speed",
        "grad_shifted_norm",
        "reg_grad_norm",
        "dist_to_xstar",
        "dist_to_tikhonov",
        "W",
        "E_weak",
        "E_strong",
        "E_weak_pre_asymptotic",
        "E_strong_pre_asymptotic",
    ];

    pub fn values(&self) -> [f64; 12] {
        [
            self.gap_shifted,
            self.gap_plain,
            self.speed,
            self.grad_shifted_norm,
            self.reg_grad_norm,
            self.dist_to_xstar,
            self.dist_to_tikhonov,
            self.w,
            self.e_weak,
            self.e_strong,
            f64::from(u8::from(self.e_weak_pre_asymptotic)),
            f64::from(u8::from(self.e_strong_pre_asymptotic)),
        ]
    }
}

/// Every diagnostic field at one state, given the Tikhonov point `x_t` at `s.t`.
pub fn sample_diagnostics_at(sys: &Dynamics<'_>, cfg: &EnergyConfig, s: &State, x_t: &Point) -> SampleDiagnostics {
    let obj = sys.objective;
    let eps = sys.schedule.eval(s.t);
    let shifted = &s.x + &s.v * sys.params.beta_at(s.t);
    let grad = obj.gradient(&shifted);
    let weak = energy_weak(sys, cfg, s);
    let strong = energy_strong_at(sys, cfg, s, x_t);
    SampleDiagnostics {
        t: s.t,
        gap_shifted: obj.gap(&shifted),
        gap_plain: obj.gap(&s.x),
        speed: s.v.norm(),
        grad_shifted_norm: grad.norm(),
        reg_grad_norm: (&grad + &s.x * eps).norm(),
        dist_to_xstar: (&s.x - obj.minimal_norm_minimizer()).norm(),
        dist_to_tikhonov: (&s.x - x_t).norm(),
        w: energy_w(sys, s),
        e_weak: weak.value,
        e_strong: strong.value,
        e_weak_pre_asymptotic: weak.pre_asymptotic,
        e_strong_pre_asymptotic: strong.pre_asymptotic,
    }
}

pub fn sample_diagnostics(sys: &Dynamics<'_>, cfg: &EnergyConfig, s: &State) -> Result<SampleDiagnostics> {
    let x_t = sys.objective.tikhonov_point(sys.schedule.eval(s.t), TIKHONOV_TOL)?;
    Ok(sample_diagnostics_at(sys, cfg, s, &x_t))
}

/// Diagnostics for every sample of `traj`. The Tikhonov point is solved once
/// per sample, warm-started from the previous one, in sample order.
pub fn annotate(sys: &Dynamics<'_>, cfg: &EnergyConfig, traj: &Trajectory) -> Result<Vec<SampleDiagnostics>> {
    let mut out = Vec::with_capacity(traj.samples.len());
    let mut prev: Option<Point> = None;
    for s in &traj.samples {
        let x_t = sys
            .objective
            .tikhonov_point_from(sys.schedule.eval(s.t), TIKHONOV_TOL, prev.as_ref())?;
        out.push(sample_diagnostics_at(sys, cfg, s, &x_t));
        prev = Some(x_t);
    }
    Ok(out)
}

/// Samples of `W` whose increase over the previous sample exceeds
/// `slack · (1 + |W_prev|)`.
pub fn w_violations(diags: &[SampleDiagnostics], slack: f64) -> Vec<(f64, f64)> {
    diags
        .windows(2)
        .filter(|w| w[1].w > w[0].w + slack * (1.0 + w[0].w.abs()))
        .map(|w| (w[1].t, w[1].w - w[0].w))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{DynamicsParams, PowerSchedule, TikhonovSchedule};
    use crate::problems::Objective;
    use nalgebra::{dvector, DMatrix, DVector};

    #[derive(Debug)]
    struct Constant(f64);
    impl TikhonovSchedule for Constant {
        fn eval(&self, _: f64) -> f64 {
            self.0
        }
        fn deriv(&self, _: f64) -> f64 {
            0.0
        }
        fn describe(&self) -> String {
            "const".into()
        }
    }

    fn params() -> DynamicsParams {
        DynamicsParams::new(2.0, 0.5, 1.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn energy_w_examples() {
        let g = Objective::quadratic("h", DMatrix::identity(1, 1), dvector![0.0], 0.0).unwrap();
        let one = Constant(1.0);
        let sys = Dynamics::new(params(), &one, &g);
        assert_eq!(energy_w(&sys, &State::new(1.0, dvector![0.0], dvector![0.0])), 0.0);
        assert_eq!(energy_w(&sys, &State::new(1.0, dvector![1.0], dvector![1.0])), 1.5);
    }

    #[test]
    fn energy_weak_examples() {
        let line = crate::problems::Corpus::builtin().get("quad_line_2").unwrap().clone();
        let sched = PowerSchedule::new(1.0, 1.8).unwrap();
        let sys = Dynamics::new(params(), &sched, &line);
        let cfg = EnergyConfig::defaults(2.0);
        // at x = x*, v = 0 only the regularization term survives
        let t = 9.0;
        let e = energy_weak(&sys, &cfg, &State::new(t, dvector![0.0, 1.0], dvector![0.0, 0.0]));
        let expected = 0.5 * t * sched.eval(t) * 1.0;
        assert!((e.value - expected).abs() < 1e-15);
        assert!(!e.pre_asymptotic);

        let g = Objective::quadratic("s", DMatrix::identity(2, 2), DVector::zeros(2), 0.0).unwrap();
        let sys = Dynamics::new(params(), &sched, &g);
        let e = energy_weak(&sys, &cfg, &State::new(3.0, DVector::zeros(2), DVector::zeros(2)));
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn energy_strong_vanishes_at_tikhonov_point() {
        let line = crate::problems::Corpus::builtin().get("quad_line_2").unwrap().clone();
        let sched = PowerSchedule::new(1.0, 0.9).unwrap();
        let sys = Dynamics::new(params(), &sched, &line);
        let t = 50.0;
        let x_t = line.tikhonov_point(sched.eval(t), 1e-14).unwrap();
        let e = energy_strong(&sys, &EnergyConfig::defaults(2.0), &State::new(t, x_t, DVector::zeros(2))).unwrap();
        assert!(e.value.abs() < 1e-13, "{}", e.value);
    }

    #[test]
    fn energy_strong_hand_value() {
        // g = ½‖x‖², x = 0, v = (1, 0), γ = 1, β = 0, q = ½, α = 2, ε = t^-0.9, t = 100, b = ½:
        // c = 10, β(t) = 1, a = 95/(0.8 + 10^-1.8), d = 0.725,
        // E = a · ½(1 + 10^-1.8) + 50
        let g = Objective::quadratic("s", DMatrix::identity(2, 2), DVector::zeros(2), 0.0).unwrap();
        let sched = PowerSchedule::new(1.0, 0.9).unwrap();
        let sys = Dynamics::new(params(), &sched, &g);
        let cfg = EnergyConfig { b_weak: 1.0, b_strong: 0.5 };
        let s = State::new(100.0, DVector::zeros(2), dvector![1.0, 0.0]);
        let e = energy_strong(&sys, &cfg, &s).unwrap();
        let expected = 109.14431260281144;
        assert!((e.value - expected).abs() < 1e-11, "{}", e.value);
        assert!(!e.pre_asymptotic);
        let (a, c, d, _) = strong_coefficients(&sys, 0.5, 100.0);
        assert!((a - 116.44312602811438).abs() < 1e-10);
        assert_eq!(c, 10.0);
        assert!((d - 0.725).abs() < 1e-15);
    }

    #[test]
    fn stationary_origin_diagnostics_vanish() {
        let g = Objective::quadratic("s", DMatrix::identity(2, 2), DVector::zeros(2), 0.0).unwrap();
        let sched = PowerSchedule::new(1.0, 1.8).unwrap();
        let sys = Dynamics::new(params(), &sched, &g);
        let d = sample_diagnostics(&sys, &EnergyConfig::defaults(2.0), &State::new(5.0, DVector::zeros(2), DVector::zeros(2)))
            .unwrap();
        for v in &d.values()[..10] {
            assert_eq!(*v, 0.0);
        }
    }

    #[test]
    fn energy_config_bounds() {
        assert!(EnergyConfig::defaults(2.0).validate(2.0, 1.0).is_ok());
        assert!(EnergyConfig { b_weak: 2.0, b_strong: 0.5 }.validate(2.0, 1.0).is_err());
        assert!(EnergyConfig { b_weak: 1.0, b_strong: 1.5 }.validate(2.0, 1.0).is_err());
        assert!(EnergyConfig { b_weak: 1.0, b_strong: 1.5 }.validate(2.0, 0.0).is_ok());
    }
}
