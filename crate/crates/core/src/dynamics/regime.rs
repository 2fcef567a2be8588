use serde::{Deserialize, Serialize};

use super::{DynamicsParams, PowerSchedule, TikhonovSchedule};
use crate::error::{Error, Result};

/// Asymptotic regime of a power-law Tikhonov schedule `a·t^{-p}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// `q + 1 < p ≤ 2`: fast values, weak convergence to some minimizer.
    Weak,
    /// `q ≤ p < q + 1`: strong convergence to the minimal-norm minimizer.
    Strong,
    /// `p = q + 1`: bounded trajectory with O-rates only.
    Critical,
    Outside,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeClassification {
    pub regime: Regime,
    pub rationale: String,
}

/// `p` within this distance of `q + 1` counts as the critical case.
pub const CRITICAL_TOL: f64 = 1e-12;

fn positive_finite(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

pub fn classify_regime(p: f64, q: f64, a: f64, alpha: f64, gamma: f64) -> Result<RegimeClassification> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidInput(format!("q must lie in (0, 1), got {q}")));
    }
    if !positive_finite(p) {
        return Err(Error::InvalidInput(format!("p must be positive, got {p}")));
    }
    if !positive_finite(a) {
        return Err(Error::InvalidInput(format!("a must be positive, got {a}")));
    }
    if !positive_finite(alpha) {
        return Err(Error::InvalidInput(format!("alpha must be positive, got {alpha}")));
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidInput(format!("gamma must be nonnegative, got {gamma}")));
    }

    let out = |regime, rationale: String| Ok(RegimeClassification { regime, rationale });

    if (p - (q + 1.0)).abs() <= CRITICAL_TOL {
        return out(Regime::Critical, format!("p = q + 1 = {}", q + 1.0));
    }
    if p > q + 1.0 {
        if p > 2.0 {
            return out(Regime::Outside, format!("p = {p} > 2: lower bound q(1-q)/t^2 <= eps(t) fails"));
        }
        if p < 2.0 || a >= q * (1.0 - q) {
            return out(Regime::Weak, format!("q + 1 = {} < p = {p} <= 2", q + 1.0));
        }
        return out(
            Regime::Outside,
            format!("p = 2 requires a >= q(1-q) = {}, got a = {a}", q * (1.0 - q)),
        );
    }
    if p < q {
        return out(Regime::Outside, format!("p = {p} < q = {q}: eps(t) decays slower than t^-q"));
    }
    // q <= p < q + 1
    if p > q || gamma == 0.0 || a <= alpha / (2.0 * gamma) {
        return out(Regime::Strong, format!("q = {q} <= p = {p} < q + 1 = {}", q + 1.0));
    }
    out(
        Regime::Outside,
        format!("p = q with gamma > 0 requires a <= alpha/(2 gamma) = {}, got a = {a}", alpha / (2.0 * gamma)),
    )
}

/// Evaluation of the growth conditions on `ε` with witness constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// Decided by sampling rather than exponent logic.
    pub empirical: bool,
    /// `q(1−q)/t² ≤ ε(t) ≤ K/t^q` for large t.
    pub c0: bool,
    pub c0_k: Option<f64>,
    /// `ε(t) ≥ K₁/t^{r+q}` for large t with `r ∈ (q, 1)`.
    pub c1: bool,
    pub c1_k1: Option<f64>,
    pub c1_r: Option<f64>,
    /// `ε(t) ≤ α/(2γ t^q)` for large t, when `γ ≠ 0`.
    pub c2: bool,
    /// `(ε̇/ε)² ≤ K₃/t²` for large t.
    pub c3: bool,
    pub c3_k3: Option<f64>,
    /// `∫ t^q ε(t) dt < ∞`.
    pub integrability_tq_eps: bool,
    /// `∫ t^{2q−1} ε(t) dt < ∞`.
    pub integrability_t2qm1_eps: bool,
}

fn witness_r(q: f64, p: f64) -> f64 {
    let base = q.max(p - q);
    base + 0.05f64.min((1.0 - base) / 2.0)
}

/// Exact exponent logic for power-law schedules.
pub fn check_conditions(params: &DynamicsParams, sched: &PowerSchedule) -> ConditionReport {
    let (q, alpha, gamma) = (params.q(), params.alpha(), params.gamma());
    let (a, p) = (sched.a(), sched.p());

    let c0 = q <= p && p <= 2.0 && (p < 2.0 || a >= q * (1.0 - q));
    let c1 = p < q + 1.0;
    let c2 = gamma == 0.0 || p > q || (p == q && a <= alpha / (2.0 * gamma));
    ConditionReport {
        empirical: false,
        c0,
        c0_k: c0.then_some(a),
        c1,
        c1_k1: c1.then_some(a),
        c1_r: c1.then(|| witness_r(q, p)),
        c2,
        c3: true,
        c3_k3: Some(p * p),
        integrability_tq_eps: p > q + 1.0,
        integrability_t2qm1_eps: p > 2.0 * q,
    }
}

/// Number of log-spaced points of the sampled checks.
pub const SAMPLED_GRID_POINTS: usize = 64;
/// Upper end of the sampled window.
pub const SAMPLED_T_MAX: f64 = 1e6;

/// Condition checks for an arbitrary schedule. Power laws go through
/// [`check_conditions`]; anything else is sampled on the upper half of a
/// 64-point log grid over `[t0, 10⁶]` through its local exponent
/// `p(t) = −t ε̇(t)/ε(t)`, and flagged empirical.
pub fn check_conditions_for(params: &DynamicsParams, sched: &dyn TikhonovSchedule) -> ConditionReport {
    if let Some(power) = sched.as_power() {
        return check_conditions(params, &power);
    }
    let (q, alpha, gamma) = (params.q(), params.alpha(), params.gamma());
    let lo = params.t0().ln();
    let hi = SAMPLED_T_MAX.ln();
    let n = SAMPLED_GRID_POINTS;
    let tail: Vec<f64> = (n / 2..n)
        .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
        .collect();

    let local_p: Vec<f64> = tail.iter().map(|&t| -t * sched.deriv(t) / sched.eval(t)).collect();
    let p_lo = local_p.iter().copied().fold(f64::INFINITY, f64::min);
    let p_hi = local_p.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let lower_ok = tail.iter().all(|&t| sched.eval(t) >= q * (1.0 - q) / (t * t));
    let k0 = tail.iter().map(|&t| sched.eval(t) * t.powf(q)).fold(0.0, f64::max);
    let c0 = lower_ok && p_lo >= q && p_hi <= 2.0;

    let c1 = p_hi < q + 1.0;
    let r = witness_r(q, p_hi);
    let k1 = tail.iter().map(|&t| sched.eval(t) * t.powf(r + q)).fold(f64::INFINITY, f64::min);

    let c2 = gamma == 0.0 || tail.iter().all(|&t| sched.eval(t) <= alpha / (2.0 * gamma * t.powf(q)));
    let k3 = local_p.iter().map(|p| p * p).fold(0.0, f64::max);

    ConditionReport {
        empirical: true,
        c0,
        c0_k: c0.then_some(k0),
        c1,
        c1_k1: c1.then_some(k1),
        c1_r: c1.then_some(r),
        c2,
        c3: k3.is_finite(),
        c3_k3: k3.is_finite().then_some(k3),
        integrability_tq_eps: p_lo > q + 1.0,
        integrability_t2qm1_eps: p_lo > 2.0 * q,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::LogPowerSchedule;
    use proptest::prelude::*;

    fn params(alpha: f64, q: f64, gamma: f64) -> DynamicsParams {
        DynamicsParams::new(alpha, q, gamma, 0.0, 1.0).unwrap()
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify_regime(1.8, 0.5, 1.0, 2.0, 1.0).unwrap().regime, Regime::Weak);
        assert_eq!(classify_regime(0.9, 0.5, 1.0, 2.0, 1.0).unwrap().regime, Regime::Strong);
        assert_eq!(classify_regime(1.5, 0.5, 1.0, 2.0, 1.0).unwrap().regime, Regime::Critical);
    }

    #[test]
    fn classification_boundaries() {
        // p = 2 needs a >= q(1-q)
        assert_eq!(classify_regime(2.0, 0.5, 0.25, 2.0, 1.0).unwrap().regime, Regime::Weak);
        let c = classify_regime(2.0, 0.5, 0.1, 2.0, 1.0).unwrap();
        assert_eq!(c.regime, Regime::Outside);
        assert!(c.rationale.contains("q(1-q)"));
        assert_eq!(classify_regime(2.1, 0.5, 1.0, 2.0, 1.0).unwrap().regime, Regime::Outside);
        assert_eq!(classify_regime(0.4, 0.5, 1.0, 2.0, 1.0).unwrap().regime, Regime::Outside);
        // p = q needs a <= alpha/(2 gamma) when gamma > 0
        assert_eq!(classify_regime(0.5, 0.5, 1.0, 2.0, 1.0).unwrap().regime, Regime::Strong);
        assert_eq!(classify_regime(0.5, 0.5, 1.5, 2.0, 1.0).unwrap().regime, Regime::Outside);
        assert_eq!(classify_regime(0.5, 0.5, 1.5, 2.0, 0.0).unwrap().regime, Regime::Strong);
    }

    #[test]
    fn classification_rejects_invalid() {
        assert!(classify_regime(1.0, 1.0, 1.0, 2.0, 1.0).is_err());
        assert!(classify_regime(1.0, 0.0, 1.0, 2.0, 1.0).is_err());
        assert!(classify_regime(-1.0, 0.5, 1.0, 2.0, 1.0).is_err());
        assert!(classify_regime(1.0, 0.5, 0.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn condition_examples() {
        let r = check_conditions(&params(2.0, 0.5, 1.0), &PowerSchedule::new(1.0, 1.8).unwrap());
        assert!(r.c0 && r.integrability_tq_eps);

        let r = check_conditions(&params(2.0, 0.5, 1.0), &PowerSchedule::new(1.0, 0.9).unwrap());
        assert!(r.c1 && r.c2);
        assert!(!r.integrability_t2qm1_eps);
        let rr = r.c1_r.unwrap();
        assert!(rr > 0.5 && rr < 1.0 && 0.9 <= rr + 0.5);

        let r = check_conditions(&params(2.0, 0.5, 1.0), &PowerSchedule::new(0.1, 2.0).unwrap());
        assert!(!r.c0);
    }

    #[test]
    fn sampled_checks_agree_with_exponents_for_log_power() {
        // local exponent of a t^-p / ln(e+t) tends to p from above
        let prm = params(2.0, 0.5, 1.0);
        let weak = check_conditions_for(&prm, &LogPowerSchedule::new(1.0, 1.8).unwrap());
        assert!(weak.empirical);
        assert!(weak.c0 && weak.integrability_tq_eps && !weak.c1);
        let strong = check_conditions_for(&prm, &LogPowerSchedule::new(1.0, 0.9).unwrap());
        assert!(strong.c1 && strong.c2 && strong.c3 && !strong.integrability_tq_eps);
        let exact = check_conditions_for(&prm, &PowerSchedule::new(1.0, 0.9).unwrap());
        assert!(!exact.empirical);
    }

    proptest! {
        #[test]
        fn classification_consistent_with_conditions(
            p in 0.05f64..2.5,
            q in 0.01f64..0.99,
            a in 0.01f64..3.0,
            alpha in 0.1f64..5.0,
            gamma in prop_oneof![Just(0.0), 0.1f64..3.0],
        ) {
            let beta = if gamma == 0.0 { 1.0 } else { 0.0 };
            let prm = DynamicsParams::new(alpha, q, gamma, beta, 1.0).unwrap();
            let rep = check_conditions(&prm, &PowerSchedule::new(a, p).unwrap());
            match classify_regime(p, q, a, alpha, gamma).unwrap().regime {
                Regime::Weak => prop_assert!(rep.c0 && rep.integrability_tq_eps),
                Regime::Strong => prop_assert!(rep.c1 && rep.c2 && rep.c3),
                _ => {}
            }
        }
    }
}
