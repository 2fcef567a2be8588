use serde::{Deserialize, Serialize};

use super::SampleDiagnostics;
use crate::dynamics::{DynamicsParams, TikhonovSchedule};
use crate::error::{Error, Result};
use crate::integrator::Trajectory;

/// Increment of a running integral over one decade `[start, end]` of time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecadeIncrement {
    pub start: f64,
    pub end: f64,
    pub increment: f64,
}

/// A running trapezoid integral over the sample grid.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Accumulator {
    pub total: f64,
    /// `∫_{T/10}^{T}`, the running value's growth over the last decade.
    pub last_decade_increment: f64,
    pub decades: Vec<DecadeIncrement>,
    #[serde(skip)]
    pub running: Vec<f64>,
}

impl Accumulator {
    /// Share of the total gained over the last decade; 0 for a vanishing integral.
    pub fn last_decade_fraction(&self) -> f64 {
        if self.total > 0.0 {
            self.last_decade_increment / self.total
        } else {
            0.0
        }
    }
}

fn interp_running(times: &[f64], running: &[f64], t: f64) -> f64 {
    if t <= times[0] {
        return 0.0;
    }
    let k = times.partition_point(|&s| s < t);
    if k >= times.len() {
        return running[running.len() - 1];
    }
    let (t0, t1) = (times[k - 1], times[k]);
    let w = (t - t0) / (t1 - t0);
    running[k - 1] + w * (running[k] - running[k - 1])
}

/// Trapezoid accumulation of `values` over `times`.
pub fn accumulate_series(times: &[f64], values: &[f64]) -> Result<Accumulator> {
    if times.len() < 2 || times.len() != values.len() {
        return Err(Error::InsufficientData("accumulation needs at least two samples".into()));
    }
    let mut running = Vec::with_capacity(times.len());
    running.push(0.0);
    for k in 1..times.len() {
        let inc = 0.5 * (values[k] + values[k - 1]) * (times[k] - times[k - 1]);
        running.push(running[k - 1] + inc);
    }
    let total = running[running.len() - 1];
    let (first, last) = (times[0], times[times.len() - 1]);
    let last_decade_increment = total - interp_running(times, &running, last / 10.0);
    let mut decades = Vec::new();
    let mut start = first;
    while start < last {
        let end = (start * 10.0).min(last);
        let increment = interp_running(times, &running, end) - interp_running(times, &running, start);
        decades.push(DecadeIncrement { start, end, increment });
        start = end;
    }
    Ok(Accumulator { total, last_decade_increment, decades, running })
}

/// Weighted time integrals along a trajectory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegralAccumulators {
    /// `∫ t^q ‖ẋ‖²`
    pub i_speed: Accumulator,
    /// `∫ t^q (g(x + βẋ) − g*)`
    pub i_gap: Accumulator,
    /// `∫ t^{2q} ‖∇g(x + βẋ)‖²`
    pub i_grad2q: Accumulator,
    /// `∫ t^{2q−1} ‖∇g(x + βẋ)‖²`
    pub i_grad2qm1: Accumulator,
    /// `∫ t^{2q} ‖∇g(x + βẋ) + εx‖²`
    pub i_reg_grad: Accumulator,
    /// `∫ t^q ε(t) ‖x‖²`
    pub i_eps_x: Accumulator,
}

impl IntegralAccumulators {
    pub fn named(&self) -> [(&'static str, &Accumulator); 6] {
        [
            ("I_speed", &self.i_speed),
            ("I_gap", &self.i_gap),
            ("I_grad2q", &self.i_grad2q),
            ("I_grad2qm1", &self.i_grad2qm1),
            ("I_reg_grad", &self.i_reg_grad),
            ("I_eps_x", &self.i_eps_x),
        ]
    }

    pub fn get(&self, name: &str) -> Option<&Accumulator> {
        self.named().into_iter().find(|(n, _)| *n == name).map(|(_, a)| a)
    }
}

/// Integral estimates over the sample grid of `traj`, from its diagnostics.
pub fn accumulate(
    params: &DynamicsParams,
    schedule: &dyn TikhonovSchedule,
    traj: &Trajectory,
    diags: &[SampleDiagnostics],
) -> Result<IntegralAccumulators> {
    if traj.samples.len() < 2 {
        return Err(Error::InsufficientData("accumulation needs at least two samples".into()));
    }
    if diags.len() != traj.samples.len() {
        return Err(Error::InvalidInput("diagnostics do not match the trajectory".into()));
    }
    let q = params.q();
    let times = traj.times();
    let series = |f: &dyn Fn(usize) -> f64| -> Result<Accumulator> {
        let vals: Vec<f64> = (0..times.len()).map(f).collect();
        accumulate_series(&times, &vals)
    };
    let tq = |k: usize| times[k].powf(q);
    Ok(IntegralAccumulators {
        i_speed: series(&|k| tq(k) * diags[k].speed.powi(2))?,
        i_gap: series(&|k| tq(k) * diags[k].gap_shifted.max(0.0))?,
        i_grad2q: series(&|k| times[k].powf(2.0 * q) * diags[k].grad_shifted_norm.powi(2))?,
        i_grad2qm1: series(&|k| times[k].powf(2.0 * q - 1.0) * diags[k].grad_shifted_norm.powi(2))?,
        i_reg_grad: series(&|k| times[k].powf(2.0 * q) * diags[k].reg_grad_norm.powi(2))?,
        i_eps_x: series(&|k| tq(k) * schedule.eval(times[k]) * traj.samples[k].x.norm_squared())?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::log_grid;

    #[test]
    fn inverse_square_integral() {
        let t = log_grid(1.0, 1e4, 200);
        let v: Vec<f64> = t.iter().map(|t| t.powi(-2)).collect();
        let acc = accumulate_series(&t, &v).unwrap();
        let exact = 1.0 - 1e-4;
        assert!((acc.total - exact).abs() <= 0.01 * exact, "{}", acc.total);
        assert_eq!(acc.decades.len(), 4);
        let sum: f64 = acc.decades.iter().map(|d| d.increment).sum();
        assert!((sum - acc.total).abs() < 1e-12);
        assert!(acc.last_decade_fraction() < 1e-3);
    }

    #[test]
    fn zero_integrand() {
        let t = log_grid(1.0, 1e3, 50);
        let acc = accumulate_series(&t, &vec![0.0; 50]).unwrap();
        assert_eq!(acc.total, 0.0);
        assert_eq!(acc.last_decade_fraction(), 0.0);
    }

    #[test]
    fn running_value_is_nondecreasing_for_nonnegative_integrands() {
        let t = log_grid(1.0, 1e3, 80);
        let v: Vec<f64> = t.iter().map(|t| (t.sin()).abs() / t).collect();
        let acc = accumulate_series(&t, &v).unwrap();
        assert!(acc.running.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn needs_two_samples() {
        assert!(accumulate_series(&[1.0], &[1.0]).is_err());
    }
}
