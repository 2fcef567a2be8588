//! Dormand–Prince 5(4) with Hairer's step-size controller and the free
//! order-4 continuous extension.

use nalgebra::DVector;

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFE: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const PI_BETA: f64 = 0.04;

pub(crate) struct Settings {
    pub rel_tol: f64,
    pub error_scale: super::ErrorScale,
    pub abs_tol: f64,
    pub initial_step: Option<f64>,
    pub max_step: f64,
    pub max_step_fraction: Option<f64>,
    pub max_steps: usize,
}

#[derive(Default, Clone, Copy, Debug)]
pub(crate) struct Counters {
    pub steps: u64,
    pub rejections: u64,
    pub evals: u64,
}

/// Interpolation data of one accepted step.
pub(crate) struct Dense {
    t_old: f64,
    t_new: f64,
    h: f64,
    r: [DVector<f64>; 5],
}

impl Dense {
    pub fn t_end(&self) -> f64 {
        self.t_new
    }

    pub fn eval(&self, t: f64) -> DVector<f64> {
        let th = (t - self.t_old) / self.h;
        let th1 = 1.0 - th;
        &self.r[0] + (&self.r[1] + (&self.r[2] + (&self.r[3] + &self.r[4] * th1) * th) * th1) * th
    }
}

fn scale(y0: &DVector<f64>, y1: &DVector<f64>, s: &Settings) -> DVector<f64> {
    match s.error_scale {
        super::ErrorScale::Componentwise => y0.zip_map(y1, |a, b| s.abs_tol + s.rel_tol * a.abs().max(b.abs())),
        super::ErrorScale::StateNorm => {
            let m = y0.amax().max(y1.amax());
            DVector::from_element(y0.len(), s.abs_tol + s.rel_tol * m)
        }
    }
}

fn rms(v: &DVector<f64>, sk: &DVector<f64>) -> f64 {
    let n = v.len().max(1) as f64;
    (v.component_div(sk).norm_squared() / n).sqrt()
}

fn initial_step<F>(f: &F, t: f64, y: &DVector<f64>, f0: &DVector<f64>, hmax: f64, s: &Settings, c: &mut Counters) -> f64
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
{
    let sk = scale(y, y, s);
    let d0 = rms(y, &sk);
    let d1 = rms(f0, &sk);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(hmax);
    let y1 = y + f0 * h0;
    let f1 = f(t + h0, &y1);
    c.evals += 1;
    let d2 = rms(&(f1 - f0), &sk) / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / dm).powf(0.2) };
    // tiny absolute tolerances on zero components can drive the estimate to 0
    let floor = 1e-10 * t.abs().max(1.0);
    (100.0 * h0).min(h1).max(floor).min(hmax)
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end`, calling `on_step` with the
/// dense output of every accepted step.
pub(crate) fn solve<F, S>(
    f: F,
    t0: f64,
    y0: DVector<f64>,
    t_end: f64,
    s: &Settings,
    counters: &mut Counters,
    mut on_step: S,
) -> Result<DVector<f64>>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
    S: FnMut(&Dense) -> Result<()>,
{
    let hmax_at = |t: f64| {
        let cap = s.max_step_fraction.map_or(f64::INFINITY, |frac| frac * t.abs());
        s.max_step.min(cap)
    };
    let non_finite = |t: f64, what: &str| Error::NonFinite { t, what: what.to_string() };
    let underflow = |t: f64, h: f64, y: &DVector<f64>| {
        let d = y.len() / 2;
        Error::StepSizeUnderflow {
            t,
            h,
            last_x: y.rows(0, d).iter().copied().collect(),
            last_v: y.rows(d, y.len() - d).iter().copied().collect(),
        }
    };

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    counters.evals += 1;
    if k1.iter().any(|v| !v.is_finite()) {
        return Err(non_finite(t, "derivative at initial state"));
    }
    let mut h = match s.initial_step {
        Some(h) => h.min(hmax_at(t)),
        None => initial_step(&f, t, &y, &k1, hmax_at(t), s, counters),
    };
    let mut facold: f64 = 1e-4;
    let mut last_rejected = false;
    let expo1 = 0.2 - PI_BETA * 0.75;

    while t < t_end {
        if counters.steps + counters.rejections >= s.max_steps as u64 {
            return Err(Error::StepLimit { t, limit: s.max_steps });
        }
        let mut last = false;
        h = h.min(hmax_at(t));
        if t + h >= t_end || t + 1.01 * h >= t_end {
            h = t_end - t;
            last = true;
        }
        if h < 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(underflow(t, h, &y));
        }

        let k2 = f(t + C2 * h, &(&y + &k1 * (h * A21)));
        let k3 = f(t + C3 * h, &(&y + (&k1 * A31 + &k2 * A32) * h));
        let k4 = f(t + C4 * h, &(&y + (&k1 * A41 + &k2 * A42 + &k3 * A43) * h));
        let k5 = f(t + C5 * h, &(&y + (&k1 * A51 + &k2 * A52 + &k3 * A53 + &k4 * A54) * h));
        let k6 = f(t + h, &(&y + (&k1 * A61 + &k2 * A62 + &k3 * A63 + &k4 * A64 + &k5 * A65) * h));
        let y_new = &y + (&k1 * A71 + &k3 * A73 + &k4 * A74 + &k5 * A75 + &k6 * A76) * h;
        let k7 = f(t + h, &y_new);
        counters.evals += 6;

        let err_vec = (&k1 * E1 + &k3 * E3 + &k4 * E4 + &k5 * E5 + &k6 * E6 + &k7 * E7) * h;
        let err = rms(&err_vec, &scale(&y, &y_new, s));
        if !err.is_finite() || k7.iter().any(|v| !v.is_finite()) {
            counters.rejections += 1;
            last_rejected = true;
            h *= 0.1;
            continue;
        }

        let fac11 = err.powf(expo1);
        let fac = (fac11 / facold.powf(PI_BETA)) / SAFE;
        let fac = fac.clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
        let mut h_new = h / fac;

        if err <= 1.0 {
            facold = err.max(1e-4);
            counters.steps += 1;
            let ydiff = &y_new - &y;
            let bspl = &k1 * h - &ydiff;
            let r4 = &ydiff - &k7 * h - &bspl;
            let r5 = (&k1 * D1 + &k3 * D3 + &k4 * D4 + &k5 * D5 + &k6 * D6 + &k7 * D7) * h;
            let t_new = if last { t_end } else { t + h };
            let dense = Dense { t_old: t, t_new, h, r: [y.clone(), ydiff, bspl, r4, r5] };
            t = t_new;
            on_step(&dense)?;
            y = y_new;
            k1 = k7;
            if last_rejected {
                h_new = h_new.min(h);
            }
            last_rejected = false;
            h = h_new;
        } else {
            counters.rejections += 1;
            last_rejected = true;
            h /= (1.0 / FAC_MIN).min(fac11 / SAFE);
        }
    }
    Ok(y)
}
