use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of usable points in the tail window.
pub const MIN_FIT_POINTS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub r2: f64,
    pub points: usize,
}

/// Least-squares slope of `log y` against `log t` over the last
/// `tail_fraction` of the log-time range, using the points with `y > 0`.
pub fn fit_decay_exponent(series: &[(f64, f64)], tail_fraction: f64) -> Result<DecayFit> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidInput(format!("tail_fraction must lie in (0, 1], got {tail_fraction}")));
    }
    let times = series.iter().map(|&(t, _)| t).filter(|t| *t > 0.0 && t.is_finite());
    let (lo, hi) = times.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| (lo.min(t), hi.max(t)));
    if !(hi > lo) {
        return Err(Error::InsufficientData("series spans no time range".into()));
    }
    let cut = hi.ln() - tail_fraction * (hi.ln() - lo.ln());
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|&&(t, y)| t > 0.0 && t.is_finite() && t.ln() >= cut - 1e-12 && y > 0.0 && y.is_finite())
        .map(|&(t, y)| (t.ln(), y.ln()))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} positive points in the tail window, need {MIN_FIT_POINTS}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(DecayFit { slope, r2, points: pts.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::log_grid;

    #[test]
    fn exact_power_law() {
        let s: Vec<_> = log_grid(1.0, 1e4, 200).into_iter().map(|t| (t, t.powi(-2))).collect();
        let fit = fit_decay_exponent(&s, 0.3).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-9);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn perturbed_power_law() {
        let s: Vec<_> = log_grid(1.0, 1e4, 200)
            .into_iter()
            .map(|t| (t, 5.0 / t * (1.0 + 0.01 * t.ln().sin())))
            .collect();
        let fit = fit_decay_exponent(&s, 0.3).unwrap();
        assert!((fit.slope + 1.0).abs() < 0.02, "{}", fit.slope);
    }

    #[test]
    fn zero_series_is_insufficient() {
        let s: Vec<_> = log_grid(1.0, 1e4, 200).into_iter().map(|t| (t, 0.0)).collect();
        assert!(matches!(fit_decay_exponent(&s, 0.3), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn tail_window_only() {
        // steep head, flat tail: the fit must only see the tail
        let s: Vec<_> = log_grid(1.0, 1e4, 200)
            .into_iter()
            .map(|t| (t, if t < 100.0 { t.powi(-5) } else { 1e-10 }))
            .collect();
        let fit = fit_decay_exponent(&s, 0.3).unwrap();
        assert!(fit.slope.abs() < 1e-9);
    }
}
