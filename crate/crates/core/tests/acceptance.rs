//! Acceptance suite: one PASS/FAIL line per criterion. Verdicts are recomputed
//! here from the measured values against thresholds pinned in this file, so
//! the library's own bookkeeping is not trusted.

use std::io::Write;
use tikflow::experiments::accept::{
    equivalence_residuals, line_config, oracle_deviation, pd_config, run_acceptance, CRITICAL_P,
    STRONG_INTEGRALS_P, STRONG_P, WEAK_P,
};
use tikflow::experiments::{CheckStatus, CheckVerdict, Criterion, CRITERIA};
use tikflow::problems::Corpus;

const GAP_SLOPE_MAX: f64 = -1.0 + 0.1;
const SPEED_SLOPE_MAX: f64 = -0.5 + 0.1;
const A1_RUNTIME_SECS: f64 = 30.0;
const DECADE_FRACTION_MAX: f64 = 0.05;
const A3_DIST_MAX: f64 = 0.05;
const A4_FACTOR: f64 = 2.0;
const A5_SLOPE_MAX: f64 = 0.05;
const A7_TOL: f64 = 1e-10;
const A8_DEV_MAX: f64 = 1e-5;
const A9_TOL: f64 = 1e-12;
const A11_GAP_MAX: f64 = 1e-4;

fn value(v: &CheckVerdict, name: &str) -> f64 {
    v.measurements
        .iter()
        .find(|m| m.name == name)
        .unwrap_or_else(|| panic!("{} has no measurement `{name}`: {v:?}", v.id))
        .value
}

fn values_with_suffix(v: &CheckVerdict, suffix: &str) -> Vec<f64> {
    let out: Vec<f64> = v.measurements.iter().filter(|m| m.name.ends_with(suffix)).map(|m| m.value).collect();
    assert!(!out.is_empty(), "{} has no `*{suffix}` measurements", v.id);
    out
}

/// Independent pass/fail decision from the raw measurements.
fn decide(v: &CheckVerdict) -> bool {
    if v.status == CheckStatus::Fail && v.measurements.is_empty() {
        return false;
    }
    match v.id.as_str() {
        "A1" => {
            value(v, "gap_shifted_slope") <= GAP_SLOPE_MAX
                && value(v, "speed_slope") <= SPEED_SLOPE_MAX
                && value(v, "runtime_secs") < A1_RUNTIME_SECS
        }
        "A2" | "A10" => {
            let f = values_with_suffix(v, "_last_decade_fraction");
            f.len() == 3 && f.iter().all(|x| *x <= DECADE_FRACTION_MAX)
        }
        "A3" => value(v, "final_dist_to_xstar") <= A3_DIST_MAX && value(v, "max_decade_ratio") < 1.0,
        "A4" => {
            let m = &v.measurements[0];
            m.threshold > 0.0 && m.value > m.threshold
        }
        "A5" => {
            value(v, "sup_norm_x").is_finite()
                && value(v, "t2q_gap_shifted_slope") <= A5_SLOPE_MAX
                && value(v, "tq_speed_slope") <= A5_SLOPE_MAX
        }
        "A6" => value(v, "max_w_violations") == 0.0,
        "A7" => {
            values_with_suffix(v, ".norm_excess").iter().all(|x| *x <= A7_TOL)
                && values_with_suffix(v, ".max_residual").iter().all(|x| *x <= A7_TOL)
                && values_with_suffix(v, ".min_relative_drop").iter().all(|x| *x > 0.0)
        }
        "A8" => values_with_suffix(v, ".max_deviation").iter().all(|x| *x <= A8_DEV_MAX),
        "A9" => value(v, "max_relative_residual") <= A9_TOL && value(v, "failed_draws") == 0.0,
        "A11" => value(v, "final_gap") <= A11_GAP_MAX,
        other => panic!("unexpected criterion {other}"),
    }
}

#[test]
fn acceptance_suite() {
    let corpus = Corpus::builtin();
    let all: Vec<&Criterion> = CRITERIA.iter().collect();
    let report = run_acceptance(&corpus, &all);
    assert_eq!(report.verdicts.len(), 11);

    let mut failures = Vec::new();
    let a3 = value(report.get("A3").unwrap(), "final_dist_to_xstar");
    let a4 = &report.get("A4").unwrap().measurements;
    if a4.is_empty() || (a4[0].threshold - A4_FACTOR * a3).abs() > 1e-12 * a3 {
        failures.push(format!("A4 threshold {a4:?} is not {A4_FACTOR} x {a3}"));
    }
    writeln!(std::io::stdout().lock()).unwrap();
    for (c, v) in CRITERIA.iter().zip(&report.verdicts) {
        assert_eq!(c.id, v.id);
        let ok = decide(v);
        let measured: Vec<String> = v.measurements.iter().map(|m| format!("{}={:.4e}", m.name, m.value)).collect();
        let mut line = format!("{:<4} {:<21} {} {}", v.id, v.name, if ok { "PASS" } else { "FAIL" }, measured.join(" "));
        if v.exploratory {
            line.push_str(" (exploratory, no convergence guarantee)");
        }
        if let Some(n) = &v.note {
            line.push_str(&format!(" [{n}]"));
        }
        // Bypass libtest capture so the lines show in a plain `cargo test`.
        writeln!(std::io::stdout().lock(), "{line}").unwrap();
        if ok != (v.status == CheckStatus::Pass) {
            failures.push(format!("{}: library verdict {:?} disagrees with recomputed {ok}", v.id, v.status));
        }
        if !ok {
            failures.push(format!("{} failed", v.id));
        }
    }
    assert!(report.get("A11").unwrap().exploratory);
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn acceptance_configs_match_the_criteria() {
    let a1 = pd_config(WEAK_P);
    assert_eq!(a1.objective_id, "quad_pd_5");
    assert_eq!((a1.dynamics.alpha(), a1.dynamics.q(), a1.dynamics.gamma(), a1.dynamics.beta()), (2.0, 0.5, 1.0, 0.0));
    assert_eq!((a1.schedule.a, a1.schedule.p, a1.t_end), (1.0, 1.8, 1e4));
    assert!(a1.x0.is_none() && a1.v0.is_none());

    let a3 = line_config(STRONG_P);
    assert_eq!(a3.objective_id, "quad_line_2");
    assert_eq!(a3.x0.as_deref(), Some(&[5.0, 3.0][..]));
    assert_eq!(a3.v0.as_deref(), Some(&[0.0, 0.0][..]));
    assert_eq!((a3.schedule.p, a3.t_end), (0.9, 1e4));
    assert_eq!(CRITICAL_P, 1.5);
    assert_eq!(STRONG_INTEGRALS_P, 1.2);
    assert!(STRONG_INTEGRALS_P > 2.0 * a3.dynamics.q());
}

#[test]
fn oracle_deviation_matches_reference_on_t100() {
    let corpus = Corpus::builtin();
    let mut cfg = pd_config(WEAK_P);
    cfg.t_end = 100.0;
    let dev = oracle_deviation(&cfg, &corpus, 1e-4).unwrap();
    assert!(dev <= A8_DEV_MAX, "{dev}");
}

#[test]
fn equivalence_draws_are_reproducible() {
    let corpus = Corpus::builtin();
    let a = equivalence_residuals(&corpus, 7, 20).unwrap();
    let b = equivalence_residuals(&corpus, 7, 20).unwrap();
    assert_eq!(a, b);
    assert!(a.iter().all(|r| *r <= A9_TOL));
}
