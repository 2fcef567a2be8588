use tikflow::discrete::{default_stepsize, estimate_lipschitz};
use tikflow::dynamics::{Regime, ScheduleKind};
use tikflow::experiments::accept::line_config;
use tikflow::experiments::sweep::SweepConfig;
use tikflow::experiments::{
    cmd_sweep, execute, execute_discrete, CheckStatus, DiscreteConfig, RunConfig, CRITERIA,
};
use tikflow::problems::Corpus;

fn corpus() -> Corpus {
    Corpus::builtin()
}

#[test]
fn trivial_run_is_degenerate() {
    let mut cfg = RunConfig::regime_default("quad_pd_5", Regime::Weak).unwrap();
    cfg.x0 = Some(vec![0.0; 5]);
    cfg.t_end = 100.0;
    let o = execute(&cfg, &corpus()).unwrap();
    let s = &o.summary;
    assert!(s.degenerate);
    assert!(s.notes.iter().any(|n| n.contains("degenerate")));
    for name in ["gap_shifted", "speed", "dist_to_xstar", "t2q_gap_shifted"] {
        let f = &s.fitted_exponents[name];
        assert!(f.slope.is_none() && f.note.is_some(), "{name}: {f:?}");
    }
    assert!(s.accumulators.named().iter().all(|(_, a)| a.total == 0.0));
    assert!(o.trajectory.samples.iter().all(|st| st.x.norm() == 0.0 && st.v.norm() == 0.0));
}

#[test]
fn weak_default_run() {
    let cfg = RunConfig::regime_default("quad_pd_5", Regime::Weak).unwrap();
    let o = execute(&cfg, &corpus()).unwrap();
    let s = &o.summary;
    let q = cfg.dynamics.q();
    assert_eq!(s.regime.regime, Regime::Weak);
    assert!(s.slope("gap_shifted").unwrap() <= -2.0 * q + 0.1);
    // strongly convex with minimizer at the origin: the trajectory decays
    assert!(o.trajectory.last().x.norm() < 1e-2);
    // bounded weak energy without growth
    assert!(o.diagnostics.iter().all(|d| d.e_weak.is_finite()));
    assert!(s.slope("e_weak").unwrap() <= 0.05);
    // t^{2q}·gap decreasing over the tail
    assert!(s.slope("t2q_gap_shifted").unwrap() < 0.0);
    assert_eq!(s.check("A1").unwrap().status, CheckStatus::Pass);
    assert_eq!(s.check("A2").unwrap().status, CheckStatus::Pass);
    assert_eq!(s.check("A3").unwrap().status, CheckStatus::Skipped);
}

#[test]
fn weak_energy_bounded_on_every_member() {
    for id in ["quad_pd_5", "quad_line_2", "quad_degen_5", "lse_5"] {
        let cfg = RunConfig::regime_default(id, Regime::Weak).unwrap();
        let s = execute(&cfg, &corpus()).unwrap().summary;
        assert!(s.slope("e_weak").unwrap() <= 0.05, "{id}: {:?}", s.fitted_exponents["e_weak"]);
    }
}

#[test]
fn strong_default_run_on_line() {
    let cfg = RunConfig::regime_default("quad_line_2", Regime::Strong).unwrap();
    let o = execute(&cfg, &corpus()).unwrap();
    let s = &o.summary;
    assert_eq!(s.regime.regime, Regime::Strong);
    assert!(s.final_distances.dist_to_xstar <= 0.05);
    let first = o.diagnostics.first().unwrap().dist_to_tikhonov;
    assert!(s.final_distances.dist_to_tikhonov <= first / 10.0);

    // decay envelope of the strong energy
    let (p, q) = (cfg.schedule.p, cfg.dynamics.q());
    let r = q.max(p - q) + 0.05;
    let bound = (2.0 * r - 2.0).max(r - 1.0) + 0.1;
    assert!(s.slope("e_strong").unwrap() <= bound, "{:?} vs {bound}", s.fitted_exponents["e_strong"]);
    assert_eq!(s.check("A3").unwrap().status, CheckStatus::Pass);
    assert_eq!(s.check("A10").unwrap().status, CheckStatus::Skipped);
}

#[test]
fn strong_regime_integrals_with_p_above_2q() {
    let s = execute(&line_config(1.2), &corpus()).unwrap().summary;
    assert_eq!(s.check("A10").unwrap().status, CheckStatus::Pass);
}

#[test]
fn critical_run_is_bounded() {
    for id in ["quad_pd_5", "lse_5", "quad_degen_5"] {
        let cfg = RunConfig::regime_default(id, Regime::Critical).unwrap();
        let s = execute(&cfg, &corpus()).unwrap().summary;
        assert_eq!(s.regime.regime, Regime::Critical);
        assert_eq!(s.check("A5").unwrap().status, CheckStatus::Pass, "{id}: {:?}", s.check("A5"));
    }
}

#[test]
fn summary_lists_every_criterion() {
    let cfg = RunConfig::regime_default("lse_5", Regime::Strong).unwrap();
    let s = execute(&cfg, &corpus()).unwrap().summary;
    let json: serde_json::Value = serde_json::to_value(&s).unwrap();
    let checks = json["checks"].as_array().unwrap();
    assert_eq!(checks.len(), CRITERIA.len());
    for (c, j) in CRITERIA.iter().zip(checks) {
        assert_eq!(j["id"], c.id);
        assert!(["pass", "fail", "skipped"].contains(&j["status"].as_str().unwrap()));
    }
    assert_eq!(json["checks"][10]["exploratory"], true);
}

#[test]
fn diagnostics_invariants_on_default_runs() {
    for id in ["quad_pd_5", "quad_line_2", "quad_degen_5", "lse_5"] {
        for r in [Regime::Weak, Regime::Strong, Regime::Critical] {
            let mut cfg = RunConfig::regime_default(id, r).unwrap();
            cfg.t_end = 1e3;
            let o = execute(&cfg, &corpus()).unwrap();
            for d in &o.diagnostics {
                assert!(d.gap_shifted >= -1e-10 && d.gap_plain >= -1e-10, "{id} {r:?} at {}", d.t);
                assert!(d.speed >= 0.0 && d.dist_to_tikhonov >= 0.0 && d.reg_grad_norm >= 0.0);
            }
            for (name, acc) in o.summary.accumulators.named() {
                assert!(acc.running.windows(2).all(|w| w[1] >= w[0]), "{id} {r:?} {name}");
            }
            assert_eq!(o.summary.w_violations, 0, "{id} {r:?}");
        }
    }
}

#[test]
fn non_power_schedule_uses_sampled_conditions() {
    let mut cfg = RunConfig::regime_default("quad_line_2", Regime::Strong).unwrap();
    cfg.schedule.kind = ScheduleKind::LogPower;
    cfg.t_end = 1e3;
    let s = execute(&cfg, &corpus()).unwrap().summary;
    assert!(s.condition_report.empirical);
    assert_eq!(s.regime.regime, Regime::Outside);
    assert!(s.notes.iter().any(|n| n.contains("empirical")));
}

#[test]
fn sweep_regime_map() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = SweepConfig::default();
    cfg.q_values = vec![0.5];
    cfg.p_values = vec![0.9, 1.5, 1.8];
    let report = cmd_sweep(&cfg, &corpus(), dir.path(), Some(1)).unwrap();
    assert_eq!(report.cells.len(), 3);
    assert_eq!(report.cell(0.5, 1.5).unwrap().regime(), Some(Regime::Critical));
    let strong = report.cell(0.5, 0.9).unwrap().final_dist().unwrap();
    let weak = report.cell(0.5, 1.8).unwrap().final_dist().unwrap();
    assert!(strong < weak, "{strong} vs {weak}");
    assert!(report.table().contains("C "));
}

#[test]
fn sweep_isolates_failing_cells() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = SweepConfig::default();
    cfg.base.t_end = 100.0;
    cfg.q_values = vec![0.5, 1.5];
    cfg.p_values = vec![0.9];
    let report = cmd_sweep(&cfg, &corpus(), dir.path(), None).unwrap();
    assert!(report.cell(0.5, 0.9).unwrap().summary.is_some());
    let bad = report.cell(1.5, 0.9).unwrap();
    assert!(bad.summary.is_none() && bad.error.is_some());

    cfg.p_values.clear();
    assert!(cmd_sweep(&cfg, &corpus(), dir.path(), None).is_err());
}

#[test]
fn discrete_exploratory_runs() {
    let c = corpus();
    let pd = c.get("quad_pd_5").unwrap();
    let l = pd.as_quadratic().unwrap().largest_eigenvalue();
    let s = default_stepsize(pd, &nalgebra::DVector::zeros(5));
    assert!((s - 0.5 / l).abs() < 1e-9 * s);
    assert!((estimate_lipschitz(pd, &nalgebra::DVector::zeros(5), 300) - l).abs() < 1e-9);

    let (sum, run) = execute_discrete(&DiscreteConfig::exploratory("quad_pd_5"), &c).unwrap();
    assert!(sum.final_gap <= 1e-4);
    assert!(sum.exploratory);
    assert_eq!(run.history.last().unwrap().n, 100_001);

    let (sum, _) = execute_discrete(&DiscreteConfig::exploratory("quad_line_2"), &c).unwrap();
    assert!(sum.final_dist_to_xstar <= 0.1, "{}", sum.final_dist_to_xstar);
}

#[test]
fn discrete_divergence_is_reported() {
    let mut cfg = DiscreteConfig::exploratory("quad_pd_5");
    cfg.s = Some(10.0);
    let err = execute_discrete(&cfg, &corpus()).unwrap_err();
    assert!(err.to_string().contains("diverged"), "{err}");
}
