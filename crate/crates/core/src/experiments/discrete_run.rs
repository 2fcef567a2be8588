use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::DiscreteConfig;
use super::run::{create_dir, write_json};
use crate::discrete::{self, default_stepsize, DiscreteParams, DiscreteRun};
use crate::error::{Error, Result};
use crate::problems::Corpus;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSummary {
    pub objective_id: String,
    pub params: DiscreteParams,
    pub stepsize_estimated: bool,
    pub iterations: u64,
    pub final_gap: f64,
    pub final_dist_to_xstar: f64,
    /// Always true: no convergence result is known for the discrete algorithm.
    pub exploratory: bool,
}

pub fn execute_discrete(cfg: &DiscreteConfig, corpus: &Corpus) -> Result<(DiscreteSummary, DiscreteRun)> {
    let obj = cfg.resolve_objective(corpus)?;
    let (x0, x1) = cfg.initial_pair(&obj)?;
    let s = cfg.s.unwrap_or_else(|| default_stepsize(&obj, &x1));
    let params = DiscreteParams::new(cfg.alpha, cfg.q, cfg.gamma, cfg.beta, s, cfg.a, cfg.p, cfg.n0)
        .map_err(|e| Error::Config { path: "<root>".into(), message: e.to_string() })?;
    let run = discrete::run(&params, &obj, &x0, &x1, cfg.iterations, cfg.history_points)?;
    let summary = DiscreteSummary {
        objective_id: obj.id().to_string(),
        params,
        stepsize_estimated: cfg.s.is_none(),
        iterations: run.iterations,
        final_gap: run.final_gap,
        final_dist_to_xstar: run.final_dist_to_xstar,
        exploratory: true,
    };
    Ok((summary, run))
}

/// Writes `history.csv` (`n, gap, dist_to_xstar`) and `summary.json` under `out`.
pub fn cmd_discrete(cfg: &DiscreteConfig, corpus: &Corpus, out: &Path) -> Result<DiscreteSummary> {
    let (summary, run) = execute_discrete(cfg, corpus)?;
    create_dir(out)?;
    let path = out.join("history.csv");
    let io = |e: csv::Error| Error::InvalidInput(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(&path).map_err(io)?;
    w.write_record(["n", "gap", "dist_to_xstar"]).map_err(io)?;
    for h in &run.history {
        w.write_record([h.n.to_string(), format!("{:.16e}", h.gap), format!("{:.16e}", h.dist_to_xstar)])
            .map_err(io)?;
    }
    w.flush().map_err(|source| Error::Io { path: path.clone(), source })?;
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}
