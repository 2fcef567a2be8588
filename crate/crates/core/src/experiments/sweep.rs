use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{RunConfig, CONFIG_SCHEMA_VERSION, DEFAULT_T_END};
use super::run::{create_dir, execute, write_artifacts, RunSummary};
use crate::dynamics::{DynamicsParams, Regime, ScheduleSpec};
use crate::error::{Error, Result};
use crate::problems::Corpus;

pub const DEFAULT_P_VALUES: [f64; 6] = [0.6, 0.9, 1.2, 1.5, 1.8, 2.0];
pub const DEFAULT_Q_VALUES: [f64; 3] = [0.3, 0.5, 0.7];

fn schema_version() -> u32 {
    CONFIG_SCHEMA_VERSION
}

/// Grid of `(q, p)` cells around a base run. Each cell replaces `q` in the
/// dynamics and `p` in the schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub base: RunConfig,
    pub p_values: Vec<f64>,
    pub q_values: Vec<f64>,
}

impl Default for SweepConfig {
    /// `quad_line_2` from `(5, 3)` at rest, `α = 2, γ = 1, β = 0, a = 1`.
    fn default() -> Self {
        let params = DynamicsParams::new(2.0, 0.5, 1.0, 0.0, 1.0).expect("valid");
        let mut base = RunConfig::new("quad_line_2", params, ScheduleSpec::power(1.0, 1.0), DEFAULT_T_END);
        base.x0 = Some(vec![5.0, 3.0]);
        base.v0 = Some(vec![0.0, 0.0]);
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            base,
            p_values: DEFAULT_P_VALUES.to_vec(),
            q_values: DEFAULT_Q_VALUES.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub q: f64,
    pub p: f64,
    pub dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<RunSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SweepCell {
    pub fn regime(&self) -> Option<Regime> {
        self.summary.as_ref().map(|s| s.regime.regime)
    }

    pub fn final_dist(&self) -> Option<f64> {
        self.summary.as_ref().map(|s| s.final_distances.dist_to_xstar)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub cells: Vec<SweepCell>,
}

fn regime_letter(r: Option<Regime>) -> &'static str {
    match r {
        Some(Regime::Weak) => "W",
        Some(Regime::Strong) => "S",
        Some(Regime::Critical) => "C",
        Some(Regime::Outside) => "O",
        None => "!",
    }
}

impl SweepReport {
    pub fn cell(&self, q: f64, p: f64) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.q == q && c.p == p)
    }

    /// Regime letter and final `‖x(T) − x*‖` per cell, `q` down and `p` across.
    pub fn table(&self) -> String {
        let mut ps: Vec<f64> = self.cells.iter().map(|c| c.p).collect();
        let mut qs: Vec<f64> = self.cells.iter().map(|c| c.q).collect();
        for v in [&mut ps, &mut qs] {
            v.sort_by(f64::total_cmp);
            v.dedup();
        }
        let mut s = String::from("q \\ p ");
        for p in &ps {
            let _ = write!(s, "{:>13}", p);
        }
        s.push('\n');
        for q in &qs {
            let _ = write!(s, "{:<6}", q);
            for p in &ps {
                let entry = match self.cell(*q, *p) {
                    Some(c) => match c.final_dist() {
                        Some(d) => format!("{} {:.3e}", regime_letter(c.regime()), d),
                        None => "error".to_string(),
                    },
                    None => "-".to_string(),
                };
                let _ = write!(s, "{entry:>13}");
            }
            s.push('\n');
        }
        s.push_str("W weak, S strong, C critical, O outside; value is final |x(T) - x*|\n");
        s
    }
}

fn cell_dir(out: &Path, q: f64, p: f64) -> PathBuf {
    out.join(format!("q{q}_p{p}"))
}

fn run_cell(cfg: &SweepConfig, corpus: &Corpus, out: &Path, q: f64, p: f64) -> SweepCell {
    let dir = cell_dir(out, q, p);
    let result = (|| -> Result<RunSummary> {
        let b = cfg.base.dynamics;
        let mut run = cfg.base.clone();
        run.dynamics = DynamicsParams::new(b.alpha(), q, b.gamma(), b.beta(), b.t0())?;
        run.schedule.p = p;
        let outcome = execute(&run, corpus)?;
        write_artifacts(&outcome, &dir)?;
        Ok(outcome.summary)
    })();
    match result {
        Ok(s) => SweepCell { q, p, dir, summary: Some(s), error: None },
        Err(e) => SweepCell { q, p, dir, summary: None, error: Some(e.to_string()) },
    }
}

/// Runs every cell on a pool of `workers` threads (all cores when `None`).
/// A failing cell records its error and does not stop the others.
pub fn cmd_sweep(cfg: &SweepConfig, corpus: &Corpus, out: &Path, workers: Option<usize>) -> Result<SweepReport> {
    if cfg.p_values.is_empty() || cfg.q_values.is_empty() {
        return Err(Error::InvalidInput("sweep grid is empty".into()));
    }
    create_dir(out)?;
    let grid: Vec<(f64, f64)> = cfg.q_values.iter().flat_map(|&q| cfg.p_values.iter().map(move |&p| (q, p))).collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err(Error::InvalidInput("--workers must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let cells = pool.install(|| grid.par_iter().map(|&(q, p)| run_cell(cfg, corpus, out, q, p)).collect());
    let report = SweepReport { cells };

    let path = out.join("regime_map.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    let io = |e: csv::Error| Error::InvalidInput(format!("{}: {e}", path.display()));
    w.write_record(["q", "p", "regime", "final_dist_to_xstar", "error"]).map_err(io)?;
    for c in &report.cells {
        let regime = c.regime().map(|r| format!("{r:?}")).unwrap_or_default();
        let dist = c.final_dist().map(|d| format!("{d:.16e}")).unwrap_or_default();
        w.write_record([c.q.to_string(), c.p.to_string(), regime, dist, c.error.clone().unwrap_or_default()])
            .map_err(io)?;
    }
    w.flush().map_err(|source| Error::Io { path: path.clone(), source })?;
    let table = out.join("regime_map.txt");
    std::fs::write(&table, report.table()).map_err(|source| Error::Io { path: table, source })?;
    Ok(report)
}
