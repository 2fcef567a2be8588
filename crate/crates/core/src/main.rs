use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tikflow::dynamics::Regime;
use tikflow::experiments::{
    self, cmd_discrete, cmd_run, cmd_sweep, find_criterion, run_acceptance, CheckStatus, Criterion, DiscreteConfig,
    RunConfig, SweepConfig, CRITERIA,
};
use tikflow::experiments::config::in_file;
use tikflow::problems::Corpus;
use tikflow::{Error, Result};

#[derive(Parser)]
#[command(name = "tikflow", version, about = "Inertial dynamics with Tikhonov regularization: runs, sweeps and checks")]
struct Cli {
    /// Objective corpus (JSON); the built-in corpus when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    corpus: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (default: $TIKFLOW_OUT, else ./tikflow-out).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    Weak,
    Strong,
    Critical,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write trajectory.csv and summary.json.
    Run {
        #[command(flatten)]
        common: Common,
        /// Without --config: run the regime default on this objective.
        #[arg(long, default_value = "quad_pd_5")]
        objective: String,
        #[arg(long, value_enum, default_value = "weak")]
        regime: RegimeArg,
        /// Fraction of the log-time range used by the decay fits.
        #[arg(long, value_name = "F")]
        tail_fraction: Option<f64>,
    },
    /// Run the (q, p) grid and print the regime map.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "F")]
        tail_fraction: Option<f64>,
        /// Worker threads (default: all cores).
        #[arg(long, value_name = "N")]
        workers: Option<usize>,
    },
    /// Run the discrete algorithm and write history.csv.
    Discrete {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "quad_pd_5")]
        objective: String,
    },
    /// Evaluate the acceptance criteria; exit status 0 iff none fails.
    Accept {
        /// Criterion id or name (repeatable), e.g. A1 or weak_rates.
        #[arg(long, value_name = "ID")]
        only: Vec<String>,
        /// Also write acceptance.json here.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

fn load_corpus(path: &Option<PathBuf>) -> Result<Corpus> {
    match path {
        Some(p) => Corpus::from_file(p),
        None => Ok(Corpus::builtin()),
    }
}

fn apply_tail(cfg: &mut RunConfig, tail: Option<f64>) {
    if let Some(f) = tail {
        cfg.tail_fraction = f;
    }
}

fn real_main(cli: Cli) -> Result<bool> {
    let corpus = load_corpus(&cli.corpus)?;
    match cli.command {
        Command::Run { common, objective, regime, tail_fraction } => {
            let mut cfg = match &common.config {
                Some(p) => {
                    let cfg = RunConfig::from_file(p)?;
                    cfg.validate(&corpus).map_err(|e| in_file(e, p))?;
                    cfg
                }
                None => {
                    let r = match regime {
                        RegimeArg::Weak => Regime::Weak,
                        RegimeArg::Strong => Regime::Strong,
                        RegimeArg::Critical => Regime::Critical,
                    };
                    RunConfig::regime_default(&objective, r)?
                }
            };
            apply_tail(&mut cfg, tail_fraction);
            let out = experiments::output_dir(common.out, cfg.outputs.clone());
            let s = cmd_run(&cfg, &corpus, &out)?;
            println!("objective {}  schedule {}  regime {:?}", s.objective_id, s.schedule, s.regime.regime);
            println!("  {}", s.regime.rationale);
            println!(
                "final |x - x*| = {:.6e}, |x - x_eps| = {:.6e}",
                s.final_distances.dist_to_xstar, s.final_distances.dist_to_tikhonov
            );
            for note in &s.notes {
                println!("note: {note}");
            }
            for c in &s.checks {
                println!("{}", c.line());
            }
            println!("wrote {}", out.display());
            Ok(s.checks.iter().all(|c| c.status != CheckStatus::Fail))
        }
        Command::Sweep { common, tail_fraction, workers } => {
            let mut cfg = match &common.config {
                Some(p) => {
                    let cfg = experiments::config::read_json::<SweepConfig>(p)?;
                    cfg.base.validate(&corpus).map_err(|e| in_file(e, p))?;
                    cfg
                }
                None => SweepConfig::default(),
            };
            apply_tail(&mut cfg.base, tail_fraction);
            let out = experiments::output_dir(common.out, cfg.base.outputs.clone());
            let report = cmd_sweep(&cfg, &corpus, &out, workers)?;
            print!("{}", report.table());
            for c in report.cells.iter().filter(|c| c.error.is_some()) {
                println!("cell q={} p={} failed: {}", c.q, c.p, c.error.as_deref().unwrap_or(""));
            }
            println!("wrote {}", out.display());
            Ok(report.cells.iter().all(|c| c.error.is_none()))
        }
        Command::Discrete { common, objective } => {
            let cfg = match &common.config {
                Some(p) => DiscreteConfig::from_file(p)?,
                None => DiscreteConfig::exploratory(&objective),
            };
            let out = experiments::output_dir(common.out, cfg.outputs.clone());
            let s = cmd_discrete(&cfg, &corpus, &out)?;
            println!(
                "objective {}  s = {:.6e}  N = {}  gap = {:.6e}  |x - x*| = {:.6e}  (exploratory)",
                s.objective_id,
                s.params.stepsize(),
                s.iterations,
                s.final_gap,
                s.final_dist_to_xstar
            );
            println!("wrote {}", out.display());
            Ok(true)
        }
        Command::Accept { only, out } => {
            let selected: Vec<&Criterion> = if only.is_empty() {
                CRITERIA.iter().collect()
            } else {
                only.iter()
                    .map(|k| find_criterion(k).ok_or_else(|| Error::InvalidInput(format!("unknown criterion `{k}`"))))
                    .collect::<Result<_>>()?
            };
            let report = run_acceptance(&corpus, &selected);
            for line in report.lines() {
                println!("{line}");
            }
            if let Some(dir) = out {
                experiments::run::create_dir(&dir)?;
                experiments::run::write_json(&dir.join("acceptance.json"), &report)?;
            }
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    match real_main(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
