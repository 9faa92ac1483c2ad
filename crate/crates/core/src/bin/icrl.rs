use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use icrl::exploration::StrategyKind;
use icrl::harness::{export_env, replay_run, run_prepared, write_run, ExperimentConfig, LayoutSource, Prepared};
use icrl::IcrlError;

#[derive(Parser)]
#[command(name = "icrl", about = "Strategic exploration for inverse constrained RL on gridworlds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run(Common),
    /// Run every strategy for every configured seed.
    Sweep(Common),
    /// Replay a saved run and check its metrics reproduce exactly.
    Eval {
        /// Run directory holding config.txt and metrics.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the layout and the CMDP matrices as CSV.
    ExportEnv(Common),
}

#[derive(Args)]
struct Common {
    /// Flat key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_strategy)]
    strategy: Option<StrategyKind>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    setting: Option<u8>,
}

fn parse_strategy(s: &str) -> Result<StrategyKind, String> {
    s.parse().map_err(|e: IcrlError| e.to_string())
}

enum Failure {
    Usage(String),
    Runtime(IcrlError),
}

impl From<IcrlError> for Failure {
    fn from(e: IcrlError) -> Self {
        match e {
            IcrlError::Config(_) | IcrlError::Layout { .. } | IcrlError::InvalidArgument(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other),
        }
    }
}

fn build_config(c: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::from_file(p).map_err(|e| match e {
            IcrlError::Io(io) => Failure::Runtime(IcrlError::Io(io)),
            other => Failure::from(other),
        })?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = c.strategy {
        cfg.strategy = s;
    }
    if let Some(seed) = c.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(out) = &c.out {
        cfg.output = out.clone();
    }
    if let Some(k) = c.setting {
        cfg.layout = LayoutSource::Setting(k);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn prepare(cfg: &ExperimentConfig) -> Result<Prepared, Failure> {
    let prep = Prepared::new(cfg)?;
    for w in &prep.warnings {
        eprintln!("warning: {w}");
    }
    Ok(prep)
}

fn run_one(prep: &Prepared, seed: u64, dir: &std::path::Path) -> Result<(), Failure> {
    let log = run_prepared(prep, seed, |_| {})?;
    write_run(&log, prep, dir)?;
    let last = log.last();
    println!(
        "{} seed={} k={} samples={} eps_k={:.6} disc_reward={:.6} disc_cost={:.6} wgiou={:.6} -> {}",
        log.strategy,
        seed,
        last.k,
        last.samples,
        last.eps_k,
        last.disc_reward,
        last.disc_cost,
        last.wgiou,
        dir.display()
    );
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run(c) => {
            let cfg = build_config(&c)?;
            let prep = prepare(&cfg)?;
            let seed = cfg.seeds[0];
            run_one(&prep, seed, &cfg.output)
        }
        Command::Sweep(c) => {
            let base = build_config(&c)?;
            let strategies: Vec<StrategyKind> = match c.strategy {
                Some(s) => vec![s],
                None => StrategyKind::ALL.to_vec(),
            };
            let jobs: Vec<(Prepared, u64)> = strategies
                .iter()
                .map(|&s| prepare(&ExperimentConfig { strategy: s, ..base.clone() }))
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .flat_map(|p| base.seeds.iter().map(move |&seed| (p.clone(), seed)))
                .collect();
            jobs.par_iter()
                .map(|(prep, seed)| {
                    let dir = base.output.join(prep.config.strategy.name()).join(format!("seed{seed}"));
                    run_one(prep, *seed, &dir)
                })
                .collect::<Result<Vec<()>, Failure>>()?;
            Ok(())
        }
        Command::Eval { out } => {
            let replay = replay_run(&out)?;
            match replay.first_mismatch {
                None => {
                    println!("metrics reproduced byte-identically ({} lines)", replay.saved.lines().count());
                    Ok(())
                }
                Some(line) => {
                    std::fs::write(out.join("metrics.eval.csv"), &replay.recomputed).map_err(IcrlError::from)?;
                    Err(Failure::Runtime(IcrlError::InvalidModel(format!(
                        "recomputed metrics differ from {} at line {line}; see metrics.eval.csv",
                        out.join("metrics.csv").display()
                    ))))
                }
            }
        }
        Command::ExportEnv(c) => {
            let cfg = build_config(&c)?;
            let prep = prepare(&cfg)?;
            export_env(&prep, &cfg.output)?;
            println!("wrote environment to {}", cfg.output.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
