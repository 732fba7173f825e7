use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qbm_cli::{CliError, Overrides, RunConfig};
use qbm_network::{Backend, SetName};

#[derive(Parser)]
#[command(
    name = "qbm",
    version,
    about = "Chimera-graph Boltzmann machine emulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep a common qubit bias over [-1, 1] and fit the response sigmoid.
    CharacterizeQubits(Common),
    /// Sweep the coupling of disjoint zero-bias qubit pairs.
    CharacterizeCoupling(Common),
    /// Train on an MNIST split and write a checkpoint plus score tables.
    Train(Common),
    /// Score a checkpoint on the training or test digits.
    Test {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// training or test
        #[arg(long, value_parser = parse_set)]
        set: Option<SetName>,
    },
    /// Sample a TOML problem file.
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        problem: Option<PathBuf>,
        #[arg(long)]
        reads: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// gibbs or exact
    #[arg(long, value_parser = parse_backend)]
    backend: Option<Backend>,
    /// 50, 100 or 200
    #[arg(long)]
    variant: Option<usize>,
    #[arg(long)]
    passes: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_backend(s: &str) -> Result<Backend, String> {
    s.parse()
        .map_err(|e: qbm_sampler::SamplerError| e.to_string())
}

fn parse_set(s: &str) -> Result<SetName, String> {
    match s {
        "training" => Ok(SetName::Training),
        "test" => Ok(SetName::Test),
        other => Err(format!("unknown set {other:?} (expected training or test)")),
    }
}

fn overrides(c: &Common) -> Overrides {
    Overrides {
        seed: c.seed,
        backend: c.backend,
        variant: c.variant,
        passes: c.passes,
        out: c.out.clone(),
        ..Overrides::default()
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::CharacterizeQubits(c) => {
            let cfg = RunConfig::load(c.config.as_deref(), &overrides(&c))?;
            let s = qbm_cli::characterize_qubits(&cfg)?;
            println!(
                "fitted steepness k = {:.4}, max deviation {:.4} over {} steps",
                s.fit.k,
                s.fit.max_deviation,
                s.rows.len()
            );
        }
        Command::CharacterizeCoupling(c) => {
            let cfg = RunConfig::load(c.config.as_deref(), &overrides(&c))?;
            let s = qbm_cli::characterize_coupling(&cfg)?;
            let slope = qbm_sampler::metric_slope(&s.rows, -0.5, 0.5);
            match slope {
                Some(m) => println!("{} pairs, metric slope over [-0.5, 0.5] = {m:.4}", s.pairs),
                None => println!(
                    "{} pairs, too few points in [-0.5, 0.5] for a slope",
                    s.pairs
                ),
            }
        }
        Command::Train(c) => {
            let cfg = RunConfig::load(c.config.as_deref(), &overrides(&c))?;
            let s = qbm_cli::train(&cfg, |p| {
                eprintln!(
                    "pass {:>3}  mean |dw| {:.5}  training top-1 {:.3} top-2 {:.3} top-3 {:.3}",
                    p.pass, p.mean_abs_dw, p.top1, p.top2, p.top3
                );
            })?;
            for r in &s.report.scores {
                println!(
                    "pass {:>3} {:<8} {:.3} {:.3} {:.3}",
                    r.pass, r.set, r.top1, r.top2, r.top3
                );
            }
        }
        Command::Test {
            common,
            checkpoint,
            set,
        } => {
            let o = Overrides {
                checkpoint,
                set,
                ..overrides(&common)
            };
            let cfg = RunConfig::load(common.config.as_deref(), &o)?;
            let s = qbm_cli::test(&cfg)?;
            println!(
                "{} after {} cycles: {:.3} {:.3} {:.3}",
                s.set, s.cycles, s.top1, s.top2, s.top3
            );
        }
        Command::Sample {
            common,
            problem,
            reads,
        } => {
            let o = Overrides {
                problem,
                reads,
                ..overrides(&common)
            };
            let cfg = RunConfig::load(common.config.as_deref(), &o)?;
            let s = qbm_cli::sample(&cfg)?;
            let bits: Vec<String> = s
                .active
                .iter()
                .map(|&q| s.lowest.get(q).to_string())
                .collect();
            println!(
                "{} reads; lowest energy {} at ({})",
                s.reads,
                s.lowest_energy,
                bits.join(",")
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
