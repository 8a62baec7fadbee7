use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use skewmor::experiment::{
    run_pipeline, stage_compare, stage_pod, stage_reduce, stage_rom_run, stage_simulate, ExperimentConfig,
};
use skewmor::Error;

#[derive(Parser, Debug)]
#[command(name = "skewmor", version, about = "Structure-preserving model reduction for skew-gradient systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `out_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized checks; the pipeline itself is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Full-order reference trajectory.
    Simulate(Common),
    /// POD basis and singular values from the stored reference.
    Pod(Common),
    /// Reduced-order model from the stored basis.
    Reduce(Common),
    /// Integrate the stored reduced-order model.
    #[command(name = "rom-run")]
    RomRun(Common),
    /// Compare stored reference and reduced trajectories.
    Compare(Common),
    /// All stages in one pass.
    Pipeline(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Simulate(c)
            | Command::Pod(c)
            | Command::Reduce(c)
            | Command::RomRun(c)
            | Command::Compare(c)
            | Command::Pipeline(c) => c,
        }
    }

    fn stage(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Pod(_) => "pod",
            Command::Reduce(_) => "reduce",
            Command::RomRun(_) => "rom-run",
            Command::Compare(_) => "compare",
            Command::Pipeline(_) => "pipeline",
        }
    }
}

fn run(cmd: &Command) -> skewmor::Result<()> {
    let common = cmd.common();
    let mut cfg = ExperimentConfig::from_path(&common.config)?;
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    let out = cfg.out_dir.display().to_string();
    match cmd {
        Command::Simulate(_) => {
            let full = stage_simulate(&cfg)?;
            println!("simulated {} states in {:.2}s -> {out}", full.trajectory.len(), full.seconds);
        }
        Command::Pod(_) => {
            let b = stage_pod(&cfg)?;
            println!(
                "POD basis r = {} (sigma_1 = {:e}, discarded energy {:e}) -> {out}",
                b.r(),
                b.singular_values[0],
                b.discarded_energy
            );
        }
        Command::Reduce(_) => {
            let rs = stage_reduce(&cfg)?;
            println!("built {} ROM, r = {} -> {out}", rs.variant.name(), rs.r());
        }
        Command::RomRun(_) => {
            let traj = stage_rom_run(&cfg)?;
            println!("integrated ROM, {} states -> {out}", traj.len());
        }
        Command::Compare(_) => {
            let report = stage_compare(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&report.summary).expect("summary serializes"));
        }
        Command::Pipeline(_) => {
            let outcome = run_pipeline(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&outcome.report.summary).expect("summary serializes"));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let e = match e {
                e @ Error::Stage { .. } => e,
                e => e.in_stage(cli.command.stage()),
            };
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
