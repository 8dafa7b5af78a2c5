use std::path::PathBuf;
use std::process::ExitCode;

use artipose_cli::{eval, pipeline, solve, synth, CliError, CliResult, ModelSet, RunConfig};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "artipose",
    version,
    about = "Synthesize, solve and evaluate articulated-object pose scenes"
)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, default_value = "artipose.toml")]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Overrides the configured worker count.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Generate scenes and observations.
    Synth,
    /// Estimate poses for every observation.
    Solve,
    /// Score estimates against ground truth.
    Eval,
    /// synth (if needed), solve and eval.
    Pipeline,
}

fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = RunConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    cfg.validate()?;
    let models = ModelSet::load(&cfg.model_dir)?;
    let print_report = |r: &artipose::metrics::EvalReport| match cli.format {
        Format::Table => print!("{}", r.to_table()),
        Format::Json => println!("{}", r.to_json()),
    };
    let report_failures = |failed: &[String]| {
        for f in failed {
            eprintln!("warning: no part recovered for {f}");
        }
    };
    match cli.command {
        Command::Synth => {
            let s = synth(&cfg, &models)?;
            eprintln!(
                "synthesized {} scenes, {} instances in {}",
                s.scenes,
                s.instances,
                cfg.output_dir.display()
            );
        }
        Command::Solve => {
            let s = solve(&cfg, &models)?;
            report_failures(&s.failed);
            eprintln!("solved {} instances, {} failed", s.solved, s.failed.len());
        }
        Command::Eval => print_report(&eval(&cfg, &models)?),
        Command::Pipeline => {
            let p = pipeline(&cfg, &models)?;
            if let Some(s) = &p.synth {
                eprintln!("synthesized {} scenes, {} instances", s.scenes, s.instances);
            }
            report_failures(&p.solve.failed);
            eprintln!("solved {} instances, {} failed", p.solve.solved, p.solve.failed.len());
            print_report(&p.report);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &CliError) -> ExitCode {
    ExitCode::from(e.exit_code() as u8)
}
