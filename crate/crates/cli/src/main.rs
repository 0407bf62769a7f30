use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use marl_lab::validation;
use marl_lab_cli::{parse_config, preset, run_experiment, Format, PRESETS};

#[derive(Parser)]
#[command(
    name = "marl-lab",
    version,
    about = "Run multiagent learning experiments and write their datasets"
)]
#[command(args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in figure preset, see `marl-lab presets`.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Print the resolved config as TOML instead of running it.
    #[arg(long)]
    dump: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the built-in oracle checks.
    Validate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// List the figure presets.
    Presets,
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("MARL_LAB_THREADS") {
        let n: usize = v.parse().with_context(|| format!("MARL_LAB_THREADS={v}"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()?;
    }
    Ok(())
}

fn run(args: RunArgs) -> anyhow::Result<()> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            parse_config(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?
        }
        (None, Some(name)) => preset(name).ok_or_else(|| anyhow!("unknown preset `{name}`"))?,
        (None, None) => return Err(anyhow!("give --config PATH or --preset NAME")),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = args.out {
        cfg.output = out;
    }
    if let Some(format) = args.format {
        cfg.format = format;
    }
    if args.dump {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    for path in run_experiment(&cfg)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::FAILURE;
    }
    match cli.command {
        Some(Command::Presets) => {
            for (name, about) in PRESETS {
                println!("{name:8} {about}");
            }
            ExitCode::SUCCESS
        }
        Some(Command::Validate { seed }) => {
            let checks = validation::run_all(seed);
            for c in &checks {
                println!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            if checks.iter().all(|c| c.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        None => match run(cli.run) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::FAILURE
            }
        },
    }
}
