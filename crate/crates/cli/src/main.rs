use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "ergoproj",
    version,
    about = "Spectral Monte Carlo toolkit for random sums of projections",
    after_help = "Exit codes: 0 all checks passed, 1 assertion failure, \
                  2 config error, 3 numeric failure."
)]
struct Cli {
    /// Print the symbol/distribution catalog and exit.
    #[arg(long)]
    list_builtins: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo estimate of the integrated density of states.
    Ids(RunArgs),
    /// IDS estimate plus the per-bin density (Wegner) bound check.
    Wegner(RunArgs),
    /// Deterministic-coupling spectrum vs. the symbol pushforward.
    Szego(RunArgs),
    /// Spectral-edge analysis: bracketing, analytic tail curve, edge checks.
    EdgesLifshitz(RunArgs),
    /// Point-mass dichotomy experiment for plateau symbols.
    EdgesPointmass(RunArgs),
    /// Fractional-moment and participation-ratio localization diagnostics.
    Localization(RunArgs),
    /// The exact-identity suite (trace, resolvent, Möbius, covariance, …).
    Checks(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker pool size (affects timing only, never output bytes).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory (overrides the config's `out`).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list_builtins {
        print!("{}", ergoproj_cli::config::builtins_catalog());
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("error: an experiment subcommand is required (see --help)");
        return ExitCode::from(2);
    };
    let (expected, args) = match &command {
        Command::Ids(a) => ("ids", a),
        Command::Wegner(a) => ("wegner", a),
        Command::Szego(a) => ("szego", a),
        Command::EdgesLifshitz(a) => ("edges_lifshitz", a),
        Command::EdgesPointmass(a) => ("edges_pointmass", a),
        Command::Localization(a) => ("localization", a),
        Command::Checks(a) => ("checks", a),
    };

    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read config {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let mut cfg = match ergoproj_cli::parse_config(&text) {
        Ok(c) => c,
        Err(violations) => {
            eprintln!("config error:");
            for v in violations {
                eprintln!("  - {v}");
            }
            return ExitCode::from(2);
        }
    };
    if cfg.experiment.name() != expected {
        eprintln!(
            "error: config declares experiment `{}` but the `{expected}` subcommand was invoked",
            cfg.experiment.name()
        );
        return ExitCode::from(2);
    }
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    let threads = args.threads.or(cfg.threads).unwrap_or(1);
    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg.out.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));

    match ergoproj_cli::run_to_dir(&cfg, &out_dir, threads) {
        Ok(manifest) => {
            for (name, pass) in &manifest.verdicts {
                println!("[{}] {}: {}", expected, name, if *pass { "PASS" } else { "FAIL" });
            }
            println!(
                "[{}] wrote {} files to {} in {:.2}s",
                expected,
                manifest.files.len() + 1,
                out_dir.display(),
                manifest.wall_time_seconds
            );
            if manifest.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(ergoproj_cli::RunError::Config(violations)) => {
            eprintln!("config error:");
            for v in violations {
                eprintln!("  - {v}");
            }
            ExitCode::from(2)
        }
        Err(ergoproj_cli::RunError::Rejected(msg)) => {
            eprintln!("rejected: {msg}");
            ExitCode::from(2)
        }
        Err(ergoproj_cli::RunError::Runtime(msg)) => {
            eprintln!("numeric failure: {msg}");
            ExitCode::from(3)
        }
    }
}
