use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gmfg_cli::{run, Command, RunOptions, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "gmfg", version, about = "Graphon mean field game solver on the circle")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory, overriding the scenario's `output.dir`.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Suppress the summary on stdout.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve for the equilibrium and write mu.csv, v.csv, grad_v.csv and report.json.
    Solve { config: PathBuf },
    /// Solve, then run the Feynman-Kac, particle and Nash oracles.
    Validate { config: PathBuf },
    /// Solve from several seeds and compare the limits.
    Probe {
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        seeds: usize,
    },
    /// Holder diagnostics of a saved solution.
    Norms { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let mut opts = RunOptions {
        output: cli.output,
        quiet: cli.quiet,
        seeds: 0,
    };
    let (command, config) = match cli.command {
        Cmd::Solve { config } => (Command::Solve, config),
        Cmd::Validate { config } => (Command::Validate, config),
        Cmd::Probe { config, seeds } => {
            opts.seeds = seeds;
            (Command::Probe, config)
        }
        Cmd::Norms { config } => (Command::Norms, config),
    };
    let outcome = run(command, &config, &opts);
    for line in &outcome.lines {
        if line.starts_with("error") {
            eprintln!("{line}");
        } else if !opts.quiet {
            println!("{line}");
        }
    }
    ExitCode::from(outcome.exit_code)
}
