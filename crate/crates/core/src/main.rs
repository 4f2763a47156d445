use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qcoin::experiments::{analyze, equivalence, simulate, sweep, Grid};
use qcoin::io::{channel_to_json, read_automaton, read_channel};
use qcoin::random::random_channel;
use qcoin::{Error, Result, Tolerances};

#[derive(Parser)]
#[command(name = "qcoin", version, about = "Fixed points of quantum channels and coin-reading automata")]
struct Cli {
    /// Global numerical tolerance (eigenvalue-1 multiplicity and proportionality).
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,

    /// Seed for randomized steps.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Fixed-point dimension and minimal enclosure decomposition of a channel.
    Analyze {
        channel: PathBuf,
        /// Include the enclosure bases and block states.
        #[arg(long)]
        decomposition: bool,
    },
    /// dim Fix(Φ_p) and f(p) over a grid of p.
    Sweep {
        automaton: PathBuf,
        /// Grid as start:end:steps.
        #[arg(long, default_value = "0.05:0.95:19")]
        grid: Grid,
    },
    /// Combinatorial equivalence of two Kraus representations.
    Equiv { first: PathBuf, second: PathBuf },
    /// Monte Carlo trajectories against the averaged channel.
    Simulate {
        automaton: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 2000)]
        steps: usize,
        #[arg(long, default_value_t = 200)]
        runs: usize,
    },
    /// Random channel from stacked Gaussian blocks.
    Random {
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 1)]
        num_kraus: usize,
    },
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn with_newline(mut s: String) -> String {
    s.push('\n');
    s
}

fn run(cli: Cli) -> Result<()> {
    if !(cli.tol > 0.0 && cli.tol < 1.0) {
        return Err(Error::InvalidArgument(format!("--tol must lie in (0, 1), got {}", cli.tol)));
    }
    let tols = Tolerances::with_rank(cli.tol);
    let out = cli.out.as_deref();
    match cli.command {
        Command::Analyze { channel, decomposition } => {
            let ch = read_channel(&channel)?;
            let report = analyze(&ch, cli.seed, &tols, decomposition)?;
            emit(out, &with_newline(serde_json::to_string_pretty(&report)?))
        }
        Command::Sweep { automaton, grid } => {
            let a = read_automaton(&automaton)?.into_quantum()?;
            let result = sweep(&a, &grid, &tols)?;
            match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => {
                    let mut buf = Vec::new();
                    result.write_csv(&mut buf)?;
                    emit(out, &String::from_utf8_lossy(&buf))
                }
                Format::Json => emit(out, &with_newline(result.to_json()?)),
            }
        }
        Command::Equiv { first, second } => {
            let a = read_channel(&first)?;
            let b = read_channel(&second)?;
            let report = equivalence(&a, &b, cli.tol)?;
            emit(out, &with_newline(serde_json::to_string_pretty(&report)?))
        }
        Command::Simulate { automaton, p, steps, runs } => {
            let a = read_automaton(&automaton)?.into_quantum()?;
            let summary = simulate(&a, p, steps, runs, cli.seed)?;
            emit(out, &with_newline(serde_json::to_string_pretty(&summary)?))
        }
        Command::Random { dim, num_kraus } => {
            if dim == 0 || num_kraus == 0 {
                return Err(Error::InvalidArgument("dim and num-kraus must be at least 1".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            let ch = random_channel(dim, num_kraus, &mut rng);
            emit(out, &with_newline(channel_to_json(&ch)?))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
