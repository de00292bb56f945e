use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use priorwave_cli::{emit, run_scenario, validate_dir, RunOptions, ScenarioConfig};
use priorwave_core::AngularGrid;

const EXIT_CONFIG: u8 = 1;
const EXIT_PARTIAL: u8 = 2;

#[derive(Parser)]
#[command(name = "priorwave", version, about = "Prior-aware MIMO radar waveform design runner")]
struct Cli {
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "PRIORWAVE_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every cell of a scenario file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides run.output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides run.seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Grid-only MAP estimates and unweighted beampattern sums.
        #[arg(long)]
        paper_literal: bool,
    },
    /// Tabulate the beampattern of a waveform.csv.
    Beampattern {
        #[arg(long)]
        waveform: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 361)]
        grid_size: usize,
        #[arg(long, default_value_t = 0.5)]
        spacing: f64,
    },
    /// Check an output directory against the table schemas and manifest.
    Validate {
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse a scenario file and print its normalised form.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            paper_literal,
        } => {
            let (cfg, text) = match ScenarioConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            let opts = RunOptions {
                output_dir: out,
                seed,
                paper_literal,
            };
            match run_scenario(&cfg, &text, &opts) {
                Ok(m) => {
                    let failed: Vec<_> = m.failures().collect();
                    for f in &failed {
                        eprintln!("cell {} failed: {}", f.cell, f.error.as_deref().unwrap_or(""));
                    }
                    if failed.is_empty() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(EXIT_PARTIAL)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(EXIT_CONFIG)
                }
            }
        }
        Command::Beampattern {
            waveform,
            out,
            grid_size,
            spacing,
        } => {
            let res = (|| -> anyhow::Result<()> {
                let x = emit::read_waveform(&waveform)?;
                let grid = AngularGrid::new(grid_size)?;
                emit::write_beampattern(&x, &grid, spacing, &out)
            })();
            match res {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(EXIT_CONFIG)
                }
            }
        }
        Command::Validate { out } => match validate_dir(&out) {
            Ok(problems) if problems.is_empty() => {
                println!("{}: ok", out.display());
                ExitCode::SUCCESS
            }
            Ok(problems) => {
                for p in problems {
                    eprintln!("{p}");
                }
                ExitCode::from(EXIT_CONFIG)
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
        Command::Check { config } => match ScenarioConfig::load(&config) {
            Ok((cfg, _)) => {
                print!("{}", cfg.to_toml());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
    }
}
