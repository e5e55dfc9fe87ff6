use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dkucb_core::harness;
use dkucb_sim::{output, sweep, FileConfig, SimError};

#[derive(Parser)]
#[command(
    name = "dkucb",
    version,
    about = "Vehicular mmWave user-association simulator"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one simulation and write rows.csv and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the policy in the file.
        #[arg(long)]
        policy: Option<String>,
        /// Overrides the seed in the file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a one-axis sweep and write sweep.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Dotted configuration key, e.g. sync.d or channel.bandwidth_mhz.
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Seeds per value, counting up from the file's seed.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print the default configuration.
    Defaults,
}

fn run(cli: Cli) -> Result<(), SimError> {
    match cli.cmd {
        Cmd::Run {
            config,
            policy,
            seed,
            out,
        } => {
            let mut file = FileConfig::load(&config)?;
            if let Some(p) = policy {
                file.policy = p;
            }
            if let Some(s) = seed {
                file.seed = s;
            }
            let cfg = file.to_run()?;
            let log = harness::run(&cfg)?;
            output::write_run(&out, &log, &file)?;
            let s = &log.summary;
            println!(
                "{} seed {}: regret {:.4e}, mean rate {:.4e} bit/s, sync rate {:.4}",
                s.policy, s.seed, s.cumulative_regret, s.average_rate, s.sync_rate
            );
        }
        Cmd::Sweep {
            config,
            axis,
            values,
            seeds,
            out,
        } => {
            let file = FileConfig::load(&config)?;
            let rows = sweep::sweep(&file, &axis, &values, seeds, |r| {
                eprintln!(
                    "{}={} {} seed {}: regret {:.4e}",
                    r.axis, r.value, r.policy, r.seed, r.cumulative_regret
                )
            })?;
            std::fs::create_dir_all(&out).map_err(|e| SimError::Io {
                path: out.clone(),
                source: e,
            })?;
            sweep::write_sweep(&out.join(sweep::SWEEP_FILE), &rows)?;
        }
        Cmd::Defaults => print!("{}", FileConfig::default().to_toml()),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
