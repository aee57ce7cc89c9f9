use std::path::PathBuf;

use clap::{Parser, Subcommand};
use doa_cli::io::OutputFormat;
use doa_cli::{cmd_campaign, cmd_constraints_check, cmd_simulate, cmd_solve, CliError};
use doa_core::pipeline::Method;

/// DOA-based localisation of a GPS-denied agent: solve single scenarios,
/// simulate seeded measurement sets, and run Monte Carlo campaigns.
#[derive(Parser)]
#[command(name = "doa", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn parse_method(s: &str) -> Result<Method, String> {
    match s.to_ascii_uppercase().as_str() {
        "SDP_O" | "SDP+O" => Ok(Method::SdpO),
        "LS_O" | "LS+O" => Ok(Method::LsO),
        "SDP_O_REFINED" | "SDP+O+MLE" => Ok(Method::SdpORefined),
        _ => Err(format!(
            "unknown method {s:?} (expected SDP_O, LS_O or SDP_O_REFINED)"
        )),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the frame transform from a measurement CSV.
    Solve {
        /// Measurement CSV (k,u_A,v_A,w_A,x_B,y_B,z_B,theta_rad,phi_rad).
        #[arg(long)]
        input: PathBuf,
        /// Estimator: SDP_O, LS_O or SDP_O_REFINED.
        #[arg(long, value_parser = parse_method, default_value = "SDP_O")]
        method: Method,
        /// Optional JSON config (solver section).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Optional truth.json to report estimation errors against.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Output directory for estimate.json.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Generate a seeded scenario: measurements.csv + truth.json.
    Simulate {
        /// JSON config (trajectory / simulate sections).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run a Monte Carlo campaign over a (sigma, K, method) grid.
    Campaign {
        /// JSON config with a campaign section.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the campaign seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Aggregate-table format.
        #[arg(long, value_enum, default_value = "csv")]
        format: OutputFormat,
    },
    /// Print the rotation-constraint residuals of a saved estimate.
    ConstraintsCheck {
        /// estimate.json written by `solve`.
        #[arg(long)]
        input: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve {
            input,
            method,
            config,
            truth,
            out_dir,
        } => cmd_solve(&input, method, config.as_ref(), truth.as_ref(), &out_dir),
        Command::Simulate {
            config,
            seed,
            out_dir,
        } => cmd_simulate(config.as_ref(), seed, &out_dir),
        Command::Campaign {
            config,
            seed,
            out_dir,
            format,
        } => cmd_campaign(config.as_ref(), seed, &out_dir, format).map(|_| ()),
        Command::ConstraintsCheck { input } => cmd_constraints_check(&input),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DOA_LOG_LEVEL", "warn"))
        .init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
