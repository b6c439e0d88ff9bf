use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use slipfsi::cli::{cmd_mesh, cmd_simulate, cmd_spectrum, cmd_verify, SimulateOverrides};

#[derive(Parser)]
#[command(name = "slipfsi", version, about = "Rigid body in a viscous fluid with Navier slip")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the fixed-point solver on a JSON config and write the artifacts.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory, overriding output.dir.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dump_flowmap: bool,
        #[arg(long)]
        dump_state: bool,
        #[arg(long)]
        dump_operators: bool,
    },
    /// Run invariant suites: transform, operator, spectral, picard, nonnewtonian or all.
    Verify {
        #[arg(default_value = "all")]
        suite: String,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Rightmost eigenvalues, decay margin and resolvent bound as JSON.
    Spectrum {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export a builtin geometry in the slipfsi-mesh v1 format.
    Mesh {
        #[arg(long, default_value = "builtin:shell(1,4,0)")]
        geometry: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn limit_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("SLIPFSI_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("SLIPFSI_THREADS must be a positive integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Err(msg) = limit_threads() {
        eprintln!("slipfsi: {msg}");
        return ExitCode::from(2);
    }
    let result = match args.command {
        Command::Simulate {
            config,
            out,
            dump_flowmap,
            dump_state,
            dump_operators,
        } => cmd_simulate(
            &config,
            &SimulateOverrides {
                out,
                dump_flowmap,
                dump_state,
                dump_operators,
            },
        ),
        Command::Verify { suite, json } => cmd_verify(&suite, json.as_deref()),
        Command::Spectrum { config, count, out } => cmd_spectrum(config.as_deref(), count, out.as_deref()),
        Command::Mesh { geometry, out } => cmd_mesh(&geometry, out.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("slipfsi: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
