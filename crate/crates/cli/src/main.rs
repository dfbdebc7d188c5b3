use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use geoduio::cases::GraphChoice;
use geoduio_cli::commands::{
    cmd_platoon, cmd_simulate, cmd_synthesize, exit_code, PlatoonFlags, SimFlags, EXIT_CHECK_FAILED, EXIT_INVALID,
    EXIT_OK,
};

/// Synthesize and simulate distributed unknown-input observers.
///
/// Exit codes: 0 success, 1 a platoon check failed, 2 invalid input,
/// 3 joint observability condition violated, 4 numerical blowup.
/// GEO_DUIO_TOL overrides the rank tolerance.
#[derive(Parser, Debug)]
#[command(name = "geoduio", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Design observers for a system description and write a JSON report.
    Synthesize {
        input: PathBuf,
        /// Write the report here instead of standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Simulate the plant and observer network from a system description.
    Simulate {
        input: PathBuf,
        /// Take the coupling gains from a report written by `synthesize`.
        #[arg(long)]
        design: Option<PathBuf>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// euler or rk4
        #[arg(long)]
        integrator: Option<String>,
        #[arg(long)]
        boundary_layer: Option<f64>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Run the four-vehicle platoon case study and its checks.
    Platoon {
        /// Use chi = 82.3039, gamma = 383.1159 instead of the synthesized gains.
        #[arg(long = "paper-gains")]
        published_gains: bool,
        /// path or complete
        #[arg(long)]
        graph: Option<String>,
        /// Directory for report.txt, trajectory.csv and platoon.svg.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        t_end: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INVALID as u8 } else { EXIT_OK as u8 });
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let result = match cli.command {
        Command::Synthesize { input, output } => cmd_synthesize(&input, output.as_deref(), &mut out).map(|_| true),
        Command::Simulate {
            input,
            design,
            t_end,
            dt,
            integrator,
            boundary_layer,
            csv,
            svg,
        } => {
            let flags = SimFlags {
                t_end,
                dt,
                integrator,
                boundary_layer,
                csv,
                svg,
            };
            cmd_simulate(&input, design.as_deref(), &flags, &mut out).map(|_| true)
        }
        Command::Platoon {
            published_gains,
            graph,
            out: dir,
            t_end,
        } => graph
            .as_deref()
            .map(str::parse::<GraphChoice>)
            .transpose()
            .and_then(|graph| {
                let flags = PlatoonFlags {
                    published_gains,
                    graph,
                    out_dir: dir,
                    t_end,
                };
                cmd_platoon(&flags, &mut out)
            }),
    };
    let _ = out.flush();
    match result {
        Ok(true) => ExitCode::from(EXIT_OK as u8),
        Ok(false) => ExitCode::from(EXIT_CHECK_FAILED as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
