//! `geninv`: command-line access to the generalized-inverse toolkit.
//!
//! Every subcommand prints one JSON object on stdout holding its result,
//! the command name, and a list of checks. Exit status: 0 when every check
//! passes, 1 when one fails, 2 on bad input, 3 on numerical
//! non-convergence.

mod commands;
mod io;

use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use commands::Report;
use geninv_core::GenInvError;

#[derive(Parser, Debug)]
#[command(name = "geninv", version, about = "Generalized inverses of nonlinear operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form pseudo-inverse of a scalar nonlinearity at one point.
    Pinv1d(commands::Pinv1dArgs),
    /// Brute-force best approximate solution on a grid.
    Oracle(commands::OracleArgs),
    /// Pseudo-inverse of a single tanh or ReLU layer.
    LayerPinv(commands::LayerArgs),
    /// Wavelet thresholding against its pseudo-inverse round trip.
    Denoise(commands::DenoiseArgs),
    /// Drazin inverse of a finite endofunction.
    Drazin(commands::DrazinArgs),
    /// Vanishing and minimal polynomials over a prime field.
    Vanish(commands::VanishArgs),
    /// Seeded randomized checks across every module.
    VerifySuite(commands::SuiteArgs),
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<GenInvError>() {
        Some(GenInvError::NonConvergence { .. }) => 3,
        Some(GenInvError::VerificationFailed(_)) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let result: anyhow::Result<Report> = match &cli.command {
        Command::Pinv1d(a) => commands::pinv1d(a),
        Command::Oracle(a) => commands::oracle(a),
        Command::LayerPinv(a) => commands::layer_pinv(a),
        Command::Denoise(a) => commands::denoise(a),
        Command::Drazin(a) => commands::drazin(a),
        Command::Vanish(a) => commands::vanish(a),
        Command::VerifySuite(a) => commands::verify_suite(a),
    };
    let code = match result {
        Ok(report) => {
            println!("{}", report.to_json());
            if report.passed() {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code_for(&e)
        }
    };
    eprintln!("wall time: {:.3}s", start.elapsed().as_secs_f64());
    ExitCode::from(code)
}
