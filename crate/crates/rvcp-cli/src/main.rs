//! `rvcp`: batch tool over the conformal r-value library.
//!
//! Exit codes: 0 success, 2 input or usage error, 3 statistical
//! precondition failure (e.g. too few calibration items for the requested
//! alpha).

mod cli;
mod commands;
mod config;
mod render;

use clap::Parser;

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    // clap itself exits 2 on usage errors, matching the input-error code.
    let args = cli::Cli::parse();
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return 2;
    }
    let outcome = match &args.command {
        cli::Command::Simulate(a) => commands::simulate(a),
        cli::Command::Calibrate(a) => commands::calibrate_cmd(a),
        cli::Command::Predict(a) => commands::predict_cmd(a),
        cli::Command::Evaluate(a) => commands::evaluate_cmd(a),
        cli::Command::Compare(a) => commands::compare_cmd(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_statistical() {
                3
            } else {
                2
            }
        }
    }
}

/// RVCP_THREADS caps the worker count; 0 or unset means automatic. Results
/// never depend on the worker count, only wall time does.
fn init_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("RVCP_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("RVCP_THREADS must be a non-negative integer, got {raw:?}"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| format!("could not size the worker pool: {e}"))?;
    }
    Ok(())
}
