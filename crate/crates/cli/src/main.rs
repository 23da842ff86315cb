//! `sg`: geodesics near conical and cuspidal singularities of warped products.
//!
//! Exit codes: 0 ok, 1 verification found violations, 2 invalid or
//! ill-posed input, 3 integration failure, 4 sweep not converged.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sg_core::Error;

mod commands;
mod config;
mod svg;

use commands::Status;
use config::{Overrides, RunConfig};

#[derive(Parser)]
#[command(
    name = "sg",
    version,
    about = "Geodesics of warped products near an isolated singularity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the winding constant C_f of a warping function
    Cf {
        /// Warp spec, e.g. power:2 or osc:0.5:9
        spec: String,
        /// Defaults to 1, or the largest convex radius if that is smaller
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        json: bool,
    },
    /// Integrate one geodesic and write CSV, JSON metadata and an SVG plot
    Trace(Overrides),
    /// Run a delta sweep of the normalized winding length
    Sweep(Overrides),
    /// Run the bounds, comparison and limit-geodesic suites
    Verify(Overrides),
    /// Convert a profile table (z, s) into a warping function table
    Profile2warp {
        path: PathBuf,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long, default_value_t = 64)]
        points: usize,
        #[arg(long)]
        r_min: Option<f64>,
        /// Write the table here instead of stdout
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> anyhow::Result<Status> {
    match cli.command {
        Command::Cf {
            spec,
            radius,
            tol,
            json,
        } => commands::cf(&spec, radius, tol, json),
        Command::Trace(o) => commands::trace(RunConfig::resolve(&o)?),
        Command::Sweep(o) => commands::sweep(RunConfig::resolve(&o)?),
        Command::Verify(o) => commands::verify(RunConfig::resolve(&o)?),
        Command::Profile2warp {
            path,
            radius,
            points,
            r_min,
            out,
        } => commands::profile2warp(&path, radius, points, r_min, out),
    }
}

fn code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Integration { .. } | Error::IntegrationQuality(_)) => 3,
        Some(Error::Internal(_)) | None => 1,
        Some(_) => 2,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Violations) => ExitCode::from(1),
        Ok(Status::NotConverged) => ExitCode::from(4),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code(&e))
        }
    }
}
