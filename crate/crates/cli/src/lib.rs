//! Command-line front end for the zeroflat lab: decompositions, relative part
//! sizes, flatness curves, constant estimates, blow-up frames, partitions and
//! the built-in property suites.

pub mod args;
pub mod commands;
pub mod report;
pub mod suites;

use std::path::Path;

use thiserror::Error;
use zeroflat::FlatError;

use args::{Cli, Command};
use commands::{Context, FlatnessInput, Outcome, PartitionInput};
use report::Artifact;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Flat(#[from] FlatError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Exit status for success.
pub const EXIT_OK: i32 = 0;
/// Exit status when a verification suite fails.
pub const EXIT_SUITE_FAILURE: i32 = 1;
/// Exit status for usage, parse and input errors.
pub const EXIT_USAGE: i32 = 2;

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let ctx = Context {
        seed: cli.seed,
        resolution: cli.resolution,
        format: cli.format,
    };
    match &cli.command {
        Command::Decompose { source, centers } => commands::decompose(&ctx, source, centers),
        Command::Zeta { source, k, center, radii } => commands::zeta_cmd(&ctx, source, *k, center.as_deref(), radii),
        Command::Flatness {
            poly,
            poly_file,
            points,
            center,
            radii,
            search,
        } => commands::flatness(
            &ctx,
            &FlatnessInput {
                poly: poly.as_deref(),
                poly_file: poly_file.as_deref(),
                points: points.as_deref(),
                center: center.as_deref(),
                radii,
                search: *search,
            },
        ),
        Command::Verify {
            suites,
            list,
            inject_broken_constant,
        } => commands::verify(&ctx, suites, *list, *inject_broken_constant),
        Command::Estimate { target, n, k, trials } => commands::estimate(&ctx, *target, *n, *k, *trials),
        Command::Blowup {
            source,
            center,
            scales,
            window,
        } => commands::blowup(&ctx, source, center.as_deref(), scales, *window),
        Command::Partition {
            source,
            center,
            radius,
            degree,
            delta,
            eta,
            max_scale,
        } => commands::partition(
            &ctx,
            &PartitionInput {
                source,
                center: center.as_deref(),
                radius: *radius,
                degree: *degree,
                delta: *delta,
                eta: *eta,
                max_scale: *max_scale,
            },
        ),
        Command::Basis { n, k } => commands::basis(&ctx, *n, *k),
    }
}

/// Writes every artifact into `dir`, in order, returning the paths written.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<String>, CliError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.contents)?;
        written.push(path.display().to_string());
    }
    Ok(written)
}
