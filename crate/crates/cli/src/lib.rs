//! Command-line driver and HTTP service for the hypermap pipeline.

pub mod args;
pub mod commands;
pub mod service;

use anyhow::Result;

use args::{Cli, Command};

/// Caps the global worker pool. Without a cap the pool sizes itself.
pub fn configure_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            anyhow::bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    configure_threads(cli.threads)?;
    match &cli.command {
        Command::GenScene(a) => commands::gen_scene(a),
        Command::Classify(a) => commands::classify_cmd(a),
        Command::Segment(a) => commands::segment_cmd(a),
        Command::Map(a) => commands::map_cmd(a),
        Command::Bench(a) => commands::bench_cmd(a),
        Command::Serve(a) => commands::serve_cmd(a),
    }
}
