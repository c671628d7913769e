use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

mod args;
mod commands;
mod config;
mod output;

use args::{Cli, Command, Threads};
use commands::{Ctx, Outcome};
use config::FileConfig;

fn run(cli: &Cli) -> Result<Outcome> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let threads = file.pick(cli.threads, "threads", Threads::Auto)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(match threads {
            Threads::Auto => 0,
            Threads::Count(n) => n,
        })
        .build()
        .context("starting worker pool")?;
    let ctx = Ctx {
        file: &file,
        report: cli.report.as_deref(),
    };
    pool.install(|| match &cli.command {
        Command::Embed(a) => commands::watermark::embed_cmd(a, &ctx),
        Command::Extract(a) => commands::watermark::extract_cmd(a, &ctx),
        Command::Detect(a) => commands::watermark::detect_cmd(a, &ctx),
        Command::Residual(a) => commands::watermark::residual_cmd(a, &ctx),
        Command::Quality(a) => commands::quality::quality_cmd(a, &ctx),
        Command::UtilityStats(a) => commands::utility::utility_cmd(a, &ctx),
        Command::GenCorpus(a) => commands::corpus::corpus_cmd(a, &ctx),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(&cli) {
        Ok(outcome) => ExitCode::from(outcome as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
