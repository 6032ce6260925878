//! `crisismap`: ingest sources into a chunked store, inspect it, serve it and
//! export map frames.
//!
//! Exit codes: 0 success, 1 usage or data error, 2 internal error.
//! Data goes to stdout, progress and diagnostics to stderr.

mod commands;

use std::net::{IpAddr, Ipv4Addr};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use crisismap_core::choropleth::DEFAULT_SCALE;
use crisismap_core::chunk::DEFAULT_SOFT_BUDGET;
use crisismap_core::ingest::Format;
use crisismap_server::DEFAULT_PORT;

#[derive(Debug, Parser)]
#[command(
    name = "crisismap",
    version,
    about = "Chunked temporal-spatial data stores and choropleth frames"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Read a source file and write a store (meta.json, summary.json, chunks/).
    Ingest(IngestArgs),
    /// Check a source file or an existing store and print coverage.
    Validate(ValidateArgs),
    /// Verify a store and rewrite it canonically into another directory.
    Pack(PackArgs),
    /// Serve a store over HTTP.
    Serve(ServeArgs),
    /// Render one SVG per period ordinal in an inclusive range.
    ExportFrames(ExportFramesArgs),
    /// Print payload sizes of a store.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
struct SourceArgs {
    /// csv, json-rows, json-columnar or html-table
    #[arg(long)]
    format: Format,
    /// Ingest spec (JSON)
    #[arg(long)]
    spec: PathBuf,
    /// Source file
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Store directory to write
    #[arg(long)]
    out: PathBuf,
    /// Warn about chunks above this many bytes
    #[arg(long, default_value_t = DEFAULT_SOFT_BUDGET)]
    soft_budget: u64,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Validate an existing store instead of a source file
    #[arg(long, conflicts_with_all = ["format", "spec", "input"], required_unless_present = "input")]
    data: Option<PathBuf>,
    #[arg(long, requires_all = ["spec", "input"])]
    format: Option<Format>,
    #[arg(long, requires_all = ["format", "input"])]
    spec: Option<PathBuf>,
    #[arg(long = "in", value_name = "PATH", requires_all = ["format", "spec"])]
    input: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PackArgs {
    /// Store to read
    #[arg(long)]
    data: PathBuf,
    /// Store directory to write
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SOFT_BUDGET)]
    soft_budget: u64,
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// Store directory
    #[arg(long)]
    data: PathBuf,
    /// SVG map whose elements carry region codes as ids
    #[arg(long)]
    map: PathBuf,
    #[arg(long, default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
    addr: IpAddr,
    #[arg(long, default_value_t = DEFAULT_PORT)]
    port: u16,
    /// `*` or a single origin
    #[arg(long, default_value = "*")]
    cors_origin: String,
    #[arg(long, default_value_t = DEFAULT_SOFT_BUDGET)]
    soft_budget: u64,
    /// Scale used when a frame request names none (linear or quantile)
    #[arg(long, default_value = DEFAULT_SCALE)]
    default_scale: String,
}

#[derive(Debug, Args)]
struct ExportFramesArgs {
    /// Store directory
    #[arg(long)]
    data: PathBuf,
    /// SVG map whose elements carry region codes as ids
    #[arg(long)]
    map: PathBuf,
    /// Track to color by
    #[arg(long)]
    track: String,
    /// First period ordinal
    #[arg(long)]
    from: u32,
    /// Last period ordinal, inclusive
    #[arg(long)]
    to: u32,
    /// Directory for frame-<ordinal>.svg files
    #[arg(long)]
    out: PathBuf,
    /// linear or quantile
    #[arg(long, default_value = DEFAULT_SCALE)]
    scale: String,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// Store directory
    #[arg(long)]
    data: PathBuf,
    /// Print JSON instead of aligned text
    #[arg(long)]
    json: bool,
    #[arg(long, default_value_t = DEFAULT_SOFT_BUDGET)]
    soft_budget: u64,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    User(String),
    #[error("internal: {0}")]
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::User(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = std::panic::catch_unwind(|| match cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Validate(a) => commands::validate(a),
        Command::Pack(a) => commands::pack(a),
        Command::Serve(a) => commands::serve(a),
        Command::ExportFrames(a) => commands::export_frames(a),
        Command::Stats(a) => commands::stats(a),
    });
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
        Err(_) => ExitCode::from(2),
    }
}
