//! Writes a synthetic source, its ingest spec and a matching grid map.
//!
//! ```text
//! cargo run -p crisismap-cli --example fixture -- conflict /tmp/conflict
//! crisismap ingest --format csv --spec /tmp/conflict/spec.json \
//!     --in /tmp/conflict/source.csv --out /tmp/conflict/store
//! crisismap serve --data /tmp/conflict/store --map /tmp/conflict/map.svg
//! ```

use std::fs;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use crisismap_core::fixtures::{
    conflict_dataset, grid_map_svg, ingest_spec_for, pandemic_dataset, random_dataset, write_format, RegionLabels,
};
use crisismap_core::ingest::Format;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    /// 141 countries, 240 months, 60 indicators, 2 tracks
    Conflict,
    /// 40 countries, 120 days, 3 indicators, 2 tracks
    Pandemic,
    /// Small random shape with subdivisions
    Random,
}

#[derive(Debug, Parser)]
struct Args {
    kind: Kind,
    out: PathBuf,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// csv, json-rows, json-columnar or html-table
    #[arg(long, default_value = "csv")]
    format: Format,
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args = Args::parse();
    let dataset = match args.kind {
        Kind::Conflict => conflict_dataset(args.seed),
        Kind::Pandemic => pandemic_dataset(args.seed, 40, 120),
        Kind::Random => random_dataset(args.seed),
    };
    fs::create_dir_all(&args.out)?;
    let ext = match args.format {
        Format::Csv => "csv",
        Format::JsonRows | Format::JsonColumnar => "json",
        Format::HtmlTable => "html",
    };
    let source = args.out.join(format!("source.{ext}"));
    fs::write(&source, write_format(&dataset, args.format, RegionLabels::Codes))?;
    let spec = ingest_spec_for(&dataset, args.format);
    fs::write(args.out.join("spec.json"), serde_json::to_vec_pretty(&spec)?)?;
    fs::write(args.out.join("map.svg"), grid_map_svg(dataset.regions()))?;
    eprintln!(
        "{} regions x {} periods x {} indicators -> {}",
        dataset.regions().len(),
        dataset.periods().len(),
        dataset.indicators().len(),
        args.out.display()
    );
    Ok(())
}
