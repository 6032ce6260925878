use std::fs;
use std::net::SocketAddr;
use std::path::Path;
use std::time::Instant;

use crisismap_core::choropleth::default_scales;
use crisismap_core::chunk::{pack as pack_dataset, write_store, ChunkError, Packed, SizeReport, Store};
use crisismap_core::ingest::{ingest_with_report, validate as validate_dataset, Format, IngestSpec, Ingested};
use crisismap_server::{AppState, ServerConfig, ServerError};

use crate::{CliError, ExportFramesArgs, IngestArgs, PackArgs, ServeArgs, SourceArgs, StatsArgs, ValidateArgs};

type Result<T> = std::result::Result<T, CliError>;

fn user(e: impl std::fmt::Display) -> CliError {
    CliError::User(e.to_string())
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::User(format!("{}: {e}", path.display())))
}

/// Parses `spec.json`, taking `format` from the flag. A spec naming a
/// different format is rejected.
fn load_spec(path: &Path, format: Format) -> Result<IngestSpec> {
    let bytes = read(path)?;
    let mut value: serde_json::Value =
        serde_json::from_slice(&bytes).map_err(|e| CliError::User(format!("{}: {e}", path.display())))?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| CliError::User(format!("{}: expected a JSON object", path.display())))?;
    match obj.get("format").and_then(|f| f.as_str()) {
        Some(f) if f != format.as_str() => {
            return Err(CliError::User(format!(
                "{}: spec declares format {f:?} but --format is {:?}",
                path.display(),
                format.as_str()
            )))
        }
        _ => {
            obj.insert("format".into(), format.as_str().into());
        }
    }
    serde_json::from_value(value).map_err(|e| CliError::User(format!("{}: {e}", path.display())))
}

fn read_source(args: &SourceArgs) -> Result<Ingested> {
    let spec = load_spec(&args.spec, args.format)?;
    let source = read(&args.input)?;
    eprintln!("reading {} as {}", args.input.display(), args.format.as_str());
    let ingested =
        ingest_with_report(&source, &spec).map_err(|e| CliError::User(format!("{}: {e}", args.input.display())))?;
    for s in &ingested.skipped {
        eprintln!("skipped row {}: {}", s.row, s.reason);
    }
    Ok(ingested)
}

fn open_store(dir: &Path) -> Result<Store> {
    Store::open(dir).map_err(|e| CliError::User(format!("store {}: {e}", dir.display())))
}

fn write_packed(packed: &Packed, out: &Path, soft_budget: u64) -> Result<()> {
    write_store(packed, out).map_err(|e| match e {
        ChunkError::Io { .. } => CliError::Internal(e.to_string()),
        other => user(other),
    })?;
    let report = packed.size_report(soft_budget);
    eprintln!(
        "wrote {} chunk(s), {} bytes in total, to {}",
        report.chunk_count,
        report.total,
        out.display()
    );
    warn_oversized(&report);
    Ok(())
}

fn warn_oversized(report: &SizeReport) {
    for w in &report.warnings {
        eprintln!(
            "warning: chunk {} is {} bytes, over the {} byte soft budget",
            w.region, w.bytes, w.budget
        );
    }
}

pub fn ingest(args: IngestArgs) -> Result<()> {
    let start = Instant::now();
    let ingested = read_source(&args.source)?;
    let report = validate_dataset(&ingested.dataset).with_skipped(ingested.skipped.len());
    print!("{report}");
    if !report.passes() {
        return Err(user("dataset violates its invariants; nothing written"));
    }
    let packed = pack_dataset(&ingested.dataset).map_err(user)?;
    write_packed(&packed, &args.out, args.soft_budget)?;
    eprintln!("done in {:.2?}", start.elapsed());
    Ok(())
}

pub fn validate(args: ValidateArgs) -> Result<()> {
    let report = match (&args.data, args.format, &args.spec, &args.input) {
        (Some(dir), ..) => {
            let dataset = open_store(dir)?.dataset().map_err(user)?;
            validate_dataset(&dataset)
        }
        (None, Some(format), Some(spec), Some(input)) => {
            let ingested = read_source(&SourceArgs {
                format,
                spec: spec.clone(),
                input: input.clone(),
            })?;
            validate_dataset(&ingested.dataset).with_skipped(ingested.skipped.len())
        }
        _ => return Err(user("pass either --data or all of --format, --spec and --in")),
    };
    print!("{report}");
    if report.passes() {
        Ok(())
    } else {
        Err(user(format!("{} violation(s)", report.violations.len())))
    }
}

pub fn pack(args: PackArgs) -> Result<()> {
    let store = open_store(&args.data)?;
    let dataset = store.dataset().map_err(user)?;
    let packed = pack_dataset(&dataset).map_err(user)?;
    write_packed(&packed, &args.out, args.soft_budget)
}

pub fn serve(args: ServeArgs) -> Result<()> {
    let config = ServerConfig {
        data_dir: args.data,
        map_path: args.map,
        addr: SocketAddr::new(args.addr, args.port),
        cors_origin: args.cors_origin,
        soft_budget: args.soft_budget,
        scales: default_scales(),
        default_scale: args.default_scale,
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Internal(e.to_string()))?;
    runtime.block_on(crisismap_server::serve(config)).map_err(|e| match e {
        ServerError::Io(_) => CliError::Internal(e.to_string()),
        other => user(other),
    })
}

pub fn export_frames(args: ExportFramesArgs) -> Result<()> {
    if args.from > args.to {
        return Err(user(format!(
            "reversed range: --from {} is after --to {}",
            args.from, args.to
        )));
    }
    let mut config = ServerConfig::new(&args.data, &args.map);
    config.default_scale = args.scale.clone();
    if !config.scales.contains_key(&args.scale) {
        return Err(user(format!("unknown scale {:?}", args.scale)));
    }
    let state = AppState::load(&config).map_err(user)?;
    if let Some(e) = state.store_error() {
        return Err(user(format!("store {e}")));
    }
    if let Some(e) = state.map_error() {
        return Err(user(format!("map {e}")));
    }
    let periods = state.period_count().unwrap_or(0);
    if args.to as usize >= periods {
        return Err(user(format!(
            "--to {} is out of range; the store has {periods} period(s)",
            args.to
        )));
    }
    // Render everything before writing so a bad track leaves no files.
    let frames = (args.from..=args.to)
        .map(|ordinal| {
            state
                .frame_svg(ordinal, Some(&args.track), None)
                .map(|svg| (ordinal, svg))
                .map_err(|e| user(e.detail))
        })
        .collect::<Result<Vec<_>>>()?;
    fs::create_dir_all(&args.out).map_err(|e| CliError::Internal(format!("{}: {e}", args.out.display())))?;
    for (ordinal, svg) in &frames {
        let path = args.out.join(frame_file_name(*ordinal));
        fs::write(&path, svg).map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))?;
    }
    eprintln!("wrote {} frame(s) to {}", frames.len(), args.out.display());
    Ok(())
}

pub fn frame_file_name(ordinal: u32) -> String {
    format!("frame-{ordinal}.svg")
}

pub fn stats(args: StatsArgs) -> Result<()> {
    let report = open_store(&args.data)?.size_report(args.soft_budget);
    if args.json {
        let json = serde_json::to_string(&report).map_err(|e| CliError::Internal(e.to_string()))?;
        println!("{json}");
    } else {
        print!("{report}");
    }
    Ok(())
}
