//! On-disk layout: `meta.json`, `summary.json` and `chunks/<REGION>.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::canonical::{ContentHash, PeriodsWire, Writer};
use super::size::SizeReport;
use super::{
    build_chunks, build_summary, deserialize_chunk, deserialize_summary, reassemble, serialize_chunk,
    serialize_summary, ChunkError, GlobalSummary,
};
use crate::model::{Dataset, Indicator, PeriodAxis, RegionCode, Track};

pub const META_FILE: &str = "meta.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CHUNK_DIR: &str = "chunks";

const FORMAT_VERSION: u32 = 1;

/// Client bootstrap document.
#[derive(Debug, Clone, PartialEq)]
pub struct Meta {
    pub periods: PeriodAxis,
    pub regions: Vec<RegionCode>,
    pub indicators: Vec<Indicator>,
    pub tracks: Vec<Track>,
    pub summary_hash: ContentHash,
    /// Chunk key (country) → hash.
    pub chunk_hashes: BTreeMap<RegionCode, ContentHash>,
    pub provenance: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaWire {
    format: u32,
    granularity: crate::model::Granularity,
    hashes: HashesWire,
    indicators: Vec<Indicator>,
    periods: PeriodsWireOwned,
    provenance: String,
    regions: Vec<RegionCode>,
    tracks: Vec<Track>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HashesWire {
    chunks: BTreeMap<String, ContentHash>,
    summary: ContentHash,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PeriodsWireOwned {
    count: usize,
    first: String,
    granularity: crate::model::Granularity,
    last: String,
}

impl Meta {
    pub fn from_dataset(
        dataset: &Dataset,
        summary_hash: ContentHash,
        chunk_hashes: BTreeMap<RegionCode, ContentHash>,
    ) -> Meta {
        Meta {
            periods: *dataset.periods(),
            regions: dataset.regions().to_vec(),
            indicators: dataset.indicators().to_vec(),
            tracks: dataset.tracks().to_vec(),
            summary_hash,
            chunk_hashes,
            provenance: dataset.provenance().to_string(),
        }
    }

    /// Canonical bytes: sorted keys, compact.
    pub fn to_bytes(&self) -> Vec<u8> {
        let wire = MetaWire {
            format: FORMAT_VERSION,
            granularity: self.periods.granularity(),
            hashes: HashesWire {
                chunks: self.chunk_hashes.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
                summary: self.summary_hash,
            },
            indicators: self.indicators.clone(),
            periods: PeriodsWireOwned {
                count: self.periods.len(),
                first: self.periods.first().to_string(),
                granularity: self.periods.granularity(),
                last: self.periods.last().to_string(),
            },
            provenance: self.provenance.clone(),
            regions: self.regions.clone(),
            tracks: self.tracks.clone(),
        };
        let value = serde_json::to_value(&wire).expect("meta serialises");
        let mut w = Writer::default();
        w.value(&value);
        w.into_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Meta, ChunkError> {
        let corrupt = |m: String| ChunkError::CorruptPayload(format!("meta: {m}"));
        let wire: MetaWire = serde_json::from_slice(bytes).map_err(|e| corrupt(e.to_string()))?;
        if wire.format != FORMAT_VERSION {
            return Err(corrupt(format!("unsupported format version {}", wire.format)));
        }
        let periods = PeriodsWire {
            count: wire.periods.count,
            first: wire.periods.first,
            granularity: wire.periods.granularity,
            last: wire.periods.last,
        }
        .to_axis()
        .map_err(corrupt)?;
        if periods.granularity() != wire.granularity {
            return Err(corrupt("granularity disagrees with period range".into()));
        }
        let chunk_hashes = wire
            .hashes
            .chunks
            .into_iter()
            .map(|(k, v)| {
                crate::model::parse_region_code(&k)
                    .map(|code| (code, v))
                    .map_err(|e| corrupt(e.to_string()))
            })
            .collect::<Result<_, _>>()?;
        Ok(Meta {
            periods,
            regions: wire.regions,
            indicators: wire.indicators,
            tracks: wire.tracks,
            summary_hash: wire.hashes.summary,
            chunk_hashes,
            provenance: wire.provenance,
        })
    }

    /// The chunk that carries `region`, if the region is in the dataset.
    pub fn chunk_key(&self, region: &RegionCode) -> Option<RegionCode> {
        self.regions
            .binary_search(region)
            .ok()
            .map(|_| region.country_code())
            .filter(|k| self.chunk_hashes.contains_key(k))
    }
}

/// Every payload of a packed dataset, serialised.
#[derive(Debug, Clone)]
pub struct Packed {
    pub meta: Meta,
    pub meta_bytes: Vec<u8>,
    pub summary: GlobalSummary,
    pub summary_bytes: Vec<u8>,
    pub chunks: BTreeMap<RegionCode, Vec<u8>>,
}

impl Packed {
    pub fn size_report(&self, soft_budget: u64) -> SizeReport {
        SizeReport::from_sizes(
            self.summary_bytes.len() as u64,
            self.meta_bytes.len() as u64,
            self.chunks.iter().map(|(k, b)| (k.clone(), b.len() as u64)),
            soft_budget,
        )
    }
}

/// Builds and serialises the summary, every chunk and the metadata.
pub fn pack(dataset: &Dataset) -> Result<Packed, ChunkError> {
    let summary = build_summary(dataset)?;
    let summary_bytes = serialize_summary(&summary);
    let chunks: BTreeMap<RegionCode, Vec<u8>> = build_chunks(dataset)
        .into_par_iter()
        .map(|c| (c.region().clone(), serialize_chunk(&c)))
        .collect();
    let hashes = chunks.iter().map(|(k, b)| (k.clone(), ContentHash::of(b))).collect();
    let meta = Meta::from_dataset(dataset, summary.hash(), hashes);
    let meta_bytes = meta.to_bytes();
    Ok(Packed {
        meta,
        meta_bytes,
        summary,
        summary_bytes,
        chunks,
    })
}

/// Writes a packed dataset to `dir`. Stale chunk files from an earlier run
/// are removed; `meta.json` is written last.
pub fn write_store(packed: &Packed, dir: &Path) -> Result<(), ChunkError> {
    let chunk_dir = dir.join(CHUNK_DIR);
    fs::create_dir_all(&chunk_dir).map_err(|e| io_err(&chunk_dir, e))?;
    for entry in fs::read_dir(&chunk_dir).map_err(|e| io_err(&chunk_dir, e))? {
        let path = entry.map_err(|e| io_err(&chunk_dir, e))?.path();
        if path.extension().is_some_and(|x| x == "json") {
            fs::remove_file(&path).map_err(|e| io_err(&path, e))?;
        }
    }
    for (key, bytes) in &packed.chunks {
        let path = chunk_path(dir, key);
        fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
    }
    let summary_path = dir.join(SUMMARY_FILE);
    fs::write(&summary_path, &packed.summary_bytes).map_err(|e| io_err(&summary_path, e))?;
    let meta_path = dir.join(META_FILE);
    fs::write(&meta_path, &packed.meta_bytes).map_err(|e| io_err(&meta_path, e))?;
    Ok(())
}

pub fn chunk_path(dir: &Path, key: &RegionCode) -> PathBuf {
    dir.join(CHUNK_DIR).join(format!("{key}.json"))
}

fn io_err(path: &Path, source: std::io::Error) -> ChunkError {
    ChunkError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read(path: &Path) -> Result<Vec<u8>, ChunkError> {
    fs::read(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            ChunkError::MissingFile(path.to_path_buf())
        } else {
            io_err(path, e)
        }
    })
}

/// A stored chunk: canonical bytes and their hash.
#[derive(Debug, Clone)]
pub struct StoredChunk {
    pub bytes: Vec<u8>,
    pub hash: ContentHash,
}

/// A verified store loaded into memory.
#[derive(Debug, Clone)]
pub struct Store {
    pub meta: Meta,
    pub meta_bytes: Vec<u8>,
    pub summary: GlobalSummary,
    pub summary_bytes: Vec<u8>,
    pub chunks: BTreeMap<RegionCode, StoredChunk>,
}

impl Store {
    /// Reads and verifies every file: hashes must match `meta.json` and the
    /// summary's shape must agree with it.
    pub fn open(dir: &Path) -> Result<Store, ChunkError> {
        let meta_bytes = read(&dir.join(META_FILE))?;
        let meta = Meta::from_bytes(&meta_bytes)?;

        let summary_path = dir.join(SUMMARY_FILE);
        let summary_bytes = read(&summary_path)?;
        if ContentHash::of(&summary_bytes) != meta.summary_hash {
            return Err(ChunkError::HashMismatch(summary_path));
        }
        let summary = deserialize_summary(&summary_bytes)?;
        let track_names = |ts: &[Track]| {
            ts.iter()
                .map(|t| (t.name.clone(), t.indicator.clone()))
                .collect::<Vec<_>>()
        };
        let summary_tracks: Vec<(String, String)> = summary
            .tracks()
            .iter()
            .map(|t| (t.name.clone(), t.indicator.clone()))
            .collect();
        if summary.regions() != meta.regions.as_slice()
            || summary.periods() != &meta.periods
            || summary_tracks != track_names(&meta.tracks)
        {
            return Err(ChunkError::CorruptPayload("summary disagrees with meta.json".into()));
        }

        let chunks = meta
            .chunk_hashes
            .par_iter()
            .map(|(key, hash)| {
                let path = chunk_path(dir, key);
                let bytes = read(&path)?;
                if ContentHash::of(&bytes) != *hash {
                    return Err(ChunkError::HashMismatch(path));
                }
                Ok((key.clone(), StoredChunk { bytes, hash: *hash }))
            })
            .collect::<Result<BTreeMap<_, _>, ChunkError>>()?;

        Ok(Store {
            meta,
            meta_bytes,
            summary,
            summary_bytes,
            chunks,
        })
    }

    /// Parses every chunk and rebuilds the dataset.
    pub fn dataset(&self) -> Result<Dataset, ChunkError> {
        let chunks = self
            .chunks
            .values()
            .map(|c| deserialize_chunk(&c.bytes))
            .collect::<Result<Vec<_>, _>>()?;
        let ds = reassemble(
            &chunks,
            self.meta.indicators.clone(),
            self.meta.tracks.clone(),
            self.meta.provenance.clone(),
        )?;
        if ds.regions() != self.meta.regions.as_slice() {
            return Err(ChunkError::CorruptPayload(
                "chunk regions disagree with meta.json".into(),
            ));
        }
        Ok(ds)
    }

    pub fn size_report(&self, soft_budget: u64) -> SizeReport {
        SizeReport::from_sizes(
            self.summary_bytes.len() as u64,
            self.meta_bytes.len() as u64,
            self.chunks.iter().map(|(k, c)| (k.clone(), c.bytes.len() as u64)),
            soft_budget,
        )
    }
}
