//! Splits a dataset into one eager summary and per-country detail chunks,
//! serialised as canonical JSON with content hashes.

mod canonical;
mod detail;
mod size;
mod store;
mod summary;

use std::path::PathBuf;

pub use canonical::ContentHash;
pub(crate) use canonical::Writer;
pub use detail::{build_chunks, deserialize_chunk, reassemble, serialize_chunk, DetailChunk, RegionSeries};
pub use size::{size_report, OversizedChunk, SizeReport, DEFAULT_SOFT_BUDGET};
pub use store::{chunk_path, pack, write_store, Meta, Packed, Store, StoredChunk, CHUNK_DIR, META_FILE, SUMMARY_FILE};
pub use summary::{build_summary, deserialize_summary, serialize_summary, GlobalSummary, SummaryTrack};

#[derive(Debug, thiserror::Error)]
pub enum ChunkError {
    #[error("track {track:?} reads undeclared indicator {indicator:?}")]
    TrackSourceMissing { track: String, indicator: String },
    #[error("corrupt payload: {0}")]
    CorruptPayload(String),
    #[error("cannot reassemble dataset: {0}")]
    Reassembly(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),
    #[error("content hash mismatch for {}", .0.display())]
    HashMismatch(PathBuf),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_region_code, Dataset, DatasetParts, Granularity, Indicator, PeriodAxis, Track};

    fn code(s: &str) -> crate::model::RegionCode {
        parse_region_code(s).unwrap()
    }

    fn sample() -> Dataset {
        let regions = vec![code("DE"), code("DE-BY"), code("FR")];
        let periods = PeriodAxis::parse("2020-01", "2020-03", Granularity::Monthly).unwrap();
        let indicators = vec![Indicator::bare("cases"), Indicator::bare("deaths")];
        let tracks = vec![Track {
            name: "cases".into(),
            indicator: "cases".into(),
        }];
        let values = (0..3 * 2 * 3)
            .map(|k| if k % 7 == 3 { None } else { Some(k as f64 * 1.5) })
            .collect();
        Dataset::new(DatasetParts {
            regions,
            periods,
            indicators,
            tracks,
            values,
            provenance: "test".into(),
        })
        .unwrap()
    }

    #[test]
    fn subdivisions_share_the_country_chunk() {
        let chunks = build_chunks(&sample());
        let keys: Vec<String> = chunks.iter().map(|c| c.region().to_string()).collect();
        assert_eq!(keys, ["DE", "FR"]);
        let members: Vec<String> = chunks[0].members().iter().map(|m| m.region.to_string()).collect();
        assert_eq!(members, ["DE", "DE-BY"]);
    }

    #[test]
    fn chunk_series_match_dataset() {
        let ds = sample();
        let chunks = build_chunks(&ds);
        for (r, region) in ds.regions().iter().enumerate() {
            let chunk = chunks.iter().find(|c| c.region() == &region.country_code()).unwrap();
            for (i, ind) in ds.indicators().iter().enumerate() {
                assert_eq!(chunk.series(region, &ind.id).unwrap(), ds.series(r, i));
            }
        }
    }

    #[test]
    fn chunk_json_shape() {
        let ds = sample();
        let chunk = &build_chunks(&ds)[1];
        let text = String::from_utf8(serialize_chunk(chunk)).unwrap();
        assert_eq!(
            text,
            r#"{"indicators":["cases","deaths"],"periods":{"count":3,"first":"2020-01","granularity":"monthly","last":"2020-03"},"region":"FR","series":{"FR":{"cases":[18,19.5,21],"deaths":[22.5,24,null]}}}"#
        );
    }

    #[test]
    fn summary_json_shape() {
        let ds = sample();
        let text = String::from_utf8(serialize_summary(&build_summary(&ds).unwrap())).unwrap();
        assert_eq!(
            text,
            r#"{"periods":{"count":3,"first":"2020-01","granularity":"monthly","last":"2020-03"},"regions":["DE","DE-BY","FR"],"tracks":[{"indicator":"cases","name":"cases","values":[[0,1.5,3],[9,10.5,12],[18,19.5,21]]}]}"#
        );
    }

    #[test]
    fn round_trip_and_reassembly() {
        let ds = sample();
        let chunks: Vec<DetailChunk> = build_chunks(&ds)
            .iter()
            .map(|c| deserialize_chunk(&serialize_chunk(c)).unwrap())
            .collect();
        let back = reassemble(&chunks, ds.indicators().to_vec(), ds.tracks().to_vec(), "x".into()).unwrap();
        assert_eq!(back, ds);

        let summary = build_summary(&ds).unwrap();
        let again = deserialize_summary(&serialize_summary(&summary)).unwrap();
        assert_eq!(again, summary);
    }

    #[test]
    fn unknown_fields_rejected() {
        let bytes = br#"{"extra":1,"periods":{"count":1,"first":"2020-01","granularity":"monthly","last":"2020-01"},"regions":[],"tracks":[]}"#;
        assert!(matches!(deserialize_summary(bytes), Err(ChunkError::CorruptPayload(_))));
    }

    #[test]
    fn summary_requires_track_source() {
        let ds = sample();
        let mut parts = ds.into_parts();
        parts.tracks.push(Track {
            name: "p".into(),
            indicator: "nope".into(),
        });
        let ds = Dataset::from_parts_unchecked(parts);
        assert!(matches!(build_summary(&ds), Err(ChunkError::TrackSourceMissing { .. })));
        // Sizing still works and leaves the bad track out.
        let report = size_report(&ds, DEFAULT_SOFT_BUDGET);
        assert_eq!(report.chunk_count, 2);
    }

    #[test]
    fn store_round_trip_and_tamper_detection() {
        let ds = sample();
        let dir = tempfile::tempdir().unwrap();
        let packed = pack(&ds).unwrap();
        // A stale chunk from an earlier dataset must disappear.
        std::fs::create_dir_all(dir.path().join(CHUNK_DIR)).unwrap();
        std::fs::write(dir.path().join(CHUNK_DIR).join("ZZ.json"), b"{}").unwrap();
        write_store(&packed, dir.path()).unwrap();
        assert!(!dir.path().join(CHUNK_DIR).join("ZZ.json").exists());

        let store = Store::open(dir.path()).unwrap();
        assert_eq!(store.dataset().unwrap(), ds);
        assert_eq!(store.meta.chunk_key(&code("DE-BY")), Some(code("DE")));
        assert_eq!(store.meta.chunk_key(&code("IT")), None);
        assert_eq!(store.size_report(1).total, packed.size_report(1).total);

        std::fs::write(chunk_path(dir.path(), &code("FR")), b"{}").unwrap();
        assert!(matches!(Store::open(dir.path()), Err(ChunkError::HashMismatch(_))));
        std::fs::remove_file(dir.path().join(META_FILE)).unwrap();
        assert!(matches!(Store::open(dir.path()), Err(ChunkError::MissingFile(_))));
    }

    #[test]
    fn meta_is_canonical() {
        let packed = pack(&sample()).unwrap();
        let text = String::from_utf8(packed.meta_bytes.clone()).unwrap();
        assert!(text.starts_with(r#"{"format":1,"granularity":"monthly","hashes":{"chunks":{"DE":""#));
        assert_eq!(Meta::from_bytes(&packed.meta_bytes).unwrap(), packed.meta);
    }

    #[test]
    fn size_report_totals() {
        let packed = pack(&sample()).unwrap();
        let r = packed.size_report(10);
        let chunk_sum: u64 = packed.chunks.values().map(|b| b.len() as u64).sum();
        assert_eq!(r.chunks_total, chunk_sum);
        assert_eq!(
            r.total,
            packed.summary_bytes.len() as u64 + packed.meta_bytes.len() as u64 + chunk_sum
        );
        assert_eq!(r.warnings.len(), 2);
        assert!(r.chunk_min as f64 <= r.chunk_mean && r.chunk_mean <= r.chunk_max as f64);
    }
}
