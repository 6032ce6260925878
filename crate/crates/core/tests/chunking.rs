use crisismap_core::chunk::{
    build_chunks, build_summary, deserialize_chunk, deserialize_summary, pack, reassemble, serialize_chunk,
    serialize_summary, write_store, ContentHash, Store,
};
use crisismap_core::fixtures::{ingest_spec_for, random_dataset, write_format, RegionLabels};
use crisismap_core::ingest::{ingest, Format};
use crisismap_core::model::{Dataset, DatasetParts};
use proptest::prelude::*;

/// Full scan: every cell of every chunk against the dataset, and every
/// summary cell against its source indicator.
fn partition_mismatches(ds: &Dataset) -> usize {
    let chunks = build_chunks(ds);
    let summary = build_summary(ds).unwrap();
    let mut mismatches = 0;
    let mut seen = 0;
    for chunk in &chunks {
        for member in chunk.members() {
            seen += 1;
            let r = ds.region_index(&member.region).unwrap();
            for (i, ind) in ds.indicators().iter().enumerate() {
                let got = chunk.series(&member.region, &ind.id).unwrap();
                let want = ds.series(r, i);
                mismatches += got.iter().zip(want).filter(|(a, b)| a != b).count();
            }
        }
    }
    mismatches += ds.regions().len().abs_diff(seen);
    for track in ds.tracks() {
        let i = ds.indicator_index(&track.indicator).unwrap();
        for (r, _) in ds.regions().iter().enumerate() {
            for p in 0..ds.periods().len() as u32 {
                let want = ds.series(r, i)[p as usize];
                if summary.value(&track.name, r, p) != want {
                    mismatches += 1;
                }
            }
        }
    }
    mismatches
}

#[test]
fn ingested_fixtures_partition_losslessly() {
    for seed in 0..20 {
        let source = random_dataset(seed);
        let ds = ingest(
            &write_format(&source, Format::Csv, RegionLabels::Codes),
            &ingest_spec_for(&source, Format::Csv),
        )
        .unwrap();
        assert_eq!(partition_mismatches(&ds), 0, "seed {seed}");
        let back = reassemble(
            &build_chunks(&ds),
            ds.indicators().to_vec(),
            ds.tracks().to_vec(),
            String::new(),
        )
        .unwrap();
        assert_eq!(back, ds, "seed {seed}");
    }
}

#[test]
fn payloads_round_trip_and_are_deterministic() {
    for seed in 100..200 {
        let ds = random_dataset(seed);
        let summary = build_summary(&ds).unwrap();
        let bytes = serialize_summary(&summary);
        assert_eq!(deserialize_summary(&bytes).unwrap(), summary, "seed {seed}");
        assert_eq!(serialize_summary(&build_summary(&random_dataset(seed)).unwrap()), bytes);
        for chunk in build_chunks(&ds) {
            let bytes = serialize_chunk(&chunk);
            let back = deserialize_chunk(&bytes).unwrap();
            assert_eq!(back, chunk);
            assert_eq!(serialize_chunk(&back), bytes);
            assert_eq!(ContentHash::of(&bytes), chunk.hash());
        }
    }
}

#[test]
fn store_survives_disk_round_trip() {
    let ds = random_dataset(3);
    let dir = tempfile::tempdir().unwrap();
    let packed = pack(&ds).unwrap();
    write_store(&packed, dir.path()).unwrap();
    let store = Store::open(dir.path()).unwrap();
    assert_eq!(store.dataset().unwrap(), ds);
    assert_eq!(store.summary_bytes, packed.summary_bytes);
    assert_eq!(store.meta_bytes, packed.meta_bytes);
    // Writing the same dataset twice yields identical bytes.
    let again = pack(&ds).unwrap();
    assert_eq!(again.meta_bytes, packed.meta_bytes);
    assert_eq!(again.chunks, packed.chunks);
}

fn with_cell(ds: &Dataset, cell: usize, value: Option<f64>) -> Dataset {
    let mut parts: DatasetParts = ds.clone().into_parts();
    parts.values[cell] = value;
    Dataset::new(parts).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partition_holds_for_any_seed(seed in any::<u64>()) {
        prop_assert_eq!(partition_mismatches(&random_dataset(seed)), 0);
    }

    #[test]
    fn a_single_cell_change_moves_exactly_one_chunk_hash(seed in any::<u64>(), pick in any::<prop::sample::Index>(), v in -1e6f64..1e6) {
        let ds = random_dataset(seed);
        let cell = pick.index(ds.cell_count());
        let old = ds.clone().into_parts().values[cell];
        let new_value = if old == Some(v) { None } else { Some(v) };
        let changed = with_cell(&ds, cell, new_value);
        let before: Vec<ContentHash> = build_chunks(&ds).iter().map(|c| c.hash()).collect();
        let after: Vec<ContentHash> = build_chunks(&changed).iter().map(|c| c.hash()).collect();
        let differing = before.iter().zip(&after).filter(|(a, b)| a != b).count();
        prop_assert_eq!(differing, 1);
    }
}
