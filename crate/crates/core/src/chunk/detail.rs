use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Deserialize;

use super::canonical::{ContentHash, PeriodsWire, Writer};
use super::ChunkError;
use crate::model::{parse_region_code, Dataset, DatasetParts, Indicator, PeriodAxis, RegionCode, Track};

/// All indicator series of one region, indicator-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSeries {
    pub region: RegionCode,
    pub values: Vec<Option<f64>>,
}

/// The lazy payload for one country: its own series plus those of any of
/// its ISO-3166-2 subdivisions present in the dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DetailChunk {
    region: RegionCode,
    periods: PeriodAxis,
    indicators: Vec<String>,
    members: Vec<RegionSeries>,
    hash: ContentHash,
}

impl DetailChunk {
    pub fn new(
        region: RegionCode,
        periods: PeriodAxis,
        indicators: Vec<String>,
        mut members: Vec<RegionSeries>,
    ) -> Result<DetailChunk, ChunkError> {
        if region.is_subdivision() {
            return Err(ChunkError::CorruptPayload(format!(
                "chunk key {region} is not a country"
            )));
        }
        let cells = indicators.len() * periods.len();
        for m in &members {
            if m.region.country_code() != region {
                return Err(ChunkError::CorruptPayload(format!(
                    "region {} does not belong to chunk {region}",
                    m.region
                )));
            }
            if m.values.len() != cells {
                return Err(ChunkError::CorruptPayload(format!(
                    "region {} holds {} cells, expected {cells}",
                    m.region,
                    m.values.len()
                )));
            }
        }
        members.sort_by(|a, b| a.region.cmp(&b.region));
        let mut chunk = DetailChunk {
            region,
            periods,
            indicators,
            members,
            hash: ContentHash::of(b""),
        };
        chunk.hash = ContentHash::of(&chunk.to_bytes());
        Ok(chunk)
    }

    /// Country-level chunk key.
    pub fn region(&self) -> &RegionCode {
        &self.region
    }

    pub fn periods(&self) -> &PeriodAxis {
        &self.periods
    }

    pub fn indicators(&self) -> &[String] {
        &self.indicators
    }

    pub fn members(&self) -> &[RegionSeries] {
        &self.members
    }

    pub fn hash(&self) -> ContentHash {
        self.hash
    }

    /// Series of `indicator` for member `region`.
    pub fn series(&self, region: &RegionCode, indicator: &str) -> Option<&[Option<f64>]> {
        let m = self.members.iter().find(|m| &m.region == region)?;
        let i = self.indicators.iter().position(|x| x == indicator)?;
        let n = self.periods.len();
        Some(&m.values[i * n..(i + 1) * n])
    }

    fn to_bytes(&self) -> Vec<u8> {
        let n = self.periods.len();
        let mut w = Writer::with_capacity(64 + self.members.len() * self.indicators.len() * n * 8);
        w.raw("{").key("indicators").raw("[");
        for (i, id) in self.indicators.iter().enumerate() {
            if i > 0 {
                w.raw(",");
            }
            w.string(id);
        }
        w.raw("],").key("periods").periods(&self.periods).raw(",");
        w.key("region").string(&self.region.to_string()).raw(",");
        w.key("series").raw("{");

        // Keys are sorted as strings in the output.
        let mut members: Vec<(String, &RegionSeries)> =
            self.members.iter().map(|m| (m.region.to_string(), m)).collect();
        members.sort_by(|a, b| a.0.cmp(&b.0));
        let mut order: Vec<(usize, &String)> = self.indicators.iter().enumerate().collect();
        order.sort_by(|a, b| a.1.cmp(b.1));

        for (mi, (code, m)) in members.iter().enumerate() {
            if mi > 0 {
                w.raw(",");
            }
            w.key(code).raw("{");
            for (k, (i, id)) in order.iter().enumerate() {
                if k > 0 {
                    w.raw(",");
                }
                w.key(id).series(&m.values[i * n..(i + 1) * n]);
            }
            w.raw("}");
        }
        w.raw("}}");
        w.into_bytes()
    }
}

/// One chunk per country present in the dataset (directly or through a
/// subdivision). Chunks are built in parallel.
pub fn build_chunks(dataset: &Dataset) -> Vec<DetailChunk> {
    let mut groups: BTreeMap<RegionCode, Vec<usize>> = BTreeMap::new();
    for (r, code) in dataset.regions().iter().enumerate() {
        groups.entry(code.country_code()).or_default().push(r);
    }
    let indicators: Vec<String> = dataset.indicators().iter().map(|i| i.id.clone()).collect();
    let n_ind = indicators.len();
    let groups: Vec<(RegionCode, Vec<usize>)> = groups.into_iter().collect();

    groups
        .into_par_iter()
        .map(|(key, rows)| {
            let members = rows
                .into_iter()
                .map(|r| RegionSeries {
                    region: dataset.regions()[r].clone(),
                    values: (0..n_ind).flat_map(|i| dataset.series(r, i).iter().copied()).collect(),
                })
                .collect();
            DetailChunk::new(key, *dataset.periods(), indicators.clone(), members)
                .expect("chunks built from a dataset have consistent shapes")
        })
        .collect()
}

/// Rebuilds a dataset from its chunks plus the metadata that chunks do not
/// carry.
pub fn reassemble(
    chunks: &[DetailChunk],
    indicators: Vec<Indicator>,
    tracks: Vec<Track>,
    provenance: String,
) -> Result<Dataset, ChunkError> {
    let first = chunks
        .first()
        .ok_or_else(|| ChunkError::Reassembly("no chunks".into()))?;
    let periods = *first.periods();
    let ids: Vec<&str> = indicators.iter().map(|i| i.id.as_str()).collect();

    let mut members: Vec<&RegionSeries> = Vec::new();
    for c in chunks {
        if c.periods() != &periods {
            return Err(ChunkError::Reassembly(format!(
                "chunk {} has a different period axis",
                c.region()
            )));
        }
        if c.indicators().iter().map(String::as_str).ne(ids.iter().copied()) {
            return Err(ChunkError::Reassembly(format!(
                "chunk {} has different indicators",
                c.region()
            )));
        }
        members.extend(c.members());
    }
    members.sort_by(|a, b| a.region.cmp(&b.region));

    let regions: Vec<RegionCode> = members.iter().map(|m| m.region.clone()).collect();
    let values: Vec<Option<f64>> = members.iter().flat_map(|m| m.values.iter().copied()).collect();
    Dataset::new(DatasetParts {
        regions,
        periods,
        indicators,
        tracks,
        values,
        provenance,
    })
    .map_err(|e| ChunkError::Reassembly(e.to_string()))
}

/// Canonical bytes of a chunk.
pub fn serialize_chunk(chunk: &DetailChunk) -> Vec<u8> {
    chunk.to_bytes()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChunkWire {
    indicators: Vec<String>,
    periods: PeriodsWire,
    region: String,
    series: BTreeMap<String, BTreeMap<String, Vec<Option<f64>>>>,
}

pub fn deserialize_chunk(bytes: &[u8]) -> Result<DetailChunk, ChunkError> {
    let corrupt = |m: String| ChunkError::CorruptPayload(format!("chunk: {m}"));
    let wire: ChunkWire = serde_json::from_slice(bytes).map_err(|e| corrupt(e.to_string()))?;
    let periods = wire.periods.to_axis().map_err(corrupt)?;
    let region = parse_region_code(&wire.region).map_err(|e| corrupt(e.to_string()))?;
    let mut members = Vec::with_capacity(wire.series.len());
    for (code, mut by_indicator) in wire.series {
        let code = parse_region_code(&code).map_err(|e| corrupt(e.to_string()))?;
        if by_indicator.len() != wire.indicators.len() {
            return Err(corrupt(format!("region {code} has {} indicators", by_indicator.len())));
        }
        let mut values = Vec::with_capacity(wire.indicators.len() * periods.len());
        for id in &wire.indicators {
            let series = by_indicator
                .remove(id)
                .ok_or_else(|| corrupt(format!("region {code} lacks indicator {id:?}")))?;
            if series.len() != periods.len() {
                return Err(corrupt(format!("series {code}/{id} has {} periods", series.len())));
            }
            values.extend(series);
        }
        members.push(RegionSeries { region: code, values });
    }
    DetailChunk::new(region, periods, wire.indicators, members)
}
