use serde::Deserialize;

use super::canonical::{ContentHash, PeriodsWire, Writer};
use super::ChunkError;
use crate::model::{parse_region_code, Dataset, PeriodAxis, RegionCode};

/// One track's region × period matrix, region-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTrack {
    pub name: String,
    pub indicator: String,
    pub values: Vec<Option<f64>>,
}

/// The eager payload: every region's track values over all periods.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalSummary {
    regions: Vec<RegionCode>,
    periods: PeriodAxis,
    tracks: Vec<SummaryTrack>,
    hash: ContentHash,
}

impl GlobalSummary {
    /// Assembles a summary and computes its content hash.
    pub fn new(
        regions: Vec<RegionCode>,
        periods: PeriodAxis,
        tracks: Vec<SummaryTrack>,
    ) -> Result<GlobalSummary, ChunkError> {
        let cells = regions.len() * periods.len();
        for t in &tracks {
            if t.values.len() != cells {
                return Err(ChunkError::CorruptPayload(format!(
                    "track {:?} holds {} cells, expected {cells}",
                    t.name,
                    t.values.len()
                )));
            }
        }
        let mut summary = GlobalSummary {
            regions,
            periods,
            tracks,
            hash: ContentHash::of(b""),
        };
        summary.hash = ContentHash::of(&summary.to_bytes());
        Ok(summary)
    }

    pub fn regions(&self) -> &[RegionCode] {
        &self.regions
    }

    pub fn periods(&self) -> &PeriodAxis {
        &self.periods
    }

    pub fn tracks(&self) -> &[SummaryTrack] {
        &self.tracks
    }

    pub fn hash(&self) -> ContentHash {
        self.hash
    }

    pub fn track(&self, name: &str) -> Option<&SummaryTrack> {
        self.tracks.iter().find(|t| t.name == name)
    }

    /// One region's period series for a track.
    pub fn row<'a>(&self, track: &'a SummaryTrack, region: usize) -> &'a [Option<f64>] {
        let n = self.periods.len();
        &track.values[region * n..(region + 1) * n]
    }

    pub fn value(&self, track: &str, region: usize, ordinal: u32) -> Option<f64> {
        let t = self.track(track)?;
        self.row(t, region).get(ordinal as usize).copied().flatten()
    }

    pub fn cell_count(&self) -> usize {
        self.tracks.len() * self.regions.len() * self.periods.len()
    }

    fn to_bytes(&self) -> Vec<u8> {
        let n = self.periods.len();
        let mut w = Writer::with_capacity(16 + self.cell_count() * 8);
        w.raw("{").key("periods").periods(&self.periods).raw(",");
        w.key("regions").raw("[");
        for (i, r) in self.regions.iter().enumerate() {
            if i > 0 {
                w.raw(",");
            }
            w.string(&r.to_string());
        }
        w.raw("],").key("tracks").raw("[");
        for (ti, t) in self.tracks.iter().enumerate() {
            if ti > 0 {
                w.raw(",");
            }
            w.raw("{").key("indicator").string(&t.indicator).raw(",");
            w.key("name").string(&t.name).raw(",");
            w.key("values").raw("[");
            for r in 0..self.regions.len() {
                if r > 0 {
                    w.raw(",");
                }
                w.series(&t.values[r * n..(r + 1) * n]);
            }
            w.raw("]}");
        }
        w.raw("]}");
        w.into_bytes()
    }
}

/// Copies each track's source indicator out of the dataset. No aggregation.
pub fn build_summary(dataset: &Dataset) -> Result<GlobalSummary, ChunkError> {
    let n_regions = dataset.regions().len();
    let tracks = dataset
        .tracks()
        .iter()
        .map(|t| {
            let i = dataset
                .indicator_index(&t.indicator)
                .ok_or_else(|| ChunkError::TrackSourceMissing {
                    track: t.name.clone(),
                    indicator: t.indicator.clone(),
                })?;
            let values = (0..n_regions)
                .flat_map(|r| dataset.series(r, i).iter().copied())
                .collect();
            Ok(SummaryTrack {
                name: t.name.clone(),
                indicator: t.indicator.clone(),
                values,
            })
        })
        .collect::<Result<Vec<_>, ChunkError>>()?;
    GlobalSummary::new(dataset.regions().to_vec(), *dataset.periods(), tracks)
}

/// Canonical bytes of a summary.
pub fn serialize_summary(summary: &GlobalSummary) -> Vec<u8> {
    summary.to_bytes()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SummaryWire {
    periods: PeriodsWire,
    regions: Vec<String>,
    tracks: Vec<TrackWire>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TrackWire {
    indicator: String,
    name: String,
    values: Vec<Vec<Option<f64>>>,
}

pub fn deserialize_summary(bytes: &[u8]) -> Result<GlobalSummary, ChunkError> {
    let corrupt = |m: String| ChunkError::CorruptPayload(format!("summary: {m}"));
    let wire: SummaryWire = serde_json::from_slice(bytes).map_err(|e| corrupt(e.to_string()))?;
    let periods = wire.periods.to_axis().map_err(corrupt)?;
    let regions = wire
        .regions
        .iter()
        .map(|r| parse_region_code(r).map_err(|e| corrupt(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let tracks = wire
        .tracks
        .into_iter()
        .map(|t| {
            if t.values.len() != regions.len() || t.values.iter().any(|row| row.len() != periods.len()) {
                return Err(corrupt(format!("track {:?} has the wrong shape", t.name)));
            }
            Ok(SummaryTrack {
                name: t.name,
                indicator: t.indicator,
                values: t.values.into_iter().flatten().collect(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    GlobalSummary::new(regions, periods, tracks)
}
