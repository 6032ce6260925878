use std::fmt;

use serde::Serialize;

use super::store::{Meta, Packed};
use super::{build_chunks, serialize_chunk, summary::SummaryTrack, GlobalSummary};
use crate::chunk::ContentHash;
use crate::model::{Dataset, RegionCode};

/// Default per-chunk soft budget in bytes.
pub const DEFAULT_SOFT_BUDGET: u64 = 256 * 1024;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OversizedChunk {
    pub region: String,
    pub bytes: u64,
    pub budget: u64,
}

/// Serialised payload sizes in bytes, uncompressed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeReport {
    pub summary_bytes: u64,
    pub meta_bytes: u64,
    pub chunk_count: usize,
    pub chunk_min: u64,
    pub chunk_mean: f64,
    pub chunk_max: u64,
    pub chunks_total: u64,
    /// summary + meta + all chunks
    pub total: u64,
    pub soft_budget: u64,
    pub warnings: Vec<OversizedChunk>,
}

impl SizeReport {
    pub fn from_sizes(
        summary_bytes: u64,
        meta_bytes: u64,
        chunks: impl IntoIterator<Item = (RegionCode, u64)>,
        soft_budget: u64,
    ) -> SizeReport {
        let chunks: Vec<(RegionCode, u64)> = chunks.into_iter().collect();
        let sizes = || chunks.iter().map(|c| c.1);
        let chunks_total: u64 = sizes().sum();
        let warnings = chunks
            .iter()
            .filter(|(_, b)| *b > soft_budget)
            .map(|(r, b)| OversizedChunk {
                region: r.to_string(),
                bytes: *b,
                budget: soft_budget,
            })
            .collect();
        SizeReport {
            summary_bytes,
            meta_bytes,
            chunk_count: chunks.len(),
            chunk_min: sizes().min().unwrap_or(0),
            chunk_mean: if chunks.is_empty() {
                0.0
            } else {
                chunks_total as f64 / chunks.len() as f64
            },
            chunk_max: sizes().max().unwrap_or(0),
            chunks_total,
            total: summary_bytes + meta_bytes + chunks_total,
            soft_budget,
            warnings,
        }
    }
}

/// Sizes of every payload the dataset would produce.
///
/// Works on any dataset: tracks whose source indicator is undeclared are
/// left out of the summary instead of failing.
pub fn size_report(dataset: &Dataset, soft_budget: u64) -> SizeReport {
    if let Ok(packed) = super::store::pack(dataset) {
        return packed.size_report(soft_budget);
    }
    let n_regions = dataset.regions().len();
    let tracks: Vec<SummaryTrack> = dataset
        .tracks()
        .iter()
        .filter_map(|t| {
            let i = dataset.indicator_index(&t.indicator)?;
            Some(SummaryTrack {
                name: t.name.clone(),
                indicator: t.indicator.clone(),
                values: (0..n_regions)
                    .flat_map(|r| dataset.series(r, i).iter().copied())
                    .collect(),
            })
        })
        .collect();
    let summary = GlobalSummary::new(dataset.regions().to_vec(), *dataset.periods(), tracks)
        .expect("summary shape follows the dataset");
    let chunks: Vec<(RegionCode, Vec<u8>)> = build_chunks(dataset)
        .iter()
        .map(|c| (c.region().clone(), serialize_chunk(c)))
        .collect();
    let meta = Meta::from_dataset(
        dataset,
        summary.hash(),
        chunks.iter().map(|(k, b)| (k.clone(), ContentHash::of(b))).collect(),
    );
    let packed = Packed {
        meta_bytes: meta.to_bytes(),
        meta,
        summary_bytes: super::serialize_summary(&summary),
        summary,
        chunks: chunks.into_iter().collect(),
    };
    packed.size_report(soft_budget)
}

fn human(bytes: f64) -> String {
    if bytes >= 1024.0 * 1024.0 {
        format!("{:.2} MiB", bytes / (1024.0 * 1024.0))
    } else if bytes >= 1024.0 {
        format!("{:.1} KiB", bytes / 1024.0)
    } else {
        format!("{bytes:.0} B")
    }
}

impl fmt::Display for SizeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: [(&str, String, String); 7] = [
            (
                "summary",
                self.summary_bytes.to_string(),
                human(self.summary_bytes as f64),
            ),
            ("meta", self.meta_bytes.to_string(), human(self.meta_bytes as f64)),
            ("chunks", self.chunk_count.to_string(), String::new()),
            ("chunk min", self.chunk_min.to_string(), human(self.chunk_min as f64)),
            ("chunk mean", format!("{:.1}", self.chunk_mean), human(self.chunk_mean)),
            ("chunk max", self.chunk_max.to_string(), human(self.chunk_max as f64)),
            ("total", self.total.to_string(), human(self.total as f64)),
        ];
        for (label, value, pretty) in rows {
            writeln!(f, "{label:<12} {value:>14}  {pretty}")?;
        }
        for w in &self.warnings {
            writeln!(
                f,
                "warning: chunk {} is {} bytes, over the {} byte soft budget",
                w.region, w.bytes, w.budget
            )?;
        }
        Ok(())
    }
}
