use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ModelError, PeriodAxis, RegionCode};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Indicator {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub unit: String,
}

impl Indicator {
    /// An indicator labelled by its own id.
    pub fn bare(id: impl Into<String>) -> Indicator {
        let id = id.into();
        Indicator {
            name: id.clone(),
            id,
            unit: String::new(),
        }
    }

    /// `[a-z0-9_]{1,64}`
    pub fn is_valid_id(id: &str) -> bool {
        (1..=64).contains(&id.len())
            && id
                .bytes()
                .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_')
    }
}

/// A named series promoted to the timeline and map, sourced from one indicator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Track {
    pub name: String,
    pub indicator: String,
}

/// A broken dataset invariant, as reported by [`Dataset::violations`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    DuplicateRegion {
        region: String,
    },
    DuplicateIndicator {
        indicator: String,
    },
    InvalidIndicatorId {
        indicator: String,
    },
    NoTracks,
    DuplicateTrack {
        track: String,
    },
    UndeclaredTrackSource {
        track: String,
        indicator: String,
    },
    ValueGridMismatch {
        expected: usize,
        actual: usize,
    },
    NonFiniteValue {
        region: String,
        period: String,
        indicator: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateRegion { region } => write!(f, "region {region} declared twice"),
            Violation::DuplicateIndicator { indicator } => {
                write!(f, "indicator {indicator:?} declared twice")
            }
            Violation::InvalidIndicatorId { indicator } => {
                write!(f, "indicator id {indicator:?} does not match [a-z0-9_]{{1,64}}")
            }
            Violation::NoTracks => f.write_str("dataset declares no tracks"),
            Violation::DuplicateTrack { track } => write!(f, "track {track:?} declared twice"),
            Violation::UndeclaredTrackSource { track, indicator } => {
                write!(f, "track {track:?} references undeclared indicator {indicator:?}")
            }
            Violation::ValueGridMismatch { expected, actual } => {
                write!(f, "value grid holds {actual} cells, expected {expected}")
            }
            Violation::NonFiniteValue {
                region,
                period,
                indicator,
            } => write!(f, "non-finite value at ({region}, {period}, {indicator})"),
        }
    }
}

/// Plain constructor input for [`Dataset`].
///
/// `values` is dense and laid out region-major, then indicator, then period:
/// index `(r * indicators.len() + i) * periods.len() + p`. `None` is MISSING.
#[derive(Debug, Clone)]
pub struct DatasetParts {
    pub regions: Vec<RegionCode>,
    pub periods: PeriodAxis,
    pub indicators: Vec<Indicator>,
    pub tracks: Vec<Track>,
    pub values: Vec<Option<f64>>,
    pub provenance: String,
}

/// Immutable store of (region, period, indicator) → value.
#[derive(Debug, Clone)]
pub struct Dataset {
    regions: Vec<RegionCode>,
    periods: PeriodAxis,
    indicators: Vec<Indicator>,
    tracks: Vec<Track>,
    values: Vec<Option<f64>>,
    provenance: String,
}

impl Dataset {
    /// Builds a dataset, rejecting any invariant violation.
    pub fn new(parts: DatasetParts) -> Result<Dataset, ModelError> {
        let dataset = Dataset::from_parts_unchecked(parts);
        let violations = dataset.violations();
        if violations.is_empty() {
            Ok(dataset)
        } else {
            Err(ModelError::InvalidDataset(violations))
        }
    }

    /// Builds a dataset without checking invariants. Use
    /// [`Dataset::violations`] to inspect it afterwards.
    pub fn from_parts_unchecked(parts: DatasetParts) -> Dataset {
        Dataset {
            regions: parts.regions,
            periods: parts.periods,
            indicators: parts.indicators,
            tracks: parts.tracks,
            values: parts.values,
            provenance: parts.provenance,
        }
    }

    pub fn into_parts(self) -> DatasetParts {
        DatasetParts {
            regions: self.regions,
            periods: self.periods,
            indicators: self.indicators,
            tracks: self.tracks,
            values: self.values,
            provenance: self.provenance,
        }
    }

    pub fn regions(&self) -> &[RegionCode] {
        &self.regions
    }

    pub fn periods(&self) -> &PeriodAxis {
        &self.periods
    }

    pub fn indicators(&self) -> &[Indicator] {
        &self.indicators
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Total number of grid cells, MISSING included.
    pub fn cell_count(&self) -> usize {
        self.regions.len() * self.indicators.len() * self.periods.len()
    }

    /// Number of non-MISSING cells.
    pub fn present_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn region_index(&self, region: &RegionCode) -> Option<usize> {
        self.regions.iter().position(|r| r == region)
    }

    pub fn indicator_index(&self, id: &str) -> Option<usize> {
        self.indicators.iter().position(|i| i.id == id)
    }

    /// The period series for one region and indicator, by index.
    pub fn series(&self, region: usize, indicator: usize) -> &[Option<f64>] {
        let n = self.periods.len();
        let start = (region * self.indicators.len() + indicator) * n;
        self.values.get(start..start + n).unwrap_or(&[])
    }

    pub fn value(&self, region: &RegionCode, ordinal: u32, indicator: &str) -> Option<f64> {
        let r = self.region_index(region)?;
        let i = self.indicator_index(indicator)?;
        self.series(r, i).get(ordinal as usize).copied().flatten()
    }

    /// Every grid cell as `(region, ordinal, indicator id, value)`.
    pub fn cells(&self) -> impl Iterator<Item = (&RegionCode, u32, &str, Option<f64>)> + '_ {
        let n_ind = self.indicators.len();
        let n_per = self.periods.len();
        self.values.iter().enumerate().filter_map(move |(idx, v)| {
            if n_ind == 0 || n_per == 0 {
                return None;
            }
            let p = idx % n_per;
            let i = (idx / n_per) % n_ind;
            let r = idx / (n_per * n_ind);
            let region = self.regions.get(r)?;
            Some((region, p as u32, self.indicators[i].id.as_str(), *v))
        })
    }

    /// All broken invariants; empty for a valid dataset.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();

        let mut seen = HashSet::new();
        for r in &self.regions {
            if !seen.insert(r) {
                out.push(Violation::DuplicateRegion { region: r.to_string() });
            }
        }

        let mut ids = HashSet::new();
        for ind in &self.indicators {
            if !Indicator::is_valid_id(&ind.id) {
                out.push(Violation::InvalidIndicatorId {
                    indicator: ind.id.clone(),
                });
            }
            if !ids.insert(ind.id.as_str()) {
                out.push(Violation::DuplicateIndicator {
                    indicator: ind.id.clone(),
                });
            }
        }

        if self.tracks.is_empty() {
            out.push(Violation::NoTracks);
        }
        let mut names = HashSet::new();
        for t in &self.tracks {
            if !names.insert(t.name.as_str()) {
                out.push(Violation::DuplicateTrack { track: t.name.clone() });
            }
            if !ids.contains(t.indicator.as_str()) {
                out.push(Violation::UndeclaredTrackSource {
                    track: t.name.clone(),
                    indicator: t.indicator.clone(),
                });
            }
        }

        let expected = self.cell_count();
        if self.values.len() != expected {
            out.push(Violation::ValueGridMismatch {
                expected,
                actual: self.values.len(),
            });
        } else {
            for (region, ordinal, indicator, v) in self.cells() {
                if v.is_some_and(|x| !x.is_finite()) {
                    out.push(Violation::NonFiniteValue {
                        region: region.to_string(),
                        period: self.periods.get(ordinal).map(|p| p.to_string()).unwrap_or_default(),
                        indicator: indicator.to_string(),
                    });
                }
            }
        }
        out
    }
}

/// Equality covers regions, periods, indicators, tracks and every cell.
/// Provenance is a free-text note and does not take part.
impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.regions == other.regions
            && self.periods == other.periods
            && self.indicators == other.indicators
            && self.tracks == other.tracks
            && self.values == other.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_region_code, Granularity};

    fn parts() -> DatasetParts {
        DatasetParts {
            regions: vec![parse_region_code("DE").unwrap(), parse_region_code("FR").unwrap()],
            periods: PeriodAxis::parse("2020-01", "2020-03", Granularity::Monthly).unwrap(),
            indicators: vec![Indicator::bare("cases"), Indicator::bare("deaths")],
            tracks: vec![Track {
                name: "cases".into(),
                indicator: "cases".into(),
            }],
            values: (0..12).map(|v| Some(v as f64)).collect(),
            provenance: "test".into(),
        }
    }

    #[test]
    fn layout_is_region_indicator_period() {
        let ds = Dataset::new(parts()).unwrap();
        let fr = parse_region_code("FR").unwrap();
        // FR = region 1, deaths = indicator 1, ordinal 2 -> (1*2+1)*3+2 = 11
        assert_eq!(ds.value(&fr, 2, "deaths"), Some(11.0));
        assert_eq!(ds.series(0, 1), &[Some(3.0), Some(4.0), Some(5.0)]);
        assert_eq!(ds.cells().count(), 12);
        assert_eq!(ds.present_count(), 12);
    }

    #[test]
    fn undeclared_track_source_is_one_violation() {
        let mut p = parts();
        p.tracks.push(Track {
            name: "fatalities".into(),
            indicator: "fatalities".into(),
        });
        let ds = Dataset::from_parts_unchecked(p.clone());
        assert_eq!(
            ds.violations(),
            [Violation::UndeclaredTrackSource {
                track: "fatalities".into(),
                indicator: "fatalities".into()
            }]
        );
        assert!(Dataset::new(p).is_err());
    }

    #[test]
    fn grid_and_id_violations() {
        let mut p = parts();
        p.values.pop();
        p.indicators[1].id = "Deaths!".into();
        p.tracks.clear();
        let v = Dataset::from_parts_unchecked(p).violations();
        assert!(v.contains(&Violation::NoTracks));
        assert!(v.contains(&Violation::ValueGridMismatch {
            expected: 12,
            actual: 11
        }));
        assert!(v.iter().any(|x| matches!(x, Violation::InvalidIndicatorId { .. })));
    }

    #[test]
    fn nan_rejected_and_missing_distinct_from_zero() {
        let mut p = parts();
        p.values[0] = Some(f64::NAN);
        assert!(Dataset::new(p).is_err());

        let mut p = parts();
        p.values[0] = None;
        p.values[1] = Some(0.0);
        let ds = Dataset::new(p).unwrap();
        let de = parse_region_code("DE").unwrap();
        assert_eq!(ds.value(&de, 0, "cases"), None);
        assert_eq!(ds.value(&de, 1, "cases"), Some(0.0));
    }

    #[test]
    fn equality_ignores_provenance() {
        let a = Dataset::new(parts()).unwrap();
        let mut p = parts();
        p.provenance = "elsewhere".into();
        assert_eq!(a, Dataset::new(p).unwrap());
        let mut p = parts();
        p.values[5] = Some(99.0);
        assert_ne!(a, Dataset::new(p).unwrap());
    }
}
