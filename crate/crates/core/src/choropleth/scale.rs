use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ChoroplethError;
use crate::chunk::GlobalSummary;

/// A `#rrggbb` color.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl FromStr for Rgb {
    type Err = ChoroplethError;

    fn from_str(s: &str) -> Result<Rgb, ChoroplethError> {
        let bad = || ChoroplethError::InvalidScale(format!("invalid color {s:?}, expected #RRGGBB"));
        let hex = s.strip_prefix('#').filter(|h| h.len() == 6).ok_or_else(bad)?;
        let mut out = [0u8; 3];
        hex::decode_to_slice(hex, &mut out).map_err(|_| bad())?;
        Ok(Rgb(out[0], out[1], out[2]))
    }
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }
}

impl Serialize for Rgb {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rgb {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Seven-step single-hue ramp, light to dark.
pub const DEFAULT_RAMP: [Rgb; 7] = [
    Rgb(0xfe, 0xe5, 0xd9),
    Rgb(0xfc, 0xbb, 0xa1),
    Rgb(0xfc, 0x92, 0x72),
    Rgb(0xfb, 0x6a, 0x4a),
    Rgb(0xef, 0x3b, 0x2c),
    Rgb(0xcb, 0x18, 0x1d),
    Rgb(0x99, 0x00, 0x0d),
];

pub const MISSING_COLOR: Rgb = Rgb(0xcc, 0xcc, 0xcc);

pub const DEFAULT_BINS: usize = 7;

/// `n` colors spread evenly over [`DEFAULT_RAMP`], interpolating in RGB.
/// Returns the ramp itself for `n == 7`.
pub fn default_ramp(n: usize) -> Vec<Rgb> {
    if n <= 1 {
        return DEFAULT_RAMP[..n].to_vec();
    }
    let last = (DEFAULT_RAMP.len() - 1) as f64;
    (0..n)
        .map(|j| {
            let t = j as f64 * last / (n - 1) as f64;
            let lo = t.floor() as usize;
            let hi = (lo + 1).min(DEFAULT_RAMP.len() - 1);
            let f = t - lo as f64;
            let (a, b) = (DEFAULT_RAMP[lo], DEFAULT_RAMP[hi]);
            let mix = |x: u8, y: u8| (x as f64 + (y as f64 - x as f64) * f).round() as u8;
            Rgb(mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleKind {
    Linear,
    Quantile,
}

#[derive(Debug, Clone, PartialEq)]
enum Domain {
    Linear {
        min: f64,
        max: f64,
    },
    /// `thresholds[k-1]` is the lower bound of bin `k`.
    Quantile {
        sample: Vec<f64>,
        thresholds: Vec<f64>,
    },
}

/// Maps a value to one of `B` ramp colors.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorScale {
    domain: Domain,
    ramp: Vec<Rgb>,
    missing: Rgb,
}

fn check_ramp(ramp: &[Rgb]) -> Result<(), ChoroplethError> {
    if ramp.len() < 2 {
        return Err(ChoroplethError::InvalidScale(format!(
            "a scale needs at least 2 bins, got {}",
            ramp.len()
        )));
    }
    Ok(())
}

impl ColorScale {
    /// Equal-width bins over `[min, max]`: bin `k` starts at edge
    /// `min + (max - min) * k / B`. Values outside the domain clamp to the
    /// end bins. `min == max` is accepted but every
    /// [`bin_index`](Self::bin_index) call then fails.
    pub fn linear(min: f64, max: f64, ramp: Vec<Rgb>, missing: Rgb) -> Result<ColorScale, ChoroplethError> {
        check_ramp(&ramp)?;
        if !min.is_finite() || !max.is_finite() || min > max || !(max - min).is_finite() {
            return Err(ChoroplethError::InvalidScale(format!(
                "invalid linear domain [{min}, {max}]"
            )));
        }
        Ok(ColorScale {
            domain: Domain::Linear { min, max },
            ramp,
            missing,
        })
    }

    /// Bins holding equal shares of `sample`. Intervals are left-closed.
    pub fn quantile(mut sample: Vec<f64>, ramp: Vec<Rgb>, missing: Rgb) -> Result<ColorScale, ChoroplethError> {
        check_ramp(&ramp)?;
        if sample.is_empty() {
            return Err(ChoroplethError::InvalidScale(
                "quantile scale needs a non-empty sample".into(),
            ));
        }
        if sample.iter().any(|v| !v.is_finite()) {
            return Err(ChoroplethError::NonFiniteValue);
        }
        sample.sort_by(f64::total_cmp);
        let (n, b) = (sample.len(), ramp.len());
        let thresholds = (1..b).map(|k| sample[k * n / b]).collect();
        Ok(ColorScale {
            domain: Domain::Quantile { sample, thresholds },
            ramp,
            missing,
        })
    }

    pub fn kind(&self) -> ScaleKind {
        match self.domain {
            Domain::Linear { .. } => ScaleKind::Linear,
            Domain::Quantile { .. } => ScaleKind::Quantile,
        }
    }

    pub fn bins(&self) -> usize {
        self.ramp.len()
    }

    pub fn ramp(&self) -> &[Rgb] {
        &self.ramp
    }

    pub fn missing(&self) -> Rgb {
        self.missing
    }

    /// `(min, max)` of a linear scale.
    pub fn linear_domain(&self) -> Option<(f64, f64)> {
        match self.domain {
            Domain::Linear { min, max } => Some((min, max)),
            Domain::Quantile { .. } => None,
        }
    }

    /// Sorted sample of a quantile scale.
    pub fn sample(&self) -> Option<&[f64]> {
        match &self.domain {
            Domain::Quantile { sample, .. } => Some(sample),
            Domain::Linear { .. } => None,
        }
    }

    /// Lower bounds of bins `1..B` of a quantile scale.
    pub fn thresholds(&self) -> Option<&[f64]> {
        match &self.domain {
            Domain::Quantile { thresholds, .. } => Some(thresholds),
            Domain::Linear { .. } => None,
        }
    }

    /// Bin in `0..B` for a present value.
    pub fn bin_index(&self, value: f64) -> Result<usize, ChoroplethError> {
        if !value.is_finite() {
            return Err(ChoroplethError::NonFiniteValue);
        }
        let b = self.ramp.len();
        match &self.domain {
            Domain::Linear { min, max } => {
                if min == max {
                    return Err(ChoroplethError::DegenerateScale);
                }
                // Edges are monotone in k, so nudging the estimate settles on
                // the number of edges at or below `value`.
                let edge = |k: usize| min + (max - min) * k as f64 / b as f64;
                let raw = ((value - min) / (max - min) * b as f64).floor();
                let mut i = raw.clamp(0.0, (b - 1) as f64) as usize;
                while i > 0 && value < edge(i) {
                    i -= 1;
                }
                while i + 1 < b && value >= edge(i + 1) {
                    i += 1;
                }
                Ok(i)
            }
            Domain::Quantile { thresholds, .. } => Ok(thresholds.partition_point(|t| *t <= value)),
        }
    }

    /// Ramp color for a present value, missing color for MISSING.
    pub fn color(&self, value: Option<f64>) -> Result<Rgb, ChoroplethError> {
        match value {
            None => Ok(self.missing),
            Some(v) => Ok(self.ramp[self.bin_index(v)?]),
        }
    }
}

/// A named scale recipe; the domain is derived from a track's values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleSpec {
    pub kind: ScaleKind,
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Defaults to [`default_ramp`] with `bins` colors.
    #[serde(default)]
    pub ramp: Option<Vec<Rgb>>,
    #[serde(default)]
    pub missing: Option<Rgb>,
}

fn default_bins() -> usize {
    DEFAULT_BINS
}

pub const DEFAULT_SCALE: &str = "linear";

/// `linear` (the default) and `quantile`, both with the default ramp.
pub fn default_scales() -> BTreeMap<String, ScaleSpec> {
    [ScaleKind::Linear, ScaleKind::Quantile]
        .into_iter()
        .map(|kind| {
            let name = match kind {
                ScaleKind::Linear => "linear",
                ScaleKind::Quantile => "quantile",
            };
            (
                name.to_string(),
                ScaleSpec {
                    kind,
                    bins: DEFAULT_BINS,
                    ramp: None,
                    missing: None,
                },
            )
        })
        .collect()
}

impl ScaleSpec {
    /// Builds the scale for `track` from its values over every region and
    /// period. A linear domain with no values is `[0, 1]`; a constant one
    /// `[v, v + 1]`. A quantile scale with no values samples `{0}`.
    pub fn resolve(&self, summary: &GlobalSummary, track: &str) -> Result<ColorScale, ChoroplethError> {
        let t = summary
            .track(track)
            .ok_or_else(|| ChoroplethError::UnknownTrack(track.to_string()))?;
        let ramp = match &self.ramp {
            Some(r) if r.len() != self.bins => {
                return Err(ChoroplethError::InvalidScale(format!(
                    "ramp has {} colors for {} bins",
                    r.len(),
                    self.bins
                )))
            }
            Some(r) => r.clone(),
            None => default_ramp(self.bins),
        };
        let missing = self.missing.unwrap_or(MISSING_COLOR);
        let present = t.values.iter().flatten().copied();
        match self.kind {
            ScaleKind::Linear => {
                let (min, max) = present.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                let (min, max) = if min > max {
                    (0.0, 1.0)
                } else if min == max {
                    (min, min + 1.0)
                } else {
                    (min, max)
                };
                ColorScale::linear(min, max, ramp, missing)
            }
            ScaleKind::Quantile => {
                let mut sample: Vec<f64> = present.collect();
                if sample.is_empty() {
                    sample.push(0.0);
                }
                ColorScale::quantile(sample, ramp, missing)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn linear(min: f64, max: f64, bins: usize) -> ColorScale {
        ColorScale::linear(min, max, default_ramp(bins), MISSING_COLOR).unwrap()
    }

    #[test]
    fn linear_examples() {
        let s = linear(0.0, 10.0, 5);
        assert_eq!(s.bin_index(0.0).unwrap(), 0);
        assert_eq!(s.bin_index(10.0).unwrap(), 4);
        assert_eq!(s.bin_index(5.0).unwrap(), 2);
        assert_eq!(s.bin_index(-3.0).unwrap(), 0);
        assert_eq!(s.bin_index(99.0).unwrap(), 4);
        assert_eq!(
            linear(3.0, 3.0, 5).bin_index(3.0),
            Err(ChoroplethError::DegenerateScale)
        );
    }

    #[test]
    fn constructor_checks() {
        assert!(ColorScale::linear(0.0, 1.0, vec![MISSING_COLOR], MISSING_COLOR).is_err());
        assert!(ColorScale::linear(2.0, 1.0, default_ramp(3), MISSING_COLOR).is_err());
        assert!(ColorScale::linear(0.0, f64::NAN, default_ramp(3), MISSING_COLOR).is_err());
        assert!(ColorScale::linear(-f64::MAX, f64::MAX, default_ramp(3), MISSING_COLOR).is_err());
        assert!(ColorScale::quantile(vec![], default_ramp(3), MISSING_COLOR).is_err());
    }

    #[test]
    fn colors_parse_and_print() {
        let c: Rgb = "#FfA000".parse().unwrap();
        assert_eq!(c, Rgb(0xff, 0xa0, 0));
        assert_eq!(c.to_string(), "#ffa000");
        for bad in ["ffa000", "#ffa00", "#ggg000", "#ffa0000"] {
            assert!(bad.parse::<Rgb>().is_err(), "{bad}");
        }
    }

    #[test]
    fn default_ramp_endpoints() {
        assert_eq!(default_ramp(7), DEFAULT_RAMP.to_vec());
        let r = default_ramp(3);
        assert_eq!((r[0], r[1], r[2]), (DEFAULT_RAMP[0], DEFAULT_RAMP[3], DEFAULT_RAMP[6]));
        assert_eq!(default_ramp(12).len(), 12);
    }

    #[test]
    fn quantile_ten_regions_four_bins() {
        let values: Vec<f64> = [7.0, 1.0, 9.5, 3.0, 2.0, 8.0, 4.0, 6.0, 5.0, 0.5].to_vec();
        let s = ColorScale::quantile(values.clone(), default_ramp(4), MISSING_COLOR).unwrap();
        let mut counts = [0usize; 4];
        for v in &values {
            counts[s.bin_index(*v).unwrap()] += 1;
        }
        // Oracle: sort, then cut at ranks floor(k*n/B).
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        let cuts = [0, 2, 5, 7, 10];
        for k in 0..4 {
            for v in &sorted[cuts[k]..cuts[k + 1]] {
                assert_eq!(s.bin_index(*v).unwrap(), k, "{v}");
            }
        }
        assert_eq!(counts, [2, 3, 2, 3]);
        assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
    }

    #[test]
    fn quantile_is_left_closed() {
        let s = ColorScale::quantile(vec![1.0, 2.0, 3.0, 4.0], default_ramp(2), MISSING_COLOR).unwrap();
        assert_eq!(s.thresholds().unwrap(), &[3.0]);
        assert_eq!(s.bin_index(2.999).unwrap(), 0);
        assert_eq!(s.bin_index(3.0).unwrap(), 1);
        assert_eq!(s.bin_index(-100.0).unwrap(), 0);
        assert_eq!(s.bin_index(100.0).unwrap(), 1);
    }

    #[test]
    fn scale_spec_defaults_from_json() {
        let spec: ScaleSpec = serde_json::from_str(r#"{"kind":"quantile"}"#).unwrap();
        assert_eq!(spec, default_scales()["quantile"]);
        assert!(serde_json::from_str::<ScaleSpec>(r##"{"kind":"linear","ramp":["#zz0000"]}"##).is_err());
    }

    proptest! {
        #[test]
        fn linear_is_monotone(
            lo in -1e6f64..1e6,
            width in 1e-3f64..1e6,
            bins in 2usize..12,
            a in -2e6f64..2e6,
            b in -2e6f64..2e6,
        ) {
            let s = linear(lo, lo + width, bins);
            let (v1, v2) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(s.bin_index(v1).unwrap() <= s.bin_index(v2).unwrap());
        }

        #[test]
        fn linear_bins_survive_affine_maps(
            lo in -10_000i64..10_000,
            width in 1i64..10_000,
            bins in 2usize..12,
            values in proptest::collection::vec(-30_000i64..30_000, 1..40),
            scale in 1i64..1_000,
            shift in -1_000_000i64..1_000_000,
        ) {
            // Integer inputs keep every operation exact.
            let f = |v: i64| (v * scale + shift) as f64;
            let s = linear(lo as f64, (lo + width) as f64, bins);
            let t = linear(f(lo), f(lo + width), bins);
            for v in values {
                prop_assert_eq!(s.bin_index(v as f64).unwrap(), t.bin_index(f(v)).unwrap());
            }
        }

        #[test]
        fn linear_edges_open_their_bin(
            lo in -1e9f64..1e9,
            width in 1e-6f64..1e9,
            bins in 2usize..16,
        ) {
            let s = linear(lo, lo + width, bins);
            let (min, max) = s.linear_domain().unwrap();
            let edge = |k: usize| min + (max - min) * k as f64 / bins as f64;
            for k in 1..bins {
                let e = edge(k);
                let at = (1..bins).filter(|&j| e >= edge(j)).count();
                prop_assert_eq!(s.bin_index(e).unwrap(), at);
                let below = e.next_down();
                let under = (1..bins).filter(|&j| below >= edge(j)).count();
                prop_assert_eq!(s.bin_index(below).unwrap(), under);
            }
        }

        #[test]
        fn quantile_bins_are_balanced(
            values in proptest::collection::btree_set(-1_000_000i64..1_000_000, 1..300),
            bins in 2usize..16,
        ) {
            let values: Vec<f64> = values.into_iter().map(|v| v as f64 / 7.0).collect();
            let s = ColorScale::quantile(values.clone(), default_ramp(bins), MISSING_COLOR).unwrap();
            let mut counts = vec![0usize; bins];
            for v in &values {
                counts[s.bin_index(*v).unwrap()] += 1;
            }
            let (min, max) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
            prop_assert!(max - min <= 1, "{counts:?}");
        }
    }
}
