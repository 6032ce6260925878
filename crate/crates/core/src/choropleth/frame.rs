use std::collections::BTreeMap;

use super::scale::{ColorScale, Rgb};
use super::svg::render_svg;
use super::ChoroplethError;
use crate::chunk::{GlobalSummary, Writer};
use crate::model::{Period, RegionCode};

/// One period's region colors, and optionally the rendered map.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoroplethFrame {
    pub period: Period,
    pub track: String,
    /// Covers every region of the summary.
    pub assignment: BTreeMap<RegionCode, Rgb>,
    pub svg: Option<Vec<u8>>,
}

impl ChoroplethFrame {
    /// Renders onto `map`, stores the result in `svg` and returns the
    /// regions absent from the map.
    pub fn render(&mut self, map: &[u8]) -> Result<Vec<RegionCode>, ChoroplethError> {
        let rendered = render_svg(self, map)?;
        self.svg = Some(rendered.svg);
        Ok(rendered.unmatched)
    }

    /// Canonical JSON object `{region: "#rrggbb"}`.
    pub fn assignment_json(&self) -> Vec<u8> {
        let mut w = Writer::with_capacity(16 + self.assignment.len() * 20);
        w.raw("{");
        let mut entries: Vec<(String, Rgb)> = self.assignment.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        for (i, (region, color)) in entries.iter().enumerate() {
            if i > 0 {
                w.raw(",");
            }
            w.key(region).string(&color.to_string());
        }
        w.raw("}");
        w.into_bytes()
    }
}

/// Colors every region of `summary` for period `ordinal` of `track`.
pub fn color_frame(
    summary: &GlobalSummary,
    ordinal: u32,
    track: &str,
    scale: &ColorScale,
) -> Result<ChoroplethFrame, ChoroplethError> {
    let t = summary
        .track(track)
        .ok_or_else(|| ChoroplethError::UnknownTrack(track.to_string()))?;
    let period = summary
        .periods()
        .get(ordinal)
        .ok_or(ChoroplethError::PeriodOutOfRange {
            ordinal,
            len: summary.periods().len(),
        })?;
    let assignment = summary
        .regions()
        .iter()
        .enumerate()
        .map(|(r, code)| Ok((code.clone(), scale.color(summary.row(t, r)[ordinal as usize])?)))
        .collect::<Result<_, ChoroplethError>>()?;
    Ok(ChoroplethFrame {
        period,
        track: track.to_string(),
        assignment,
        svg: None,
    })
}
