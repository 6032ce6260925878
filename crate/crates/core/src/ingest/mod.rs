//! Connectors that turn CSV, row JSON, columnar JSON and HTML tables into a
//! validated [`Dataset`].
//!
//! Every connector walks its source as a sequence of logical rows and hands
//! them to a shared assembler, so all formats share resolution, duplicate
//! detection and densification. Rows are numbered as in a spreadsheet view
//! of the table: the header is row 1 and the first record is row 2. JSON
//! records use the same numbering.

mod csv;
mod html;
mod json;
mod report;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{
    CalendarPeriod, Dataset, DatasetParts, Granularity, Indicator, ModelError, PeriodAxis, RegionCode, RegionRegistry,
    Track,
};

pub use report::{validate, IndicatorCoverage, PeriodCoverage, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    JsonRows,
    JsonColumnar,
    HtmlTable,
}

impl Format {
    pub fn as_str(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::JsonRows => "json-rows",
            Format::JsonColumnar => "json-columnar",
            Format::HtmlTable => "html-table",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json-rows" => Ok(Format::JsonRows),
            "json-columnar" => Ok(Format::JsonColumnar),
            "html-table" => Ok(Format::HtmlTable),
            other => Err(format!(
                "unknown format {other:?} (expected csv, json-rows, json-columnar or html-table)"
            )),
        }
    }
}

/// Names of the four source columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub region: String,
    pub period: String,
    pub indicator: String,
    pub value: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            region: "region".into(),
            period: "period".into(),
            indicator: "indicator".into(),
            value: "value".into(),
        }
    }
}

impl ColumnMap {
    fn names(&self) -> [&str; 4] {
        [&self.region, &self.period, &self.indicator, &self.value]
    }
}

/// How to read one source. Deserialises from the CLI's `spec.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSpec {
    pub format: Format,
    #[serde(default)]
    pub columns: ColumnMap,
    pub granularity: Granularity,
    pub tracks: Vec<Track>,
    /// Cell text treated as MISSING.
    #[serde(default)]
    pub missing_token: String,
    /// Skip rows whose region, period, indicator or value cannot be parsed
    /// instead of aborting. Duplicates still abort.
    #[serde(default)]
    pub skip_bad_rows: bool,
    /// Optional display labels; indicators not listed are labelled by id.
    #[serde(default)]
    pub indicators: Vec<Indicator>,
    #[serde(default)]
    pub provenance: Option<String>,
}

impl IngestSpec {
    /// A spec with default column names and a single track.
    pub fn new(format: Format, granularity: Granularity, tracks: Vec<Track>) -> IngestSpec {
        IngestSpec {
            format,
            columns: ColumnMap::default(),
            granularity,
            tracks,
            missing_token: String::new(),
            skip_bad_rows: false,
            indicators: Vec::new(),
            provenance: None,
        }
    }

    pub fn check(&self) -> Result<(), IngestError> {
        let names = self.columns.names();
        for (i, a) in names.iter().enumerate() {
            if a.is_empty() {
                return Err(IngestError::InvalidSpec("column names must be non-empty".into()));
            }
            if names[i + 1..].contains(a) {
                return Err(IngestError::InvalidSpec(format!("column {a:?} is mapped twice")));
            }
        }
        if self.tracks.is_empty() {
            return Err(IngestError::InvalidSpec("at least one track is required".into()));
        }
        for (i, t) in self.tracks.iter().enumerate() {
            if self.tracks[..i].iter().any(|o| o.name == t.name) {
                return Err(IngestError::InvalidSpec(format!("track {:?} declared twice", t.name)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("invalid ingest spec: {0}")]
    InvalidSpec(String),
    #[error("source is not valid UTF-8 at byte {0}")]
    Decode(usize),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("malformed source: {0}")]
    Syntax(String),
    #[error("no <table> element found")]
    NoTableFound,
    #[error("source contains no records")]
    Empty,
    #[error("row {row}: duplicate cell ({region}, {period}, {indicator})")]
    DuplicateCell {
        row: usize,
        region: String,
        period: String,
        indicator: String,
    },
    #[error("row {row}: region {text:?}: {source}")]
    Region {
        row: usize,
        text: String,
        source: ModelError,
    },
    #[error("row {row}: period {text:?}: {source}")]
    Period {
        row: usize,
        text: String,
        source: ModelError,
    },
    #[error("row {row}: indicator id {text:?} does not match [a-z0-9_]{{1,64}}")]
    Indicator { row: usize, text: String },
    #[error("row {row}: value {text:?} is not a number")]
    Value { row: usize, text: String },
    #[error("track {track:?} references indicator {indicator:?}, which does not occur in the source")]
    TrackSource { track: String, indicator: String },
    #[error(transparent)]
    Dataset(#[from] ModelError),
}

impl IngestError {
    /// The source row an error refers to, if any.
    pub fn row(&self) -> Option<usize> {
        match self {
            IngestError::DuplicateCell { row, .. }
            | IngestError::Region { row, .. }
            | IngestError::Period { row, .. }
            | IngestError::Indicator { row, .. }
            | IngestError::Value { row, .. } => Some(*row),
            _ => None,
        }
    }

    fn skippable(&self) -> bool {
        matches!(
            self,
            IngestError::Region { .. }
                | IngestError::Period { .. }
                | IngestError::Indicator { .. }
                | IngestError::Value { .. }
        )
    }
}

/// A row left out because `skip_bad_rows` was set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedRow {
    pub row: usize,
    pub reason: String,
}

/// A dataset plus the rows skipped while building it.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub dataset: Dataset,
    pub skipped: Vec<SkippedRow>,
}

/// A raw cell value as it appears in the source.
#[derive(Debug, Clone, Copy)]
pub(crate) enum RawValue<'a> {
    Text(&'a str),
    Number(f64),
    Null,
}

/// Loads `source` according to `spec`.
pub fn ingest(source: &[u8], spec: &IngestSpec) -> Result<Dataset, IngestError> {
    ingest_with_report(source, spec).map(|i| i.dataset)
}

/// Like [`ingest`], also returning the rows skipped under `skip_bad_rows`.
pub fn ingest_with_report(source: &[u8], spec: &IngestSpec) -> Result<Ingested, IngestError> {
    spec.check()?;
    let text = decode(source)?;
    let mut asm = Assembler::new(spec, RegionRegistry::bundled());
    match spec.format {
        Format::Csv => csv::read(text, spec, &mut asm)?,
        Format::JsonRows => json::read_rows(text, spec, &mut asm)?,
        Format::JsonColumnar => json::read_columnar(text, spec, &mut asm)?,
        Format::HtmlTable => html::read(text, spec, &mut asm)?,
    }
    asm.finish()
}

/// Parses the first `<table>` of an HTML document, whatever `spec.format` says.
pub fn ingest_html_table(document: &[u8], spec: &IngestSpec) -> Result<Dataset, IngestError> {
    let spec = IngestSpec {
        format: Format::HtmlTable,
        ..spec.clone()
    };
    ingest(document, &spec)
}

fn decode(source: &[u8]) -> Result<&str, IngestError> {
    let text = std::str::from_utf8(source).map_err(|e| IngestError::Decode(e.valid_up_to()))?;
    Ok(text.strip_prefix('\u{feff}').unwrap_or(text))
}

/// Parses a decimal number. Accepts integers, decimals and scientific
/// notation; rejects thousands separators, `inf`, `nan` and overflow.
pub fn parse_number(text: &str) -> Option<f64> {
    let s = text.trim();
    let b = s.as_bytes();
    let mut i = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        i += 1;
    }
    let int_start = i;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    let mut mantissa_digits = i - int_start;
    if i < b.len() && b[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        mantissa_digits += i - frac_start;
    }
    if mantissa_digits == 0 {
        return None;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        i += 1;
        if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
            i += 1;
        }
        let exp_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == exp_start {
            return None;
        }
    }
    if i != b.len() {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

struct Cell {
    region: u32,
    period: i64,
    indicator: u32,
    value: Option<f64>,
    row: usize,
}

/// Collects rows, resolving regions, periods and indicators once per
/// distinct spelling.
pub(crate) struct Assembler<'a> {
    spec: &'a IngestSpec,
    registry: &'a RegionRegistry,
    region_text: HashMap<String, u32>,
    region_slots: HashMap<RegionCode, u32>,
    regions: Vec<RegionCode>,
    period_text: HashMap<String, i64>,
    indicator_slots: HashMap<String, u32>,
    indicators: Vec<String>,
    cells: Vec<Cell>,
    skipped: Vec<SkippedRow>,
}

impl<'a> Assembler<'a> {
    fn new(spec: &'a IngestSpec, registry: &'a RegionRegistry) -> Self {
        Assembler {
            spec,
            registry,
            region_text: HashMap::new(),
            region_slots: HashMap::new(),
            regions: Vec::new(),
            period_text: HashMap::new(),
            indicator_slots: HashMap::new(),
            indicators: Vec::new(),
            cells: Vec::new(),
            skipped: Vec::new(),
        }
    }

    pub(crate) fn push(
        &mut self,
        row: usize,
        region: &str,
        period: &str,
        indicator: &str,
        value: RawValue<'_>,
    ) -> Result<(), IngestError> {
        match self.parse_row(row, region, period, indicator, value) {
            Ok(cell) => {
                self.cells.push(cell);
                Ok(())
            }
            Err(e) if self.spec.skip_bad_rows && e.skippable() => {
                self.skipped.push(SkippedRow {
                    row,
                    reason: e.to_string(),
                });
                Ok(())
            }
            Err(e) => Err(e),
        }
    }

    fn parse_row(
        &mut self,
        row: usize,
        region: &str,
        period: &str,
        indicator: &str,
        value: RawValue<'_>,
    ) -> Result<Cell, IngestError> {
        let region = region.trim();
        let region_slot = match self.region_text.get(region) {
            Some(&slot) => slot,
            None => {
                let code = self.registry.resolve(region).map_err(|source| IngestError::Region {
                    row,
                    text: region.to_string(),
                    source,
                })?;
                let next = self.regions.len() as u32;
                let slot = *self.region_slots.entry(code.clone()).or_insert(next);
                if slot == next {
                    self.regions.push(code);
                }
                self.region_text.insert(region.to_string(), slot);
                slot
            }
        };

        let period = period.trim();
        let period_index = match self.period_text.get(period) {
            Some(&p) => p,
            None => {
                let cal =
                    CalendarPeriod::parse(period, self.spec.granularity).map_err(|source| IngestError::Period {
                        row,
                        text: period.to_string(),
                        source,
                    })?;
                let p = cal.index();
                self.period_text.insert(period.to_string(), p);
                p
            }
        };

        let indicator = indicator.trim();
        let indicator_slot = match self.indicator_slots.get(indicator) {
            Some(&slot) => slot,
            None => {
                if !Indicator::is_valid_id(indicator) {
                    return Err(IngestError::Indicator {
                        row,
                        text: indicator.to_string(),
                    });
                }
                let slot = self.indicators.len() as u32;
                self.indicators.push(indicator.to_string());
                self.indicator_slots.insert(indicator.to_string(), slot);
                slot
            }
        };

        let value = match value {
            RawValue::Null => None,
            RawValue::Number(v) if v.is_finite() => Some(v),
            RawValue::Number(v) => {
                return Err(IngestError::Value {
                    row,
                    text: v.to_string(),
                })
            }
            RawValue::Text(t) if t.trim() == self.spec.missing_token.trim() => None,
            RawValue::Text(t) => Some(parse_number(t).ok_or_else(|| IngestError::Value {
                row,
                text: t.to_string(),
            })?),
        };

        Ok(Cell {
            region: region_slot,
            period: period_index,
            indicator: indicator_slot,
            value,
            row,
        })
    }

    fn finish(self) -> Result<Ingested, IngestError> {
        let Assembler {
            spec,
            regions,
            indicators,
            cells,
            skipped,
            ..
        } = self;
        if cells.is_empty() {
            return Err(IngestError::Empty);
        }

        for t in &spec.tracks {
            if !indicators.contains(&t.indicator) {
                return Err(IngestError::TrackSource {
                    track: t.name.clone(),
                    indicator: t.indicator.clone(),
                });
            }
        }

        // Regions in canonical order; indicators in first-seen order.
        let mut order: Vec<u32> = (0..regions.len() as u32).collect();
        order.sort_by(|&a, &b| regions[a as usize].cmp(&regions[b as usize]));
        let mut rank = vec![0usize; regions.len()];
        for (pos, &slot) in order.iter().enumerate() {
            rank[slot as usize] = pos;
        }
        let sorted_regions: Vec<RegionCode> = order.iter().map(|&s| regions[s as usize].clone()).collect();

        let min = cells.iter().map(|c| c.period).min().unwrap_or(0);
        let max = cells.iter().map(|c| c.period).max().unwrap_or(0);
        let first = CalendarPeriod::from_index(spec.granularity, min);
        let last = CalendarPeriod::from_index(spec.granularity, max);
        let periods = PeriodAxis::new(first, last)?;

        let n_ind = indicators.len();
        let n_per = periods.len();
        let mut values = vec![None; sorted_regions.len() * n_ind * n_per];
        let mut seen = vec![false; values.len()];
        for c in &cells {
            let r = rank[c.region as usize];
            let p = (c.period - min) as usize;
            let idx = (r * n_ind + c.indicator as usize) * n_per + p;
            if std::mem::replace(&mut seen[idx], true) {
                return Err(IngestError::DuplicateCell {
                    row: c.row,
                    region: sorted_regions[r].to_string(),
                    period: first.offset(c.period - min).to_string(),
                    indicator: indicators[c.indicator as usize].clone(),
                });
            }
            values[idx] = c.value;
        }

        let labelled: Vec<Indicator> = indicators
            .into_iter()
            .map(|id| {
                spec.indicators
                    .iter()
                    .find(|i| i.id == id)
                    .cloned()
                    .unwrap_or_else(|| Indicator::bare(id))
            })
            .collect();

        let dataset = Dataset::new(DatasetParts {
            regions: sorted_regions,
            periods,
            indicators: labelled,
            tracks: spec.tracks.clone(),
            values,
            provenance: spec
                .provenance
                .clone()
                .unwrap_or_else(|| format!("ingested from {}", spec.format)),
        })?;
        Ok(Ingested { dataset, skipped })
    }
}
