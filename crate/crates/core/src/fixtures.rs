//! Deterministic synthetic datasets, writers for every ingest format, and a
//! grid-shaped SVG map with one element per region.

use std::fmt::Write as _;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ingest::{ColumnMap, Format, IngestSpec};
use crate::model::{Dataset, DatasetParts, Granularity, Indicator, PeriodAxis, RegionCode, RegionRegistry, Track};

pub const CONFLICT_REGIONS: usize = 141;
pub const CONFLICT_FIRST: &str = "2000-01";
pub const CONFLICT_LAST: &str = "2019-12";

#[derive(Clone, Copy)]
enum Kind {
    /// Non-negative integer with a heavy tail around `scale`.
    Count(f64),
    /// Unrounded model output.
    Expected,
    /// 0..100 with one decimal.
    Percent,
    /// 0..1 with three decimals.
    Index,
    /// Positive integer around `scale`.
    Amount(f64),
    /// Signed, two decimals.
    Rate,
}

const CONFLICT_INDICATORS: [(&str, &str, &str, Kind); 60] = [
    (
        "fatalities_predicted",
        "Predicted fatalities",
        "persons",
        Kind::Expected,
    ),
    (
        "fatalities_observed",
        "Observed fatalities",
        "persons",
        Kind::Count(40.0),
    ),
    ("battle_events", "Battle events", "events", Kind::Count(6.0)),
    (
        "violence_against_civilians",
        "Violence against civilians",
        "events",
        Kind::Count(4.0),
    ),
    (
        "explosions_remote_violence",
        "Explosions and remote violence",
        "events",
        Kind::Count(3.0),
    ),
    ("protests", "Protests", "events", Kind::Count(12.0)),
    ("riots", "Riots", "events", Kind::Count(5.0)),
    (
        "strategic_developments",
        "Strategic developments",
        "events",
        Kind::Count(2.0),
    ),
    (
        "state_based_deaths",
        "State-based conflict deaths",
        "persons",
        Kind::Count(20.0),
    ),
    (
        "non_state_deaths",
        "Non-state conflict deaths",
        "persons",
        Kind::Count(8.0),
    ),
    (
        "one_sided_deaths",
        "One-sided violence deaths",
        "persons",
        Kind::Count(6.0),
    ),
    ("refugees_outflow", "Refugee outflow", "persons", Kind::Amount(12_000.0)),
    (
        "idps",
        "Internally displaced persons",
        "persons",
        Kind::Amount(60_000.0),
    ),
    ("population", "Population", "thousands", Kind::Amount(25_000.0)),
    ("population_growth", "Population growth", "%", Kind::Rate),
    ("urban_population", "Urban population", "%", Kind::Percent),
    ("youth_bulge", "Population aged 15-24", "%", Kind::Percent),
    ("gdp", "GDP", "million USD", Kind::Amount(90_000.0)),
    ("gdp_per_capita", "GDP per capita", "USD", Kind::Amount(9_000.0)),
    ("gdp_growth", "GDP growth", "%", Kind::Rate),
    ("inflation", "Inflation", "%", Kind::Rate),
    ("unemployment", "Unemployment", "%", Kind::Percent),
    ("youth_unemployment", "Youth unemployment", "%", Kind::Percent),
    ("poverty_headcount", "Poverty headcount", "%", Kind::Percent),
    ("gini", "Gini index", "index", Kind::Index),
    ("food_price_index", "Food price index", "index", Kind::Amount(110.0)),
    ("fuel_price", "Fuel price", "USD/l", Kind::Rate),
    ("exports", "Exports", "million USD", Kind::Amount(20_000.0)),
    ("imports", "Imports", "million USD", Kind::Amount(22_000.0)),
    ("fdi_inflow", "FDI inflow", "% of GDP", Kind::Rate),
    (
        "oda_received",
        "Official development aid",
        "million USD",
        Kind::Amount(800.0),
    ),
    ("remittances", "Remittances", "% of GDP", Kind::Percent),
    ("debt_to_gdp", "Government debt", "% of GDP", Kind::Percent),
    ("military_expenditure", "Military expenditure", "% of GDP", Kind::Rate),
    (
        "armed_forces",
        "Armed forces personnel",
        "persons",
        Kind::Amount(90_000.0),
    ),
    ("arms_imports", "Arms imports", "TIV million", Kind::Amount(150.0)),
    ("democracy_index", "Electoral democracy index", "index", Kind::Index),
    ("rule_of_law", "Rule of law", "index", Kind::Index),
    ("corruption_control", "Control of corruption", "index", Kind::Index),
    (
        "government_effectiveness",
        "Government effectiveness",
        "index",
        Kind::Index,
    ),
    ("political_stability", "Political stability", "index", Kind::Index),
    ("voice_accountability", "Voice and accountability", "index", Kind::Index),
    ("press_freedom", "Press freedom", "index", Kind::Index),
    ("civil_liberties", "Civil liberties", "index", Kind::Index),
    (
        "ethnic_fractionalization",
        "Ethnic fractionalization",
        "index",
        Kind::Index,
    ),
    (
        "excluded_population",
        "Politically excluded population",
        "%",
        Kind::Percent,
    ),
    ("life_expectancy", "Life expectancy", "years", Kind::Amount(68.0)),
    ("infant_mortality", "Infant mortality", "per 1000", Kind::Rate),
    ("child_stunting", "Child stunting", "%", Kind::Percent),
    ("undernourishment", "Undernourishment", "%", Kind::Percent),
    ("access_water", "Access to drinking water", "%", Kind::Percent),
    ("access_electricity", "Access to electricity", "%", Kind::Percent),
    ("literacy_rate", "Literacy rate", "%", Kind::Percent),
    ("school_enrollment", "Secondary school enrollment", "%", Kind::Percent),
    (
        "mobile_subscriptions",
        "Mobile subscriptions",
        "per 100",
        Kind::Amount(80.0),
    ),
    ("internet_users", "Internet users", "%", Kind::Percent),
    ("rainfall_anomaly", "Rainfall anomaly", "std", Kind::Rate),
    ("temperature_anomaly", "Temperature anomaly", "degC", Kind::Rate),
    ("drought_index", "Drought index", "index", Kind::Index),
    ("night_lights", "Night-time lights", "index", Kind::Index),
];

/// Track `prediction` reads `fatalities_predicted`; `ground_truth` reads
/// `fatalities_observed`.
pub fn conflict_tracks() -> Vec<Track> {
    vec![
        Track {
            name: "prediction".into(),
            indicator: "fatalities_predicted".into(),
        },
        Track {
            name: "ground_truth".into(),
            indicator: "fatalities_observed".into(),
        },
    ]
}

pub fn conflict_indicators() -> Vec<Indicator> {
    CONFLICT_INDICATORS
        .iter()
        .map(|(id, name, unit, _)| Indicator {
            id: id.to_string(),
            name: name.to_string(),
            unit: unit.to_string(),
        })
        .collect()
}

fn round_to(v: f64, decimals: i32) -> f64 {
    let p = 10f64.powi(decimals);
    (v * p).round() / p
}

/// 141 countries × 240 months × 60 indicators, about 2% MISSING.
pub fn conflict_dataset(seed: u64) -> Dataset {
    let regions: Vec<RegionCode> = RegionRegistry::bundled()
        .countries()
        .take(CONFLICT_REGIONS)
        .cloned()
        .collect();
    let periods = PeriodAxis::parse(CONFLICT_FIRST, CONFLICT_LAST, Granularity::Monthly).expect("valid range");
    let n_per = periods.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(regions.len() * CONFLICT_INDICATORS.len() * n_per);

    for _ in &regions {
        // Some countries are at war, most are not.
        let intensity: f64 = if rng.random_bool(0.3) {
            rng.random_range(2.0..12.0)
        } else {
            rng.random_range(0.05..1.0)
        };
        for (_, _, _, kind) in CONFLICT_INDICATORS {
            let level: f64 = rng.random_range(0.2..1.8);
            let mut walk: f64 = 0.0;
            for p in 0..n_per {
                walk = (walk + rng.random_range(-0.08..0.08)).clamp(-1.0, 1.0);
                let season = 1.0 + 0.1 * ((p % 12) as f64 / 12.0 * std::f64::consts::TAU).sin();
                let noise: f64 = rng.random_range(0.6..1.4);
                let v = match kind {
                    Kind::Count(scale) => (scale * intensity * level * season * noise * walk.exp()).round(),
                    // Filled in below from the observed series.
                    Kind::Expected => 0.0,
                    Kind::Percent => round_to((50.0 * level + 15.0 * walk + noise * 5.0).clamp(0.0, 100.0), 1),
                    Kind::Index => round_to((0.5 * level + 0.2 * walk).clamp(0.0, 1.0), 3),
                    Kind::Amount(scale) => (scale * level * season * walk.exp() * noise).round(),
                    Kind::Rate => round_to(4.0 * (level - 1.0) + 3.0 * walk + noise - 1.0, 2),
                };
                values.push(Some(v));
            }
        }
    }
    // Predictions: a noisy, full-precision echo of the observed series.
    let n_ind = CONFLICT_INDICATORS.len();
    for r in 0..regions.len() {
        let obs = (r * n_ind + 1) * n_per;
        let pred = r * n_ind * n_per;
        for p in 0..n_per {
            let o = values[obs + p].unwrap_or(0.0);
            values[pred + p] = Some(o * rng.random_range(0.8..1.25) + rng.random_range(0.0..2.0));
        }
    }
    for v in values.iter_mut() {
        if rng.random_bool(0.02) {
            *v = None;
        }
    }

    Dataset::new(DatasetParts {
        regions,
        periods,
        indicators: conflict_indicators(),
        tracks: conflict_tracks(),
        values,
        provenance: format!("synthetic conflict-shaped fixture, seed {seed}"),
    })
    .expect("generated dataset is valid")
}

/// Daily new cases and deaths following one epidemic wave per region.
pub fn pandemic_dataset(seed: u64, regions: usize, days: u32) -> Dataset {
    let regions: Vec<RegionCode> = RegionRegistry::bundled().countries().take(regions).cloned().collect();
    let first = crate::model::CalendarPeriod::parse("2020-01-22", Granularity::Daily).expect("valid date");
    let periods = PeriodAxis::new(first, first.offset(days.max(1) as i64 - 1)).expect("valid range");
    let n = periods.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(regions.len() * 3 * n);
    for _ in &regions {
        let peak = rng.random_range(0.2..0.8) * n as f64;
        let width = rng.random_range(0.05..0.2) * n as f64;
        let height: f64 = rng.random_range(100.0..50_000.0);
        let cfr: f64 = rng.random_range(0.005..0.03);
        let cases: Vec<f64> = (0..n)
            .map(|d| {
                let z = (d as f64 - peak) / width;
                (height * (-0.5 * z * z).exp() * rng.random_range(0.7..1.3)).round()
            })
            .collect();
        values.extend(cases.iter().map(|c| Some(*c)));
        values.extend(cases.iter().map(|c| Some((c * cfr).round())));
        values.extend(cases.iter().map(|c| Some((c * rng.random_range(8.0..20.0)).round())));
    }
    Dataset::new(DatasetParts {
        regions,
        periods,
        indicators: vec![
            Indicator::bare("new_cases"),
            Indicator::bare("new_deaths"),
            Indicator::bare("tests"),
        ],
        tracks: vec![
            Track {
                name: "cases".into(),
                indicator: "new_cases".into(),
            },
            Track {
                name: "deaths".into(),
                indicator: "new_deaths".into(),
            },
        ],
        values,
        provenance: format!("synthetic pandemic-shaped fixture, seed {seed}"),
    })
    .expect("generated dataset is valid")
}

/// A small random dataset: up to 10 regions (countries and subdivisions),
/// up to 24 periods, up to 5 indicators, 1 or 2 tracks, about 15% MISSING.
pub fn random_dataset(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let registry = RegionRegistry::bundled();
    let countries: Vec<&RegionCode> = registry.countries().collect();

    let n_regions = rng.random_range(1..=10usize);
    let mut regions: Vec<RegionCode> = Vec::new();
    while regions.len() < n_regions {
        let country = countries[rng.random_range(0..countries.len())];
        let subdivisions: Vec<&RegionCode> = registry
            .entries()
            .iter()
            .map(|e| &e.code)
            .filter(|c| c.is_subdivision() && c.country() == country.country())
            .collect();
        let pick = if !subdivisions.is_empty() && rng.random_bool(0.4) {
            subdivisions[rng.random_range(0..subdivisions.len())].clone()
        } else {
            country.clone()
        };
        if !regions.contains(&pick) {
            regions.push(pick);
        }
    }
    regions.sort();

    let granularity = if rng.random_bool(0.7) {
        Granularity::Monthly
    } else {
        Granularity::Daily
    };
    let first = match granularity {
        Granularity::Monthly => format!("{}-{:02}", rng.random_range(1990..2030), rng.random_range(1..=12)),
        Granularity::Daily => format!("2020-{:02}-{:02}", rng.random_range(1..=12), rng.random_range(1..=28)),
    };
    let first = crate::model::CalendarPeriod::parse(&first, granularity).expect("valid period");
    let periods = PeriodAxis::new(first, first.offset(rng.random_range(0..24))).expect("valid range");

    let n_ind = rng.random_range(1..=5usize);
    let indicators: Vec<Indicator> = (0..n_ind)
        .map(|i| Indicator {
            id: format!("ind_{i}_{}", rng.random_range(0..1000)),
            name: format!("Indicator {i}"),
            unit: if rng.random_bool(0.5) {
                "count".into()
            } else {
                String::new()
            },
        })
        .collect();
    let n_tracks = rng.random_range(1..=2usize);
    let tracks = (0..n_tracks)
        .map(|t| Track {
            name: format!("track_{t}"),
            indicator: indicators[rng.random_range(0..n_ind)].id.clone(),
        })
        .collect();

    let cells = regions.len() * n_ind * periods.len();
    let values = (0..cells)
        .map(|_| {
            if rng.random_bool(0.15) {
                return None;
            }
            Some(match rng.random_range(0..5) {
                0 => rng.random_range(0..1000) as f64,
                1 => round_to(rng.random_range(-100.0..100.0), 2),
                2 => rng.random_range(-1e9..1e9),
                3 => rng.random_range(0.0..1e-6),
                _ => 0.0,
            })
        })
        .collect();

    Dataset::new(DatasetParts {
        regions,
        periods,
        indicators,
        tracks,
        values,
        provenance: format!("random fixture, seed {seed}"),
    })
    .expect("generated dataset is valid")
}

/// An ingest spec that reads the writers' output back into `dataset`.
pub fn ingest_spec_for(dataset: &Dataset, format: Format) -> IngestSpec {
    let mut spec = IngestSpec::new(format, dataset.periods().granularity(), dataset.tracks().to_vec());
    spec.indicators = dataset.indicators().to_vec();
    spec.provenance = Some(dataset.provenance().to_string());
    spec
}

/// How region cells are written.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionLabels {
    Codes,
    /// Official registry names.
    Names,
}

fn region_label(code: &RegionCode, labels: RegionLabels) -> String {
    match labels {
        RegionLabels::Codes => code.to_string(),
        RegionLabels::Names => RegionRegistry::bundled()
            .get(code)
            .map(|e| e.name.clone())
            .unwrap_or_else(|| code.to_string()),
    }
}

/// One record per cell, region-major then indicator then period. MISSING
/// cells are written too, so periods and indicator order survive ingest.
fn records(dataset: &Dataset) -> impl Iterator<Item = (&RegionCode, String, &str, Option<f64>)> + '_ {
    let periods: Vec<String> = dataset.periods().iter().map(|p| p.to_string()).collect();
    let n_per = periods.len();
    dataset.regions().iter().enumerate().flat_map(move |(r, region)| {
        let periods = periods.clone();
        dataset.indicators().iter().enumerate().flat_map(move |(i, ind)| {
            let series = dataset.series(r, i);
            let periods = periods.clone();
            (0..n_per).map(move |p| (region, periods[p].clone(), ind.id.as_str(), series[p]))
        })
    })
}

fn number_text(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_csv<W: Write>(dataset: &Dataset, labels: RegionLabels, out: W) -> io::Result<()> {
    let cols = ColumnMap::default();
    let mut w = csv::Writer::from_writer(out);
    w.write_record([&cols.region, &cols.period, &cols.indicator, &cols.value])?;
    for (region, period, indicator, value) in records(dataset) {
        w.write_record([&region_label(region, labels), &period, indicator, &number_text(value)])?;
    }
    w.flush()
}

pub fn to_csv(dataset: &Dataset, labels: RegionLabels) -> Vec<u8> {
    let mut out = Vec::new();
    write_csv(dataset, labels, &mut out).expect("writing to a Vec cannot fail");
    out
}

#[derive(Serialize)]
struct RowRecord<'a> {
    region: String,
    period: String,
    indicator: &'a str,
    value: Option<f64>,
}

pub fn to_json_rows(dataset: &Dataset, labels: RegionLabels) -> Vec<u8> {
    let rows: Vec<RowRecord<'_>> = records(dataset)
        .map(|(region, period, indicator, value)| RowRecord {
            region: region_label(region, labels),
            period,
            indicator,
            value,
        })
        .collect();
    serde_json::to_vec(&rows).expect("records serialise")
}

#[derive(Serialize, Default)]
struct ColumnarRecords<'a> {
    region: Vec<String>,
    period: Vec<String>,
    indicator: Vec<&'a str>,
    value: Vec<Option<f64>>,
}

pub fn to_json_columnar(dataset: &Dataset, labels: RegionLabels) -> Vec<u8> {
    let mut cols = ColumnarRecords::default();
    for (region, period, indicator, value) in records(dataset) {
        cols.region.push(region_label(region, labels));
        cols.period.push(period);
        cols.indicator.push(indicator);
        cols.value.push(value);
    }
    serde_json::to_vec(&cols).expect("records serialise")
}

fn html_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// A full HTML page with the records in its first table.
pub fn to_html_table(dataset: &Dataset, labels: RegionLabels) -> Vec<u8> {
    let cols = ColumnMap::default();
    let mut out = String::from(
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>records</title></head><body>\n<table>\n",
    );
    let _ = writeln!(
        out,
        "<tr><th>{}</th><th>{}</th><th>{}</th><th>{}</th></tr>",
        cols.region, cols.period, cols.indicator, cols.value
    );
    for (region, period, indicator, value) in records(dataset) {
        let _ = writeln!(
            out,
            "<tr><td>{}</td><td>{}</td><td>{}</td><td>{}</td></tr>",
            html_escape(&region_label(region, labels)),
            period,
            html_escape(indicator),
            number_text(value)
        );
    }
    out.push_str("</table>\n</body></html>\n");
    out.into_bytes()
}

/// Serialised records in `format`.
pub fn write_format(dataset: &Dataset, format: Format, labels: RegionLabels) -> Vec<u8> {
    match format {
        Format::Csv => to_csv(dataset, labels),
        Format::JsonRows => to_json_rows(dataset, labels),
        Format::JsonColumnar => to_json_columnar(dataset, labels),
        Format::HtmlTable => to_html_table(dataset, labels),
    }
}

/// An SVG map laying regions out on a grid, one `<path id="CODE">` each.
pub fn grid_map_svg(regions: &[RegionCode]) -> String {
    let cols = (regions.len() as f64).sqrt().ceil().max(1.0) as usize;
    let rows = regions.len().div_ceil(cols).max(1);
    let mut out = String::new();
    let _ = writeln!(out, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {} {}\">",
        cols * 20,
        rows * 20
    );
    let _ = writeln!(out, "  <!-- grid map: one cell per region -->");
    let _ = writeln!(
        out,
        "  <style>.region {{ stroke: #ffffff; stroke-width: 0.5; }}</style>"
    );
    for (k, region) in regions.iter().enumerate() {
        let (x, y) = ((k % cols) * 20, (k / cols) * 20);
        let inset = if region.is_subdivision() { 4 } else { 1 };
        let size = 20 - 2 * inset;
        let _ = writeln!(
            out,
            "  <path id=\"{region}\" class=\"region\" d=\"M{} {}h{size}v{size}h-{size}z\"><title>{region}</title></path>",
            x + inset,
            y + inset
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::ingest;

    #[test]
    fn conflict_shape() {
        let ds = conflict_dataset(7);
        assert_eq!(ds.regions().len(), 141);
        assert_eq!(ds.periods().len(), 240);
        assert_eq!(ds.indicators().len(), 60);
        assert_eq!(ds.tracks().len(), 2);
        let missing = ds.cell_count() - ds.present_count();
        let ratio = missing as f64 / ds.cell_count() as f64;
        assert!((0.015..0.025).contains(&ratio), "{ratio}");
        assert_eq!(conflict_dataset(7), ds);
    }

    #[test]
    fn random_fixtures_are_bounded_and_seeded() {
        for seed in 0..50 {
            let ds = random_dataset(seed);
            assert!(ds.regions().len() <= 10);
            assert!(ds.periods().len() <= 24);
            assert!(ds.indicators().len() <= 5);
            assert_eq!(random_dataset(seed), ds);
        }
        assert!((0..50).any(|s| random_dataset(s).regions().iter().any(RegionCode::is_subdivision)));
    }

    #[test]
    fn writers_round_trip_through_ingest() {
        for seed in 0..5 {
            let ds = random_dataset(seed);
            for format in [Format::Csv, Format::JsonRows, Format::JsonColumnar, Format::HtmlTable] {
                let bytes = write_format(&ds, format, RegionLabels::Codes);
                let back = ingest(&bytes, &ingest_spec_for(&ds, format)).unwrap();
                assert_eq!(back, ds, "seed {seed} {format}");
            }
        }
    }

    #[test]
    fn pandemic_is_daily() {
        let ds = pandemic_dataset(1, 5, 90);
        assert_eq!(ds.periods().granularity(), Granularity::Daily);
        assert_eq!(ds.periods().len(), 90);
        assert_eq!(ds.regions().len(), 5);
    }

    #[test]
    fn grid_map_has_every_region() {
        let regions: Vec<RegionCode> = ["DE", "DE-BY", "FR"].iter().map(|c| c.parse().unwrap()).collect();
        let svg = grid_map_svg(&regions);
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let ids: Vec<&str> = doc.descendants().filter_map(|n| n.attribute("id")).collect();
        assert_eq!(ids, ["DE", "DE-BY", "FR"]);
    }
}
