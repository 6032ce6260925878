use std::fmt;

use serde::Serialize;

use crate::model::{Dataset, Violation};

/// Share of non-MISSING cells for one indicator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndicatorCoverage {
    pub indicator: String,
    pub present: usize,
    pub total: usize,
}

impl IndicatorCoverage {
    pub fn coverage(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.present as f64 / self.total as f64
        }
    }

    pub fn missing_ratio(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            1.0 - self.coverage()
        }
    }
}

/// Number of periods in which at least one cell holds a value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodCoverage {
    pub periods_with_data: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub indicators: Vec<IndicatorCoverage>,
    pub periods: PeriodCoverage,
    pub skipped_rows: usize,
}

impl ValidationReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn with_skipped(mut self, skipped: usize) -> Self {
        self.skipped_rows = skipped;
        self
    }
}

/// Checks dataset invariants and summarises coverage.
pub fn validate(dataset: &Dataset) -> ValidationReport {
    let violations = dataset.violations();
    let n_regions = dataset.regions().len();
    let n_periods = dataset.periods().len();
    let grid_ok = !violations
        .iter()
        .any(|v| matches!(v, Violation::ValueGridMismatch { .. }));

    let indicators = dataset
        .indicators()
        .iter()
        .enumerate()
        .map(|(i, ind)| {
            let present = if grid_ok {
                (0..n_regions)
                    .map(|r| dataset.series(r, i).iter().filter(|v| v.is_some()).count())
                    .sum()
            } else {
                0
            };
            IndicatorCoverage {
                indicator: ind.id.clone(),
                present,
                total: n_regions * n_periods,
            }
        })
        .collect();

    let mut with_data = vec![false; n_periods];
    if grid_ok {
        for r in 0..n_regions {
            for i in 0..dataset.indicators().len() {
                for (p, v) in dataset.series(r, i).iter().enumerate() {
                    with_data[p] |= v.is_some();
                }
            }
        }
    }

    ValidationReport {
        violations,
        indicators,
        periods: PeriodCoverage {
            periods_with_data: with_data.iter().filter(|&&b| b).count(),
            total: n_periods,
        },
        skipped_rows: 0,
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passes() {
            writeln!(f, "validation: ok")?;
        } else {
            writeln!(f, "validation: {} violation(s)", self.violations.len())?;
            for v in &self.violations {
                writeln!(f, "  - {v}")?;
            }
        }
        writeln!(
            f,
            "periods with data: {}/{}",
            self.periods.periods_with_data, self.periods.total
        )?;
        if self.skipped_rows > 0 {
            writeln!(f, "skipped rows: {}", self.skipped_rows)?;
        }
        for c in &self.indicators {
            writeln!(
                f,
                "  {:<24} {:>6.1}% coverage ({}/{})",
                c.indicator,
                c.coverage() * 100.0,
                c.present,
                c.total
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{ingest, Format, IngestSpec};
    use crate::model::{DatasetParts, Granularity, Track};

    fn spec() -> IngestSpec {
        IngestSpec::new(
            Format::Csv,
            Granularity::Monthly,
            vec![Track {
                name: "cases".into(),
                indicator: "cases".into(),
            }],
        )
    }

    #[test]
    fn clean_dataset_full_coverage() {
        let csv = "region,period,indicator,value\nDE,2020-01,cases,5\nDE,2020-02,cases,7";
        let report = validate(&ingest(csv.as_bytes(), &spec()).unwrap());
        assert!(report.passes());
        assert_eq!(report.indicators[0].coverage(), 1.0);
    }

    #[test]
    fn gap_month_coverage() {
        let csv = "region,period,indicator,value\nDE,2020-01,cases,5\nDE,2020-03,cases,7";
        let ds = ingest(csv.as_bytes(), &spec()).unwrap();
        let report = validate(&ds);
        assert!(report.passes());

        // Brute force: count non-missing over every grid cell.
        let present = ds.cells().filter(|c| c.3.is_some()).count();
        let total = ds.cells().count();
        assert_eq!((present, total), (2, 3));
        assert_eq!(report.indicators[0].present, present);
        assert_eq!(report.indicators[0].total, total);
        assert!((report.indicators[0].coverage() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(report.periods.periods_with_data, 2);
    }

    #[test]
    fn undeclared_indicator_reported() {
        let csv = "region,period,indicator,value\nDE,2020-01,cases,5";
        let mut parts: DatasetParts = ingest(csv.as_bytes(), &spec()).unwrap().into_parts();
        parts.tracks.push(Track {
            name: "deaths".into(),
            indicator: "deaths".into(),
        });
        let report = validate(&Dataset::from_parts_unchecked(parts));
        assert_eq!(report.violations.len(), 1);
        assert!(!report.passes());
        assert!(report.to_string().contains("undeclared indicator"));
    }
}
