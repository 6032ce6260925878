//! Domain types shared by every other module.

mod dataset;
mod period;
mod region;

pub use dataset::{Dataset, DatasetParts, Indicator, Track, Violation};
pub use period::{period_range, CalendarPeriod, Granularity, Period, PeriodAxis};
pub use region::{parse_region_code, resolve_region_name, RegionCode, RegionEntry, RegionRegistry, RegistryError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("malformed region code {0:?}")]
    MalformedCode(String),
    #[error("unknown region code {0:?}")]
    UnknownCode(String),
    #[error("cannot resolve region {0:?}")]
    Unresolvable(String),
    #[error("ambiguous region name {text:?}, candidates: {}", candidates.join(", "))]
    AmbiguousName { text: String, candidates: Vec<String> },
    #[error("period {text:?} does not match the {granularity} calendar format")]
    PeriodFormat { text: String, granularity: Granularity },
    #[error("reversed period range {first}..{last}")]
    ReversedRange { first: String, last: String },
    #[error("a period range cannot mix granularities")]
    MixedGranularity,
    #[error("period range too long")]
    PeriodOverflow,
    #[error("invalid dataset: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidDataset(Vec<Violation>),
}
