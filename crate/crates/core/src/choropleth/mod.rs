//! Value-to-color scales and SVG map frames.

mod frame;
mod scale;
mod svg;

pub use frame::{color_frame, ChoroplethFrame};
pub use scale::{
    default_ramp, default_scales, ColorScale, Rgb, ScaleKind, ScaleSpec, DEFAULT_BINS, DEFAULT_RAMP, DEFAULT_SCALE,
    MISSING_COLOR,
};
pub use svg::{render_svg, Rendered};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChoroplethError {
    #[error("invalid color scale: {0}")]
    InvalidScale(String),
    #[error("linear scale has an empty domain")]
    DegenerateScale,
    #[error("value is not finite")]
    NonFiniteValue,
    #[error("unknown track {0:?}")]
    UnknownTrack(String),
    #[error("unknown scale {0:?}")]
    UnknownScale(String),
    #[error("period ordinal {ordinal} out of range 0..{len}")]
    PeriodOutOfRange { ordinal: u32, len: usize },
    #[error("malformed SVG: {0}")]
    MalformedSvg(String),
}
