use std::collections::BTreeMap;
use std::fmt;

use axum::body::Bytes;
use axum::http::{HeaderValue, StatusCode};
use crisismap_core::choropleth::{color_frame, ChoroplethError, ChoroplethFrame, ColorScale};
use crisismap_core::chunk::{ContentHash, GlobalSummary, Meta, OversizedChunk, Store};
use crisismap_core::model::{parse_region_code, ModelError, RegionCode};

use crate::{ServerConfig, ServerError};

/// An error response: HTTP status plus `{"error": code, "detail": text}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub detail: String,
}

impl ApiError {
    pub(crate) fn new(status: StatusCode, code: &'static str, detail: impl Into<String>) -> ApiError {
        ApiError {
            status,
            code,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for ApiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({}): {}", self.code, self.status.as_u16(), self.detail)
    }
}

impl std::error::Error for ApiError {}

/// A body with its precomputed strong ETag.
#[derive(Debug, Clone)]
pub(crate) struct Resource {
    pub body: Bytes,
    pub etag: HeaderValue,
}

impl Resource {
    pub fn new(body: Vec<u8>) -> Resource {
        let etag = etag_of(&body);
        Resource {
            body: Bytes::from(body),
            etag,
        }
    }

    fn with_hash(body: Vec<u8>, hash: &ContentHash) -> Resource {
        Resource {
            body: Bytes::from(body),
            etag: HeaderValue::from_str(&hash.etag()).expect("hex is a valid header value"),
        }
    }
}

pub(crate) fn etag_of(body: &[u8]) -> HeaderValue {
    HeaderValue::from_str(&ContentHash::of(body).etag()).expect("hex is a valid header value")
}

struct LoadedStore {
    meta: Meta,
    meta_res: Resource,
    summary: GlobalSummary,
    summary_res: Resource,
    chunks: BTreeMap<RegionCode, Resource>,
    /// scale name → track name → resolved scale.
    scales: BTreeMap<String, BTreeMap<String, ColorScale>>,
}

/// Everything the handlers read. Immutable after [`AppState::load`].
pub struct AppState {
    store: Result<LoadedStore, String>,
    map: Result<Resource, String>,
    pub(crate) cors_origin: HeaderValue,
    default_scale: String,
}

impl AppState {
    /// Reads the store and map once. A missing or corrupt store, or an
    /// unreadable map, is kept as an error so the affected endpoints answer
    /// 500; configuration mistakes fail here.
    pub fn load(config: &ServerConfig) -> Result<AppState, ServerError> {
        let cors_origin = HeaderValue::from_str(&config.cors_origin)
            .map_err(|_| ServerError::InvalidCorsOrigin(config.cors_origin.clone()))?;
        if !config.scales.contains_key(&config.default_scale) {
            return Err(ServerError::UnknownDefaultScale(config.default_scale.clone()));
        }
        let store = match Store::open(&config.data_dir) {
            Ok(store) => Ok(LoadedStore::new(store, config)?),
            Err(e) => Err(format!("{}: {e}", config.data_dir.display())),
        };
        let map = std::fs::read(&config.map_path)
            .map(Resource::new)
            .map_err(|e| format!("{}: {e}", config.map_path.display()));
        Ok(AppState {
            store,
            map,
            cors_origin,
            default_scale: config.default_scale.clone(),
        })
    }

    pub fn store_error(&self) -> Option<&str> {
        self.store.as_ref().err().map(String::as_str)
    }

    pub fn map_error(&self) -> Option<&str> {
        self.map.as_ref().err().map(String::as_str)
    }

    /// Chunks larger than `budget` bytes.
    pub fn oversized_chunks(&self, budget: u64) -> Vec<OversizedChunk> {
        let Ok(s) = &self.store else { return Vec::new() };
        s.chunks
            .iter()
            .filter(|(_, r)| r.body.len() as u64 > budget)
            .map(|(k, r)| OversizedChunk {
                region: k.to_string(),
                bytes: r.body.len() as u64,
                budget,
            })
            .collect()
    }

    fn loaded(&self) -> Result<&LoadedStore, ApiError> {
        self.store
            .as_ref()
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "store_unavailable", e.clone()))
    }

    pub(crate) fn meta(&self) -> Result<&Resource, ApiError> {
        Ok(&self.loaded()?.meta_res)
    }

    pub(crate) fn summary(&self) -> Result<&Resource, ApiError> {
        Ok(&self.loaded()?.summary_res)
    }

    pub(crate) fn map(&self) -> Result<&Resource, ApiError> {
        self.map
            .as_ref()
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "map_unavailable", e.clone()))
    }

    /// The chunk holding `text`, which may be any case and may name a
    /// subdivision.
    pub(crate) fn detail(&self, text: &str) -> Result<&Resource, ApiError> {
        let store = self.loaded()?;
        let code = parse_region_code(text).map_err(|e| match e {
            ModelError::UnknownCode(_) => ApiError::new(StatusCode::NOT_FOUND, "unknown_region", e.to_string()),
            _ => ApiError::new(StatusCode::BAD_REQUEST, "malformed_code", e.to_string()),
        })?;
        store
            .meta
            .chunk_key(&code)
            .and_then(|key| store.chunks.get(&key))
            .ok_or_else(|| {
                ApiError::new(
                    StatusCode::NOT_FOUND,
                    "unknown_region",
                    format!("region {code} is not in the dataset"),
                )
            })
    }

    /// Colors period `ordinal`. `track` defaults to the first track and
    /// `scale` to the configured default.
    pub fn frame(&self, ordinal: u32, track: Option<&str>, scale: Option<&str>) -> Result<ChoroplethFrame, ApiError> {
        let store = self.loaded()?;
        let scale_name = scale.unwrap_or(&self.default_scale);
        let by_track = store.scales.get(scale_name).ok_or_else(|| {
            ApiError::new(
                StatusCode::BAD_REQUEST,
                "unknown_scale",
                format!("no scale named {scale_name:?}"),
            )
        })?;
        let track =
            match track {
                Some(t) => t,
                None => store.summary.tracks().first().map(|t| t.name.as_str()).ok_or_else(|| {
                    ApiError::new(StatusCode::BAD_REQUEST, "unknown_track", "the dataset has no tracks")
                })?,
            };
        let color_scale = by_track.get(track).ok_or_else(|| {
            ApiError::new(
                StatusCode::BAD_REQUEST,
                "unknown_track",
                format!("no track named {track:?}"),
            )
        })?;
        color_frame(&store.summary, ordinal, track, color_scale).map_err(frame_error)
    }

    /// [`AppState::frame`] rendered onto the configured map.
    pub fn frame_svg(&self, ordinal: u32, track: Option<&str>, scale: Option<&str>) -> Result<Vec<u8>, ApiError> {
        let mut frame = self.frame(ordinal, track, scale)?;
        let map = self.map()?;
        frame.render(&map.body).map_err(frame_error)?;
        Ok(frame.svg.expect("render stores the svg"))
    }

    /// Number of periods, if the store is loaded.
    pub fn period_count(&self) -> Option<usize> {
        self.store.as_ref().ok().map(|s| s.summary.periods().len())
    }
}

fn frame_error(e: ChoroplethError) -> ApiError {
    match e {
        ChoroplethError::PeriodOutOfRange { .. } => {
            ApiError::new(StatusCode::NOT_FOUND, "period_out_of_range", e.to_string())
        }
        ChoroplethError::UnknownTrack(_) => ApiError::new(StatusCode::BAD_REQUEST, "unknown_track", e.to_string()),
        ChoroplethError::UnknownScale(_) => ApiError::new(StatusCode::BAD_REQUEST, "unknown_scale", e.to_string()),
        ChoroplethError::MalformedSvg(_) => {
            ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "malformed_map", e.to_string())
        }
        _ => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "frame_failed", e.to_string()),
    }
}

impl LoadedStore {
    fn new(store: Store, config: &ServerConfig) -> Result<LoadedStore, ServerError> {
        let mut scales = BTreeMap::new();
        for (name, spec) in &config.scales {
            let mut by_track = BTreeMap::new();
            for track in store.summary.tracks() {
                let resolved = spec
                    .resolve(&store.summary, &track.name)
                    .map_err(|source| ServerError::Scale {
                        name: name.clone(),
                        track: track.name.clone(),
                        source,
                    })?;
                by_track.insert(track.name.clone(), resolved);
            }
            scales.insert(name.clone(), by_track);
        }
        let summary_hash = store.meta.summary_hash;
        Ok(LoadedStore {
            meta_res: Resource::new(store.meta_bytes),
            summary_res: Resource::with_hash(store.summary_bytes, &summary_hash),
            chunks: store
                .chunks
                .into_iter()
                .map(|(k, c)| {
                    let res = Resource::with_hash(c.bytes, &c.hash);
                    (k, res)
                })
                .collect(),
            meta: store.meta,
            summary: store.summary,
            scales,
        })
    }
}
