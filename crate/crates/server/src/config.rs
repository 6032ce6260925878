use std::collections::BTreeMap;
use std::net::{Ipv4Addr, SocketAddr};
use std::path::PathBuf;

use crisismap_core::choropleth::{default_scales, ScaleSpec, DEFAULT_SCALE};
use crisismap_core::chunk::DEFAULT_SOFT_BUDGET;

pub const DEFAULT_PORT: u16 = 8080;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    /// Holds `meta.json`, `summary.json` and `chunks/`.
    pub data_dir: PathBuf,
    pub map_path: PathBuf,
    pub addr: SocketAddr,
    /// `*` or a single origin.
    pub cors_origin: String,
    /// Chunks above this many bytes are reported at startup.
    pub soft_budget: u64,
    /// Named scales selectable via `?scale=`.
    pub scales: BTreeMap<String, ScaleSpec>,
    /// Used when `?scale=` is absent; must be a key of `scales`.
    pub default_scale: String,
}

impl ServerConfig {
    pub fn new(data_dir: impl Into<PathBuf>, map_path: impl Into<PathBuf>) -> ServerConfig {
        ServerConfig {
            data_dir: data_dir.into(),
            map_path: map_path.into(),
            addr: SocketAddr::from((Ipv4Addr::LOCALHOST, DEFAULT_PORT)),
            cors_origin: "*".into(),
            soft_budget: DEFAULT_SOFT_BUDGET,
            scales: default_scales(),
            default_scale: DEFAULT_SCALE.into(),
        }
    }
}
