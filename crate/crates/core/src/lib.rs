//! Temporal-spatial crisis data: data model, ingest connectors, chunked
//! payloads and choropleth rendering.

pub mod choropleth;
pub mod chunk;
pub mod fixtures;
pub mod ingest;
pub mod model;
