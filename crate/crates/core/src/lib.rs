//! Vertiport site selection: constraint rasters, alternative-transport
//! filtering, grid reachability and destination/transfer scoring.

pub mod alt_filter;
pub mod dem;
pub mod geom;
pub mod grid;
pub mod ingest;
pub mod pipeline;
pub mod provider;
pub mod raster;
pub mod reachability;
pub mod report;
pub mod scoring;
pub mod synth;
