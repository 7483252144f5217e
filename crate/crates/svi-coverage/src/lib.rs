//! Feature-level coverage analysis of building facades by street view
//! imagery (SVI).
//!
//! The library answers two questions about a set of geolocated street-view
//! capture points in a city: how *completely* does the imagery cover each
//! building facade, and how *often* is each facade seen. It does this with
//! an occlusion-aware 2D isovist model: facades are discretized into
//! boundary sampling points, sightlines are cast from every SVI location to
//! every sampling point within a distance threshold, and lines blocked by
//! any footprint are discarded. Optional per-direction semantic
//! segmentation summaries demote sightlines whose viewing direction shows
//! too little building content (trees, vehicles, people in the way).
//!
//! From resolved sightlines the crate derives a completeness/frequency
//! indicator system at building level (CoC-B, FoC-B) and at hexagonal-cell
//! level (CoC-A, FoC-A), plus road-network coverage, population coverage,
//! Getis-Ord Gi* hotspot statistics, and a collection-interval scan that
//! detects the interval at which the decline rates of completeness and
//! frequency intersect.
//!
//! Modules:
//! - [`geometry`]: points, footprints, boundary sampling, occlusion tests
//! - [`engine`]: spatially indexed sightline computation + brute-force oracle
//! - [`segmentation`]: per-direction building-proportion filtering
//! - [`indicators`]: building/area/road/population coverage indicators
//! - [`hex`]: planar axial hexagonal grid with buffered membership
//! - [`stats`]: Getis-Ord Gi* and ordinary least squares
//! - [`fit`]: curve fitting (polynomial/power/log/smoothing spline),
//!   derivatives, derivative-curve intersection
//! - [`interval`]: SVI collection-interval resampling scan and
//!   optimal-interval detection
//! - [`synth`]: deterministic synthetic city generator for experiments
//! - [`scene`]: GeoJSON/CSV scene ingestion and validation
//! - [`tables`]: deterministic delimited-text output tables

pub mod engine;
pub mod error;
pub mod fit;
pub mod geometry;
pub mod hex;
pub mod indicators;
pub mod interval;
pub mod scene;
pub mod segmentation;
pub mod stats;
pub mod synth;
pub mod tables;
pub mod typemap;

pub use error::{FitError, GeometryError, SceneError};
