//! Run configuration. Every analysis threshold lives here with its
//! standard default; a TOML file selectively overrides sections, and a few
//! high-traffic values can be overridden again per-command on the CLI.

use std::path::Path;

use anyhow::Context;
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub coverage: CoverageSection,
    pub grid: GridSection,
    pub roads: RoadsSection,
    pub hotspot: HotspotSection,
    pub intervals: IntervalsSection,
    pub synth: SynthSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoverageSection {
    /// Isovist analysis radius, meters.
    pub radius_m: f64,
    /// Facade boundary sampling interval, meters.
    pub facade_spacing_m: f64,
    /// Target shrink for self-intersection handling, meters.
    pub eps_m: f64,
    /// Minimum per-bin building proportion for a sightline to survive
    /// segmentation filtering.
    pub segmentation_threshold: f64,
    /// Policy for SVI points missing from the bins table: keep | drop.
    pub missing_bins_policy: String,
}

impl Default for CoverageSection {
    fn default() -> Self {
        CoverageSection {
            radius_m: 50.0,
            facade_spacing_m: 2.0,
            eps_m: 1e-6,
            segmentation_threshold: 0.5,
            missing_bins_policy: "keep".to_string(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub fine_edge_m: f64,
    pub coarse_edge_m: f64,
    /// Buffered-membership margin for chunked processing, meters.
    pub buffer_m: f64,
    pub origin_x: f64,
    pub origin_y: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            fine_edge_m: svi_coverage::hex::FINE_EDGE_M,
            coarse_edge_m: svi_coverage::hex::COARSE_EDGE_M,
            buffer_m: 200.0,
            origin_x: 0.0,
            origin_y: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoadsSection {
    /// SVI buffer radius for road-coverage completeness, meters.
    pub buffer_m: f64,
}

impl Default for RoadsSection {
    fn default() -> Self {
        RoadsSection { buffer_m: 50.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HotspotSection {
    /// |z| threshold for hot/cold classification.
    pub z_threshold: f64,
    /// Share of cells flagged as ranked extremes, percent.
    pub rank_percent: f64,
}

impl Default for HotspotSection {
    fn default() -> Self {
        HotspotSection {
            z_threshold: 1.96,
            rank_percent: 5.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntervalsSection {
    pub intervals_m: Vec<f64>,
    pub radii_m: Vec<f64>,
    /// Snap tolerance override, meters; absent = half the interval.
    pub snap_tolerance_m: Option<f64>,
    /// Fit family for optimal-interval detection:
    /// smoothing-spline | polynomial<d> | power | logarithm | auto.
    pub fit_kind: String,
    /// Restrict per-cell means to covered buildings.
    pub covered_only: bool,
}

impl Default for IntervalsSection {
    fn default() -> Self {
        IntervalsSection {
            intervals_m: (10..=95).step_by(5).map(f64::from).collect(),
            radii_m: vec![30.0, 40.0, 50.0],
            snap_tolerance_m: None,
            fit_kind: "smoothing-spline".to_string(),
            covered_only: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub seed: u64,
    pub block_rows: usize,
    pub block_cols: usize,
    pub building_density: f64,
    pub road_width_m: f64,
    pub building_size_min_m: f64,
    pub building_size_max_m: f64,
    pub svi_spacing_m: f64,
    pub core_density_boost: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        let d = svi_coverage::synth::SynthConfig::default();
        SynthSection {
            seed: d.seed,
            block_rows: d.block_rows,
            block_cols: d.block_cols,
            building_density: d.building_density,
            road_width_m: d.road_width_m,
            building_size_min_m: d.building_size_range_m.0,
            building_size_max_m: d.building_size_range_m.1,
            svi_spacing_m: d.svi_spacing_m,
            core_density_boost: d.core_density_boost,
        }
    }
}

impl SynthSection {
    pub fn to_synth_config(&self) -> svi_coverage::synth::SynthConfig {
        svi_coverage::synth::SynthConfig {
            seed: self.seed,
            block_rows: self.block_rows,
            block_cols: self.block_cols,
            building_density: self.building_density,
            road_width_m: self.road_width_m,
            building_size_range_m: (self.building_size_min_m, self.building_size_max_m),
            svi_spacing_m: self.svi_spacing_m,
            core_density_boost: self.core_density_boost,
        }
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Config> {
        match path {
            None => Ok(Config::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
            }
        }
    }
}
