//! Deterministic synthetic city generation for experiments and
//! verification.
//!
//! [`generate_city`] lays out a rectangular grid of street blocks with
//! jittered rectangular buildings on a lot raster, boundary roads, and SVI
//! points resampled along every road; identical configs produce identical
//! scenes. [`random_scene`] produces loose random footprint/SVI clouds for
//! randomized oracle checks, and [`lattice_scene`] produces rectangles on
//! an even integer lattice so that translation and permutation invariants
//! hold exactly in floating point.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::SviPoint;
use crate::error::SceneError;
use crate::geometry::{bearing, Footprint, Point2};
use crate::interval::resample_along_roads;
use crate::scene::{Road, Scene};

/// Lots per block side; block side = 4 lots.
const LOTS_PER_SIDE: usize = 4;
/// Lot size as a multiple of the maximum building size.
const LOT_FACTOR: f64 = 1.25;

/// Synthetic city parameters. The scene is a deterministic function of the
/// whole config, including the seed.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub seed: u64,
    pub block_rows: usize,
    pub block_cols: usize,
    /// Probability that a lot carries a building, in [0, 1].
    pub building_density: f64,
    pub road_width_m: f64,
    /// Uniform building side-length range (min, max), meters.
    pub building_size_range_m: (f64, f64),
    pub svi_spacing_m: f64,
    /// Density multiplier for the central third of blocks (clamped to 1).
    pub core_density_boost: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 42,
            block_rows: 4,
            block_cols: 4,
            building_density: 0.4,
            road_width_m: 12.0,
            building_size_range_m: (8.0, 14.0),
            svi_spacing_m: 10.0,
            core_density_boost: 1.0,
        }
    }
}

impl SynthConfig {
    pub fn lot_size(&self) -> f64 {
        self.building_size_range_m.1 * LOT_FACTOR
    }

    pub fn block_side(&self) -> f64 {
        LOTS_PER_SIDE as f64 * self.lot_size()
    }

    pub fn pitch(&self) -> f64 {
        self.block_side() + self.road_width_m
    }

    fn validate(&self) -> Result<(), SceneError> {
        let invalid = |message: &str| SceneError::Parse {
            path: "<synth config>".into(),
            message: message.into(),
        };
        if self.block_rows == 0 || self.block_cols == 0 {
            return Err(invalid("city needs at least one block"));
        }
        let (lo, hi) = self.building_size_range_m;
        if !(lo > 0.0 && hi >= lo) {
            return Err(invalid("building size range must be positive and ordered"));
        }
        if !(0.0..=1.0).contains(&self.building_density) {
            return Err(invalid("building density must be in [0, 1]"));
        }
        if self.svi_spacing_m <= 0.0 || self.road_width_m <= 0.0 {
            return Err(invalid("spacings must be positive"));
        }
        if self.core_density_boost < 0.0 {
            return Err(invalid("core density boost must be non-negative"));
        }
        Ok(())
    }

    /// Central-third block predicate (all blocks when the grid is too
    /// small to have a periphery).
    pub fn is_core_block(&self, row: usize, col: usize) -> bool {
        let core = |i: usize, n: usize| {
            let lo = n / 3;
            let hi = n - n / 3;
            i >= lo && i < hi
        };
        core(row, self.block_rows) && core(col, self.block_cols)
    }
}

/// Generates the deterministic block-grid city.
pub fn generate_city(config: &SynthConfig) -> Result<Scene, SceneError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (size_min, size_max) = config.building_size_range_m;
    let lot = config.lot_size();
    let pitch = config.pitch();
    let rw = config.road_width_m;
    let width = config.block_cols as f64 * pitch;
    let height = config.block_rows as f64 * pitch;

    let mut footprints = Vec::new();
    let mut building_no = 0usize;
    for row in 0..config.block_rows {
        for col in 0..config.block_cols {
            let density = if config.is_core_block(row, col) {
                (config.building_density * config.core_density_boost).min(1.0)
            } else {
                config.building_density
            };
            let x0 = col as f64 * pitch + rw / 2.0;
            let y0 = row as f64 * pitch + rw / 2.0;
            for ly in 0..LOTS_PER_SIDE {
                for lx in 0..LOTS_PER_SIDE {
                    if rng.gen::<f64>() >= density {
                        continue;
                    }
                    let w = rng.gen_range(size_min..=size_max);
                    let h = rng.gen_range(size_min..=size_max);
                    let cx0 = x0 + (lx as f64 + 0.5) * lot;
                    let cy0 = y0 + (ly as f64 + 0.5) * lot;
                    let jx = ((lot - w) / 2.0 - 0.25).max(0.0);
                    let jy = ((lot - h) / 2.0 - 0.25).max(0.0);
                    let cx = cx0 + rng.gen_range(-jx..=jx);
                    let cy = cy0 + rng.gen_range(-jy..=jy);
                    let type_label = draw_type(&mut rng);
                    let fp = Footprint::new(
                        format!("b{building_no:05}"),
                        type_label,
                        vec![
                            Point2::new(cx - w / 2.0, cy - h / 2.0),
                            Point2::new(cx + w / 2.0, cy - h / 2.0),
                            Point2::new(cx + w / 2.0, cy + h / 2.0),
                            Point2::new(cx - w / 2.0, cy + h / 2.0),
                        ],
                    )
                    .expect("generated rectangles are valid");
                    footprints.push(fp);
                    building_no += 1;
                }
            }
        }
    }

    let mut roads = Vec::new();
    for row in 0..=config.block_rows {
        let y = row as f64 * pitch;
        roads.push(Road {
            id: format!("r_h{row:02}"),
            points: vec![Point2::new(0.0, y), Point2::new(width, y)],
        });
    }
    for col in 0..=config.block_cols {
        let x = col as f64 * pitch;
        roads.push(Road {
            id: format!("r_v{col:02}"),
            points: vec![Point2::new(x, 0.0), Point2::new(x, height)],
        });
    }

    let mut svi_points = Vec::new();
    let mut svi_no = 0usize;
    for road in &roads {
        let positions = resample_along_roads(std::slice::from_ref(road), config.svi_spacing_m);
        for pos in positions {
            // Heading follows the direction of travel along the road.
            let heading = heading_on_road(road, pos);
            svi_points.push(SviPoint::new(format!("s{svi_no:05}"), pos, heading));
            svi_no += 1;
        }
    }

    Ok(Scene {
        footprints,
        roads,
        svi_points,
        bins: None,
        population: None,
        crs_note: "synthetic planar meters".to_string(),
    })
}

fn heading_on_road(road: &Road, pos: Point2) -> f64 {
    // Bearing of the segment whose span contains the position; the last
    // segment handles the terminal point.
    for w in road.points.windows(2) {
        let on_span = crate::geometry::point_segment_distance(pos, w[0], w[1]) < 1e-6;
        if on_span && w[0] != w[1] {
            return bearing(w[0], w[1]).unwrap_or(0.0);
        }
    }
    0.0
}

const TYPE_WEIGHTS: &[(&str, f64)] = &[
    ("Residential", 0.58),
    ("Retail", 0.10),
    ("Industry and Business", 0.10),
    ("Community Services", 0.06),
    ("Mixed Use", 0.05),
    ("Recreation and Leisure", 0.04),
    ("Transport", 0.03),
    ("Unclassified", 0.04),
];

fn draw_type(rng: &mut impl Rng) -> String {
    let roll: f64 = rng.gen();
    let mut acc = 0.0;
    for (label, w) in TYPE_WEIGHTS {
        acc += w;
        if roll < acc {
            return label.to_string();
        }
    }
    TYPE_WEIGHTS.last().unwrap().0.to_string()
}

/// Random footprint/SVI cloud for randomized verification: axis-aligned
/// rectangles and star-shaped polygons scattered (and possibly
/// overlapping) over roughly 600x600 m, with SVI points around them.
/// Deterministic per seed; sizes are drawn up to the given caps.
pub fn random_scene(seed: u64, max_footprints: usize, max_svi: usize) -> (Vec<Footprint>, Vec<SviPoint>) {
    let mut rng = StdRng::seed_from_u64(seed);
    let n_fp = rng.gen_range(1..=max_footprints.max(1));
    let n_svi = rng.gen_range(1..=max_svi.max(1));
    let mut footprints = Vec::with_capacity(n_fp);
    for i in 0..n_fp {
        let cx = rng.gen_range(0.0..600.0);
        let cy = rng.gen_range(0.0..600.0);
        let ring = if rng.gen_bool(0.7) {
            let w = rng.gen_range(4.0..20.0);
            let h = rng.gen_range(4.0..20.0);
            vec![
                Point2::new(cx - w / 2.0, cy - h / 2.0),
                Point2::new(cx + w / 2.0, cy - h / 2.0),
                Point2::new(cx + w / 2.0, cy + h / 2.0),
                Point2::new(cx - w / 2.0, cy + h / 2.0),
            ]
        } else {
            // Star-shaped: jittered angles strictly increasing keeps the
            // ring simple even when it is not convex.
            let m = rng.gen_range(5..=9);
            let step = std::f64::consts::TAU / m as f64;
            (0..m)
                .map(|k| {
                    let theta = k as f64 * step + rng.gen_range(0.0..step * 0.5);
                    let radius = rng.gen_range(3.0..12.0);
                    Point2::new(cx + radius * theta.cos(), cy + radius * theta.sin())
                })
                .collect()
        };
        let fp = Footprint::new(format!("f{i:04}"), draw_type(&mut rng), ring)
            .expect("generated rings are simple");
        footprints.push(fp);
    }
    let svi = (0..n_svi)
        .map(|i| {
            let p = Point2::new(rng.gen_range(-50.0..650.0), rng.gen_range(-50.0..650.0));
            SviPoint::new(format!("v{i:04}"), p, rng.gen_range(0.0..360.0))
        })
        .collect();
    (footprints, svi)
}

/// Rectangles with even integer corners plus integer-coordinate SVI
/// points: all facade samples land on integer coordinates (2 m spacing),
/// so orientation predicates are exact and stay exact under integer
/// translation.
pub fn lattice_scene(seed: u64, max_footprints: usize, max_svi: usize) -> (Vec<Footprint>, Vec<SviPoint>) {
    let mut rng = StdRng::seed_from_u64(seed);
    let n_fp = rng.gen_range(1..=max_footprints.max(1));
    let n_svi = rng.gen_range(1..=max_svi.max(1));
    let mut footprints = Vec::with_capacity(n_fp);
    for i in 0..n_fp {
        let x0 = 2 * rng.gen_range(0..150i64);
        let y0 = 2 * rng.gen_range(0..150i64);
        let w = 2 * rng.gen_range(2..8i64);
        let h = 2 * rng.gen_range(2..8i64);
        let fp = Footprint::new(
            format!("f{i:04}"),
            "Residential",
            vec![
                Point2::new(x0 as f64, y0 as f64),
                Point2::new((x0 + w) as f64, y0 as f64),
                Point2::new((x0 + w) as f64, (y0 + h) as f64),
                Point2::new(x0 as f64, (y0 + h) as f64),
            ],
        )
        .expect("lattice rectangles are valid");
        footprints.push(fp);
    }
    let svi = (0..n_svi)
        .map(|i| {
            let p = Point2::new(
                rng.gen_range(-20..320i64) as f64,
                rng.gen_range(-20..320i64) as f64,
            );
            SviPoint::new(format!("v{i:04}"), p, 0.0)
        })
        .collect();
    (footprints, svi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{footprints_to_geojson, roads_to_geojson, svi_to_geojson};

    #[test]
    fn identical_config_identical_scene() {
        let config = SynthConfig {
            seed: 42,
            block_rows: 2,
            block_cols: 2,
            building_density: 0.5,
            ..SynthConfig::default()
        };
        let a = generate_city(&config).unwrap();
        let b = generate_city(&config).unwrap();
        assert_eq!(footprints_to_geojson(&a.footprints), footprints_to_geojson(&b.footprints));
        assert_eq!(roads_to_geojson(&a.roads), roads_to_geojson(&b.roads));
        assert_eq!(svi_to_geojson(&a.svi_points), svi_to_geojson(&b.svi_points));
    }

    #[test]
    fn zero_density_means_no_buildings() {
        let config = SynthConfig {
            building_density: 0.0,
            ..SynthConfig::default()
        };
        let scene = generate_city(&config).unwrap();
        assert!(scene.footprints.is_empty());
        assert!(!scene.roads.is_empty());
        assert!(!scene.svi_points.is_empty());
    }

    #[test]
    fn zero_blocks_is_an_error() {
        let config = SynthConfig {
            block_rows: 0,
            ..SynthConfig::default()
        };
        assert!(generate_city(&config).is_err());
    }

    #[test]
    fn core_boost_roughly_doubles_central_density() {
        // Mean core/peripheral per-block building-count ratio over 10
        // seeds should sit near the boost factor.
        let mut core_total = 0.0f64;
        let mut peri_total = 0.0f64;
        for seed in 0..10 {
            let config = SynthConfig {
                seed,
                block_rows: 6,
                block_cols: 6,
                building_density: 0.4,
                core_density_boost: 2.0,
                ..SynthConfig::default()
            };
            let scene = generate_city(&config).unwrap();
            let pitch = config.pitch();
            let mut core_blocks = 0.0;
            let mut peri_blocks = 0.0;
            for r in 0..6 {
                for c in 0..6 {
                    if config.is_core_block(r, c) {
                        core_blocks += 1.0;
                    } else {
                        peri_blocks += 1.0;
                    }
                }
            }
            for fp in &scene.footprints {
                let c = fp.centroid();
                let col = (c.x / pitch).floor() as usize;
                let row = (c.y / pitch).floor() as usize;
                if config.is_core_block(row, col) {
                    core_total += 1.0 / core_blocks;
                } else {
                    peri_total += 1.0 / peri_blocks;
                }
            }
        }
        let ratio = core_total / peri_total;
        assert!(
            (ratio - 2.0).abs() <= 0.4,
            "core/peripheral ratio {ratio} outside 2.0 +- 0.4"
        );
    }

    #[test]
    fn svi_headings_follow_roads() {
        let scene = generate_city(&SynthConfig::default()).unwrap();
        // Horizontal roads run east (90), vertical roads run north (0).
        assert!(scene
            .svi_points
            .iter()
            .all(|s| s.heading == 0.0 || s.heading == 90.0));
    }

    #[test]
    fn random_scene_is_reproducible_and_valid() {
        let (fp1, svi1) = random_scene(7, 40, 30);
        let (fp2, svi2) = random_scene(7, 40, 30);
        assert_eq!(fp1.len(), fp2.len());
        assert_eq!(svi1.len(), svi2.len());
        for (a, b) in fp1.iter().zip(&fp2) {
            assert_eq!(a.exterior(), b.exterior());
        }
    }
}
