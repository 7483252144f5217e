//! Spatially indexed sightline computation.
//!
//! For each SVI point the engine finds facade samples within the analysis
//! radius and resolves occlusion against every footprint that could block
//! the ray. A uniform grid is used for candidate retrieval: ray lengths are
//! bounded by the analysis radius, so fixed-cell lookup beats tree indexes
//! and parallelizes trivially. [`brute_force_sightlines`] implements the
//! same contract with a quadratic scan and serves as the verification
//! oracle for the indexed path.

use rayon::prelude::*;

use crate::geometry::{bearing, segment_blocked, Aabb, FacadeSample, Footprint, Point2};
use crate::hex::HexGrid;

/// An SVI capture location.
#[derive(Debug, Clone)]
pub struct SviPoint {
    pub id: String,
    pub position: Point2,
    /// Camera heading, degrees clockwise from north, normalized to [0, 360).
    pub heading: f64,
    /// Opaque capture metadata (timestamp, source), carried through outputs.
    pub capture_tag: Option<String>,
}

impl SviPoint {
    pub fn new(id: impl Into<String>, position: Point2, heading: f64) -> Self {
        SviPoint {
            id: id.into(),
            position,
            heading: heading.rem_euclid(360.0) % 360.0,
            capture_tag: None,
        }
    }
}

/// Resolution state of a sightline. Transitions only move forward:
/// candidate -> occluded | visible, visible -> segmentation_filtered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SightStatus {
    Candidate,
    Occluded,
    SegmentationFiltered,
    Visible,
}

impl SightStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SightStatus::Candidate => "candidate",
            SightStatus::Occluded => "occluded",
            SightStatus::SegmentationFiltered => "segmentation_filtered",
            SightStatus::Visible => "visible",
        }
    }

    pub fn parse(s: &str) -> Option<SightStatus> {
        Some(match s {
            "candidate" => SightStatus::Candidate,
            "occluded" => SightStatus::Occluded,
            "segmentation_filtered" => SightStatus::SegmentationFiltered,
            "visible" => SightStatus::Visible,
            _ => return None,
        })
    }
}

/// One SVI-to-facade-sample ray. Indices reference the scene's SVI and
/// footprint lists; `sample_index` is the per-building sample ordinal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SightLine {
    pub svi: u32,
    pub building: u32,
    pub sample_index: u32,
    pub bearing_deg: f64,
    pub distance_m: f64,
    pub status: SightStatus,
}

impl SightLine {
    /// Sort/equality key used for deterministic output and oracle
    /// comparison.
    pub fn key(&self) -> (u32, u32, u32) {
        (self.svi, self.building, self.sample_index)
    }
}

/// Uniform-grid spatial index over footprints and facade samples.
///
/// Footprints are registered in every cell their bounding box touches, so a
/// query over the cells covering a region returns every footprint whose box
/// intersects it. Query results are independent of the cell size.
#[derive(Debug, Clone)]
pub struct SceneIndex {
    cell_size: f64,
    origin: Point2,
    nx: usize,
    ny: usize,
    footprint_cells: Vec<Vec<u32>>,
    sample_cells: Vec<Vec<u32>>,
    footprint_bboxes: Vec<Aabb>,
}

impl SceneIndex {
    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    fn cell_range(&self, bb: &Aabb) -> Option<(usize, usize, usize, usize)> {
        if self.nx == 0 || self.ny == 0 {
            return None;
        }
        let max_x = self.origin.x + self.nx as f64 * self.cell_size;
        let max_y = self.origin.y + self.ny as f64 * self.cell_size;
        if bb.max_x < self.origin.x || bb.max_y < self.origin.y || bb.min_x > max_x || bb.min_y > max_y
        {
            return None;
        }
        let ix0 = (((bb.min_x - self.origin.x) / self.cell_size).floor() as i64).clamp(0, self.nx as i64 - 1) as usize;
        let iy0 = (((bb.min_y - self.origin.y) / self.cell_size).floor() as i64).clamp(0, self.ny as i64 - 1) as usize;
        let ix1 = (((bb.max_x - self.origin.x) / self.cell_size).floor() as i64).clamp(0, self.nx as i64 - 1) as usize;
        let iy1 = (((bb.max_y - self.origin.y) / self.cell_size).floor() as i64).clamp(0, self.ny as i64 - 1) as usize;
        Some((ix0, iy0, ix1, iy1))
    }

    /// Footprint indices whose bounding box may intersect `bb` (deduplicated,
    /// sorted). A conservative superset filtered by actual bbox overlap.
    pub fn footprints_in(&self, bb: &Aabb) -> Vec<u32> {
        let mut out = Vec::new();
        if let Some((ix0, iy0, ix1, iy1)) = self.cell_range(bb) {
            for iy in iy0..=iy1 {
                for ix in ix0..=ix1 {
                    for &f in &self.footprint_cells[iy * self.nx + ix] {
                        if self.footprint_bboxes[f as usize].intersects(bb) {
                            out.push(f);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Sample indices within `radius` of `center` (exact distance filter),
    /// sorted by flat sample index.
    pub fn samples_in_disc(&self, samples: &[FacadeSample], center: Point2, radius: f64) -> Vec<u32> {
        let bb = Aabb {
            min_x: center.x - radius,
            min_y: center.y - radius,
            max_x: center.x + radius,
            max_y: center.y + radius,
        };
        let mut out = Vec::new();
        if let Some((ix0, iy0, ix1, iy1)) = self.cell_range(&bb) {
            let r_sq = radius * radius;
            for iy in iy0..=iy1 {
                for ix in ix0..=ix1 {
                    for &s in &self.sample_cells[iy * self.nx + ix] {
                        if samples[s as usize].position.distance_sq(center) <= r_sq {
                            out.push(s);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Builds the uniform grid over the scene's bounding box. An empty scene
/// yields a valid empty index. Default cell size: the analysis radius.
pub fn build_index(footprints: &[Footprint], samples: &[FacadeSample], cell_size: f64) -> SceneIndex {
    assert!(cell_size > 0.0, "cell_size must be positive");
    let mut bbox: Option<Aabb> = None;
    for fp in footprints {
        bbox = Some(match bbox {
            Some(bb) => bb.union(fp.bbox()),
            None => *fp.bbox(),
        });
    }
    if let Some(sb) = Aabb::of_points(&samples.iter().map(|s| s.position).collect::<Vec<_>>()) {
        bbox = Some(match bbox {
            Some(bb) => bb.union(&sb),
            None => sb,
        });
    }
    let Some(bbox) = bbox else {
        return SceneIndex {
            cell_size,
            origin: Point2::new(0.0, 0.0),
            nx: 0,
            ny: 0,
            footprint_cells: Vec::new(),
            sample_cells: Vec::new(),
            footprint_bboxes: Vec::new(),
        };
    };
    let nx = (((bbox.max_x - bbox.min_x) / cell_size).floor() as usize) + 1;
    let ny = (((bbox.max_y - bbox.min_y) / cell_size).floor() as usize) + 1;
    let mut index = SceneIndex {
        cell_size,
        origin: Point2::new(bbox.min_x, bbox.min_y),
        nx,
        ny,
        footprint_cells: vec![Vec::new(); nx * ny],
        sample_cells: vec![Vec::new(); nx * ny],
        footprint_bboxes: footprints.iter().map(|f| *f.bbox()).collect(),
    };
    for (i, fp) in footprints.iter().enumerate() {
        if let Some((ix0, iy0, ix1, iy1)) = index.cell_range(fp.bbox()) {
            for iy in iy0..=iy1 {
                for ix in ix0..=ix1 {
                    index.footprint_cells[iy * index.nx + ix].push(i as u32);
                }
            }
        }
    }
    for (i, s) in samples.iter().enumerate() {
        let bb = Aabb::of_segment(s.position, s.position);
        if let Some((ix0, iy0, _, _)) = index.cell_range(&bb) {
            index.sample_cells[iy0 * index.nx + ix0].push(i as u32);
        }
    }
    index
}

fn resolve_line(
    svi_idx: u32,
    svi: &SviPoint,
    sample: &FacadeSample,
    blocked: bool,
) -> SightLine {
    let distance = svi.position.distance(sample.position);
    let bearing_deg = bearing(svi.position, sample.position).unwrap_or(0.0);
    SightLine {
        svi: svi_idx,
        building: sample.building,
        sample_index: sample.index,
        bearing_deg,
        distance_m: distance,
        status: if blocked {
            SightStatus::Occluded
        } else {
            SightStatus::Visible
        },
    }
}

/// Computes one sightline per facade sample within `radius` of the SVI
/// point. A line is occluded iff `segment_blocked` holds against any
/// footprint whose bounding box intersects the ray's (including the
/// sample's host building); otherwise it is visible. Results are sorted by
/// (building, sample_index).
///
/// An SVI point standing inside a footprint resolves to all-occluded lines;
/// one exactly on a boundary observes normally.
pub fn compute_sightlines(
    index: &SceneIndex,
    footprints: &[Footprint],
    samples: &[FacadeSample],
    svi_idx: u32,
    svi: &SviPoint,
    radius: f64,
    eps: f64,
) -> Vec<SightLine> {
    let candidates = index.samples_in_disc(samples, svi.position, radius);
    // Every ray stays inside the disc's bounding box, so one occluder
    // fetch covers all rays of this SVI point; per-ray pruning is then a
    // plain bbox test over that short list.
    let disc_bb = Aabb {
        min_x: svi.position.x - radius,
        min_y: svi.position.y - radius,
        max_x: svi.position.x + radius,
        max_y: svi.position.y + radius,
    }
    .expanded(eps);
    let occluders = index.footprints_in(&disc_bb);
    let mut out = Vec::with_capacity(candidates.len());
    for s in candidates {
        let sample = &samples[s as usize];
        let ray_bb = Aabb::of_segment(svi.position, sample.position).expanded(eps);
        let blocked = occluders.iter().any(|&f| {
            footprints[f as usize].bbox().intersects(&ray_bb)
                && segment_blocked(svi.position, sample.position, &footprints[f as usize], eps)
        });
        out.push(resolve_line(svi_idx, svi, sample, blocked));
    }
    out
}

/// Verification oracle: identical contract to [`compute_sightlines`] but
/// scans every footprint for every ray, with no index.
pub fn brute_force_sightlines(
    footprints: &[Footprint],
    samples: &[FacadeSample],
    svi_idx: u32,
    svi: &SviPoint,
    radius: f64,
    eps: f64,
) -> Vec<SightLine> {
    let r_sq = radius * radius;
    let mut out = Vec::new();
    for sample in samples {
        if sample.position.distance_sq(svi.position) > r_sq {
            continue;
        }
        let blocked = footprints
            .iter()
            .any(|fp| segment_blocked(svi.position, sample.position, fp, eps));
        out.push(resolve_line(svi_idx, svi, sample, blocked));
    }
    out
}

/// Runs the indexed engine over every SVI point, in parallel, concatenating
/// per-SVI results in input order.
pub fn all_sightlines(
    index: &SceneIndex,
    footprints: &[Footprint],
    samples: &[FacadeSample],
    svi_points: &[SviPoint],
    radius: f64,
    eps: f64,
) -> Vec<SightLine> {
    svi_points
        .par_iter()
        .enumerate()
        .map(|(i, svi)| compute_sightlines(index, footprints, samples, i as u32, svi, radius, eps))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Chunked variant of [`all_sightlines`]: SVI points are partitioned by
/// coarse hex cell and each chunk is resolved against only the footprints
/// and samples within the cell's buffer. With `buffer >= radius` the result
/// is identical to the whole-scene sweep; the chunking bounds per-task
/// working sets on large scenes.
pub fn all_sightlines_chunked(
    footprints: &[Footprint],
    samples: &[FacadeSample],
    svi_points: &[SviPoint],
    grid: &HexGrid,
    buffer: f64,
    radius: f64,
    eps: f64,
) -> Vec<SightLine> {
    let buffer = buffer.max(radius);
    let mut chunks: std::collections::BTreeMap<crate::hex::CellId, Vec<u32>> =
        std::collections::BTreeMap::new();
    for (i, svi) in svi_points.iter().enumerate() {
        chunks.entry(grid.cell_of(svi.position)).or_default().push(i as u32);
    }
    let chunks: Vec<_> = chunks.into_iter().collect();
    let mut lines: Vec<SightLine> = chunks
        .par_iter()
        .map(|(cell, members)| {
            let hex = grid.polygon(cell);
            let hex_bb = Aabb::of_points(&hex).expect("hex corners");
            let fp_subset: Vec<Footprint> = footprints
                .iter()
                .filter(|fp| fp.bbox().intersects(&hex_bb.expanded(buffer)))
                .cloned()
                .collect();
            let sample_subset: Vec<FacadeSample> = samples
                .iter()
                .filter(|s| grid.distance_to_cell(cell, s.position) <= buffer)
                .copied()
                .collect();
            let index = build_index(&fp_subset, &sample_subset, radius.max(1.0));
            let mut chunk_lines = Vec::new();
            for &svi_idx in members {
                chunk_lines.extend(compute_sightlines(
                    &index,
                    &fp_subset,
                    &sample_subset,
                    svi_idx,
                    &svi_points[svi_idx as usize],
                    radius,
                    eps,
                ));
            }
            chunk_lines
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    lines.sort_unstable_by_key(|l| l.key());
    lines
}

/// True when the SVI position lies strictly inside any footprint; such
/// points yield all-occluded sightlines and are flagged in run reports.
pub fn svi_inside_footprint(footprints: &[Footprint], position: Point2) -> bool {
    footprints.iter().any(|fp| fp.contains_strict(position))
}
