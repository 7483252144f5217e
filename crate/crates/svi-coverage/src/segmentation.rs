//! Image-content validation of geometric sightlines.
//!
//! The upstream vision stage summarizes each panoramic capture into twelve
//! 30-degree bins of per-class pixel areas (Cityscapes label ids). A bin
//! whose building proportion falls below the threshold cannot confirm a
//! facade, so every geometrically visible sightline falling in it is
//! demoted to `segmentation_filtered`. The filter only ever demotes
//! visible lines; occluded and candidate lines pass through untouched.

use std::collections::HashMap;

use crate::engine::{SightLine, SightStatus, SviPoint};

/// Number of equal-angle panorama bins.
pub const BIN_COUNT: usize = 12;

/// Cityscapes class ids counted as building content: building, wall, fence.
pub const BUILDING_CLASS_IDS: [u8; 3] = [11, 12, 13];

/// Cityscapes class ids excluded from the proportion denominator:
/// void (0-6), flat (7-10), and sky (23).
pub fn is_excluded_class(class_id: u8) -> bool {
    class_id <= 10 || class_id == 23
}

/// Per-class pixel areas for the twelve bins of one SVI capture. Bin 0
/// starts at the capture heading; bins advance clockwise in 30-degree
/// steps.
#[derive(Debug, Clone, Default)]
pub struct SegmentationBins {
    pub bins: [HashMap<u8, f64>; BIN_COUNT],
}

impl SegmentationBins {
    pub fn add(&mut self, bin_index: usize, class_id: u8, area: f64) {
        *self.bins[bin_index].entry(class_id).or_insert(0.0) += area;
    }
}

/// Building proportion of one bin per the class-area formula:
/// sum of building/wall/fence areas over all non-void, non-flat, non-sky
/// areas. `None` when the denominator is zero (no vertical content).
pub fn building_proportion(bin: &HashMap<u8, f64>) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (&class_id, &area) in bin {
        if is_excluded_class(class_id) {
            continue;
        }
        den += area;
        if BUILDING_CLASS_IDS.contains(&class_id) {
            num += area;
        }
    }
    (den > 0.0).then(|| num / den)
}

/// Maps an absolute sightline bearing into the panorama bin of a capture
/// with the given heading: floor(((bearing - heading) mod 360) / 30).
pub fn bin_of_bearing(line_bearing: f64, heading: f64) -> usize {
    let rel = (line_bearing - heading).rem_euclid(360.0);
    ((rel / 30.0).floor() as usize).min(BIN_COUNT - 1)
}

/// What to do with sightlines whose SVI has no segmentation record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissingPolicy {
    /// Keep geometric visibility as-is (geometric-only behaviour; default).
    Keep,
    /// Demote to `segmentation_filtered`.
    Drop,
}

impl MissingPolicy {
    pub fn parse(s: &str) -> Option<MissingPolicy> {
        match s {
            "keep" => Some(MissingPolicy::Keep),
            "drop" => Some(MissingPolicy::Drop),
            _ => None,
        }
    }
}

/// Demotes visible sightlines whose panorama bin shows a building
/// proportion strictly below `threshold` (or undefined). Lines for SVI ids
/// absent from `bins_by_svi` follow `missing`. Idempotent; never touches
/// non-visible lines.
pub fn apply_filter(
    mut lines: Vec<SightLine>,
    svi_points: &[SviPoint],
    bins_by_svi: &HashMap<u32, SegmentationBins>,
    threshold: f64,
    missing: MissingPolicy,
) -> Vec<SightLine> {
    // Proportions are per (svi, bin); compute each once.
    let mut proportions: HashMap<u32, [Option<f64>; BIN_COUNT]> = HashMap::new();
    for (&svi, bins) in bins_by_svi {
        let mut p = [None; BIN_COUNT];
        for (i, bin) in bins.bins.iter().enumerate() {
            p[i] = building_proportion(bin);
        }
        proportions.insert(svi, p);
    }
    for line in &mut lines {
        if line.status != SightStatus::Visible {
            continue;
        }
        match proportions.get(&line.svi) {
            None => {
                if missing == MissingPolicy::Drop {
                    line.status = SightStatus::SegmentationFiltered;
                }
            }
            Some(p) => {
                let heading = svi_points[line.svi as usize].heading;
                let bin = bin_of_bearing(line.bearing_deg, heading);
                let passes = matches!(p[bin], Some(prop) if prop >= threshold);
                if !passes {
                    line.status = SightStatus::SegmentationFiltered;
                }
            }
        }
    }
    lines
}
