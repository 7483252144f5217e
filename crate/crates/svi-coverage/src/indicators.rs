//! The completeness/frequency coverage indicator system.
//!
//! Building level: CoC-B = U_seen / U_avail is the fraction of a building's
//! facade samples seen by at least one SVI point; FoC-B = V / P counts
//! visible sightlines (each SVI-sample pair independently) normalized by
//! perimeter. Area level: CoC-A is the fraction of buildings in a cell
//! reached at all; FoC-A is a type's share of all visible sightlines in a
//! cell. Road and population coverage complete the set.
//!
//! U_avail counts all boundary samples, not only street-facing ones:
//! samples on shared party walls are geometrically never visible, which
//! approximates a public-facade restriction without special-casing.

use std::collections::{BTreeMap, HashSet};

use crate::engine::{SightLine, SightStatus};
use crate::geometry::{circle_segment_interval, clip_segment_convex, FacadeSample, Footprint, Point2};
use crate::hex::{CellId, HexGrid};
use crate::scene::Road;

/// Per-building coverage record.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildingCoverage {
    /// Index into the scene footprint list.
    pub building: u32,
    pub id: String,
    pub type_label: String,
    /// Total facade samples on the building.
    pub u_avail: u32,
    /// Distinct samples seen by at least one visible sightline.
    pub u_seen: u32,
    /// Visible sightline count (same sample via different SVI counts
    /// separately).
    pub v: u64,
    pub perimeter_m: f64,
    pub coc_b: f64,
    pub foc_b: f64,
    /// Perimeter quintile within the analyzed scene, 1 (smallest) to 5.
    pub size_quintile: u8,
    /// False when boundary sampling produced no samples (degenerate);
    /// invalid buildings are excluded from means.
    pub valid: bool,
}

/// Aggregates resolved sightlines into per-building records. Buildings
/// with zero lines are still emitted with CoC-B = 0. Quintiles are ranked
/// by perimeter over the valid buildings of this scene, ties broken by
/// input order.
pub fn aggregate_building_coverage(
    lines: &[SightLine],
    samples: &[FacadeSample],
    footprints: &[Footprint],
) -> Vec<BuildingCoverage> {
    let n = footprints.len();
    let mut u_avail = vec![0u32; n];
    for s in samples {
        u_avail[s.building as usize] += 1;
    }
    let mut v = vec![0u64; n];
    let mut seen: Vec<HashSet<u32>> = vec![HashSet::new(); n];
    for line in lines {
        if line.status == SightStatus::Visible {
            let b = line.building as usize;
            v[b] += 1;
            seen[b].insert(line.sample_index);
        }
    }
    let mut out: Vec<BuildingCoverage> = footprints
        .iter()
        .enumerate()
        .map(|(i, fp)| {
            let avail = u_avail[i];
            let u_seen = seen[i].len() as u32;
            let valid = avail > 0;
            BuildingCoverage {
                building: i as u32,
                id: fp.id.clone(),
                type_label: fp.type_label.clone(),
                u_avail: avail,
                u_seen,
                v: v[i],
                perimeter_m: fp.perimeter(),
                coc_b: if valid { u_seen as f64 / avail as f64 } else { 0.0 },
                foc_b: v[i] as f64 / fp.perimeter(),
                size_quintile: 0,
                valid,
            }
        })
        .collect();
    assign_quintiles(&mut out);
    out
}

/// Ranks valid buildings by perimeter and cuts at the 20/40/60/80
/// percentiles.
fn assign_quintiles(buildings: &mut [BuildingCoverage]) {
    let mut order: Vec<usize> = (0..buildings.len()).filter(|&i| buildings[i].valid).collect();
    order.sort_by(|&a, &b| {
        buildings[a]
            .perimeter_m
            .partial_cmp(&buildings[b].perimeter_m)
            .unwrap()
            .then(a.cmp(&b))
    });
    let n = order.len();
    for (rank, &i) in order.iter().enumerate() {
        buildings[i].size_quintile = (1 + (rank * 5) / n).min(5) as u8;
    }
}

/// Fraction of buildings with at least one sample seen. `None` for an
/// empty cell.
pub fn coc_a(buildings_in_cell: &[&BuildingCoverage]) -> Option<f64> {
    let valid: Vec<_> = buildings_in_cell.iter().filter(|b| b.valid).collect();
    if valid.is_empty() {
        return None;
    }
    let seen = valid.iter().filter(|b| b.u_seen >= 1).count();
    Some(seen as f64 / valid.len() as f64)
}

/// Share of the cell's visible sightlines landing on buildings of
/// `type_label` (raw counts, perimeter-unweighted). `None` when the cell
/// has no visible sightlines at all.
pub fn foc_a(buildings_in_cell: &[&BuildingCoverage], type_label: &str) -> Option<f64> {
    let total: u64 = buildings_in_cell.iter().map(|b| b.v).sum();
    if total == 0 {
        return None;
    }
    let of_type: u64 = buildings_in_cell
        .iter()
        .filter(|b| b.type_label == type_label)
        .map(|b| b.v)
        .sum();
    Some(of_type as f64 / total as f64)
}

/// Per-cell aggregate of the building records assigned to it.
#[derive(Debug, Clone)]
pub struct AreaCoverage {
    pub cell: CellId,
    pub n_total: u32,
    pub n_seen: u32,
    pub coc_a: Option<f64>,
    pub mean_coc_b: Option<f64>,
    /// Raw visible-line sums per type.
    pub v_by_type: BTreeMap<String, u64>,
    /// Defined only when the cell has visible sightlines; values sum to 1.
    pub foc_a_by_type: BTreeMap<String, f64>,
    pub footprint_count_by_type: BTreeMap<String, u32>,
}

/// Groups building records by cell (one CellId per record, parallel
/// slices) and computes the area-level indicators. Invalid buildings are
/// excluded. Output is sorted by cell id.
pub fn aggregate_area_coverage(
    buildings: &[BuildingCoverage],
    cells: &[CellId],
) -> Vec<AreaCoverage> {
    assert_eq!(buildings.len(), cells.len());
    let mut by_cell: BTreeMap<CellId, Vec<&BuildingCoverage>> = BTreeMap::new();
    for (b, cell) in buildings.iter().zip(cells) {
        if b.valid {
            by_cell.entry(*cell).or_default().push(b);
        }
    }
    by_cell
        .into_iter()
        .map(|(cell, members)| {
            let n_total = members.len() as u32;
            let n_seen = members.iter().filter(|b| b.u_seen >= 1).count() as u32;
            let mean_coc_b = (n_total > 0)
                .then(|| members.iter().map(|b| b.coc_b).sum::<f64>() / n_total as f64);
            let mut v_by_type: BTreeMap<String, u64> = BTreeMap::new();
            let mut count_by_type: BTreeMap<String, u32> = BTreeMap::new();
            for b in &members {
                *v_by_type.entry(b.type_label.clone()).or_insert(0) += b.v;
                *count_by_type.entry(b.type_label.clone()).or_insert(0) += 1;
            }
            let total_v: u64 = v_by_type.values().sum();
            let foc_a_by_type = if total_v > 0 {
                v_by_type
                    .iter()
                    .map(|(t, &v)| (t.clone(), v as f64 / total_v as f64))
                    .collect()
            } else {
                BTreeMap::new()
            };
            AreaCoverage {
                cell,
                n_total,
                n_seen,
                coc_a: coc_a(&members),
                mean_coc_b,
                v_by_type,
                foc_a_by_type,
                footprint_count_by_type: count_by_type,
            }
        })
        .collect()
}

/// Assigns each footprint to the fine cell containing its centroid.
pub fn building_cells(footprints: &[Footprint], grid: &HexGrid) -> Vec<CellId> {
    footprints.iter().map(|fp| grid.cell_of(fp.centroid())).collect()
}

/// Per-cell road coverage completeness.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadCoverage {
    pub cell: CellId,
    pub covered_m: f64,
    pub total_m: f64,
    /// `None` when the cell contains no road length.
    pub completeness: Option<f64>,
}

/// Length of the parts of segment (a, b), as parameter intervals, within
/// `radius` of any SVI point; intervals are merged before measuring.
fn covered_intervals(a: Point2, b: Point2, svi: &[Point2], radius: f64) -> Vec<(f64, f64)> {
    let mut intervals: Vec<(f64, f64)> = svi
        .iter()
        .filter_map(|&c| circle_segment_interval(a, b, c, radius))
        .collect();
    intervals.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (t0, t1) in intervals {
        match merged.last_mut() {
            Some(last) if t0 <= last.1 => last.1 = last.1.max(t1),
            _ => merged.push((t0, t1)),
        }
    }
    merged
}

/// Exact per-road covered length within `radius` of any SVI point, with no
/// grid split. The analytic building block behind [`road_coverage`].
pub fn covered_length(roads: &[Road], svi: &[Point2], radius: f64) -> f64 {
    let mut total = 0.0;
    for road in roads {
        for w in road.points.windows(2) {
            let len = w[0].distance(w[1]);
            for (t0, t1) in covered_intervals(w[0], w[1], svi, radius) {
                total += (t1 - t0) * len;
            }
        }
    }
    total
}

/// Road-network coverage per fine cell: covered length is the union of
/// road portions within `buffer_radius` of any SVI point, clipped exactly
/// against each hexagon. Cells without road length are omitted.
pub fn road_coverage(
    roads: &[Road],
    svi: &[Point2],
    buffer_radius: f64,
    grid: &HexGrid,
) -> Vec<RoadCoverage> {
    let mut acc: BTreeMap<CellId, (f64, f64)> = BTreeMap::new();
    for road in roads {
        for w in road.points.windows(2) {
            let (a, b) = (w[0], w[1]);
            let len = a.distance(b);
            if len == 0.0 {
                continue;
            }
            let covered = covered_intervals(a, b, svi, buffer_radius);
            for cell in candidate_cells(a, b, grid) {
                let hex = grid.polygon(&cell);
                let Some((c0, c1)) = clip_segment_convex(a, b, &hex) else {
                    continue;
                };
                let entry = acc.entry(cell).or_insert((0.0, 0.0));
                entry.1 += (c1 - c0) * len;
                for &(t0, t1) in &covered {
                    let lo = t0.max(c0);
                    let hi = t1.min(c1);
                    if lo < hi {
                        entry.0 += (hi - lo) * len;
                    }
                }
            }
        }
    }
    acc.into_iter()
        .filter(|(_, (_, total))| *total > 0.0)
        .map(|(cell, (covered, total))| RoadCoverage {
            cell,
            covered_m: covered,
            total_m: total,
            completeness: Some(covered / total),
        })
        .collect()
}

/// Cells whose polygon could intersect segment (a, b): the axial
/// neighborhood of the segment's bounding box, expanded by one ring.
fn candidate_cells(a: Point2, b: Point2, grid: &HexGrid) -> Vec<CellId> {
    let ca = grid.cell_of(a);
    let cb = grid.cell_of(b);
    let q0 = ca.q.min(cb.q) - 1;
    let q1 = ca.q.max(cb.q) + 1;
    let r0 = ca.r.min(cb.r) - 1;
    let r1 = ca.r.max(cb.r) + 1;
    let mut out = Vec::new();
    for q in q0..=q1 {
        for r in r0..=r1 {
            out.push(CellId {
                level: grid.level,
                q,
                r,
            });
        }
    }
    out
}

/// Aggregate population coverage estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationCoverage {
    pub total_covered: f64,
    pub total: f64,
    /// `None` when the total population is zero.
    pub ratio: Option<f64>,
}

/// Sums per-cell residential completeness times population. Cells without
/// a defined residential CoC-A contribute no covered persons but count in
/// the total.
pub fn population_coverage(cells: &[(Option<f64>, f64)]) -> PopulationCoverage {
    let mut covered = 0.0;
    let mut total = 0.0;
    for &(coc_a_r, pop) in cells {
        total += pop;
        covered += coc_a_r.unwrap_or(0.0) * pop;
    }
    PopulationCoverage {
        total_covered: covered,
        total,
        ratio: (total > 0.0).then(|| covered / total),
    }
}

/// Row of the grouped coverage summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub group: String,
    pub n: u32,
    /// Proportion of the group's buildings with at least one sample seen.
    pub covered_share: f64,
    /// Mean CoC-B over all buildings of the group.
    pub mean_coc_b_all: f64,
    /// Mean CoC-B over covered buildings only; `None` when none covered.
    pub mean_coc_b_covered: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    Type,
    PerimeterQuintile,
}

/// Grouped coverage shares and means (by type or by perimeter quintile).
/// Rows are sorted by group key; invalid buildings are skipped.
pub fn coverage_summary_by_group(
    buildings: &[BuildingCoverage],
    grouping: Grouping,
) -> Vec<GroupSummary> {
    let mut groups: BTreeMap<String, Vec<&BuildingCoverage>> = BTreeMap::new();
    for b in buildings.iter().filter(|b| b.valid) {
        let key = match grouping {
            Grouping::Type => b.type_label.clone(),
            Grouping::PerimeterQuintile => format!("Q{}", b.size_quintile),
        };
        groups.entry(key).or_default().push(b);
    }
    groups
        .into_iter()
        .map(|(group, members)| {
            let n = members.len() as u32;
            let covered: Vec<_> = members.iter().filter(|b| b.u_seen >= 1).collect();
            GroupSummary {
                group,
                n,
                covered_share: covered.len() as f64 / n as f64,
                mean_coc_b_all: members.iter().map(|b| b.coc_b).sum::<f64>() / n as f64,
                mean_coc_b_covered: (!covered.is_empty()).then(|| {
                    covered.iter().map(|b| b.coc_b).sum::<f64>() / covered.len() as f64
                }),
            }
        })
        .collect()
}
