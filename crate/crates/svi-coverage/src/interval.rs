//! SVI collection-interval experiment: resample capture points along the
//! road network at a ladder of intervals, rerun the coverage pipeline for
//! each (interval, radius) pair, aggregate per-cell indicator means,
//! normalize each cell's series by its value at the smallest interval, fit
//! decline curves for completeness and frequency, and report the interval
//! where their derivatives first intersect.
//!
//! Resampling is start-anchored, so interval ladders whose members divide
//! each other produce nested SVI subsets; per-cell means are then provably
//! non-increasing in the interval, which the test suite leans on.

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;

use crate::engine::{build_index, compute_sightlines, SightLine, SviPoint};
use crate::error::GeometryError;
use crate::fit::{fit_curve, find_intersection, CurveKind, FittedCurve};
use crate::geometry::{sample_scene, Point2};
use crate::hex::{CellId, HexGrid};
use crate::indicators::{aggregate_building_coverage, building_cells};
use crate::scene::{Road, Scene};
use crate::segmentation::{apply_filter, MissingPolicy};

/// Scan parameters. Intervals must be strictly increasing and positive.
#[derive(Debug, Clone)]
pub struct IntervalScanConfig {
    pub intervals_m: Vec<f64>,
    pub radii_m: Vec<f64>,
    /// Segmentation threshold applied when the scene carries bins.
    pub threshold: f64,
    /// Snap tolerance; `None` uses half the current interval.
    pub snap_tolerance_m: Option<f64>,
    pub facade_spacing_m: f64,
    pub eps_m: f64,
    /// Restrict per-cell means to covered buildings (u_seen >= 1).
    pub covered_only: bool,
}

impl Default for IntervalScanConfig {
    fn default() -> Self {
        IntervalScanConfig {
            intervals_m: (10..=95).step_by(5).map(f64::from).collect(),
            radii_m: vec![30.0, 40.0, 50.0],
            threshold: 0.5,
            snap_tolerance_m: None,
            facade_spacing_m: 2.0,
            eps_m: 1e-6,
            covered_only: false,
        }
    }
}

impl IntervalScanConfig {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.intervals_m.is_empty() || self.radii_m.is_empty() {
            return Err(GeometryError::Degenerate(
                "scan needs at least one interval and one radius".into(),
            ));
        }
        for w in self.intervals_m.windows(2) {
            if w[1] <= w[0] {
                return Err(GeometryError::Degenerate(
                    "intervals must be strictly increasing".into(),
                ));
            }
        }
        if self.intervals_m[0] <= 0.0 {
            return Err(GeometryError::Degenerate("intervals must be positive".into()));
        }
        Ok(())
    }
}

/// Resamples positions along each polyline at arc offsets `0, d, 2d, ...`
/// anchored at the polyline start; the end point is included only when the
/// length is an exact multiple of `d` (within float dust).
pub fn resample_along_roads(roads: &[Road], interval: f64) -> Vec<Point2> {
    assert!(interval > 0.0, "interval must be positive");
    let mut out = Vec::new();
    for road in roads {
        let length = road.length();
        let mut k = 0u64;
        loop {
            let offset = k as f64 * interval;
            if offset > length + 1e-9 {
                break;
            }
            out.push(crate::geometry::point_at_offset(&road.points, offset.min(length)));
            k += 1;
        }
    }
    out
}

/// Uniform bucket grid for nearest-SVI queries.
struct PointGrid {
    cell: f64,
    min_x: f64,
    min_y: f64,
    nx: i64,
    ny: i64,
    buckets: Vec<Vec<u32>>,
}

impl PointGrid {
    fn build(points: &[Point2], cell: f64) -> Option<PointGrid> {
        let bb = crate::geometry::Aabb::of_points(points)?;
        let nx = (((bb.max_x - bb.min_x) / cell).floor() as i64) + 1;
        let ny = (((bb.max_y - bb.min_y) / cell).floor() as i64) + 1;
        let mut grid = PointGrid {
            cell,
            min_x: bb.min_x,
            min_y: bb.min_y,
            nx,
            ny,
            buckets: vec![Vec::new(); (nx * ny) as usize],
        };
        for (i, p) in points.iter().enumerate() {
            let ix = ((p.x - grid.min_x) / cell).floor() as i64;
            let iy = ((p.y - grid.min_y) / cell).floor() as i64;
            grid.buckets[(iy * nx + ix) as usize].push(i as u32);
        }
        Some(grid)
    }

    fn nearest_within(&self, points: &[Point2], query: Point2, tol: f64) -> Option<u32> {
        let reach = (tol / self.cell).ceil() as i64;
        let cx = ((query.x - self.min_x) / self.cell).floor() as i64;
        let cy = ((query.y - self.min_y) / self.cell).floor() as i64;
        let mut best: Option<(f64, u32)> = None;
        for iy in (cy - reach).max(0)..=(cy + reach).min(self.ny - 1) {
            for ix in (cx - reach).max(0)..=(cx + reach).min(self.nx - 1) {
                for &i in &self.buckets[(iy * self.nx + ix) as usize] {
                    let d = points[i as usize].distance(query);
                    if d <= tol {
                        let better = match best {
                            None => true,
                            Some((bd, bi)) => d < bd || (d == bd && i < bi),
                        };
                        if better {
                            best = Some((d, i));
                        }
                    }
                }
            }
        }
        best.map(|(_, i)| i)
    }
}

/// Snaps each resampled position to the nearest scene SVI point within
/// `tolerance` (ties to the earliest point in scene order), dropping
/// unmatched positions and deduplicating. Returns sorted SVI indices.
pub fn snap_to_svi(positions: &[Point2], svi_points: &[SviPoint], tolerance: f64) -> Vec<u32> {
    assert!(tolerance > 0.0, "tolerance must be positive");
    let coords: Vec<Point2> = svi_points.iter().map(|s| s.position).collect();
    let Some(grid) = PointGrid::build(&coords, tolerance.max(1.0)) else {
        return Vec::new();
    };
    let mut picked = HashSet::new();
    for pos in positions {
        if let Some(i) = grid.nearest_within(&coords, *pos, tolerance) {
            picked.insert(i);
        }
    }
    let mut out: Vec<u32> = picked.into_iter().collect();
    out.sort_unstable();
    out
}

/// Per-(cell, radius, interval) indicator means.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub cell: CellId,
    pub radius_m: f64,
    pub interval_m: f64,
    pub mean_coc_b: f64,
    pub mean_foc_b: f64,
}

/// Full scan output, sorted by (cell, radius, interval).
#[derive(Debug, Clone, Default)]
pub struct ScanResult {
    pub rows: Vec<ScanRow>,
}

impl ScanResult {
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            a.cell
                .cmp(&b.cell)
                .then(a.radius_m.total_cmp(&b.radius_m))
                .then(a.interval_m.total_cmp(&b.interval_m))
        });
    }

    /// Groups rows by (cell, radius), each group sorted by interval.
    pub fn series(&self) -> Vec<((CellId, f64), Vec<&ScanRow>)> {
        let mut groups: Vec<((CellId, f64), Vec<&ScanRow>)> = Vec::new();
        for row in &self.rows {
            match groups.last_mut() {
                Some(((cell, radius), members))
                    if *cell == row.cell && radius.total_cmp(&row.radius_m).is_eq() =>
                {
                    members.push(row)
                }
                _ => groups.push(((row.cell, row.radius_m), vec![row])),
            }
        }
        for (_, members) in &mut groups {
            members.sort_by(|a, b| a.interval_m.total_cmp(&b.interval_m));
        }
        groups
    }

    /// Normalized (coc, foc) value pairs for a series, relative to the
    /// values at its smallest interval; `None` when a base value is zero.
    pub fn normalize(series: &[&ScanRow]) -> Vec<(f64, Option<f64>, Option<f64>)> {
        let Some(first) = series.first() else {
            return Vec::new();
        };
        let base_coc = first.mean_coc_b;
        let base_foc = first.mean_foc_b;
        series
            .iter()
            .map(|row| {
                (
                    row.interval_m,
                    (base_coc > 0.0).then(|| row.mean_coc_b / base_coc),
                    (base_foc > 0.0).then(|| row.mean_foc_b / base_foc),
                )
            })
            .collect()
    }
}

/// Runs the resample -> snap -> sightline -> aggregate pipeline for every
/// (interval, radius) pair and aggregates per-fine-cell means over valid
/// buildings (zero-coverage buildings included unless `covered_only`).
/// Cells without buildings are omitted.
pub fn scan(scene: &Scene, config: &IntervalScanConfig, grid: &HexGrid) -> Result<ScanResult, GeometryError> {
    config.validate()?;
    let samples = sample_scene(&scene.footprints, config.facade_spacing_m)?;
    let cells = building_cells(&scene.footprints, grid);
    let max_radius = config.radii_m.iter().copied().fold(1.0f64, f64::max);
    let index = build_index(&scene.footprints, &samples, max_radius);

    let mut result = ScanResult::default();
    for &radius in &config.radii_m {
        for &interval in &config.intervals_m {
            let positions = resample_along_roads(&scene.roads, interval);
            let tolerance = config.snap_tolerance_m.unwrap_or(interval / 2.0);
            let subset = snap_to_svi(&positions, &scene.svi_points, tolerance);
            let mut lines: Vec<SightLine> = subset
                .par_iter()
                .map(|&svi_idx| {
                    compute_sightlines(
                        &index,
                        &scene.footprints,
                        &samples,
                        svi_idx,
                        &scene.svi_points[svi_idx as usize],
                        radius,
                        config.eps_m,
                    )
                })
                .collect::<Vec<_>>()
                .into_iter()
                .flatten()
                .collect();
            if let Some(bins) = &scene.bins {
                lines = apply_filter(
                    lines,
                    &scene.svi_points,
                    bins,
                    config.threshold,
                    MissingPolicy::Keep,
                );
            }
            let coverage = aggregate_building_coverage(&lines, &samples, &scene.footprints);
            let mut acc: BTreeMap<CellId, (f64, f64, u32)> = BTreeMap::new();
            for (cov, cell) in coverage.iter().zip(&cells) {
                if !cov.valid {
                    continue;
                }
                if config.covered_only && cov.u_seen == 0 {
                    continue;
                }
                let entry = acc.entry(*cell).or_insert((0.0, 0.0, 0));
                entry.0 += cov.coc_b;
                entry.1 += cov.foc_b;
                entry.2 += 1;
            }
            for (cell, (coc_sum, foc_sum, n)) in acc {
                result.rows.push(ScanRow {
                    cell,
                    radius_m: radius,
                    interval_m: interval,
                    mean_coc_b: coc_sum / n as f64,
                    mean_foc_b: foc_sum / n as f64,
                });
            }
        }
    }
    result.sort();
    Ok(result)
}

/// How the detection step chooses its fit family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitChoice {
    Kind(CurveKind),
    /// Fit polynomial(3), power, logarithm, and smoothing spline and keep
    /// the family with the best mean R^2 across the two series.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectStatus {
    Detected,
    /// Derivative curves coincide over the whole domain.
    Tie,
    NoCrossing,
    FitFailed,
    /// Base value at the minimum interval is zero; normalization skipped.
    UndefinedBase,
    TooFewPoints,
}

impl DetectStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            DetectStatus::Detected => "detected",
            DetectStatus::Tie => "tie",
            DetectStatus::NoCrossing => "no-crossing",
            DetectStatus::FitFailed => "fit-failed",
            DetectStatus::UndefinedBase => "undefined-base",
            DetectStatus::TooFewPoints => "too-few-points",
        }
    }
}

/// Per-(cell, radius) optimal-interval detection result.
#[derive(Debug, Clone)]
pub struct OptimalInterval {
    pub cell: CellId,
    pub radius_m: f64,
    pub fit_kind: Option<CurveKind>,
    pub r2_coc: Option<f64>,
    pub r2_foc: Option<f64>,
    pub optimal_m: Option<f64>,
    pub status: DetectStatus,
}

fn fit_pair(
    coc: &[(f64, f64)],
    foc: &[(f64, f64)],
    choice: FitChoice,
) -> Option<(CurveKind, FittedCurve, FittedCurve)> {
    match choice {
        FitChoice::Kind(kind) => {
            let c = fit_curve(coc, kind).ok()?;
            let f = fit_curve(foc, kind).ok()?;
            Some((kind, c, f))
        }
        FitChoice::Auto => {
            let candidates = [
                CurveKind::Polynomial(3),
                CurveKind::Power,
                CurveKind::Logarithm,
                CurveKind::SmoothingSpline,
            ];
            let mut best: Option<(f64, (CurveKind, FittedCurve, FittedCurve))> = None;
            for kind in candidates {
                let (Ok(c), Ok(f)) = (fit_curve(coc, kind), fit_curve(foc, kind)) else {
                    continue;
                };
                let score = (c.r2 + f.r2) / 2.0;
                if best.as_ref().is_none_or(|(s, _)| score > *s) {
                    best = Some((score, (kind, c, f)));
                }
            }
            best.map(|(_, triple)| triple)
        }
    }
}

/// Normalizes both indicator series, fits them, differentiates, and takes
/// the first derivative intersection inside the scanned interval range as
/// the optimal collection interval. Coincident derivative curves report
/// the minimum interval with a tie flag; a missing crossing is a valid
/// outcome.
pub fn detect_optimal_interval(scan: &ScanResult, choice: FitChoice) -> Vec<OptimalInterval> {
    scan.series()
        .into_iter()
        .map(|((cell, radius_m), rows)| {
            let normalized = ScanResult::normalize(&rows);
            let mut base = OptimalInterval {
                cell,
                radius_m,
                fit_kind: None,
                r2_coc: None,
                r2_foc: None,
                optimal_m: None,
                status: DetectStatus::UndefinedBase,
            };
            let coc: Vec<(f64, f64)> = normalized
                .iter()
                .filter_map(|(d, c, _)| c.map(|v| (*d, v)))
                .collect();
            let foc: Vec<(f64, f64)> = normalized
                .iter()
                .filter_map(|(d, _, f)| f.map(|v| (*d, v)))
                .collect();
            if coc.len() != normalized.len() || foc.len() != normalized.len() {
                return base;
            }
            if normalized.len() < 4 {
                base.status = DetectStatus::TooFewPoints;
                return base;
            }
            let Some((kind, c_curve, f_curve)) = fit_pair(&coc, &foc, choice) else {
                base.status = DetectStatus::FitFailed;
                return base;
            };
            base.fit_kind = Some(kind);
            base.r2_coc = Some(c_curve.r2);
            base.r2_foc = Some(f_curve.r2);
            let d_c = c_curve.derivative();
            let d_f = f_curve.derivative();
            let domain = (normalized[0].0, normalized[normalized.len() - 1].0);
            let crossing =
                find_intersection(|x| d_c.eval(x), |x| d_f.eval(x), domain, 0.1);
            match crossing {
                Some(x) => {
                    let mid = (domain.0 + domain.1) / 2.0;
                    let coincident = [domain.0, mid, domain.1]
                        .iter()
                        .all(|&p| d_c.eval(p) == d_f.eval(p));
                    base.optimal_m = Some(x);
                    base.status = if coincident {
                        DetectStatus::Tie
                    } else {
                        DetectStatus::Detected
                    };
                }
                None => base.status = DetectStatus::NoCrossing,
            }
            base
        })
        .collect()
}
