//! Command implementations. Each command loads what it needs, computes
//! deterministically, writes its tables under `--out`, and drops a
//! manifest.json describing the run.
//!
//! Commands that consume an upstream table (`indicators` needs
//! sightlines, `grid-agg` needs buildings, `optimal-interval` needs the
//! scan) reuse the file from the output directory when it exists and
//! recompute it otherwise; the two paths produce identical results.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde_json::json;

use svi_coverage::engine::{
    all_sightlines_chunked, svi_inside_footprint, SightLine, SviPoint,
};
use svi_coverage::fit::CurveKind;
use svi_coverage::geometry::{sample_scene, FacadeSample, Point2};
use svi_coverage::hex::{CellId, GridLevel, HexGrid};
use svi_coverage::indicators::{
    aggregate_area_coverage, aggregate_building_coverage, coverage_summary_by_group,
    population_coverage, road_coverage, AreaCoverage, BuildingCoverage, Grouping,
};
use svi_coverage::interval::{
    detect_optimal_interval, resample_along_roads, scan, snap_to_svi, FitChoice,
    IntervalScanConfig, ScanResult,
};
use svi_coverage::scene::{
    footprints_to_geojson, load_scene, roads_to_geojson, svi_to_geojson, LoadReport, Scene,
};
use svi_coverage::segmentation::{apply_filter, MissingPolicy};
use svi_coverage::stats::{gi_star_hex, rank_extremes, GiStar};
use svi_coverage::tables;
use svi_coverage::typemap::TypeMap;

use crate::config::Config;
use crate::manifest::Manifest;

pub const FOOTPRINTS_FILE: &str = "footprints.geojson";
pub const ROADS_FILE: &str = "roads.geojson";
pub const SVI_FILE: &str = "svi_points.geojson";
pub const BINS_FILE: &str = "segmentation_bins.csv";
pub const POPULATION_FILE: &str = "population.csv";

/// Scene + load context shared by most commands.
pub struct LoadedScene {
    pub scene: Scene,
    pub report: LoadReport,
    pub paths: Vec<PathBuf>,
}

pub fn load_scene_dir(dir: &Path) -> anyhow::Result<LoadedScene> {
    let footprints = dir.join(FOOTPRINTS_FILE);
    let roads = dir.join(ROADS_FILE);
    let svi = dir.join(SVI_FILE);
    let bins = dir.join(BINS_FILE);
    let population = dir.join(POPULATION_FILE);
    let bins_opt = bins.exists().then_some(bins.as_path());
    let population_opt = population.exists().then_some(population.as_path());
    let (scene, report) = load_scene(
        &footprints,
        &roads,
        &svi,
        bins_opt,
        population_opt,
        &TypeMap::default(),
    )
    .with_context(|| format!("loading scene from {}", dir.display()))?;
    let mut paths = vec![footprints, roads, svi];
    paths.extend(bins_opt.map(Path::to_path_buf));
    paths.extend(population_opt.map(Path::to_path_buf));
    for line in report.warnings() {
        eprintln!("warning: {line}");
    }
    Ok(LoadedScene {
        scene,
        report,
        paths,
    })
}

fn ensure_out_dir(out: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

fn write_output(manifest: &mut Manifest, path: &Path, content: &str) -> anyhow::Result<()> {
    std::fs::write(path, content).with_context(|| format!("writing {}", path.display()))?;
    manifest.record_output(path);
    Ok(())
}

fn fine_grid(config: &Config, grid_edge: Option<f64>) -> HexGrid {
    HexGrid::new(
        grid_edge.unwrap_or(config.grid.fine_edge_m),
        Point2::new(config.grid.origin_x, config.grid.origin_y),
        GridLevel::Fine,
    )
}

fn coarse_grid(config: &Config) -> HexGrid {
    HexGrid::new(
        config.grid.coarse_edge_m,
        Point2::new(config.grid.origin_x, config.grid.origin_y),
        GridLevel::Coarse,
    )
}

fn missing_policy(config: &Config) -> anyhow::Result<MissingPolicy> {
    MissingPolicy::parse(&config.coverage.missing_bins_policy).ok_or_else(|| {
        anyhow::anyhow!(
            "invalid missing_bins_policy '{}' (expected keep|drop)",
            config.coverage.missing_bins_policy
        )
    })
}

/// Resolved parameters for one coverage computation.
pub struct CoverageSettings {
    pub radius_m: f64,
    pub facade_spacing_m: f64,
    pub eps_m: f64,
    pub threshold: f64,
    pub missing: MissingPolicy,
    pub geometric_only: bool,
    /// Resample scene SVI along roads at this interval before analysis.
    pub resample_interval_m: Option<f64>,
}

impl CoverageSettings {
    pub fn resolve(
        config: &Config,
        radius: Option<f64>,
        interval: Option<f64>,
        threshold: Option<f64>,
        geometric_only: bool,
    ) -> anyhow::Result<CoverageSettings> {
        Ok(CoverageSettings {
            radius_m: radius.unwrap_or(config.coverage.radius_m),
            facade_spacing_m: config.coverage.facade_spacing_m,
            eps_m: config.coverage.eps_m,
            threshold: threshold.unwrap_or(config.coverage.segmentation_threshold),
            missing: missing_policy(config)?,
            geometric_only,
            resample_interval_m: interval,
        })
    }

    fn parameters_json(&self) -> serde_json::Value {
        json!({
            "radius_m": self.radius_m,
            "facade_spacing_m": self.facade_spacing_m,
            "eps_m": self.eps_m,
            "segmentation_threshold": self.threshold,
            "geometric_only": self.geometric_only,
            "resample_interval_m": self.resample_interval_m,
        })
    }
}

/// The coverage stage: optional road-based resampling of the SVI set,
/// chunked sightline computation, optional segmentation filtering.
pub fn compute_coverage(
    scene: &Scene,
    settings: &CoverageSettings,
    config: &Config,
    manifest: &mut Manifest,
) -> anyhow::Result<(Vec<FacadeSample>, Vec<SightLine>, Vec<u32>)> {
    let samples = sample_scene(&scene.footprints, settings.facade_spacing_m)
        .context("sampling facades")?;
    let svi_subset: Vec<u32> = match settings.resample_interval_m {
        None => (0..scene.svi_points.len() as u32).collect(),
        Some(interval) => {
            let positions = resample_along_roads(&scene.roads, interval);
            snap_to_svi(&positions, &scene.svi_points, interval / 2.0)
        }
    };
    let subset_points: Vec<SviPoint> = svi_subset
        .iter()
        .map(|&i| scene.svi_points[i as usize].clone())
        .collect();

    manifest.start_stage("sightlines");
    let mut lines = all_sightlines_chunked(
        &scene.footprints,
        &samples,
        &subset_points,
        &coarse_grid(config),
        config.grid.buffer_m,
        settings.radius_m,
        settings.eps_m,
    );
    // Chunked indices refer to the subset; map back to scene indices.
    for line in &mut lines {
        line.svi = svi_subset[line.svi as usize];
    }
    manifest.start_stage("segmentation_filter");
    match (&scene.bins, settings.geometric_only) {
        (Some(bins), false) => {
            lines = apply_filter(
                lines,
                &scene.svi_points,
                bins,
                settings.threshold,
                settings.missing,
            );
        }
        (Some(_), true) => {
            manifest.add_warnings(["segmentation bins present but ignored (geometric-only mode)".to_string()]);
        }
        (None, _) => {
            manifest.add_warnings(["no segmentation bins: geometric-only coverage".to_string()]);
        }
    }
    manifest.finish_stage();

    let inside: Vec<String> = subset_points
        .iter()
        .filter(|s| svi_inside_footprint(&scene.footprints, s.position))
        .map(|s| format!("SVI '{}' lies inside a footprint; its sightlines are all occluded", s.id))
        .collect();
    manifest.add_warnings(inside);
    Ok((samples, lines, svi_subset))
}

/// Buildings table: reuse `<out>/buildings.csv` when present, otherwise
/// run the full chain from the scene.
fn obtain_buildings(
    loaded: &LoadedScene,
    config: &Config,
    out: &Path,
    manifest: &mut Manifest,
) -> anyhow::Result<Vec<BuildingCoverage>> {
    let path = out.join("buildings.csv");
    if path.exists() {
        manifest.record_input(&path);
        let text = std::fs::read_to_string(&path)?;
        return Ok(tables::read_buildings(&text, &path.display().to_string())?);
    }
    let settings = CoverageSettings::resolve(config, None, None, None, false)?;
    let (samples, lines, _) = compute_coverage(&loaded.scene, &settings, config, manifest)?;
    Ok(aggregate_building_coverage(
        &lines,
        &samples,
        &loaded.scene.footprints,
    ))
}

fn footprint_index(scene: &Scene) -> HashMap<&str, usize> {
    scene
        .footprints
        .iter()
        .enumerate()
        .map(|(i, f)| (f.id.as_str(), i))
        .collect()
}

/// Fine cell of each building record (by footprint centroid), resolved
/// through ids so table order never matters.
fn cells_for_buildings(
    scene: &Scene,
    buildings: &[BuildingCoverage],
    grid: &HexGrid,
) -> anyhow::Result<Vec<CellId>> {
    let by_id = footprint_index(scene);
    buildings
        .iter()
        .map(|b| {
            let idx = by_id
                .get(b.id.as_str())
                .with_context(|| format!("building '{}' not present in the scene", b.id))?;
            Ok(grid.cell_of(scene.footprints[*idx].centroid()))
        })
        .collect()
}

pub struct CellTables {
    pub areas: Vec<AreaCoverage>,
    pub rows: Vec<tables::CellRow>,
    pub gi_by_metric: Vec<(String, Vec<GiStar>)>,
}

/// Assembles the merged per-cell table: area indicators, road coverage,
/// and Gi* z-scores for CoC-A, mean CoC-B, and road completeness.
pub fn assemble_cells(
    scene: &Scene,
    buildings: &[BuildingCoverage],
    grid: &HexGrid,
    road_buffer_m: f64,
    z_threshold: f64,
) -> anyhow::Result<CellTables> {
    let cells = cells_for_buildings(scene, buildings, grid)?;
    let areas = aggregate_area_coverage(buildings, &cells);
    let svi_positions: Vec<Point2> = scene.svi_points.iter().map(|s| s.position).collect();
    let roads = road_coverage(&scene.roads, &svi_positions, road_buffer_m, grid);

    let mut rows: BTreeMap<CellId, tables::CellRow> = BTreeMap::new();
    let blank = |cell: CellId| tables::CellRow {
        cell,
        n_total: 0,
        n_seen: 0,
        coc_a: None,
        mean_coc_b: None,
        road_completeness: None,
        gi_z_coc_a: None,
        gi_z_mean_coc_b: None,
        gi_z_road: None,
    };
    for a in &areas {
        let row = rows.entry(a.cell).or_insert_with(|| blank(a.cell));
        row.n_total = a.n_total;
        row.n_seen = a.n_seen;
        row.coc_a = a.coc_a;
        row.mean_coc_b = a.mean_coc_b;
    }
    for r in &roads {
        let row = rows.entry(r.cell).or_insert_with(|| blank(r.cell));
        row.road_completeness = r.completeness;
    }

    let mut gi_by_metric = Vec::new();
    let mut score_metric = |name: &str,
                            extract: fn(&tables::CellRow) -> Option<f64>,
                            store: fn(&mut tables::CellRow, Option<f64>)| {
        let values: Vec<(CellId, f64)> = rows
            .values()
            .filter_map(|r| extract(r).map(|v| (r.cell, v)))
            .collect();
        let scores = gi_star_hex(&values, grid, z_threshold);
        for g in &scores {
            let row = rows.get_mut(&g.cell).expect("scored cells come from rows");
            store(row, g.z);
        }
        gi_by_metric.push((name.to_string(), scores));
    };
    score_metric("coc_a", |r| r.coc_a, |r, z| r.gi_z_coc_a = z);
    score_metric("mean_coc_b", |r| r.mean_coc_b, |r, z| r.gi_z_mean_coc_b = z);
    score_metric("road_completeness", |r| r.road_completeness, |r, z| r.gi_z_road = z);
    Ok(CellTables {
        areas,
        rows: rows.into_values().collect(),
        gi_by_metric,
    })
}

// ---------------------------------------------------------------------
// Command entry points
// ---------------------------------------------------------------------

pub fn cmd_synth(config: &Config, out: &Path, seed: Option<u64>) -> anyhow::Result<()> {
    ensure_out_dir(out)?;
    let mut section = config.synth.clone();
    if let Some(seed) = seed {
        section.seed = seed;
    }
    let synth_config = section.to_synth_config();
    let mut manifest = Manifest::new(
        "synth",
        serde_json::to_value(json!({
            "seed": synth_config.seed,
            "block_rows": synth_config.block_rows,
            "block_cols": synth_config.block_cols,
            "building_density": synth_config.building_density,
            "road_width_m": synth_config.road_width_m,
            "building_size_range_m": [synth_config.building_size_range_m.0, synth_config.building_size_range_m.1],
            "svi_spacing_m": synth_config.svi_spacing_m,
            "core_density_boost": synth_config.core_density_boost,
        }))?,
    );
    manifest.start_stage("generate");
    let scene = svi_coverage::synth::generate_city(&synth_config)?;
    manifest.start_stage("write");
    write_output(
        &mut manifest,
        &out.join(FOOTPRINTS_FILE),
        &footprints_to_geojson(&scene.footprints),
    )?;
    write_output(&mut manifest, &out.join(ROADS_FILE), &roads_to_geojson(&scene.roads))?;
    write_output(&mut manifest, &out.join(SVI_FILE), &svi_to_geojson(&scene.svi_points))?;
    eprintln!(
        "synth: {} buildings, {} roads, {} SVI points",
        scene.footprints.len(),
        scene.roads.len(),
        scene.svi_points.len()
    );
    manifest.write(out)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_coverage(
    config: &Config,
    scene_dir: &Path,
    out: &Path,
    radius: Option<f64>,
    interval: Option<f64>,
    threshold: Option<f64>,
    geometric_only: bool,
) -> anyhow::Result<()> {
    ensure_out_dir(out)?;
    let settings = CoverageSettings::resolve(config, radius, interval, threshold, geometric_only)?;
    let mut manifest = Manifest::new("coverage", settings.parameters_json());
    let loaded = load_scene_dir(scene_dir)?;
    for p in &loaded.paths {
        manifest.record_input(p);
    }
    manifest.add_warnings(loaded.report.warnings());
    let (samples, lines, svi_subset) = compute_coverage(&loaded.scene, &settings, config, &mut manifest)?;
    manifest.start_stage("write");
    write_output(
        &mut manifest,
        &out.join("sightlines.csv"),
        &tables::write_sightlines(&lines, &loaded.scene.svi_points, &loaded.scene.footprints),
    )?;
    eprintln!(
        "coverage: {} SVI points, {} samples, {} sightlines ({} visible)",
        svi_subset.len(),
        samples.len(),
        lines.len(),
        lines
            .iter()
            .filter(|l| l.status == svi_coverage::engine::SightStatus::Visible)
            .count()
    );
    manifest.write(out)?;
    Ok(())
}

pub fn cmd_indicators(
    config: &Config,
    scene_dir: &Path,
    out: &Path,
    sightlines: Option<&Path>,
) -> anyhow::Result<()> {
    ensure_out_dir(out)?;
    let mut manifest = Manifest::new(
        "indicators",
        json!({"facade_spacing_m": config.coverage.facade_spacing_m}),
    );
    let loaded = load_scene_dir(scene_dir)?;
    for p in &loaded.paths {
        manifest.record_input(p);
    }
    let default_path = out.join("sightlines.csv");
    let source = sightlines.or(default_path.exists().then_some(default_path.as_path()));
    manifest.start_stage("aggregate");
    let (samples, lines) = match source {
        Some(path) => {
            manifest.record_input(path);
            let text =
                std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let lines = tables::read_sightlines(
                &text,
                &path.display().to_string(),
                &loaded.scene.svi_points,
                &loaded.scene.footprints,
            )?;
            let samples = sample_scene(&loaded.scene.footprints, config.coverage.facade_spacing_m)?;
            (samples, lines)
        }
        None => {
            let settings = CoverageSettings::resolve(config, None, None, None, false)?;
            let (samples, lines, _) = compute_coverage(&loaded.scene, &settings, config, &mut manifest)?;
            (samples, lines)
        }
    };
    let coverage = aggregate_building_coverage(&lines, &samples, &loaded.scene.footprints);
    manifest.start_stage("write");
    write_output(&mut manifest, &out.join("buildings.csv"), &tables::write_buildings(&coverage))?;
    eprintln!(
        "indicators: {} buildings, {} covered",
        coverage.len(),
        coverage.iter().filter(|b| b.u_seen > 0).count()
    );
    manifest.write(out)?;
    Ok(())
}

pub fn cmd_grid_agg(
    config: &Config,
    scene_dir: &Path,
    out: &Path,
    grid_edge: Option<f64>,
) -> anyhow::Result<()> {
    ensure_out_dir(out)?;
    let grid = fine_grid(config, grid_edge);
    let mut manifest = Manifest::new(
        "grid-agg",
        json!({
            "grid_edge_m": grid.edge_m,
            "road_buffer_m": config.roads.buffer_m,
            "z_threshold": config.hotspot.z_threshold,
        }),
    );
    let loaded = load_scene_dir(scene_dir)?;
    for p in &loaded.paths {
        manifest.record_input(p);
    }
    let buildings = obtain_buildings(&loaded, config, out, &mut manifest)?;
    manifest.start_stage("aggregate");
    let cells = assemble_cells(
        &loaded.scene,
        &buildings,
        &grid,
        config.roads.buffer_m,
        config.hotspot.z_threshold,
    )?;
    manifest.start_stage("write");
    write_output(&mut manifest, &out.join("cells.csv"), &tables::write_cells(&cells.rows))?;
    write_output(
        &mut manifest,
        &out.join("cells.geojson"),
        &tables::cells_to_geojson(&cells.rows, &grid),
    )?;
    let foc_rows: Vec<(CellId, String, u64, Option<f64>)> = cells
        .areas
        .iter()
        .flat_map(|a| {
            a.v_by_type.iter().map(|(t, v)| {
                (a.cell, t.clone(), *v, a.foc_a_by_type.get(t).copied())
            })
        })
        .collect();
    write_output(&mut manifest, &out.join("foc_a.csv"), &tables::write_foc_a(&foc_rows))?;
    eprintln!("grid-agg: {} cells", cells.rows.len());
    manifest.write(out)?;
    Ok(())
}

pub fn cmd_road_coverage(
    config: &Config,
    scene_dir: &Path,
    out: &Path,
    grid_edge: Option<f64>,
) -> anyhow::Result<()> {
    ensure_out_dir(out)?;
    let grid = fine_grid(config, grid_edge);
    let mut manifest = Manifest::new(
        "road-coverage",
        json!({"grid_edge_m": grid.edge_m, "road_buffer_m": config.roads.buffer_m}),
    );
    let loaded = load_scene_dir(scene_dir)?;
    for p in &loaded.paths {
        manifest.record_input(p);
    }
    manifest.start_stage("compute");
    let svi_positions: Vec<Point2> = loaded.scene.svi_points.iter().map(|s| s.position).collect();
    let rows = road_coverage(&loaded.scene.roads, &svi_positions, config.roads.buffer_m, &grid);
    manifest.start_stage("write");
    write_output(
        &mut manifest,
        &out.join("road_coverage.csv"),
        &tables::write_road_coverage(&rows),
    )?;
    eprintln!("road-coverage: {} cells", rows.len());
    manifest.write(out)?;
    Ok(())
}

pub fn cmd_hotspot(
    config: &Config,
    scene_dir: &Path,
    out: &Path,
    grid_edge: Option<f64>,
) -> anyhow::Result<()> {
    ensure_out_dir(out)?;
    let grid = fine_grid(config, grid_edge);
    let mut manifest = Manifest::new(
        "hotspot",
        json!({
            "grid_edge_m": grid.edge_m,
            "z_threshold": config.hotspot.z_threshold,
            "rank_percent": config.hotspot.rank_percent,
        }),
    );
    let loaded = load_scene_dir(scene_dir)?;
    for p in &loaded.paths {
        manifest.record_input(p);
    }
    let buildings = obtain_buildings(&loaded, config, out, &mut manifest)?;
    manifest.start_stage("gi_star");
    let cells = assemble_cells(
        &loaded.scene,
        &buildings,
        &grid,
        config.roads.buffer_m,
        config.hotspot.z_threshold,
    )?;
    let mut rows: Vec<(String, GiStar, bool, bool)> = Vec::new();
    for (metric, scores) in &cells.gi_by_metric {
        let (top, bottom) = rank_extremes(scores, config.hotspot.rank_percent);
        let top: BTreeSet<CellId> = top.into_iter().collect();
        let bottom: BTreeSet<CellId> = bottom.into_iter().collect();
        for g in scores {
            rows.push((
                metric.clone(),
                g.clone(),
                top.contains(&g.cell),
                bottom.contains(&g.cell),
            ));
        }
    }
    manifest.start_stage("write");
    write_output(&mut manifest, &out.join("hotspots.csv"), &tables::write_hotspots(&rows))?;
    eprintln!("hotspot: {} rows", rows.len());
    manifest.write(out)?;
    Ok(())
}

pub fn cmd_bias_regression(
    config: &Config,
    scene_dir: &Path,
    out: &Path,
    grid_edge: Option<f64>,
) -> anyhow::Result<()> {
    ensure_out_dir(out)?;
    let grid = fine_grid(config, grid_edge);
    let mut manifest = Manifest::new("bias-regression", json!({"grid_edge_m": grid.edge_m}));
    let loaded = load_scene_dir(scene_dir)?;
    for p in &loaded.paths {
        manifest.record_input(p);
    }
    let buildings = obtain_buildings(&loaded, config, out, &mut manifest)?;
    manifest.start_stage("regress");
    let cells = cells_for_buildings(&loaded.scene, &buildings, &grid)?;
    let areas = aggregate_area_coverage(&buildings, &cells);

    let mut types: BTreeSet<String> = BTreeSet::new();
    for a in &areas {
        types.extend(a.footprint_count_by_type.keys().cloned());
    }
    // One regression per type: x = the type's footprint count share in a
    // cell, y = its FoC-A share, over cells with any visible sightlines.
    let mut rows: Vec<tables::RegressionRow> = Vec::new();
    for t in types {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for a in &areas {
            if a.foc_a_by_type.is_empty() {
                continue;
            }
            let count = a.footprint_count_by_type.get(&t).copied().unwrap_or(0);
            xs.push(count as f64 / a.n_total as f64);
            ys.push(a.foc_a_by_type.get(&t).copied().unwrap_or(0.0));
        }
        let fit = svi_coverage::stats::ols_fit(&xs, &ys)
            .ok()
            .map(|f| (f.slope, f.intercept, f.pearson_r));
        rows.push((t, xs.len(), fit));
    }
    manifest.start_stage("write");
    write_output(&mut manifest, &out.join("regression.csv"), &tables::write_regression(&rows))?;
    eprintln!("bias-regression: {} types", rows.len());
    manifest.write(out)?;
    Ok(())
}

pub fn cmd_interval_scan(
    config: &Config,
    scene_dir: &Path,
    out: &Path,
    grid_edge: Option<f64>,
    threshold: Option<f64>,
    geometric_only: bool,
) -> anyhow::Result<()> {
    ensure_out_dir(out)?;
    let grid = fine_grid(config, grid_edge);
    let scan_config = IntervalScanConfig {
        intervals_m: config.intervals.intervals_m.clone(),
        radii_m: config.intervals.radii_m.clone(),
        threshold: threshold.unwrap_or(config.coverage.segmentation_threshold),
        snap_tolerance_m: config.intervals.snap_tolerance_m,
        facade_spacing_m: config.coverage.facade_spacing_m,
        eps_m: config.coverage.eps_m,
        covered_only: config.intervals.covered_only,
    };
    let mut manifest = Manifest::new(
        "interval-scan",
        json!({
            "grid_edge_m": grid.edge_m,
            "intervals_m": scan_config.intervals_m,
            "radii_m": scan_config.radii_m,
            "threshold": scan_config.threshold,
            "covered_only": scan_config.covered_only,
            "geometric_only": geometric_only,
        }),
    );
    let mut loaded = load_scene_dir(scene_dir)?;
    for p in &loaded.paths {
        manifest.record_input(p);
    }
    if geometric_only {
        loaded.scene.bins = None;
    }
    manifest.start_stage("scan");
    let result = scan(&loaded.scene, &scan_config, &grid)?;
    manifest.start_stage("write");
    write_output(&mut manifest, &out.join("scan.csv"), &tables::write_scan(&result))?;
    eprintln!("interval-scan: {} rows", result.rows.len());
    manifest.write(out)?;
    Ok(())
}

fn parse_fit_choice(s: &str) -> anyhow::Result<FitChoice> {
    if s == "auto" {
        return Ok(FitChoice::Auto);
    }
    CurveKind::parse(s)
        .map(FitChoice::Kind)
        .ok_or_else(|| anyhow::anyhow!("unknown fit kind '{s}' (expected smoothing-spline|polynomial<d>|power|logarithm|auto)"))
}

pub fn cmd_optimal_interval(
    config: &Config,
    scene_dir: &Path,
    out: &Path,
    scan_path: Option<&Path>,
    fit: Option<&str>,
    grid_edge: Option<f64>,
) -> anyhow::Result<()> {
    ensure_out_dir(out)?;
    let fit_name = fit.unwrap_or(&config.intervals.fit_kind);
    let choice = parse_fit_choice(fit_name)?;
    let mut manifest = Manifest::new("optimal-interval", json!({"fit_kind": fit_name}));
    let default_path = out.join("scan.csv");
    let source = scan_path.or(default_path.exists().then_some(default_path.as_path()));
    let result: ScanResult = match source {
        Some(path) => {
            manifest.record_input(path);
            let text =
                std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            tables::read_scan(&text, &path.display().to_string())?
        }
        None => {
            let loaded = load_scene_dir(scene_dir)?;
            for p in &loaded.paths {
                manifest.record_input(p);
            }
            let grid = fine_grid(config, grid_edge);
            let scan_config = IntervalScanConfig {
                intervals_m: config.intervals.intervals_m.clone(),
                radii_m: config.intervals.radii_m.clone(),
                threshold: config.coverage.segmentation_threshold,
                snap_tolerance_m: config.intervals.snap_tolerance_m,
                facade_spacing_m: config.coverage.facade_spacing_m,
                eps_m: config.coverage.eps_m,
                covered_only: config.intervals.covered_only,
            };
            manifest.start_stage("scan");
            scan(&loaded.scene, &scan_config, &grid)?
        }
    };
    manifest.start_stage("detect");
    let optima = detect_optimal_interval(&result, choice);
    manifest.start_stage("write");
    write_output(&mut manifest, &out.join("optima.csv"), &tables::write_optima(&optima))?;
    let detected = optima
        .iter()
        .filter(|o| o.status == svi_coverage::interval::DetectStatus::Detected)
        .count();
    eprintln!("optimal-interval: {} series, {} detected", optima.len(), detected);
    manifest.write(out)?;
    Ok(())
}

/// Nearest-neighbor distance of every point (sweep over x-sorted order).
fn nearest_neighbor_distances(points: &[Point2]) -> Vec<f64> {
    let n = points.len();
    if n < 2 {
        return vec![];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| points[a].x.total_cmp(&points[b].x).then(a.cmp(&b)));
    let mut out = vec![f64::INFINITY; n];
    for (pos, &i) in order.iter().enumerate() {
        let mut best = out[i];
        for &j in order[pos + 1..].iter() {
            let dx = points[j].x - points[i].x;
            if dx * dx >= best {
                break;
            }
            let d = points[i].distance_sq(points[j]);
            if d < best {
                best = d;
            }
            if d < out[j] {
                out[j] = d;
            }
        }
        out[i] = best;
    }
    out.iter().map(|d| d.sqrt()).collect()
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let idx = ((sorted.len() as f64 * p).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[idx]
}

pub fn cmd_summary(config: &Config, scene_dir: &Path, out: &Path) -> anyhow::Result<()> {
    ensure_out_dir(out)?;
    let mut manifest = Manifest::new("summary", json!({}));
    let loaded = load_scene_dir(scene_dir)?;
    for p in &loaded.paths {
        manifest.record_input(p);
    }
    let buildings = obtain_buildings(&loaded, config, out, &mut manifest)?;
    manifest.start_stage("summarize");
    let by_type = coverage_summary_by_group(&buildings, Grouping::Type);
    let by_size = coverage_summary_by_group(&buildings, Grouping::PerimeterQuintile);

    let valid: Vec<&BuildingCoverage> = buildings.iter().filter(|b| b.valid).collect();
    let covered: Vec<&&BuildingCoverage> = valid.iter().filter(|b| b.u_seen > 0).collect();
    let mut stats: Vec<(String, String)> = vec![
        ("buildings_total".into(), valid.len().to_string()),
        ("buildings_covered".into(), covered.len().to_string()),
        (
            "buildings_covered_share".into(),
            tables::fmt_sig9(if valid.is_empty() {
                0.0
            } else {
                covered.len() as f64 / valid.len() as f64
            }),
        ),
        (
            "mean_coc_b_all".into(),
            tables::fmt_sig9(if valid.is_empty() {
                0.0
            } else {
                valid.iter().map(|b| b.coc_b).sum::<f64>() / valid.len() as f64
            }),
        ),
        (
            "mean_coc_b_covered".into(),
            if covered.is_empty() {
                String::new()
            } else {
                tables::fmt_sig9(covered.iter().map(|b| b.coc_b).sum::<f64>() / covered.len() as f64)
            },
        ),
        (
            "visible_sightlines_total".into(),
            valid.iter().map(|b| b.v).sum::<u64>().to_string(),
        ),
    ];

    // Population coverage through residential CoC-A per fine cell.
    if let Some(population) = &loaded.scene.population {
        let grid = fine_grid(config, None);
        let cells = cells_for_buildings(&loaded.scene, &buildings, &grid)?;
        let mut residential: BTreeMap<(i32, i32), (u32, u32)> = BTreeMap::new();
        for (b, cell) in buildings.iter().zip(&cells) {
            if b.valid && b.type_label == "Residential" {
                let entry = residential.entry((cell.q, cell.r)).or_insert((0, 0));
                entry.1 += 1;
                if b.u_seen > 0 {
                    entry.0 += 1;
                }
            }
        }
        let rows: Vec<(Option<f64>, f64)> = population
            .iter()
            .map(|((q, r), pop)| {
                let coc_a_r = residential
                    .get(&(*q, *r))
                    .map(|(seen, total)| *seen as f64 / *total as f64);
                (coc_a_r, *pop)
            })
            .collect();
        let cov = population_coverage(&rows);
        stats.push(("population_total".into(), tables::fmt_sig9(cov.total)));
        stats.push(("population_covered".into(), tables::fmt_sig9(cov.total_covered)));
        stats.push((
            "population_covered_share".into(),
            cov.ratio.map(tables::fmt_sig9).unwrap_or_default(),
        ));
    }

    // SVI spacing diagnostic: nearest-neighbor distance quantiles.
    let positions: Vec<Point2> = loaded.scene.svi_points.iter().map(|s| s.position).collect();
    stats.push(("svi_count".into(), positions.len().to_string()));
    let mut nn = nearest_neighbor_distances(&positions);
    if !nn.is_empty() {
        nn.sort_by(f64::total_cmp);
        for (label, p) in [("p10", 0.10), ("p25", 0.25), ("p50", 0.50), ("p75", 0.75), ("p90", 0.90)] {
            stats.push((format!("svi_nn_{label}_m"), tables::fmt_sig9(quantile(&nn, p))));
        }
        let within = nn.iter().filter(|d| **d < 10.0).count() as f64 / nn.len() as f64;
        stats.push(("svi_nn_within_10m_share".into(), tables::fmt_sig9(within)));
    }

    manifest.start_stage("write");
    write_output(&mut manifest, &out.join("summary.csv"), &tables::write_summary(&by_type, &by_size))?;
    let mut stats_text = String::from("key,value\n");
    for (k, v) in &stats {
        stats_text.push_str(&format!("{k},{v}\n"));
    }
    write_output(&mut manifest, &out.join("summary_stats.csv"), &stats_text)?;
    for (k, v) in &stats {
        eprintln!("{k}: {v}");
    }
    manifest.write(out)?;
    Ok(())
}

pub fn check_out_dir_not_scene(scene: &Path, out: &Path) -> anyhow::Result<()> {
    let canon = |p: &Path| p.canonicalize().unwrap_or_else(|_| p.to_path_buf());
    if canon(scene) == canon(out) {
        bail!("--out must differ from --scene (the CLI never mutates input files)");
    }
    Ok(())
}
