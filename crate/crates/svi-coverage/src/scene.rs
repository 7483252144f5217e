//! Scene assembly: GeoJSON ingestion of footprints, roads, and SVI points,
//! plus delimited-text segmentation-bin and population tables.
//!
//! Input geometry is GeoJSON (FeatureCollection): footprints as `Polygon`
//! exterior rings, roads as `LineString`, SVI points as `Point` with a
//! `heading` property. Coordinates must be planar meters; loads that look
//! like lon/lat degrees succeed with a warning. Invalid features (too few
//! vertices, self-intersecting rings) are skipped, reported by id, and
//! counted; duplicate ids abort the load.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde_json::{json, Value};

use crate::engine::SviPoint;
use crate::error::SceneError;
use crate::geometry::{polyline_length, Footprint, Point2};
use crate::segmentation::{SegmentationBins, BIN_COUNT};
use crate::typemap::{map_building_type, TypeMap};

/// A road centerline.
#[derive(Debug, Clone)]
pub struct Road {
    pub id: String,
    pub points: Vec<Point2>,
}

/// Population count of one fine cell, keyed by axial (q, r).
pub type CellPopulation = ((i32, i32), f64);

impl Road {
    pub fn length(&self) -> f64 {
        polyline_length(&self.points)
    }
}

/// Everything one analysis run consumes.
#[derive(Debug, Clone, Default)]
pub struct Scene {
    pub footprints: Vec<Footprint>,
    pub roads: Vec<Road>,
    pub svi_points: Vec<SviPoint>,
    /// Per-SVI segmentation bins keyed by SVI index; absent in
    /// geometric-only runs.
    pub bins: Option<HashMap<u32, SegmentationBins>>,
    /// Per-fine-cell population counts keyed by axial (q, r).
    pub population: Option<Vec<CellPopulation>>,
    pub crs_note: String,
}

#[derive(Debug, Clone, Default)]
struct SceneReportInner {
    skipped: Vec<(String, String)>,
    holes_ignored: usize,
    missing_heading: usize,
    unknown_bin_svi: usize,
    lonlat_suspect: bool,
}

/// What the loader had to work around. Empty reports load cleanly.
#[derive(Debug, Clone, Default)]
pub struct LoadReport {
    /// (feature id, reason) for every skipped feature.
    pub skipped: Vec<(String, String)>,
    pub holes_ignored: usize,
    pub missing_heading: usize,
    /// Bin-table rows referencing SVI ids absent from the scene.
    pub unknown_bin_svi: usize,
    /// All coordinates fit inside lon/lat ranges; the pipeline needs meters.
    pub lonlat_suspect: bool,
}

impl LoadReport {
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (id, reason) in &self.skipped {
            out.push(format!("skipped feature '{id}': {reason}"));
        }
        if self.holes_ignored > 0 {
            out.push(format!(
                "{} interior ring(s) ignored (footprints are exterior rings only)",
                self.holes_ignored
            ));
        }
        if self.missing_heading > 0 {
            out.push(format!(
                "{} SVI point(s) without heading property, defaulted to 0",
                self.missing_heading
            ));
        }
        if self.unknown_bin_svi > 0 {
            out.push(format!(
                "{} segmentation rows referenced SVI ids not in the scene",
                self.unknown_bin_svi
            ));
        }
        if self.lonlat_suspect {
            out.push(
                "coordinates look like lon/lat degrees; the pipeline expects planar meters"
                    .to_string(),
            );
        }
        out
    }
}

fn read_to_string(path: &Path) -> Result<String, SceneError> {
    std::fs::read_to_string(path).map_err(|source| SceneError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_error(path: &Path, message: impl Into<String>) -> SceneError {
    SceneError::Parse {
        path: path.display().to_string(),
        message: message.into(),
    }
}

fn features_of<'a>(doc: &'a Value, path: &Path) -> Result<&'a Vec<Value>, SceneError> {
    doc.get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| parse_error(path, "expected a FeatureCollection with a features array"))
}

fn feature_id(feature: &Value, fallback: String) -> String {
    feature
        .get("properties")
        .and_then(|p| p.get("id"))
        .or_else(|| feature.get("id"))
        .map(|v| match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        })
        .unwrap_or(fallback)
}

fn prop_str<'a>(feature: &'a Value, key: &str) -> Option<&'a str> {
    feature
        .get("properties")
        .and_then(|p| p.get(key))
        .and_then(Value::as_str)
}

fn prop_f64(feature: &Value, key: &str) -> Option<f64> {
    feature
        .get("properties")
        .and_then(|p| p.get(key))
        .and_then(Value::as_f64)
}

fn parse_position(v: &Value) -> Option<Point2> {
    let arr = v.as_array()?;
    let x = arr.first()?.as_f64()?;
    let y = arr.get(1)?.as_f64()?;
    Some(Point2::new(x, y))
}

fn parse_ring(v: &Value) -> Option<Vec<Point2>> {
    let mut ring: Vec<Point2> = v
        .as_array()?
        .iter()
        .map(parse_position)
        .collect::<Option<Vec<_>>>()?;
    // GeoJSON rings repeat the first position at the end; store open rings.
    if ring.len() >= 2 && ring.first() == ring.last() {
        ring.pop();
    }
    Some(ring)
}

fn check_duplicate(
    seen: &mut HashSet<String>,
    id: &str,
    path: &Path,
) -> Result<(), SceneError> {
    if !seen.insert(id.to_string()) {
        return Err(SceneError::DuplicateId {
            path: path.display().to_string(),
            id: id.to_string(),
        });
    }
    Ok(())
}

fn load_footprints(
    path: &Path,
    type_map: &TypeMap,
    report: &mut SceneReportInner,
) -> Result<Vec<Footprint>, SceneError> {
    let doc: Value = serde_json::from_str(&read_to_string(path)?)
        .map_err(|e| parse_error(path, e.to_string()))?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, feature) in features_of(&doc, path)?.iter().enumerate() {
        let id = feature_id(feature, format!("footprint_{i}"));
        check_duplicate(&mut seen, &id, path)?;
        let Some(geom) = feature.get("geometry") else {
            report.skipped.push((id, "missing geometry".into()));
            continue;
        };
        if geom.get("type").and_then(Value::as_str) != Some("Polygon") {
            report.skipped.push((id, "geometry is not a Polygon".into()));
            continue;
        }
        let rings = geom.get("coordinates").and_then(Value::as_array);
        let Some(rings) = rings else {
            report.skipped.push((id, "missing coordinates".into()));
            continue;
        };
        if rings.len() > 1 {
            report.holes_ignored += rings.len() - 1;
        }
        let Some(exterior) = rings.first().and_then(parse_ring) else {
            report.skipped.push((id, "unparseable exterior ring".into()));
            continue;
        };
        let type_label = match prop_str(feature, "type") {
            Some(t) => t.to_string(),
            None => map_building_type(
                prop_str(feature, "ccrp_use"),
                prop_str(feature, "building"),
                type_map,
            ),
        };
        match Footprint::new(id.clone(), type_label, exterior) {
            Ok(fp) => out.push(fp),
            Err(e) => report.skipped.push((id, e.to_string())),
        }
    }
    Ok(out)
}

fn load_roads(path: &Path, report: &mut SceneReportInner) -> Result<Vec<Road>, SceneError> {
    let doc: Value = serde_json::from_str(&read_to_string(path)?)
        .map_err(|e| parse_error(path, e.to_string()))?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, feature) in features_of(&doc, path)?.iter().enumerate() {
        let id = feature_id(feature, format!("road_{i}"));
        check_duplicate(&mut seen, &id, path)?;
        let coords = feature
            .get("geometry")
            .filter(|g| g.get("type").and_then(Value::as_str) == Some("LineString"))
            .and_then(|g| g.get("coordinates"))
            .and_then(Value::as_array);
        let Some(coords) = coords else {
            report.skipped.push((id, "geometry is not a LineString".into()));
            continue;
        };
        let points: Option<Vec<Point2>> = coords.iter().map(parse_position).collect();
        match points {
            Some(points) if points.len() >= 2 && points.iter().all(Point2::is_finite) => {
                out.push(Road { id, points })
            }
            _ => report
                .skipped
                .push((id, "needs at least 2 finite vertices".into())),
        }
    }
    Ok(out)
}

fn load_svi(path: &Path, report: &mut SceneReportInner) -> Result<Vec<SviPoint>, SceneError> {
    let doc: Value = serde_json::from_str(&read_to_string(path)?)
        .map_err(|e| parse_error(path, e.to_string()))?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, feature) in features_of(&doc, path)?.iter().enumerate() {
        let id = feature_id(feature, format!("svi_{i}"));
        check_duplicate(&mut seen, &id, path)?;
        let position = feature
            .get("geometry")
            .filter(|g| g.get("type").and_then(Value::as_str) == Some("Point"))
            .and_then(|g| g.get("coordinates"))
            .and_then(parse_position);
        let Some(position) = position else {
            report.skipped.push((id, "geometry is not a Point".into()));
            continue;
        };
        if !position.is_finite() {
            report.skipped.push((id, "non-finite coordinates".into()));
            continue;
        }
        let heading = match prop_f64(feature, "heading") {
            Some(h) => h,
            None => {
                report.missing_heading += 1;
                0.0
            }
        };
        let mut svi = SviPoint::new(id, position, heading);
        svi.capture_tag = prop_str(feature, "capture_tag").map(str::to_string);
        out.push(svi);
    }
    Ok(out)
}

/// Reads the per-bin class-area table: `svi_id,bin_index,class_id,area`.
/// Rows for the same (svi, bin, class) accumulate. Rows referencing SVI
/// ids absent from the scene are counted and ignored.
pub fn load_bins(
    path: &Path,
    svi_index: &HashMap<String, u32>,
    report_unknown: &mut usize,
) -> Result<HashMap<u32, SegmentationBins>, SceneError> {
    let text = read_to_string(path)?;
    let mut out: HashMap<u32, SegmentationBins> = HashMap::new();
    let table_err = |line: usize, message: String| SceneError::Table {
        path: path.display().to_string(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "svi_id,bin_index,class_id,area" => {}
        _ => {
            return Err(table_err(
                1,
                "expected header 'svi_id,bin_index,class_id,area'".into(),
            ))
        }
    }
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(table_err(line_no, format!("expected 4 fields, got {}", fields.len())));
        }
        let Some(&svi) = svi_index.get(fields[0]) else {
            *report_unknown += 1;
            continue;
        };
        let bin: usize = fields[1]
            .parse()
            .map_err(|_| table_err(line_no, format!("bad bin_index '{}'", fields[1])))?;
        if bin >= BIN_COUNT {
            return Err(table_err(line_no, format!("bin_index {bin} out of range 0..{}", BIN_COUNT - 1)));
        }
        let class: u8 = fields[2]
            .parse()
            .map_err(|_| table_err(line_no, format!("bad class_id '{}'", fields[2])))?;
        let area: f64 = fields[3]
            .parse()
            .map_err(|_| table_err(line_no, format!("bad area '{}'", fields[3])))?;
        if area.is_nan() || area < 0.0 {
            return Err(table_err(line_no, format!("invalid area {area}")));
        }
        out.entry(svi).or_default().add(bin, class, area);
    }
    Ok(out)
}

/// Reads the per-cell population table: `cell_q,cell_r,population`.
pub fn load_population(path: &Path) -> Result<Vec<CellPopulation>, SceneError> {
    let text = read_to_string(path)?;
    let table_err = |line: usize, message: String| SceneError::Table {
        path: path.display().to_string(),
        line,
        message,
    };
    let mut out = Vec::new();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "cell_q,cell_r,population" => {}
        _ => return Err(table_err(1, "expected header 'cell_q,cell_r,population'".into())),
    }
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(table_err(line_no, format!("expected 3 fields, got {}", fields.len())));
        }
        let q: i32 = fields[0]
            .parse()
            .map_err(|_| table_err(line_no, format!("bad cell_q '{}'", fields[0])))?;
        let r: i32 = fields[1]
            .parse()
            .map_err(|_| table_err(line_no, format!("bad cell_r '{}'", fields[1])))?;
        let pop: f64 = fields[2]
            .parse()
            .map_err(|_| table_err(line_no, format!("bad population '{}'", fields[2])))?;
        if pop.is_nan() || pop < 0.0 {
            return Err(table_err(line_no, format!("invalid population {pop}")));
        }
        out.push(((q, r), pop));
    }
    Ok(out)
}

/// Loads and validates a complete scene from its component files.
pub fn load_scene(
    footprints_path: &Path,
    roads_path: &Path,
    svi_path: &Path,
    bins_path: Option<&Path>,
    population_path: Option<&Path>,
    type_map: &TypeMap,
) -> Result<(Scene, LoadReport), SceneError> {
    let mut inner = SceneReportInner::default();
    let footprints = load_footprints(footprints_path, type_map, &mut inner)?;
    let roads = load_roads(roads_path, &mut inner)?;
    let svi_points = load_svi(svi_path, &mut inner)?;

    let svi_index: HashMap<String, u32> = svi_points
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id.clone(), i as u32))
        .collect();
    let bins = match bins_path {
        Some(p) => Some(load_bins(p, &svi_index, &mut inner.unknown_bin_svi)?),
        None => None,
    };
    let population = match population_path {
        Some(p) => Some(load_population(p)?),
        None => None,
    };

    let lonlat = |p: &Point2| p.x.abs() <= 180.0 && p.y.abs() <= 90.0;
    let mut any = false;
    let mut all = true;
    for p in footprints
        .iter()
        .flat_map(|f| f.exterior().iter())
        .chain(roads.iter().flat_map(|r| r.points.iter()))
        .chain(svi_points.iter().map(|s| &s.position))
    {
        any = true;
        all &= lonlat(p);
    }
    inner.lonlat_suspect = any && all;

    let scene = Scene {
        footprints,
        roads,
        svi_points,
        bins,
        population,
        crs_note: "coordinates interpreted as planar meters".to_string(),
    };
    let report = LoadReport {
        skipped: inner.skipped,
        holes_ignored: inner.holes_ignored,
        missing_heading: inner.missing_heading,
        unknown_bin_svi: inner.unknown_bin_svi,
        lonlat_suspect: inner.lonlat_suspect,
    };
    Ok((scene, report))
}

fn position_json(p: Point2) -> Value {
    json!([p.x, p.y])
}

/// Serializes footprints as a GeoJSON FeatureCollection (closed exterior
/// rings, `id` and `type` properties).
pub fn footprints_to_geojson(footprints: &[Footprint]) -> String {
    let features: Vec<Value> = footprints
        .iter()
        .map(|fp| {
            let mut ring: Vec<Value> = fp.exterior().iter().map(|p| position_json(*p)).collect();
            ring.push(position_json(fp.exterior()[0]));
            json!({
                "type": "Feature",
                "properties": {"id": fp.id, "type": fp.type_label},
                "geometry": {"type": "Polygon", "coordinates": [ring]},
            })
        })
        .collect();
    serde_json::to_string_pretty(&json!({
        "type": "FeatureCollection",
        "features": features,
    }))
    .expect("geojson serialization")
}

pub fn roads_to_geojson(roads: &[Road]) -> String {
    let features: Vec<Value> = roads
        .iter()
        .map(|r| {
            let coords: Vec<Value> = r.points.iter().map(|p| position_json(*p)).collect();
            json!({
                "type": "Feature",
                "properties": {"id": r.id},
                "geometry": {"type": "LineString", "coordinates": coords},
            })
        })
        .collect();
    serde_json::to_string_pretty(&json!({
        "type": "FeatureCollection",
        "features": features,
    }))
    .expect("geojson serialization")
}

pub fn svi_to_geojson(svi: &[SviPoint]) -> String {
    let features: Vec<Value> = svi
        .iter()
        .map(|s| {
            let mut properties = serde_json::Map::new();
            properties.insert("id".into(), json!(s.id));
            properties.insert("heading".into(), json!(s.heading));
            if let Some(tag) = &s.capture_tag {
                properties.insert("capture_tag".into(), json!(tag));
            }
            json!({
                "type": "Feature",
                "properties": properties,
                "geometry": {"type": "Point", "coordinates": position_json(s.position)},
            })
        })
        .collect();
    serde_json::to_string_pretty(&json!({
        "type": "FeatureCollection",
        "features": features,
    }))
    .expect("geojson serialization")
}
