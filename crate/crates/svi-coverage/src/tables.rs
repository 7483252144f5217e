//! Deterministic delimited-text tables.
//!
//! Every writer produces byte-stable output for identical inputs: rows are
//! emitted in a documented sort order, floats are rendered with 9
//! significant digits and a '.' separator, lines end with '\n', and
//! undefined values are empty fields. Readers are strict about headers and
//! report the offending line on parse failures.

use std::collections::HashMap;

use serde_json::{json, Value};

use crate::engine::{SightLine, SightStatus, SviPoint};
use crate::error::SceneError;
use crate::fit::CurveKind;
use crate::geometry::Footprint;
use crate::hex::{CellId, HexGrid};
use crate::indicators::{BuildingCoverage, GroupSummary, RoadCoverage};
use crate::interval::{OptimalInterval, ScanResult, ScanRow};
use crate::stats::GiStar;

/// Formats with 9 significant digits in plain decimal notation
/// (`0.3 -> "0.300000000"`, `40.0 -> "40.0000000"`).
pub fn fmt_sig9(v: f64) -> String {
    if !v.is_finite() {
        return String::new();
    }
    if v == 0.0 {
        return "0.000000000".to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    let decimals = (8 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_sig9).unwrap_or_default()
}

fn parse_f64(path: &str, line: usize, field: &str, what: &str) -> Result<f64, SceneError> {
    field.parse().map_err(|_| SceneError::Table {
        path: path.to_string(),
        line,
        message: format!("bad {what} '{field}'"),
    })
}

fn split_table<'a>(
    text: &'a str,
    path: &str,
    expected_header: &str,
) -> Result<Vec<(usize, Vec<&'a str>)>, SceneError> {
    let n_fields = expected_header.split(',').count();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == expected_header => {}
        got => {
            return Err(SceneError::Table {
                path: path.to_string(),
                line: 1,
                message: format!(
                    "expected header '{expected_header}', got '{}'",
                    got.map(|(_, h)| h).unwrap_or("")
                ),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n_fields {
            return Err(SceneError::Table {
                path: path.to_string(),
                line: i + 1,
                message: format!("expected {n_fields} fields, got {}", fields.len()),
            });
        }
        rows.push((i + 1, fields));
    }
    Ok(rows)
}

pub const SIGHTLINES_HEADER: &str = "svi_id,building_id,sample_index,bearing_deg,distance_m,status";

/// Sightlines table, sorted by (svi, building, sample_index).
pub fn write_sightlines(
    lines: &[SightLine],
    svi_points: &[SviPoint],
    footprints: &[Footprint],
) -> String {
    let mut sorted: Vec<&SightLine> = lines.iter().collect();
    sorted.sort_by_key(|l| l.key());
    let mut out = String::with_capacity(64 * (sorted.len() + 1));
    out.push_str(SIGHTLINES_HEADER);
    out.push('\n');
    for l in sorted {
        out.push_str(&svi_points[l.svi as usize].id);
        out.push(',');
        out.push_str(&footprints[l.building as usize].id);
        out.push(',');
        out.push_str(&l.sample_index.to_string());
        out.push(',');
        out.push_str(&fmt_sig9(l.bearing_deg));
        out.push(',');
        out.push_str(&fmt_sig9(l.distance_m));
        out.push(',');
        out.push_str(l.status.as_str());
        out.push('\n');
    }
    out
}

/// Re-ingests a sightlines table, mapping textual ids back to scene
/// indices.
pub fn read_sightlines(
    text: &str,
    path: &str,
    svi_points: &[SviPoint],
    footprints: &[Footprint],
) -> Result<Vec<SightLine>, SceneError> {
    let svi_index: HashMap<&str, u32> = svi_points
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id.as_str(), i as u32))
        .collect();
    let fp_index: HashMap<&str, u32> = footprints
        .iter()
        .enumerate()
        .map(|(i, f)| (f.id.as_str(), i as u32))
        .collect();
    let mut out = Vec::new();
    for (line_no, fields) in split_table(text, path, SIGHTLINES_HEADER)? {
        let svi = *svi_index.get(fields[0]).ok_or_else(|| SceneError::UnknownId {
            what: "svi",
            id: fields[0].to_string(),
        })?;
        let building = *fp_index.get(fields[1]).ok_or_else(|| SceneError::UnknownId {
            what: "building",
            id: fields[1].to_string(),
        })?;
        let sample_index: u32 = fields[2].parse().map_err(|_| SceneError::Table {
            path: path.to_string(),
            line: line_no,
            message: format!("bad sample_index '{}'", fields[2]),
        })?;
        let status = SightStatus::parse(fields[5]).ok_or_else(|| SceneError::Table {
            path: path.to_string(),
            line: line_no,
            message: format!("bad status '{}'", fields[5]),
        })?;
        out.push(SightLine {
            svi,
            building,
            sample_index,
            bearing_deg: parse_f64(path, line_no, fields[3], "bearing_deg")?,
            distance_m: parse_f64(path, line_no, fields[4], "distance_m")?,
            status,
        });
    }
    Ok(out)
}

pub const BUILDINGS_HEADER: &str =
    "building_id,type,perimeter_m,u_avail,u_seen,v,coc_b,foc_b,quintile";

/// Building indicator table, in scene order.
pub fn write_buildings(coverage: &[BuildingCoverage]) -> String {
    let mut out = String::new();
    out.push_str(BUILDINGS_HEADER);
    out.push('\n');
    for b in coverage {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            b.id,
            b.type_label,
            fmt_sig9(b.perimeter_m),
            b.u_avail,
            b.u_seen,
            b.v,
            fmt_sig9(b.coc_b),
            fmt_sig9(b.foc_b),
            b.size_quintile,
        ));
    }
    out
}

pub fn read_buildings(text: &str, path: &str) -> Result<Vec<BuildingCoverage>, SceneError> {
    let mut out = Vec::new();
    for (line_no, fields) in split_table(text, path, BUILDINGS_HEADER)? {
        let int_err = |what: &str, field: &str| SceneError::Table {
            path: path.to_string(),
            line: line_no,
            message: format!("bad {what} '{field}'"),
        };
        let u_avail: u32 = fields[3].parse().map_err(|_| int_err("u_avail", fields[3]))?;
        out.push(BuildingCoverage {
            building: (out.len()) as u32,
            id: fields[0].to_string(),
            type_label: fields[1].to_string(),
            perimeter_m: parse_f64(path, line_no, fields[2], "perimeter_m")?,
            u_avail,
            u_seen: fields[4].parse().map_err(|_| int_err("u_seen", fields[4]))?,
            v: fields[5].parse().map_err(|_| int_err("v", fields[5]))?,
            coc_b: parse_f64(path, line_no, fields[6], "coc_b")?,
            foc_b: parse_f64(path, line_no, fields[7], "foc_b")?,
            size_quintile: fields[8].parse().map_err(|_| int_err("quintile", fields[8]))?,
            valid: u_avail > 0,
        });
    }
    Ok(out)
}

/// One row of the merged per-cell table.
#[derive(Debug, Clone)]
pub struct CellRow {
    pub cell: CellId,
    pub n_total: u32,
    pub n_seen: u32,
    pub coc_a: Option<f64>,
    pub mean_coc_b: Option<f64>,
    pub road_completeness: Option<f64>,
    pub gi_z_coc_a: Option<f64>,
    pub gi_z_mean_coc_b: Option<f64>,
    pub gi_z_road: Option<f64>,
}

pub const CELLS_HEADER: &str =
    "cell_id,n_total,n_seen,coc_a,mean_coc_b,road_completeness,gi_z_coc_a,gi_z_mean_coc_b,gi_z_road";

/// Merged per-cell table, sorted by cell id.
pub fn write_cells(rows: &[CellRow]) -> String {
    let mut sorted: Vec<&CellRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.cell);
    let mut out = String::new();
    out.push_str(CELLS_HEADER);
    out.push('\n');
    for r in sorted {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.cell.encode(),
            r.n_total,
            r.n_seen,
            fmt_opt(r.coc_a),
            fmt_opt(r.mean_coc_b),
            fmt_opt(r.road_completeness),
            fmt_opt(r.gi_z_coc_a),
            fmt_opt(r.gi_z_mean_coc_b),
            fmt_opt(r.gi_z_road),
        ));
    }
    out
}

/// GeoJSON copy of the cell polygons carrying the same properties as the
/// cells table, for external mapping.
pub fn cells_to_geojson(rows: &[CellRow], grid: &HexGrid) -> String {
    let mut sorted: Vec<&CellRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.cell);
    let features: Vec<Value> = sorted
        .iter()
        .map(|r| {
            let mut ring: Vec<Value> = grid
                .polygon(&r.cell)
                .iter()
                .map(|p| json!([p.x, p.y]))
                .collect();
            ring.push(ring[0].clone());
            json!({
                "type": "Feature",
                "properties": {
                    "cell_id": r.cell.encode(),
                    "n_total": r.n_total,
                    "n_seen": r.n_seen,
                    "coc_a": r.coc_a,
                    "mean_coc_b": r.mean_coc_b,
                    "road_completeness": r.road_completeness,
                    "gi_z_coc_a": r.gi_z_coc_a,
                    "gi_z_mean_coc_b": r.gi_z_mean_coc_b,
                    "gi_z_road": r.gi_z_road,
                },
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

pub const FOC_A_HEADER: &str = "cell_id,type,v_sum,foc_a";

/// Per-cell, per-type frequency shares, sorted by (cell, type).
pub fn write_foc_a(rows: &[(CellId, String, u64, Option<f64>)]) -> String {
    let mut sorted: Vec<_> = rows.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out = String::new();
    out.push_str(FOC_A_HEADER);
    out.push('\n');
    for (cell, type_label, v, foc) in sorted {
        out.push_str(&format!(
            "{},{},{},{}\n",
            cell.encode(),
            type_label,
            v,
            fmt_opt(*foc)
        ));
    }
    out
}

pub const ROAD_COVERAGE_HEADER: &str = "cell_id,covered_m,total_m,completeness";

pub fn write_road_coverage(rows: &[RoadCoverage]) -> String {
    let mut sorted: Vec<&RoadCoverage> = rows.iter().collect();
    sorted.sort_by_key(|r| r.cell);
    let mut out = String::new();
    out.push_str(ROAD_COVERAGE_HEADER);
    out.push('\n');
    for r in sorted {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.cell.encode(),
            fmt_sig9(r.covered_m),
            fmt_sig9(r.total_m),
            fmt_opt(r.completeness),
        ));
    }
    out
}

pub const HOTSPOTS_HEADER: &str = "cell_id,metric,z,classification,top_rank,bottom_rank";

/// Hotspot table rows: one line per (cell, metric).
pub fn write_hotspots(rows: &[(String, GiStar, bool, bool)]) -> String {
    let mut sorted: Vec<_> = rows.iter().collect();
    sorted.sort_by(|a, b| a.1.cell.cmp(&b.1.cell).then(a.0.cmp(&b.0)));
    let mut out = String::new();
    out.push_str(HOTSPOTS_HEADER);
    out.push('\n');
    for (metric, gi, top, bottom) in sorted {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            gi.cell.encode(),
            metric,
            fmt_opt(gi.z),
            gi.classification.as_str(),
            *top as u8,
            *bottom as u8,
        ));
    }
    out
}

/// One regression table row: (type label, cell count, fitted
/// (slope, intercept, pearson_r) when the fit was possible).
pub type RegressionRow = (String, usize, Option<(f64, f64, f64)>);

pub const REGRESSION_HEADER: &str = "type,n_cells,slope,intercept,pearson_r";

pub fn write_regression(rows: &[RegressionRow]) -> String {
    let mut sorted: Vec<_> = rows.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out = String::new();
    out.push_str(REGRESSION_HEADER);
    out.push('\n');
    for (type_label, n, fit) in sorted {
        match fit {
            Some((slope, intercept, r)) => out.push_str(&format!(
                "{},{},{},{},{}\n",
                type_label,
                n,
                fmt_sig9(*slope),
                fmt_sig9(*intercept),
                fmt_sig9(*r),
            )),
            None => out.push_str(&format!("{type_label},{n},,,\n")),
        }
    }
    out
}

pub const SCAN_HEADER: &str =
    "cell_id,radius_m,interval_m,mean_coc_b,mean_foc_b,norm_coc_b,norm_foc_b";

/// Interval-scan table with normalized columns, sorted by
/// (cell, radius, interval).
pub fn write_scan(scan: &ScanResult) -> String {
    let mut out = String::new();
    out.push_str(SCAN_HEADER);
    out.push('\n');
    for ((_, _), rows) in scan.series() {
        let normalized = ScanResult::normalize(&rows);
        for (row, (_, norm_coc, norm_foc)) in rows.iter().zip(normalized) {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                row.cell.encode(),
                fmt_sig9(row.radius_m),
                fmt_sig9(row.interval_m),
                fmt_sig9(row.mean_coc_b),
                fmt_sig9(row.mean_foc_b),
                fmt_opt(norm_coc),
                fmt_opt(norm_foc),
            ));
        }
    }
    out
}

pub fn read_scan(text: &str, path: &str) -> Result<ScanResult, SceneError> {
    let mut result = ScanResult::default();
    for (line_no, fields) in split_table(text, path, SCAN_HEADER)? {
        let cell = CellId::decode(fields[0]).ok_or_else(|| SceneError::Table {
            path: path.to_string(),
            line: line_no,
            message: format!("bad cell_id '{}'", fields[0]),
        })?;
        result.rows.push(ScanRow {
            cell,
            radius_m: parse_f64(path, line_no, fields[1], "radius_m")?,
            interval_m: parse_f64(path, line_no, fields[2], "interval_m")?,
            mean_coc_b: parse_f64(path, line_no, fields[3], "mean_coc_b")?,
            mean_foc_b: parse_f64(path, line_no, fields[4], "mean_foc_b")?,
        });
    }
    result.sort();
    Ok(result)
}

pub const OPTIMA_HEADER: &str =
    "cell_id,radius_m,fit_kind,r2_coc,r2_foc,optimal_interval_m,status";

pub fn write_optima(rows: &[OptimalInterval]) -> String {
    let mut sorted: Vec<&OptimalInterval> = rows.iter().collect();
    sorted.sort_by(|a, b| a.cell.cmp(&b.cell).then(a.radius_m.total_cmp(&b.radius_m)));
    let mut out = String::new();
    out.push_str(OPTIMA_HEADER);
    out.push('\n');
    for r in sorted {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.cell.encode(),
            fmt_sig9(r.radius_m),
            r.fit_kind.as_ref().map(CurveKind::as_str).unwrap_or_default(),
            fmt_opt(r.r2_coc),
            fmt_opt(r.r2_foc),
            fmt_opt(r.optimal_m),
            r.status.as_str(),
        ));
    }
    out
}

pub const SUMMARY_HEADER: &str =
    "section,group,n,covered_share,mean_coc_b_all,mean_coc_b_covered";

/// Grouped summary table (function types and perimeter quintiles).
pub fn write_summary(by_type: &[GroupSummary], by_size: &[GroupSummary]) -> String {
    let mut out = String::new();
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for (section, rows) in [("function", by_type), ("size", by_size)] {
        for g in rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                section,
                g.group,
                g.n,
                fmt_sig9(g.covered_share),
                fmt_sig9(g.mean_coc_b_all),
                fmt_opt(g.mean_coc_b_covered),
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig9_examples() {
        assert_eq!(fmt_sig9(0.3), "0.300000000");
        assert_eq!(fmt_sig9(0.15), "0.150000000");
        assert_eq!(fmt_sig9(40.0), "40.0000000");
        assert_eq!(fmt_sig9(1.0), "1.00000000");
        assert_eq!(fmt_sig9(0.0), "0.000000000");
        assert_eq!(fmt_sig9(-2.5), "-2.50000000");
        assert_eq!(fmt_sig9(123456789.0), "123456789");
        assert_eq!(fmt_sig9(0.000123400001), "0.000123400001");
    }

    #[test]
    fn sig9_is_reparse_stable() {
        for v in [0.3, 40.0, 1.0 / 3.0, 123.456, 9.87654321e-4] {
            let once = fmt_sig9(v);
            let twice = fmt_sig9(once.parse::<f64>().unwrap());
            assert_eq!(once, twice);
        }
    }
}
