//! End-to-end CLI behaviour on a hand-built fixture scene: table contents,
//! ingest/recompute equivalence, determinism, input immutability, and
//! error reporting.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_svi-coverage"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn");
    assert!(
        out.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

const S1_FOOTPRINTS: &str = r#"{"type":"FeatureCollection","features":[
  {"type":"Feature","properties":{"id":"B1","type":"Residential"},
   "geometry":{"type":"Polygon","coordinates":[[[0,0],[10,0],[10,10],[0,10],[0,0]]]}}
]}"#;
const S1_ROADS: &str = r#"{"type":"FeatureCollection","features":[
  {"type":"Feature","properties":{"id":"R1"},
   "geometry":{"type":"LineString","coordinates":[[-200,-20],[200,-20]]}}
]}"#;
const S1_SVI: &str = r#"{"type":"FeatureCollection","features":[
  {"type":"Feature","properties":{"id":"S","heading":0.0},
   "geometry":{"type":"Point","coordinates":[5,-20]}}
]}"#;

fn write_s1(dir: &Path) {
    std::fs::create_dir_all(dir).unwrap();
    std::fs::write(dir.join("footprints.geojson"), S1_FOOTPRINTS).unwrap();
    std::fs::write(dir.join("roads.geojson"), S1_ROADS).unwrap();
    std::fs::write(dir.join("svi_points.geojson"), S1_SVI).unwrap();
}

fn lines_of(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect()
}

#[test]
fn s1_coverage_and_indicators() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = tmp.path().join("scene");
    let out = tmp.path().join("out");
    write_s1(&scene);

    run_ok(&[
        "coverage",
        "--scene",
        scene.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let rows = lines_of(&out.join("sightlines.csv"));
    assert_eq!(rows[0], "svi_id,building_id,sample_index,bearing_deg,distance_m,status");
    assert_eq!(rows.len(), 21, "header + 20 candidate sightlines");
    let visible: Vec<&String> = rows.iter().filter(|r| r.ends_with(",visible")).collect();
    assert_eq!(visible.len(), 6);

    run_ok(&[
        "indicators",
        "--scene",
        scene.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let rows = lines_of(&out.join("buildings.csv"));
    assert_eq!(
        rows[1],
        "B1,Residential,40.0000000,20,6,6,0.300000000,0.150000000,1"
    );
}

#[test]
fn indicators_from_file_equal_indicators_recomputed() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = tmp.path().join("scene");
    write_s1(&scene);

    // Path A: coverage writes sightlines.csv, indicators re-ingests it.
    let out_a = tmp.path().join("a");
    run_ok(&["coverage", "--scene", scene.to_str().unwrap(), "--out", out_a.to_str().unwrap()]);
    run_ok(&["indicators", "--scene", scene.to_str().unwrap(), "--out", out_a.to_str().unwrap()]);

    // Path B: indicators recomputes sightlines in memory.
    let out_b = tmp.path().join("b");
    run_ok(&["indicators", "--scene", scene.to_str().unwrap(), "--out", out_b.to_str().unwrap()]);

    assert_eq!(
        std::fs::read(out_a.join("buildings.csv")).unwrap(),
        std::fs::read(out_b.join("buildings.csv")).unwrap()
    );
}

#[test]
fn segmentation_bins_demote_directional_lines() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = tmp.path().join("scene");
    write_s1(&scene);
    // Bin 0 (relative bearing 0-30) passes at 0.6; bin 11 (330-360)
    // fails at 0.3. Lines to the west half of the south edge sit in bin
    // 11, the east half in bin 0.
    std::fs::write(
        scene.join("segmentation_bins.csv"),
        "svi_id,bin_index,class_id,area\nS,0,11,600\nS,0,21,400\nS,11,11,300\nS,11,21,700\n",
    )
    .unwrap();
    let out = tmp.path().join("out");
    run_ok(&["coverage", "--scene", scene.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let rows = lines_of(&out.join("sightlines.csv"));
    let visible = rows.iter().filter(|r| r.ends_with(",visible")).count();
    let filtered = rows.iter().filter(|r| r.ends_with(",segmentation_filtered")).count();
    assert_eq!((visible, filtered), (3, 3));

    // Geometric-only mode ignores the bins.
    let out_geo = tmp.path().join("out_geo");
    run_ok(&[
        "coverage",
        "--scene",
        scene.to_str().unwrap(),
        "--out",
        out_geo.to_str().unwrap(),
        "--geometric-only",
    ]);
    let rows = lines_of(&out_geo.join("sightlines.csv"));
    assert_eq!(rows.iter().filter(|r| r.ends_with(",visible")).count(), 6);
}

#[test]
fn full_pipeline_is_deterministic_and_leaves_inputs_untouched() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("config.toml");
    std::fs::write(
        &config,
        "[synth]\nseed = 9\nblock_rows = 2\nblock_cols = 2\n\n[intervals]\nintervals_m = [10.0, 20.0, 40.0, 80.0]\nradii_m = [50.0]\n",
    )
    .unwrap();
    let scene = tmp.path().join("scene");
    run_ok(&["--config", config.to_str().unwrap(), "synth", "--out", scene.to_str().unwrap()]);
    let snapshot = |dir: &Path| -> Vec<(PathBuf, Vec<u8>)> {
        let mut entries: Vec<_> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        entries.sort();
        entries
            .into_iter()
            .map(|p| (p.clone(), std::fs::read(&p).unwrap()))
            .collect()
    };
    let scene_before = snapshot(&scene);

    let run_all = |out: &Path| {
        for cmd in [
            "coverage",
            "indicators",
            "grid-agg",
            "road-coverage",
            "hotspot",
            "bias-regression",
            "interval-scan",
            "optimal-interval",
            "summary",
        ] {
            run_ok(&[
                "--config",
                config.to_str().unwrap(),
                cmd,
                "--scene",
                scene.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ]);
        }
    };
    let out1 = tmp.path().join("out1");
    let out2 = tmp.path().join("out2");
    run_all(&out1);
    run_all(&out2);

    let mut names: Vec<String> = std::fs::read_dir(&out1)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(names.len() >= 12);
    for name in names {
        if name == "manifest.json" {
            continue; // carries wall-clock durations by design
        }
        assert_eq!(
            std::fs::read(out1.join(&name)).unwrap(),
            std::fs::read(out2.join(&name)).unwrap(),
            "output {name} differs between identical runs"
        );
    }
    assert_eq!(scene_before, snapshot(&scene), "inputs were mutated");
}

#[test]
fn optimal_interval_detects_constructed_crossing_from_scan_table() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = tmp.path().join("scene");
    write_s1(&scene); // unused by the detection, but the command loads it
    let mut scan = String::from(
        "cell_id,radius_m,interval_m,mean_coc_b,mean_foc_b,norm_coc_b,norm_foc_b\n",
    );
    for k in 0..18 {
        let d = 10.0 + 5.0 * k as f64;
        let coc = 1.0 - 0.01 * (d - 10.0);
        let foc = 1.0 - 0.02 * (d - 10.0) + 0.0001 * (d - 10.0) * (d - 10.0);
        scan.push_str(&format!("f_0_0,50,{d},{coc},{foc},,\n"));
    }
    let scan_path = tmp.path().join("scan.csv");
    std::fs::write(&scan_path, scan).unwrap();
    let out = tmp.path().join("out");
    run_ok(&[
        "optimal-interval",
        "--scene",
        scene.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--scan",
        scan_path.to_str().unwrap(),
    ]);
    let rows = lines_of(&out.join("optima.csv"));
    assert_eq!(rows.len(), 2);
    let fields: Vec<&str> = rows[1].split(',').collect();
    assert_eq!(fields[0], "f_0_0");
    assert_eq!(fields[2], "smoothing-spline");
    assert_eq!(fields[6], "detected");
    let optimal: f64 = fields[5].parse().unwrap();
    assert!(
        (optimal - 60.0).abs() <= 2.5,
        "derivative crossing at {optimal}, expected 60 +- 2.5"
    );
}

#[test]
fn errors_name_the_offending_input() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = tmp.path().join("scene");
    write_s1(&scene);
    std::fs::write(scene.join("footprints.geojson"), "{not json").unwrap();
    let out = bin()
        .args([
            "coverage",
            "--scene",
            scene.to_str().unwrap(),
            "--out",
            tmp.path().join("out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("footprints.geojson"), "stderr: {stderr}");
}

#[test]
fn out_dir_must_differ_from_scene_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = tmp.path().join("scene");
    write_s1(&scene);
    let out = bin()
        .args([
            "coverage",
            "--scene",
            scene.to_str().unwrap(),
            "--out",
            scene.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn degenerate_features_are_skipped_with_warning() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = tmp.path().join("scene");
    write_s1(&scene);
    std::fs::write(
        scene.join("footprints.geojson"),
        r#"{"type":"FeatureCollection","features":[
          {"type":"Feature","properties":{"id":"B1","type":"Residential"},
           "geometry":{"type":"Polygon","coordinates":[[[0,0],[10,0],[10,10],[0,10],[0,0]]]}},
          {"type":"Feature","properties":{"id":"TWOPOINT"},
           "geometry":{"type":"Polygon","coordinates":[[[0,0],[5,5],[0,0]]]}}
        ]}"#,
    )
    .unwrap();
    let out_dir = tmp.path().join("out");
    let out = bin()
        .args([
            "indicators",
            "--scene",
            scene.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("TWOPOINT"), "stderr: {stderr}");
    // Only the valid building lands in the table.
    let rows = lines_of(&out_dir.join("buildings.csv"));
    assert_eq!(rows.len(), 2);
}

#[test]
fn config_overrides_apply() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = tmp.path().join("scene");
    write_s1(&scene);
    // Radius 10: no sample of B1 is within reach of the SVI at (5,-20).
    let out_dir = tmp.path().join("out");
    run_ok(&[
        "coverage",
        "--scene",
        scene.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--radius",
        "10",
    ]);
    assert_eq!(lines_of(&out_dir.join("sightlines.csv")).len(), 1);
}
