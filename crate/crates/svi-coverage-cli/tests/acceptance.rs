//! Acceptance suite. Each test is one release criterion and prints a
//! single `[PASS]`/`[FAIL]` line (visible with `--nocapture`):
//!
//!  1. indexed sightlines match the brute-force oracle on 50 seeded
//!     random scenes, in under 5 minutes
//!  2. canonical scenes S1/S2 produce their exact indicator values
//!  3. the indicator formula fixtures (building proportion, area
//!     completeness/frequency, road clipping, population coverage)
//!  4. monotonicity properties at 1000 cases each, plus nested-interval
//!     scans on 5 synthetic cities
//!  5. statistics kernels against hand evaluations
//!  6. the optimal-interval pipeline on the constructed crossing and the
//!     completeness-vs-frequency decline ordering on a dense-core city
//!  7. throughput budgets for the coverage stage and the spatial index
//!  8. byte-identical outputs for identical runs of the CLI

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config as PtConfig, TestRunner};

use svi_coverage::engine::{
    all_sightlines, brute_force_sightlines, build_index, compute_sightlines, SightStatus, SviPoint,
};
use svi_coverage::fit::{fit_curve, CurveKind};
use svi_coverage::geometry::{sample_scene, Footprint, Point2};
use svi_coverage::hex::{CellId, GridLevel, HexGrid};
use svi_coverage::indicators::{
    aggregate_building_coverage, coc_a, covered_length, foc_a, population_coverage,
    BuildingCoverage,
};
use svi_coverage::interval::{
    detect_optimal_interval, scan, DetectStatus, FitChoice, IntervalScanConfig, ScanResult,
    ScanRow,
};
use svi_coverage::scene::Road;
use svi_coverage::segmentation::building_proportion;
use svi_coverage::stats::{getis_ord_gi_star, ols_fit};
use svi_coverage::synth::{generate_city, random_scene, SynthConfig};
use svi_coverage::tables::fmt_sig9;

fn criterion<F>(id: u32, name: &str, f: F)
where
    F: FnOnce() -> String + std::panic::UnwindSafe,
{
    match std::panic::catch_unwind(f) {
        Ok(detail) => println!("[PASS] criterion {id} ({name}): {detail}"),
        Err(e) => {
            println!("[FAIL] criterion {id} ({name})");
            std::panic::resume_unwind(e);
        }
    }
}

fn square(x0: f64, y0: f64, side: f64, id: &str) -> Footprint {
    Footprint::new(
        id,
        "Residential",
        vec![
            Point2::new(x0, y0),
            Point2::new(x0 + side, y0),
            Point2::new(x0 + side, y0 + side),
            Point2::new(x0, y0 + side),
        ],
    )
    .unwrap()
}

#[test]
fn criterion_1_oracle_equivalence() {
    criterion(1, "oracle equivalence on 50 random scenes", || {
        let started = Instant::now();
        for seed in 0..50u64 {
            let (footprints, svi) = random_scene(seed, 300, 200);
            let samples = sample_scene(&footprints, 2.0).unwrap();
            let index = build_index(&footprints, &samples, 50.0);
            for (i, svi_point) in svi.iter().enumerate() {
                let fast: BTreeSet<_> =
                    compute_sightlines(&index, &footprints, &samples, i as u32, svi_point, 50.0, 1e-6)
                        .iter()
                        .map(|l| (l.key(), l.status))
                        .collect();
                let slow: BTreeSet<_> =
                    brute_force_sightlines(&footprints, &samples, i as u32, svi_point, 50.0, 1e-6)
                        .iter()
                        .map(|l| (l.key(), l.status))
                        .collect();
                assert_eq!(fast, slow, "seed {seed}, svi {i}");
            }
        }
        let elapsed = started.elapsed();
        assert!(
            elapsed.as_secs_f64() < 300.0,
            "took {elapsed:?}, budget 5 min"
        );
        format!("50 scenes in {:.1}s", elapsed.as_secs_f64())
    });
}

#[test]
fn criterion_2_scene_fixtures() {
    criterion(2, "S1/S2 fixtures exact", || {
        // S1: one 10x10 square, 2 m samples, SVI at (5,-20), radius 50.
        let footprints = vec![square(0.0, 0.0, 10.0, "B1")];
        let samples = sample_scene(&footprints, 2.0).unwrap();
        let svi = vec![SviPoint::new("S", Point2::new(5.0, -20.0), 0.0)];
        let index = build_index(&footprints, &samples, 50.0);
        let lines = all_sightlines(&index, &footprints, &samples, &svi, 50.0, 1e-6);
        let visible = lines.iter().filter(|l| l.status == SightStatus::Visible).count();
        assert_eq!(visible, 6, "S1 visible lines");
        let cov = aggregate_building_coverage(&lines, &samples, &footprints);
        assert_eq!(cov[0].coc_b, 0.3);
        assert_eq!(cov[0].foc_b, 0.15);
        assert_eq!(fmt_sig9(cov[0].coc_b), "0.300000000");
        assert_eq!(fmt_sig9(cov[0].foc_b), "0.150000000");

        // S2: occluder square between the SVI and B1 blocks everything.
        let footprints_s2 = vec![square(0.0, 0.0, 10.0, "B1"), square(0.0, -15.0, 10.0, "occ")];
        let samples_s2 = sample_scene(&footprints_s2[..1], 2.0).unwrap();
        let svi_s2 = vec![SviPoint::new("S", Point2::new(5.0, -30.0), 0.0)];
        let index_s2 = build_index(&footprints_s2, &samples_s2, 50.0);
        let lines_s2 = all_sightlines(&index_s2, &footprints_s2, &samples_s2, &svi_s2, 50.0, 1e-6);
        let visible_s2 = lines_s2.iter().filter(|l| l.status == SightStatus::Visible).count();
        assert_eq!(visible_s2, 0, "S2 visible lines to B1");
        "S1 = 6 visible, coc_b 0.300000000, foc_b 0.150000000; S2 = 0 visible".to_string()
    });
}

#[test]
fn criterion_3_formula_unit_suite() {
    criterion(3, "indicator formula fixtures", || {
        // Building proportion: building 500 / (500 + vegetation 300),
        // sky and road excluded.
        let bin: std::collections::HashMap<u8, f64> =
            [(11u8, 500.0), (21, 300.0), (23, 150.0), (7, 50.0)].into_iter().collect();
        assert_eq!(building_proportion(&bin), Some(0.625));

        // Area completeness: 3 of 4 buildings seen.
        let bc = |seen: u32, v: u64, t: &str| BuildingCoverage {
            building: 0,
            id: "x".into(),
            type_label: t.into(),
            u_avail: 10,
            u_seen: seen,
            v,
            perimeter_m: 40.0,
            coc_b: seen as f64 / 10.0,
            foc_b: v as f64 / 40.0,
            size_quintile: 1,
            valid: true,
        };
        let cell = [bc(1, 1, "R"), bc(2, 2, "R"), bc(3, 3, "R"), bc(0, 0, "R")];
        let refs: Vec<&BuildingCoverage> = cell.iter().collect();
        assert_eq!(coc_a(&refs), Some(0.75));

        // Area frequency: residential V 3 vs commercial V 1.
        let cell = [bc(1, 3, "Residential"), bc(1, 1, "Commercial")];
        let refs: Vec<&BuildingCoverage> = cell.iter().collect();
        assert_eq!(foc_a(&refs, "Residential"), Some(0.75));

        // Road clipping: SVI at (25,0) with 50 m buffer covers [0,75] of a
        // 100 m road.
        let roads = vec![Road {
            id: "r".into(),
            points: vec![Point2::new(0.0, 0.0), Point2::new(100.0, 0.0)],
        }];
        let covered = covered_length(&roads, &[Point2::new(25.0, 0.0)], 50.0);
        assert!((covered / 100.0 - 0.75).abs() <= 1e-9);

        // Population coverage: (1.0, 100) + (0.5, 200) -> 200/300.
        let pop = population_coverage(&[(Some(1.0), 100.0), (Some(0.5), 200.0)]);
        assert!((pop.ratio.unwrap() - 0.6667).abs() <= 1e-4);
        assert!((pop.ratio.unwrap() - 2.0 / 3.0).abs() <= 1e-6);
        "building proportion 0.625, CoC-A 0.75, FoC-A 0.75, road 0.75, population 0.6667".to_string()
    });
}

#[test]
fn criterion_4_monotonicity_properties() {
    criterion(4, "monotonicity properties, 1000 cases each", || {
        let config = PtConfig {
            cases: 1000,
            ..PtConfig::default()
        };

        // Visible set only grows with the analysis radius.
        let mut runner = TestRunner::new(config.clone());
        runner
            .run(
                &(0u64..1_000_000, 10.0f64..50.0, 1.0f64..40.0),
                |(seed, r1, growth)| {
                    let (footprints, svi) = random_scene(seed, 25, 12);
                    let samples = sample_scene(&footprints, 2.0).unwrap();
                    let index = build_index(&footprints, &samples, 50.0);
                    let visible = |radius: f64| -> BTreeSet<(u32, u32, u32)> {
                        let mut set = BTreeSet::new();
                        for (i, s) in svi.iter().enumerate() {
                            for l in
                                compute_sightlines(&index, &footprints, &samples, i as u32, s, radius, 1e-6)
                            {
                                if l.status == SightStatus::Visible {
                                    set.insert(l.key());
                                }
                            }
                        }
                        set
                    };
                    prop_assert!(visible(r1).is_subset(&visible(r1 + growth)));
                    Ok(())
                },
            )
            .unwrap();

        // Road completeness never decreases with buffer growth or more SVI.
        let mut runner = TestRunner::new(config.clone());
        runner
            .run(
                &(
                    proptest::collection::vec((0.0f64..300.0, 0.0f64..300.0), 2..6),
                    proptest::collection::vec((0.0f64..300.0, 0.0f64..300.0), 1..8),
                    (0.0f64..300.0, 0.0f64..300.0),
                    10.0f64..60.0,
                    0.1f64..50.0,
                ),
                |(road_pts, svi_pts, extra_svi, buffer, growth)| {
                    let roads = vec![Road {
                        id: "r".into(),
                        points: road_pts.iter().map(|(x, y)| Point2::new(*x, *y)).collect(),
                    }];
                    let mut svi: Vec<Point2> =
                        svi_pts.iter().map(|(x, y)| Point2::new(*x, *y)).collect();
                    let base = covered_length(&roads, &svi, buffer);
                    prop_assert!(covered_length(&roads, &svi, buffer + growth) >= base - 1e-9);
                    svi.push(Point2::new(extra_svi.0, extra_svi.1));
                    prop_assert!(covered_length(&roads, &svi, buffer) >= base - 1e-9);
                    Ok(())
                },
            )
            .unwrap();

        // Nested start-anchored intervals give non-increasing per-cell
        // means on 5 synthetic cities.
        let grid = HexGrid::fine(Point2::new(0.0, 0.0));
        let mut cells_checked = 0usize;
        for seed in 1..=5 {
            let city = generate_city(&SynthConfig {
                seed,
                block_rows: 3,
                block_cols: 3,
                building_density: 0.5,
                svi_spacing_m: 10.0,
                ..SynthConfig::default()
            })
            .unwrap();
            let scan_config = IntervalScanConfig {
                intervals_m: vec![10.0, 20.0, 40.0, 80.0],
                radii_m: vec![50.0],
                ..IntervalScanConfig::default()
            };
            let result = scan(&city, &scan_config, &grid).unwrap();
            assert!(!result.rows.is_empty());
            for ((_, _), series) in result.series() {
                cells_checked += 1;
                for w in series.windows(2) {
                    assert!(w[1].mean_coc_b <= w[0].mean_coc_b + 1e-12);
                    assert!(w[1].mean_foc_b <= w[0].mean_foc_b + 1e-12);
                }
            }
        }
        format!("radius/buffer/SVI-superset at 1000 cases, {cells_checked} scan cells on 5 cities")
    });
}

#[test]
fn criterion_5_statistics_suite() {
    criterion(5, "statistics kernels vs hand evaluation", || {
        // Gi* on 3 cells in a line with values (0, 0, 9). Hand
        // substitution: mean 3, S = sqrt(18); end cells get
        // z = -sqrt(2) and 1/sqrt(2).
        let cell = |q: i32| CellId {
            level: GridLevel::Fine,
            q,
            r: 0,
        };
        let values = vec![(cell(0), 0.0), (cell(1), 0.0), (cell(2), 9.0)];
        let scores = getis_ord_gi_star(&values, |c| vec![cell(c.q - 1), *c, cell(c.q + 1)], 1.96);
        assert!((scores[0].z.unwrap() - (-std::f64::consts::SQRT_2)).abs() <= 1e-9);
        assert!((scores[2].z.unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() <= 1e-9);

        // All-equal input: undefined z, neutral classification everywhere.
        let flat: Vec<_> = (0..7).map(|q| (cell(q), 5.5)).collect();
        let scores = getis_ord_gi_star(&flat, |c| vec![cell(c.q - 1), *c, cell(c.q + 1)], 1.96);
        assert!(scores.iter().all(|g| g.z.is_none()
            && g.classification == svi_coverage::stats::HotspotClass::Neutral));

        // OLS recovers exact lines.
        let fit = ols_fit(&[1.0, 2.0, 3.0, 4.0], &[3.0, 5.0, 7.0, 9.0]).unwrap();
        assert!((fit.slope - 2.0).abs() <= 1e-9);
        assert!((fit.intercept - 1.0).abs() <= 1e-9);
        assert!((fit.pearson_r - 1.0).abs() <= 1e-9);

        // Polynomial interpolation on exact data has r2 = 1.
        let pts = vec![(1.0, 3.0), (2.0, -1.0), (4.0, 7.0), (5.0, 2.0), (8.0, 5.0)];
        let curve = fit_curve(&pts, CurveKind::Polynomial(4)).unwrap();
        assert!((curve.r2 - 1.0).abs() <= 1e-9);

        // Power fit recovers the exponent of y = x^-0.5 on [10, 95].
        let pts: Vec<(f64, f64)> = (0..18)
            .map(|k| {
                let x = 10.0 + 5.0 * k as f64;
                (x, x.powf(-0.5))
            })
            .collect();
        let curve = fit_curve(&pts, CurveKind::Power).unwrap();
        let slope_of_log = (curve.eval(20.0).ln() - curve.eval(10.0).ln()) / (20f64.ln() - 10f64.ln());
        assert!((slope_of_log - (-0.5)).abs() <= 1e-6);
        "Gi* 1e-9, OLS 1e-9, interpolation r2 = 1, power exponent 1e-6".to_string()
    });
}

#[test]
fn criterion_6_optimal_interval() {
    criterion(6, "optimal-interval detection", || {
        // Constructed series with the derivative crossing at exactly 60 m:
        // completeness 1 - 0.01(d-10), frequency 1 - 0.02(d-10)
        // + 0.0001(d-10)^2.
        let cell = CellId {
            level: GridLevel::Fine,
            q: 0,
            r: 0,
        };
        let mut fixture = ScanResult::default();
        for k in 0..18 {
            let d = 10.0 + 5.0 * k as f64;
            fixture.rows.push(ScanRow {
                cell,
                radius_m: 50.0,
                interval_m: d,
                mean_coc_b: 1.0 - 0.01 * (d - 10.0),
                mean_foc_b: 1.0 - 0.02 * (d - 10.0) + 0.0001 * (d - 10.0) * (d - 10.0),
            });
        }
        fixture.sort();
        let out = detect_optimal_interval(&fixture, FitChoice::Kind(CurveKind::SmoothingSpline));
        assert_eq!(out[0].status, DetectStatus::Detected);
        let found = out[0].optimal_m.unwrap();
        assert!(
            (found - 60.0).abs() <= 2.5,
            "detected {found}, expected 60 +- 2.5"
        );

        // Directional claim on the dense-core city: going from a 10 m to a
        // 15 m interval, the relative drop of mean FoC-B is at least the
        // relative drop of mean CoC-B on at least 80% of populated cells.
        let city = generate_city(&SynthConfig {
            seed: 7,
            block_rows: 6,
            block_cols: 6,
            building_density: 0.45,
            core_density_boost: 2.0,
            svi_spacing_m: 5.0,
            ..SynthConfig::default()
        })
        .unwrap();
        let grid = HexGrid::new(100.0, Point2::new(0.0, 0.0), GridLevel::Fine);
        let scan_config = IntervalScanConfig {
            intervals_m: vec![10.0, 15.0],
            radii_m: vec![50.0],
            ..IntervalScanConfig::default()
        };
        let result = scan(&city, &scan_config, &grid).unwrap();
        let mut satisfied = 0usize;
        let mut populated = 0usize;
        for ((_, _), series) in result.series() {
            let (first, second) = (series[0], series[1]);
            if first.mean_coc_b <= 0.0 || first.mean_foc_b <= 0.0 {
                continue;
            }
            populated += 1;
            let coc_drop = (first.mean_coc_b - second.mean_coc_b) / first.mean_coc_b;
            let foc_drop = (first.mean_foc_b - second.mean_foc_b) / first.mean_foc_b;
            if foc_drop >= coc_drop {
                satisfied += 1;
            }
        }
        assert!(populated > 0);
        let share = satisfied as f64 / populated as f64;
        assert!(
            share >= 0.8,
            "frequency declined faster on only {:.0}% of {populated} cells",
            share * 100.0
        );
        format!(
            "crossing detected at {found:.2} m; frequency fell faster on {satisfied}/{populated} cells"
        )
    });
}

#[test]
fn criterion_7_performance() {
    criterion(7, "throughput budgets", || {
        // Coverage stage on ~5000 buildings / ~100k samples / ~10k SVI at
        // radius 50, single worker, under 120 s.
        let city = generate_city(&SynthConfig {
            seed: 1,
            block_rows: 22,
            block_cols: 22,
            building_density: 0.65,
            svi_spacing_m: 8.0,
            ..SynthConfig::default()
        })
        .unwrap();
        assert!(
            (4500..=5500).contains(&city.footprints.len()),
            "{} buildings",
            city.footprints.len()
        );
        assert!(
            (9000..=11500).contains(&city.svi_points.len()),
            "{} SVI",
            city.svi_points.len()
        );
        let samples = sample_scene(&city.footprints, 2.0).unwrap();
        assert!(samples.len() >= 90_000, "{} samples", samples.len());

        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let started = Instant::now();
        let lines = pool.install(|| {
            let index = build_index(&city.footprints, &samples, 50.0);
            all_sightlines(&index, &city.footprints, &samples, &city.svi_points, 50.0, 1e-6)
        });
        let coverage_elapsed = started.elapsed();
        assert!(!lines.is_empty());
        assert!(
            coverage_elapsed.as_secs_f64() < 120.0,
            "coverage stage took {coverage_elapsed:?}"
        );

        // Indexed engine at least 10x faster than the oracle on a
        // 500-building / 500-SVI scene.
        let small = generate_city(&SynthConfig {
            seed: 2,
            block_rows: 7,
            block_cols: 7,
            building_density: 0.65,
            svi_spacing_m: 8.0,
            ..SynthConfig::default()
        })
        .unwrap();
        assert!(small.footprints.len() >= 450, "{}", small.footprints.len());
        let svi: Vec<SviPoint> = small.svi_points.into_iter().take(500).collect();
        let samples = sample_scene(&small.footprints, 2.0).unwrap();

        let (indexed_elapsed, oracle_elapsed) = pool.install(|| {
            let started = Instant::now();
            let index = build_index(&small.footprints, &samples, 50.0);
            let fast = all_sightlines(&index, &small.footprints, &samples, &svi, 50.0, 1e-6);
            let indexed_elapsed = started.elapsed();

            let started = Instant::now();
            let mut slow = Vec::new();
            for (i, s) in svi.iter().enumerate() {
                slow.extend(brute_force_sightlines(
                    &small.footprints,
                    &samples,
                    i as u32,
                    s,
                    50.0,
                    1e-6,
                ));
            }
            let oracle_elapsed = started.elapsed();
            assert_eq!(fast.len(), slow.len());
            (indexed_elapsed, oracle_elapsed)
        });
        let speedup = oracle_elapsed.as_secs_f64() / indexed_elapsed.as_secs_f64();
        assert!(
            speedup >= 10.0,
            "indexed {indexed_elapsed:?} vs oracle {oracle_elapsed:?} = {speedup:.1}x"
        );
        format!(
            "coverage stage {:.1}s (budget 120s); index speedup {speedup:.0}x (budget 10x)",
            coverage_elapsed.as_secs_f64()
        )
    });
}

#[test]
fn criterion_8_determinism() {
    criterion(8, "byte-identical outputs", || {
        let tmp = tempfile::tempdir().unwrap();
        let config = tmp.path().join("config.toml");
        std::fs::write(
            &config,
            "[synth]\nseed = 5\nblock_rows = 2\nblock_cols = 2\n\n[intervals]\nintervals_m = [10.0, 20.0, 40.0]\nradii_m = [50.0]\n",
        )
        .unwrap();
        let run = |args: &[&str]| {
            let out = Command::new(env!("CARGO_BIN_EXE_svi-coverage"))
                .args(["--config", config.to_str().unwrap()])
                .args(args)
                .output()
                .expect("spawn");
            assert!(
                out.status.success(),
                "{args:?}: {}",
                String::from_utf8_lossy(&out.stderr)
            );
        };
        let scene_a = tmp.path().join("scene_a");
        let scene_b = tmp.path().join("scene_b");
        run(&["synth", "--out", scene_a.to_str().unwrap()]);
        run(&["synth", "--out", scene_b.to_str().unwrap()]);

        let full_run = |scene: &Path, out: &Path| {
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
                run(&[
                    cmd,
                    "--scene",
                    scene.to_str().unwrap(),
                    "--out",
                    out.to_str().unwrap(),
                ]);
            }
        };
        let out_a = tmp.path().join("out_a");
        let out_b = tmp.path().join("out_b");
        full_run(&scene_a, &out_a);
        full_run(&scene_b, &out_b);

        let mut compared = 0usize;
        for dir_pair in [(&scene_a, &scene_b), (&out_a, &out_b)] {
            let mut names: Vec<String> = std::fs::read_dir(dir_pair.0)
                .unwrap()
                .map(|e| e.unwrap().file_name().into_string().unwrap())
                .collect();
            names.sort();
            for name in names {
                if name == "manifest.json" {
                    continue; // records wall-clock durations by design
                }
                let a = std::fs::read(dir_pair.0.join(&name)).unwrap();
                let b = std::fs::read(dir_pair.1.join(&name)).unwrap();
                assert_eq!(a, b, "{name} differs between identical runs");
                compared += 1;
            }
        }
        format!("{compared} output files byte-identical across independent runs")
    });
}
