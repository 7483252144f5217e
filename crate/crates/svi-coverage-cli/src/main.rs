//! Batch pipeline for occlusion-aware street-view-imagery coverage
//! analysis of building facades: synthetic scenes, sightline computation,
//! completeness/frequency indicators, hex-grid aggregation with hotspot
//! statistics, and collection-interval optimization.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::Config;

#[derive(Parser)]
#[command(
    name = "svi-coverage",
    version,
    about = "Feature-level street-view-imagery coverage analysis for building facades"
)]
struct Cli {
    /// Structured config file (TOML). Flags override individual values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for the sightline sweep (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    parallelism: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SceneOut {
    /// Scene directory: footprints.geojson, roads.geojson,
    /// svi_points.geojson, optional segmentation_bins.csv and
    /// population.csv.
    #[arg(long)]
    scene: PathBuf,
    /// Output directory (created if missing, never equal to --scene).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a deterministic synthetic city scene.
    Synth {
        /// Output directory for the generated scene files.
        #[arg(long)]
        out: PathBuf,
        /// Generator seed (overrides config).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compute occlusion-resolved sightlines for a scene.
    Coverage {
        #[command(flatten)]
        scene_out: SceneOut,
        /// Isovist radius in meters (overrides config).
        #[arg(long)]
        radius: Option<f64>,
        /// Resample SVI along roads at this interval before analysis.
        #[arg(long)]
        interval: Option<f64>,
        /// Segmentation building-proportion threshold (overrides config).
        #[arg(long)]
        threshold: Option<f64>,
        /// Ignore segmentation bins even when present.
        #[arg(long)]
        geometric_only: bool,
    },
    /// Aggregate sightlines into per-building indicators.
    Indicators {
        #[command(flatten)]
        scene_out: SceneOut,
        /// Sightlines table to ingest (default: <out>/sightlines.csv when
        /// present, else recompute).
        #[arg(long)]
        sightlines: Option<PathBuf>,
    },
    /// Aggregate building indicators onto the hex grid, with road
    /// coverage and Gi* z-scores.
    GridAgg {
        #[command(flatten)]
        scene_out: SceneOut,
        /// Fine hex edge length in meters (overrides config).
        #[arg(long)]
        grid_edge: Option<f64>,
    },
    /// Per-cell road-network coverage completeness.
    RoadCoverage {
        #[command(flatten)]
        scene_out: SceneOut,
        #[arg(long)]
        grid_edge: Option<f64>,
    },
    /// Getis-Ord Gi* hotspot classification for the cell metrics.
    Hotspot {
        #[command(flatten)]
        scene_out: SceneOut,
        #[arg(long)]
        grid_edge: Option<f64>,
    },
    /// Per-type regression of FoC-A against footprint count share.
    BiasRegression {
        #[command(flatten)]
        scene_out: SceneOut,
        #[arg(long)]
        grid_edge: Option<f64>,
    },
    /// Indicator means across SVI collection intervals.
    IntervalScan {
        #[command(flatten)]
        scene_out: SceneOut,
        #[arg(long)]
        grid_edge: Option<f64>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        geometric_only: bool,
    },
    /// Detect the per-cell optimal collection interval from a scan.
    OptimalInterval {
        #[command(flatten)]
        scene_out: SceneOut,
        /// Scan table to ingest (default: <out>/scan.csv when present,
        /// else rescan).
        #[arg(long)]
        scan: Option<PathBuf>,
        /// Fit family: smoothing-spline | polynomial<d> | power |
        /// logarithm | auto.
        #[arg(long)]
        fit: Option<String>,
        #[arg(long)]
        grid_edge: Option<f64>,
    },
    /// Grouped coverage summary and scene diagnostics.
    Summary {
        #[command(flatten)]
        scene_out: SceneOut,
    },
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    if cli.parallelism > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.parallelism)
            .build_global()
            .ok();
    }
    let config = Config::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Synth { out, seed } => commands::cmd_synth(&config, out, *seed),
        Command::Coverage {
            scene_out,
            radius,
            interval,
            threshold,
            geometric_only,
        } => {
            commands::check_out_dir_not_scene(&scene_out.scene, &scene_out.out)?;
            commands::cmd_coverage(
                &config,
                &scene_out.scene,
                &scene_out.out,
                *radius,
                *interval,
                *threshold,
                *geometric_only,
            )
        }
        Command::Indicators {
            scene_out,
            sightlines,
        } => {
            commands::check_out_dir_not_scene(&scene_out.scene, &scene_out.out)?;
            commands::cmd_indicators(&config, &scene_out.scene, &scene_out.out, sightlines.as_deref())
        }
        Command::GridAgg {
            scene_out,
            grid_edge,
        } => {
            commands::check_out_dir_not_scene(&scene_out.scene, &scene_out.out)?;
            commands::cmd_grid_agg(&config, &scene_out.scene, &scene_out.out, *grid_edge)
        }
        Command::RoadCoverage {
            scene_out,
            grid_edge,
        } => {
            commands::check_out_dir_not_scene(&scene_out.scene, &scene_out.out)?;
            commands::cmd_road_coverage(&config, &scene_out.scene, &scene_out.out, *grid_edge)
        }
        Command::Hotspot {
            scene_out,
            grid_edge,
        } => {
            commands::check_out_dir_not_scene(&scene_out.scene, &scene_out.out)?;
            commands::cmd_hotspot(&config, &scene_out.scene, &scene_out.out, *grid_edge)
        }
        Command::BiasRegression {
            scene_out,
            grid_edge,
        } => {
            commands::check_out_dir_not_scene(&scene_out.scene, &scene_out.out)?;
            commands::cmd_bias_regression(&config, &scene_out.scene, &scene_out.out, *grid_edge)
        }
        Command::IntervalScan {
            scene_out,
            grid_edge,
            threshold,
            geometric_only,
        } => {
            commands::check_out_dir_not_scene(&scene_out.scene, &scene_out.out)?;
            commands::cmd_interval_scan(
                &config,
                &scene_out.scene,
                &scene_out.out,
                *grid_edge,
                *threshold,
                *geometric_only,
            )
        }
        Command::OptimalInterval {
            scene_out,
            scan,
            fit,
            grid_edge,
        } => {
            commands::check_out_dir_not_scene(&scene_out.scene, &scene_out.out)?;
            commands::cmd_optimal_interval(
                &config,
                &scene_out.scene,
                &scene_out.out,
                scan.as_deref(),
                fit.as_deref(),
                *grid_edge,
            )
        }
        Command::Summary { scene_out } => {
            commands::check_out_dir_not_scene(&scene_out.scene, &scene_out.out)?;
            commands::cmd_summary(&config, &scene_out.scene, &scene_out.out)
        }
    }
}
