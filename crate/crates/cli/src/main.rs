//! `physarum` — experiment runner and oracle CLI.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use physarum::{run_experiment, ExperimentSpec, ReportOptions, EXPERIMENT_NAMES};
use physarum_core::environment::{GridSpec, SceneDocument, SceneLimits, DEFAULT_MAX_CELLS};
use physarum_core::geometry::{beta_skeleton, delaunay, euclidean_mst, voronoi_raster, SiteSet};

#[derive(Parser)]
#[command(name = "physarum", about = "Virtual plasmodium experiments and geometry oracles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named experiment and write its artifact tree.
    Run(RunArgs),
    /// Evaluate a classical geometry oracle on a site set.
    Oracle(OracleArgs),
    /// Parse and validate a scene document.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// One of: voronoi, delaunay, spanning_tree, continuation, maze,
    /// substrate_shape, phase_space.
    experiment: String,
    /// Scene document (defaults to the experiment's built-in scene).
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Random seed; also seeds the built-in scene layout.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for artifacts.
    #[arg(long)]
    out: PathBuf,
    /// Override the experiment's tick budget.
    #[arg(long)]
    ticks: Option<u64>,
    /// Write the report and trace only, no rasters or SVG.
    #[arg(long)]
    report_only: bool,
}

#[derive(Args)]
struct OracleArgs {
    /// One of: voronoi, delaunay, mst, beta.
    oracle: String,
    /// JSON file: {"sites": [[x, y], ...]} in millimetres.
    #[arg(long)]
    sites: PathBuf,
    /// Lune parameter for the beta oracle (>= 1).
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Write the result here (PGM for voronoi, JSON otherwise); stdout
    /// gets a JSON summary regardless.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Raster width in cells for the voronoi oracle.
    #[arg(long, default_value_t = 256)]
    width: u32,
    /// Raster height in cells for the voronoi oracle.
    #[arg(long, default_value_t = 256)]
    height: u32,
    /// Cell size in millimetres for the voronoi oracle.
    #[arg(long, default_value_t = 1.0)]
    cell_size: f64,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    scene: PathBuf,
}

fn scene_limits() -> SceneLimits {
    let max_cells = std::env::var("PHYSARUM_MAX_CELLS")
        .ok()
        .and_then(|v| v.parse::<u64>().ok())
        .unwrap_or(DEFAULT_MAX_CELLS);
    SceneLimits { max_cells }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run(args) => {
            if !EXPERIMENT_NAMES.contains(&args.experiment.as_str()) {
                bail!(
                    "unknown experiment '{}'; expected one of {}",
                    args.experiment,
                    EXPERIMENT_NAMES.join(", ")
                );
            }
            let scene = match &args.scene {
                Some(path) => {
                    let text = fs::read_to_string(path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    Some(SceneDocument::parse(&text).map_err(|e| anyhow!("{e}"))?)
                }
                None => None,
            };
            let spec = ExperimentSpec {
                name: args.experiment.clone(),
                scene,
                seed: args.seed,
                output_dir: args.out.clone(),
                ticks: args.ticks,
                report_only: args.report_only,
                options: ReportOptions::default(),
                limits: scene_limits(),
            };
            let report = run_experiment(&spec)?;
            println!(
                "{}: {} in {} ticks ({:.2} s), thresholds {}",
                report.experiment,
                if report.completed { "completed" } else { "incomplete" },
                report.ticks,
                report.wall_seconds,
                if report.thresholds_met { "met" } else { "missed" },
            );
            println!("report: {}", args.out.join("report.json").display());
            Ok(if !report.completed {
                ExitCode::from(2)
            } else if !report.thresholds_met {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Oracle(args) => {
            let sites = load_sites(&args.sites)?;
            let json = match args.oracle.as_str() {
                "voronoi" => {
                    let grid = GridSpec {
                        width: args.width,
                        height: args.height,
                        cell_size_mm: args.cell_size,
                    };
                    let part = voronoi_raster(&sites, &grid).map_err(|e| anyhow!(e))?;
                    if let Some(out) = &args.out {
                        physarum::render::write_pgm(
                            out,
                            grid.width,
                            grid.height,
                            &physarum::render::partition_bytes(&part),
                        )?;
                    }
                    let boundary = part.boundary_cells().len();
                    format!(
                        "{{\"boundary_cells\": {boundary}, \"cells\": {}}}",
                        grid.cell_count()
                    )
                }
                "delaunay" => graph_json(&delaunay(&sites).map_err(|e| anyhow!(e))?, &args)?,
                "mst" => graph_json(&euclidean_mst(&sites).map_err(|e| anyhow!(e))?, &args)?,
                "beta" => graph_json(
                    &beta_skeleton(&sites, args.beta).map_err(|e| anyhow!(e))?,
                    &args,
                )?,
                other => bail!("unknown oracle '{other}'; expected voronoi, delaunay, mst or beta"),
            };
            println!("{json}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate(args) => {
            let text = fs::read_to_string(&args.scene)
                .with_context(|| format!("reading {}", args.scene.display()))?;
            let base = args
                .scene
                .parent()
                .map(|p| p.to_path_buf())
                .unwrap_or_else(|| PathBuf::from("."));
            match physarum_core::environment::parse_scene_with_base(&text, &base, &scene_limits())
            {
                Ok(scene) => {
                    println!(
                        "ok: {}x{} grid, {} sources, {} inoculation sites",
                        scene.grid.width,
                        scene.grid.height,
                        scene.sources.len(),
                        scene.inoculation_sites.len()
                    );
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    eprintln!("invalid scene: {e}");
                    Ok(ExitCode::from(1))
                }
            }
        }
    }
}

fn load_sites(path: &PathBuf) -> anyhow::Result<SiteSet> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let arr = value
        .get("sites")
        .and_then(|s| s.as_array())
        .ok_or_else(|| anyhow!("expected {{\"sites\": [[x, y], ...]}}"))?;
    let mut pts = Vec::with_capacity(arr.len());
    for (i, p) in arr.iter().enumerate() {
        let pair = p
            .as_array()
            .filter(|a| a.len() == 2)
            .ok_or_else(|| anyhow!("site {i} is not an [x, y] pair"))?;
        let x = pair[0].as_f64().ok_or_else(|| anyhow!("site {i} x not a number"))?;
        let y = pair[1].as_f64().ok_or_else(|| anyhow!("site {i} y not a number"))?;
        pts.push((x, y));
    }
    SiteSet::new(pts).map_err(|e| anyhow!(e))
}

fn graph_json(
    graph: &physarum_core::geometry::PlanarGraph,
    args: &OracleArgs,
) -> anyhow::Result<String> {
    let json = graph.to_json();
    if let Some(out) = &args.out {
        fs::write(out, &json)?;
    }
    Ok(json)
}
