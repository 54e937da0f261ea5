//! Named experiments: each reproduces one growth scenario, scores it
//! against the matching classical oracle, and leaves a deterministic
//! artifact tree (report.json, trace.ndjson, rasters, SVG).

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};

use physarum_core::engine::{
    extract_graph, init_plasmodium, run_until, warm_fields, Fields, NodeKind, PlasmodiumState,
    RunTrace, StopCondition, TubeGraph,
};
use physarum_core::environment::{Cell, Scene, SceneDocument, SceneLimits, SpeciesKind};
use physarum_core::geometry::{
    beta_skeleton, delaunay, euclidean_mst, voronoi_raster, PlanarGraph, SiteSet,
};
use physarum_core::morphometrics::{
    self, bisector_coverage, classify_quadrant, edge_match, mean_degree, order_score,
    tree_length_ratio, ComparisonReport, MorphologyReport, Quadrant, QuadrantThresholds,
};

use crate::render;
use crate::report::Value;
use crate::scenes;

pub const EXPERIMENT_NAMES: [&str; 7] = [
    "voronoi",
    "delaunay",
    "spanning_tree",
    "continuation",
    "maze",
    "substrate_shape",
    "phase_space",
];

/// Tolerances and thresholds applied when judging a run.
#[derive(Debug, Clone)]
pub struct ReportOptions {
    pub coverage_tol: u32,
    pub coverage_min: f64,
    pub precision_min: f64,
    pub tree_ratio_max: f64,
    pub path_ratio_max: f64,
    pub node_tol_cells: f64,
    pub density_ratio_min: f64,
    pub thresholds: QuadrantThresholds,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            coverage_tol: 2,
            coverage_min: 0.90,
            precision_min: 0.8,
            tree_ratio_max: 1.5,
            path_ratio_max: 1.2,
            node_tol_cells: 3.0,
            density_ratio_min: 5.0,
            thresholds: QuadrantThresholds::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub name: String,
    /// None means "use the built-in scene for this experiment".
    pub scene: Option<SceneDocument>,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Overrides the experiment's default tick budget.
    pub ticks: Option<u64>,
    /// Skip raster/vector artifacts; still writes report and trace.
    pub report_only: bool,
    pub options: ReportOptions,
    pub limits: SceneLimits,
}

/// Everything a finished run reports.
#[derive(Debug)]
pub struct RunReport {
    pub experiment: String,
    pub seed: u64,
    pub ticks: u64,
    pub completed: bool,
    pub thresholds_met: bool,
    pub comparison: ComparisonReport,
    pub morphology: Option<MorphologyReport>,
    pub details: BTreeMap<String, Value>,
    pub artifacts: Vec<String>,
    /// Wall-clock duration; deliberately left out of report.json so equal
    /// seeds produce byte-identical files.
    pub wall_seconds: f64,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let comparison = Value::object(vec![
            ("bisector_coverage", Value::opt_float(self.comparison.bisector_coverage)),
            ("edge_precision", Value::opt_float(self.comparison.edge_precision)),
            ("edge_recall", Value::opt_float(self.comparison.edge_recall)),
            ("tree_length_ratio", Value::opt_float(self.comparison.tree_length_ratio)),
            ("path_ratio", Value::opt_float(self.comparison.path_ratio)),
            (
                "self_avoidance_index",
                Value::opt_float(self.comparison.self_avoidance_index),
            ),
        ]);
        let morphology = match &self.morphology {
            Some(m) => Value::object(vec![
                ("mean_degree", Value::Float(m.mean_degree)),
                ("order_score", Value::Float(m.order_score)),
                ("quadrant", Value::Str(m.quadrant.as_str().to_string())),
            ]),
            None => Value::Null,
        };
        Value::object(vec![
            ("experiment", Value::Str(self.experiment.clone())),
            ("seed", Value::Int(self.seed as i64)),
            ("ticks", Value::Int(self.ticks as i64)),
            ("completed", Value::Bool(self.completed)),
            ("thresholds_met", Value::Bool(self.thresholds_met)),
            ("comparison", comparison),
            ("morphology", morphology),
            ("details", Value::Object(self.details.clone())),
            (
                "artifacts",
                Value::Array(self.artifacts.iter().map(|a| Value::Str(a.clone())).collect()),
            ),
        ])
        .render()
    }
}

/// Millimetre centre of a cell given the scene grid.
fn site_points_mm(scene: &Scene, cells: impl Iterator<Item = Cell>) -> Vec<(f64, f64)> {
    cells.map(|c| scene.grid.cell_center_mm(c)).collect()
}

fn write_trace(path: &PathBuf, trace: &RunTrace) -> anyhow::Result<()> {
    let mut out = String::new();
    for t in &trace.ticks {
        let line = Value::object(vec![
            ("colonized", Value::Int(t.colonized as i64)),
            ("occupied", Value::Int(t.occupied as i64)),
            ("tick", Value::Int(t.tick as i64)),
            ("zones", Value::Int(t.zones as i64)),
        ]);
        out.push_str(&line.render());
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

struct EngineRun {
    scene: Scene,
    state: PlasmodiumState,
    fields: Fields,
    trace: RunTrace,
    completed: bool,
}

impl EngineRun {
    fn start(scene: Scene, warmup_ticks: u64) -> Self {
        let state = init_plasmodium(&scene);
        let fields = Fields::zeroed(&scene);
        let mut run = EngineRun {
            scene,
            state,
            fields,
            trace: RunTrace::default(),
            completed: false,
        };
        warm_fields(&mut run.state, &mut run.fields, &run.scene, warmup_ticks);
        run
    }

    fn run(&mut self, stop: StopCondition) {
        let result = run_until(&mut self.state, &mut self.fields, &self.scene, stop);
        self.completed = result.completed;
        self.trace.ticks.extend(result.trace.ticks);
        self.trace.choices.extend(result.trace.choices);
    }

    fn graph(&self) -> anyhow::Result<TubeGraph> {
        extract_graph(&self.state, self.scene.grid.cell_size_mm).map_err(|e| anyhow!(e))
    }
}

/// Do all `sites` have a live-connected tube node within tolerance?
fn sites_connected(graph: &TubeGraph, scene: &Scene, sites: &[(f64, f64)], tol_mm: f64) -> bool {
    let mut matched: Vec<usize> = Vec::new();
    for &(sx, sy) in sites {
        let mut best: Option<(f64, usize)> = None;
        for (ni, n) in graph.nodes.iter().enumerate() {
            let (nx, ny) = scene.grid.cell_center_mm(n.position);
            let d = ((sx - nx).powi(2) + (sy - ny).powi(2)).sqrt();
            if d <= tol_mm && best.map(|(bd, _)| d < bd).unwrap_or(true) {
                best = Some((d, ni));
            }
        }
        match best {
            Some((_, ni)) => matched.push(ni),
            None => return false,
        }
    }
    let reach = graph.live_component(matched[0]);
    matched.iter().all(|&ni| reach[ni])
}

/// Runs the named experiment and writes its artifact tree.
pub fn run_experiment(spec: &ExperimentSpec) -> anyhow::Result<RunReport> {
    let started = Instant::now();
    fs::create_dir_all(&spec.output_dir)
        .with_context(|| format!("creating {}", spec.output_dir.display()))?;

    if spec.name == "phase_space" {
        return phase_space_experiment(spec, started);
    }

    // Materialise the scene document next to the artifacts, then parse it
    // back through the normal path (this also resolves mask images).
    let doc = match &spec.scene {
        Some(doc) => doc.clone(),
        None => scenes::default_scene(&spec.name, spec.seed)
            .ok_or_else(|| anyhow!("no default scene for experiment {}", spec.name))?,
    };
    if spec.name == "substrate_shape" && doc.substrate.mask_image.as_deref() == Some("man_mask.pgm")
    {
        fs::write(spec.output_dir.join("man_mask.pgm"), scenes::man_mask_pgm(128, 128))?;
    }
    let scene_path = spec.output_dir.join("scene.json");
    fs::write(&scene_path, doc.to_json())?;
    let scene = doc
        .clone()
        .into_scene(Some(&spec.output_dir), &spec.limits)
        .map_err(|e| anyhow!("scene: {e}"))?;

    let mut artifacts = vec!["scene.json".to_string()];
    if spec.name == "substrate_shape" {
        artifacts.push("man_mask.pgm".to_string());
    }

    // Stimuli equilibrate on the dish before the plasmodium is placed.
    let warmup = match spec.name.as_str() {
        "delaunay" | "spanning_tree" | "continuation" => 3000,
        "substrate_shape" => 1500,
        _ => 0,
    };
    let mut run = EngineRun::start(scene, warmup);
    let mut comparison = ComparisonReport::default();
    let mut details: BTreeMap<String, Value> = BTreeMap::new();
    let mut thresholds_met = true;
    let mut oracle_overlay: Option<PlanarGraph> = None;
    let opt = &spec.options;
    let node_tol_mm = opt.node_tol_cells * run.scene.grid.cell_size_mm;

    match spec.name.as_str() {
        "voronoi" => {
            let ticks = spec.ticks.unwrap_or(420);
            run.run(StopCondition::MaxTicks(ticks));
            let sites = SiteSet::new(site_points_mm(
                &run.scene,
                run.scene.inoculation_sites.iter().copied(),
            ))
            .map_err(|e| anyhow!(e))?;
            let oracle = voronoi_raster(&sites, &run.scene.grid).map_err(|e| anyhow!(e))?;
            let empty = run.state.occupancy.empty_cells();
            let coverage =
                bisector_coverage(&empty, &run.scene.grid, &oracle, opt.coverage_tol)
                    .map_err(|e| anyhow!(e))?;
            comparison.bisector_coverage = Some(coverage);
            thresholds_met &= coverage >= opt.coverage_min;
            details.insert("empty_cells".into(), Value::Int(empty.len() as i64));
            if !spec.report_only {
                render::write_pgm(
                    &spec.output_dir.join("voronoi_oracle.pgm"),
                    oracle.grid().width,
                    oracle.grid().height,
                    &render::partition_bytes(&oracle),
                )?;
                artifacts.push("voronoi_oracle.pgm".to_string());
            }
        }
        "delaunay" => {
            let ticks = spec.ticks.unwrap_or(9000);
            run.run(StopCondition::MaxTicks(ticks));
            let site_cells: Vec<Cell> = run.scene.inoculation_sites.clone();
            let sites_mm = site_points_mm(&run.scene, site_cells.into_iter());
            let sites = SiteSet::new(sites_mm.clone()).map_err(|e| anyhow!(e))?;
            let dt = delaunay(&sites).map_err(|e| anyhow!(e))?;
            let graph = run.graph()?;
            let m = edge_match(&graph, &dt, node_tol_mm, run.scene.grid.cell_size_mm);
            let connected = sites_connected(&graph, &run.scene, &sites_mm, node_tol_mm);
            comparison.edge_precision = Some(m.precision);
            comparison.edge_recall = Some(m.recall);
            details.insert("connected".into(), Value::Bool(connected));
            thresholds_met &= m.precision >= opt.precision_min && connected;
            oracle_overlay = Some(dt);
        }
        "spanning_tree" => {
            let ticks = spec.ticks.unwrap_or(12000);
            run.run(StopCondition::AllSourcesColonized { max_ticks: ticks });
            let graph = run.graph()?;
            // The grown tree spans the colony root and every bait.
            let mut points = site_points_mm(
                &run.scene,
                run.scene.inoculation_sites.iter().copied(),
            );
            points.extend(site_points_mm(
                &run.scene,
                run.scene.sources.iter().map(|s| s.position),
            ));
            let sites = SiteSet::new(points).map_err(|e| anyhow!(e))?;
            let acyclic = graph.live_is_acyclic();
            details.insert("acyclic".into(), Value::Bool(acyclic));
            match tree_length_ratio(&graph, &sites, node_tol_mm, run.scene.grid.cell_size_mm) {
                Ok(ratio) => {
                    comparison.tree_length_ratio = Some(ratio);
                    thresholds_met &= ratio <= opt.tree_ratio_max && acyclic && run.completed;
                }
                Err(e) => {
                    details.insert("spanning_error".into(), Value::Str(e.to_string()));
                    thresholds_met = false;
                }
            }
        }
        "continuation" => {
            let ticks = spec.ticks.unwrap_or(12000);
            run.run(StopCondition::AllSourcesColonized { max_ticks: ticks });
            let spanned = run.completed;
            if spanned {
                run.run(StopCondition::MaxTicks(500));
                run.completed = true;
            }
            let graph = run.graph()?;
            let max_visits = graph.edges.iter().map(|e| e.visits).max().unwrap_or(0);
            details.insert("spanned".into(), Value::Bool(spanned));
            details.insert("max_edge_visits".into(), Value::Int(max_visits as i64));
            thresholds_met &= spanned && max_visits >= 2;
        }
        "maze" => {
            let ticks = spec.ticks.unwrap_or(8000);
            run.run(StopCondition::AllSourcesColonized { max_ticks: ticks });
            let colonized = run.completed;
            if colonized && run.state.live_zone_count() > 1 {
                run.run(StopCondition::SingleZoneRemaining { max_ticks: 4000 });
            }
            let live = run.state.live_zone_count();
            details.insert("live_zones".into(), Value::Int(live as i64));
            let maze = scenes::maze_oracle_grid(&doc);
            if colonized {
                let graph = run.graph()?;
                let root = graph
                    .node_at(run.scene.inoculation_sites[0])
                    .ok_or_else(|| anyhow!("missing inoculation node"))?;
                let food = graph
                    .node_at(run.scene.sources[0].position)
                    .ok_or_else(|| anyhow!("missing chamber food node"))?;
                let sim_len = graph
                    .live_path_length_mm(root, food)
                    .ok_or_else(|| anyhow!("chamber not connected through live tubes"))?;
                let ratio = morphometrics::path_ratio(sim_len, &maze).map_err(|e| anyhow!(e))?;
                comparison.path_ratio = Some(ratio);
                thresholds_met &= ratio <= opt.path_ratio_max && live == 1;
            } else {
                run.completed = false;
                thresholds_met = false;
            }
        }
        "substrate_shape" => {
            let ticks = spec.ticks.unwrap_or(3000);
            run.run(StopCondition::MaxTicks(ticks));
            let scene = &run.scene;
            let theta = scene.params.nutrient_threshold;
            let (mut in_cells, mut in_occ, mut out_cells, mut out_occ) = (0u64, 0u64, 0u64, 0u64);
            for y in 0..scene.grid.height {
                for x in 0..scene.grid.width {
                    let cell = Cell::new(x, y);
                    if scene.substrate.is_wall(cell) {
                        continue;
                    }
                    let occupied = run.state.occupancy.tag(cell)
                        != physarum_core::engine::CellTag::Empty;
                    if scene.substrate.nutrient(cell) >= theta {
                        in_cells += 1;
                        in_occ += occupied as u64;
                    } else {
                        out_cells += 1;
                        out_occ += occupied as u64;
                    }
                }
            }
            let inside = in_occ as f64 / in_cells.max(1) as f64;
            let outside = out_occ as f64 / out_cells.max(1) as f64;
            let ratio = if outside > 0.0 { inside / outside } else { f64::INFINITY };
            let graph = run.graph()?;
            let outside_branches = graph
                .nodes
                .iter()
                .filter(|n| {
                    n.kind == NodeKind::Branch
                        && run.scene.substrate.nutrient(n.position) < theta
                })
                .count();
            details.insert("density_inside".into(), Value::Float(inside));
            details.insert("density_outside".into(), Value::Float(outside));
            details.insert(
                "density_ratio".into(),
                if ratio.is_finite() { Value::Float(ratio) } else { Value::Str("inf".into()) },
            );
            details.insert("outside_branch_nodes".into(), Value::Int(outside_branches as i64));
            thresholds_met &= ratio >= opt.density_ratio_min && outside_branches >= 1;
        }
        other => bail!("unknown experiment {other}"),
    }

    comparison.self_avoidance_index = morphometrics::self_avoidance_index(&run.trace);

    let graph = run.graph()?;
    let morphology = match (mean_degree(&graph), order_score(&graph)) {
        (Ok(deg), Ok(ord)) => Some(MorphologyReport {
            mean_degree: deg,
            order_score: ord,
            quadrant: classify_quadrant(deg, ord, opt.thresholds),
        }),
        _ => None,
    };

    // Artifacts.
    let trace_path = spec.output_dir.join("trace.ndjson");
    write_trace(&trace_path, &run.trace)?;
    artifacts.push("trace.ndjson".to_string());
    if !spec.report_only {
        render::write_pgm(
            &spec.output_dir.join("occupancy.pgm"),
            run.scene.grid.width,
            run.scene.grid.height,
            &render::occupancy_bytes(&run.state.occupancy),
        )?;
        artifacts.push("occupancy.pgm".to_string());
        if run.scene.sources.iter().any(|s| s.kind == SpeciesKind::Attractant) {
            render::write_pgm(
                &spec.output_dir.join("attractant.pgm"),
                run.scene.grid.width,
                run.scene.grid.height,
                &render::field_bytes(&run.fields.attractant),
            )?;
            artifacts.push("attractant.pgm".to_string());
        }
        let svg = render::graph_svg(&run.scene.grid, Some(&graph), None, oracle_overlay.as_ref());
        fs::write(spec.output_dir.join("graph.svg"), svg)?;
        artifacts.push("graph.svg".to_string());
    }

    let mut report = RunReport {
        experiment: spec.name.clone(),
        seed: spec.seed,
        ticks: run.state.tick,
        completed: run.completed,
        thresholds_met: thresholds_met && run.completed,
        comparison,
        morphology,
        details,
        artifacts,
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    report.artifacts.push("report.json".to_string());
    report.artifacts.sort();
    fs::write(spec.output_dir.join("report.json"), report.to_json())?;
    Ok(report)
}

/// The four β-skeleton exemplar morphologies and their quadrants. Runs no
/// engine; generates the point sets, scores them, and emits the scatter.
fn phase_space_experiment(spec: &ExperimentSpec, started: Instant) -> anyhow::Result<RunReport> {
    let exemplars = phase_space_exemplars(spec.seed);
    let opt = &spec.options;

    let mut details = BTreeMap::new();
    let mut thresholds_met = true;
    let mut scatter = Vec::new();
    for (name, expect, graph) in &exemplars {
        let deg = mean_degree(graph).map_err(|e| anyhow!(e))?;
        let ord = order_score(graph).map_err(|e| anyhow!(e))?;
        let quadrant = classify_quadrant(deg, ord, opt.thresholds);
        thresholds_met &= quadrant == *expect;
        details.insert(
            (*name).to_string(),
            Value::object(vec![
                ("mean_degree", Value::Float(deg)),
                ("order_score", Value::Float(ord)),
                ("quadrant", Value::Str(quadrant.as_str().to_string())),
                ("expected", Value::Str(expect.as_str().to_string())),
            ]),
        );
        scatter.push((*name, deg, ord));
    }

    let mut artifacts = vec!["report.json".to_string()];
    if !spec.report_only {
        let svg = phase_plane_svg(&scatter, opt.thresholds);
        fs::write(spec.output_dir.join("phase_space.svg"), svg)?;
        artifacts.push("phase_space.svg".to_string());
        for (name, _, graph) in &exemplars {
            let svg = render::graph_svg(
                &physarum_core::environment::GridSpec {
                    width: 110,
                    height: 110,
                    cell_size_mm: 1.0,
                },
                None,
                Some(graph),
                None,
            );
            let file = format!("exemplar_{name}.svg");
            fs::write(spec.output_dir.join(&file), svg)?;
            artifacts.push(file);
        }
    }
    artifacts.sort();

    let report = RunReport {
        experiment: spec.name.clone(),
        seed: spec.seed,
        ticks: 0,
        completed: true,
        thresholds_met,
        comparison: ComparisonReport::default(),
        morphology: None,
        details,
        artifacts,
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    fs::write(spec.output_dir.join("report.json"), report.to_json())?;
    Ok(report)
}

/// Generated exemplar graphs: (name, expected quadrant, graph).
pub fn phase_space_exemplars(seed: u64) -> Vec<(&'static str, Quadrant, PlanarGraph)> {
    vec![
        ("dense_regular", Quadrant::Creative, hex_lattice_graph()),
        ("sparse_regular", Quadrant::SavantAutism, ring_tree_graph()),
        ("sparse_irregular", Quadrant::SevereAutism, clustered_mst_graph(seed)),
        ("dense_irregular", Quadrant::Schizophrenic, clustered_delaunay_graph(seed)),
    ]
}

fn hex_lattice_graph() -> PlanarGraph {
    let mut pts = Vec::new();
    let a = 12.0;
    for row in 0..6 {
        for col in 0..6 {
            let x = 10.0 + col as f64 * a + if row % 2 == 1 { a / 2.0 } else { 0.0 };
            let y = 10.0 + row as f64 * a * 3f64.sqrt() / 2.0;
            pts.push((x, y));
        }
    }
    let sites = SiteSet::new(pts).expect("distinct lattice points");
    beta_skeleton(&sites, 1.0).expect("gabriel graph")
}

fn ring_tree_graph() -> PlanarGraph {
    let n = 12;
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let th = i as f64 / n as f64 * std::f64::consts::TAU;
            (55.0 + 40.0 * th.cos(), 55.0 + 40.0 * th.sin())
        })
        .collect();
    let sites = SiteSet::new(pts).expect("distinct ring points");
    euclidean_mst(&sites).expect("ring mst")
}

fn clustered_points(seed: u64) -> Vec<(f64, f64)> {
    let mut rng = scenes::Layout::new(seed ^ 0x636c_7573);
    let centers = [(20.0, 20.0), (85.0, 30.0), (45.0, 88.0)];
    let mut pts = Vec::new();
    for &(cx, cy) in &centers {
        for _ in 0..5 {
            pts.push((
                cx + 6.0 * (rng.unit() - 0.5),
                cy + 6.0 * (rng.unit() - 0.5),
            ));
        }
    }
    pts
}

fn clustered_mst_graph(seed: u64) -> PlanarGraph {
    let sites = SiteSet::new(clustered_points(seed)).expect("distinct clustered points");
    euclidean_mst(&sites).expect("clustered mst")
}

fn clustered_delaunay_graph(seed: u64) -> PlanarGraph {
    let sites = SiteSet::new(clustered_points(seed)).expect("distinct clustered points");
    delaunay(&sites).expect("clustered delaunay")
}

fn phase_plane_svg(points: &[(&str, f64, f64)], thresholds: QuadrantThresholds) -> String {
    let (w, h) = (220.0, 160.0);
    let x_of = |deg: f64| 20.0 + (deg / 7.0).min(1.0) * (w - 40.0);
    let y_of = |ord: f64| (h - 20.0) - ord.clamp(0.0, 1.0) * (h - 40.0);
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {h}\" \
         width=\"{w}mm\" height=\"{h}mm\">\n"
    );
    out.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>\n"
    ));
    let xs = x_of(thresholds.degree_split);
    let ys = y_of(thresholds.order_split);
    out.push_str(&format!(
        "  <line x1=\"{xs}\" y1=\"20\" x2=\"{xs}\" y2=\"{}\" stroke=\"#999\" stroke-width=\"0.5\"/>\n",
        h - 20.0
    ));
    out.push_str(&format!(
        "  <line x1=\"20\" y1=\"{ys}\" x2=\"{}\" y2=\"{ys}\" stroke=\"#999\" stroke-width=\"0.5\"/>\n",
        w - 20.0
    ));
    for (name, deg, ord) in points {
        let (x, y) = (x_of(*deg), y_of(*ord));
        out.push_str(&format!(
            "  <circle cx=\"{x}\" cy=\"{y}\" r=\"2.2\" fill=\"#c8a200\"/>\n"
        ));
        out.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" font-size=\"4.5\" fill=\"#333\">{name}</text>\n",
            x + 3.0,
            y - 2.0
        ));
    }
    out.push_str("</svg>\n");
    out
}
