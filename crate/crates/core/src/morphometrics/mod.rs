//! Scoring simulated networks against classical oracles, and the
//! degree-versus-regularity phase plane.
//!
//! The comparison side quantifies how well a run reproduced an oracle
//! (bisector coverage, edge precision/recall, length and path ratios); the
//! morphology side maps any graph to a point in the (mean degree,
//! edge-regularity) plane and names its quadrant.

use std::collections::HashSet;

use crate::engine::{RunTrace, TubeGraph};
use crate::environment::{Cell, GridSpec};
use crate::geometry::{
    euclidean_mst, grid_shortest_path, GeometryError, MazeGrid, PlanarGraph,
    RasterPartition, SiteSet,
};

#[derive(Debug, thiserror::Error)]
pub enum MorphometricsError {
    #[error("grid mismatch: sim is {sim_w}x{sim_h}, oracle is {ora_w}x{ora_h}")]
    GridMismatch { sim_w: u32, sim_h: u32, ora_w: u32, ora_h: u32 },
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("graph has no edges")]
    ZeroEdges,
    #[error("sim graph does not span site {0}")]
    NonSpanning(usize),
    #[error("maze goal unreachable in the oracle")]
    UnreachableGoal,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Oracle-vs-simulation scores. Fields not applicable to an experiment are
/// `None` and serialise as null.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ComparisonReport {
    pub bisector_coverage: Option<f64>,
    pub edge_precision: Option<f64>,
    pub edge_recall: Option<f64>,
    pub tree_length_ratio: Option<f64>,
    pub path_ratio: Option<f64>,
    pub self_avoidance_index: Option<f64>,
}

/// Phase-plane coordinates and quadrant.
#[derive(Debug, Clone, PartialEq)]
pub struct MorphologyReport {
    pub mean_degree: f64,
    pub order_score: f64,
    pub quadrant: Quadrant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrant {
    Creative,
    SavantAutism,
    SevereAutism,
    Schizophrenic,
}

impl Quadrant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Quadrant::Creative => "creative",
            Quadrant::SavantAutism => "savant_autism",
            Quadrant::SevereAutism => "severe_autism",
            Quadrant::Schizophrenic => "schizophrenic",
        }
    }
}

/// Phase-plane split values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadrantThresholds {
    pub degree_split: f64,
    pub order_split: f64,
}

impl Default for QuadrantThresholds {
    fn default() -> Self {
        QuadrantThresholds { degree_split: 3.0, order_split: 0.5 }
    }
}

/// Fraction of oracle Boundary cells with at least one empty cell within
/// Chebyshev distance `tol`. 1.0 when the oracle has no boundary cells.
pub fn bisector_coverage(
    empty_cells: &[Cell],
    sim_grid: &GridSpec,
    oracle: &RasterPartition,
    tol: u32,
) -> Result<f64, MorphometricsError> {
    let og = oracle.grid();
    if sim_grid.width != og.width || sim_grid.height != og.height {
        return Err(MorphometricsError::GridMismatch {
            sim_w: sim_grid.width,
            sim_h: sim_grid.height,
            ora_w: og.width,
            ora_h: og.height,
        });
    }
    let empties: HashSet<Cell> = empty_cells.iter().copied().collect();
    let boundary = oracle.boundary_cells();
    if boundary.is_empty() {
        return Ok(1.0);
    }
    let mut covered = 0usize;
    for b in &boundary {
        let x0 = b.x.saturating_sub(tol);
        let y0 = b.y.saturating_sub(tol);
        let x1 = (b.x + tol).min(og.width - 1);
        let y1 = (b.y + tol).min(og.height - 1);
        'window: for y in y0..=y1 {
            for x in x0..=x1 {
                if empties.contains(&Cell::new(x, y)) {
                    covered += 1;
                    break 'window;
                }
            }
        }
    }
    Ok(covered as f64 / boundary.len() as f64)
}

/// Edge precision and recall of a tube graph against an oracle graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeMatch {
    pub precision: f64,
    pub recall: f64,
}

/// Greedily matches sim nodes to oracle nodes by distance (each oracle
/// node used at most once, pairs farther than `node_tol_mm` never match),
/// then scores non-abandoned sim edges whose matched endpoint pairs are
/// oracle edges.
///
/// An empty sim graph reports the vacuous precision 1.0 with recall 0.0.
pub fn edge_match(
    sim: &TubeGraph,
    oracle: &PlanarGraph,
    node_tol_mm: f64,
    cell_size_mm: f64,
) -> EdgeMatch {
    let sim_pos: Vec<(f64, f64)> = sim
        .nodes
        .iter()
        .map(|n| {
            (
                (n.position.x as f64 + 0.5) * cell_size_mm,
                (n.position.y as f64 + 0.5) * cell_size_mm,
            )
        })
        .collect();

    // Candidate pairs within tolerance, nearest first.
    let mut cands: Vec<(f64, usize, usize)> = Vec::new();
    for (i, &(sx, sy)) in sim_pos.iter().enumerate() {
        for (j, &(ox, oy)) in oracle.nodes.iter().enumerate() {
            let d = ((sx - ox).powi(2) + (sy - oy).powi(2)).sqrt();
            if d <= node_tol_mm {
                cands.push((d, i, j));
            }
        }
    }
    cands.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let mut sim_to_oracle = vec![None; sim.nodes.len()];
    let mut oracle_used = vec![false; oracle.nodes.len()];
    for (_, i, j) in cands {
        if sim_to_oracle[i].is_none() && !oracle_used[j] {
            sim_to_oracle[i] = Some(j);
            oracle_used[j] = true;
        }
    }

    let live_edges: Vec<_> = sim.edges_iter(false).collect();
    if live_edges.is_empty() {
        return EdgeMatch { precision: 1.0, recall: 0.0 };
    }
    let mut matched = 0usize;
    let mut hit: HashSet<(usize, usize)> = HashSet::new();
    for e in &live_edges {
        let (a, b) = e.endpoints;
        if let (Some(oa), Some(ob)) = (sim_to_oracle[a], sim_to_oracle[b]) {
            if oracle.contains_edge(oa, ob) {
                matched += 1;
                hit.insert((oa.min(ob), oa.max(ob)));
            }
        }
    }
    let recall = if oracle.edges.is_empty() {
        1.0
    } else {
        hit.len() as f64 / oracle.edges.len() as f64
    };
    EdgeMatch {
        precision: matched as f64 / live_edges.len() as f64,
        recall,
    }
}

/// Total non-abandoned tube length divided by the Euclidean MST length of
/// the sites. Errors when some site has no sim node within `node_tol_mm`
/// or the matched nodes are not mutually connected through live edges.
pub fn tree_length_ratio(
    sim: &TubeGraph,
    sites: &SiteSet,
    node_tol_mm: f64,
    cell_size_mm: f64,
) -> Result<f64, MorphometricsError> {
    let mut matched_nodes = Vec::with_capacity(sites.len());
    for (si, &(sx, sy)) in sites.points().iter().enumerate() {
        let mut best: Option<(f64, usize)> = None;
        for (ni, n) in sim.nodes.iter().enumerate() {
            let nx = (n.position.x as f64 + 0.5) * cell_size_mm;
            let ny = (n.position.y as f64 + 0.5) * cell_size_mm;
            let d = ((sx - nx).powi(2) + (sy - ny).powi(2)).sqrt();
            if d <= node_tol_mm && best.map(|(bd, _)| d < bd).unwrap_or(true) {
                best = Some((d, ni));
            }
        }
        match best {
            Some((_, ni)) => matched_nodes.push(ni),
            None => return Err(MorphometricsError::NonSpanning(si)),
        }
    }
    let reach = sim.live_component(matched_nodes[0]);
    for (si, &ni) in matched_nodes.iter().enumerate() {
        if !reach[ni] {
            return Err(MorphometricsError::NonSpanning(si));
        }
    }
    let mst = euclidean_mst(sites)?;
    Ok(sim.live_length_mm() / mst.total_length())
}

/// Simulated path length divided by the oracle shortest-path cost.
pub fn path_ratio(sim_path_length_mm: f64, maze: &MazeGrid) -> Result<f64, MorphometricsError> {
    match grid_shortest_path(maze)? {
        Some(path) => Ok(sim_path_length_mm / path.cost_mm),
        None => Err(MorphometricsError::UnreachableGoal),
    }
}

/// Uniform view over tube graphs and planar graphs for the morphology
/// metrics. Tube graphs expose only their non-abandoned edges.
pub trait GraphStats {
    fn node_count(&self) -> usize;
    fn edge_count(&self) -> usize;
    fn edge_lengths(&self) -> Vec<f64>;
}

impl GraphStats for TubeGraph {
    fn node_count(&self) -> usize {
        self.nodes.len()
    }
    fn edge_count(&self) -> usize {
        self.edges_iter(false).count()
    }
    fn edge_lengths(&self) -> Vec<f64> {
        self.edges_iter(false).map(|e| e.length_mm).collect()
    }
}

impl GraphStats for PlanarGraph {
    fn node_count(&self) -> usize {
        self.nodes.len()
    }
    fn edge_count(&self) -> usize {
        self.edges.len()
    }
    fn edge_lengths(&self) -> Vec<f64> {
        self.edges.iter().map(|&e| self.edge_length(e)).collect()
    }
}

/// Average number of neighbours: `2 |E| / |V|`.
pub fn mean_degree<G: GraphStats>(graph: &G) -> Result<f64, MorphometricsError> {
    if graph.node_count() == 0 {
        return Err(MorphometricsError::EmptyGraph);
    }
    Ok(2.0 * graph.edge_count() as f64 / graph.node_count() as f64)
}

/// Edge-length regularity `1 / (1 + CV)` where CV is the coefficient of
/// variation of edge lengths. Single-edge graphs score 1.0.
pub fn order_score<G: GraphStats>(graph: &G) -> Result<f64, MorphometricsError> {
    let lengths = graph.edge_lengths();
    if lengths.is_empty() {
        return Err(MorphometricsError::ZeroEdges);
    }
    if lengths.len() == 1 {
        return Ok(1.0);
    }
    let mean = lengths.iter().sum::<f64>() / lengths.len() as f64;
    let var = lengths.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / lengths.len() as f64;
    let cv = var.sqrt() / mean;
    Ok(1.0 / (1.0 + cv))
}

/// Places a point in the phase plane. Boundary values belong to the
/// high side (>= splits).
pub fn classify_quadrant(
    mean_degree: f64,
    order_score: f64,
    thresholds: QuadrantThresholds,
) -> Quadrant {
    let high_degree = mean_degree >= thresholds.degree_split;
    let high_order = order_score >= thresholds.order_split;
    match (high_degree, high_order) {
        (true, true) => Quadrant::Creative,
        (false, true) => Quadrant::SavantAutism,
        (false, false) => Quadrant::SevereAutism,
        (true, false) => Quadrant::Schizophrenic,
    }
}

/// Builds the full morphology report for a graph.
pub fn morphology_report<G: GraphStats>(
    graph: &G,
    thresholds: QuadrantThresholds,
) -> Result<MorphologyReport, MorphometricsError> {
    let degree = mean_degree(graph)?;
    let order = order_score(graph)?;
    Ok(MorphologyReport {
        mean_degree: degree,
        order_score: order,
        quadrant: classify_quadrant(degree, order, thresholds),
    })
}

/// Self-avoidance index: `P(fresh chosen | fresh and abandoned both
/// admissible) - 0.5`. Positive means avoidance. `None` when the run had
/// no qualifying steps.
pub fn self_avoidance_index(trace: &RunTrace) -> Option<f64> {
    let qualifying: Vec<_> = trace
        .choices
        .iter()
        .filter(|c| c.fresh_available && c.abandoned_available)
        .collect();
    if qualifying.is_empty() {
        return None;
    }
    let fresh = qualifying.iter().filter(|c| c.chose_fresh).count();
    Some(fresh as f64 / qualifying.len() as f64 - 0.5)
}

/// Number of qualifying fresh-vs-abandoned choice steps in a trace.
pub fn qualifying_choice_steps(trace: &RunTrace) -> usize {
    trace
        .choices
        .iter()
        .filter(|c| c.fresh_available && c.abandoned_available)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{ChoiceEvent, NodeKind, TubeEdge, TubeNode};

    fn grid(w: u32, h: u32) -> GridSpec {
        GridSpec { width: w, height: h, cell_size_mm: 1.0 }
    }

    fn tube_graph(nodes: &[(u32, u32, NodeKind)], edges: &[(usize, usize, f64, bool)]) -> TubeGraph {
        TubeGraph {
            nodes: nodes
                .iter()
                .map(|&(x, y, kind)| TubeNode { position: Cell::new(x, y), kind })
                .collect(),
            edges: edges
                .iter()
                .map(|&(a, b, len, abandoned)| TubeEdge {
                    endpoints: (a, b),
                    polyline: vec![
                        Cell::new(nodes[a].0, nodes[a].1),
                        Cell::new(nodes[b].0, nodes[b].1),
                    ],
                    length_mm: len,
                    abandoned,
                    visits: 0,
                })
                .collect(),
        }
    }

    // ----- bisector_coverage -----

    #[test]
    fn coverage_of_exact_boundary_is_one() {
        let sites = SiteSet::new(vec![(8.5, 8.0), (24.5, 8.0)]).unwrap();
        let g = grid(32, 16);
        let oracle = crate::geometry::voronoi_raster(&sites, &g).unwrap();
        let empty = oracle.boundary_cells();
        assert!(!empty.is_empty());
        let cov = bisector_coverage(&empty, &g, &oracle, 0).unwrap();
        assert_eq!(cov, 1.0);
    }

    #[test]
    fn coverage_of_nothing_is_zero() {
        let sites = SiteSet::new(vec![(8.5, 8.0), (24.5, 8.0)]).unwrap();
        let g = grid(32, 16);
        let oracle = crate::geometry::voronoi_raster(&sites, &g).unwrap();
        let cov = bisector_coverage(&[], &g, &oracle, 2).unwrap();
        assert_eq!(cov, 0.0);
    }

    #[test]
    fn coverage_shifted_by_one_needs_tolerance() {
        let sites = SiteSet::new(vec![(8.5, 8.0), (24.5, 8.0)]).unwrap();
        let g = grid(32, 16);
        let oracle = crate::geometry::voronoi_raster(&sites, &g).unwrap();
        let shifted: Vec<Cell> = oracle
            .boundary_cells()
            .iter()
            .map(|c| Cell::new(c.x + 1, c.y))
            .collect();
        assert_eq!(bisector_coverage(&shifted, &g, &oracle, 2).unwrap(), 1.0);
        assert_eq!(bisector_coverage(&shifted, &g, &oracle, 0).unwrap(), 0.0);
    }

    #[test]
    fn coverage_monotone_in_tolerance() {
        let sites = SiteSet::new(vec![(5.0, 5.0), (20.0, 11.0), (9.0, 25.0)]).unwrap();
        let g = grid(32, 32);
        let oracle = crate::geometry::voronoi_raster(&sites, &g).unwrap();
        let some: Vec<Cell> = oracle.boundary_cells().into_iter().step_by(3).collect();
        let mut prev = 0.0;
        for tol in 0..4 {
            let c = bisector_coverage(&some, &g, &oracle, tol).unwrap();
            assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn coverage_grid_mismatch() {
        let sites = SiteSet::new(vec![(4.0, 4.0)]).unwrap();
        let oracle = crate::geometry::voronoi_raster(&sites, &grid(16, 16)).unwrap();
        assert!(matches!(
            bisector_coverage(&[], &grid(8, 8), &oracle, 1),
            Err(MorphometricsError::GridMismatch { .. })
        ));
    }

    // ----- edge_match -----

    fn oracle_triangle() -> PlanarGraph {
        let sites = SiteSet::new(vec![(2.5, 2.5), (10.5, 2.5), (2.5, 10.5)]).unwrap();
        crate::geometry::delaunay(&sites).unwrap()
    }

    #[test]
    fn identical_graphs_match_perfectly() {
        let oracle = oracle_triangle();
        let sim = tube_graph(
            &[
                (2, 2, NodeKind::Inoculation),
                (10, 2, NodeKind::Food),
                (2, 10, NodeKind::Food),
            ],
            &[(0, 1, 8.0, false), (0, 2, 8.0, false), (1, 2, 11.3, false)],
        );
        let m = edge_match(&sim, &oracle, 3.0, 1.0);
        assert_eq!(m.precision, 1.0);
        assert_eq!(m.recall, 1.0);
    }

    #[test]
    fn empty_sim_graph_vacuous_precision() {
        let oracle = oracle_triangle();
        let sim = tube_graph(&[(2, 2, NodeKind::Inoculation)], &[]);
        let m = edge_match(&sim, &oracle, 3.0, 1.0);
        assert_eq!(m.precision, 1.0);
        assert_eq!(m.recall, 0.0);
    }

    #[test]
    fn missing_edge_costs_recall_not_precision() {
        let oracle = oracle_triangle();
        let sim = tube_graph(
            &[
                (2, 2, NodeKind::Inoculation),
                (10, 2, NodeKind::Food),
                (2, 10, NodeKind::Food),
            ],
            &[(0, 1, 8.0, false), (0, 2, 8.0, false)],
        );
        let m = edge_match(&sim, &oracle, 3.0, 1.0);
        assert_eq!(m.precision, 1.0);
        assert!((m.recall - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn abandoned_edges_ignored() {
        let oracle = oracle_triangle();
        let sim = tube_graph(
            &[
                (2, 2, NodeKind::Inoculation),
                (10, 2, NodeKind::Food),
                (20, 20, NodeKind::Tip),
            ],
            &[(0, 1, 8.0, false), (0, 2, 25.0, true)],
        );
        let m = edge_match(&sim, &oracle, 3.0, 1.0);
        assert_eq!(m.precision, 1.0);
    }

    // ----- ratios -----

    #[test]
    fn tree_ratio_of_exact_mst_realization() {
        let sites = SiteSet::new(vec![(2.5, 2.5), (10.5, 2.5), (18.5, 2.5)]).unwrap();
        let sim = tube_graph(
            &[
                (2, 2, NodeKind::Inoculation),
                (10, 2, NodeKind::Food),
                (18, 2, NodeKind::Food),
            ],
            &[(0, 1, 8.0, false), (1, 2, 8.0, false)],
        );
        let r = tree_length_ratio(&sim, &sites, 3.0, 1.0).unwrap();
        assert!((r - 1.0).abs() < 1e-9, "ratio {r}");
    }

    #[test]
    fn missing_site_is_error() {
        let sites = SiteSet::new(vec![(2.5, 2.5), (10.5, 2.5), (30.5, 30.5)]).unwrap();
        let sim = tube_graph(
            &[(2, 2, NodeKind::Inoculation), (10, 2, NodeKind::Food)],
            &[(0, 1, 8.0, false)],
        );
        assert!(matches!(
            tree_length_ratio(&sim, &sites, 3.0, 1.0),
            Err(MorphometricsError::NonSpanning(2))
        ));
    }

    #[test]
    fn path_ratio_detour() {
        let maze = MazeGrid {
            width: 9,
            height: 1,
            passable: vec![true; 9],
            start: Cell::new(0, 0),
            goal: Cell::new(8, 0),
            cell_size_mm: 1.0,
        };
        assert!((path_ratio(8.0, &maze).unwrap() - 1.0).abs() < 1e-12);
        assert!((path_ratio(10.0, &maze).unwrap() - 1.25).abs() < 1e-12);
    }

    // ----- morphology -----

    #[test]
    fn degree_examples() {
        let sites = SiteSet::new(vec![(0.0, 0.0), (4.0, 0.0), (0.0, 4.0)]).unwrap();
        let triangle = crate::geometry::delaunay(&sites).unwrap();
        assert_eq!(mean_degree(&triangle).unwrap(), 2.0);

        let path = PlanarGraph {
            nodes: vec![(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)],
            edges: vec![(0, 1), (1, 2)],
        };
        assert!((mean_degree(&path).unwrap() - 4.0 / 3.0).abs() < 1e-12);

        let star = PlanarGraph {
            nodes: vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0), (1.0, 1.0)],
            edges: vec![(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)],
        };
        assert!((mean_degree(&star).unwrap() - 10.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn order_score_examples() {
        let equal = PlanarGraph {
            nodes: vec![(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)],
            edges: vec![(0, 1), (1, 2)],
        };
        assert_eq!(order_score(&equal).unwrap(), 1.0);

        let uneven = PlanarGraph {
            nodes: vec![(0.0, 0.0), (1.0, 0.0), (4.0, 0.0)],
            edges: vec![(0, 1), (1, 2)],
        };
        // Lengths 1 and 3: CV = 1/2, score 2/3.
        assert!((order_score(&uneven).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn quadrant_rules() {
        let t = QuadrantThresholds::default();
        assert_eq!(classify_quadrant(2.0, 0.9, t), Quadrant::SavantAutism);
        assert_eq!(classify_quadrant(4.5, 0.2, t), Quadrant::Schizophrenic);
        assert_eq!(classify_quadrant(3.0, 0.5, t), Quadrant::Creative);
        assert_eq!(classify_quadrant(1.0, 0.1, t), Quadrant::SevereAutism);
    }

    #[test]
    fn metrics_scale_invariant() {
        let small = PlanarGraph {
            nodes: vec![(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)],
            edges: vec![(0, 1), (1, 2), (0, 2)],
        };
        let big = PlanarGraph {
            nodes: small.nodes.iter().map(|&(x, y)| (10.0 * x, 10.0 * y)).collect(),
            edges: small.edges.clone(),
        };
        assert_eq!(mean_degree(&small).unwrap(), mean_degree(&big).unwrap());
        assert!((order_score(&small).unwrap() - order_score(&big).unwrap()).abs() < 1e-12);
    }

    // ----- self-avoidance -----

    fn choice(chose_fresh: bool) -> ChoiceEvent {
        ChoiceEvent {
            tick: 1,
            zone: 0,
            fresh_available: true,
            abandoned_available: true,
            chose_fresh,
        }
    }

    #[test]
    fn always_fresh_gives_plus_half() {
        let trace = RunTrace {
            ticks: vec![],
            choices: (0..50).map(|_| choice(true)).collect(),
        };
        assert_eq!(self_avoidance_index(&trace), Some(0.5));
    }

    #[test]
    fn unbiased_chooser_near_zero() {
        // Independent oracle: a deterministic pseudo-coin flip sequence.
        let mut flips = Vec::new();
        let mut x: u64 = 0x9e3779b97f4a7c15;
        for _ in 0..400 {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            flips.push(choice(x & 1 == 1));
        }
        let trace = RunTrace { ticks: vec![], choices: flips };
        let idx = self_avoidance_index(&trace).unwrap();
        assert!(idx.abs() < 0.1, "index {idx} too biased for a fair coin");
    }

    #[test]
    fn no_qualifying_steps_undefined() {
        let trace = RunTrace::default();
        assert_eq!(self_avoidance_index(&trace), None);
    }
}
