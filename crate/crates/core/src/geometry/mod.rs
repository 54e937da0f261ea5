//! Classical computational-geometry oracles.
//!
//! These are the reference answers the growth engine is scored against:
//! brute-force raster Voronoi, incremental Delaunay with exact predicates,
//! Euclidean minimum spanning tree, grid shortest paths, and lune-based
//! β-skeletons. Everything here is a pure function; exactness is preferred
//! over speed throughout.

mod delaunay;
pub mod predicates;

use std::collections::BTreeSet;

use crate::environment::{Cell, Compass, GridSpec, COMPASS_ALL};

#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error("need at least {need} sites, got {got}")]
    TooFewSites { need: usize, got: usize },
    #[error("sites {a} and {b} coincide")]
    DuplicateSites { a: usize, b: usize },
    #[error("site {index} at ({x}, {y}) lies outside the grid extent")]
    SiteOutsideGrid { index: usize, x: f64, y: f64 },
    #[error("beta must be >= 1, got {0}")]
    BadBeta(f64),
    #[error("coordinates must be finite")]
    NonFiniteCoordinate,
    #[error("start or goal cell is not passable")]
    BadEndpoint,
}

/// A set of pairwise-distinct planar points, in millimetres.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteSet {
    points: Vec<(f64, f64)>,
}

impl SiteSet {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, GeometryError> {
        if points.is_empty() {
            return Err(GeometryError::TooFewSites { need: 1, got: 0 });
        }
        if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err(GeometryError::NonFiniteCoordinate);
        }
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                if points[i] == points[j] {
                    return Err(GeometryError::DuplicateSites { a: i, b: j });
                }
            }
        }
        Ok(SiteSet { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Per-cell nearest-site labelling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellLabel {
    /// Index of the unique nearest site.
    Site(u32),
    /// The two nearest sites are equidistant within the tie tolerance.
    Boundary,
}

/// Raster Voronoi partition over a grid.
#[derive(Debug, Clone)]
pub struct RasterPartition {
    grid: GridSpec,
    labels: Vec<CellLabel>,
}

impl RasterPartition {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn label(&self, cell: Cell) -> CellLabel {
        self.labels[self.grid.index(cell)]
    }

    pub fn labels(&self) -> &[CellLabel] {
        &self.labels
    }

    /// All cells labelled [`CellLabel::Boundary`], in row-major order.
    pub fn boundary_cells(&self) -> Vec<Cell> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == CellLabel::Boundary)
            .map(|(i, _)| self.grid.cell_at(i))
            .collect()
    }
}

/// An undirected geometric graph over a site set.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarGraph {
    pub nodes: Vec<(f64, f64)>,
    /// Index pairs with `a < b`, sorted, no duplicates.
    pub edges: Vec<(usize, usize)>,
}

impl PlanarGraph {
    fn from_edge_set(nodes: &[(f64, f64)], edges: BTreeSet<(usize, usize)>) -> Self {
        PlanarGraph {
            nodes: nodes.to_vec(),
            edges: edges.into_iter().collect(),
        }
    }

    pub fn edge_length(&self, e: (usize, usize)) -> f64 {
        let (ax, ay) = self.nodes[e.0];
        let (bx, by) = self.nodes[e.1];
        ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt()
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|&e| self.edge_length(e)).sum()
    }

    pub fn contains_edge(&self, a: usize, b: usize) -> bool {
        let key = (a.min(b), a.max(b));
        self.edges.binary_search(&key).is_ok()
    }

    /// Edge-subset test against another graph over the same nodes.
    pub fn is_subgraph_of(&self, other: &PlanarGraph) -> bool {
        self.edges.iter().all(|&(a, b)| other.contains_edge(a, b))
    }

    /// True when every node can reach every other through edges.
    pub fn is_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &(a, b) in &self.edges {
                let n = if a == v {
                    b
                } else if b == v {
                    a
                } else {
                    continue;
                };
                if !seen[n] {
                    seen[n] = true;
                    stack.push(n);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Serialises as `{"nodes": [[x, y], ...], "edges": [[i, j], ...]}`.
    pub fn to_json(&self) -> String {
        let mut out = String::from("{\"nodes\": [");
        for (i, (x, y)) in self.nodes.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            out.push_str(&format!("[{x}, {y}]"));
        }
        out.push_str("], \"edges\": [");
        for (i, (a, b)) in self.edges.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            out.push_str(&format!("[{a}, {b}]"));
        }
        out.push_str("]}");
        out
    }
}

/// Tie tolerance for raster Boundary labelling: half a cell diagonal.
pub fn boundary_tie_tolerance(grid: &GridSpec) -> f64 {
    grid.cell_size_mm * std::f64::consts::SQRT_2 / 2.0
}

/// Labels every cell with its nearest site (Euclidean distance between the
/// cell centre and the site), or [`CellLabel::Boundary`] when the two
/// nearest sites are equidistant within half a cell diagonal. Brute force
/// over all cell-site pairs.
pub fn voronoi_raster(sites: &SiteSet, grid: &GridSpec) -> Result<RasterPartition, GeometryError> {
    let max_x = grid.width as f64 * grid.cell_size_mm;
    let max_y = grid.height as f64 * grid.cell_size_mm;
    for (i, &(x, y)) in sites.points().iter().enumerate() {
        if !(0.0..=max_x).contains(&x) || !(0.0..=max_y).contains(&y) {
            return Err(GeometryError::SiteOutsideGrid { index: i, x, y });
        }
    }
    let eps = boundary_tie_tolerance(grid);
    let mut labels = Vec::with_capacity(grid.cell_count());
    for y in 0..grid.height {
        for x in 0..grid.width {
            let (cx, cy) = grid.cell_center_mm(Cell::new(x, y));
            let mut best = f64::INFINITY;
            let mut second = f64::INFINITY;
            let mut owner = 0u32;
            for (i, &(sx, sy)) in sites.points().iter().enumerate() {
                let d = ((cx - sx).powi(2) + (cy - sy).powi(2)).sqrt();
                if d < best {
                    second = best;
                    best = d;
                    owner = i as u32;
                } else if d < second {
                    second = d;
                }
            }
            if sites.len() > 1 && second - best <= eps {
                labels.push(CellLabel::Boundary);
            } else {
                labels.push(CellLabel::Site(owner));
            }
        }
    }
    Ok(RasterPartition { grid: grid.clone(), labels })
}

/// Delaunay triangulation by the empty-circumcircle property.
///
/// Two sites give a single edge; fully collinear sets give the path graph
/// in x-then-y order. Cocircular degeneracies resolve deterministically by
/// lexicographic insertion order.
pub fn delaunay(sites: &SiteSet) -> Result<PlanarGraph, GeometryError> {
    let pts = sites.points();
    if pts.len() < 2 {
        return Err(GeometryError::TooFewSites { need: 2, got: pts.len() });
    }
    let mut edges = BTreeSet::new();
    if pts.len() == 2 {
        edges.insert((0, 1));
        return Ok(PlanarGraph::from_edge_set(pts, edges));
    }
    let all_collinear = pts[2..]
        .iter()
        .all(|&p| predicates::orient2d(pts[0], pts[1], p) == 0);
    if all_collinear {
        let mut order: Vec<usize> = (0..pts.len()).collect();
        order.sort_by(|&i, &j| pts[i].partial_cmp(&pts[j]).expect("finite"));
        for w in order.windows(2) {
            let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
            edges.insert((a, b));
        }
        return Ok(PlanarGraph::from_edge_set(pts, edges));
    }
    for e in delaunay::triangulate(pts) {
        edges.insert(e);
    }
    Ok(PlanarGraph::from_edge_set(pts, edges))
}

/// Euclidean minimum spanning tree over the complete graph (Kruskal).
/// Length ties break by lexicographic edge comparison, so the result is
/// deterministic.
pub fn euclidean_mst(sites: &SiteSet) -> Result<PlanarGraph, GeometryError> {
    let pts = sites.points();
    let n = pts.len();
    let mut all: Vec<(f64, usize, usize)> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let d = ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt();
            all.push((d, i, j));
        }
    }
    all.sort_by(|a, b| a.partial_cmp(b).expect("finite lengths"));

    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    let mut edges = BTreeSet::new();
    for (_, i, j) in all {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri] = rj;
            edges.insert((i, j));
            if edges.len() == n - 1 {
                break;
            }
        }
    }
    Ok(PlanarGraph::from_edge_set(pts, edges))
}

/// A grid maze with designated start and goal cells.
#[derive(Debug, Clone)]
pub struct MazeGrid {
    pub width: u32,
    pub height: u32,
    pub passable: Vec<bool>,
    pub start: Cell,
    pub goal: Cell,
    pub cell_size_mm: f64,
}

impl MazeGrid {
    pub fn is_passable(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as u64) < self.width as u64
            && (y as u64) < self.height as u64
            && self.passable[y as usize * self.width as usize + x as usize]
    }
}

/// A minimum-cost 8-neighbour path.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub cells: Vec<Cell>,
    pub cost_mm: f64,
}

/// Uniform-cost search with orthogonal cost 1 and diagonal cost √2 (in
/// cell units, scaled by `cell_size_mm`). Diagonal moves may not cut wall
/// corners: both orthogonal companion cells must be passable. Returns
/// `None` when the goal is unreachable. Ties are broken deterministically
/// by expanding neighbours in compass order.
pub fn grid_shortest_path(maze: &MazeGrid) -> Result<Option<GridPath>, GeometryError> {
    if !maze.is_passable(maze.start.x as i64, maze.start.y as i64)
        || !maze.is_passable(maze.goal.x as i64, maze.goal.y as i64)
    {
        return Err(GeometryError::BadEndpoint);
    }
    let w = maze.width as usize;
    let n = w * maze.height as usize;
    let idx = |c: Cell| c.y as usize * w + c.x as usize;

    let mut dist = vec![f64::INFINITY; n];
    let mut parent: Vec<Option<Cell>> = vec![None; n];
    let mut visited = vec![false; n];

    // Binary heap keyed by (cost, sequence) for deterministic pop order.
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    #[derive(PartialEq)]
    struct Key(f64, u64, Cell);
    impl Eq for Key {}
    impl PartialOrd for Key {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Key {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.0
                .partial_cmp(&other.0)
                .expect("finite costs")
                .then(self.1.cmp(&other.1))
        }
    }

    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    dist[idx(maze.start)] = 0.0;
    heap.push(Reverse(Key(0.0, seq, maze.start)));

    while let Some(Reverse(Key(cost, _, cell))) = heap.pop() {
        let ci = idx(cell);
        if visited[ci] {
            continue;
        }
        visited[ci] = true;
        if cell == maze.goal {
            break;
        }
        for dir in COMPASS_ALL {
            let (dx, dy) = dir.delta();
            let nx = cell.x as i64 + dx as i64;
            let ny = cell.y as i64 + dy as i64;
            if !maze.is_passable(nx, ny) {
                continue;
            }
            if dir.is_diagonal()
                && !(maze.is_passable(cell.x as i64 + dx as i64, cell.y as i64)
                    && maze.is_passable(cell.x as i64, cell.y as i64 + dy as i64))
            {
                continue;
            }
            let next = Cell::new(nx as u32, ny as u32);
            let ni = idx(next);
            let ncost = cost + dir.step_len();
            if ncost < dist[ni] {
                dist[ni] = ncost;
                parent[ni] = Some(cell);
                seq += 1;
                heap.push(Reverse(Key(ncost, seq, next)));
            }
        }
    }

    if dist[idx(maze.goal)].is_infinite() {
        return Ok(None);
    }
    let mut cells = vec![maze.goal];
    while let Some(p) = parent[idx(*cells.last().unwrap())] {
        cells.push(p);
    }
    cells.reverse();
    Ok(Some(GridPath {
        cells,
        cost_mm: dist[idx(maze.goal)] * maze.cell_size_mm,
    }))
}

/// Direction preference table used by callers that step through mazes.
pub fn compass_neighbors(cell: Cell, grid: &GridSpec) -> impl Iterator<Item = (Compass, Cell)> + '_ {
    COMPASS_ALL
        .into_iter()
        .filter_map(move |d| grid.neighbor(cell, d).map(|c| (d, c)))
}

/// Lune-based β-skeleton for β ≥ 1.
///
/// Edge (p, q) is present iff the open lune — the intersection of the two
/// open discs of radius β·d(p,q)/2 centred at (1-β/2)p + (β/2)q and
/// (1-β/2)q + (β/2)p — contains no other site. β = 1 is the Gabriel graph,
/// β = 2 the relative neighbourhood graph. Direct O(n³) evaluation.
pub fn beta_skeleton(sites: &SiteSet, beta: f64) -> Result<PlanarGraph, GeometryError> {
    if !(beta >= 1.0) {
        return Err(GeometryError::BadBeta(beta));
    }
    let pts = sites.points();
    if pts.len() < 2 {
        return Err(GeometryError::TooFewSites { need: 2, got: pts.len() });
    }
    let half = beta / 2.0;
    let mut edges = BTreeSet::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let (px, py) = pts[i];
            let (qx, qy) = pts[j];
            let d2 = (px - qx).powi(2) + (py - qy).powi(2);
            let r2 = half * half * d2;
            let c1 = (px + half * (qx - px), py + half * (qy - py));
            let c2 = (qx + half * (px - qx), qy + half * (py - qy));
            let mut empty = true;
            for (k, &(sx, sy)) in pts.iter().enumerate() {
                if k == i || k == j {
                    continue;
                }
                let in1 = (sx - c1.0).powi(2) + (sy - c1.1).powi(2) < r2;
                let in2 = (sx - c2.0).powi(2) + (sy - c2.1).powi(2) < r2;
                if in1 && in2 {
                    empty = false;
                    break;
                }
            }
            if empty {
                edges.insert((i, j));
            }
        }
    }
    Ok(PlanarGraph::from_edge_set(pts, edges))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(w: u32, h: u32) -> GridSpec {
        GridSpec { width: w, height: h, cell_size_mm: 1.0 }
    }

    fn random_sites(rng: &mut ChaCha8Rng, n: usize, extent: f64) -> SiteSet {
        loop {
            let pts: Vec<(f64, f64)> = (0..n)
                .map(|_| {
                    (
                        rng.gen_range(0.1 * extent..0.9 * extent),
                        rng.gen_range(0.1 * extent..0.9 * extent),
                    )
                })
                .collect();
            if let Ok(s) = SiteSet::new(pts) {
                return s;
            }
        }
    }

    // ----- voronoi_raster -----

    #[test]
    fn single_site_has_no_boundary() {
        let sites = SiteSet::new(vec![(8.0, 8.0)]).unwrap();
        let part = voronoi_raster(&sites, &grid(16, 16)).unwrap();
        assert!(part.labels().iter().all(|&l| l == CellLabel::Site(0)));
    }

    #[test]
    fn two_symmetric_sites_split_at_midline() {
        // Sites mirror-symmetric about x = 16.5, which runs through the
        // centres of column 16: that column is exactly equidistant.
        let sites = SiteSet::new(vec![(8.5, 16.0), (24.5, 16.0)]).unwrap();
        let part = voronoi_raster(&sites, &grid(32, 32)).unwrap();
        for y in 0..32 {
            for x in 0..32u32 {
                let label = part.label(Cell::new(x, y));
                let expect = match x {
                    16 => CellLabel::Boundary,
                    _ if x < 16 => CellLabel::Site(0),
                    _ => CellLabel::Site(1),
                };
                assert_eq!(label, expect, "at ({x},{y})");
            }
        }
    }

    #[test]
    fn labels_match_direct_recomputation() {
        let sites = SiteSet::new(vec![(10.0, 6.0), (22.0, 6.0), (16.0, 16.4)]).unwrap();
        let g = grid(32, 24);
        let part = voronoi_raster(&sites, &g).unwrap();
        let eps = boundary_tie_tolerance(&g);
        for y in 0..24 {
            for x in 0..32u32 {
                let (cx, cy) = g.cell_center_mm(Cell::new(x, y));
                let mut ds: Vec<(f64, usize)> = sites
                    .points()
                    .iter()
                    .enumerate()
                    .map(|(i, &(sx, sy))| (((cx - sx).powi(2) + (cy - sy).powi(2)).sqrt(), i))
                    .collect();
                ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
                match part.label(Cell::new(x, y)) {
                    CellLabel::Site(s) => {
                        assert_eq!(s as usize, ds[0].1);
                        assert!(ds[1].0 - ds[0].0 > eps);
                    }
                    CellLabel::Boundary => assert!(ds[1].0 - ds[0].0 <= eps),
                }
            }
        }
    }

    #[test]
    fn site_outside_grid_rejected() {
        let sites = SiteSet::new(vec![(40.0, 8.0)]).unwrap();
        assert!(matches!(
            voronoi_raster(&sites, &grid(16, 16)),
            Err(GeometryError::SiteOutsideGrid { index: 0, .. })
        ));
    }

    // ----- delaunay -----

    /// O(n^3)-style direct test: an edge is Delaunay iff some circle
    /// through both endpoints has no site strictly inside.
    fn brute_delaunay_edges(pts: &[(f64, f64)]) -> Vec<(usize, usize)> {
        use super::predicates::{incircle, orient2d};
        let n = pts.len();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let mut present = false;
                // Witness circles through a third point.
                for k in 0..n {
                    if k == i || k == j || orient2d(pts[i], pts[j], pts[k]) == 0 {
                        continue;
                    }
                    let (a, b, c) = if orient2d(pts[i], pts[j], pts[k]) > 0 {
                        (pts[i], pts[j], pts[k])
                    } else {
                        (pts[i], pts[k], pts[j])
                    };
                    let empty = (0..n)
                        .filter(|&s| s != i && s != j && s != k)
                        .all(|s| incircle(a, b, c, pts[s]) <= 0);
                    if empty {
                        present = true;
                        break;
                    }
                }
                // Diametral witness circle.
                if !present {
                    let c = ((pts[i].0 + pts[j].0) / 2.0, (pts[i].1 + pts[j].1) / 2.0);
                    let r2 = (pts[i].0 - c.0).powi(2) + (pts[i].1 - c.1).powi(2);
                    let empty = (0..n).filter(|&s| s != i && s != j).all(|s| {
                        (pts[s].0 - c.0).powi(2) + (pts[s].1 - c.1).powi(2) >= r2
                    });
                    if empty {
                        present = true;
                    }
                }
                if present {
                    edges.push((i, j));
                }
            }
        }
        edges
    }

    #[test]
    fn triangle_gives_three_edges() {
        let sites = SiteSet::new(vec![(0.0, 0.0), (5.0, 1.0), (2.0, 4.0)]).unwrap();
        let g = delaunay(&sites).unwrap();
        assert_eq!(g.edges, vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn two_sites_single_edge() {
        let sites = SiteSet::new(vec![(0.0, 0.0), (3.0, 1.0)]).unwrap();
        let g = delaunay(&sites).unwrap();
        assert_eq!(g.edges, vec![(0, 1)]);
    }

    #[test]
    fn collinear_sites_give_path_graph() {
        let sites =
            SiteSet::new(vec![(4.0, 4.0), (0.0, 0.0), (2.0, 2.0), (6.0, 6.0)]).unwrap();
        let g = delaunay(&sites).unwrap();
        // Path in x-then-y order: (0,0)-(2,2)-(4,4)-(6,6).
        assert_eq!(g.edges, vec![(0, 2), (0, 3), (1, 2)]);
    }

    #[test]
    fn matches_brute_force_on_random_sites() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for round in 0..25 {
            let n = 4 + (round % 7);
            let sites = random_sites(&mut rng, n, 100.0);
            let fast = delaunay(&sites).unwrap();
            let brute = brute_delaunay_edges(sites.points());
            assert_eq!(fast.edges, brute, "mismatch on round {round}: {:?}", sites.points());
        }
    }

    // ----- euclidean_mst -----

    #[test]
    fn mst_single_site() {
        let sites = SiteSet::new(vec![(1.0, 1.0)]).unwrap();
        let g = euclidean_mst(&sites).unwrap();
        assert!(g.edges.is_empty());
    }

    #[test]
    fn mst_collinear_skips_long_edge() {
        let sites = SiteSet::new(vec![(0.0, 0.0), (1.0, 0.0), (3.0, 0.0)]).unwrap();
        let g = euclidean_mst(&sites).unwrap();
        assert_eq!(g.edges, vec![(0, 1), (1, 2)]);
        assert!((g.total_length() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn mst_no_single_edge_swap_improves() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let sites = random_sites(&mut rng, 8, 50.0);
            let mst = euclidean_mst(&sites).unwrap();
            let total = mst.total_length();
            let n = sites.len();
            // Replace each tree edge by any non-tree edge that reconnects
            // the two components; none may shorten the tree.
            for &(a, b) in &mst.edges {
                let mut comp = vec![false; n];
                comp[a] = true;
                let mut changed = true;
                while changed {
                    changed = false;
                    for &(u, v) in &mst.edges {
                        if (u, v) == (a, b) {
                            continue;
                        }
                        if comp[u] != comp[v] {
                            comp[u] = true;
                            comp[v] = true;
                            changed = true;
                        }
                    }
                }
                let removed = mst.edge_length((a, b));
                for u in 0..n {
                    for v in u + 1..n {
                        if comp[u] != comp[v] {
                            let d = ((sites.points()[u].0 - sites.points()[v].0).powi(2)
                                + (sites.points()[u].1 - sites.points()[v].1).powi(2))
                            .sqrt();
                            assert!(
                                total - removed + d >= total - 1e-9,
                                "swap {:?} -> ({u},{v}) improves the tree",
                                (a, b)
                            );
                        }
                    }
                }
            }
        }
    }

    // ----- grid_shortest_path -----

    fn corridor(k: u32) -> MazeGrid {
        MazeGrid {
            width: k,
            height: 1,
            passable: vec![true; k as usize],
            start: Cell::new(0, 0),
            goal: Cell::new(k - 1, 0),
            cell_size_mm: 1.0,
        }
    }

    #[test]
    fn straight_corridor_cost() {
        let path = grid_shortest_path(&corridor(9)).unwrap().unwrap();
        assert_eq!(path.cells.len(), 9);
        assert!((path.cost_mm - 8.0).abs() < 1e-12);
    }

    #[test]
    fn walled_goal_unreachable() {
        let mut maze = corridor(9);
        maze.passable[4] = false;
        assert_eq!(grid_shortest_path(&maze).unwrap(), None);
    }

    #[test]
    fn matches_bellman_ford_relaxation() {
        // Random obstacle grid; compare against exhaustive relaxation.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let (w, h) = (15u32, 15u32);
            let mut passable: Vec<bool> = (0..w * h).map(|_| rng.gen_bool(0.72)).collect();
            passable[0] = true;
            let goal_i = (w * h - 1) as usize;
            passable[goal_i] = true;
            let maze = MazeGrid {
                width: w,
                height: h,
                passable,
                start: Cell::new(0, 0),
                goal: Cell::new(w - 1, h - 1),
                cell_size_mm: 1.0,
            };
            let mut dist = vec![f64::INFINITY; (w * h) as usize];
            dist[0] = 0.0;
            let mut changed = true;
            while changed {
                changed = false;
                for y in 0..h as i64 {
                    for x in 0..w as i64 {
                        let i = (y * w as i64 + x) as usize;
                        if dist[i].is_infinite() || !maze.is_passable(x, y) {
                            continue;
                        }
                        for dir in COMPASS_ALL {
                            let (dx, dy) = dir.delta();
                            let (nx, ny) = (x + dx as i64, y + dy as i64);
                            if !maze.is_passable(nx, ny) {
                                continue;
                            }
                            if dir.is_diagonal()
                                && !(maze.is_passable(nx, y) && maze.is_passable(x, ny))
                            {
                                continue;
                            }
                            let ni = (ny * w as i64 + nx) as usize;
                            let nd = dist[i] + dir.step_len();
                            if nd < dist[ni] - 1e-12 {
                                dist[ni] = nd;
                                changed = true;
                            }
                        }
                    }
                }
            }
            let oracle = dist[goal_i];
            match grid_shortest_path(&maze).unwrap() {
                Some(path) => assert!((path.cost_mm - oracle).abs() < 1e-9),
                None => assert!(oracle.is_infinite()),
            }
        }
    }

    // ----- beta_skeleton -----

    #[test]
    fn gabriel_inclusion_case() {
        // (1, 0.2) lies inside the diameter disc of (0,0)-(2,0).
        let sites = SiteSet::new(vec![(0.0, 0.0), (2.0, 0.0), (1.0, 0.2)]).unwrap();
        let g1 = beta_skeleton(&sites, 1.0).unwrap();
        assert!(!g1.contains_edge(0, 1), "long edge must be blocked: {:?}", g1.edges);
        assert!(g1.contains_edge(0, 2));
        assert!(g1.contains_edge(1, 2));
    }

    #[test]
    fn beta_below_one_rejected() {
        let sites = SiteSet::new(vec![(0.0, 0.0), (1.0, 0.0)]).unwrap();
        assert!(matches!(beta_skeleton(&sites, 0.5), Err(GeometryError::BadBeta(_))));
    }

    #[test]
    fn skeletons_nest_with_beta() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let sites = random_sites(&mut rng, 50, 100.0);
        let g_low = beta_skeleton(&sites, 1.2).unwrap();
        let g_high = beta_skeleton(&sites, 1.9).unwrap();
        assert!(g_high.is_subgraph_of(&g_low));
    }

    #[test]
    fn hierarchy_sandwich_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for round in 0..20 {
            let sites = random_sites(&mut rng, 14, 100.0);
            let mst = euclidean_mst(&sites).unwrap();
            let rng_graph = beta_skeleton(&sites, 2.0).unwrap();
            let gabriel = beta_skeleton(&sites, 1.0).unwrap();
            let dt = delaunay(&sites).unwrap();
            assert!(mst.is_subgraph_of(&rng_graph), "round {round}: EMST not in RNG");
            assert!(rng_graph.is_subgraph_of(&gabriel), "round {round}: RNG not in Gabriel");
            assert!(gabriel.is_subgraph_of(&dt), "round {round}: Gabriel not in Delaunay");
        }
    }

    fn central_sites(rng: &mut ChaCha8Rng, n: usize, extent: f64) -> SiteSet {
        loop {
            let pts: Vec<(f64, f64)> = (0..n)
                .map(|_| {
                    (
                        rng.gen_range(extent / 3.0..2.0 * extent / 3.0),
                        rng.gen_range(extent / 3.0..2.0 * extent / 3.0),
                    )
                })
                .collect();
            if let Ok(s) = SiteSet::new(pts) {
                return s;
            }
        }
    }

    #[test]
    fn voronoi_delaunay_discrete_duality() {
        // For every Delaunay edge whose dual Voronoi edge intersects the
        // raster, some raster cell must witness p and q as its two nearest
        // sites, near-equidistant. Edges dual to off-grid Voronoi segments
        // (near-collinear triples push circumcentres far away) are skipped
        // after verifying the continuous locus really is off-grid.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let g = grid(144, 144);
        let eps = boundary_tie_tolerance(&g) + g.cell_size_mm / 2.0;
        let mut verified = 0usize;
        for _ in 0..3 {
            let sites = central_sites(&mut rng, 6, 144.0);
            let pts = sites.points();
            let dt = delaunay(&sites).unwrap();
            for &(p, q) in &dt.edges {
                // Walk the continuous bisector of (p, q) across the grid:
                // does any in-grid point have p and q as its two nearest?
                let mid = ((pts[p].0 + pts[q].0) / 2.0, (pts[p].1 + pts[q].1) / 2.0);
                let dir = {
                    let (dx, dy) = (pts[q].0 - pts[p].0, pts[q].1 - pts[p].1);
                    let n = (dx * dx + dy * dy).sqrt();
                    (-dy / n, dx / n)
                };
                let max_extent = 144.0 * std::f64::consts::SQRT_2;
                let mut locus_on_grid = false;
                let mut t = -max_extent;
                while t <= max_extent {
                    let (x, y) = (mid.0 + t * dir.0, mid.1 + t * dir.1);
                    t += 0.25;
                    if !(0.0..144.0).contains(&x) || !(0.0..144.0).contains(&y) {
                        continue;
                    }
                    let dp = ((x - pts[p].0).powi(2) + (y - pts[p].1).powi(2)).sqrt();
                    if pts
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| *i != p && *i != q)
                        .all(|(_, &(sx, sy))| {
                            ((x - sx).powi(2) + (y - sy).powi(2)).sqrt() > dp
                        })
                    {
                        locus_on_grid = true;
                        break;
                    }
                }
                if !locus_on_grid {
                    continue;
                }
                let mut found = false;
                'scan: for y in 0..g.height {
                    for x in 0..g.width {
                        let (cx, cy) = g.cell_center_mm(Cell::new(x, y));
                        let mut ds: Vec<(f64, usize)> = pts
                            .iter()
                            .enumerate()
                            .map(|(i, &(sx, sy))| {
                                (((cx - sx).powi(2) + (cy - sy).powi(2)).sqrt(), i)
                            })
                            .collect();
                        ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
                        let pair = (ds[0].1.min(ds[1].1), ds[0].1.max(ds[1].1));
                        if pair == (p, q) && ds[1].0 - ds[0].0 <= eps {
                            found = true;
                            break 'scan;
                        }
                    }
                }
                assert!(found, "no duality witness for edge ({p},{q})");
                verified += 1;
            }
        }
        assert!(verified >= 20, "too few edges verified: {verified}");
    }

    #[test]
    fn planar_graph_json_shape() {
        let sites = SiteSet::new(vec![(0.0, 0.0), (1.5, 0.0)]).unwrap();
        let g = delaunay(&sites).unwrap();
        assert_eq!(g.to_json(), "{\"nodes\": [[0, 0], [1.5, 0]], \"edges\": [[0, 1]]}");
    }
}
