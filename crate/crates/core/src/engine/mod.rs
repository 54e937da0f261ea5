//! The virtual plasmodium.
//!
//! Growth runs in two per-cell regimes selected by the substrate: on
//! nutrient-rich cells (nutrient >= threshold) the mass expands as an
//! omnidirectional wavefront that stops dead where fronts of different
//! origins collide; on non-nutrient cells growth happens through a handful
//! of active zones - agents at single cells - that extend protoplasmic
//! tubes by weighted-argmax chemotaxis, branch, suppress each other, and
//! avoid abandoned tubes.
//!
//! Every tick is a fixed sequence of phases (see [`run_until`]); all
//! randomness comes from a counter-based generator keyed by
//! (seed, tick, zone id), so equal scenes and seeds give bit-identical
//! histories.

mod graph;
mod rng;

pub use graph::{
    polyline_length_mm, BuildEdge, BuildNode, EdgeId, GraphBuilder, NodeId, NodeKind, TubeEdge,
    TubeGraph, TubeNode,
};

use serde::{Deserialize, Serialize};

use crate::environment::{
    deposit_sources, diffuse_step, stimulus_at, Cell, ChemicalField, Compass, Scene, SpeciesKind,
    StimulusSource, StimulusWeights, COMPASS_ALL, DEFAULT_FEED_FACTOR,
};

/// Weight of directional persistence in zone scoring. The paper-level
/// behaviour ("momentum", directional inertia of a growth tip) is fixed
/// here rather than exposed as a knob; stimulus scales in scenes are
/// calibrated around it.
pub const MOMENTUM_GAIN: f64 = 0.05;

/// Minimum Chebyshev distance between a stalled front cell and the nearest
/// live zone before the front may sprout a new zone.
const BOUNDARY_SPAWN_SPACING: u32 = 3;

/// Fraction of the attractant a growth tip absorbs from each cell it
/// enters. Feeding along the way makes loitering in a stale gradient
/// self-limiting: an orbiting tip eats the very ridge it circles.
const TIP_UPTAKE: f64 = 0.7;

/// Chebyshev radius of the stimulus patch consumed outright when a source
/// is colonized: the arriving mass digests the accumulated local plume,
/// leaving only remote gradients to steer subsequent growth.
const COLONIZE_UPTAKE_RADIUS: u32 = 28;

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("tube graph inconsistency: {0}")]
    Inconsistent(String),
}

/// Engine knobs, embedded in the scene document under "engine".
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineParams {
    /// Front expansion rate, cells per tick, in (0, 1].
    pub wave_speed: f64,
    /// Cells with nutrient >= this run the wavefront regime.
    pub nutrient_threshold: f64,
    /// A zone branches when its runner-up score reaches this fraction of
    /// the best score (and the directions differ by at least 90 degrees).
    pub branch_ratio: f64,
    pub noise_amplitude: f64,
    pub self_avoid_penalty: f64,
    pub suppression_gain: f64,
    pub activity_floor: f64,
    pub continuation: bool,
    pub max_zones: u32,
    pub seed: u64,
}

impl Default for EngineParams {
    fn default() -> Self {
        EngineParams {
            wave_speed: 1.0,
            nutrient_threshold: 0.5,
            branch_ratio: 0.9,
            noise_amplitude: 0.05,
            self_avoid_penalty: 2.0,
            suppression_gain: 0.02,
            activity_floor: 0.05,
            continuation: false,
            max_zones: 64,
            seed: 0,
        }
    }
}

impl EngineParams {
    /// Range checks; returns (field, message) for the first violation.
    pub fn validate(&self) -> Result<(), (String, String)> {
        let err = |f: &str, m: String| Err((f.to_string(), m));
        if !(self.wave_speed > 0.0 && self.wave_speed <= 1.0) {
            return err("wave_speed", format!("must be in (0, 1], got {}", self.wave_speed));
        }
        if !(0.0..=1.0).contains(&self.nutrient_threshold) {
            return err(
                "nutrient_threshold",
                format!("must be in [0, 1], got {}", self.nutrient_threshold),
            );
        }
        if !(self.branch_ratio > 0.0 && self.branch_ratio <= 1.0) {
            return err("branch_ratio", format!("must be in (0, 1], got {}", self.branch_ratio));
        }
        for (name, v) in [
            ("noise_amplitude", self.noise_amplitude),
            ("self_avoid_penalty", self.self_avoid_penalty),
            ("suppression_gain", self.suppression_gain),
            ("activity_floor", self.activity_floor),
        ] {
            if !(v >= 0.0) {
                return err(name, format!("must be >= 0, got {v}"));
            }
        }
        if self.max_zones < 1 {
            return err("max_zones", "must be at least 1".to_string());
        }
        Ok(())
    }
}

/// Per-cell occupancy tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellTag {
    Empty,
    /// Wavefront boundary cell still claiming neighbours.
    Front { owner: u32 },
    /// Interior mass of a wavefront, or an inoculation site.
    Occupied { owner: u32 },
    /// Part of a live tube edge polyline.
    Tube { edge: EdgeId },
    /// A collapsed tube; persists and repels future growth.
    AbandonedTube { edge: EdgeId },
}

/// Occupancy raster plus the permanent collision loci.
#[derive(Debug, Clone)]
pub struct OccupancyState {
    width: u32,
    height: u32,
    tags: Vec<CellTag>,
    /// Cells where fronts of different owners met; permanently empty.
    contested: Vec<bool>,
}

impl OccupancyState {
    fn new(width: u32, height: u32) -> Self {
        let n = width as usize * height as usize;
        OccupancyState {
            width,
            height,
            tags: vec![CellTag::Empty; n],
            contested: vec![false; n],
        }
    }

    fn idx(&self, cell: Cell) -> usize {
        cell.y as usize * self.width as usize + cell.x as usize
    }

    pub fn tag(&self, cell: Cell) -> CellTag {
        self.tags[self.idx(cell)]
    }

    pub fn set_tag(&mut self, cell: Cell, tag: CellTag) {
        let i = self.idx(cell);
        self.tags[i] = tag;
    }

    pub fn is_contested(&self, cell: Cell) -> bool {
        self.contested[self.idx(cell)]
    }

    pub fn tags(&self) -> &[CellTag] {
        &self.tags
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Number of non-empty cells.
    pub fn occupied_count(&self) -> usize {
        self.tags.iter().filter(|t| **t != CellTag::Empty).count()
    }

    /// All cells still tagged Empty (including permanent collision loci),
    /// in row-major order.
    pub fn empty_cells(&self) -> Vec<Cell> {
        self.tags
            .iter()
            .enumerate()
            .filter(|(_, t)| **t == CellTag::Empty)
            .map(|(i, _)| {
                Cell::new((i % self.width as usize) as u32, (i / self.width as usize) as u32)
            })
            .collect()
    }
}

/// A growth tip.
#[derive(Debug, Clone)]
pub struct ActiveZone {
    pub id: u32,
    pub position: Cell,
    pub heading: Compass,
    pub activity: f64,
    pub tail_node: NodeId,
    pub alive: bool,
    /// Inoculation component this zone grows for.
    pub owner: u32,
    /// Open polyline from the tail node to the current position.
    trail: Vec<Cell>,
    open_edge: Option<EdgeId>,
    /// Scores of the step taken this tick, kept for branching.
    last_step: Option<StepScores>,
}

#[derive(Debug, Clone)]
struct StepScores {
    origin: Cell,
    best_dir: Compass,
    best_score: f64,
    second: Option<(Compass, f64)>,
}

/// Per-tick trace record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TickSummary {
    pub tick: u64,
    pub zones: usize,
    pub occupied: usize,
    pub colonized: usize,
}

/// One recorded fresh-vs-abandoned choice (for the self-avoidance index).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChoiceEvent {
    pub tick: u64,
    pub zone: u32,
    pub fresh_available: bool,
    pub abandoned_available: bool,
    pub chose_fresh: bool,
}

/// Full run trace.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    pub ticks: Vec<TickSummary>,
    pub choices: Vec<ChoiceEvent>,
}

/// Both chemical fields of a running scene.
#[derive(Debug, Clone)]
pub struct Fields {
    pub attractant: ChemicalField,
    pub repellent: ChemicalField,
}

impl Fields {
    pub fn zeroed(scene: &Scene) -> Self {
        Fields {
            attractant: ChemicalField::zeroed(
                SpeciesKind::Attractant,
                scene.grid.width,
                scene.grid.height,
            ),
            repellent: ChemicalField::zeroed(
                SpeciesKind::Repellent,
                scene.grid.width,
                scene.grid.height,
            ),
        }
    }
}

/// Run termination condition. Every variant carries a tick bound; a run
/// that exhausts the bound without meeting its condition is "incomplete"
/// rather than an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopCondition {
    MaxTicks(u64),
    AllSourcesColonized { max_ticks: u64 },
    SingleZoneRemaining { max_ticks: u64 },
}

impl StopCondition {
    fn max_ticks(&self) -> u64 {
        match *self {
            StopCondition::MaxTicks(n) => n,
            StopCondition::AllSourcesColonized { max_ticks } => max_ticks,
            StopCondition::SingleZoneRemaining { max_ticks } => max_ticks,
        }
    }
}

/// The full mutable simulation state.
#[derive(Debug, Clone)]
pub struct PlasmodiumState {
    pub occupancy: OccupancyState,
    pub zones: Vec<ActiveZone>,
    pub graph: GraphBuilder,
    pub tick: u64,
    pub spanning_complete: bool,
    /// Root key of the counter-based generator.
    pub seed: u64,
    /// Evolving copy of the scene's sources (colonized flags, masses).
    pub sources: Vec<StimulusSource>,
    pub continuation_active: bool,

    // Wavefront bookkeeping.
    front: Vec<Cell>,
    /// Propagated nearest-origin point per claimed cell (cell units).
    src_point: Vec<Option<(f64, f64)>>,
    /// Claim provenance, for building edges when a front reaches a source.
    claim_parent: Vec<Option<Cell>>,
    /// Union-find over inoculation components (merged by tube fusion).
    comp_parent: Vec<u32>,
    /// Per-source flag: abandonment-and-respawn already handled.
    relocated: Vec<bool>,
    /// Colony boundary cells facing open non-nutrient substrate; they keep
    /// budding fresh tips whenever spacing and the zone budget allow.
    budding: Vec<Cell>,
}

impl PlasmodiumState {
    fn cell_index(&self, cell: Cell) -> usize {
        cell.y as usize * self.occupancy.width as usize + cell.x as usize
    }

    pub fn live_zone_count(&self) -> usize {
        self.zones.iter().filter(|z| z.alive).count()
    }

    pub fn colonized_count(&self) -> usize {
        self.sources
            .iter()
            .filter(|s| s.kind == SpeciesKind::Attractant && s.colonized)
            .count()
    }

    fn find_component(&mut self, mut v: u32) -> u32 {
        while self.comp_parent[v as usize] != v {
            let up = self.comp_parent[self.comp_parent[v as usize] as usize];
            self.comp_parent[v as usize] = up;
            v = up;
        }
        v
    }

    fn union_components(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find_component(a), self.find_component(b));
        if ra != rb {
            // Smaller root wins, purely for determinism.
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.comp_parent[hi as usize] = lo;
        }
    }

    fn recompute_spanning(&mut self) {
        self.spanning_complete = self
            .sources
            .iter()
            .filter(|s| s.kind == SpeciesKind::Attractant)
            .all(|s| s.colonized);
    }

    /// Bitwise digest of the evolving state, for determinism checks.
    pub fn digest(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |v: u64| {
            h ^= v;
            h = h.wrapping_mul(0x100000001b3);
        };
        eat(self.tick);
        eat(self.spanning_complete as u64);
        for t in &self.occupancy.tags {
            eat(match *t {
                CellTag::Empty => 0,
                CellTag::Front { owner } => 1 | ((owner as u64) << 8),
                CellTag::Occupied { owner } => 2 | ((owner as u64) << 8),
                CellTag::Tube { edge } => 3 | ((edge as u64) << 8),
                CellTag::AbandonedTube { edge } => 4 | ((edge as u64) << 8),
            });
        }
        for z in &self.zones {
            eat(z.alive as u64);
            eat(((z.position.x as u64) << 32) | z.position.y as u64);
            eat(z.activity.to_bits());
            eat(z.heading as u64);
        }
        for s in &self.sources {
            eat(s.colonized as u64);
            eat(s.remaining_mass.to_bits());
        }
        for e in &self.graph.edges {
            eat(e.polyline.len() as u64);
            eat(e.dead as u64);
            eat(e.abandoned as u64);
            eat(e.visits as u64);
        }
        h
    }
}

/// Stimulus a cell would feel from the not-yet-colonized sources if
/// distance were the only attenuation. Used for aiming initial headings
/// and re-foragers.
fn virtual_stimulus(sources: &[StimulusSource], cell: Cell) -> f64 {
    let (cx, cy) = (cell.x as f64, cell.y as f64);
    let mut total = 0.0;
    for s in sources {
        if s.colonized || s.depleted() {
            continue;
        }
        let dx = s.position.x as f64 - cx;
        let dy = s.position.y as f64 - cy;
        let d2 = dx * dx + dy * dy;
        let sign = match s.kind {
            SpeciesKind::Attractant => 1.0,
            SpeciesKind::Repellent => -1.0,
        };
        total += sign * s.strength / (1.0 + d2);
    }
    total
}

/// Heading that maximises the virtual stimulus over the 8 neighbours;
/// ties (including the all-zero case) resolve to the lowest compass index.
/// A source directly under `cell` pulls in no particular direction, so it
/// is excluded from the aim.
fn aim_heading(scene: &Scene, sources: &[StimulusSource], cell: Cell) -> Compass {
    let remote: Vec<StimulusSource> = sources
        .iter()
        .filter(|s| s.position != cell)
        .cloned()
        .collect();
    let mut best = Compass::N;
    let mut best_v = f64::NEG_INFINITY;
    for dir in COMPASS_ALL {
        if let Some(n) = scene.grid.neighbor(cell, dir) {
            let v = virtual_stimulus(&remote, n);
            if v > best_v {
                best_v = v;
                best = dir;
            }
        }
    }
    best
}

/// Builds the initial state: one Inoculation node, one Occupied cell and
/// one active zone (activity 1) per inoculation site, headings aimed at
/// the strongest local stimulus, tick 0.
pub fn init_plasmodium(scene: &Scene) -> PlasmodiumState {
    let n_cells = scene.grid.cell_count();
    let mut state = PlasmodiumState {
        occupancy: OccupancyState::new(scene.grid.width, scene.grid.height),
        zones: Vec::new(),
        graph: GraphBuilder::new(),
        tick: 0,
        spanning_complete: false,
        seed: scene.params.seed,
        sources: scene.sources.clone(),
        continuation_active: false,
        front: Vec::new(),
        src_point: vec![None; n_cells],
        claim_parent: vec![None; n_cells],
        comp_parent: (0..scene.inoculation_sites.len() as u32).collect(),
        relocated: vec![false; scene.sources.len()],
        budding: Vec::new(),
    };

    for (i, &site) in scene.inoculation_sites.iter().enumerate() {
        let owner = i as u32;
        let node = state.graph.node_at_or_insert(site, NodeKind::Inoculation);
        state.occupancy.set_tag(site, CellTag::Occupied { owner });
        let idx = state.cell_index(site);
        state.src_point[idx] = Some((site.x as f64, site.y as f64));
        state.front.push(site);

        let heading = aim_heading(scene, &state.sources, site);
        state.zones.push(ActiveZone {
            id: owner,
            position: site,
            heading,
            activity: 1.0,
            tail_node: node,
            alive: true,
            owner,
            trail: vec![site],
            open_edge: None,
            last_step: None,
        });
    }
    state.recompute_spanning();
    state
}

fn nutrient_rich(scene: &Scene, cell: Cell) -> bool {
    scene.substrate.nutrient(cell) >= scene.params.nutrient_threshold
}

/// Marks every uncolonized source at `cell` colonized. Returns true when
/// at least one source was colonized.
fn colonize_sources_at(state: &mut PlasmodiumState, cell: Cell) -> bool {
    let mut any = false;
    for s in state.sources.iter_mut() {
        if s.position == cell && !s.colonized {
            s.colonized = true;
            any = true;
        }
    }
    if any {
        state.recompute_spanning();
    }
    any
}

/// Digest the local attractant plume around a freshly colonized source,
/// sparing a protective disc around every source that still emits: feeding
/// must not blind the colony to its next target, and it must not leave a
/// stale ridge for tips to orbit.
fn consume_local_field(state: &PlasmodiumState, fields: &mut Fields, cell: Cell) {
    const PROTECT_RADIUS: f64 = 10.0;
    let live: Vec<Cell> = state
        .sources
        .iter()
        .filter(|s| s.kind == SpeciesKind::Attractant && !s.colonized && !s.depleted())
        .map(|s| s.position)
        .collect();
    let r = COLONIZE_UPTAKE_RADIUS;
    let x0 = cell.x.saturating_sub(r);
    let y0 = cell.y.saturating_sub(r);
    let x1 = (cell.x + r).min(fields.attractant.width() - 1);
    let y1 = (cell.y + r).min(fields.attractant.height() - 1);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let protected = live.iter().any(|p| {
                let dx = p.x as f64 - x as f64;
                let dy = p.y as f64 - y as f64;
                (dx * dx + dy * dy).sqrt() <= PROTECT_RADIUS
            });
            if !protected {
                fields.attractant.set(Cell::new(x, y), 0.0);
            }
        }
    }
}

fn uncolonized_attractants_remain(state: &PlasmodiumState) -> bool {
    state
        .sources
        .iter()
        .any(|s| s.kind == SpeciesKind::Attractant && !s.colonized)
}

/// Spawns the next relay forager for a component that still has
/// uncolonized baits: the tip buds from the network node nearest to the
/// nearest remaining bait, the way a colony sprouts where the signal sits
/// closest to its body. Falls back to `fallback` when no better node
/// exists.
fn spawn_relay_forager(
    state: &mut PlasmodiumState,
    scene: &Scene,
    fields: &Fields,
    fallback: NodeId,
    owner: u32,
) {
    let root = state.find_component(owner);
    // Candidate anchor nodes of this component: inoculation nodes plus
    // endpoints of its live edges.
    let mut candidates: Vec<NodeId> = Vec::new();
    for (i, site) in scene.inoculation_sites.iter().enumerate() {
        if state.find_component(i as u32) == root {
            if let Some(n) = state.graph.node_at(*site) {
                candidates.push(n);
            }
        }
    }
    let edge_meta: Vec<(u32, NodeId, Option<NodeId>, bool)> = state
        .graph
        .edges
        .iter()
        .map(|e| (e.owner, e.tail, e.head, e.dead || e.abandoned))
        .collect();
    for (owner, tail, head, skip) in edge_meta {
        let head = match head {
            Some(h) if !skip => h,
            _ => continue,
        };
        if state.find_component(owner) != root {
            continue;
        }
        candidates.push(tail);
        candidates.push(head);
    }
    candidates.push(fallback);
    candidates.sort_unstable();
    candidates.dedup();

    // Nearest (node, bait) pair among anchors that still have a walkable
    // exit cell; a node ringed in by its own tubes cannot sprout.
    let mut best: Option<(f64, NodeId, Compass, Cell)> = None;
    for &nid in &candidates {
        let p = state.graph.nodes[nid as usize].position;
        let exit = free_exit(state, scene, p);
        let (dir, ncell) = match exit {
            Some(e) => e,
            None => continue,
        };
        for s in &state.sources {
            if s.kind != SpeciesKind::Attractant || s.colonized || s.depleted() {
                continue;
            }
            let dx = s.position.x as f64 - p.x as f64;
            let dy = s.position.y as f64 - p.y as f64;
            let d = (dx * dx + dy * dy).sqrt();
            if best.map(|(bd, _, _, _)| d < bd).unwrap_or(true) {
                best = Some((d, nid, dir, ncell));
            }
        }
    }
    let (anchor, _dir, ncell) = match best {
        Some((_, n, dir, c)) => (n, dir, c),
        None => {
            let cell = state.graph.nodes[fallback as usize].position;
            spawn_forager(state, scene, fields, fallback, cell, owner);
            return;
        }
    };
    // Bud at the exit cell so the tip starts clear of the congestion
    // around a much-used junction.
    let acell = state.graph.nodes[anchor as usize].position;
    let id = state.zones.len() as u32;
    let e = state.graph.open_edge(anchor, acell, owner);
    state.graph.edges[e as usize].polyline.push(ncell);
    state.occupancy.set_tag(ncell, CellTag::Tube { edge: e });
    let heading = aim_heading(scene, &state.sources, ncell);
    state.zones.push(ActiveZone {
        id,
        position: ncell,
        heading,
        activity: 1.0,
        tail_node: anchor,
        alive: true,
        owner,
        trail: vec![acell, ncell],
        open_edge: Some(e),
        last_step: None,
    });
}

/// The best walkable exit cell around `p`, preferring fresh cells over
/// abandoned ones and scoring by the virtual pull of the remaining baits.
fn free_exit(
    state: &mut PlasmodiumState,
    scene: &Scene,
    p: Cell,
) -> Option<(Compass, Cell)> {
    let mut best: Option<(bool, f64, Compass, Cell)> = None;
    for dir in COMPASS_ALL {
        let n = match scene.grid.neighbor(p, dir) {
            Some(n) => n,
            None => continue,
        };
        if scene.substrate.is_wall(n)
            || state.occupancy.is_contested(n)
            || nutrient_rich(scene, n)
        {
            continue;
        }
        let fresh = match state.occupancy.tag(n) {
            CellTag::Empty => true,
            CellTag::AbandonedTube { .. } => false,
            _ => continue,
        };
        let v = virtual_stimulus(&state.sources, n);
        // Fresh beats abandoned; among equals the stronger pull wins.
        let better = match best {
            None => true,
            Some((bf, bv, _, _)) => (fresh, v) > (bf, bv),
        };
        if better {
            best = Some((fresh, v, dir, n));
        }
    }
    best.map(|(_, _, dir, n)| (dir, n))
}

/// Spawns a fresh forager (activity 1) sitting on `cell`, tethered to
/// `tail`. Aimed at the strongest uncolonized virtual stimulus; with
/// nothing left to forage the heading follows the real field.
fn spawn_forager(
    state: &mut PlasmodiumState,
    scene: &Scene,
    fields: &Fields,
    tail: NodeId,
    cell: Cell,
    owner: u32,
) {
    if state.live_zone_count() >= scene.params.max_zones as usize {
        return;
    }
    let heading = if uncolonized_attractants_remain(state) {
        aim_heading(scene, &state.sources, cell)
    } else {
        let mut best = Compass::N;
        let mut best_v = f64::NEG_INFINITY;
        for dir in COMPASS_ALL {
            if let Some(n) = scene.grid.neighbor(cell, dir) {
                let v = stimulus_at(&fields.attractant, &fields.repellent, StimulusWeights::default(), n)
                    .unwrap_or(f64::NEG_INFINITY);
                if v > best_v {
                    best_v = v;
                    best = dir;
                }
            }
        }
        best
    };
    let id = state.zones.len() as u32;
    state.zones.push(ActiveZone {
        id,
        position: cell,
        heading,
        activity: 1.0,
        tail_node: tail,
        alive: true,
        owner,
        trail: vec![cell],
        open_edge: None,
        last_step: None,
    });
}

/// Seals a zone's open edge at a node and resets the trail bookkeeping.
fn close_zone_edge(state: &mut PlasmodiumState, zone_idx: usize, head: NodeId, abandoned: bool) {
    let edge = state.zones[zone_idx].open_edge.take();
    if let Some(e) = edge {
        state.graph.close_edge(e, head, abandoned);
        if abandoned && !state.graph.edges[e as usize].dead {
            retag_abandoned(state, e);
        }
    }
    let pos = state.zones[zone_idx].position;
    state.zones[zone_idx].trail = vec![pos];
    state.zones[zone_idx].tail_node = head;
}

/// Marks a sealed edge abandoned and retags its cells.
fn abandon_edge(state: &mut PlasmodiumState, edge: EdgeId) {
    let e = &mut state.graph.edges[edge as usize];
    if e.dead || e.abandoned {
        return;
    }
    e.abandoned = true;
    retag_abandoned(state, edge);
}

fn retag_abandoned(state: &mut PlasmodiumState, edge: EdgeId) {
    let cells: Vec<Cell> = state.graph.edges[edge as usize].polyline.clone();
    for c in cells {
        if state.occupancy.tag(c) == (CellTag::Tube { edge }) {
            state.occupancy.set_tag(c, CellTag::AbandonedTube { edge });
        }
    }
}

/// Kills a zone. `abandoned` marks deaths by entrapment or suppression;
/// content deaths (arrival at food or mass) keep their edge live.
fn kill_zone(state: &mut PlasmodiumState, zone_idx: usize, abandoned: bool) {
    let pos = state.zones[zone_idx].position;
    if state.zones[zone_idx].open_edge.is_some() {
        let kind = if abandoned { NodeKind::Tip } else { NodeKind::Branch };
        let node = state.graph.node_at_or_insert(pos, kind);
        close_zone_edge(state, zone_idx, node, abandoned);
    }
    state.zones[zone_idx].alive = false;
    state.zones[zone_idx].activity = 0.0;
    state.zones[zone_idx].last_step = None;
}

/// One wavefront tick: front cells claim unclaimed nutrient-rich
/// 8-neighbours once the neighbour's distance from the propagated origin
/// point is within `tick * wave_speed`. Cells proposed by two different
/// owners in the same tick become permanently empty (collision bisectors).
/// Stalled front cells facing non-nutrient open cells sprout active zones.
pub fn step_wavefront(state: &mut PlasmodiumState, scene: &Scene, fields: &mut Fields) {
    use std::collections::BTreeMap;

    let reach = state.tick as f64 * scene.params.wave_speed;
    let mut fronts = std::mem::take(&mut state.front);
    fronts.sort_by_key(|c| (c.y, c.x));
    fronts.dedup();

    // Phase 1: propose claims from the read-only previous state.
    let mut proposals: BTreeMap<Cell, Vec<(u32, (f64, f64), f64, Cell)>> = BTreeMap::new();
    for &c in &fronts {
        let src = match state.src_point[state.cell_index(c)] {
            Some(s) => s,
            None => continue,
        };
        let owner = match state.occupancy.tag(c) {
            CellTag::Front { owner } | CellTag::Occupied { owner } => owner,
            _ => continue,
        };
        for dir in COMPASS_ALL {
            let n = match scene.grid.neighbor(c, dir) {
                Some(n) => n,
                None => continue,
            };
            if scene.substrate.is_wall(n)
                || state.occupancy.is_contested(n)
                || state.occupancy.tag(n) != CellTag::Empty
                || !nutrient_rich(scene, n)
            {
                continue;
            }
            // Arrival-time accumulator: the claim fires once the front has
            // had time to cover the distance from the propagated origin.
            let d = ((n.x as f64 - src.0).powi(2) + (n.y as f64 - src.1).powi(2)).sqrt();
            if d <= reach {
                proposals.entry(n).or_default().push((owner, src, d, c));
            }
        }
    }

    // Phase 2: resolve. Multiple owners -> permanently empty.
    let mut claimed: Vec<Cell> = Vec::new();
    for (cell, props) in proposals {
        let first_owner = props[0].0;
        if props.iter().any(|p| p.0 != first_owner) {
            let i = state.cell_index(cell);
            state.occupancy.contested[i] = true;
            continue;
        }
        let best = props
            .iter()
            .min_by(|a, b| a.2.partial_cmp(&b.2).expect("finite distances"))
            .expect("nonempty proposals");
        state.occupancy.set_tag(cell, CellTag::Front { owner: first_owner });
        let i = state.cell_index(cell);
        state.src_point[i] = Some(best.1);
        state.claim_parent[i] = Some(best.3);
        claimed.push(cell);
    }

    // Wavefront colonization: a front claiming a source cell colonizes it
    // and records the tube path along the claim chain.
    for &cell in &claimed {
        let had_source = state
            .sources
            .iter()
            .any(|s| s.position == cell && !s.colonized);
        if !had_source {
            continue;
        }
        colonize_sources_at(state, cell);
        consume_local_field(state, fields, cell);
        let owner = match state.occupancy.tag(cell) {
            CellTag::Front { owner } | CellTag::Occupied { owner } => owner,
            _ => 0,
        };
        // Walk claim parents back to the nearest existing node.
        let mut chain = vec![cell];
        let mut cur = cell;
        while state.graph.node_at(cur).is_none() {
            match state.claim_parent[state.cell_index(cur)] {
                Some(p) => {
                    chain.push(p);
                    cur = p;
                }
                None => break,
            }
        }
        if let Some(tail) = state.graph.node_at(cur) {
            chain.reverse();
            let food = state.graph.node_at_or_insert(cell, NodeKind::Food);
            if food != tail && chain.len() >= 2 {
                let e = state.graph.open_edge(tail, chain[0], owner);
                state.graph.edges[e as usize].polyline = chain;
                state.graph.close_edge(e, food, false);
            }
        }
    }

    // Front maintenance: keep cells that can still claim something.
    let mut next_front = Vec::new();
    let mut stalled = Vec::new();
    for &c in fronts.iter().chain(claimed.iter()) {
        let mut can_claim = false;
        let mut open_non_nutrient = false;
        for dir in COMPASS_ALL {
            if let Some(n) = scene.grid.neighbor(c, dir) {
                if scene.substrate.is_wall(n)
                    || state.occupancy.is_contested(n)
                    || state.occupancy.tag(n) != CellTag::Empty
                {
                    continue;
                }
                if nutrient_rich(scene, n) {
                    can_claim = true;
                } else {
                    open_non_nutrient = true;
                }
            }
        }
        if can_claim {
            next_front.push(c);
        } else {
            if let CellTag::Front { owner } = state.occupancy.tag(c) {
                state.occupancy.set_tag(c, CellTag::Occupied { owner });
            }
            if open_non_nutrient {
                stalled.push(c);
            }
        }
    }
    next_front.sort_by_key(|c| (c.y, c.x));
    next_front.dedup();
    state.front = next_front;

    // Stalled boundary cells stay on the budding list for the rest of the
    // run: a colonised patch keeps budding fresh tips whenever spacing and
    // the zone budget allow, so the colony recovers from dead tips.
    let mut budding = std::mem::take(&mut state.budding);
    budding.extend(stalled);
    budding.sort_by_key(|c| (c.y, c.x));
    budding.dedup();
    state.budding = budding.clone();

    for c in budding {
        if state.live_zone_count() >= scene.params.max_zones as usize {
            break;
        }
        // Spacing applies to actual growth tips; a zone resting on the
        // nutrient mass itself does not block budding.
        let near_zone = state.zones.iter().any(|z| {
            z.alive
                && !nutrient_rich(scene, z.position)
                && z.position.chebyshev(&c) < BOUNDARY_SPAWN_SPACING
        });
        if near_zone {
            continue;
        }
        let owner = match state.occupancy.tag(c) {
            CellTag::Front { owner } | CellTag::Occupied { owner } => owner,
            _ => continue,
        };
        // Best open non-nutrient neighbour by real stimulus; collapsed
        // tubes are walkable but penalised like any abandoned cell.
        let mut best: Option<(f64, Compass, Cell)> = None;
        for dir in COMPASS_ALL {
            if let Some(n) = scene.grid.neighbor(c, dir) {
                if scene.substrate.is_wall(n)
                    || state.occupancy.is_contested(n)
                    || nutrient_rich(scene, n)
                {
                    continue;
                }
                let penalty = match state.occupancy.tag(n) {
                    CellTag::Empty => 0.0,
                    CellTag::AbandonedTube { .. } => scene.params.self_avoid_penalty,
                    _ => continue,
                };
                let s = stimulus_at(
                    &fields.attractant,
                    &fields.repellent,
                    StimulusWeights::default(),
                    n,
                )
                .unwrap_or(0.0)
                    - penalty;
                if best.map(|(bs, _, _)| s > bs).unwrap_or(true) {
                    best = Some((s, dir, n));
                }
            }
        }
        if let Some((_, dir, n)) = best {
            // A tube through the mass keeps the graph connected: if the
            // budding cell has no node yet, lay an edge back along the
            // claim chain to the nearest existing node (the inoculation).
            if state.graph.node_at(c).is_none() {
                let mut chain = vec![c];
                let mut cur = c;
                while state.graph.node_at(cur).is_none() {
                    match state.claim_parent[state.cell_index(cur)] {
                        Some(p) => {
                            chain.push(p);
                            cur = p;
                        }
                        None => break,
                    }
                }
                if let Some(anchor) = state.graph.node_at(cur) {
                    chain.reverse();
                    let bud = state.graph.node_at_or_insert(c, NodeKind::Branch);
                    if bud != anchor && chain.len() >= 2 {
                        let e = state.graph.open_edge(anchor, chain[0], owner);
                        state.graph.edges[e as usize].polyline = chain;
                        state.graph.close_edge(e, bud, false);
                    }
                }
            }
            let tail = state.graph.node_at_or_insert(c, NodeKind::Branch);
            let id = state.zones.len() as u32;
            let e = state.graph.open_edge(tail, c, owner);
            state.graph.edges[e as usize].polyline.push(n);
            state.occupancy.set_tag(n, CellTag::Tube { edge: e });
            state.zones.push(ActiveZone {
                id,
                position: n,
                heading: dir,
                activity: 1.0,
                tail_node: tail,
                alive: true,
                owner,
                trail: vec![c, n],
                open_edge: Some(e),
                last_step: None,
            });
        }
    }
}

/// Neighbour classification for zone scoring.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Move {
    /// Unclaimed, non-nutrient cell.
    Fresh,
    /// Walkable collapsed tube (penalised).
    Abandoned,
    /// Live tube of a foreign component (penalised; entering fuses).
    ForeignTube(EdgeId),
    /// Own live tube; admissible only in continuation mode (bonus).
    OwnTube(EdgeId),
    /// Occupied or front cell that a zone may fuse into.
    Mass(u32),
    /// Unclaimed nutrient-rich cell: stepping in hands over to the
    /// wavefront regime.
    NutrientHandoff,
}

/// One chemotaxis step for every live zone on non-nutrient substrate.
///
/// Each zone scores its admissible neighbours
/// (stimulus + momentum-alignment + noise - self-avoid penalties), moves to
/// the argmax (compass order breaks ties), extends its tube, and handles
/// arrival events: source colonization, nutrient handoff, and tube fusion.
/// Zones with no admissible neighbour die trapped.
pub fn step_zones(
    state: &mut PlasmodiumState,
    scene: &Scene,
    fields: &mut Fields,
    trace: &mut RunTrace,
) {
    let penalty = scene.params.self_avoid_penalty;
    let count = state.zones.len();

    for zi in 0..count {
        if !state.zones[zi].alive {
            continue;
        }
        let pos = state.zones[zi].position;
        if nutrient_rich(scene, pos) {
            continue;
        }
        let heading = state.zones[zi].heading;
        let zone_id = state.zones[zi].id;
        let zone_owner = state.find_component(state.zones[zi].owner);

        // Score admissible neighbours in compass order.
        let mut options: Vec<(Compass, Cell, Move, f64)> = Vec::with_capacity(8);
        for dir in COMPASS_ALL {
            let n = match scene.grid.neighbor(pos, dir) {
                Some(n) => n,
                None => continue,
            };
            if scene.substrate.is_wall(n) || state.occupancy.is_contested(n) {
                continue;
            }
            if dir.is_diagonal() {
                // No corner cutting between wall cells.
                let (dx, dy) = dir.delta();
                let side_a = scene.substrate.passable(pos.x as i64 + dx as i64, pos.y as i64);
                let side_b = scene.substrate.passable(pos.x as i64, pos.y as i64 + dy as i64);
                if !(side_a && side_b) {
                    continue;
                }
            }
            let mv = match state.occupancy.tag(n) {
                CellTag::Empty => {
                    if nutrient_rich(scene, n) {
                        Move::NutrientHandoff
                    } else {
                        Move::Fresh
                    }
                }
                CellTag::AbandonedTube { edge } => {
                    let _ = edge;
                    Move::Abandoned
                }
                CellTag::Tube { edge } => {
                    let eo = state.find_component(state.graph.edges[edge as usize].owner);
                    if eo == zone_owner {
                        if state.continuation_active {
                            Move::OwnTube(edge)
                        } else {
                            continue;
                        }
                    } else {
                        Move::ForeignTube(edge)
                    }
                }
                CellTag::Front { owner } | CellTag::Occupied { owner } => {
                    if state.continuation_active {
                        // Re-traversal patrols the tube network; it bounces
                        // off masses instead of dissolving into them.
                        continue;
                    }
                    let oc = state.find_component(owner);
                    if oc == zone_owner {
                        // A growth tip never crawls back into its own mass.
                        continue;
                    }
                    if nutrient_rich(scene, n) {
                        // Exclusion: waves of different origins never mix.
                        continue;
                    }
                    Move::Mass(owner)
                }
            };
            let mut score = stimulus_at(
                &fields.attractant,
                &fields.repellent,
                StimulusWeights::default(),
                n,
            )
            .expect("neighbor inside grid");
            score += MOMENTUM_GAIN * heading.alignment(dir);
            score += scene.params.noise_amplitude
                * rng::noise_unit(state.seed, state.tick, zone_id as u64, dir as u64);
            match mv {
                Move::Abandoned | Move::ForeignTube(_) => score -= penalty,
                Move::OwnTube(_) => score += penalty,
                _ => {}
            }
            options.push((dir, n, mv, score));
        }

        if options.is_empty() {
            kill_zone(state, zi, true);
            continue;
        }

        // Argmax; first in compass order wins ties.
        let mut best = 0usize;
        for k in 1..options.len() {
            if options[k].3 > options[best].3 {
                best = k;
            }
        }
        let (dir, target, mv, best_score) = options[best];

        // Record fresh-vs-abandoned choices for the self-avoidance index.
        let fresh_available = options.iter().any(|o| o.2 == Move::Fresh);
        let abandoned_available = options.iter().any(|o| o.2 == Move::Abandoned);
        if fresh_available && abandoned_available {
            trace.choices.push(ChoiceEvent {
                tick: state.tick,
                zone: zone_id,
                fresh_available,
                abandoned_available,
                chose_fresh: mv == Move::Fresh,
            });
        }

        // Runner-up for branching decisions.
        let mut second: Option<(Compass, f64)> = None;
        for (k, o) in options.iter().enumerate() {
            if k == best {
                continue;
            }
            if second.map(|(_, s)| o.3 > s).unwrap_or(true) {
                second = Some((o.0, o.3));
            }
        }

        state.zones[zi].heading = dir;
        state.zones[zi].last_step = None;

        match mv {
            Move::OwnTube(edge) => {
                // Continuation re-traversal: move without extending the
                // graph; count arrivals at the edge's terminal cells. A
                // fresh excursion returning to the network fuses into it.
                let was_terminal = {
                    let poly = &state.graph.edges[edge as usize].polyline;
                    poly.first() == Some(&target) || poly.last() == Some(&target)
                };
                if state.zones[zi].open_edge.is_some() {
                    let e = state.zones[zi].open_edge.unwrap();
                    state.graph.edges[e as usize].polyline.push(target);
                    state.zones[zi].trail.push(target);
                    state.zones[zi].position = target;
                    let node = junction_node(state, edge, target);
                    close_zone_edge(state, zi, node, false);
                } else {
                    state.zones[zi].position = target;
                    state.zones[zi].trail = vec![target];
                }
                if was_terminal {
                    state.graph.edges[edge as usize].visits += 1;
                }
            }
            Move::Fresh | Move::Abandoned | Move::NutrientHandoff => {
                let old_pos = state.zones[zi].position;
                let e = ensure_open_edge(state, zi);
                state.graph.edges[e as usize].polyline.push(target);
                state.zones[zi].trail.push(target);
                state.zones[zi].position = target;

                let entering_nutrient = mv == Move::NutrientHandoff;
                if !entering_nutrient {
                    state.occupancy.set_tag(target, CellTag::Tube { edge: e });
                }

                let colonized = colonize_sources_at(state, target);
                if colonized {
                    consume_local_field(state, fields, target);
                    let food = state.graph.node_at_or_insert(target, NodeKind::Food);
                    close_zone_edge(state, zi, food, false);
                    let owner = state.zones[zi].owner;
                    kill_zone(state, zi, false);
                    if entering_nutrient {
                        seed_front(state, target, owner);
                    }
                    if uncolonized_attractants_remain(state) {
                        spawn_relay_forager(state, scene, fields, food, owner);
                    } else if scene.params.continuation || state.live_zone_count() == 0 {
                        spawn_forager(state, scene, fields, food, target, owner);
                    }
                } else if entering_nutrient {
                    let node = state.graph.node_at_or_insert(target, NodeKind::Branch);
                    close_zone_edge(state, zi, node, false);
                    let owner = state.zones[zi].owner;
                    kill_zone(state, zi, false);
                    seed_front(state, target, owner);
                } else {
                    state.zones[zi].last_step = Some(StepScores {
                        origin: old_pos,
                        best_dir: dir,
                        best_score,
                        second,
                    });
                }
            }
            Move::Mass(owner) => {
                let e = ensure_open_edge(state, zi);
                state.graph.edges[e as usize].polyline.push(target);
                state.zones[zi].trail.push(target);
                state.zones[zi].position = target;

                let colonized = colonize_sources_at(state, target);
                if colonized {
                    consume_local_field(state, fields, target);
                }
                let kind = if colonized { NodeKind::Food } else { NodeKind::Branch };
                let node = state.graph.node_at_or_insert(target, kind);
                close_zone_edge(state, zi, node, false);
                let zowner = state.zones[zi].owner;
                state.union_components(zowner, owner);
                kill_zone(state, zi, false);
                if colonized {
                    if uncolonized_attractants_remain(state) {
                        spawn_relay_forager(state, scene, fields, node, zowner);
                    } else if scene.params.continuation || state.live_zone_count() == 0 {
                        spawn_forager(state, scene, fields, node, target, zowner);
                    }
                }
            }
            Move::ForeignTube(edge) => {
                // Fuse: join the foreign edge at the entered cell, close
                // our edge there, and keep exploring from the junction.
                let e = ensure_open_edge(state, zi);
                state.graph.edges[e as usize].polyline.push(target);
                state.zones[zi].trail.push(target);
                state.zones[zi].position = target;

                let node = junction_node(state, edge, target);
                close_zone_edge(state, zi, node, false);
                let zowner = state.zones[zi].owner;
                let eowner = state.graph.edges[edge as usize].owner;
                state.union_components(zowner, eowner);
                if colonize_sources_at(state, target) {
                    consume_local_field(state, fields, target);
                }
            }
        }

        // The tip feeds on the stimulus it walks over.
        let left = fields.attractant.get(target) * (1.0 - TIP_UPTAKE);
        fields.attractant.set(target, left);
    }
}

/// The zone's open edge, allocated on demand. A zone standing away from
/// any node (a continuation patroller on a tube) first anchors a junction
/// node at its position so the new polyline joins the graph.
fn ensure_open_edge(state: &mut PlasmodiumState, zi: usize) -> EdgeId {
    if let Some(e) = state.zones[zi].open_edge {
        return e;
    }
    let pos = state.zones[zi].position;
    let anchor = if let Some(n) = state.graph.node_at(pos) {
        n
    } else {
        match state.occupancy.tag(pos) {
            CellTag::Tube { edge } | CellTag::AbandonedTube { edge } => {
                junction_node(state, edge, pos)
            }
            _ => state.zones[zi].tail_node,
        }
    };
    state.zones[zi].tail_node = anchor;
    state.zones[zi].trail = vec![pos];
    let e = state.graph.open_edge(anchor, pos, state.zones[zi].owner);
    state.zones[zi].open_edge = Some(e);
    e
}

/// A node on `edge` at `cell`: splits sealed edges at interior cells;
/// open edges (another zone's growing trail) just get a node placed on
/// top rather than being cut mid-growth.
fn junction_node(state: &mut PlasmodiumState, edge: EdgeId, cell: Cell) -> NodeId {
    if state.graph.edges[edge as usize].head.is_some() {
        let (node, new_half) = state.graph.split_edge(edge, cell);
        if let Some(nh) = new_half {
            retag_split(state, edge, nh);
        }
        node
    } else {
        state.graph.node_at_or_insert(cell, NodeKind::Branch)
    }
}

/// After splitting `edge`, cells now on the second half must reference it.
fn retag_split(state: &mut PlasmodiumState, edge: EdgeId, new_half: EdgeId) {
    let cells: Vec<Cell> = state.graph.edges[new_half as usize].polyline.clone();
    for c in cells {
        match state.occupancy.tag(c) {
            CellTag::Tube { edge: e } if e == edge => {
                state.occupancy.set_tag(c, CellTag::Tube { edge: new_half });
            }
            CellTag::AbandonedTube { edge: e } if e == edge => {
                state
                    .occupancy
                    .set_tag(c, CellTag::AbandonedTube { edge: new_half });
            }
            _ => {}
        }
    }
}

/// Claims `cell` for the wavefront regime (used when a zone steps onto
/// nutrient-rich substrate).
fn seed_front(state: &mut PlasmodiumState, cell: Cell, owner: u32) {
    let i = state.cell_index(cell);
    state.occupancy.set_tag(cell, CellTag::Front { owner });
    state.src_point[i] = Some((cell.x as f64, cell.y as f64));
    state.front.push(cell);
}

/// Binary branching: a zone that just stepped and whose runner-up score
/// reaches `branch_ratio` of the best (with >= 90 degrees between the two
/// directions) closes its edge at the divergence point and spawns a child
/// (activity = parent / 2) aimed along the runner-up direction.
pub fn branch_zones(state: &mut PlasmodiumState, scene: &Scene, _fields: &Fields) {
    let count = state.zones.len();
    for zi in 0..count {
        if !state.zones[zi].alive {
            continue;
        }
        if state.live_zone_count() >= scene.params.max_zones as usize {
            break;
        }
        let scores = match state.zones[zi].last_step.clone() {
            Some(s) => s,
            None => continue,
        };
        let (sdir, sscore) = match scores.second {
            Some(s) => s,
            None => continue,
        };
        if sscore < scene.params.branch_ratio * scores.best_score {
            continue;
        }
        if scores.best_dir.separation(sdir) < 2 {
            continue;
        }
        let child_activity = state.zones[zi].activity * 0.5;
        if child_activity < scene.params.activity_floor {
            continue;
        }
        state.zones[zi].last_step = None;

        // Close the parent's edge at the divergence point (its position
        // before the step) and restart it from there.
        let origin = scores.origin;
        let parent_edge = state.zones[zi].open_edge.expect("stepped zone has an open edge");
        let node = {
            // Trim the last cell (the parent's new position) off the edge,
            // seal it at the origin, then reopen for the parent.
            let e = &mut state.graph.edges[parent_edge as usize];
            let last = e.polyline.pop().expect("polyline has the step cell");
            debug_assert_eq!(Some(&origin), e.polyline.last());
            let node = state.graph.node_at_or_insert(origin, NodeKind::Branch);
            state.graph.close_edge(parent_edge, node, false);
            let owner = state.zones[zi].owner;
            let ne = state.graph.open_edge(node, origin, owner);
            state.graph.edges[ne as usize].polyline.push(last);
            if state.occupancy.tag(last) == (CellTag::Tube { edge: parent_edge }) {
                state.occupancy.set_tag(last, CellTag::Tube { edge: ne });
            }
            state.zones[zi].open_edge = Some(ne);
            state.zones[zi].trail = vec![origin, last];
            state.zones[zi].tail_node = node;
            node
        };

        let id = state.zones.len() as u32;
        let owner = state.zones[zi].owner;
        state.zones.push(ActiveZone {
            id,
            position: origin,
            heading: sdir,
            activity: child_activity,
            tail_node: node,
            alive: true,
            owner,
            trail: vec![origin],
            open_edge: None,
            last_step: None,
        });
    }
}

/// Activity update and dominance suppression:
/// `activity += local stimulus - gain * max(other activities)`, clamped at
/// zero. Zones falling below the activity floor die (edges close abandoned
/// at a Tip node); the zone with the highest updated activity is immune.
/// With a zero suppression gain the mechanism is disabled entirely.
///
/// Only growth tips (zones on non-nutrient cells) compete. A zone resting
/// on the nutrient mass keeps its activity frozen and never dies, but it
/// still counts as a suppressor — the resting mass is the largest
/// oscillator in the colony.
pub fn update_dominance(state: &mut PlasmodiumState, scene: &Scene, fields: &Fields) {
    let live: Vec<usize> = (0..state.zones.len())
        .filter(|&i| state.zones[i].alive)
        .collect();
    let tips: Vec<usize> = live
        .iter()
        .copied()
        .filter(|&i| !nutrient_rich(scene, state.zones[i].position))
        .collect();
    if tips.is_empty() {
        return;
    }
    let all_acts: Vec<(usize, f64)> =
        live.iter().map(|&i| (i, state.zones[i].activity)).collect();
    let mut updated: Vec<f64> = Vec::with_capacity(tips.len());
    for &i in &tips {
        let stim = stimulus_at(
            &fields.attractant,
            &fields.repellent,
            StimulusWeights::default(),
            state.zones[i].position,
        )
        .expect("zone inside grid");
        let max_other = all_acts
            .iter()
            .filter(|(j, _)| *j != i)
            .map(|(_, a)| *a)
            .fold(0.0f64, f64::max);
        let act = state.zones[i].activity;
        updated.push((act + stim - scene.params.suppression_gain * max_other).max(0.0));
    }
    for (k, &i) in tips.iter().enumerate() {
        state.zones[i].activity = updated[k];
    }
    if scene.params.suppression_gain == 0.0 {
        return;
    }
    // The argmax tip survives this tick no matter what.
    let mut argmax = 0usize;
    for k in 1..tips.len() {
        if updated[k] > updated[argmax] {
            argmax = k;
        }
    }
    for (k, &i) in tips.iter().enumerate() {
        if k != argmax && state.zones[i].activity < scene.params.activity_floor {
            kill_zone(state, i, true);
        }
    }
}

/// When a colonized consumable source runs dry, its region is exhausted:
/// all sealed edges incident to its Food node collapse (become abandoned)
/// and a fresh zone (activity 1) spawns at the node to re-forage.
pub fn abandon_and_relocate(state: &mut PlasmodiumState, scene: &Scene, fields: &Fields) {
    for si in 0..state.sources.len() {
        let s = &state.sources[si];
        if !(s.colonized && s.consumable && s.remaining_mass <= 0.0) || state.relocated[si] {
            continue;
        }
        state.relocated[si] = true;
        let pos = state.sources[si].position;
        let node = match state.graph.node_at(pos) {
            Some(n) => n,
            None => continue,
        };
        let incident: Vec<EdgeId> = (0..state.graph.edges.len() as EdgeId)
            .filter(|&e| {
                let be = &state.graph.edges[e as usize];
                !be.dead
                    && be.head.is_some()
                    && (be.tail == node || be.head == Some(node))
            })
            .collect();
        for e in incident {
            abandon_edge(state, e);
        }
        let owner = state
            .graph
            .edges
            .iter()
            .find(|e| e.head == Some(node) || e.tail == node)
            .map(|e| e.owner)
            .unwrap_or(0);
        spawn_forager(state, scene, fields, node, pos, owner);
    }
}

/// Arms tube-following once the spanning task is complete: own live tubes
/// switch from off-limits to bonused, so surviving zones re-traverse the
/// built network instead of extending it.
pub fn continuation_step(state: &mut PlasmodiumState, scene: &Scene) {
    state.continuation_active = scene.params.continuation && state.spanning_complete;
}

/// Pre-inoculation equilibration: sources deposit and fields diffuse for
/// `ticks` rounds without any growth and without advancing the simulation
/// clock. Models stimuli that sat on the substrate before the plasmodium
/// was placed.
pub fn warm_fields(
    state: &mut PlasmodiumState,
    fields: &mut Fields,
    scene: &Scene,
    ticks: u64,
) {
    for _ in 0..ticks {
        deposit_sources(&mut fields.attractant, &mut state.sources, DEFAULT_FEED_FACTOR);
        deposit_sources(&mut fields.repellent, &mut state.sources, DEFAULT_FEED_FACTOR);
        fields.attractant = diffuse_step(
            &fields.attractant,
            &scene.substrate,
            scene.diffusion.attractant.d,
            scene.diffusion.attractant.lambda,
        )
        .expect("fields match the scene grid");
        fields.repellent = diffuse_step(
            &fields.repellent,
            &scene.substrate,
            scene.diffusion.repellent.d,
            scene.diffusion.repellent.lambda,
        )
        .expect("fields match the scene grid");
    }
}

/// Outcome of [`run_until`].
#[derive(Debug)]
pub struct RunResult {
    pub trace: RunTrace,
    /// True when the stop condition was met within the tick budget.
    pub completed: bool,
}

/// Advances the simulation tick by tick in the fixed phase order:
/// deposit -> diffuse (per species) -> wavefront -> zones -> branching ->
/// dominance -> abandonment -> continuation. Returns the trace and whether
/// the stop condition was met within its tick budget.
pub fn run_until(
    state: &mut PlasmodiumState,
    fields: &mut Fields,
    scene: &Scene,
    stop: StopCondition,
) -> RunResult {
    assert!(stop.max_ticks() >= 1, "max_ticks must be at least 1");
    let mut trace = RunTrace::default();
    let mut completed = matches!(stop, StopCondition::MaxTicks(_));

    for _ in 0..stop.max_ticks() {
        state.tick += 1;

        deposit_sources(&mut fields.attractant, &mut state.sources, DEFAULT_FEED_FACTOR);
        deposit_sources(&mut fields.repellent, &mut state.sources, DEFAULT_FEED_FACTOR);
        fields.attractant = diffuse_step(
            &fields.attractant,
            &scene.substrate,
            scene.diffusion.attractant.d,
            scene.diffusion.attractant.lambda,
        )
        .expect("fields match the scene grid");
        fields.repellent = diffuse_step(
            &fields.repellent,
            &scene.substrate,
            scene.diffusion.repellent.d,
            scene.diffusion.repellent.lambda,
        )
        .expect("fields match the scene grid");

        step_wavefront(state, scene, fields);
        step_zones(state, scene, fields, &mut trace);
        branch_zones(state, scene, fields);
        update_dominance(state, scene, fields);
        abandon_and_relocate(state, scene, fields);
        continuation_step(state, scene);

        trace.ticks.push(TickSummary {
            tick: state.tick,
            zones: state.live_zone_count(),
            occupied: state.occupancy.occupied_count(),
            colonized: state.colonized_count(),
        });

        match stop {
            StopCondition::MaxTicks(_) => {}
            StopCondition::AllSourcesColonized { .. } => {
                if state.spanning_complete {
                    completed = true;
                    break;
                }
            }
            StopCondition::SingleZoneRemaining { .. } => {
                if state.live_zone_count() <= 1 {
                    completed = state.live_zone_count() == 1;
                    break;
                }
            }
        }
    }
    RunResult { trace, completed }
}

/// Exports a consistency-checked copy of the tube graph.
///
/// Open trails are sealed with Tip nodes in the copy only. Degree-2 Branch
/// nodes whose incident polylines pass straight through are fused into
/// single edges, which makes the output canonical and idempotent.
pub fn extract_graph(state: &PlasmodiumState, cell_size_mm: f64) -> Result<TubeGraph, EngineError> {
    let mut nodes: Vec<TubeNode> = state
        .graph
        .nodes
        .iter()
        .map(|n| TubeNode { position: n.position, kind: n.kind })
        .collect();
    let mut edges: Vec<TubeEdge> = Vec::new();

    for e in &state.graph.edges {
        if e.dead {
            continue;
        }
        if let Some(head) = e.head {
            edges.push(TubeEdge {
                endpoints: (e.tail as usize, head as usize),
                polyline: e.polyline.clone(),
                length_mm: polyline_length_mm(&e.polyline, cell_size_mm),
                abandoned: e.abandoned,
                visits: e.visits,
            });
        }
    }
    // Materialise live zones' open trails with Tip endpoints.
    for z in &state.zones {
        if !z.alive || z.open_edge.is_none() || z.trail.len() < 2 {
            continue;
        }
        let e = z.open_edge.unwrap();
        let be = &state.graph.edges[e as usize];
        let head = match nodes.iter().position(|n| n.position == z.position) {
            Some(i) => i,
            None => {
                nodes.push(TubeNode { position: z.position, kind: NodeKind::Tip });
                nodes.len() - 1
            }
        };
        if head == be.tail as usize {
            continue;
        }
        edges.push(TubeEdge {
            endpoints: (be.tail as usize, head),
            polyline: be.polyline.clone(),
            length_mm: polyline_length_mm(&be.polyline, cell_size_mm),
            abandoned: false,
            visits: be.visits,
        });
    }

    // Canonical fusion: a Branch node that joins exactly two live edges is
    // a mere waypoint in one continuous tube, so the pair collapses into
    // one edge (abandoned stubs may stay attached to the node). Branch
    // nodes left with exactly two abandoned edges and no live ones fuse
    // the same way.
    loop {
        let mut live_deg = vec![0usize; nodes.len()];
        let mut dead_deg = vec![0usize; nodes.len()];
        for e in &edges {
            let d = if e.abandoned { &mut dead_deg } else { &mut live_deg };
            d[e.endpoints.0] += 1;
            d[e.endpoints.1] += 1;
        }
        let mut fused = false;
        'scan: for v in 0..nodes.len() {
            if nodes[v].kind != NodeKind::Branch {
                continue;
            }
            let fuse_abandoned = if live_deg[v] == 2 {
                false
            } else if live_deg[v] == 0 && dead_deg[v] == 2 {
                true
            } else {
                continue;
            };
            let incident: Vec<usize> = edges
                .iter()
                .enumerate()
                .filter(|(_, e)| {
                    e.abandoned == fuse_abandoned
                        && (e.endpoints.0 == v || e.endpoints.1 == v)
                })
                .map(|(i, _)| i)
                .collect();
            if incident.len() != 2 || incident[0] == incident[1] {
                continue;
            }
            let (i1, i2) = (incident[0], incident[1]);
            // Orient e1 to end at v and e2 to start at v.
            let mut p1 = edges[i1].polyline.clone();
            if edges[i1].endpoints.0 == v {
                p1.reverse();
            }
            let mut p2 = edges[i2].polyline.clone();
            if edges[i2].endpoints.1 == v {
                p2.reverse();
            }
            let a = if edges[i1].endpoints.0 == v {
                edges[i1].endpoints.1
            } else {
                edges[i1].endpoints.0
            };
            let b = if edges[i2].endpoints.1 == v {
                edges[i2].endpoints.0
            } else {
                edges[i2].endpoints.1
            };
            if a == b {
                continue; // fusing would create a self-loop
            }
            let mut polyline = p1;
            polyline.extend_from_slice(&p2[1..]);
            let fused_edge = TubeEdge {
                endpoints: (a, b),
                length_mm: polyline_length_mm(&polyline, cell_size_mm),
                polyline,
                abandoned: fuse_abandoned,
                visits: edges[i1].visits.max(edges[i2].visits),
            };
            let (hi, lo) = (i1.max(i2), i1.min(i2));
            edges.remove(hi);
            edges.remove(lo);
            edges.push(fused_edge);
            fused = true;
            break 'scan;
        }
        if !fused {
            break;
        }
    }

    // Drop nodes that no longer appear and reindex.
    let mut used = vec![false; nodes.len()];
    for e in &edges {
        used[e.endpoints.0] = true;
        used[e.endpoints.1] = true;
    }
    // Isolated inoculation nodes are part of the morphology; keep them.
    for (i, n) in nodes.iter().enumerate() {
        if n.kind == NodeKind::Inoculation {
            used[i] = true;
        }
    }
    let mut remap = vec![usize::MAX; nodes.len()];
    let mut out_nodes = Vec::new();
    for (i, n) in nodes.iter().enumerate() {
        if used[i] {
            remap[i] = out_nodes.len();
            out_nodes.push(n.clone());
        }
    }
    for e in &mut edges {
        e.endpoints = (remap[e.endpoints.0], remap[e.endpoints.1]);
    }

    let graph = TubeGraph { nodes: out_nodes, edges };
    check_graph(&graph)?;
    Ok(graph)
}

fn check_graph(g: &TubeGraph) -> Result<(), EngineError> {
    for (i, e) in g.edges.iter().enumerate() {
        let (a, b) = e.endpoints;
        if a >= g.nodes.len() || b >= g.nodes.len() {
            return Err(EngineError::Inconsistent(format!("edge {i} references missing node")));
        }
        if a == b {
            return Err(EngineError::Inconsistent(format!("edge {i} is a self-loop")));
        }
        if e.polyline.len() < 2 {
            return Err(EngineError::Inconsistent(format!("edge {i} has a degenerate polyline")));
        }
        if e.polyline.first() != Some(&g.nodes[a].position)
            || e.polyline.last() != Some(&g.nodes[b].position)
        {
            return Err(EngineError::Inconsistent(format!(
                "edge {i} polyline does not join its endpoint nodes"
            )));
        }
        for w in e.polyline.windows(2) {
            if w[0].chebyshev(&w[1]) != 1 {
                return Err(EngineError::Inconsistent(format!(
                    "edge {i} polyline has a non-adjacent step"
                )));
            }
        }
    }
    Ok(())
}
