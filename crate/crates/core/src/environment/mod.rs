//! Scenes and chemical fields.
//!
//! A [`Scene`] couples a discretised substrate (nutrient values and walls)
//! with stimulus sources, inoculation sites, per-species diffusion
//! parameters and the engine knobs. Scenes are parsed from a JSON document
//! (see [`parse_scene`]) and validated eagerly so the engine can assume
//! every invariant holds.
//!
//! Chemical fields evolve by explicit 5-point-stencil diffusion with
//! no-flux boundaries at walls and grid edges, followed by multiplicative
//! decay. All field updates are pure functions of the previous grid, so
//! results are bit-identical regardless of evaluation order.

mod scene_doc;

pub use scene_doc::{
    parse_scene, parse_scene_with_base, read_pgm, GridDoc, PointDoc, RectDoc, SceneDocument,
    SourceDoc, SubstrateDoc,
};

use crate::engine::EngineParams;
use serde::{Deserialize, Serialize};

/// Default factor by which a colonized consumable source depletes faster
/// than its emission rate (the plasmodium feeding on it).
pub const DEFAULT_FEED_FACTOR: f64 = 10.0;

/// Chebyshev radius of the patch a feeding body absorbs around a
/// colonized source each tick (the mass covers the whole pill, not a
/// single point).
pub const FEED_RADIUS: u32 = 2;

/// Default grid-size cap (cells); overridable via [`SceneLimits`].
pub const DEFAULT_MAX_CELLS: u64 = 4096 * 4096;

/// Errors produced while building or operating on scenes and fields.
#[derive(Debug, thiserror::Error)]
pub enum EnvironmentError {
    /// The document text is not valid JSON or violates the schema.
    #[error("schema violation: {0}")]
    Schema(String),
    /// The document parsed but a value breaks a scene invariant.
    /// The first field names the path of the offending field.
    #[error("semantic violation at {path}: {message}")]
    Semantic { path: String, message: String },
    /// Field/substrate dimensions disagree.
    #[error("dimension mismatch: field is {field_w}x{field_h}, substrate is {sub_w}x{sub_h}")]
    DimensionMismatch {
        field_w: u32,
        field_h: u32,
        sub_w: u32,
        sub_h: u32,
    },
    /// A cell coordinate outside the grid was used.
    #[error("cell ({x}, {y}) is outside the {w}x{h} grid")]
    OutOfBounds { x: i64, y: i64, w: u32, h: u32 },
}

/// A cell coordinate. `x` grows eastward, `y` grows southward, matching
/// raster row order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: u32,
    pub y: u32,
}

impl Cell {
    pub fn new(x: u32, y: u32) -> Self {
        Cell { x, y }
    }

    /// Chebyshev distance to another cell.
    pub fn chebyshev(&self, other: &Cell) -> u32 {
        let dx = (self.x as i64 - other.x as i64).unsigned_abs();
        let dy = (self.y as i64 - other.y as i64).unsigned_abs();
        dx.max(dy) as u32
    }
}

/// The eight compass directions in tie-break order.
///
/// Every direction-dependent choice in the engine resolves ties by this
/// order, which makes all runs deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Compass {
    N = 0,
    NE = 1,
    E = 2,
    SE = 3,
    S = 4,
    SW = 5,
    W = 6,
    NW = 7,
}

pub const COMPASS_ALL: [Compass; 8] = [
    Compass::N,
    Compass::NE,
    Compass::E,
    Compass::SE,
    Compass::S,
    Compass::SW,
    Compass::W,
    Compass::NW,
];

impl Compass {
    /// Grid offset of one step in this direction (y grows southward).
    pub fn delta(self) -> (i32, i32) {
        match self {
            Compass::N => (0, -1),
            Compass::NE => (1, -1),
            Compass::E => (1, 0),
            Compass::SE => (1, 1),
            Compass::S => (0, 1),
            Compass::SW => (-1, 1),
            Compass::W => (-1, 0),
            Compass::NW => (-1, -1),
        }
    }

    /// Step length in cell units: 1 for orthogonal moves, √2 for diagonal.
    pub fn step_len(self) -> f64 {
        if self.is_diagonal() {
            std::f64::consts::SQRT_2
        } else {
            1.0
        }
    }

    pub fn is_diagonal(self) -> bool {
        matches!(
            self,
            Compass::NE | Compass::SE | Compass::SW | Compass::NW
        )
    }

    /// Cosine of the angle between two compass directions.
    pub fn alignment(self, other: Compass) -> f64 {
        let diff = ((self as i32 - other as i32).rem_euclid(8)) as usize;
        // 45-degree increments: cos(k * 45°)
        const COS: [f64; 8] = [
            1.0,
            std::f64::consts::FRAC_1_SQRT_2,
            0.0,
            -std::f64::consts::FRAC_1_SQRT_2,
            -1.0,
            -std::f64::consts::FRAC_1_SQRT_2,
            0.0,
            std::f64::consts::FRAC_1_SQRT_2,
        ];
        COS[diff]
    }

    /// Smallest angular separation to another direction, in 45° units (0..=4).
    pub fn separation(self, other: Compass) -> u32 {
        let diff = ((self as i32 - other as i32).rem_euclid(8)) as u32;
        diff.min(8 - diff)
    }

    /// The compass direction whose unit vector is closest to `(dx, dy)`;
    /// ties resolve to the lowest compass index. Returns `N` for (0, 0).
    pub fn from_vector(dx: f64, dy: f64) -> Compass {
        let norm = (dx * dx + dy * dy).sqrt();
        if norm == 0.0 {
            return Compass::N;
        }
        let mut best = Compass::N;
        let mut best_dot = f64::NEG_INFINITY;
        for dir in COMPASS_ALL {
            let (ux, uy) = dir.delta();
            let len = dir.step_len();
            let dot = (dx * ux as f64 + dy * uy as f64) / (norm * len);
            if dot > best_dot {
                best_dot = dot;
                best = dir;
            }
        }
        best
    }
}

/// Grid discretisation of the dish plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub width: u32,
    pub height: u32,
    pub cell_size_mm: f64,
}

impl GridSpec {
    pub fn cell_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as u64) < self.width as u64 && (y as u64) < self.height as u64
    }

    pub fn contains_cell(&self, cell: Cell) -> bool {
        cell.x < self.width && cell.y < self.height
    }

    pub fn index(&self, cell: Cell) -> usize {
        cell.y as usize * self.width as usize + cell.x as usize
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell {
            x: (index % self.width as usize) as u32,
            y: (index / self.width as usize) as u32,
        }
    }

    /// Centre of a cell in millimetres.
    pub fn cell_center_mm(&self, cell: Cell) -> (f64, f64) {
        (
            (cell.x as f64 + 0.5) * self.cell_size_mm,
            (cell.y as f64 + 0.5) * self.cell_size_mm,
        )
    }

    /// Neighbour of `cell` in direction `dir`, if inside the grid.
    pub fn neighbor(&self, cell: Cell, dir: Compass) -> Option<Cell> {
        let (dx, dy) = dir.delta();
        let nx = cell.x as i64 + dx as i64;
        let ny = cell.y as i64 + dy as i64;
        if self.contains(nx, ny) {
            Some(Cell::new(nx as u32, ny as u32))
        } else {
            None
        }
    }
}

/// Per-cell nutrient level and wall mask.
///
/// Wall cells are impassable and always carry nutrient 0.
#[derive(Debug, Clone)]
pub struct SubstrateMap {
    width: u32,
    height: u32,
    nutrient: Vec<f64>,
    wall: Vec<bool>,
}

impl SubstrateMap {
    /// Uniform substrate with no walls.
    pub fn uniform(width: u32, height: u32, nutrient: f64) -> Self {
        let n = width as usize * height as usize;
        SubstrateMap {
            width,
            height,
            nutrient: vec![nutrient; n],
            wall: vec![false; n],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    fn idx(&self, cell: Cell) -> usize {
        cell.y as usize * self.width as usize + cell.x as usize
    }

    pub fn nutrient(&self, cell: Cell) -> f64 {
        self.nutrient[self.idx(cell)]
    }

    pub fn is_wall(&self, cell: Cell) -> bool {
        self.wall[self.idx(cell)]
    }

    /// Passable means inside the substrate and not a wall.
    pub fn passable(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as u64) < self.width as u64
            && (y as u64) < self.height as u64
            && !self.wall[y as usize * self.width as usize + x as usize]
    }

    pub fn set_nutrient(&mut self, cell: Cell, value: f64) {
        let i = self.idx(cell);
        self.nutrient[i] = if self.wall[i] { 0.0 } else { value };
    }

    /// Marks a cell as wall; wall cells carry no nutrient.
    pub fn set_wall(&mut self, cell: Cell, wall: bool) {
        let i = self.idx(cell);
        self.wall[i] = wall;
        if wall {
            self.nutrient[i] = 0.0;
        }
    }
}

/// Stimulus species.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpeciesKind {
    Attractant,
    Repellent,
}

/// A point emitter of one stimulus species.
#[derive(Debug, Clone)]
pub struct StimulusSource {
    pub position: Cell,
    pub kind: SpeciesKind,
    /// Emission per tick, concentration units.
    pub strength: f64,
    pub consumable: bool,
    /// Remaining mass; meaningful only when `consumable`.
    pub remaining_mass: f64,
    /// Set once the plasmodium reaches the source cell.
    pub colonized: bool,
}

impl StimulusSource {
    /// A consumable source with no mass left emits nothing.
    pub fn depleted(&self) -> bool {
        self.consumable && self.remaining_mass <= 0.0
    }
}

/// Per-cell nonnegative concentration of one species.
#[derive(Debug, Clone, PartialEq)]
pub struct ChemicalField {
    species: SpeciesKind,
    width: u32,
    height: u32,
    concentration: Vec<f64>,
}

impl ChemicalField {
    pub fn zeroed(species: SpeciesKind, width: u32, height: u32) -> Self {
        ChemicalField {
            species,
            width,
            height,
            concentration: vec![0.0; width as usize * height as usize],
        }
    }

    pub fn species(&self) -> SpeciesKind {
        self.species
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    fn idx(&self, cell: Cell) -> usize {
        cell.y as usize * self.width as usize + cell.x as usize
    }

    pub fn get(&self, cell: Cell) -> f64 {
        self.concentration[self.idx(cell)]
    }

    pub fn set(&mut self, cell: Cell, value: f64) {
        let i = self.idx(cell);
        self.concentration[i] = value;
    }

    pub fn add(&mut self, cell: Cell, value: f64) {
        let i = self.idx(cell);
        self.concentration[i] += value;
    }

    pub fn values(&self) -> &[f64] {
        &self.concentration
    }

    /// Sum of all concentrations.
    pub fn total(&self) -> f64 {
        self.concentration.iter().sum()
    }
}

/// Diffusion constant and decay fraction for one species, per tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionParams {
    #[serde(rename = "D")]
    pub d: f64,
    pub lambda: f64,
}

impl Default for DiffusionParams {
    fn default() -> Self {
        DiffusionParams { d: 0.2, lambda: 0.01 }
    }
}

/// Diffusion settings for both species.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionSettings {
    #[serde(default)]
    pub attractant: DiffusionParams,
    #[serde(default)]
    pub repellent: DiffusionParams,
}

/// Linear weights for combining attractant and repellent concentrations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StimulusWeights {
    pub attract: f64,
    pub repel: f64,
}

impl Default for StimulusWeights {
    fn default() -> Self {
        StimulusWeights { attract: 1.0, repel: 1.0 }
    }
}

/// Caps applied during scene validation.
#[derive(Debug, Clone, Copy)]
pub struct SceneLimits {
    pub max_cells: u64,
}

impl Default for SceneLimits {
    fn default() -> Self {
        SceneLimits { max_cells: DEFAULT_MAX_CELLS }
    }
}

/// A fully validated scene: the conceptual space the plasmodium explores.
#[derive(Debug, Clone)]
pub struct Scene {
    pub grid: GridSpec,
    pub substrate: SubstrateMap,
    pub sources: Vec<StimulusSource>,
    pub inoculation_sites: Vec<Cell>,
    pub params: EngineParams,
    pub diffusion: DiffusionSettings,
}

impl Scene {
    /// Checks every scene invariant, reporting the first violation with a
    /// path into the scene document.
    pub fn validate(&self, limits: &SceneLimits) -> Result<(), EnvironmentError> {
        let semantic = |path: &str, message: String| EnvironmentError::Semantic {
            path: path.to_string(),
            message,
        };
        if self.grid.width < 8 || self.grid.height < 8 {
            return Err(semantic(
                "grid",
                format!(
                    "grid must be at least 8x8, got {}x{}",
                    self.grid.width, self.grid.height
                ),
            ));
        }
        let cells = self.grid.width as u64 * self.grid.height as u64;
        if cells > limits.max_cells {
            return Err(semantic(
                "grid",
                format!("{} cells exceed the cap of {}", cells, limits.max_cells),
            ));
        }
        if !(self.grid.cell_size_mm > 0.0) {
            return Err(semantic(
                "grid.cell_size_mm",
                format!("cell size must be positive, got {}", self.grid.cell_size_mm),
            ));
        }
        if self.substrate.width() != self.grid.width || self.substrate.height() != self.grid.height
        {
            return Err(semantic(
                "substrate",
                "substrate dimensions do not match the grid".to_string(),
            ));
        }
        for (i, src) in self.sources.iter().enumerate() {
            let path = format!("sources[{i}]");
            if !self.grid.contains_cell(src.position) {
                return Err(semantic(
                    &path,
                    format!(
                        "source at ({}, {}) is outside the grid",
                        src.position.x, src.position.y
                    ),
                ));
            }
            if self.substrate.is_wall(src.position) {
                return Err(semantic(&path, "source placed on a wall cell".to_string()));
            }
            if !(src.strength >= 0.0) {
                return Err(semantic(
                    &format!("{path}.strength"),
                    format!("strength must be >= 0, got {}", src.strength),
                ));
            }
            if !(src.remaining_mass >= 0.0) {
                return Err(semantic(
                    &format!("{path}.mass"),
                    format!("mass must be >= 0, got {}", src.remaining_mass),
                ));
            }
        }
        if self.inoculation_sites.is_empty() {
            return Err(semantic(
                "inoculation",
                "at least one inoculation site is required".to_string(),
            ));
        }
        for (i, cell) in self.inoculation_sites.iter().enumerate() {
            let path = format!("inoculation[{i}]");
            if !self.grid.contains_cell(*cell) {
                return Err(semantic(
                    &path,
                    format!("inoculation site ({}, {}) is outside the grid", cell.x, cell.y),
                ));
            }
            if self.substrate.is_wall(*cell) {
                return Err(semantic(&path, "inoculation site on a wall cell".to_string()));
            }
        }
        for (name, p) in [
            ("diffusion.attractant", self.diffusion.attractant),
            ("diffusion.repellent", self.diffusion.repellent),
        ] {
            if !(p.d >= 0.0) {
                return Err(semantic(&format!("{name}.D"), format!("D must be >= 0, got {}", p.d)));
            }
            if p.d > 0.25 {
                return Err(semantic(
                    &format!("{name}.D"),
                    format!("explicit scheme unstable: D*dt = {} > 0.25", p.d),
                ));
            }
            if !(0.0..=1.0).contains(&p.lambda) {
                return Err(semantic(
                    &format!("{name}.lambda"),
                    format!("lambda must be in [0, 1], got {}", p.lambda),
                ));
            }
        }
        self.params
            .validate()
            .map_err(|(field, message)| semantic(&format!("engine.{field}"), message))?;
        Ok(())
    }

    /// Attractant and repellent sources, respectively.
    pub fn attractant_sources(&self) -> impl Iterator<Item = &StimulusSource> {
        self.sources.iter().filter(|s| s.kind == SpeciesKind::Attractant)
    }
}

/// One explicit diffusion-plus-decay step.
///
/// Uses the 5-point stencil with no-flux boundaries at walls and grid
/// edges, then multiplies by `1 - lambda`. Wall cells stay at zero. Every
/// output cell is a function of the read-only input grid only.
pub fn diffuse_step(
    field: &ChemicalField,
    substrate: &SubstrateMap,
    d: f64,
    lambda: f64,
) -> Result<ChemicalField, EnvironmentError> {
    if field.width != substrate.width() || field.height != substrate.height() {
        return Err(EnvironmentError::DimensionMismatch {
            field_w: field.width,
            field_h: field.height,
            sub_w: substrate.width(),
            sub_h: substrate.height(),
        });
    }
    debug_assert!((0.0..=1.0).contains(&lambda));
    debug_assert!(d <= 0.25 && d >= 0.0);

    let w = field.width as usize;
    let h = field.height as usize;
    let keep = 1.0 - lambda;
    let mut out = ChemicalField::zeroed(field.species, field.width, field.height);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if substrate.wall[i] {
                continue;
            }
            let u = field.concentration[i];
            let mut lap = 0.0;
            // 4-neighbour fluxes; a blocked face contributes nothing.
            if x > 0 && !substrate.wall[i - 1] {
                lap += field.concentration[i - 1] - u;
            }
            if x + 1 < w && !substrate.wall[i + 1] {
                lap += field.concentration[i + 1] - u;
            }
            if y > 0 && !substrate.wall[i - w] {
                lap += field.concentration[i - w] - u;
            }
            if y + 1 < h && !substrate.wall[i + w] {
                lap += field.concentration[i + w] - u;
            }
            out.concentration[i] = (u + d * lap) * keep;
        }
    }
    Ok(out)
}

/// Applies every source of the field's species for one tick.
///
/// Non-colonized sources deposit `min(strength, remaining_mass)` (plain
/// `strength` when not consumable) at their cell. A colonized source is
/// being fed upon: it deposits nothing, the feeding body absorbs the
/// concentration in a [`FEED_RADIUS`] patch around it, and — when
/// consumable — its mass drains at `feed_factor * strength` per tick.
/// Depleted sources emit nothing.
pub fn deposit_sources(
    field: &mut ChemicalField,
    sources: &mut [StimulusSource],
    feed_factor: f64,
) {
    for src in sources.iter_mut() {
        if src.kind != field.species {
            continue;
        }
        if src.colonized {
            let r = FEED_RADIUS;
            let x0 = src.position.x.saturating_sub(r);
            let y0 = src.position.y.saturating_sub(r);
            let x1 = (src.position.x + r).min(field.width - 1);
            let y1 = (src.position.y + r).min(field.height - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let i = field.idx(Cell::new(x, y));
                    field.concentration[i] = 0.0;
                }
            }
            if src.consumable && src.remaining_mass > 0.0 {
                src.remaining_mass = (src.remaining_mass - feed_factor * src.strength).max(0.0);
            }
            continue;
        }
        let emit = if src.consumable {
            src.strength.min(src.remaining_mass)
        } else {
            src.strength
        };
        if emit > 0.0 {
            let i = field.idx(src.position);
            field.concentration[i] += emit;
            if src.consumable {
                src.remaining_mass -= emit;
            }
        }
    }
}

/// Combined stimulus `w_a * A(cell) - w_r * R(cell)`; may be negative.
pub fn stimulus_at(
    attractant: &ChemicalField,
    repellent: &ChemicalField,
    weights: StimulusWeights,
    cell: Cell,
) -> Result<f64, EnvironmentError> {
    if cell.x >= attractant.width || cell.y >= attractant.height {
        return Err(EnvironmentError::OutOfBounds {
            x: cell.x as i64,
            y: cell.y as i64,
            w: attractant.width,
            h: attractant.height,
        });
    }
    debug_assert_eq!(attractant.species, SpeciesKind::Attractant);
    debug_assert_eq!(repellent.species, SpeciesKind::Repellent);
    Ok(weights.attract * attractant.get(cell) - weights.repel * repellent.get(cell))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::EngineParams;

    fn field_with(width: u32, height: u32, cells: &[(u32, u32, f64)]) -> ChemicalField {
        let mut f = ChemicalField::zeroed(SpeciesKind::Attractant, width, height);
        for &(x, y, v) in cells {
            f.set(Cell::new(x, y), v);
        }
        f
    }

    #[test]
    fn zero_field_stays_zero() {
        let sub = SubstrateMap::uniform(16, 16, 0.0);
        let f = ChemicalField::zeroed(SpeciesKind::Attractant, 16, 16);
        let out = diffuse_step(&f, &sub, 0.2, 0.01).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mass_conserved_without_decay() {
        let sub = SubstrateMap::uniform(32, 32, 0.0);
        let mut f = field_with(32, 32, &[(16, 16, 5.0), (3, 7, 2.5)]);
        let before = f.total();
        for _ in 0..50 {
            f = diffuse_step(&f, &sub, 0.25, 0.0).unwrap();
        }
        let after = f.total();
        assert!(
            ((before - after) / before).abs() < 1e-9,
            "mass drifted: {before} -> {after}"
        );
    }

    #[test]
    fn impulse_spreads_with_dihedral_symmetry() {
        let sub = SubstrateMap::uniform(33, 33, 0.0);
        let mut f = field_with(33, 33, &[(16, 16, 1.0)]);
        for _ in 0..10 {
            f = diffuse_step(&f, &sub, 0.2, 0.0).unwrap();
        }
        for y in 0..33u32 {
            for x in 0..33u32 {
                let v = f.get(Cell::new(x, y));
                for (mx, my) in [
                    (32 - x, y),
                    (x, 32 - y),
                    (32 - x, 32 - y),
                    (y, x),
                    (32 - y, x),
                    (y, 32 - x),
                    (32 - y, 32 - x),
                ] {
                    let m = f.get(Cell::new(mx, my));
                    assert!(
                        (v - m).abs() <= 1e-9 * v.abs().max(1e-300),
                        "asymmetry at ({x},{y}): {v} vs {m}"
                    );
                }
            }
        }
    }

    #[test]
    fn decay_strictly_shrinks_total() {
        let sub = SubstrateMap::uniform(16, 16, 0.0);
        let mut f = field_with(16, 16, &[(8, 8, 1.0)]);
        let mut prev = f.total();
        for _ in 0..5 {
            f = diffuse_step(&f, &sub, 0.2, 0.05).unwrap();
            let now = f.total();
            assert!(now < prev);
            prev = now;
        }
    }

    #[test]
    fn nonnegative_after_any_step() {
        let sub = SubstrateMap::uniform(16, 16, 0.0);
        let mut f = field_with(16, 16, &[(0, 0, 1.0), (15, 15, 3.0), (4, 9, 0.01)]);
        for _ in 0..100 {
            f = diffuse_step(&f, &sub, 0.25, 0.3).unwrap();
            assert!(f.values().iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn wall_column_blocks_all_flux() {
        let mut sub = SubstrateMap::uniform(17, 9, 0.0);
        for y in 0..9 {
            sub.set_wall(Cell::new(8, y), true);
        }
        let mut f = field_with(17, 9, &[(3, 4, 1.0)]);
        for _ in 0..200 {
            f = diffuse_step(&f, &sub, 0.25, 0.0).unwrap();
        }
        for y in 0..9u32 {
            assert_eq!(f.get(Cell::new(8, y)), 0.0, "wall cell leaked");
            for x in 9..17u32 {
                assert_eq!(f.get(Cell::new(x, y)), 0.0, "flux crossed the wall at ({x},{y})");
            }
        }
        // No-flux also conserves mass on the left side.
        assert!((f.total() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let sub = SubstrateMap::uniform(16, 16, 0.0);
        let f = ChemicalField::zeroed(SpeciesKind::Attractant, 8, 8);
        assert!(matches!(
            diffuse_step(&f, &sub, 0.2, 0.0),
            Err(EnvironmentError::DimensionMismatch { .. })
        ));
    }

    fn source_at(x: u32, y: u32, strength: f64, consumable: bool, mass: f64) -> StimulusSource {
        StimulusSource {
            position: Cell::new(x, y),
            kind: SpeciesKind::Attractant,
            strength,
            consumable,
            remaining_mass: mass,
            colonized: false,
        }
    }

    #[test]
    fn deposit_single_source() {
        let mut f = ChemicalField::zeroed(SpeciesKind::Attractant, 16, 16);
        let mut sources = vec![source_at(4, 5, 1.0, false, 0.0)];
        deposit_sources(&mut f, &mut sources, DEFAULT_FEED_FACTOR);
        assert_eq!(f.get(Cell::new(4, 5)), 1.0);
        assert_eq!(f.total(), 1.0);
    }

    #[test]
    fn deposit_clamps_at_remaining_mass() {
        let mut f = ChemicalField::zeroed(SpeciesKind::Attractant, 16, 16);
        let mut sources = vec![source_at(1, 1, 1.0, true, 0.4)];
        deposit_sources(&mut f, &mut sources, DEFAULT_FEED_FACTOR);
        assert_eq!(f.get(Cell::new(1, 1)), 0.4);
        assert_eq!(sources[0].remaining_mass, 0.0);
        // Depleted: second tick deposits nothing.
        deposit_sources(&mut f, &mut sources, DEFAULT_FEED_FACTOR);
        assert_eq!(f.get(Cell::new(1, 1)), 0.4);
    }

    #[test]
    fn coincident_sources_add() {
        let mut f = ChemicalField::zeroed(SpeciesKind::Attractant, 16, 16);
        let mut sources = vec![source_at(2, 2, 0.5, false, 0.0), source_at(2, 2, 0.5, false, 0.0)];
        deposit_sources(&mut f, &mut sources, DEFAULT_FEED_FACTOR);
        assert_eq!(f.get(Cell::new(2, 2)), 1.0);
    }

    #[test]
    fn colonized_consumable_drains_accelerated_and_absorbs() {
        let mut f = ChemicalField::zeroed(SpeciesKind::Attractant, 16, 16);
        f.set(Cell::new(3, 3), 2.0);
        let mut sources = vec![StimulusSource {
            colonized: true,
            ..source_at(3, 3, 1.0, true, 25.0)
        }];
        deposit_sources(&mut f, &mut sources, 10.0);
        assert_eq!(f.get(Cell::new(3, 3)), 0.0, "feeding absorbs the local field");
        assert_eq!(sources[0].remaining_mass, 15.0);
        deposit_sources(&mut f, &mut sources, 10.0);
        assert_eq!(sources[0].remaining_mass, 5.0);
        deposit_sources(&mut f, &mut sources, 10.0);
        assert_eq!(sources[0].remaining_mass, 0.0);
    }

    #[test]
    fn mismatched_species_ignored() {
        let mut f = ChemicalField::zeroed(SpeciesKind::Repellent, 16, 16);
        let mut sources = vec![source_at(2, 2, 1.0, false, 0.0)];
        deposit_sources(&mut f, &mut sources, DEFAULT_FEED_FACTOR);
        assert_eq!(f.total(), 0.0);
    }

    #[test]
    fn stimulus_combination() {
        let mut a = ChemicalField::zeroed(SpeciesKind::Attractant, 8, 8);
        let mut r = ChemicalField::zeroed(SpeciesKind::Repellent, 8, 8);
        let c = Cell::new(3, 3);
        assert_eq!(stimulus_at(&a, &r, StimulusWeights::default(), c).unwrap(), 0.0);
        a.set(c, 2.0);
        r.set(c, 0.5);
        assert_eq!(stimulus_at(&a, &r, StimulusWeights::default(), c).unwrap(), 1.5);
        let only_repel = StimulusWeights { attract: 0.0, repel: 1.0 };
        assert!(stimulus_at(&a, &r, only_repel, c).unwrap() <= 0.0);
        assert!(stimulus_at(&a, &r, StimulusWeights::default(), Cell::new(9, 0)).is_err());
    }

    #[test]
    fn scene_validation_catches_bad_diffusion() {
        let mut scene = Scene {
            grid: GridSpec { width: 64, height: 64, cell_size_mm: 1.0 },
            substrate: SubstrateMap::uniform(64, 64, 0.0),
            sources: vec![],
            inoculation_sites: vec![Cell::new(32, 32)],
            params: EngineParams::default(),
            diffusion: DiffusionSettings::default(),
        };
        assert!(scene.validate(&SceneLimits::default()).is_ok());
        scene.diffusion.attractant.d = 0.3;
        let err = scene.validate(&SceneLimits::default()).unwrap_err();
        match err {
            EnvironmentError::Semantic { path, .. } => {
                assert_eq!(path, "diffusion.attractant.D")
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn compass_geometry() {
        assert_eq!(Compass::N.delta(), (0, -1));
        assert_eq!(Compass::E.alignment(Compass::E), 1.0);
        assert_eq!(Compass::E.alignment(Compass::W), -1.0);
        assert_eq!(Compass::N.separation(Compass::SE), 3);
        assert_eq!(Compass::NE.separation(Compass::NW), 2);
        assert_eq!(Compass::from_vector(1.0, 0.0), Compass::E);
        assert_eq!(Compass::from_vector(0.0, 0.0), Compass::N);
        assert_eq!(Compass::from_vector(0.3, -1.0), Compass::N);
        assert_eq!(Compass::from_vector(0.5, -1.0), Compass::NE);
    }
}
