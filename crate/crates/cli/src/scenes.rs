//! Built-in default scenes, one per experiment, plus the maze and
//! silhouette generators they rely on. Every scene is produced as a
//! [`SceneDocument`] so it can be written next to the run artifacts and
//! re-parsed through the normal document path.

use physarum_core::engine::EngineParams;
use physarum_core::environment::{
    DiffusionParams, DiffusionSettings, GridDoc, PointDoc, RectDoc, SceneDocument, SourceDoc,
    SpeciesKind, SubstrateDoc,
};
use physarum_core::geometry::MazeGrid;

/// Small deterministic generator for scene layout (splitmix64 stream).
pub struct Layout {
    state: u64,
}

impl Layout {
    pub fn new(seed: u64) -> Self {
        Layout { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut x = self.state;
        x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
        x ^ (x >> 31)
    }

    /// Uniform integer in [lo, hi).
    pub fn range(&mut self, lo: i64, hi: i64) -> i64 {
        debug_assert!(hi > lo);
        lo + (self.next_u64() % (hi - lo) as u64) as i64
    }

    /// Uniform float in [0, 1).
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

fn grid(width: i64, height: i64) -> GridDoc {
    GridDoc { width, height, cell_size_mm: 1.0 }
}

fn slow_decay() -> DiffusionSettings {
    // Long-range gradients: decay length sqrt(D / lambda) = 100 cells.
    DiffusionSettings {
        attractant: DiffusionParams { d: 0.2, lambda: 2e-5 },
        repellent: DiffusionParams { d: 0.2, lambda: 2e-5 },
    }
}

fn medium_decay() -> DiffusionSettings {
    // Decay length ~14 cells: basins stay compact, so a colonized source's
    // digested patch hands the tip directly to the next plume.
    DiffusionSettings {
        attractant: DiffusionParams { d: 0.2, lambda: 1e-3 },
        repellent: DiffusionParams { d: 0.2, lambda: 1e-3 },
    }
}

fn attractant(x: i64, y: i64, strength: f64) -> SourceDoc {
    SourceDoc {
        x,
        y,
        kind: SpeciesKind::Attractant,
        strength,
        consumable: false,
        mass: 0.0,
    }
}

/// Five well-separated random sites on the 256-cell dish, shared by the
/// voronoi and delaunay experiments.
pub fn dish_sites(seed: u64) -> Vec<(i64, i64)> {
    let mut rng = Layout::new(seed ^ 0x5173_7465);
    let mut sites: Vec<(i64, i64)> = Vec::new();
    while sites.len() < 5 {
        let x = rng.range(32, 224);
        let y = rng.range(32, 224);
        if sites
            .iter()
            .all(|&(sx, sy)| (sx - x).abs().max((sy - y).abs()) >= 40)
        {
            sites.push((x, y));
        }
    }
    sites
}

/// Competing wavefronts on a uniformly nutrient-rich dish: the unoccupied
/// collision loci approximate the Voronoi diagram of the sites.
pub fn voronoi_scene(seed: u64) -> SceneDocument {
    let sites = dish_sites(seed);
    SceneDocument {
        grid: grid(256, 256),
        substrate: SubstrateDoc {
            default_nutrient: 1.0,
            ..Default::default()
        },
        sources: vec![],
        inoculation: sites.iter().map(|&(x, y)| PointDoc { x, y }).collect(),
        diffusion: DiffusionSettings::default(),
        engine: EngineParams {
            suppression_gain: 0.0,
            seed,
            ..Default::default()
        },
    }
}

/// The same sites on a non-nutrient dish, each inoculated and baited: tips
/// spiral out of their own stimulus well, leak across the saddle toward a
/// neighbouring site, and fuse there. The resulting tubes approximate
/// Delaunay edges.
pub fn delaunay_scene(seed: u64) -> SceneDocument {
    let sites = dish_sites(seed);
    SceneDocument {
        grid: grid(256, 256),
        substrate: SubstrateDoc::default(),
        sources: sites.iter().map(|&(x, y)| attractant(x, y, 1.0)).collect(),
        inoculation: sites.iter().map(|&(x, y)| PointDoc { x, y }).collect(),
        diffusion: slow_decay(),
        engine: EngineParams {
            noise_amplitude: 0.01,
            branch_ratio: 0.98,
            self_avoid_penalty: 3.0,
            suppression_gain: 0.0,
            max_zones: 40,
            seed,
            ..Default::default()
        },
    }
}

/// One inoculated patch south of five baits: a single relay tip hops from
/// source to source, building a spanning tree.
pub fn spanning_tree_scene(seed: u64) -> SceneDocument {
    let mut rng = Layout::new(seed ^ 0x7472_6565);
    // Rough arc of pills north of a southern inoculation patch.
    let base = [(40, 85), (64, 45), (90, 32), (114, 52), (122, 96)];
    let sources: Vec<SourceDoc> = base
        .iter()
        .map(|&(x, y)| {
            attractant(
                x + rng.range(-8, 9),
                y + rng.range(-8, 9),
                3.0,
            )
        })
        .collect();
    SceneDocument {
        grid: grid(160, 160),
        substrate: SubstrateDoc {
            default_nutrient: 0.0,
            // The inoculated blob itself is a small nutrient patch that
            // keeps budding a tip when none is alive.
            nutrient_rects: vec![RectDoc { x: 79, y: 129, w: 3, h: 3, value: Some(1.0) }],
            ..Default::default()
        },
        sources,
        inoculation: vec![PointDoc { x: 80, y: 130 }],
        diffusion: medium_decay(),
        engine: EngineParams {
            noise_amplitude: 0.003,
            // Gentle suppression from the resting mass recycles tips that
            // wander without finding anything.
            suppression_gain: 0.002,
            // One relay tip at a time, plus the zone resting on the
            // inoculated patch itself.
            max_zones: 2,
            seed,
            ..Default::default()
        },
    }
}

/// Spanning-tree scene with continuation switched on: once every bait is
/// colonised the surviving tip keeps patrolling the finished network.
pub fn continuation_scene(seed: u64) -> SceneDocument {
    let mut doc = spanning_tree_scene(seed);
    doc.engine.continuation = true;
    doc
}

/// Recursive-backtracker perfect maze on an odd-sized lattice. Passable
/// cells form a tree, so any two cells are joined by a unique simple path.
pub fn generate_maze(cells_w: u32, cells_h: u32, seed: u64) -> Vec<Vec<bool>> {
    let w = 2 * cells_w as usize + 1;
    let h = 2 * cells_h as usize + 1;
    let mut passable = vec![vec![false; w]; h];
    let mut rng = Layout::new(seed ^ 0x6d61_7a65);
    let mut visited = vec![vec![false; cells_w as usize]; cells_h as usize];
    let mut stack = vec![(0usize, 0usize)];
    visited[0][0] = true;
    passable[1][1] = true;
    while let Some(&(cx, cy)) = stack.last() {
        let mut options: Vec<(usize, usize)> = Vec::new();
        for (dx, dy) in [(0i64, -1i64), (1, 0), (0, 1), (-1, 0)] {
            let nx = cx as i64 + dx;
            let ny = cy as i64 + dy;
            if nx >= 0
                && ny >= 0
                && (nx as usize) < cells_w as usize
                && (ny as usize) < cells_h as usize
                && !visited[ny as usize][nx as usize]
            {
                options.push((nx as usize, ny as usize));
            }
        }
        if options.is_empty() {
            stack.pop();
            continue;
        }
        let (nx, ny) = options[rng.range(0, options.len() as i64) as usize];
        visited[ny][nx] = true;
        // Knock through the wall between the two lattice cells.
        let (ax, ay) = (2 * cx + 1, 2 * cy + 1);
        let (bx, by) = (2 * nx + 1, 2 * ny + 1);
        passable[by][bx] = true;
        passable[(ay + by) / 2][(ax + bx) / 2] = true;
        stack.push((nx, ny));
    }
    passable
}

/// 31x31 perfect maze with the bait in the central chamber and the
/// plasmodium inoculated in the north-west corner cell.
pub fn maze_scene(seed: u64) -> SceneDocument {
    let passable = generate_maze(15, 15, seed);
    let mut wall_rects = Vec::new();
    for (y, row) in passable.iter().enumerate() {
        for (x, &open) in row.iter().enumerate() {
            if !open {
                wall_rects.push(RectDoc {
                    x: x as i64,
                    y: y as i64,
                    w: 1,
                    h: 1,
                    value: None,
                });
            }
        }
    }
    SceneDocument {
        grid: grid(31, 31),
        substrate: SubstrateDoc {
            default_nutrient: 0.0,
            // The inoculated lump keeps the start cell budding explorers.
            nutrient_rects: vec![RectDoc { x: 1, y: 1, w: 1, h: 1, value: Some(1.0) }],
            wall_rects,
            ..Default::default()
        },
        sources: vec![SourceDoc {
            x: 15,
            y: 15,
            kind: SpeciesKind::Attractant,
            strength: 1.5,
            consumable: false,
            mass: 0.0,
        }],
        inoculation: vec![PointDoc { x: 1, y: 1 }],
        diffusion: DiffusionSettings {
            attractant: DiffusionParams { d: 0.2, lambda: 1e-4 },
            repellent: DiffusionParams { d: 0.2, lambda: 1e-4 },
        },
        engine: EngineParams {
            noise_amplitude: 0.0,
            suppression_gain: 0.004,
            activity_floor: 1e-6,
            max_zones: 48,
            seed,
            ..Default::default()
        },
    }
}

/// MazeGrid oracle view of the maze scene (inoculation to centre).
pub fn maze_oracle_grid(doc: &SceneDocument) -> MazeGrid {
    let w = doc.grid.width as u32;
    let h = doc.grid.height as u32;
    let mut passable = vec![true; (w * h) as usize];
    for r in &doc.substrate.wall_rects {
        for y in r.y..r.y + r.h {
            for x in r.x..r.x + r.w {
                passable[(y * w as i64 + x) as usize] = false;
            }
        }
    }
    MazeGrid {
        width: w,
        height: h,
        passable,
        start: physarum_core::environment::Cell::new(
            doc.inoculation[0].x as u32,
            doc.inoculation[0].y as u32,
        ),
        goal: physarum_core::environment::Cell::new(
            doc.sources[0].x as u32,
            doc.sources[0].y as u32,
        ),
        cell_size_mm: doc.grid.cell_size_mm,
    }
}

/// Nutrient silhouette of a standing figure, rendered as an 8-bit PGM.
/// Pixel/255 becomes the nutrient level.
pub fn man_mask_pgm(width: u32, height: u32) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    let cx = width as f64 / 2.0;
    let scale = height as f64;
    let inside = |x: f64, y: f64| -> bool {
        // All features in fractions of the canvas height.
        let ellipse = |ex: f64, ey: f64, rx: f64, ry: f64| {
            let dx = (x - ex) / rx;
            let dy = (y - ey) / ry;
            dx * dx + dy * dy <= 1.0
        };
        // Head, torso, two arms, two legs.
        ellipse(cx, 0.16 * scale, 0.065 * scale, 0.075 * scale)
            || ellipse(cx, 0.40 * scale, 0.105 * scale, 0.17 * scale)
            || ellipse(cx - 0.145 * scale, 0.38 * scale, 0.042 * scale, 0.16 * scale)
            || ellipse(cx + 0.145 * scale, 0.38 * scale, 0.042 * scale, 0.16 * scale)
            || ellipse(cx - 0.055 * scale, 0.70 * scale, 0.045 * scale, 0.20 * scale)
            || ellipse(cx + 0.055 * scale, 0.70 * scale, 0.045 * scale, 0.20 * scale)
    };
    for y in 0..height {
        for x in 0..width {
            let v = if inside(x as f64 + 0.5, y as f64 + 0.5) { 255u8 } else { 0 };
            out.push(v);
        }
    }
    out
}

/// Mixed-substrate dish: a nutrient-filled silhouette inset in plain agar,
/// inoculated in the chest, with a few baits scattered outside the figure.
pub fn substrate_shape_scene(seed: u64) -> SceneDocument {
    SceneDocument {
        grid: grid(128, 128),
        substrate: SubstrateDoc {
            default_nutrient: 0.0,
            mask_image: Some("man_mask.pgm".to_string()),
            ..Default::default()
        },
        sources: vec![
            attractant(18, 22, 1.0),
            attractant(108, 30, 1.0),
            attractant(104, 104, 1.0),
        ],
        inoculation: vec![PointDoc { x: 64, y: 48 }],
        diffusion: slow_decay(),
        engine: EngineParams {
            noise_amplitude: 0.02,
            branch_ratio: 0.97,
            suppression_gain: 0.0,
            max_zones: 64,
            seed,
            ..Default::default()
        },
    }
}

/// A scene with one consumable bait: after colonisation the source runs
/// dry, the trunk collapses, and re-foragers must weave between their own
/// ruins — exercising abandoned-tube avoidance.
pub fn self_avoidance_scene(seed: u64) -> SceneDocument {
    SceneDocument {
        grid: grid(64, 64),
        substrate: SubstrateDoc {
            default_nutrient: 0.0,
            nutrient_rects: vec![RectDoc { x: 10, y: 31, w: 2, h: 2, value: Some(1.0) }],
            ..Default::default()
        },
        sources: vec![
            SourceDoc {
                x: 44,
                y: 32,
                kind: SpeciesKind::Attractant,
                strength: 1.0,
                consumable: true,
                mass: 400.0,
            },
            // A second, farther bait keeps re-foragers moving after the
            // first one is exhausted.
            attractant(54, 16, 0.4),
        ],
        inoculation: vec![PointDoc { x: 11, y: 32 }],
        diffusion: slow_decay(),
        engine: EngineParams {
            noise_amplitude: 0.02,
            suppression_gain: 0.0,
            max_zones: 6,
            seed,
            ..Default::default()
        },
    }
}

/// The scene document for a named experiment.
pub fn default_scene(name: &str, seed: u64) -> Option<SceneDocument> {
    match name {
        "voronoi" => Some(voronoi_scene(seed)),
        "delaunay" => Some(delaunay_scene(seed)),
        "spanning_tree" => Some(spanning_tree_scene(seed)),
        "continuation" => Some(continuation_scene(seed)),
        "maze" => Some(maze_scene(seed)),
        "substrate_shape" => Some(substrate_shape_scene(seed)),
        _ => None,
    }
}
