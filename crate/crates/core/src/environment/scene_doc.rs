//! JSON scene documents.
//!
//! The document schema is closed: unknown keys anywhere are an error, which
//! catches typos before they silently change an experiment. Coordinates are
//! parsed as signed integers so out-of-range placements surface as semantic
//! errors naming the offending field rather than as parse failures.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    Cell, DiffusionSettings, EnvironmentError, GridSpec, Scene, SceneLimits, SpeciesKind,
    StimulusSource, SubstrateMap,
};
use crate::engine::EngineParams;

/// Axis-aligned cell rectangle with an optional payload value.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectDoc {
    pub x: i64,
    pub y: i64,
    pub w: i64,
    pub h: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDoc {
    pub width: i64,
    pub height: i64,
    pub cell_size_mm: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubstrateDoc {
    #[serde(default)]
    pub default_nutrient: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nutrient_rects: Vec<RectDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub wall_rects: Vec<RectDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_image: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceDoc {
    pub x: i64,
    pub y: i64,
    pub kind: SpeciesKind,
    pub strength: f64,
    #[serde(default)]
    pub consumable: bool,
    #[serde(default)]
    pub mass: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointDoc {
    pub x: i64,
    pub y: i64,
}

/// The on-disk scene description. See the module docs for the schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDocument {
    pub grid: GridDoc,
    #[serde(default)]
    pub substrate: SubstrateDoc,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sources: Vec<SourceDoc>,
    pub inoculation: Vec<PointDoc>,
    #[serde(default)]
    pub diffusion: DiffusionSettings,
    #[serde(default)]
    pub engine: EngineParams,
}

impl SceneDocument {
    /// Parses the JSON text without semantic validation.
    pub fn parse(text: &str) -> Result<Self, EnvironmentError> {
        serde_json::from_str(text).map_err(|e| EnvironmentError::Schema(e.to_string()))
    }

    /// Serialises back to pretty JSON (used when bundling default scenes).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene documents always serialise")
    }

    /// Builds and validates a [`Scene`]. `base_dir` resolves relative
    /// `mask_image` paths.
    pub fn into_scene(
        self,
        base_dir: Option<&Path>,
        limits: &SceneLimits,
    ) -> Result<Scene, EnvironmentError> {
        let semantic = |path: String, message: String| EnvironmentError::Semantic {
            path,
            message,
        };

        if self.grid.width < 8 || self.grid.height < 8 {
            return Err(semantic(
                "grid".into(),
                format!("grid must be at least 8x8, got {}x{}", self.grid.width, self.grid.height),
            ));
        }
        let cells = self.grid.width as u64 * self.grid.height as u64;
        if cells > limits.max_cells {
            return Err(semantic(
                "grid".into(),
                format!("{} cells exceed the cap of {}", cells, limits.max_cells),
            ));
        }
        let grid = GridSpec {
            width: self.grid.width as u32,
            height: self.grid.height as u32,
            cell_size_mm: self.grid.cell_size_mm,
        };

        if !(0.0..=1.0).contains(&self.substrate.default_nutrient) {
            return Err(semantic(
                "substrate.default_nutrient".into(),
                format!("nutrient must be in [0, 1], got {}", self.substrate.default_nutrient),
            ));
        }
        let mut substrate =
            SubstrateMap::uniform(grid.width, grid.height, self.substrate.default_nutrient);

        if let Some(mask) = &self.substrate.mask_image {
            let path = match base_dir {
                Some(dir) => dir.join(mask),
                None => PathBuf::from(mask),
            };
            let (mw, mh, pixels) = read_pgm(&path).map_err(|e| {
                semantic("substrate.mask_image".into(), format!("{}: {e}", path.display()))
            })?;
            if mw != grid.width || mh != grid.height {
                return Err(semantic(
                    "substrate.mask_image".into(),
                    format!("mask is {mw}x{mh} but the grid is {}x{}", grid.width, grid.height),
                ));
            }
            for y in 0..grid.height {
                for x in 0..grid.width {
                    let v = pixels[(y * grid.width + x) as usize] as f64 / 255.0;
                    substrate.set_nutrient(Cell::new(x, y), v);
                }
            }
        }

        for (i, rect) in self.substrate.nutrient_rects.iter().enumerate() {
            let path = format!("substrate.nutrient_rects[{i}]");
            let value = rect.value.ok_or_else(|| {
                semantic(path.clone(), "nutrient rect needs a value".to_string())
            })?;
            if !(0.0..=1.0).contains(&value) {
                return Err(semantic(path, format!("nutrient must be in [0, 1], got {value}")));
            }
            for cell in rect_cells(rect, &grid).map_err(|m| semantic(path.clone(), m))? {
                substrate.set_nutrient(cell, value);
            }
        }
        for (i, rect) in self.substrate.wall_rects.iter().enumerate() {
            let path = format!("substrate.wall_rects[{i}]");
            for cell in rect_cells(rect, &grid).map_err(|m| semantic(path.clone(), m))? {
                substrate.set_wall(cell, true);
            }
        }

        let mut sources = Vec::with_capacity(self.sources.len());
        for (i, src) in self.sources.iter().enumerate() {
            let path = format!("sources[{i}]");
            if !grid.contains(src.x, src.y) {
                return Err(semantic(
                    path,
                    format!(
                        "source at ({}, {}) is outside the {}x{} grid",
                        src.x, src.y, grid.width, grid.height
                    ),
                ));
            }
            sources.push(StimulusSource {
                position: Cell::new(src.x as u32, src.y as u32),
                kind: src.kind,
                strength: src.strength,
                consumable: src.consumable,
                remaining_mass: src.mass,
                colonized: false,
            });
        }

        let mut inoculation_sites = Vec::with_capacity(self.inoculation.len());
        for (i, p) in self.inoculation.iter().enumerate() {
            if !grid.contains(p.x, p.y) {
                return Err(semantic(
                    format!("inoculation[{i}]"),
                    format!(
                        "inoculation site ({}, {}) is outside the {}x{} grid",
                        p.x, p.y, grid.width, grid.height
                    ),
                ));
            }
            inoculation_sites.push(Cell::new(p.x as u32, p.y as u32));
        }

        let scene = Scene {
            grid,
            substrate,
            sources,
            inoculation_sites,
            params: self.engine,
            diffusion: self.diffusion,
        };
        scene.validate(limits)?;
        Ok(scene)
    }
}

fn rect_cells(rect: &RectDoc, grid: &GridSpec) -> Result<Vec<Cell>, String> {
    if rect.w < 1 || rect.h < 1 {
        return Err(format!("rect must be at least 1x1, got {}x{}", rect.w, rect.h));
    }
    if rect.x < 0
        || rect.y < 0
        || rect.x + rect.w > grid.width as i64
        || rect.y + rect.h > grid.height as i64
    {
        return Err(format!(
            "rect ({}, {}, {}, {}) exceeds the {}x{} grid",
            rect.x, rect.y, rect.w, rect.h, grid.width, grid.height
        ));
    }
    let mut cells = Vec::with_capacity((rect.w * rect.h) as usize);
    for y in rect.y..rect.y + rect.h {
        for x in rect.x..rect.x + rect.w {
            cells.push(Cell::new(x as u32, y as u32));
        }
    }
    Ok(cells)
}

/// Parses a scene document and validates it with default limits.
pub fn parse_scene(text: &str) -> Result<Scene, EnvironmentError> {
    SceneDocument::parse(text)?.into_scene(None, &SceneLimits::default())
}

/// Like [`parse_scene`] with an explicit base directory for mask paths and
/// explicit limits (for overriding the grid-size cap).
pub fn parse_scene_with_base(
    text: &str,
    base_dir: &Path,
    limits: &SceneLimits,
) -> Result<Scene, EnvironmentError> {
    SceneDocument::parse(text)?.into_scene(Some(base_dir), limits)
}

/// Reads an 8-bit PGM (P5 binary or P2 ASCII). Returns (width, height,
/// pixels in row-major order).
pub fn read_pgm(path: &Path) -> Result<(u32, u32, Vec<u8>), String> {
    let data = fs::read(path).map_err(|e| e.to_string())?;
    parse_pgm(&data)
}

fn parse_pgm(data: &[u8]) -> Result<(u32, u32, Vec<u8>), String> {
    let mut pos = 0usize;

    fn skip_separators(data: &[u8], mut pos: usize) -> usize {
        loop {
            while pos < data.len() && data[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < data.len() && data[pos] == b'#' {
                while pos < data.len() && data[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                return pos;
            }
        }
    }

    fn read_token(data: &[u8], pos: &mut usize) -> Result<u64, String> {
        *pos = skip_separators(data, *pos);
        let start = *pos;
        while *pos < data.len() && data[*pos].is_ascii_digit() {
            *pos += 1;
        }
        if start == *pos {
            return Err("malformed PGM header".to_string());
        }
        std::str::from_utf8(&data[start..*pos])
            .map_err(|e| e.to_string())?
            .parse::<u64>()
            .map_err(|e| e.to_string())
    }

    if data.len() < 2 {
        return Err("not a PGM file".to_string());
    }
    let magic = &data[..2];
    pos += 2;
    let binary = match magic {
        b"P5" => true,
        b"P2" => false,
        _ => return Err("unsupported magic (want P5 or P2)".to_string()),
    };
    let width = read_token(data, &mut pos)? as u32;
    let height = read_token(data, &mut pos)? as u32;
    let maxval = read_token(data, &mut pos)?;
    if maxval != 255 {
        return Err(format!("only maxval 255 is supported, got {maxval}"));
    }
    let count = width as usize * height as usize;
    if binary {
        // Exactly one whitespace byte separates the header from the raster.
        pos += 1;
        if data.len() < pos + count {
            return Err("PGM raster truncated".to_string());
        }
        Ok((width, height, data[pos..pos + count].to_vec()))
    } else {
        let mut pixels = Vec::with_capacity(count);
        for _ in 0..count {
            let v = read_token(data, &mut pos)?;
            if v > 255 {
                return Err(format!("pixel value {v} exceeds maxval"));
            }
            pixels.push(v as u8);
        }
        Ok((width, height, pixels))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "grid": {"width": 64, "height": 64, "cell_size_mm": 1.0},
        "inoculation": [{"x": 32, "y": 32}]
    }"#;

    #[test]
    fn minimal_document_parses() {
        let scene = parse_scene(MINIMAL).unwrap();
        assert_eq!(scene.grid.width, 64);
        assert!(scene.sources.is_empty());
        assert_eq!(scene.inoculation_sites, vec![Cell::new(32, 32)]);
        assert_eq!(scene.diffusion.attractant.d, 0.2);
    }

    #[test]
    fn unknown_key_is_schema_error() {
        let text = r#"{
            "grid": {"width": 64, "height": 64, "cell_size_mm": 1.0},
            "inoculation": [{"x": 1, "y": 1}],
            "wavespeed": 2.0
        }"#;
        let err = parse_scene(text).unwrap_err();
        match err {
            EnvironmentError::Schema(msg) => assert!(msg.contains("wavespeed"), "{msg}"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn out_of_bounds_source_named() {
        let text = r#"{
            "grid": {"width": 64, "height": 64, "cell_size_mm": 1.0},
            "sources": [
                {"x": 3, "y": 3, "kind": "attractant", "strength": 1.0},
                {"x": -1, "y": 5, "kind": "attractant", "strength": 1.0}
            ],
            "inoculation": [{"x": 32, "y": 32}]
        }"#;
        let err = parse_scene(text).unwrap_err();
        match err {
            EnvironmentError::Semantic { path, .. } => assert_eq!(path, "sources[1]"),
            other => panic!("expected semantic error, got {other:?}"),
        }
    }

    #[test]
    fn unstable_diffusion_rejected() {
        let text = r#"{
            "grid": {"width": 64, "height": 64, "cell_size_mm": 1.0},
            "inoculation": [{"x": 32, "y": 32}],
            "diffusion": {"attractant": {"D": 0.3, "lambda": 0.01},
                          "repellent": {"D": 0.2, "lambda": 0.01}}
        }"#;
        let err = parse_scene(text).unwrap_err();
        match err {
            EnvironmentError::Semantic { path, message } => {
                assert_eq!(path, "diffusion.attractant.D");
                assert!(message.contains("0.3"), "{message}");
            }
            other => panic!("expected semantic error, got {other:?}"),
        }
    }

    #[test]
    fn inoculation_on_wall_rejected() {
        let text = r#"{
            "grid": {"width": 64, "height": 64, "cell_size_mm": 1.0},
            "substrate": {"wall_rects": [{"x": 10, "y": 10, "w": 4, "h": 4}]},
            "inoculation": [{"x": 11, "y": 12}]
        }"#;
        let err = parse_scene(text).unwrap_err();
        match err {
            EnvironmentError::Semantic { path, .. } => assert_eq!(path, "inoculation[0]"),
            other => panic!("expected semantic error, got {other:?}"),
        }
    }

    #[test]
    fn substrate_rects_apply_in_order() {
        let text = r#"{
            "grid": {"width": 16, "height": 16, "cell_size_mm": 1.0},
            "substrate": {
                "default_nutrient": 0.25,
                "nutrient_rects": [{"x": 0, "y": 0, "w": 8, "h": 8, "value": 1.0}],
                "wall_rects": [{"x": 0, "y": 0, "w": 2, "h": 2}]
            },
            "inoculation": [{"x": 12, "y": 12}]
        }"#;
        let scene = parse_scene(text).unwrap();
        assert_eq!(scene.substrate.nutrient(Cell::new(4, 4)), 1.0);
        assert_eq!(scene.substrate.nutrient(Cell::new(12, 12)), 0.25);
        assert!(scene.substrate.is_wall(Cell::new(1, 1)));
        assert_eq!(scene.substrate.nutrient(Cell::new(1, 1)), 0.0, "walls carry no nutrient");
    }

    #[test]
    fn grid_cap_respected() {
        let text = r#"{
            "grid": {"width": 512, "height": 512, "cell_size_mm": 1.0},
            "inoculation": [{"x": 1, "y": 1}]
        }"#;
        let doc = SceneDocument::parse(text).unwrap();
        let tight = SceneLimits { max_cells: 256 * 256 };
        assert!(doc.clone().into_scene(None, &tight).is_err());
        assert!(doc.into_scene(None, &SceneLimits::default()).is_ok());
    }

    #[test]
    fn pgm_ascii_and_binary_roundtrip() {
        let ascii = b"P2\n# comment\n2 2\n255\n0 128\n255 64\n";
        let (w, h, px) = parse_pgm(ascii).unwrap();
        assert_eq!((w, h), (2, 2));
        assert_eq!(px, vec![0, 128, 255, 64]);

        let mut binary = b"P5\n2 2\n255\n".to_vec();
        binary.extend_from_slice(&[0, 128, 255, 64]);
        let (w, h, px) = parse_pgm(&binary).unwrap();
        assert_eq!((w, h), (2, 2));
        assert_eq!(px, vec![0, 128, 255, 64]);
    }
}
