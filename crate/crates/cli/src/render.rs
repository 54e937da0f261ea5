//! Raster (PGM) and vector (SVG) artifact writers.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use physarum_core::engine::{CellTag, OccupancyState, TubeGraph};
use physarum_core::environment::{ChemicalField, GridSpec};
use physarum_core::geometry::{CellLabel, PlanarGraph, RasterPartition};

/// Writes a binary PGM (P5), one byte per cell. The header uses exactly
/// one whitespace separator between tokens: `P5\n{w} {h}\n255\n`.
pub fn write_pgm(path: &Path, width: u32, height: u32, bytes: &[u8]) -> anyhow::Result<()> {
    assert_eq!(bytes.len(), width as usize * height as usize);
    let mut f = fs::File::create(path)?;
    write!(f, "P5\n{width} {height}\n255\n")?;
    f.write_all(bytes)?;
    Ok(())
}

/// Occupancy value mapping: Empty 0, Occupied/Front 128 + owner mod 64,
/// Tube 255, AbandonedTube 64.
pub fn occupancy_bytes(occ: &OccupancyState) -> Vec<u8> {
    occ.tags()
        .iter()
        .map(|t| match *t {
            CellTag::Empty => 0u8,
            CellTag::Front { owner } | CellTag::Occupied { owner } => 128 + (owner % 64) as u8,
            CellTag::Tube { .. } => 255,
            CellTag::AbandonedTube { .. } => 64,
        })
        .collect()
}

/// Raster partition mapping: Boundary 255, sites 128 + index mod 64.
pub fn partition_bytes(part: &RasterPartition) -> Vec<u8> {
    part.labels()
        .iter()
        .map(|l| match *l {
            CellLabel::Boundary => 255u8,
            CellLabel::Site(i) => 128 + (i % 64) as u8,
        })
        .collect()
}

/// Min-max normalised field; a constant field renders as all zeros.
pub fn field_bytes(field: &ChemicalField) -> Vec<u8> {
    let values = field.values();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![0u8; values.len()];
    }
    values
        .iter()
        .map(|v| (255.0 * (v - lo) / (hi - lo)).round() as u8)
        .collect()
}

/// Renders a tube graph (and an optional oracle overlay) as SVG in
/// millimetre coordinates. Sim edges are `<polyline>` elements (abandoned
/// ones dashed); oracle edges are solid straight `<line>` elements.
pub fn graph_svg(
    grid: &GridSpec,
    sim: Option<&TubeGraph>,
    planar: Option<&PlanarGraph>,
    overlay: Option<&PlanarGraph>,
) -> String {
    let w = grid.width as f64 * grid.cell_size_mm;
    let h = grid.height as f64 * grid.cell_size_mm;
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {h}\" \
         width=\"{w}mm\" height=\"{h}mm\">\n"
    ));
    out.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"#f7f3e8\"/>\n"
    ));

    if let Some(g) = sim {
        for e in &g.edges {
            let pts: Vec<String> = e
                .polyline
                .iter()
                .map(|c| {
                    let (x, y) = grid.cell_center_mm(*c);
                    format!("{x},{y}")
                })
                .collect();
            let style = if e.abandoned {
                "stroke=\"#b5a27f\" stroke-dasharray=\"1.6 1.2\" stroke-width=\"0.5\""
            } else {
                "stroke=\"#c8a200\" stroke-width=\"1.1\""
            };
            out.push_str(&format!(
                "  <polyline points=\"{}\" fill=\"none\" {} />\n",
                pts.join(" "),
                style
            ));
        }
        for n in &g.nodes {
            let (x, y) = grid.cell_center_mm(n.position);
            out.push_str(&format!(
                "  <circle cx=\"{x}\" cy=\"{y}\" r=\"1.0\" fill=\"#7a6011\"/>\n"
            ));
        }
    }

    if let Some(g) = planar {
        for &(a, b) in &g.edges {
            let (x1, y1) = g.nodes[a];
            let (x2, y2) = g.nodes[b];
            out.push_str(&format!(
                "  <polyline points=\"{x1},{y1} {x2},{y2}\" fill=\"none\" \
                 stroke=\"#c8a200\" stroke-width=\"1.1\" />\n"
            ));
        }
    }

    if let Some(g) = overlay {
        for &(a, b) in &g.edges {
            let (x1, y1) = g.nodes[a];
            let (x2, y2) = g.nodes[b];
            out.push_str(&format!(
                "  <line x1=\"{x1}\" y1=\"{y1}\" x2=\"{x2}\" y2=\"{y2}\" \
                 stroke=\"#333333\" stroke-width=\"0.35\" />\n"
            ));
        }
        for &(x, y) in &g.nodes {
            out.push_str(&format!(
                "  <circle cx=\"{x}\" cy=\"{y}\" r=\"1.4\" fill=\"none\" \
                 stroke=\"#333333\" stroke-width=\"0.35\"/>\n"
            ));
        }
    }

    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use physarum_core::engine::{NodeKind, TubeEdge, TubeNode};
    use physarum_core::environment::Cell;

    fn grid(w: u32, h: u32) -> GridSpec {
        GridSpec { width: w, height: h, cell_size_mm: 1.0 }
    }

    #[test]
    fn pgm_header_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.pgm");
        write_pgm(&path, 2, 2, &[0, 0, 0, 0]).unwrap();
        let data = std::fs::read(&path).unwrap();
        assert_eq!(data, b"P5\n2 2\n255\n\0\0\0\0");
    }

    #[test]
    fn constant_field_renders_zero() {
        let mut f = ChemicalField::zeroed(
            physarum_core::environment::SpeciesKind::Attractant,
            4,
            4,
        );
        for y in 0..4 {
            for x in 0..4 {
                f.set(Cell::new(x, y), 2.5);
            }
        }
        assert!(field_bytes(&f).iter().all(|&b| b == 0));
        f.set(Cell::new(1, 1), 5.0);
        let bytes = field_bytes(&f);
        assert_eq!(bytes[5], 255);
        assert_eq!(bytes[0], 0);
    }

    #[test]
    fn empty_graph_svg_has_no_paths() {
        let svg = graph_svg(&grid(8, 8), None, None, None);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 0);
        assert_eq!(svg.matches("<line").count(), 0);
    }

    #[test]
    fn one_edge_graph_has_one_polyline() {
        let g = TubeGraph {
            nodes: vec![
                TubeNode { position: Cell::new(1, 1), kind: NodeKind::Inoculation },
                TubeNode { position: Cell::new(3, 1), kind: NodeKind::Food },
            ],
            edges: vec![TubeEdge {
                endpoints: (0, 1),
                polyline: vec![Cell::new(1, 1), Cell::new(2, 1), Cell::new(3, 1)],
                length_mm: 2.0,
                abandoned: false,
                visits: 0,
            }],
        };
        let svg = graph_svg(&grid(8, 8), Some(&g), None, None);
        assert_eq!(svg.matches("<polyline").count(), 1);
    }

    #[test]
    fn overlay_line_count_matches_oracle_edges() {
        let oracle = PlanarGraph {
            nodes: vec![(1.0, 1.0), (5.0, 1.0), (3.0, 5.0)],
            edges: vec![(0, 1), (0, 2), (1, 2)],
        };
        let svg = graph_svg(&grid(8, 8), None, None, Some(&oracle));
        assert_eq!(svg.matches("<line").count(), oracle.edges.len());
    }
}
