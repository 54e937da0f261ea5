//! Virtual plasmodium growth on 2-D chemical substrates, with exact
//! classical-geometry oracles and network-morphology scoring.
//!
//! The crate is organised in four layers:
//!
//! * [`environment`] — scenes (substrate, walls, stimulus sources,
//!   inoculation sites) and the chemical fields they evolve.
//! * [`engine`] — the growth model itself: omnidirectional wavefront
//!   expansion on nutrient-rich cells, tube-laying active zones on
//!   non-nutrient cells, branching, dominance suppression and
//!   abandoned-tube memory, all feeding an incrementally built
//!   [`engine::TubeGraph`].
//! * [`geometry`] — brute-force-verified Voronoi, Delaunay, Euclidean MST,
//!   grid shortest path and lune-based β-skeletons used as oracles.
//! * [`morphometrics`] — comparison scores (bisector coverage, edge
//!   precision/recall, length ratios) and the degree/regularity phase-plane
//!   classifier.

pub mod engine;
pub mod environment;
pub mod geometry;
pub mod morphometrics;
