//! Incremental Delaunay triangulation.
//!
//! Bowyer-Watson insertion over a ghost-vertex mesh: every hull edge owns a
//! "ghost" triangle whose region is the open half-plane beyond the edge, so
//! points outside the current hull are handled by the same cavity machinery
//! as interior points. All predicate evaluations go through the sign-exact
//! filters in [`super::predicates`].
//!
//! Points are inserted in lexicographic (x, then y) order. Cocircular
//! degeneracies are resolved by treating on-circle points as inside the
//! cavity, which together with the insertion order yields a deterministic
//! triangulation (for four cocircular corners the surviving diagonal is the
//! one incident to the lexicographically smallest corner).

use std::collections::HashMap;

use super::predicates::{dot_sign, incircle, orient2d};

type Pt = (f64, f64);

const GHOST: usize = usize::MAX;

struct Mesh {
    pts: Vec<Pt>,
    /// Triangle vertex triples, counter-clockwise. Dead triangles keep
    /// their slot; `alive` masks them.
    tris: Vec<[usize; 3]>,
    alive: Vec<bool>,
    /// Directed edge (a, b) -> alive triangle listing that edge.
    owner: HashMap<(usize, usize), usize>,
}

impl Mesh {
    fn is_ghost(&self, t: usize) -> bool {
        self.tris[t].contains(&GHOST)
    }

    /// The two real vertices (u, v) of a ghost triangle, in stored order.
    fn ghost_edge(&self, t: usize) -> (usize, usize) {
        let v = self.tris[t];
        // Rotate so the ghost vertex comes last.
        for k in 0..3 {
            if v[k] == GHOST {
                return (v[(k + 1) % 3], v[(k + 2) % 3]);
            }
        }
        unreachable!("not a ghost triangle")
    }

    fn push_tri(&mut self, v: [usize; 3]) -> usize {
        let id = self.tris.len();
        self.tris.push(v);
        self.alive.push(true);
        for k in 0..3 {
            self.owner.insert((v[k], v[(k + 1) % 3]), id);
        }
        id
    }

    fn kill_tri(&mut self, t: usize) {
        let v = self.tris[t];
        self.alive[t] = false;
        for k in 0..3 {
            let key = (v[k], v[(k + 1) % 3]);
            if self.owner.get(&key) == Some(&t) {
                self.owner.remove(&key);
            }
        }
    }

    /// Does triangle `t`'s region admit point `p` into the insertion cavity?
    ///
    /// Real triangles admit strictly-inside and on-circle points. A ghost
    /// triangle admits points strictly beyond its hull edge, and points
    /// lying on the open hull edge itself (which split the edge).
    fn in_cavity(&self, t: usize, p: Pt) -> bool {
        if self.is_ghost(t) {
            let (u, v) = self.ghost_edge(t);
            let s = orient2d(self.pts[u], self.pts[v], p);
            if s > 0 {
                return true;
            }
            if s == 0 {
                // On the supporting line: only the open segment counts.
                return dot_sign(self.pts[u], self.pts[v], p) < 0;
            }
            false
        } else {
            let [a, b, c] = self.tris[t];
            incircle(self.pts[a], self.pts[b], self.pts[c], p) >= 0
        }
    }

    /// Finds a triangle whose closed region contains `p` (scan in index
    /// order, so the result is deterministic).
    fn locate(&self, p: Pt) -> usize {
        for t in 0..self.tris.len() {
            if !self.alive[t] {
                continue;
            }
            if self.is_ghost(t) {
                let (u, v) = self.ghost_edge(t);
                let s = orient2d(self.pts[u], self.pts[v], p);
                if s > 0 || (s == 0 && dot_sign(self.pts[u], self.pts[v], p) < 0) {
                    return t;
                }
            } else {
                let [a, b, c] = self.tris[t];
                if orient2d(self.pts[a], self.pts[b], p) >= 0
                    && orient2d(self.pts[b], self.pts[c], p) >= 0
                    && orient2d(self.pts[c], self.pts[a], p) >= 0
                {
                    return t;
                }
            }
        }
        panic!("point not located; mesh invariant broken");
    }

    fn insert(&mut self, p_idx: usize) {
        let p = self.pts[p_idx];
        let seed = self.locate(p);

        // Flood the cavity over adjacency.
        let mut cavity = vec![seed];
        let mut seen = vec![seed];
        let mut queue = vec![seed];
        while let Some(t) = queue.pop() {
            let v = self.tris[t];
            for k in 0..3 {
                let rev = (v[(k + 1) % 3], v[k]);
                if let Some(&n) = self.owner.get(&rev) {
                    if !seen.contains(&n) {
                        seen.push(n);
                        if self.in_cavity(n, p) {
                            cavity.push(n);
                            queue.push(n);
                        }
                    }
                }
            }
        }

        // Boundary = directed edges of cavity triangles whose reverse edge
        // is not owned by a cavity triangle.
        let mut boundary = Vec::new();
        for &t in &cavity {
            let v = self.tris[t];
            for k in 0..3 {
                let e = (v[k], v[(k + 1) % 3]);
                let rev = (e.1, e.0);
                let rev_in_cavity = self
                    .owner
                    .get(&rev)
                    .map(|n| cavity.contains(n))
                    .unwrap_or(false);
                if !rev_in_cavity {
                    boundary.push(e);
                }
            }
        }

        for &t in &cavity {
            self.kill_tri(t);
        }
        for (a, b) in boundary {
            if a != GHOST && b != GHOST {
                debug_assert!(
                    orient2d(self.pts[a], self.pts[b], p) > 0,
                    "degenerate cavity triangle"
                );
            }
            self.push_tri([a, b, p_idx]);
        }
    }

    /// Undirected edges between real vertices of alive real triangles.
    fn real_edges(&self) -> Vec<(usize, usize)> {
        let mut edges = std::collections::BTreeSet::new();
        for t in 0..self.tris.len() {
            if !self.alive[t] || self.is_ghost(t) {
                continue;
            }
            let v = self.tris[t];
            for k in 0..3 {
                let (a, b) = (v[k], v[(k + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        edges.into_iter().collect()
    }
}

/// Triangulates `points` (at least 3, not all collinear, pairwise distinct)
/// and returns the undirected Delaunay edge set over point indices.
pub(super) fn triangulate(points: &[Pt]) -> Vec<(usize, usize)> {
    assert!(points.len() >= 3);

    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        points[i]
            .partial_cmp(&points[j])
            .expect("finite coordinates")
    });

    // Initial triangle: the first two points in order plus the first point
    // not collinear with them.
    let i0 = order[0];
    let i1 = order[1];
    let k = order[2..]
        .iter()
        .position(|&i| orient2d(points[i0], points[i1], points[i]) != 0)
        .expect("not all collinear")
        + 2;
    let i2 = order[k];

    let (a, b, c) = if orient2d(points[i0], points[i1], points[i2]) > 0 {
        (i0, i1, i2)
    } else {
        (i0, i2, i1)
    };

    let mut mesh = Mesh {
        pts: points.to_vec(),
        tris: Vec::new(),
        alive: Vec::new(),
        owner: HashMap::new(),
    };
    mesh.push_tri([a, b, c]);
    mesh.push_tri([b, a, GHOST]);
    mesh.push_tri([c, b, GHOST]);
    mesh.push_tri([a, c, GHOST]);

    for (pos, &i) in order.iter().enumerate() {
        if pos <= 1 || pos == k {
            continue;
        }
        mesh.insert(i);
    }
    mesh.real_edges()
}
