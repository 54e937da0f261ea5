//! The protoplasmic tube graph.
//!
//! The engine grows edges incrementally: a zone's trail stays "open" until
//! it reaches food, branches, merges or dies, at which point the polyline
//! is sealed between two nodes. [`GraphBuilder`] holds the mutable mid-run
//! form; [`TubeGraph`] is the checked, canonicalised export.

use std::collections::BTreeMap;

use crate::environment::Cell;

pub type NodeId = u32;
pub type EdgeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Inoculation,
    Branch,
    Food,
    Tip,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TubeNode {
    pub position: Cell,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TubeEdge {
    /// Node indices into [`TubeGraph::nodes`].
    pub endpoints: (usize, usize),
    /// Cell path from `endpoints.0` to `endpoints.1`; consecutive cells are
    /// 8-neighbours.
    pub polyline: Vec<Cell>,
    pub length_mm: f64,
    pub abandoned: bool,
    /// Continuation-phase traversal count.
    pub visits: u32,
}

/// The exported, invariant-checked tube graph.
#[derive(Debug, Clone, PartialEq)]
pub struct TubeGraph {
    pub nodes: Vec<TubeNode>,
    pub edges: Vec<TubeEdge>,
}

impl TubeGraph {
    pub fn edges_iter(&self, abandoned_too: bool) -> impl Iterator<Item = &TubeEdge> {
        self.edges.iter().filter(move |e| abandoned_too || !e.abandoned)
    }

    /// Total length over non-abandoned edges.
    pub fn live_length_mm(&self) -> f64 {
        self.edges_iter(false).map(|e| e.length_mm).sum()
    }

    pub fn node_at(&self, cell: Cell) -> Option<usize> {
        self.nodes.iter().position(|n| n.position == cell)
    }

    /// Degree per node counting non-abandoned edges only.
    pub fn live_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.nodes.len()];
        for e in self.edges_iter(false) {
            deg[e.endpoints.0] += 1;
            deg[e.endpoints.1] += 1;
        }
        deg
    }

    /// True when the non-abandoned subgraph is acyclic.
    pub fn live_is_acyclic(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.nodes.len()).collect();
        fn find(parent: &mut Vec<usize>, mut v: usize) -> usize {
            while parent[v] != v {
                parent[v] = parent[parent[v]];
                v = parent[v];
            }
            v
        }
        for e in self.edges_iter(false) {
            let (a, b) = (find(&mut parent, e.endpoints.0), find(&mut parent, e.endpoints.1));
            if a == b {
                return false;
            }
            parent[a] = b;
        }
        true
    }

    /// Nodes connected to `start` through non-abandoned edges.
    pub fn live_component(&self, start: usize) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        if start >= self.nodes.len() {
            return seen;
        }
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for e in self.edges_iter(false) {
                let n = if e.endpoints.0 == v {
                    e.endpoints.1
                } else if e.endpoints.1 == v {
                    e.endpoints.0
                } else {
                    continue;
                };
                if !seen[n] {
                    seen[n] = true;
                    stack.push(n);
                }
            }
        }
        seen
    }

    /// Shortest path length (mm) between two nodes over non-abandoned
    /// edges, if connected.
    pub fn live_path_length_mm(&self, from: usize, to: usize) -> Option<f64> {
        let n = self.nodes.len();
        let mut dist = vec![f64::INFINITY; n];
        dist[from] = 0.0;
        // Bellman-Ford style relaxation; graphs are small.
        for _ in 0..n {
            let mut changed = false;
            for e in self.edges_iter(false) {
                let (a, b) = e.endpoints;
                if dist[a] + e.length_mm < dist[b] - 1e-12 {
                    dist[b] = dist[a] + e.length_mm;
                    changed = true;
                }
                if dist[b] + e.length_mm < dist[a] - 1e-12 {
                    dist[a] = dist[b] + e.length_mm;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if dist[to].is_finite() {
            Some(dist[to])
        } else {
            None
        }
    }
}

/// Polyline length in millimetres: orthogonal steps cost one cell,
/// diagonal steps √2 cells.
pub fn polyline_length_mm(polyline: &[Cell], cell_size_mm: f64) -> f64 {
    polyline
        .windows(2)
        .map(|w| {
            let dx = (w[0].x as i64 - w[1].x as i64).unsigned_abs();
            let dy = (w[0].y as i64 - w[1].y as i64).unsigned_abs();
            debug_assert!(dx <= 1 && dy <= 1 && (dx | dy) == 1, "not an 8-neighbour step");
            if dx == 1 && dy == 1 {
                std::f64::consts::SQRT_2
            } else {
                1.0
            }
        })
        .sum::<f64>()
        * cell_size_mm
}

/// Mid-run mutable graph. Edges may be open (no head yet) while a zone is
/// still extending them; dead entries stay in place so edge ids remain
/// stable for occupancy tags.
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    pub nodes: Vec<BuildNode>,
    pub edges: Vec<BuildEdge>,
    node_index: BTreeMap<Cell, NodeId>,
}

#[derive(Debug, Clone)]
pub struct BuildNode {
    pub position: Cell,
    pub kind: NodeKind,
}

#[derive(Debug, Clone)]
pub struct BuildEdge {
    pub tail: NodeId,
    pub head: Option<NodeId>,
    pub polyline: Vec<Cell>,
    pub abandoned: bool,
    /// Inoculation component the creating zone belonged to.
    pub owner: u32,
    /// Dropped zero-extent edges; skipped on export.
    pub dead: bool,
    /// Continuation-phase traversal count.
    pub visits: u32,
}

impl GraphBuilder {
    pub fn new() -> Self {
        GraphBuilder {
            nodes: Vec::new(),
            edges: Vec::new(),
            node_index: BTreeMap::new(),
        }
    }

    /// Returns the node at `cell`, creating one of the given kind if absent.
    /// Existing Branch/Tip nodes are upgraded to Food when asked for Food;
    /// Inoculation nodes keep their kind.
    pub fn node_at_or_insert(&mut self, cell: Cell, kind: NodeKind) -> NodeId {
        if let Some(&id) = self.node_index.get(&cell) {
            let node = &mut self.nodes[id as usize];
            if kind == NodeKind::Food && node.kind != NodeKind::Inoculation {
                node.kind = NodeKind::Food;
            }
            return id;
        }
        let id = self.nodes.len() as NodeId;
        self.nodes.push(BuildNode { position: cell, kind });
        self.node_index.insert(cell, id);
        id
    }

    pub fn node_at(&self, cell: Cell) -> Option<NodeId> {
        self.node_index.get(&cell).copied()
    }

    pub fn open_edge(&mut self, tail: NodeId, first_cell: Cell, owner: u32) -> EdgeId {
        let id = self.edges.len() as EdgeId;
        self.edges.push(BuildEdge {
            tail,
            head: None,
            polyline: vec![first_cell],
            abandoned: false,
            owner,
            dead: false,
            visits: 0,
        });
        id
    }

    /// Seals an open edge at `head`. Zero-step polylines and self-loops are
    /// dropped instead of sealed.
    pub fn close_edge(&mut self, edge: EdgeId, head: NodeId, abandoned: bool) {
        let e = &mut self.edges[edge as usize];
        debug_assert!(e.head.is_none(), "edge closed twice");
        if e.polyline.len() < 2 || e.tail == head {
            e.dead = true;
            e.head = Some(head);
            return;
        }
        e.head = Some(head);
        e.abandoned = abandoned;
    }

    /// Splits a sealed edge at an interior polyline cell, inserting a
    /// Branch node. Returns (node id, new second-half edge id). Calling at
    /// a terminal cell returns the existing endpoint node and no new edge.
    pub fn split_edge(&mut self, edge: EdgeId, cell: Cell) -> (NodeId, Option<EdgeId>) {
        let (tail, head, abandoned, owner, visits, idx) = {
            let e = &self.edges[edge as usize];
            let idx = e
                .polyline
                .iter()
                .position(|&c| c == cell)
                .expect("split cell must lie on the edge polyline");
            (e.tail, e.head.expect("split of open edge"), e.abandoned, e.owner, e.visits, idx)
        };
        if idx == 0 {
            return (tail, None);
        }
        if idx == self.edges[edge as usize].polyline.len() - 1 {
            return (head, None);
        }
        let node = self.node_at_or_insert(cell, NodeKind::Branch);
        let second_half: Vec<Cell> = self.edges[edge as usize].polyline[idx..].to_vec();
        let e = &mut self.edges[edge as usize];
        e.polyline.truncate(idx + 1);
        e.head = Some(node);
        let new_id = self.edges.len() as EdgeId;
        self.edges.push(BuildEdge {
            tail: node,
            head: Some(head),
            polyline: second_half,
            abandoned,
            owner,
            dead: false,
            visits,
        });
        (node, Some(new_id))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn open_close_drop_semantics() {
        let mut g = GraphBuilder::new();
        let a = g.node_at_or_insert(Cell::new(0, 0), NodeKind::Inoculation);
        let e = g.open_edge(a, Cell::new(0, 0), 0);
        g.edges[e as usize].polyline.push(Cell::new(1, 0));
        g.edges[e as usize].polyline.push(Cell::new(2, 1));
        let b = g.node_at_or_insert(Cell::new(2, 1), NodeKind::Food);
        g.close_edge(e, b, false);
        assert!(!g.edges[0].dead);

        // Zero-extent edge gets dropped.
        let e2 = g.open_edge(b, Cell::new(2, 1), 0);
        g.close_edge(e2, b, false);
        assert!(g.edges[1].dead);
    }

    #[test]
    fn split_at_interior_and_terminal() {
        let mut g = GraphBuilder::new();
        let a = g.node_at_or_insert(Cell::new(0, 0), NodeKind::Inoculation);
        let e = g.open_edge(a, Cell::new(0, 0), 0);
        for x in 1..=4 {
            g.edges[e as usize].polyline.push(Cell::new(x, 0));
        }
        let b = g.node_at_or_insert(Cell::new(4, 0), NodeKind::Food);
        g.close_edge(e, b, false);

        let (node, second) = g.split_edge(e, Cell::new(2, 0));
        let second = second.unwrap();
        assert_eq!(g.nodes[node as usize].kind, NodeKind::Branch);
        assert_eq!(g.edges[e as usize].polyline.last(), Some(&Cell::new(2, 0)));
        assert_eq!(g.edges[e as usize].head, Some(node));
        assert_eq!(g.edges[second as usize].polyline.first(), Some(&Cell::new(2, 0)));
        assert_eq!(g.edges[second as usize].head, Some(b));

        let (t, none) = g.split_edge(e, Cell::new(0, 0));
        assert_eq!(t, a);
        assert!(none.is_none());
    }

    #[test]
    fn length_uses_octile_steps() {
        let poly = vec![Cell::new(0, 0), Cell::new(1, 0), Cell::new(2, 1)];
        let len = polyline_length_mm(&poly, 2.0);
        assert!((len - 2.0 * (1.0 + std::f64::consts::SQRT_2)).abs() < 1e-12);
    }

    #[test]
    fn upgrade_to_food_spares_inoculation() {
        let mut g = GraphBuilder::new();
        let a = g.node_at_or_insert(Cell::new(0, 0), NodeKind::Inoculation);
        let same = g.node_at_or_insert(Cell::new(0, 0), NodeKind::Food);
        assert_eq!(a, same);
        assert_eq!(g.nodes[a as usize].kind, NodeKind::Inoculation);
        let b = g.node_at_or_insert(Cell::new(1, 1), NodeKind::Branch);
        g.node_at_or_insert(Cell::new(1, 1), NodeKind::Food);
        assert_eq!(g.nodes[b as usize].kind, NodeKind::Food);
    }
}
