//! Constraint multigraph with paired directed edges and journaled removal.
//!
//! Topology (pieces, edges, CSR adjacency) is immutable and shared behind an
//! `Arc`, so the solver's two synchronized copies differ only in their alive
//! flags and degree counters. Edge ids are stable across copies.

use std::sync::Arc;

use thiserror::Error;

use crate::assignment::{Assignment, Value};
use crate::instance::{PieceConstraint, Rank1Piece};
use crate::linalg2::{Qubit1State, Qubit2State};
use crate::scalar::Real;

pub type Vertex = usize;
pub type EdgeId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge {0} is already dead")]
    DeadEdge(EdgeId),
    #[error("vertex {0} is already dead")]
    DeadVertex(Vertex),
}

/// A piece with its classification cached.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece<T> {
    pub term: usize,
    pub index: u8,
    pub constraint: PieceConstraint<T>,
    /// `|det Ψ| > tol_ent` for `Forbid` pieces.
    pub entangled: bool,
    /// `(x, y)` with `Ψ ≈ x⊗y` for product `Forbid` pieces. Boxed to keep
    /// pieces small; most are entangled in the large instances.
    pub factors: Option<Box<(Qubit1State<T>, Qubit1State<T>)>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct EdgeTopo {
    from: Vertex,
    to: Vertex,
    reverse: EdgeId,
    piece: usize,
    reversed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Topology<T> {
    n: usize,
    pieces: Vec<Piece<T>>,
    edges: Vec<EdgeTopo>,
    adj_start: Vec<usize>,
    adj: Vec<EdgeId>,
}

/// Constraint as seen along a directed edge, oriented `(from, to)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EdgeConstraint<T> {
    Forbid {
        state: Qubit2State<T>,
        entangled: bool,
        factors: Option<(Qubit1State<T>, Qubit1State<T>)>,
    },
    Allow {
        kernel: Qubit2State<T>,
    },
    ForbidSingle(Qubit1State<T>),
}

/// Read-only view of one directed edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectedEdge<T> {
    pub id: EdgeId,
    pub from: Vertex,
    pub to: Vertex,
    pub reverse: EdgeId,
    pub term: usize,
    /// 1 or 2 for halves of a rank-2 term, 0 otherwise.
    pub piece_index: u8,
    pub constraint: EdgeConstraint<T>,
}

impl<T> DirectedEdge<T> {
    pub fn is_self_loop(&self) -> bool {
        self.from == self.to
    }
}

/// Per-vertex counters kept together so one cache line serves an update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct VertexState {
    out_deg: u32,
    in_deg: u32,
    alive: bool,
}

/// Mutable graph state over a shared topology.
#[derive(Clone, Debug)]
pub struct ConstraintGraph<T> {
    topo: Arc<Topology<T>>,
    edge_alive: Vec<bool>,
    verts: Vec<VertexState>,
    alive_edges: usize,
    alive_vertices: usize,
}

impl<T: PartialEq> PartialEq for ConstraintGraph<T> {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.topo, &other.topo) || self.topo == other.topo)
            && self.edge_alive == other.edge_alive
            && self.verts == other.verts
            && self.alive_edges == other.alive_edges
            && self.alive_vertices == other.alive_vertices
    }
}

/// One directed edge pair per rank-1 or rank-3 piece, a self-loop per
/// single-qubit piece. Reverse edges carry the swapped state.
pub fn build_graph<T: Real>(pieces: &[Rank1Piece<T>], n: usize, tol_ent: T) -> ConstraintGraph<T> {
    let mut ps = Vec::with_capacity(pieces.len());
    let mut edges = Vec::with_capacity(2 * pieces.len());
    let mut out_deg = vec![0u32; n];
    let mut in_deg = vec![0u32; n];
    for (pid, p) in pieces.iter().enumerate() {
        let (entangled, factors) = match &p.constraint {
            PieceConstraint::Forbid(s) => {
                let ent = s.is_entangled(tol_ent);
                let f = if ent {
                    None
                } else {
                    let sch = s.schmidt();
                    Some(Box::new((sch.x1, sch.y1)))
                };
                (ent, f)
            }
            _ => (false, None),
        };
        ps.push(Piece {
            term: p.term,
            index: p.index,
            constraint: p.constraint.clone(),
            entangled,
            factors,
        });
        let (i, j) = p.qubits;
        let id = edges.len();
        if i == j {
            edges.push(EdgeTopo { from: i, to: i, reverse: id, piece: pid, reversed: false });
            out_deg[i] += 1;
            in_deg[i] += 1;
        } else {
            edges.push(EdgeTopo { from: i, to: j, reverse: id + 1, piece: pid, reversed: false });
            edges.push(EdgeTopo { from: j, to: i, reverse: id, piece: pid, reversed: true });
            out_deg[i] += 1;
            out_deg[j] += 1;
            in_deg[i] += 1;
            in_deg[j] += 1;
        }
    }
    let mut adj_start = vec![0usize; n + 1];
    for e in &edges {
        adj_start[e.from + 1] += 1;
    }
    for v in 0..n {
        adj_start[v + 1] += adj_start[v];
    }
    let mut fill = adj_start.clone();
    let mut adj = vec![0; edges.len()];
    for (id, e) in edges.iter().enumerate() {
        adj[fill[e.from]] = id;
        fill[e.from] += 1;
    }
    let verts: Vec<VertexState> = (0..n)
        .map(|v| VertexState { out_deg: out_deg[v], in_deg: in_deg[v], alive: out_deg[v] + in_deg[v] > 0 })
        .collect();
    let alive_vertices = verts.iter().filter(|s| s.alive).count();
    ConstraintGraph {
        edge_alive: vec![true; edges.len()],
        alive_edges: edges.len(),
        topo: Arc::new(Topology { n, pieces: ps, edges, adj_start, adj }),
        verts,
        alive_vertices,
    }
}

impl<T: Real> ConstraintGraph<T> {
    pub fn n(&self) -> usize {
        self.topo.n
    }

    pub fn num_edges_total(&self) -> usize {
        self.topo.edges.len()
    }

    pub fn num_alive_edges(&self) -> usize {
        self.alive_edges
    }

    pub fn num_alive_vertices(&self) -> usize {
        self.alive_vertices
    }

    pub fn is_empty(&self) -> bool {
        self.alive_edges == 0
    }

    pub fn is_edge_alive(&self, e: EdgeId) -> bool {
        self.edge_alive[e]
    }

    pub fn is_vertex_alive(&self, v: Vertex) -> bool {
        self.verts[v].alive
    }

    pub fn out_degree(&self, v: Vertex) -> u32 {
        self.verts[v].out_deg
    }

    pub fn in_degree(&self, v: Vertex) -> u32 {
        self.verts[v].in_deg
    }

    pub fn pieces(&self) -> &[Piece<T>] {
        &self.topo.pieces
    }

    /// Every outgoing edge ever built at `v`, dead ones included.
    pub fn out_edges(&self, v: Vertex) -> &[EdgeId] {
        &self.topo.adj[self.topo.adj_start[v]..self.topo.adj_start[v + 1]]
    }

    pub fn alive_out_edges(&self, v: Vertex) -> impl Iterator<Item = EdgeId> + '_ {
        self.out_edges(v).iter().copied().filter(|e| self.edge_alive[*e])
    }

    pub fn alive_edge_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        (0..self.edge_alive.len()).filter(|e| self.edge_alive[*e])
    }

    pub fn endpoints(&self, e: EdgeId) -> (Vertex, Vertex) {
        let t = &self.topo.edges[e];
        (t.from, t.to)
    }

    pub fn reverse(&self, e: EdgeId) -> EdgeId {
        self.topo.edges[e].reverse
    }

    pub fn piece_of(&self, e: EdgeId) -> &Piece<T> {
        &self.topo.pieces[self.topo.edges[e].piece]
    }

    /// `(piece, edge)` for the edge oriented as its term, in piece order.
    pub fn forward_edges(&self) -> impl Iterator<Item = (usize, EdgeId)> + '_ {
        self.topo
            .edges
            .iter()
            .enumerate()
            .filter(|(_, t)| !t.reversed)
            .map(|(id, t)| (t.piece, id))
    }

    pub fn edge(&self, e: EdgeId) -> DirectedEdge<T> {
        let t = &self.topo.edges[e];
        let p = &self.topo.pieces[t.piece];
        let constraint = match &p.constraint {
            PieceConstraint::Forbid(s) => EdgeConstraint::Forbid {
                state: if t.reversed { s.swap() } else { *s },
                entangled: p.entangled,
                factors: p.factors.as_deref().map(|&(x, y)| if t.reversed { (y, x) } else { (x, y) }),
            },
            PieceConstraint::Allow { kernel, .. } => EdgeConstraint::Allow {
                kernel: if t.reversed { kernel.swap() } else { *kernel },
            },
            PieceConstraint::ForbidSingle(s) => EdgeConstraint::ForbidSingle(*s),
        };
        DirectedEdge {
            id: e,
            from: t.from,
            to: t.to,
            reverse: t.reverse,
            term: p.term,
            piece_index: p.index,
            constraint,
        }
    }

    /// Kills `e`; an endpoint left without alive incident edges is removed too.
    pub fn kill_edge(&mut self, e: EdgeId, journal: &mut Journal<T>) -> Result<(), GraphError> {
        if !self.edge_alive[e] {
            return Err(GraphError::DeadEdge(e));
        }
        self.raw_kill_edge(e);
        journal.graph.push(GraphAction::EdgeKilled(e));
        let (from, to) = self.endpoints(e);
        for v in [from, to] {
            let st = &mut self.verts[v];
            if st.alive && st.out_deg + st.in_deg == 0 {
                st.alive = false;
                self.alive_vertices -= 1;
                journal.graph.push(GraphAction::VertexKilled(v));
            }
        }
        Ok(())
    }

    /// Kills every alive edge leaving `v` together with its reverse, then `v`.
    pub fn kill_vertex(&mut self, v: Vertex, journal: &mut Journal<T>) -> Result<(), GraphError> {
        if !self.verts[v].alive {
            return Err(GraphError::DeadVertex(v));
        }
        let topo = Arc::clone(&self.topo);
        for &e in &topo.adj[topo.adj_start[v]..topo.adj_start[v + 1]] {
            if self.edge_alive[e] {
                self.kill_edge(e, journal)?;
            }
            let r = topo.edges[e].reverse;
            if self.edge_alive[r] {
                self.kill_edge(r, journal)?;
            }
        }
        if self.verts[v].alive {
            self.verts[v].alive = false;
            self.alive_vertices -= 1;
            journal.graph.push(GraphAction::VertexKilled(v));
        }
        Ok(())
    }

    fn raw_kill_edge(&mut self, e: EdgeId) {
        let t = self.topo.edges[e];
        self.edge_alive[e] = false;
        self.verts[t.from].out_deg -= 1;
        self.verts[t.to].in_deg -= 1;
        self.alive_edges -= 1;
    }

    fn revive_edge(&mut self, e: EdgeId) {
        let t = self.topo.edges[e];
        self.edge_alive[e] = true;
        self.verts[t.from].out_deg += 1;
        self.verts[t.to].in_deg += 1;
        self.alive_edges += 1;
    }

    /// Checks the derived counters against the alive flags. Linear time.
    pub fn check_consistency(&self) -> Result<(), String> {
        let n = self.n();
        let mut out = vec![0u32; n];
        let mut inn = vec![0u32; n];
        let mut alive = 0;
        for (id, t) in self.topo.edges.iter().enumerate() {
            if self.edge_alive[id] {
                out[t.from] += 1;
                inn[t.to] += 1;
                alive += 1;
            }
            if self.topo.edges[t.reverse].reverse != id {
                return Err(format!("reverse of edge {id} is not an involution"));
            }
        }
        if (0..n).any(|v| out[v] != self.verts[v].out_deg || inn[v] != self.verts[v].in_deg) {
            return Err("degree counters drifted".into());
        }
        if alive != self.alive_edges || out.iter().map(|d| *d as usize).sum::<usize>() != alive {
            return Err("edge count drifted".into());
        }
        let va = self.verts.iter().filter(|s| s.alive).count();
        if va != self.alive_vertices {
            return Err("vertex count drifted".into());
        }
        for v in 0..n {
            if out[v] + inn[v] > 0 && !self.verts[v].alive {
                return Err(format!("vertex {v} has alive edges but is dead"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphAction {
    EdgeKilled(EdgeId),
    VertexKilled(Vertex),
}

/// Ordered log of graph removals and value overwrites since the last clear.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Journal<T> {
    graph: Vec<GraphAction>,
    writes: Vec<(Vertex, Value<T>)>,
}

impl<T: Real> Journal<T> {
    pub fn new() -> Self {
        Journal { graph: Vec::new(), writes: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.graph.is_empty() && self.writes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.graph.len() + self.writes.len()
    }

    pub fn graph_actions(&self) -> &[GraphAction] {
        &self.graph
    }

    pub(crate) fn record_write(&mut self, v: Vertex, previous: Value<T>) {
        self.writes.push((v, previous));
    }

    pub fn clear(&mut self) {
        self.graph.clear();
        self.writes.clear();
    }

    /// Undoes every logged action in reverse order and empties the journal.
    pub fn rollback(&mut self, g: &mut ConstraintGraph<T>, s: &mut Assignment<T>) {
        while let Some(a) = self.graph.pop() {
            match a {
                GraphAction::EdgeKilled(e) => g.revive_edge(e),
                GraphAction::VertexKilled(v) => {
                    g.verts[v].alive = true;
                    g.alive_vertices += 1;
                }
            }
        }
        while let Some((v, prev)) = self.writes.pop() {
            s.restore(v, prev);
        }
    }

    /// Applies the logged actions to another copy that was identical to this
    /// journal's graph when logging started. Written vertices take their
    /// current value from `source`. The journal is kept.
    pub fn replay(&self, source: &Assignment<T>, g: &mut ConstraintGraph<T>, s: &mut Assignment<T>) {
        for a in &self.graph {
            match *a {
                GraphAction::EdgeKilled(e) => g.raw_kill_edge(e),
                GraphAction::VertexKilled(v) => {
                    g.verts[v].alive = false;
                    g.alive_vertices -= 1;
                }
            }
        }
        for (v, _) in &self.writes {
            s.restore(*v, source.value(*v).clone());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{rank1_decompose, Instance, Term};
    use crate::linalg2::Qubit2State;

    fn fig1() -> ConstraintGraph<f64> {
        // 0-based: Π01 rank 2, Π03 rank 3, Π12 rank 1, Π33 single
        let b = Qubit2State::<f64>::basis;
        let inst = Instance::new(
            4,
            vec![
                Term::Pair { qubits: (0, 1), states: vec![b(0), b(1)] },
                Term::Pair { qubits: (0, 3), states: vec![b(0), b(1), b(2)] },
                Term::Pair { qubits: (1, 2), states: vec![Qubit2State::singlet()] },
                Term::Single { qubit: 3, state: Qubit1State::zero() },
            ],
        )
        .unwrap();
        build_graph(&rank1_decompose(&inst), 4, 1e-10)
    }

    #[test]
    fn figure_one_counts() {
        let g = fig1();
        let loops = (0..g.num_edges_total()).filter(|e| g.edge(*e).is_self_loop()).count();
        assert_eq!(g.num_edges_total() - loops, 8);
        assert_eq!(loops, 1);
        assert_eq!(g.out_degree(0), 3);
        assert_eq!(g.num_alive_vertices(), 4);
        g.check_consistency().unwrap();
    }

    #[test]
    fn reverse_edges_carry_swapped_state() {
        let g = fig1();
        for e in 0..g.num_edges_total() {
            let r = g.reverse(e);
            assert_eq!(g.reverse(r), e);
            let (a, b) = (g.edge(e), g.edge(r));
            assert_eq!((a.from, a.to), (b.to, b.from));
            if let (EdgeConstraint::Forbid { state: s, .. }, EdgeConstraint::Forbid { state: t, .. }) =
                (a.constraint, b.constraint)
            {
                assert_eq!(s.swap(), t);
            }
        }
    }

    #[test]
    fn trivial_graphs() {
        let inst = Instance::new(
            2,
            vec![Term::Pair { qubits: (0, 1), states: vec![Qubit2State::<f64>::basis(0)] }],
        )
        .unwrap();
        let g = build_graph(&rank1_decompose(&inst), 2, 1e-10);
        assert_eq!(g.num_alive_edges(), 2);
        assert_eq!(g.num_alive_vertices(), 2);
        let g = build_graph::<f64>(&[], 3, 1e-10);
        assert!(g.is_empty());
        assert_eq!(g.num_alive_vertices(), 0);
    }

    #[test]
    fn kill_then_undo_restores_structure() {
        let mut g = fig1();
        let orig = g.clone();
        let mut s = Assignment::new(4, Default::default());
        let mut j = Journal::new();
        g.kill_edge(4, &mut j).unwrap();
        g.kill_edge(g.reverse(4), &mut j).unwrap();
        assert_eq!(g.kill_edge(4, &mut j), Err(GraphError::DeadEdge(4)));
        assert_ne!(g, orig);
        j.rollback(&mut g, &mut s);
        assert!(j.is_empty());
        assert_eq!(g, orig);
    }

    #[test]
    fn isolated_vertex_is_removed() {
        let mut g = fig1();
        let mut j = Journal::new();
        let out: Vec<_> = g.out_edges(2).to_vec();
        for e in out {
            g.kill_edge(e, &mut j).unwrap();
            g.kill_edge(g.reverse(e), &mut j).unwrap();
        }
        assert!(!g.is_vertex_alive(2));
        assert!(j.graph_actions().contains(&GraphAction::VertexKilled(2)));
        g.kill_vertex(0, &mut j).unwrap();
        assert!(!g.is_vertex_alive(0));
        assert_eq!(g.kill_vertex(0, &mut j), Err(GraphError::DeadVertex(0)));
        g.check_consistency().unwrap();
    }

    #[test]
    fn replay_mirrors_a_copy() {
        let mut g0 = fig1();
        let mut g1 = g0.clone();
        let mut s0 = Assignment::new(4, Default::default());
        let mut s1 = s0.clone();
        let mut j = Journal::new();
        s0.write(3, Value::Single(Qubit1State::one()), &mut j);
        g0.kill_edge(6, &mut j).unwrap();
        g0.kill_vertex(1, &mut j).unwrap();
        j.replay(&s0, &mut g1, &mut s1);
        assert_eq!(g0, g1);
        assert_eq!(s0, s1);
        g1.check_consistency().unwrap();
    }

    #[test]
    fn forward_edge_lookup() {
        let g = fig1();
        let fwd: Vec<_> = g.forward_edges().collect();
        assert_eq!(fwd.len(), g.pieces().len());
        for (k, (p, e)) in fwd.into_iter().enumerate() {
            assert_eq!(p, k);
            let (i, j) = g.endpoints(e);
            assert!(i <= j);
        }
    }
}
