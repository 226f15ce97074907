//! Single-edge propagation and the journaled breadth-first propagation run.
//!
//! A run is a resumable stepper so two runs can be interleaved one primitive
//! step at a time. A primitive step is one dequeue, one adjacency entry
//! (dead entries included) or one cleanup edge.

use std::collections::VecDeque;

use thiserror::Error;

use crate::assignment::{Assignment, Value, WriteResult};
use crate::graph::{build_graph, ConstraintGraph, EdgeConstraint, EdgeId, Journal, Vertex};
use crate::instance::{rank1_decompose, Instance};
use crate::linalg2::{bilinear_perp, Qubit1State, Qubit2State};
use crate::scalar::{Real, Tolerances};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EdgePropResult<T> {
    Propagates(Qubit1State<T>),
    /// The source value already satisfies the edge.
    NoPropagation,
    /// No value at the target can satisfy the edge.
    Infeasible,
}

/// `β` with `Σ conj(ψ_ab) α_a β_b = 0`, i.e. the bilinear perpendicular of `Ψᴴα`.
fn entangled_image<T: Real>(psi: &Qubit2State<T>, alpha: &Qubit1State<T>) -> Qubit1State<T> {
    let c = psi.amps();
    let a = alpha.amps();
    let v0 = c[0].conj() * a[0] + c[2].conj() * a[1];
    let v1 = c[1].conj() * a[0] + c[3].conj() * a[1];
    bilinear_perp([v0, v1]).unwrap_or_else(Qubit1State::zero)
}

/// Propagation of `source` across a rank-1 constraint `psi` oriented (from, to).
pub fn propagate_edge<T: Real>(
    psi: &Qubit2State<T>,
    source: &Value<T>,
    tol: &Tolerances<T>,
) -> EdgePropResult<T> {
    let entangled = psi.is_entangled(tol.ent);
    let factors = if entangled {
        None
    } else {
        let s = psi.schmidt();
        Some((s.x1, s.y1))
    };
    propagate_forbid(psi, entangled, factors, source, tol)
}

fn propagate_forbid<T: Real>(
    psi: &Qubit2State<T>,
    entangled: bool,
    factors: Option<(Qubit1State<T>, Qubit1State<T>)>,
    source: &Value<T>,
    tol: &Tolerances<T>,
) -> EdgePropResult<T> {
    match (source, factors) {
        (Value::Single(alpha), _) if entangled => EdgePropResult::Propagates(entangled_image(psi, alpha)),
        (Value::Single(alpha), Some((x, y))) => {
            if x.overlap(alpha) <= tol.sat {
                EdgePropResult::NoPropagation
            } else {
                EdgePropResult::Propagates(y.perp())
            }
        }
        (Value::Pair(_), Some((_, y))) if !entangled => EdgePropResult::Propagates(y.perp()),
        _ => EdgePropResult::Infeasible,
    }
}

/// Propagation across any edge kind; `to` is needed to detect pair partners.
fn propagate_along<T: Real>(
    c: &EdgeConstraint<T>,
    to: Vertex,
    source: &Value<T>,
    tol: &Tolerances<T>,
) -> EdgePropResult<T> {
    match *c {
        EdgeConstraint::Forbid { state, entangled, factors } => {
            if let Value::Pair(p) = source {
                if p.partner == to {
                    return if state.overlap(&p.oriented()) <= tol.sat {
                        EdgePropResult::NoPropagation
                    } else {
                        EdgePropResult::Infeasible
                    };
                }
            }
            propagate_forbid(&state, entangled, factors, source, tol)
        }
        EdgeConstraint::ForbidSingle(phi) => match source {
            Value::Single(alpha) if phi.overlap(alpha) <= tol.sat => EdgePropResult::NoPropagation,
            Value::Single(_) => EdgePropResult::Propagates(phi.perp()),
            _ => EdgePropResult::Infeasible,
        },
        EdgeConstraint::Allow { kernel } => {
            // only reachable if a rank-3 edge outlived its removal phase
            if kernel.is_entangled(tol.ent) {
                return EdgePropResult::Infeasible;
            }
            let s = kernel.schmidt();
            match source {
                Value::Single(alpha) if s.x1.eq_up_to_phase(alpha, tol.eq) => EdgePropResult::Propagates(s.y1),
                _ => EdgePropResult::Infeasible,
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConflictKind {
    /// A propagated value disagreed with the value already at the target.
    Mismatch,
    /// The edge cannot be satisfied given the source value.
    Infeasible,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConflictInfo {
    /// The vertex whose value became incoherent.
    pub vertex: Vertex,
    /// The edge being processed, oriented from the dequeued vertex.
    pub edge: EdgeId,
    pub kind: ConflictKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PropOutcome {
    Success,
    Conflict(ConflictInfo),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PropError {
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
}

const NO_EDGE: EdgeId = EdgeId::MAX;

/// Run membership and BFS tree edge of a vertex, valid while `epoch` is current.
#[derive(Clone, Copy, Debug)]
struct RunMark {
    epoch: u32,
    parent: EdgeId,
}

/// An assignment and graph copy together with reusable per-run scratch.
#[derive(Clone, Debug)]
pub struct Workspace<T> {
    pub assignment: Assignment<T>,
    pub graph: ConstraintGraph<T>,
    pub journal: Journal<T>,
    /// Primitive steps taken by all runs on this workspace.
    pub steps: u64,
    epoch: u32,
    marks: Vec<RunMark>,
    queue: VecDeque<Vertex>,
    satisfied: Vec<EdgeId>,
    root: Vertex,
}

impl<T: Real> Workspace<T> {
    pub fn new(assignment: Assignment<T>, graph: ConstraintGraph<T>) -> Self {
        let n = graph.n();
        Workspace {
            assignment,
            graph,
            journal: Journal::new(),
            steps: 0,
            epoch: 0,
            marks: vec![RunMark { epoch: 0, parent: NO_EDGE }; n],
            queue: VecDeque::new(),
            satisfied: Vec::new(),
            root: 0,
        }
    }

    /// Fresh workspace for the rank-1 decomposition of `inst`.
    pub fn from_instance(inst: &Instance<T>, tol: Tolerances<T>) -> Self {
        let pieces = rank1_decompose(inst);
        Self::new(Assignment::new(inst.n(), tol), build_graph(&pieces, inst.n(), tol.ent))
    }

    fn next_epoch(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.marks.iter_mut().for_each(|m| m.epoch = 0);
            self.epoch = 1;
        }
    }

    fn enqueue(&mut self, v: Vertex, parent: EdgeId) {
        let m = &mut self.marks[v];
        if m.epoch != self.epoch {
            *m = RunMark { epoch: self.epoch, parent };
            self.queue.push_back(v);
        }
    }

    fn in_run(&self, v: Vertex) -> bool {
        self.marks[v].epoch == self.epoch
    }

    /// Tree edges from the last run's root to `v`, in order.
    ///
    /// Empty for the root or for vertices the last run did not reach.
    pub fn tree_path(&self, v: Vertex) -> Vec<EdgeId> {
        let mut path = Vec::new();
        let mut cur = v;
        while self.in_run(cur) && cur != self.root {
            let e = self.marks[cur].parent;
            path.push(e);
            cur = self.graph.endpoints(e).0;
        }
        path.reverse();
        path
    }

    /// Whether `a` lies on the last run's tree path from the root to `v`.
    pub fn is_tree_ancestor(&self, a: Vertex, v: Vertex) -> bool {
        let mut cur = v;
        loop {
            if cur == a {
                return true;
            }
            if !self.in_run(cur) || cur == self.root {
                return false;
            }
            cur = self.graph.endpoints(self.marks[cur].parent).0;
        }
    }

    pub fn root(&self) -> Vertex {
        self.root
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Scan,
    Cleanup(usize),
    Done(PropOutcome),
}

/// A propagation run in progress on one workspace.
#[derive(Clone, Debug)]
pub struct Propagation {
    cursor: Option<(Vertex, usize)>,
    phase: Phase,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    Running,
    Finished(PropOutcome),
}

impl Propagation {
    /// Writes `delta` at `root` and prepares the breadth-first run.
    pub fn start<T: Real>(ws: &mut Workspace<T>, root: Vertex, delta: Value<T>) -> Result<Self, PropError> {
        if root >= ws.graph.n() {
            return Err(PropError::PreconditionViolated(format!("vertex {root} out of range")));
        }
        ws.next_epoch();
        ws.queue.clear();
        ws.satisfied.clear();
        ws.root = root;
        if !ws.assignment.accepts(root, &delta) {
            return Err(PropError::PreconditionViolated(format!(
                "vertex {root} already holds a different value"
            )));
        }
        ws.assignment.write(root, delta, &mut ws.journal);
        ws.enqueue(root, NO_EDGE);
        Ok(Propagation { cursor: None, phase: Phase::Scan })
    }

    pub fn outcome(&self) -> Option<PropOutcome> {
        match self.phase {
            Phase::Done(o) => Some(o),
            _ => None,
        }
    }

    pub fn step<T: Real>(&mut self, ws: &mut Workspace<T>) -> Step {
        match self.phase {
            Phase::Done(o) => Step::Finished(o),
            Phase::Cleanup(idx) => {
                if idx == ws.satisfied.len() {
                    self.phase = Phase::Done(PropOutcome::Success);
                    return Step::Finished(PropOutcome::Success);
                }
                ws.steps += 1;
                let r = ws.graph.reverse(ws.satisfied[idx]);
                if ws.graph.is_edge_alive(r) {
                    ws.graph.kill_edge(r, &mut ws.journal).expect("alive edge");
                }
                self.phase = Phase::Cleanup(idx + 1);
                Step::Running
            }
            Phase::Scan => {
                let Some((j, idx)) = self.cursor else {
                    ws.steps += 1;
                    match ws.queue.pop_front() {
                        Some(j) => self.cursor = Some((j, 0)),
                        None => self.phase = Phase::Cleanup(0),
                    }
                    return Step::Running;
                };
                let adj = ws.graph.out_edges(j);
                if idx >= adj.len() {
                    self.cursor = None;
                    return self.step(ws);
                }
                let e = adj[idx];
                self.cursor = Some((j, idx + 1));
                ws.steps += 1;
                if !ws.graph.is_edge_alive(e) {
                    return Step::Running;
                }
                match process_edge(ws, j, e) {
                    Some(c) => {
                        let o = PropOutcome::Conflict(c);
                        self.phase = Phase::Done(o);
                        Step::Finished(o)
                    }
                    None => Step::Running,
                }
            }
        }
    }

    /// Runs to completion.
    pub fn finish<T: Real>(&mut self, ws: &mut Workspace<T>) -> PropOutcome {
        loop {
            if let Step::Finished(o) = self.step(ws) {
                return o;
            }
        }
    }
}

fn process_edge<T: Real>(ws: &mut Workspace<T>, j: Vertex, e: EdgeId) -> Option<ConflictInfo> {
    let edge = ws.graph.edge(e);
    let k = edge.to;
    ws.graph.kill_edge(e, &mut ws.journal).expect("alive edge");
    let tol = *ws.assignment.tolerances();
    let res = propagate_along(&edge.constraint, k, ws.assignment.value(j), &tol);
    match res {
        EdgePropResult::Propagates(beta) => {
            match ws.assignment.write(k, Value::Single(beta), &mut ws.journal) {
                WriteResult::Fresh => {
                    ws.enqueue(k, e);
                    None
                }
                WriteResult::SameUpToPhase => None,
                WriteResult::ConflictRaised => Some(ConflictInfo { vertex: k, edge: e, kind: ConflictKind::Mismatch }),
            }
        }
        EdgePropResult::NoPropagation => {
            ws.satisfied.push(e);
            None
        }
        EdgePropResult::Infeasible => Some(ConflictInfo { vertex: k, edge: e, kind: ConflictKind::Infeasible }),
    }
}

/// Runs a whole propagation from `root` with value `delta`.
pub fn propagation<T: Real>(ws: &mut Workspace<T>, root: Vertex, delta: Value<T>) -> Result<PropOutcome, PropError> {
    let mut p = Propagation::start(ws, root, delta)?;
    Ok(p.finish(ws))
}
