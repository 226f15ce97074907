//! The four-phase driver: maximal-rank removal, settling, product-edge
//! removal by parallel propagation, and probing of the entangled remainder.

use std::fmt;

use thiserror::Error;

use crate::assignment::{Solution, Value};
use crate::graph::{build_graph, EdgeConstraint, EdgeId, Vertex};
use crate::instance::{rank1_decompose, Instance, PieceConstraint};
use crate::linalg2::{product_in_span, Mat2, Qubit1State, Qubit2State};
use crate::propagate::{propagation, PropOutcome, Propagation, Step, Workspace};
use crate::assignment::Assignment;
use crate::scalar::{Real, Tolerances};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig<T> {
    pub tol: Tolerances<T>,
    /// Value assigned by probes.
    pub probe: Qubit1State<T>,
    /// Compare the two copies after every stage (linear cost per stage).
    pub verify_mirror: bool,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        SolverConfig {
            tol: T::default_tolerances(),
            probe: Qubit1State::zero(),
            verify_mirror: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UnsatCause {
    /// Maximal-rank terms demand different values at `qubit`.
    MaxRankIncoherent { qubit: usize, term: usize },
    /// A pair-assigned qubit has an entangled constraint to a third qubit.
    PairTouchesEntangled { qubit: usize, term: usize },
    /// Forced values disagree at `qubit` across `term`.
    PropagationConflict { qubit: usize, term: usize },
    /// Both alternatives of a product constraint fail.
    BothBranchesFail { branches: [usize; 2], conflicts: [usize; 2] },
}

impl fmt::Display for UnsatCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnsatCause::MaxRankIncoherent { qubit, term } => {
                write!(f, "maximal-rank terms disagree at qubit {qubit} (term {term})")
            }
            UnsatCause::PairTouchesEntangled { qubit, term } => write!(
                f,
                "qubit {qubit} is fixed to an entangled pair but term {term} entangles it with another qubit"
            ),
            UnsatCause::PropagationConflict { qubit, term } => {
                write!(f, "forced values conflict at qubit {qubit} via term {term}")
            }
            UnsatCause::BothBranchesFail { branches, conflicts } => write!(
                f,
                "both branches fail: from qubit {} (conflict at {}) and from qubit {} (conflict at {})",
                branches[0], conflicts[0], branches[1], conflicts[1]
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolveOutcome<T> {
    Sat(Solution<T>),
    Unsat(UnsatCause),
}

impl<T> SolveOutcome<T> {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveOutcome::Sat(_))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    /// Primitive steps over both copies plus driver bookkeeping.
    pub steps: u64,
    pub probes: u64,
    pub parallel_runs: u64,
    /// Directed edges in the initial graph.
    pub edges: usize,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SlideError {
    #[error("constraint {0} along the path is not entangled")]
    NotEntangled(usize),
    #[error("empty path")]
    EmptyPath,
}

/// Two synchronized assignment/graph copies over one topology.
#[derive(Clone, Debug)]
pub struct SolverState<T> {
    pub copies: [Workspace<T>; 2],
    pub config: SolverConfig<T>,
    pub stats: SolveStats,
    overhead: u64,
}

impl<T: Real> SolverState<T> {
    pub fn new(inst: &Instance<T>, config: SolverConfig<T>) -> Self {
        let pieces = rank1_decompose(inst);
        let graph = build_graph(&pieces, inst.n(), config.tol.ent);
        let ws = Workspace::new(Assignment::new(inst.n(), config.tol), graph);
        let stats = SolveStats { edges: ws.graph.num_edges_total(), ..Default::default() };
        SolverState { copies: [ws.clone(), ws], config, stats, overhead: 0 }
    }

    /// Structural equality of the two copies.
    pub fn copies_agree(&self) -> bool {
        let [a, b] = &self.copies;
        a.graph == b.graph && a.assignment == b.assignment
    }

    fn check_mirror(&self, stage: &str) {
        if self.config.verify_mirror {
            assert!(self.copies_agree(), "copies diverged after {stage}");
            for c in &self.copies {
                if let Err(e) = c.graph.check_consistency() {
                    panic!("graph inconsistent after {stage}: {e}");
                }
            }
        }
    }

    /// Replays copy `from`'s journal onto the other copy and clears it.
    fn mirror(&mut self, from: usize) {
        let (a, b) = self.copies.split_at_mut(1);
        let (src, dst) = if from == 0 { (&mut a[0], &mut b[0]) } else { (&mut b[0], &mut a[0]) };
        self.overhead += src.journal.len() as u64;
        src.journal.replay(&src.assignment, &mut dst.graph, &mut dst.assignment);
        src.journal.clear();
    }

    pub fn total_steps(&self) -> u64 {
        self.copies[0].steps + self.copies[1].steps + self.overhead
    }

    fn term_of(&self, e: EdgeId) -> usize {
        self.copies[0].graph.piece_of(e).term
    }
}

/// Satisfies every single-qubit and rank-3 term, then drops satisfied edges.
pub fn max_rank_removal<T: Real>(state: &mut SolverState<T>) -> Result<(), UnsatCause> {
    let tol = state.config.tol;
    let ws = &mut state.copies[0];
    let mut work = 0u64;
    let forward: Vec<(usize, EdgeId)> = ws.graph.forward_edges().collect();
    for &(pid, e) in &forward {
        work += 1;
        let piece = &ws.graph.pieces()[pid];
        let term = piece.term;
        let (i, j) = ws.graph.endpoints(e);
        let writes: Vec<(Vertex, Value<T>)> = match &piece.constraint {
            PieceConstraint::Forbid(_) => continue,
            PieceConstraint::ForbidSingle(phi) => vec![(i, Value::Single(phi.perp()))],
            PieceConstraint::Allow { kernel, .. } => {
                if kernel.is_entangled(tol.ent) {
                    vec![(i, Value::pair(*kernel, j, true)), (j, Value::pair(*kernel, i, false))]
                } else {
                    let s = kernel.schmidt();
                    vec![(i, Value::Single(s.x1)), (j, Value::Single(s.y1))]
                }
            }
        };
        for (v, val) in writes {
            if ws.assignment.write(v, val, &mut ws.journal) == crate::assignment::WriteResult::ConflictRaised {
                return Err(UnsatCause::MaxRankIncoherent { qubit: v, term });
            }
        }
    }

    for v in 0..ws.assignment.n() {
        work += 1;
        let Value::Pair(p) = ws.assignment.value(v) else { continue };
        let partner = p.partner;
        for &e in ws.graph.out_edges(v) {
            work += 1;
            let edge = ws.graph.edge(e);
            if let EdgeConstraint::Forbid { entangled: true, .. } = edge.constraint {
                if edge.to != partner {
                    return Err(UnsatCause::PairTouchesEntangled { qubit: v, term: edge.term });
                }
            }
        }
    }

    for e in 0..ws.graph.num_edges_total() {
        work += 1;
        if !ws.graph.is_edge_alive(e) {
            continue;
        }
        let edge = ws.graph.edge(e);
        let sat = ws.assignment.satisfies(&edge).map_err(|err| match err {
            crate::assignment::AssignmentError::IncoherentAssignment(q) => {
                UnsatCause::MaxRankIncoherent { qubit: q, term: edge.term }
            }
        })?;
        if sat {
            ws.graph.kill_edge(e, &mut ws.journal).expect("alive");
            if ws.graph.is_edge_alive(edge.reverse) {
                ws.graph.kill_edge(edge.reverse, &mut ws.journal).expect("alive");
            }
        }
    }
    ws.journal.clear();
    state.copies[1] = state.copies[0].clone();
    state.overhead += work;
    state.check_mirror("maximal-rank removal");
    Ok(())
}

/// Propagates every value assigned so far until the assignment is closed.
pub fn settle<T: Real>(state: &mut SolverState<T>) -> Result<(), UnsatCause> {
    let n = state.copies[0].assignment.n();
    for v in 0..n {
        state.overhead += 1;
        let ws = &mut state.copies[0];
        if !ws.graph.is_vertex_alive(v) || ws.assignment.value(v).is_unassigned() {
            continue;
        }
        let val = ws.assignment.value(v).clone();
        let out = propagation(ws, v, val).expect("value already present");
        if let PropOutcome::Conflict(c) = out {
            return Err(UnsatCause::PropagationConflict { qubit: c.vertex, term: state.term_of(c.edge) });
        }
        state.mirror(0);
    }
    state.check_mirror("settling");
    Ok(())
}

/// Runs propagation of `alpha0` at `i0` on copy 0 and of `alpha1` at `i1` on
/// copy 1, one primitive step each in turn, and keeps the first success.
pub fn parallel_propagation<T: Real>(
    state: &mut SolverState<T>,
    i0: Vertex,
    alpha0: Qubit1State<T>,
    i1: Vertex,
    alpha1: Qubit1State<T>,
) -> Result<(), UnsatCause> {
    state.stats.parallel_runs += 1;
    let starts = [(i0, alpha0), (i1, alpha1)];
    let mut runs: [Option<Propagation>; 2] = [None, None];
    let mut results: [Option<PropOutcome>; 2] = [None, None];
    for b in 0..2 {
        let (v, a) = starts[b];
        match Propagation::start(&mut state.copies[b], v, Value::Single(a)) {
            Ok(p) => runs[b] = Some(p),
            Err(_) => {
                results[b] = Some(PropOutcome::Conflict(crate::propagate::ConflictInfo {
                    vertex: v,
                    edge: EdgeId::MAX,
                    kind: crate::propagate::ConflictKind::Mismatch,
                }))
            }
        }
    }
    let winner = 'race: loop {
        for b in 0..2 {
            if results[b].is_some() {
                continue;
            }
            let run = runs[b].as_mut().expect("started");
            if let Step::Finished(o) = run.step(&mut state.copies[b]) {
                results[b] = Some(o);
                if o == PropOutcome::Success {
                    break 'race Some(b);
                }
            }
        }
        if results.iter().all(|r| matches!(r, Some(PropOutcome::Conflict(_)))) {
            break None;
        }
    };
    match winner {
        Some(w) => {
            let l = 1 - w;
            {
                let ws = &mut state.copies[l];
                state.overhead += ws.journal.len() as u64;
                ws.journal.rollback(&mut ws.graph, &mut ws.assignment);
            }
            state.mirror(w);
            state.check_mirror("parallel propagation");
            Ok(())
        }
        None => {
            let mut conflicts = [0; 2];
            for b in 0..2 {
                if let Some(PropOutcome::Conflict(c)) = results[b] {
                    conflicts[b] = c.vertex;
                }
                let ws = &mut state.copies[b];
                ws.journal.rollback(&mut ws.graph, &mut ws.assignment);
            }
            Err(UnsatCause::BothBranchesFail { branches: [i0, i1], conflicts })
        }
    }
}

/// The linear map `α -> β` of propagation across `psi`: `β ∝ J Ψᴴ α`.
pub fn propagation_map<T: Real>(psi: &Qubit2State<T>) -> Mat2<T> {
    Mat2::antisymmetric() * psi.matrix().adjoint()
}

/// Replaces `psi1` on `(i, j)` by an equivalent constraint on `(i, k)` across
/// the entangled `psi2` on `(j, k)`.
///
/// With the Schmidt form `psi2 = λ1 x1⊗y1 + λ2 x2⊗y2`, the map `T` sends
/// `x1 -> y2/λ1` and `x2 -> -y1/λ2`, and the result is `(I⊗T) psi1`.
pub fn slide_edge<T: Real>(
    psi1: &Qubit2State<T>,
    psi2: &Qubit2State<T>,
    tol_ent: T,
) -> Result<Qubit2State<T>, SlideError> {
    if !psi2.is_entangled(tol_ent) {
        return Err(SlideError::NotEntangled(1));
    }
    let s = psi2.schmidt();
    let (x1, x2, y1, y2) = (s.x1.amps(), s.x2.amps(), s.y1.amps(), s.y2.amps());
    let (l1, l2) = (s.lambda1, s.lambda2);
    let t = |c: usize, b: usize| y2[c] * x1[b].conj() / l1 - y1[c] * x2[b].conj() / l2;
    let tm = Mat2::new(t(0, 0), t(0, 1), t(1, 0), t(1, 1));
    let m = psi1.matrix() * tm.transpose();
    Ok(Qubit2State::from_matrix(&m).expect("T is invertible"))
}

/// Left fold of `slide_edge` along a path of constraints `i0 -> ... -> ik`.
pub fn slide_path<T: Real>(path: &[Qubit2State<T>], tol_ent: T) -> Result<Qubit2State<T>, SlideError> {
    let (first, rest) = path.split_first().ok_or(SlideError::EmptyPath)?;
    if !first.is_entangled(tol_ent) {
        return Err(SlideError::NotEntangled(0));
    }
    let mut acc = *first;
    for (k, psi) in rest.iter().enumerate() {
        acc = slide_edge(&acc, psi, tol_ent).map_err(|_| SlideError::NotEntangled(k + 1))?;
    }
    Ok(acc)
}

fn path_states<T: Real>(ws: &Workspace<T>, path: &[EdgeId]) -> Vec<Qubit2State<T>> {
    path.iter()
        .map(|&e| match ws.graph.edge(e).constraint {
            EdgeConstraint::Forbid { state, .. } => state,
            _ => unreachable!("only rank-1 constraints remain when probing"),
        })
        .collect()
}

/// Probes `i` with the configured value; on a conflict, derives a virtual
/// product constraint from two propagation paths and branches on it.
pub fn probe_propagation<T: Real>(state: &mut SolverState<T>, i: Vertex) -> Result<(), UnsatCause> {
    state.stats.probes += 1;
    let tol = state.config.tol;
    let probe = state.config.probe;
    let ws = &mut state.copies[0];
    let outcome = propagation(ws, i, Value::Single(probe)).map_err(|_| UnsatCause::PropagationConflict {
        qubit: i,
        term: usize::MAX,
    })?;
    let c = match outcome {
        PropOutcome::Success => {
            state.mirror(0);
            state.check_mirror("probe");
            return Ok(());
        }
        PropOutcome::Conflict(c) => c,
    };
    let e = c.edge;
    let (j, k) = ws.graph.endpoints(e);
    let (p1, p2, target) = if ws.is_tree_ancestor(k, j) {
        let mut p2 = ws.tree_path(k);
        p2.push(ws.graph.reverse(e));
        (ws.tree_path(j), p2, j)
    } else {
        let mut p2 = ws.tree_path(j);
        p2.push(e);
        (ws.tree_path(k), p2, k)
    };
    let term = ws.graph.piece_of(e).term;
    let fail = UnsatCause::PropagationConflict { qubit: k, term };
    let g1 = slide_path(&path_states(ws, &p1), tol.ent).map_err(|_| fail.clone())?;
    let g2 = slide_path(&path_states(ws, &p2), tol.ent).map_err(|_| fail.clone())?;
    let (a, b) = product_in_span(&g1, &g2, &tol).map_err(|_| fail)?;
    ws.journal.rollback(&mut ws.graph, &mut ws.assignment);
    state.overhead += (p1.len() + p2.len()) as u64;
    parallel_propagation(state, i, a.perp(), target, b.perp())
}

fn entangled_only<T: Real>(state: &SolverState<T>) -> bool {
    let g = &state.copies[0].graph;
    g.alive_edge_ids()
        .all(|e| matches!(g.edge(e).constraint, EdgeConstraint::Forbid { entangled: true, .. }))
}

/// Decides satisfiability and returns a product-form ground state when one exists.
pub fn solve<T: Real>(inst: &Instance<T>, config: &SolverConfig<T>) -> SolveOutcome<T> {
    solve_with_stats(inst, config).0
}

pub fn solve_with_stats<T: Real>(inst: &Instance<T>, config: &SolverConfig<T>) -> (SolveOutcome<T>, SolveStats) {
    let mut state = SolverState::new(inst, config.clone());
    let res = run(&mut state);
    state.stats.steps = state.total_steps();
    let out = match res {
        Ok(()) => match state.copies[0].assignment.total_extension() {
            Ok(sol) => SolveOutcome::Sat(sol),
            Err(crate::assignment::AssignmentError::IncoherentAssignment(q)) => {
                SolveOutcome::Unsat(UnsatCause::PropagationConflict { qubit: q, term: usize::MAX })
            }
        },
        Err(cause) => SolveOutcome::Unsat(cause),
    };
    (out, state.stats)
}

fn run<T: Real>(state: &mut SolverState<T>) -> Result<(), UnsatCause> {
    max_rank_removal(state)?;
    settle(state)?;

    let product_edges: Vec<(EdgeId, Qubit1State<T>, Qubit1State<T>)> = {
        let g = &state.copies[0].graph;
        g.forward_edges()
            .filter_map(|(pid, e)| match g.pieces()[pid].factors.as_deref() {
                Some(&(x, y)) if matches!(g.pieces()[pid].constraint, PieceConstraint::Forbid(_)) => Some((e, x, y)),
                _ => None,
            })
            .collect()
    };
    state.overhead += state.copies[0].graph.num_edges_total() as u64;
    for (e, x, y) in product_edges {
        if !state.copies[0].graph.is_edge_alive(e) {
            continue;
        }
        let (i, j) = state.copies[0].graph.endpoints(e);
        parallel_propagation(state, i, x.perp(), j, y.perp())?;
    }
    if cfg!(debug_assertions) || state.config.verify_mirror {
        assert!(entangled_only(state), "product constraint survived product-edge removal");
    }

    let n = state.copies[0].assignment.n();
    let mut v = 0;
    while v < n {
        state.overhead += 1;
        if state.copies[0].graph.is_vertex_alive(v) {
            probe_propagation(state, v)?;
        } else {
            v += 1;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::Factor;
    use crate::instance::generate::{gen_classical_2sat, gen_ring, random_2sat_formula, random_qubit1, random_qubit2, RingKind};
    use crate::instance::Term;
    use crate::oracle::{
        classical_2sat_reference, dense_min_energy, kernel_projector_distance, product_energy, DenseOperator,
    };
    use crate::propagate::{propagate_edge, EdgePropResult};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pair(i: usize, j: usize, s: Qubit2State<f64>) -> Term<f64> {
        Term::Pair { qubits: (i, j), states: vec![s] }
    }

    fn cfg() -> SolverConfig<f64> {
        SolverConfig { verify_mirror: true, ..Default::default() }
    }

    fn assert_sat(inst: &Instance<f64>) -> Solution<f64> {
        match solve(inst, &cfg()) {
            SolveOutcome::Sat(sol) => {
                let r = product_energy(inst, &sol).unwrap();
                assert!(r.max <= 1e-10, "residual {}", r.max);
                sol
            }
            SolveOutcome::Unsat(c) => panic!("unexpected unsat: {c}"),
        }
    }

    fn single_at(sol: &Solution<f64>, q: usize) -> Qubit1State<f64> {
        sol.factors
            .iter()
            .find_map(|f| match f {
                Factor::Single { qubit, state, .. } if *qubit == q => Some(*state),
                _ => None,
            })
            .expect("single factor")
    }

    /// Projector kernel distance between `Π(a on 0,1) + Π(b on 1,2)` and `Π(c on 0,2) + Π(b on 1,2)`.
    fn slide_distance(a: Qubit2State<f64>, b: Qubit2State<f64>, c: Qubit2State<f64>) -> f64 {
        let lhs = Instance::new(3, vec![pair(0, 1, a), pair(1, 2, b)]).unwrap();
        let rhs = Instance::new(3, vec![pair(0, 2, c), pair(1, 2, b)]).unwrap();
        let (l, r) = (DenseOperator::from_instance(&lhs).unwrap(), DenseOperator::from_instance(&rhs).unwrap());
        kernel_projector_distance(&l, &r).unwrap()
    }

    #[test]
    fn slide_examples() {
        let (s, p) = (Qubit2State::singlet(), Qubit2State::phi_plus());
        let out = slide_edge(&s, &s, 1e-10).unwrap();
        assert!(out.eq_up_to_phase(&s, 1e-12));
        let out = slide_edge(&s, &p, 1e-10).unwrap();
        assert!(out.eq_up_to_phase(&p, 1e-12));
        let zz = Qubit2State::basis(0);
        let out = slide_edge(&zz, &s, 1e-10).unwrap();
        assert!(out.eq_up_to_phase(&zz, 1e-12));
        for (a, b, c) in [(s, s, s), (s, p, p), (zz, s, zz)] {
            assert!(slide_distance(a, b, c) < 1e-8);
        }
        assert!(matches!(slide_edge(&s, &zz, 1e-10), Err(SlideError::NotEntangled(1))));
        assert!(slide_path(&[s, s], 1e-10).unwrap().eq_up_to_phase(&s, 1e-12));
        assert!(slide_path(&[p], 1e-10).unwrap().eq_up_to_phase(&p, 1e-12));
        assert_eq!(slide_path::<f64>(&[], 1e-10), Err(SlideError::EmptyPath));
    }

    #[test]
    fn random_slides_preserve_kernels() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..200 {
            let (a, b) = (random_qubit2(&mut rng), random_qubit2(&mut rng));
            let c = slide_edge(&a, &b, 1e-10).unwrap();
            assert!(slide_distance(a, b, c) < 1e-8);
        }
        // a wrong third constraint is detected
        let a = random_qubit2(&mut rng);
        let b = random_qubit2(&mut rng);
        assert!(slide_distance(a, b, Qubit2State::basis(3)) > 0.1);
    }

    #[test]
    fn transfer_matrices_agree_with_slides() {
        let t = f64::default_tolerances();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let path: Vec<_> = (0..5).map(|_| random_qubit2(&mut rng)).collect();
            let slid = slide_path(&path, 1e-10).unwrap();
            let composite = path.iter().skip(1).fold(propagation_map(&path[0]), |m, p| propagation_map(p) * m);
            let a = random_qubit1(&mut rng);
            let mut cur = a;
            for p in &path {
                let EdgePropResult::Propagates(b) = propagate_edge(p, &Value::Single(cur), &t) else { panic!() };
                cur = b;
            }
            let EdgePropResult::Propagates(direct) = propagate_edge(&slid, &Value::Single(a), &t) else { panic!() };
            assert!(direct.eq_up_to_phase(&cur, 1e-8));
            let via = Qubit1State::from_amps(composite.apply(a.amps())).unwrap();
            assert!(via.eq_up_to_phase(&cur, 1e-8));
        }
    }

    #[test]
    fn max_rank_examples() {
        let phi0 = Term::Single { qubit: 4, state: Qubit1State::zero() };
        let sol = assert_sat(&Instance::new(5, vec![phi0]).unwrap());
        assert!(single_at(&sol, 4).eq_up_to_phase(&Qubit1State::one(), 1e-12));

        // kernel |+>⊗|0>: forbid the three orthogonal products
        let plus = Qubit1State::from_real(1.0, 1.0).unwrap();
        let minus = plus.perp();
        let (z, o) = (Qubit1State::zero(), Qubit1State::one());
        let inst = Instance::new(
            2,
            vec![Term::Pair { qubits: (0, 1), states: vec![plus.tensor(&o), minus.tensor(&z), minus.tensor(&o)] }],
        )
        .unwrap();
        let sol = assert_sat(&inst);
        assert!(single_at(&sol, 0).eq_up_to_phase(&plus, 1e-12));
        assert!(single_at(&sol, 1).eq_up_to_phase(&z, 1e-12));
    }

    fn singlet_rank3(i: usize, j: usize) -> Term<f64> {
        let states = vec![Qubit2State::basis(0), Qubit2State::basis(3), Qubit2State::from_real(0.0, 1.0, 1.0, 0.0).unwrap()];
        Term::Pair { qubits: (i, j), states }
    }

    #[test]
    fn rank3_singlet_gives_pair() {
        let sol = assert_sat(&Instance::new(2, vec![singlet_rank3(0, 1)]).unwrap());
        assert_eq!(sol.factors.len(), 1);
        let Factor::Pair { qubits, state } = &sol.factors[0] else { panic!("expected a pair") };
        assert_eq!(*qubits, (0, 1));
        assert!(state.eq_up_to_phase(&Qubit2State::singlet(), 1e-12));
    }

    #[test]
    fn rank3_kind_mismatch_is_unsat() {
        let inst =
            Instance::new(2, vec![Term::Single { qubit: 0, state: Qubit1State::zero() }, singlet_rank3(0, 1)]).unwrap();
        assert!(dense_min_energy(&inst).unwrap() > 0.1);
        assert!(matches!(solve(&inst, &cfg()), SolveOutcome::Unsat(UnsatCause::MaxRankIncoherent { .. })));
    }

    #[test]
    fn pair_touching_entangled_is_unsat() {
        let inst = Instance::new(3, vec![singlet_rank3(0, 1), pair(1, 2, Qubit2State::phi_plus())]).unwrap();
        assert!(dense_min_energy(&inst).unwrap() > 1e-3);
        assert!(matches!(solve(&inst, &cfg()), SolveOutcome::Unsat(UnsatCause::PairTouchesEntangled { .. })));
    }

    #[test]
    fn settle_examples() {
        let inst =
            Instance::new(2, vec![Term::Single { qubit: 0, state: Qubit1State::zero() }, pair(0, 1, Qubit2State::phi_plus())])
                .unwrap();
        let mut st = SolverState::new(&inst, cfg());
        max_rank_removal(&mut st).unwrap();
        settle(&mut st).unwrap();
        let Value::Single(b) = st.copies[0].assignment.value(1) else { panic!() };
        assert!(b.eq_up_to_phase(&Qubit1State::zero(), 1e-12));
        assert!(st.copies[0].graph.is_empty());
        assert!(st.copies_agree());

        let free = Instance::new(2, vec![pair(0, 1, Qubit2State::phi_plus())]).unwrap();
        let mut st = SolverState::new(&free, cfg());
        max_rank_removal(&mut st).unwrap();
        let before = st.copies[0].graph.clone();
        settle(&mut st).unwrap();
        assert_eq!(st.copies[0].graph, before);
    }

    fn phi_plus_gadget() -> Instance<f64> {
        Instance::new(
            2,
            vec![
                Term::Single { qubit: 0, state: Qubit1State::one() },
                Term::Single { qubit: 1, state: Qubit1State::one() },
                pair(0, 1, Qubit2State::phi_plus()),
            ],
        )
        .unwrap()
    }

    #[test]
    fn forced_zeros_across_phi_plus_conflict() {
        let inst = phi_plus_gadget();
        let e = dense_min_energy(&inst).unwrap();
        assert!(e > 0.2);
        // the {|00>, |11>} block is [[1/2, 1/2], [1/2, 5/2]]
        assert!((e - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!(matches!(solve(&inst, &cfg()), SolveOutcome::Unsat(UnsatCause::PropagationConflict { .. })));
    }

    #[test]
    fn parallel_propagation_example() {
        let inst = Instance::new(3, vec![pair(0, 1, Qubit2State::basis(0)), pair(1, 2, Qubit2State::singlet())]).unwrap();
        let mut st = SolverState::new(&inst, cfg());
        max_rank_removal(&mut st).unwrap();
        settle(&mut st).unwrap();
        let one = Qubit1State::one();
        parallel_propagation(&mut st, 0, one, 1, one).unwrap();
        assert!(st.copies_agree());
        let Value::Single(a) = st.copies[0].assignment.value(0) else { panic!() };
        assert!(a.eq_up_to_phase(&one, 1e-12));
        assert!(st.copies[0].assignment.value(1).is_unassigned());
        let g = &st.copies[0].graph;
        let alive: Vec<_> = g.alive_edge_ids().map(|e| g.endpoints(e)).collect();
        assert_eq!(alive.len(), 2);
        assert!(alive.contains(&(1, 2)) && alive.contains(&(2, 1)));
    }

    #[test]
    fn both_branches_fail() {
        use crate::instance::generate::{Clause, Literal};
        let (p, n) = (Literal::pos, Literal::neg);
        let f = [Clause(p(0), p(1)), Clause(p(0), n(1)), Clause(n(0), p(2)), Clause(n(0), n(2))];
        let inst = gen_classical_2sat(&f, 3).unwrap();
        assert!(dense_min_energy(&inst).unwrap() > 1e-3);
        assert!(matches!(solve(&inst, &cfg()), SolveOutcome::Unsat(UnsatCause::BothBranchesFail { .. })));
    }

    #[test]
    fn triangle_probe_end_to_end() {
        let inst = Instance::new(
            3,
            vec![pair(0, 1, Qubit2State::singlet()), pair(1, 2, Qubit2State::singlet()), pair(0, 2, Qubit2State::phi_plus())],
        )
        .unwrap();
        let (out, stats) = solve_with_stats(&inst, &cfg());
        assert_eq!(stats.probes, 1);
        assert_eq!(stats.parallel_runs, 1);
        let SolveOutcome::Sat(sol) = out else { panic!("expected sat") };
        assert!(product_energy(&inst, &sol).unwrap().max <= 1e-10);
        let plus_i = Qubit1State::new(num_complex::Complex::new(1.0, 0.0), num_complex::Complex::new(0.0, 1.0)).unwrap();
        let minus_i = plus_i.perp();
        let first = single_at(&sol, 0);
        let target = if first.eq_up_to_phase(&plus_i, 1e-10) { plus_i } else { minus_i };
        for q in 0..3 {
            assert!(single_at(&sol, q).eq_up_to_phase(&target, 1e-10));
        }
    }

    #[test]
    fn singlet_ring_probe() {
        let inst = gen_ring(5, RingKind::Singlet, 0).unwrap();
        let sol = assert_sat(&inst);
        for q in 0..5 {
            assert!(single_at(&sol, q).eq_up_to_phase(&Qubit1State::zero(), 1e-12));
        }
    }

    #[test]
    fn classical_formulas_match_reference() {
        for seed in 0..100 {
            let f = random_2sat_formula(8, 14, 0.1, seed);
            let Ok(inst) = gen_classical_2sat(&f, 8) else { continue };
            let expect = classical_2sat_reference(8, &f);
            match solve(&inst, &cfg()) {
                SolveOutcome::Sat(sol) => {
                    assert!(expect, "seed {seed}");
                    assert!(product_energy(&inst, &sol).unwrap().max <= 1e-10);
                }
                SolveOutcome::Unsat(_) => assert!(!expect, "seed {seed}"),
            }
        }
    }

    #[test]
    fn f32_solver_runs() {
        let inst = gen_ring(6, RingKind::Singlet, 0).unwrap().cast::<f32>();
        assert!(solve(&inst, &SolverConfig::default()).is_sat());
    }
}
