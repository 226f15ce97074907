//! Seeded instance generators: classical 2-SAT embeddings, planted, ring and random.

use std::collections::{BTreeMap, HashSet};

use num_complex::Complex;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Instance, InstanceError, Term};
use crate::linalg2::{Qubit1State, Qubit2State};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex<f64> {
    Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random single-qubit state.
pub fn random_qubit1<R: Rng + ?Sized>(rng: &mut R) -> Qubit1State<f64> {
    loop {
        if let Some(s) = Qubit1State::from_amps([gaussian(rng), gaussian(rng)]) {
            return s;
        }
    }
}

/// Haar-random 2-qubit state.
pub fn random_qubit2<R: Rng + ?Sized>(rng: &mut R) -> Qubit2State<f64> {
    loop {
        let amps = [gaussian(rng), gaussian(rng), gaussian(rng), gaussian(rng)];
        if let Some(s) = Qubit2State::from_amps(amps) {
            return s;
        }
    }
}

/// Random `rank` orthonormal 2-qubit states.
pub fn random_orthonormal<R: Rng + ?Sized>(rng: &mut R, rank: usize) -> Vec<Qubit2State<f64>> {
    let mut out: Vec<[Complex<f64>; 4]> = Vec::with_capacity(rank);
    while out.len() < rank {
        let mut v = random_qubit2(rng).amps();
        for _ in 0..2 {
            for u in &out {
                let p: Complex<f64> = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for t in 0..4 {
                    v[t] -= u[t] * p;
                }
            }
        }
        let n: f64 = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-3 {
            out.push(v.map(|a| a / n));
        }
    }
    out.into_iter()
        .map(|v| Qubit2State::from_amps(v).expect("unit vector"))
        .collect()
}

/// Random unit vector orthogonal to `avoid` (an orthonormal set).
fn random_orthogonal_to<R: Rng + ?Sized>(rng: &mut R, avoid: &Qubit2State<f64>) -> Qubit2State<f64> {
    loop {
        let a = avoid.amps();
        let mut v = random_qubit2(rng).amps();
        let p: Complex<f64> = a.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
        for t in 0..4 {
            v[t] -= a[t] * p;
        }
        let n: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-3 {
            return Qubit2State::from_amps(v).expect("nonzero");
        }
    }
}

/// A boolean literal: variable `var`, true when `positive` and the variable is 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Literal {
    pub var: usize,
    pub positive: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Literal { var, positive: true }
    }

    pub fn neg(var: usize) -> Self {
        Literal { var, positive: false }
    }

    pub fn eval(&self, x: &[bool]) -> bool {
        x[self.var] == self.positive
    }

    /// The bit value of `var` that falsifies this literal.
    fn falsifying_bit(&self) -> usize {
        usize::from(!self.positive)
    }
}

/// Disjunction of two literals; a unit clause repeats its literal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Clause(pub Literal, pub Literal);

impl Clause {
    pub fn eval(&self, x: &[bool]) -> bool {
        self.0.eval(x) || self.1.eval(x)
    }
}

/// Embeds a 2-CNF formula: each clause forbids its unique falsifying basis
/// state. Clauses sharing a pair merge into one term of rank up to 3; a unit
/// clause becomes a single-qubit term; tautologies are dropped.
///
/// Contradictory unit clauses on one variable and four distinct clauses on
/// one pair have no representation as a single projector term; both are
/// rejected with `InvalidClause` (the formula is then trivially unsatisfiable).
pub fn gen_classical_2sat(formula: &[Clause], n: usize) -> Result<Instance<f64>, InstanceError> {
    let mut singles: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    let mut pairs: BTreeMap<(usize, usize), (usize, Vec<usize>)> = BTreeMap::new();
    for (id, Clause(a, b)) in formula.iter().enumerate() {
        if a.var >= n || b.var >= n {
            return Err(InstanceError::InvalidClause {
                clause: id,
                reason: format!("variable out of range for n = {n}"),
            });
        }
        if a.var == b.var {
            if a.positive != b.positive {
                continue;
            }
            let bit = a.falsifying_bit();
            if let Some((prev, first)) = singles.insert(a.var, (bit, id)) {
                if prev != bit {
                    return Err(InstanceError::InvalidClause {
                        clause: id,
                        reason: format!("contradicts unit clause {first} on variable {}", a.var),
                    });
                }
            }
            continue;
        }
        let (lo, hi) = if a.var < b.var { (a, b) } else { (b, a) };
        let idx = 2 * lo.falsifying_bit() + hi.falsifying_bit();
        let entry = pairs.entry((lo.var, hi.var)).or_insert((id, Vec::new()));
        if !entry.1.contains(&idx) {
            entry.1.push(idx);
        }
        if entry.1.len() == 4 {
            return Err(InstanceError::InvalidClause {
                clause: id,
                reason: format!("pair ({}, {}) forbids every assignment", lo.var, hi.var),
            });
        }
    }
    let mut terms = Vec::with_capacity(singles.len() + pairs.len());
    for (var, (bit, _)) in singles {
        let state = if bit == 0 { Qubit1State::zero() } else { Qubit1State::one() };
        terms.push(Term::Single { qubit: var, state });
    }
    for (qubits, (_, idxs)) in pairs {
        terms.push(Term::Pair {
            qubits,
            states: idxs.into_iter().map(Qubit2State::basis).collect(),
        });
    }
    Instance::new(n, terms)
}

/// Uniformly random 2-CNF with `m` clauses over `n` variables; each clause is
/// a unit clause with probability `unit_prob`.
pub fn random_2sat_formula(n: usize, m: usize, unit_prob: f64, seed: u64) -> Vec<Clause> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lit = |rng: &mut ChaCha8Rng, v: usize| Literal {
        var: v,
        positive: rng.random_bool(0.5),
    };
    (0..m)
        .map(|_| {
            let a = rng.random_range(0..n);
            if n < 2 || rng.random_bool(unit_prob) {
                let l = lit(&mut rng, a);
                Clause(l, l)
            } else {
                let mut b = rng.random_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                Clause(lit(&mut rng, a), lit(&mut rng, b))
            }
        })
        .collect()
}

/// `m` distinct pairs `i < j` out of `n` qubits.
fn sample_pairs(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<(usize, usize)> {
    let total = n * (n - 1) / 2;
    if m * 2 > total {
        let mut all: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        all.shuffle(rng);
        all.truncate(m);
        return all;
    }
    let mut seen = HashSet::with_capacity(m);
    let mut out = Vec::with_capacity(m);
    while out.len() < m {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a == b {
            continue;
        }
        let p = (a.min(b), a.max(b));
        if seen.insert(p) {
            out.push(p);
        }
    }
    out
}

/// Planted instance: a hidden product state `⊗|α_i>` and `m` rank-1 terms on
/// distinct pairs, each orthogonal to the hidden state on its pair.
///
/// With `entangled_only`, term states are resampled until `|det Ψ| > 0.1`.
pub fn gen_planted(
    n: usize,
    m: usize,
    seed: u64,
    entangled_only: bool,
) -> Result<Instance<f64>, InstanceError> {
    let total = n.saturating_mul(n.saturating_sub(1)) / 2;
    if m > total {
        return Err(InstanceError::InvalidParameters(format!(
            "m = {m} exceeds the {total} available pairs"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hidden: Vec<Qubit1State<f64>> = (0..n).map(|_| random_qubit1(&mut rng)).collect();
    let pairs = if m == 0 { Vec::new() } else { sample_pairs(&mut rng, n, m) };
    let terms = pairs
        .into_iter()
        .map(|(i, j)| {
            let avoid = hidden[i].tensor(&hidden[j]);
            let state = loop {
                let s = random_orthogonal_to(&mut rng, &avoid);
                if !entangled_only || s.det().norm() > 0.1 {
                    break s;
                }
            };
            Term::Pair {
                qubits: (i, j),
                states: vec![state],
            }
        })
        .collect();
    Instance::new(n, terms)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RingKind {
    /// The singlet on every ring edge.
    Singlet,
    /// A Haar-random rank-1 term on every ring edge. A single cycle of
    /// entangled constraints is always satisfiable (its transfer matrix has an
    /// eigenvector), so these rings exercise the probe path without being unsat.
    Mixed,
}

/// Rank-1 terms on `(i, i+1 mod n)`.
pub fn gen_ring(n: usize, kind: RingKind, seed: u64) -> Result<Instance<f64>, InstanceError> {
    if n < 3 {
        return Err(InstanceError::InvalidParameters("rings need n >= 3".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms = (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            let state = match kind {
                RingKind::Singlet => Qubit2State::singlet(),
                RingKind::Mixed => random_qubit2(&mut rng),
            };
            // the closing edge (n-1, 0) is stored as (0, n-1)
            let (qubits, state) = if i < j { ((i, j), state) } else { ((j, i), state.swap()) };
            Term::Pair {
                qubits,
                states: vec![state],
            }
        })
        .collect();
    Instance::new(n, terms)
}

/// Relative weights of term kinds in `gen_random`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankMix {
    pub single: f64,
    pub rank1: f64,
    pub rank2: f64,
    pub rank3: f64,
}

impl Default for RankMix {
    fn default() -> Self {
        RankMix {
            single: 0.0,
            rank1: 0.5,
            rank2: 0.3,
            rank3: 0.2,
        }
    }
}

/// `m` Haar-random terms with ranks drawn from `mix`; `m` is clamped to the
/// number of available supports.
pub fn gen_random(n: usize, m: usize, mix: RankMix, seed: u64) -> Result<Instance<f64>, InstanceError> {
    let weights = [mix.single, mix.rank1, mix.rank2, mix.rank3];
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || weights.iter().sum::<f64>() <= 0.0 {
        return Err(InstanceError::InvalidParameters("rank weights must be non-negative with a positive sum".into()));
    }
    if n == 0 {
        return Err(InstanceError::InvalidParameters("n must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = rand_distr::weighted::WeightedIndex::new(weights)
        .map_err(|e| InstanceError::InvalidParameters(e.to_string()))?;
    let max_pairs = n * (n - 1) / 2;
    let max_singles = if mix.single > 0.0 { n } else { 0 };
    let m = m.min(max_pairs + max_singles);

    let mut pair_pool: Vec<(usize, usize)> = Vec::new();
    let mut single_pool: Vec<usize> = (0..max_singles).collect();
    single_pool.shuffle(&mut rng);
    let mut used_pairs = HashSet::new();
    let mut terms = Vec::with_capacity(m);
    while terms.len() < m {
        let mut kind = rng.sample(&dist);
        if kind == 0 && single_pool.is_empty() {
            kind = 1 + rng.random_range(0..3);
        }
        if kind != 0 && used_pairs.len() == max_pairs {
            kind = 0;
        }
        if kind == 0 {
            let q = single_pool.pop().expect("available single");
            terms.push(Term::Single {
                qubit: q,
                state: random_qubit1(&mut rng),
            });
            continue;
        }
        let p = if max_pairs <= 64 {
            if pair_pool.is_empty() {
                pair_pool = (0..n)
                    .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                    .collect();
                pair_pool.shuffle(&mut rng);
            }
            pair_pool.pop().expect("available pair")
        } else {
            loop {
                let a = rng.random_range(0..n);
                let b = rng.random_range(0..n);
                if a != b && !used_pairs.contains(&(a.min(b), a.max(b))) {
                    break (a.min(b), a.max(b));
                }
            }
        };
        used_pairs.insert(p);
        terms.push(Term::Pair {
            qubits: p,
            states: random_orthonormal(&mut rng, kind),
        });
    }
    Instance::new(n, terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clause_embedding() {
        let inst = gen_classical_2sat(&[Clause(Literal::pos(0), Literal::pos(1))], 2).unwrap();
        match &inst.terms()[0] {
            Term::Pair { qubits, states } => {
                assert_eq!(*qubits, (0, 1));
                assert_eq!(states[0], Qubit2State::basis(0));
            }
            _ => panic!(),
        }
        let inst = gen_classical_2sat(&[Clause(Literal::neg(0), Literal::pos(1))], 2).unwrap();
        match &inst.terms()[0] {
            Term::Pair { states, .. } => assert_eq!(states[0], Qubit2State::basis(2)),
            _ => panic!(),
        }
    }

    #[test]
    fn clauses_on_one_pair_merge() {
        let f = [
            Clause(Literal::pos(0), Literal::pos(1)),
            Clause(Literal::neg(0), Literal::pos(1)),
        ];
        let inst = gen_classical_2sat(&f, 2).unwrap();
        assert_eq!(inst.m(), 1);
        match &inst.terms()[0] {
            Term::Pair { states, .. } => {
                assert_eq!(states, &vec![Qubit2State::basis(0), Qubit2State::basis(2)]);
            }
            _ => panic!(),
        }
        // literal order within a clause does not matter
        let f = [
            Clause(Literal::pos(1), Literal::neg(0)),
            Clause(Literal::pos(0), Literal::pos(1)),
            Clause(Literal::neg(1), Literal::neg(0)),
        ];
        let inst = gen_classical_2sat(&f, 2).unwrap();
        assert_eq!(inst.terms()[0].rank(), 3);
    }

    #[test]
    fn unit_clauses() {
        let x = Literal::pos(0);
        let inst = gen_classical_2sat(&[Clause(x, x)], 1).unwrap();
        match &inst.terms()[0] {
            Term::Single { state, .. } => assert_eq!(*state, Qubit1State::zero()),
            _ => panic!(),
        }
        let nx = Literal::neg(0);
        assert!(matches!(
            gen_classical_2sat(&[Clause(x, x), Clause(nx, nx)], 1),
            Err(InstanceError::InvalidClause { clause: 1, .. })
        ));
        // tautology vanishes
        assert_eq!(gen_classical_2sat(&[Clause(x, nx)], 1).unwrap().m(), 0);
    }

    #[test]
    fn planted_entangled_terms() {
        let inst = gen_planted(12, 20, 4, true).unwrap();
        assert_eq!(inst.m(), 20);
        for t in inst.terms() {
            match t {
                Term::Pair { states, .. } => assert!(states[0].det().norm() > 0.1),
                _ => panic!(),
            }
        }
        assert_eq!(gen_planted(5, 0, 1, false).unwrap().m(), 0);
        assert!(gen_planted(3, 4, 1, false).is_err());
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(gen_planted(30, 40, 9, false).unwrap(), gen_planted(30, 40, 9, false).unwrap());
        assert_eq!(
            gen_random(6, 9, RankMix::default(), 2).unwrap(),
            gen_random(6, 9, RankMix::default(), 2).unwrap()
        );
    }

    #[test]
    fn random_instance_shape() {
        let inst = gen_random(6, 9, RankMix::default(), 5).unwrap();
        assert_eq!(inst.m(), 9);
        let inst = gen_random(3, 50, RankMix { single: 1.0, ..RankMix::default() }, 5).unwrap();
        assert_eq!(inst.m(), 6);
    }

    #[test]
    fn ring_shapes() {
        assert!(gen_ring(2, RingKind::Singlet, 0).is_err());
        let r = gen_ring(4, RingKind::Singlet, 0).unwrap();
        assert_eq!(r.m(), 4);
        assert!(r.terms().iter().all(|t| t.rank() == 1));
    }
}
