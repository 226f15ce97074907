//! Hamiltonian data model: projector terms, validation and the rank-1 decomposition.

pub mod format;
pub mod generate;

use std::collections::HashSet;

use thiserror::Error;

use crate::linalg2::{complete_basis, Qubit1State, Qubit2State};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("invalid term {term}: {reason}")]
    InvalidTerm { term: usize, reason: String },
    #[error("term {term}: state {state} has near-zero norm")]
    ZeroState { term: usize, state: usize },
    #[error("invalid clause {clause}: {reason}")]
    InvalidClause { clause: usize, reason: String },
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
}

/// One projector term. The listed states span the forbidden subspace.
#[derive(Clone, Debug, PartialEq)]
pub enum Term<T> {
    /// Rank-1 projector onto `state` at a single qubit.
    Single { qubit: usize, state: Qubit1State<T> },
    /// Projector of rank `states.len()` on qubits `(i, j)`, `i < j`.
    Pair {
        qubits: (usize, usize),
        states: Vec<Qubit2State<T>>,
    },
}

impl<T: Real> Term<T> {
    pub fn rank(&self) -> usize {
        match self {
            Term::Single { .. } => 1,
            Term::Pair { states, .. } => states.len(),
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Term::Single { qubit, .. } => vec![*qubit],
            Term::Pair { qubits: (i, j), .. } => vec![*i, *j],
        }
    }

    pub fn is_maximal(&self) -> bool {
        matches!(self, Term::Single { .. }) || self.rank() == 3
    }

    pub fn cast<U: Real>(&self) -> Term<U> {
        match self {
            Term::Single { qubit, state } => Term::Single {
                qubit: *qubit,
                state: state.cast(),
            },
            Term::Pair { qubits, states } => Term::Pair {
                qubits: *qubits,
                states: states.iter().map(|s| s.cast()).collect(),
            },
        }
    }
}

/// A validated 2-local projector Hamiltonian on `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance<T> {
    n: usize,
    terms: Vec<Term<T>>,
}

impl<T: Real> Instance<T> {
    /// Checks indices, ranks, duplicate supports and orthonormality of each
    /// term's states (within the type's `orth` tolerance).
    pub fn new(n: usize, terms: Vec<Term<T>>) -> Result<Self, InstanceError> {
        if n == 0 {
            return Err(InstanceError::InvalidParameters("n must be at least 1".into()));
        }
        let tol = T::default_tolerances();
        let mut singles = HashSet::new();
        let mut pairs = HashSet::new();
        for (id, term) in terms.iter().enumerate() {
            let bad = |reason: String| InstanceError::InvalidTerm { term: id, reason };
            match term {
                Term::Single { qubit, .. } => {
                    if *qubit >= n {
                        return Err(bad(format!("qubit {qubit} out of range for n = {n}")));
                    }
                    if !singles.insert(*qubit) {
                        return Err(bad(format!("second single-qubit term on qubit {qubit}")));
                    }
                }
                Term::Pair { qubits: (i, j), states } => {
                    if *i >= n || *j >= n {
                        return Err(bad(format!("pair ({i}, {j}) out of range for n = {n}")));
                    }
                    if i >= j {
                        return Err(bad(format!("pair ({i}, {j}) must satisfy i < j")));
                    }
                    if states.is_empty() || states.len() > 3 {
                        return Err(bad(format!("rank {} outside 1..=3", states.len())));
                    }
                    if !pairs.insert((*i, *j)) {
                        return Err(bad(format!("second term on pair ({i}, {j})")));
                    }
                    for a in 0..states.len() {
                        for b in a + 1..states.len() {
                            let ov = states[a].overlap(&states[b]);
                            if ov > tol.orth {
                                return Err(bad(format!(
                                    "states {a} and {b} are not orthogonal (overlap {ov})"
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(Instance { n, terms })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[Term<T>] {
        &self.terms
    }

    pub fn m(&self) -> usize {
        self.terms.len()
    }

    pub fn cast<U: Real>(&self) -> Instance<U> {
        Instance {
            n: self.n,
            terms: self.terms.iter().map(|t| t.cast()).collect(),
        }
    }
}

/// Constraint carried by one rank-1 piece.
#[derive(Clone, Debug, PartialEq)]
pub enum PieceConstraint<T> {
    /// Forbids `state` on the ordered pair.
    Forbid(Qubit2State<T>),
    /// Rank-3 term: only `kernel` is allowed on the ordered pair.
    Allow { kernel: Qubit2State<T> },
    /// Single-qubit term forbidding `state`.
    ForbidSingle(Qubit1State<T>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rank1Piece<T> {
    /// Index of the originating term.
    pub term: usize,
    /// 1 or 2 for the two halves of a rank-2 term, 0 otherwise.
    pub index: u8,
    /// `(i, i)` for single-qubit pieces.
    pub qubits: (usize, usize),
    pub constraint: PieceConstraint<T>,
}

impl<T> Rank1Piece<T> {
    pub fn is_maximal(&self) -> bool {
        !matches!(self.constraint, PieceConstraint::Forbid(_))
    }
}

/// Splits every rank-2 term into its two basis states and precomputes the
/// kernel of each rank-3 term.
pub fn rank1_decompose<T: Real>(inst: &Instance<T>) -> Vec<Rank1Piece<T>> {
    let mut out = Vec::with_capacity(inst.m() + inst.m() / 2);
    for (id, term) in inst.terms().iter().enumerate() {
        match term {
            Term::Single { qubit, state } => out.push(Rank1Piece {
                term: id,
                index: 0,
                qubits: (*qubit, *qubit),
                constraint: PieceConstraint::ForbidSingle(*state),
            }),
            Term::Pair { qubits, states } => match states.len() {
                1 => out.push(Rank1Piece {
                    term: id,
                    index: 0,
                    qubits: *qubits,
                    constraint: PieceConstraint::Forbid(states[0]),
                }),
                2 => {
                    for (b, s) in states.iter().enumerate() {
                        out.push(Rank1Piece {
                            term: id,
                            index: b as u8 + 1,
                            qubits: *qubits,
                            constraint: PieceConstraint::Forbid(*s),
                        });
                    }
                }
                _ => {
                    let k = complete_basis(&[states[0].amps(), states[1].amps(), states[2].amps()]);
                    let kernel = Qubit2State::from_amps(k[0]).expect("unit vector");
                    out.push(Rank1Piece {
                        term: id,
                        index: 0,
                        qubits: *qubits,
                        constraint: PieceConstraint::Allow { kernel },
                    });
                }
            },
        }
    }
    out
}
