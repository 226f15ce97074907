//! Partial assignments, edge satisfaction and total extension.

use thiserror::Error;

use crate::graph::{DirectedEdge, EdgeConstraint, Journal, Vertex};
use crate::linalg2::{Qubit1State, Qubit2State};
use crate::scalar::{Real, Tolerances};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AssignmentError {
    #[error("assignment is incoherent at qubit {0}")]
    IncoherentAssignment(Vertex),
}

/// Half of an entangled 2-qubit value shared with `partner`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairValue<T> {
    /// Ordered `(first, second)` where `first` is the qubit holding `first = true`.
    pub state: Qubit2State<T>,
    pub partner: Vertex,
    pub first: bool,
}

impl<T: Real> PairValue<T> {
    /// The pair state ordered as `(self, partner)`.
    pub fn oriented(&self) -> Qubit2State<T> {
        if self.first {
            self.state
        } else {
            self.state.swap()
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub enum Value<T> {
    #[default]
    Unassigned,
    Single(Qubit1State<T>),
    Pair(Box<PairValue<T>>),
    Conflict,
}

impl<T> Value<T> {
    pub fn pair(state: Qubit2State<T>, partner: Vertex, first: bool) -> Self {
        Value::Pair(Box::new(PairValue { state, partner, first }))
    }

    pub fn is_unassigned(&self) -> bool {
        matches!(self, Value::Unassigned)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WriteResult {
    Fresh,
    SameUpToPhase,
    ConflictRaised,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Assignment<T> {
    values: Vec<Value<T>>,
    tol: Tolerances<T>,
}

/// One factor of a product-form output state.
#[derive(Clone, Debug, PartialEq)]
pub enum Factor<T> {
    Single {
        qubit: usize,
        state: Qubit1State<T>,
        /// No constraint fixed this qubit; any state would do.
        free: bool,
    },
    Pair {
        qubits: (usize, usize),
        state: Qubit2State<T>,
    },
}

/// A total assignment written as a tensor product of 1- and 2-qubit factors.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution<T> {
    pub n: usize,
    pub factors: Vec<Factor<T>>,
}

impl<T: Real> Assignment<T> {
    pub fn new(n: usize, tol: Tolerances<T>) -> Self {
        Assignment {
            values: vec![Value::Unassigned; n],
            tol,
        }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn value(&self, v: Vertex) -> &Value<T> {
        &self.values[v]
    }

    pub fn values(&self) -> &[Value<T>] {
        &self.values
    }

    pub fn tolerances(&self) -> &Tolerances<T> {
        &self.tol
    }

    /// Vertices carrying a value.
    pub fn support(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.values.len()).filter(|v| !self.values[*v].is_unassigned())
    }

    pub(crate) fn restore(&mut self, v: Vertex, value: Value<T>) {
        self.values[v] = value;
    }

    fn same(&self, a: &Value<T>, b: &Value<T>) -> bool {
        match (a, b) {
            (Value::Single(x), Value::Single(y)) => x.eq_up_to_phase(y, self.tol.eq),
            (Value::Pair(x), Value::Pair(y)) => {
                x.partner == y.partner && x.first == y.first && x.state.eq_up_to_phase(&y.state, self.tol.eq)
            }
            _ => false,
        }
    }

    /// Whether writing `value` at `v` would not raise a conflict.
    pub fn accepts(&self, v: Vertex, value: &Value<T>) -> bool {
        self.values[v].is_unassigned() || self.same(&self.values[v], value)
    }

    /// Stores `value` at `v` unless an equal value is already there; a
    /// different existing value turns `v` into a conflict.
    pub fn write(&mut self, v: Vertex, value: Value<T>, journal: &mut Journal<T>) -> WriteResult {
        debug_assert!(matches!(value, Value::Single(_) | Value::Pair(_)));
        let cur = &self.values[v];
        if cur.is_unassigned() {
            journal.record_write(v, Value::Unassigned);
            self.values[v] = value;
            return WriteResult::Fresh;
        }
        if self.same(cur, &value) {
            return WriteResult::SameUpToPhase;
        }
        let prev = std::mem::replace(&mut self.values[v], Value::Conflict);
        journal.record_write(v, prev);
        WriteResult::ConflictRaised
    }

    /// No conflicts, and every pair value is matched by its partner.
    pub fn check_coherent(&self) -> Result<(), AssignmentError> {
        for (v, val) in self.values.iter().enumerate() {
            match val {
                Value::Conflict => return Err(AssignmentError::IncoherentAssignment(v)),
                Value::Pair(p) => self.check_partner(v, p)?,
                _ => {}
            }
        }
        Ok(())
    }

    fn check_partner(&self, v: Vertex, p: &PairValue<T>) -> Result<(), AssignmentError> {
        match self.values.get(p.partner) {
            Some(Value::Pair(q)) if q.partner == v && q.first != p.first && q.state == p.state => Ok(()),
            _ => Err(AssignmentError::IncoherentAssignment(v)),
        }
    }

    fn endpoint(&self, v: Vertex) -> Result<&Value<T>, AssignmentError> {
        match &self.values[v] {
            Value::Conflict => Err(AssignmentError::IncoherentAssignment(v)),
            val => Ok(val),
        }
    }

    /// Whether every total extension of this assignment annihilates the edge's projector.
    pub fn satisfies(&self, edge: &DirectedEdge<T>) -> Result<bool, AssignmentError> {
        let a = self.endpoint(edge.from)?;
        let b = self.endpoint(edge.to)?;
        let tol = &self.tol;
        Ok(match edge.constraint {
            EdgeConstraint::ForbidSingle(phi) => match a {
                Value::Single(alpha) => phi.overlap(alpha) <= tol.sat,
                _ => false,
            },
            EdgeConstraint::Allow { kernel } => match (a, b) {
                (Value::Single(x), Value::Single(y)) => {
                    T::one() - kernel.overlap(&x.tensor(y)).powi(2) <= tol.sat
                }
                (Value::Pair(p), Value::Pair(_)) if p.partner == edge.to => {
                    T::one() - kernel.overlap(&p.oriented()).powi(2) <= tol.sat
                }
                _ => false,
            },
            EdgeConstraint::Forbid { state, factors, .. } => {
                if let Value::Pair(p) = a {
                    if p.partner == edge.to {
                        return Ok(state.overlap(&p.oriented()) <= tol.sat);
                    }
                }
                if let (Value::Single(x), Value::Single(y)) = (a, b) {
                    if state.overlap(&x.tensor(y)) <= tol.sat {
                        return Ok(true);
                    }
                }
                match factors {
                    Some((x, y)) => {
                        matches!(a, Value::Single(alpha) if x.overlap(alpha) <= tol.sat)
                            || matches!(b, Value::Single(beta) if y.overlap(beta) <= tol.sat)
                    }
                    None => false,
                }
            }
        })
    }

    /// Fills unassigned qubits with `|0>` (flagged free) and emits pair factors once.
    pub fn total_extension(&self) -> Result<Solution<T>, AssignmentError> {
        let mut factors = Vec::with_capacity(self.values.len());
        for (v, val) in self.values.iter().enumerate() {
            match val {
                Value::Unassigned => factors.push(Factor::Single {
                    qubit: v,
                    state: Qubit1State::zero(),
                    free: true,
                }),
                Value::Single(s) => factors.push(Factor::Single {
                    qubit: v,
                    state: *s,
                    free: false,
                }),
                Value::Pair(p) => {
                    self.check_partner(v, p)?;
                    if p.first {
                        factors.push(Factor::Pair {
                            qubits: (v, p.partner),
                            state: p.state,
                        });
                    }
                }
                Value::Conflict => return Err(AssignmentError::IncoherentAssignment(v)),
            }
        }
        Ok(Solution {
            n: self.values.len(),
            factors,
        })
    }
}
