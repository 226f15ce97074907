//! JSON instance and solution documents.
//!
//! Instance: `{"n": 3, "terms": [{"qubits": [0, 1], "rank": 1, "states": [[[re, im], ...]]}]}`
//! with 0-based qubit indices, amplitudes in basis order `|0>,|1>` or
//! `|00>,|01>,|10>,|11>` (the lower index is the left factor).
//!
//! Solution: `{"status": "sat", "assignment": [{"qubits": [i], "state": [...], "free": false},
//! {"qubits": [i, k], "state": [...]}], "cause": "..."}`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{Instance, InstanceError, Term};
use crate::assignment::{Factor, Solution};
use crate::linalg2::{Qubit1State, Qubit2State};
use crate::scalar::Real;

const ZERO_NORM: f64 = 1e-6;

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TermDoc {
    pub qubits: Vec<usize>,
    pub rank: usize,
    pub states: Vec<Vec<[f64; 2]>>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub n: usize,
    pub terms: Vec<TermDoc>,
}

#[derive(Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Sat,
    Unsat,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct FactorDoc {
    pub qubits: Vec<usize>,
    pub state: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub free: Option<bool>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct SolutionDoc {
    pub status: Status,
    #[serde(default)]
    pub assignment: Vec<FactorDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cause: Option<String>,
}

fn amp_to_pair<T: Real>(a: &Complex<T>) -> [f64; 2] {
    // adding 0.0 turns -0.0 into 0.0
    [a.re.to_f64().unwrap_or(f64::NAN) + 0.0, a.im.to_f64().unwrap_or(f64::NAN) + 0.0]
}

/// Converts raw amplitudes, renormalizing unless already unit to within rounding.
fn amps_from_doc<T: Real, const N: usize>(
    raw: &[[f64; 2]],
    term: usize,
    state: usize,
) -> Result<[Complex<T>; N], InstanceError> {
    if raw.len() != N {
        return Err(InstanceError::InvalidTerm {
            term,
            reason: format!("state {state} has {} amplitudes, expected {N}", raw.len()),
        });
    }
    let mut norm2 = 0.0f64;
    for [re, im] in raw {
        if !re.is_finite() || !im.is_finite() {
            return Err(InstanceError::MalformedInput(format!(
                "term {term}: non-finite amplitude"
            )));
        }
        norm2 += re * re + im * im;
    }
    let norm = norm2.sqrt();
    if norm < ZERO_NORM {
        return Err(InstanceError::ZeroState { term, state });
    }
    let scale = if (norm - 1.0).abs() <= 4.0 * f64::EPSILON { 1.0 } else { 1.0 / norm };
    let mut out = [Complex::new(T::zero(), T::zero()); N];
    for (k, [re, im]) in raw.iter().enumerate() {
        out[k] = Complex::new(T::lit(re * scale), T::lit(im * scale));
    }
    Ok(out)
}

impl InstanceDoc {
    pub fn to_instance<T: Real>(&self) -> Result<Instance<T>, InstanceError> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for (id, t) in self.terms.iter().enumerate() {
            if t.rank != t.states.len() {
                return Err(InstanceError::InvalidTerm {
                    term: id,
                    reason: format!("rank {} but {} states", t.rank, t.states.len()),
                });
            }
            match t.qubits.as_slice() {
                [q] => {
                    if t.rank != 1 {
                        return Err(InstanceError::InvalidTerm {
                            term: id,
                            reason: "single-qubit terms must have rank 1".into(),
                        });
                    }
                    let amps = amps_from_doc::<T, 2>(&t.states[0], id, 0)?;
                    terms.push(Term::Single {
                        qubit: *q,
                        state: Qubit1State::from_unit_amps(amps),
                    });
                }
                [i, j] => {
                    let mut states = Vec::with_capacity(t.rank);
                    for (k, s) in t.states.iter().enumerate() {
                        states.push(Qubit2State::from_unit_amps(amps_from_doc::<T, 4>(s, id, k)?));
                    }
                    terms.push(Term::Pair {
                        qubits: (*i, *j),
                        states,
                    });
                }
                _ => {
                    return Err(InstanceError::InvalidTerm {
                        term: id,
                        reason: format!("{} qubit indices, expected 1 or 2", t.qubits.len()),
                    })
                }
            }
        }
        Instance::new(self.n, terms)
    }

    pub fn from_instance<T: Real>(inst: &Instance<T>) -> Self {
        let terms = inst
            .terms()
            .iter()
            .map(|t| match t {
                Term::Single { qubit, state } => TermDoc {
                    qubits: vec![*qubit],
                    rank: 1,
                    states: vec![state.amps().iter().map(amp_to_pair).collect()],
                },
                Term::Pair { qubits: (i, j), states } => TermDoc {
                    qubits: vec![*i, *j],
                    rank: states.len(),
                    states: states
                        .iter()
                        .map(|s| s.amps().iter().map(amp_to_pair).collect())
                        .collect(),
                },
            })
            .collect();
        InstanceDoc { n: inst.n(), terms }
    }
}

pub fn parse_instance<T: Real>(text: &str) -> Result<Instance<T>, InstanceError> {
    let doc: InstanceDoc =
        serde_json::from_str(text).map_err(|e| InstanceError::MalformedInput(e.to_string()))?;
    doc.to_instance()
}

pub fn serialize_instance<T: Real>(inst: &Instance<T>) -> String {
    serde_json::to_string(&InstanceDoc::from_instance(inst)).expect("plain data serializes")
}

impl SolutionDoc {
    pub fn sat<T: Real>(sol: &Solution<T>) -> Self {
        let assignment = sol
            .factors
            .iter()
            .map(|f| match f {
                Factor::Single { qubit, state, free } => FactorDoc {
                    qubits: vec![*qubit],
                    state: state.amps().iter().map(amp_to_pair).collect(),
                    free: Some(*free),
                },
                Factor::Pair { qubits: (i, k), state } => FactorDoc {
                    qubits: vec![*i, *k],
                    state: state.amps().iter().map(amp_to_pair).collect(),
                    free: None,
                },
            })
            .collect();
        SolutionDoc {
            status: Status::Sat,
            assignment,
            cause: None,
        }
    }

    pub fn unsat(cause: impl Into<String>) -> Self {
        SolutionDoc {
            status: Status::Unsat,
            assignment: Vec::new(),
            cause: Some(cause.into()),
        }
    }

    /// The product-form state described by a `sat` document.
    pub fn to_solution<T: Real>(&self, n: usize) -> Result<Solution<T>, InstanceError> {
        if self.status != Status::Sat {
            return Err(InstanceError::MalformedInput("solution status is not sat".into()));
        }
        let mut factors = Vec::with_capacity(self.assignment.len());
        for (id, f) in self.assignment.iter().enumerate() {
            match f.qubits.as_slice() {
                [q] => factors.push(Factor::Single {
                    qubit: *q,
                    state: Qubit1State::from_unit_amps(amps_from_doc::<T, 2>(&f.state, id, 0)?),
                    free: f.free.unwrap_or(false),
                }),
                [i, k] => factors.push(Factor::Pair {
                    qubits: (*i, *k),
                    state: Qubit2State::from_unit_amps(amps_from_doc::<T, 4>(&f.state, id, 0)?),
                }),
                _ => {
                    return Err(InstanceError::MalformedInput(format!(
                        "assignment entry {id} has {} qubits",
                        f.qubits.len()
                    )))
                }
            }
        }
        Ok(Solution { n, factors })
    }
}

pub fn parse_solution(text: &str) -> Result<SolutionDoc, InstanceError> {
    serde_json::from_str(text).map_err(|e| InstanceError::MalformedInput(e.to_string()))
}

pub fn serialize_solution(doc: &SolutionDoc) -> String {
    serde_json::to_string_pretty(doc).expect("plain data serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_minimal_document() {
        let text = r#"{"n": 2, "terms": [{"qubits": [0, 1], "rank": 1,
            "states": [[[1, 0], [0, 0], [0, 0], [0, 0]]]}]}"#;
        let inst: Instance<f64> = parse_instance(text).unwrap();
        assert_eq!(inst.n(), 2);
        assert_eq!(inst.m(), 1);
    }

    #[test]
    fn duplicate_term_in_document() {
        let t = r#"{"qubits": [0, 1], "rank": 1, "states": [[[1, 0], [0, 0], [0, 0], [0, 0]]]}"#;
        let text = format!(r#"{{"n": 2, "terms": [{t}, {t}]}}"#);
        assert!(matches!(
            parse_instance::<f64>(&text),
            Err(InstanceError::InvalidTerm { term: 1, .. })
        ));
    }

    #[test]
    fn states_are_renormalized() {
        let text = r#"{"n": 1, "terms": [{"qubits": [0], "rank": 1, "states": [[[3, 0], [0, 4]]]}]}"#;
        let inst: Instance<f64> = parse_instance(text).unwrap();
        match &inst.terms()[0] {
            Term::Single { state, .. } => {
                assert!((state.amps()[0].re - 0.6).abs() < 1e-15);
                assert!((state.amps()[1].im - 0.8).abs() < 1e-15);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn input_errors() {
        let zero = r#"{"n": 1, "terms": [{"qubits": [0], "rank": 1, "states": [[[1e-9, 0], [0, 0]]]}]}"#;
        assert!(matches!(parse_instance::<f64>(zero), Err(InstanceError::ZeroState { .. })));
        assert!(matches!(parse_instance::<f64>("{"), Err(InstanceError::MalformedInput(_))));
        let short = r#"{"n": 2, "terms": [{"qubits": [0, 1], "rank": 1, "states": [[[1, 0]]]}]}"#;
        assert!(matches!(parse_instance::<f64>(short), Err(InstanceError::InvalidTerm { .. })));
        let rank = r#"{"n": 2, "terms": [{"qubits": [0, 1], "rank": 2, "states": [[[1, 0], [0, 0], [0, 0], [0, 0]]]}]}"#;
        assert!(matches!(parse_instance::<f64>(rank), Err(InstanceError::InvalidTerm { .. })));
    }

    #[test]
    fn solution_document_shape() {
        let doc = SolutionDoc::unsat("conflict");
        let text = serialize_solution(&doc);
        assert!(text.contains("\"unsat\""));
        assert!(!text.contains("assignment\": [\n"));
        assert_eq!(parse_solution(&text).unwrap(), doc);
    }
}
