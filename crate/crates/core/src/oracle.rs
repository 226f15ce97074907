//! Independent checks: local energies of product states, dense exact
//! diagonalization for small `n`, a classical 2-SAT reference and kernel
//! comparison of small operators.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use thiserror::Error;

use crate::assignment::{Factor, Solution};
use crate::instance::generate::Clause;
use crate::instance::{Instance, Term};
use crate::scalar::Real;

type C = Complex<f64>;

/// Largest qubit count the dense oracle accepts.
pub const N_MAX: usize = 10;
/// Minimum energies at or below this count as satisfiable.
pub const SAT_THRESHOLD: f64 = 1e-9;
/// Minimum energies in `(SAT_THRESHOLD, AMBIGUOUS_HIGH)` are ambiguous.
pub const AMBIGUOUS_HIGH: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("{n} qubits exceeds the dense limit of {max}")]
    TooLarge { n: usize, max: usize },
    #[error("solution does not match the instance: {0}")]
    ArityMismatch(String),
    #[error("operators act on dimensions {0} and {1}")]
    DimensionMismatch(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DenseVerdict {
    Sat,
    Unsat,
    /// Inside the band where floating point cannot separate the two.
    Ambiguous,
}

pub fn classify_energy(e: f64) -> DenseVerdict {
    if e <= SAT_THRESHOLD {
        DenseVerdict::Sat
    } else if e < AMBIGUOUS_HIGH {
        DenseVerdict::Ambiguous
    } else {
        DenseVerdict::Unsat
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyReport {
    pub sum: f64,
    pub max: f64,
}

fn to_c<T: Real>(a: Complex<T>) -> C {
    C::new(a.re.to_f64().unwrap_or(f64::NAN), a.im.to_f64().unwrap_or(f64::NAN))
}

fn term_states<T: Real>(t: &Term<T>) -> Vec<Vec<C>> {
    match t {
        Term::Single { state, .. } => vec![state.amps().iter().map(|a| to_c(*a)).collect()],
        Term::Pair { states, .. } => states
            .iter()
            .map(|s| s.amps().iter().map(|a| to_c(*a)).collect())
            .collect(),
    }
}

fn factor_parts<T: Real>(f: &Factor<T>) -> (Vec<usize>, Vec<C>) {
    match f {
        Factor::Single { qubit, state, .. } => (vec![*qubit], state.amps().iter().map(|a| to_c(*a)).collect()),
        Factor::Pair { qubits: (i, k), state } => {
            (vec![*i, *k], state.amps().iter().map(|a| to_c(*a)).collect())
        }
    }
}

/// `⟨Φ|Π|Φ⟩` for a state `phi` on `local` qubits (first listed is most
/// significant) and a projector spanned by `states` on `qubits`.
fn local_energy(local: &[usize], phi: &[C], qubits: &[usize], states: &[Vec<C>]) -> f64 {
    let nl = local.len();
    let pos: Vec<usize> = qubits
        .iter()
        .map(|q| nl - 1 - local.iter().position(|l| l == q).expect("term qubit is local"))
        .collect();
    let mask: usize = pos.iter().map(|p| 1 << p).sum();
    let mut total = 0.0;
    let mut acc = vec![C::new(0.0, 0.0); phi.len()];
    for psi in states {
        acc.iter_mut().for_each(|a| *a = C::new(0.0, 0.0));
        for (x, amp) in phi.iter().enumerate() {
            let tb = pos.iter().fold(0, |t, p| (t << 1) | ((x >> p) & 1));
            acc[x & !mask] += psi[tb].conj() * amp;
        }
        total += acc.iter().map(|a| a.norm_sqr()).sum::<f64>();
    }
    total
}

/// Sum and maximum of the per-term energies of a product-form state.
///
/// Each term is evaluated on the at most four qubits of the factors touching it.
pub fn product_energy<T: Real>(inst: &Instance<T>, sol: &Solution<T>) -> Result<EnergyReport, OracleError> {
    if sol.n != inst.n() {
        return Err(OracleError::ArityMismatch(format!("n = {} vs {}", sol.n, inst.n())));
    }
    let mut owner = vec![usize::MAX; inst.n()];
    let parts: Vec<(Vec<usize>, Vec<C>)> = sol.factors.iter().map(factor_parts).collect();
    for (fi, (qs, amps)) in parts.iter().enumerate() {
        if amps.len() != 1 << qs.len() {
            return Err(OracleError::ArityMismatch(format!("factor {fi} has {} amplitudes", amps.len())));
        }
        for &q in qs {
            if q >= inst.n() {
                return Err(OracleError::ArityMismatch(format!("qubit {q} out of range")));
            }
            if owner[q] != usize::MAX {
                return Err(OracleError::ArityMismatch(format!("qubit {q} assigned twice")));
            }
            owner[q] = fi;
        }
    }
    if let Some(q) = owner.iter().position(|o| *o == usize::MAX) {
        return Err(OracleError::ArityMismatch(format!("qubit {q} unassigned")));
    }
    let mut rep = EnergyReport { sum: 0.0, max: 0.0 };
    for t in inst.terms() {
        let qubits = t.qubits();
        let mut fs: Vec<usize> = qubits.iter().map(|q| owner[*q]).collect();
        fs.dedup();
        let mut local = Vec::new();
        let mut phi = vec![C::new(1.0, 0.0)];
        for f in fs {
            let (qs, amps) = &parts[f];
            local.extend_from_slice(qs);
            phi = phi.iter().flat_map(|a| amps.iter().map(move |b| a * b)).collect();
        }
        let e = local_energy(&local, &phi, &qubits, &term_states(t));
        rep.sum += e;
        rep.max = rep.max.max(e);
    }
    Ok(rep)
}

/// Dense Hermitian matrix of `H = Σ Π_e` on `n ≤ N_MAX` qubits; qubit 0 is the most significant bit.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    pub n: usize,
    pub matrix: DMatrix<C>,
}

impl DenseOperator {
    pub fn from_instance<T: Real>(inst: &Instance<T>) -> Result<Self, OracleError> {
        let n = inst.n();
        if n > N_MAX {
            return Err(OracleError::TooLarge { n, max: N_MAX });
        }
        let dim = 1usize << n;
        let mut h = DMatrix::<C>::zeros(dim, dim);
        for t in inst.terms() {
            let qs = t.qubits();
            let states = term_states(t);
            let k = states[0].len();
            let mut p = vec![C::new(0.0, 0.0); k * k];
            for s in &states {
                for r in 0..k {
                    for c in 0..k {
                        p[r * k + c] += s[r] * s[c].conj();
                    }
                }
            }
            let shifts: Vec<usize> = qs.iter().map(|q| n - 1 - q).collect();
            let mask: usize = shifts.iter().map(|s| 1 << s).sum();
            for x in 0..dim {
                let col = shifts.iter().fold(0, |t, s| (t << 1) | ((x >> s) & 1));
                for row in 0..k {
                    let mut y = x & !mask;
                    for (bi, s) in shifts.iter().enumerate() {
                        let bit = (row >> (shifts.len() - 1 - bi)) & 1;
                        y |= bit << s;
                    }
                    h[(y, x)] += p[row * k + col];
                }
            }
        }
        Ok(DenseOperator { n, matrix: h })
    }

    pub fn min_energy(&self) -> f64 {
        self.matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Orthogonal projector onto eigenvectors with eigenvalue `<= SAT_THRESHOLD`.
    pub fn kernel_projector(&self) -> DMatrix<C> {
        let eig = self.matrix.clone().symmetric_eigen();
        let dim = self.matrix.nrows();
        let mut p = DMatrix::<C>::zeros(dim, dim);
        for (k, ev) in eig.eigenvalues.iter().enumerate() {
            if *ev <= SAT_THRESHOLD {
                let v = eig.eigenvectors.column(k);
                p += v * v.adjoint();
            }
        }
        p
    }

    /// `⟨v|H|v⟩` for a normalized `v`.
    pub fn expectation(&self, v: &DVector<C>) -> f64 {
        (v.adjoint() * &self.matrix * v)[(0, 0)].re
    }
}

/// Minimum eigenvalue of the dense Hamiltonian.
pub fn dense_min_energy<T: Real>(inst: &Instance<T>) -> Result<f64, OracleError> {
    Ok(DenseOperator::from_instance(inst)?.min_energy())
}

/// Full state vector of a product-form solution.
pub fn solution_vector<T: Real>(sol: &Solution<T>) -> Result<DVector<C>, OracleError> {
    let n = sol.n;
    if n > N_MAX {
        return Err(OracleError::TooLarge { n, max: N_MAX });
    }
    let parts: Vec<(Vec<usize>, Vec<C>)> = sol.factors.iter().map(factor_parts).collect();
    let dim = 1usize << n;
    let v = DVector::from_fn(dim, |x, _| {
        parts.iter().fold(C::new(1.0, 0.0), |acc, (qs, amps)| {
            let idx = qs.iter().fold(0, |t, q| (t << 1) | ((x >> (n - 1 - q)) & 1));
            acc * amps[idx]
        })
    });
    Ok(v)
}

/// `⟨s|H|s⟩` computed densely.
pub fn dense_expectation<T: Real>(inst: &Instance<T>, sol: &Solution<T>) -> Result<f64, OracleError> {
    let op = DenseOperator::from_instance(inst)?;
    Ok(op.expectation(&solution_vector(sol)?))
}

/// Largest entrywise modulus of the difference of the two kernel projectors.
pub fn kernel_projector_distance(a: &DenseOperator, b: &DenseOperator) -> Result<f64, OracleError> {
    let (da, db) = (a.matrix.nrows(), b.matrix.nrows());
    if da != db {
        return Err(OracleError::DimensionMismatch(da, db));
    }
    let d = a.kernel_projector() - b.kernel_projector();
    Ok(d.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

fn lit_node(var: usize, positive: bool) -> usize {
    2 * var + usize::from(!positive)
}

/// Implication-graph 2-SAT decision (strongly connected components).
pub fn classical_2sat_reference(n: usize, clauses: &[Clause]) -> bool {
    let nodes = 2 * n;
    let mut adj = vec![Vec::new(); nodes];
    let mut radj = vec![Vec::new(); nodes];
    for Clause(a, b) in clauses {
        let (na, nb) = (lit_node(a.var, a.positive), lit_node(b.var, b.positive));
        // ¬a → b and ¬b → a
        adj[na ^ 1].push(nb);
        adj[nb ^ 1].push(na);
        radj[nb].push(na ^ 1);
        radj[na].push(nb ^ 1);
    }
    // Kosaraju: finishing order on adj, components on radj
    let mut order = Vec::with_capacity(nodes);
    let mut seen = vec![false; nodes];
    for s in 0..nodes {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut stack = vec![(s, 0usize)];
        while let Some((v, i)) = stack.pop() {
            if i < adj[v].len() {
                stack.push((v, i + 1));
                let w = adj[v][i];
                if !seen[w] {
                    seen[w] = true;
                    stack.push((w, 0));
                }
            } else {
                order.push(v);
            }
        }
    }
    let mut comp = vec![usize::MAX; nodes];
    let mut c = 0;
    for &s in order.iter().rev() {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = c;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for &w in &radj[v] {
                if comp[w] == usize::MAX {
                    comp[w] = c;
                    stack.push(w);
                }
            }
        }
        c += 1;
    }
    (0..n).all(|v| comp[2 * v] != comp[2 * v + 1])
}

/// Exhaustive 2-SAT decision for small `n`.
pub fn brute_force_2sat(n: usize, clauses: &[Clause]) -> bool {
    assert!(n <= 24, "exhaustive search limited to 24 variables");
    (0u32..1 << n).any(|bits| {
        let x: Vec<bool> = (0..n).map(|v| (bits >> v) & 1 == 1).collect();
        clauses.iter().all(|c| c.eval(&x))
    })
}
