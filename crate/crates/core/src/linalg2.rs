//! Fixed-size complex linear algebra for one and two qubits.
//!
//! Everything here is constant time: 2-vectors, 4-vectors and 2×2 matrices.
//! A 2-qubit state `Σ c_ab |ab>` is viewed as the coefficient matrix
//! `Ψ[a][b] = c_ab`, which makes Schmidt decompositions and propagation
//! maps plain 2×2 matrix algebra.

use std::ops::Mul;

use num_complex::Complex;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::scalar::{Real, Tolerances};

/// A complex amplitude.
pub type Amp<T> = Complex<T>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("input states are linearly dependent (Gram determinant {0:e})")]
    DependentInput(f64),
    #[error("product state misses the span (captured weight {0})")]
    SpanMiss(f64),
}

#[inline]
fn c<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
fn czero<T: Real>() -> Complex<T> {
    Complex::zero()
}

fn norm_of<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr()).sqrt()
}

fn inner_of<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter()
        .zip(b)
        .fold(czero(), |acc, (x, y)| acc + x.conj() * y)
}

fn normalized<const N: usize, T: Real>(v: [Complex<T>; N]) -> Option<[Complex<T>; N]> {
    let n = norm_of(&v);
    if !n.is_finite() || n <= T::zero() {
        return None;
    }
    let inv = T::one() / n;
    Some(v.map(|a| a * inv))
}

/// 2×2 complex matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2<T> {
    pub m: [[Complex<T>; 2]; 2],
}

impl<T: Real> Mat2<T> {
    pub fn new(a: Complex<T>, b: Complex<T>, c: Complex<T>, d: Complex<T>) -> Self {
        Mat2 { m: [[a, b], [c, d]] }
    }

    pub fn identity() -> Self {
        Self::new(Complex::one(), czero(), czero(), Complex::one())
    }

    /// The antisymmetric form `[[0, 1], [-1, 0]]`; `J v` is bilinear-orthogonal to `v`.
    pub fn antisymmetric() -> Self {
        Self::new(czero(), Complex::one(), -Complex::one(), czero())
    }

    pub fn det(&self) -> Complex<T> {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> Complex<T> {
        self.m[0][0] + self.m[1][1]
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn conj(&self) -> Self {
        Mat2 {
            m: self.m.map(|row| row.map(|a| a.conj())),
        }
    }

    pub fn adjoint(&self) -> Self {
        self.transpose().conj()
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Mat2 {
            m: self.m.map(|row| row.map(|a| a * s)),
        }
    }

    pub fn frobenius(&self) -> T {
        norm_of(&[self.m[0][0], self.m[0][1], self.m[1][0], self.m[1][1]])
    }

    pub fn apply(&self, v: [Complex<T>; 2]) -> [Complex<T>; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d.norm() == T::zero() {
            return None;
        }
        let inv = Complex::<T>::one() / d;
        Some(Self::new(self.m[1][1], -self.m[0][1], -self.m[1][0], self.m[0][0]).scale(inv))
    }
}

impl<T: Real> Mul for Mat2<T> {
    type Output = Mat2<T>;

    fn mul(self, rhs: Mat2<T>) -> Mat2<T> {
        let a = &self.m;
        let b = &rhs.m;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

/// Normalized single-qubit state `a0|0> + a1|1>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Qubit1State<T> {
    amps: [Complex<T>; 2],
}

impl<T: Real> Qubit1State<T> {
    /// Normalizes the given amplitudes; `None` for a zero or non-finite vector.
    pub fn new(a0: Complex<T>, a1: Complex<T>) -> Option<Self> {
        Self::from_amps([a0, a1])
    }

    pub fn from_amps(amps: [Complex<T>; 2]) -> Option<Self> {
        normalized(amps).map(|amps| Qubit1State { amps })
    }

    pub fn from_real(a0: T, a1: T) -> Option<Self> {
        Self::new(c(a0, T::zero()), c(a1, T::zero()))
    }

    /// Stores amplitudes already known to be normalized.
    pub(crate) fn from_unit_amps(amps: [Complex<T>; 2]) -> Self {
        Qubit1State { amps }
    }

    /// `|0>`
    pub fn zero() -> Self {
        Qubit1State {
            amps: [Complex::one(), czero()],
        }
    }

    /// `|1>`
    pub fn one() -> Self {
        Qubit1State {
            amps: [czero(), Complex::one()],
        }
    }

    pub fn amps(&self) -> [Complex<T>; 2] {
        self.amps
    }

    /// `<self|other>`
    pub fn inner(&self, other: &Self) -> Complex<T> {
        inner_of(&self.amps, &other.amps)
    }

    /// `|<self|other>|`
    pub fn overlap(&self, other: &Self) -> T {
        self.inner(other).norm()
    }

    /// Hermitian-orthogonal partner: `(a0, a1) -> (conj a1, -conj a0)`.
    pub fn perp(&self) -> Self {
        let [a0, a1] = self.amps;
        Qubit1State {
            amps: [a1.conj(), -a0.conj()],
        }
    }

    pub fn eq_up_to_phase(&self, other: &Self, tol: T) -> bool {
        T::one() - self.overlap(other) <= tol
    }

    pub fn tensor(&self, other: &Self) -> Qubit2State<T> {
        let [a0, a1] = self.amps;
        let [b0, b1] = other.amps;
        Qubit2State {
            amps: [a0 * b0, a0 * b1, a1 * b0, a1 * b1],
        }
    }

    pub fn norm(&self) -> T {
        norm_of(&self.amps)
    }

    /// Multiplies by a global phase `e^{i theta}`.
    pub fn with_phase(&self, theta: T) -> Self {
        let p = Complex::from_polar(T::one(), theta);
        Qubit1State {
            amps: self.amps.map(|a| a * p),
        }
    }

    pub fn cast<U: Real>(&self) -> Qubit1State<U> {
        Qubit1State {
            amps: self.amps.map(cast_amp),
        }
    }
}

pub(crate) fn cast_amp<T: Real, U: Real>(a: Complex<T>) -> Complex<U> {
    Complex::new(
        U::from_f64(a.re.to_f64().unwrap_or(f64::NAN)).unwrap_or_else(U::nan),
        U::from_f64(a.im.to_f64().unwrap_or(f64::NAN)).unwrap_or_else(U::nan),
    )
}

/// The unique (up to scale) `b` with `v0 b0 + v1 b1 = 0`, i.e. `b ∝ (v1, -v0)`.
///
/// `None` when `v` vanishes.
pub fn bilinear_perp<T: Real>(v: [Complex<T>; 2]) -> Option<Qubit1State<T>> {
    Qubit1State::new(v[1], -v[0])
}

/// Normalized 2-qubit state with amplitudes in the order `|00>, |01>, |10>, |11>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Qubit2State<T> {
    amps: [Complex<T>; 4],
}

/// Schmidt decomposition `λ1 x1⊗y1 + λ2 x2⊗y2` of a 2-qubit state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchmidtForm<T> {
    pub lambda1: T,
    pub lambda2: T,
    pub x1: Qubit1State<T>,
    pub x2: Qubit1State<T>,
    pub y1: Qubit1State<T>,
    pub y2: Qubit1State<T>,
}

impl<T: Real> SchmidtForm<T> {
    pub fn reconstruct(&self) -> [Complex<T>; 4] {
        let a = self.x1.tensor(&self.y1).amps;
        let b = self.x2.tensor(&self.y2).amps;
        let mut out = [czero(); 4];
        for k in 0..4 {
            out[k] = a[k] * self.lambda1 + b[k] * self.lambda2;
        }
        out
    }
}

/// Entanglement classification of a 2-qubit state at a given tolerance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Entanglement<T> {
    Entangled,
    /// The state is `≈ left ⊗ right` up to phase.
    Product(Qubit1State<T>, Qubit1State<T>),
}

impl<T: Real> Qubit2State<T> {
    pub fn new(c00: Complex<T>, c01: Complex<T>, c10: Complex<T>, c11: Complex<T>) -> Option<Self> {
        Self::from_amps([c00, c01, c10, c11])
    }

    pub fn from_amps(amps: [Complex<T>; 4]) -> Option<Self> {
        normalized(amps).map(|amps| Qubit2State { amps })
    }

    pub fn from_real(c00: T, c01: T, c10: T, c11: T) -> Option<Self> {
        let z = T::zero();
        Self::new(c(c00, z), c(c01, z), c(c10, z), c(c11, z))
    }

    pub(crate) fn from_unit_amps(amps: [Complex<T>; 4]) -> Self {
        Qubit2State { amps }
    }

    pub fn from_matrix(m: &Mat2<T>) -> Option<Self> {
        Self::from_amps([m.m[0][0], m.m[0][1], m.m[1][0], m.m[1][1]])
    }

    /// Computational basis state `|ab>` for `index = 2a + b`.
    pub fn basis(index: usize) -> Self {
        let mut amps = [czero(); 4];
        amps[index] = Complex::one();
        Qubit2State { amps }
    }

    /// `(|01> - |10>)/√2`
    pub fn singlet() -> Self {
        Self::from_real(T::zero(), T::one(), -T::one(), T::zero()).expect("nonzero")
    }

    /// `(|00> + |11>)/√2`
    pub fn phi_plus() -> Self {
        Self::from_real(T::one(), T::zero(), T::zero(), T::one()).expect("nonzero")
    }

    pub fn amps(&self) -> [Complex<T>; 4] {
        self.amps
    }

    /// Coefficient matrix `Ψ[a][b] = c_ab`.
    pub fn matrix(&self) -> Mat2<T> {
        let a = self.amps;
        Mat2::new(a[0], a[1], a[2], a[3])
    }

    pub fn det(&self) -> Complex<T> {
        self.matrix().det()
    }

    pub fn inner(&self, other: &Self) -> Complex<T> {
        inner_of(&self.amps, &other.amps)
    }

    pub fn overlap(&self, other: &Self) -> T {
        self.inner(other).norm()
    }

    pub fn eq_up_to_phase(&self, other: &Self, tol: T) -> bool {
        T::one() - self.overlap(other) <= tol
    }

    /// The same state with the two qubits exchanged.
    pub fn swap(&self) -> Self {
        let [a, b, c, d] = self.amps;
        Qubit2State { amps: [a, c, b, d] }
    }

    pub fn norm(&self) -> T {
        norm_of(&self.amps)
    }

    pub fn with_phase(&self, theta: T) -> Self {
        let p = Complex::from_polar(T::one(), theta);
        Qubit2State {
            amps: self.amps.map(|a| a * p),
        }
    }

    pub fn cast<U: Real>(&self) -> Qubit2State<U> {
        Qubit2State {
            amps: self.amps.map(cast_amp),
        }
    }

    /// Singular value decomposition of the coefficient matrix.
    ///
    /// The top left singular vector comes from the 2×2 Hermitian eigenproblem
    /// of `ΨΨᴴ`; the second pair is fixed as the Hermitian perpendiculars of
    /// the first, with the residual phase folded into `y2`. `λ2` is read off
    /// the triangular remainder, so `λ1 λ2 = |det Ψ|` holds to rounding even
    /// when `λ2` is tiny.
    pub fn schmidt(&self) -> SchmidtForm<T> {
        let psi = self.matrix();
        let a = psi * psi.adjoint();
        let p = a.m[0][0].re;
        let r = a.m[1][1].re;
        let q = a.m[0][1];
        let half = T::lit(0.5);
        let disc = ((p - r) * (p - r) * half * half + q.norm_sqr()).sqrt();
        let mu = (p + r) * half + disc;

        let va = [q, c(mu - p, T::zero())];
        let vb = [c(mu - r, T::zero()), q.conj()];
        let pick = if norm_of(&va) >= norm_of(&vb) { va } else { vb };
        let x1 = Qubit1State::from_amps(pick).unwrap_or_else(Qubit1State::zero);

        // y1 ∝ Ψᵀ conj(x1)
        let xc = x1.amps.map(|z| z.conj());
        let y1_raw = psi.transpose().apply(xc);
        let lambda1 = norm_of(&y1_raw);
        let y1 = Qubit1State::from_amps(y1_raw).unwrap_or_else(Qubit1State::zero);

        let x2 = x1.perp();
        let mut y2 = y1.perp();
        let x2c = x2.amps.map(|z| z.conj());
        let row = psi.transpose().apply(x2c);
        let coeff = row[0] * y2.amps[0].conj() + row[1] * y2.amps[1].conj();
        let lambda2 = coeff.norm();
        if lambda2 > T::zero() {
            let ph = coeff / lambda2;
            y2 = Qubit1State {
                amps: y2.amps.map(|z| z * ph),
            };
        }

        if lambda2 > lambda1 {
            SchmidtForm {
                lambda1: lambda2,
                lambda2: lambda1,
                x1: x2,
                x2: x1,
                y1: y2,
                y2: y1,
            }
        } else {
            SchmidtForm {
                lambda1,
                lambda2,
                x1,
                x2,
                y1,
                y2,
            }
        }
    }

    /// `|det Ψ| > tol`
    pub fn is_entangled(&self, tol: T) -> bool {
        self.det().norm() > tol
    }

    /// Entangled, or product together with its two factors.
    pub fn classify(&self, tol: T) -> Entanglement<T> {
        if self.is_entangled(tol) {
            Entanglement::Entangled
        } else {
            let s = self.schmidt();
            // fold λ1's sign-free phase into the left factor; λ1 ≈ 1 here
            Entanglement::Product(s.x1, s.y1)
        }
    }
}

/// Orthonormal vectors completing `basis` (assumed orthonormal) to a basis of C⁴.
pub fn complete_basis<T: Real>(basis: &[[Complex<T>; 4]]) -> Vec<[Complex<T>; 4]> {
    let mut all: Vec<[Complex<T>; 4]> = basis.to_vec();
    let mut added = Vec::with_capacity(4 - basis.len().min(4));
    while all.len() < 4 {
        let mut best: Option<([Complex<T>; 4], T)> = None;
        for k in 0..4 {
            let mut v = [czero(); 4];
            v[k] = Complex::one();
            // two Gram-Schmidt sweeps for stability
            for _ in 0..2 {
                for u in &all {
                    let proj = inner_of(u, &v);
                    for t in 0..4 {
                        v[t] -= u[t] * proj;
                    }
                }
            }
            let n = norm_of(&v);
            if best.as_ref().is_none_or(|(_, bn)| n > *bn) {
                best = Some((v, n));
            }
        }
        let (v, n) = best.expect("four candidates");
        let inv = T::one() / n;
        let v = v.map(|a| a * inv);
        all.push(v);
        added.push(v);
    }
    added
}

/// A product state `left ⊗ right` lying in `span{v1, v2}`.
///
/// Works on an orthonormal basis `{ψ, φ}` of the orthocomplement and solves
/// `αᵀΨβ = αᵀΦβ = 0` with `Ψ = conj(ψ_ab)`, `Φ = conj(φ_ab)`: `β` is taken
/// from the null space of a singular `Φ`, or else as an eigenvector of `Φ⁻¹Ψ`
/// for the eigenvalue of larger modulus; then `α` annihilates `Φβ`.
pub fn product_in_span<T: Real>(
    v1: &Qubit2State<T>,
    v2: &Qubit2State<T>,
    tol: &Tolerances<T>,
) -> Result<(Qubit1State<T>, Qubit1State<T>), LinalgError> {
    let u1 = v1.amps;
    let proj = inner_of(&u1, &v2.amps);
    let mut r = v2.amps;
    for t in 0..4 {
        r[t] -= u1[t] * proj;
    }
    let gram = r.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr());
    if gram.is_nan() || gram <= tol.ind {
        return Err(LinalgError::DependentInput(gram.to_f64().unwrap_or(0.0)));
    }
    let u2 = normalized(r).expect("positive Gram determinant");

    let comp = complete_basis(&[u1, u2]);
    let conj_mat = |v: &[Complex<T>; 4]| Mat2::new(v[0].conj(), v[1].conj(), v[2].conj(), v[3].conj());
    let mut big_psi = conj_mat(&comp[0]);
    let mut big_phi = conj_mat(&comp[1]);
    // Either complement vector may play Φ; use the better conditioned one.
    if big_psi.det().norm() > big_phi.det().norm() {
        std::mem::swap(&mut big_psi, &mut big_phi);
    }

    let (alpha, beta) = if big_phi.det().norm() <= tol.ent {
        let m = &big_phi.m;
        let na = [m[0][1], -m[0][0]];
        let nb = [m[1][1], -m[1][0]];
        let pick = if norm_of(&na) >= norm_of(&nb) { na } else { nb };
        let beta = Qubit1State::from_amps(pick).unwrap_or_else(Qubit1State::zero);
        let w = big_psi.apply(beta.amps);
        let alpha = bilinear_perp(w).unwrap_or_else(Qubit1State::zero);
        (alpha, beta)
    } else {
        let m = big_phi.inverse().expect("nonsingular") * big_psi;
        let half = T::lit(0.5);
        let tr = m.trace();
        let disc = (tr * tr * half * half - m.det()).sqrt();
        let e1 = tr * half + disc;
        let e2 = tr * half - disc;
        let ev = if e1.norm() >= e2.norm() { e1 } else { e2 };
        let va = [m.m[0][1], ev - m.m[0][0]];
        let vb = [ev - m.m[1][1], m.m[1][0]];
        let pick = if norm_of(&va) >= norm_of(&vb) { va } else { vb };
        let beta = Qubit1State::from_amps(pick).unwrap_or_else(Qubit1State::zero);
        let w = big_phi.apply(beta.amps);
        let alpha = bilinear_perp(w).unwrap_or_else(Qubit1State::zero);
        (alpha, beta)
    };

    let w = alpha.tensor(&beta).amps;
    let captured = inner_of(&u1, &w).norm_sqr() + inner_of(&u2, &w).norm_sqr();
    if captured < T::one() - tol.span {
        return Err(LinalgError::SpanMiss(captured.to_f64().unwrap_or(0.0)));
    }
    Ok((alpha, beta))
}
