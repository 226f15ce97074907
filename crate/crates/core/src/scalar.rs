//! Scalar abstraction shared by every numeric module.
//!
//! All state manipulation is generic over a real floating type `T`; amplitudes
//! are `Complex<T>`. `f64` is the reference precision; `f32` works with looser
//! default tolerances.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar usable as the component type of complex amplitudes.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Tolerances matched to the precision of this type.
    fn default_tolerances() -> Tolerances<Self>;

    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }
}

impl Real for f64 {
    fn default_tolerances() -> Tolerances<f64> {
        Tolerances {
            norm: 1e-10,
            orth: 1e-10,
            ent: 1e-10,
            ind: 1e-12,
            span: 1e-8,
            eq: 1e-9,
            sat: 1e-9,
        }
    }
}

impl Real for f32 {
    fn default_tolerances() -> Tolerances<f32> {
        Tolerances {
            norm: 1e-4,
            orth: 1e-4,
            ent: 1e-4,
            ind: 1e-5,
            span: 1e-3,
            eq: 1e-5,
            sat: 1e-4,
        }
    }
}

/// Numerical thresholds used throughout the solver.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances<T> {
    /// Allowed deviation of a state's norm from one.
    pub norm: T,
    /// Largest overlap modulus still treated as orthogonal.
    pub orth: T,
    /// `|det Ψ|` above this marks a 2-qubit state as entangled.
    pub ent: T,
    /// Gram determinant below this marks two states as linearly dependent.
    pub ind: T,
    /// Allowed loss of norm when projecting a product state back onto its span.
    pub span: T,
    /// Two states are equal up to phase iff `1 - |<a|b>| <= eq`.
    pub eq: T,
    /// Overlap modulus below which a constraint counts as satisfied.
    pub sat: T,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        T::default_tolerances()
    }
}
