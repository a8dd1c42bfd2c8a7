//! Scalar abstraction shared by every module.
//!
//! All numerics are written against [`Real`], implemented for `f32` and `f64`.
//! Exact or rational scalars are not supported: eigendecompositions, square
//! roots and trigonometry are needed throughout.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, NumAssign};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal, rounding if needed.
    fn lit(x: f64) -> Self;

    fn to_f64(self) -> f64;

    /// Default numerical tolerances for this precision.
    fn default_tolerances() -> Tolerances<Self>;
}

impl Real for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self
    }

    fn default_tolerances() -> Tolerances<Self> {
        Tolerances {
            herm: 1e-10,
            unitary: 1e-10,
            trace: 1e-10,
            psd: 1e-10,
            cyclic: 1e-9,
            eps_deg: 1e-9,
            bound: 1e-9,
            radicand: 1e-12,
            cross_check: 1e-9,
            ppt: 1e-10,
            normalization: 1e-12,
        }
    }
}

impl Real for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }

    fn default_tolerances() -> Tolerances<Self> {
        Tolerances {
            herm: 1e-5,
            unitary: 1e-5,
            trace: 1e-5,
            psd: 1e-5,
            cyclic: 1e-4,
            eps_deg: 1e-4,
            bound: 1e-4,
            radicand: 1e-5,
            cross_check: 1e-3,
            ppt: 1e-5,
            normalization: 1e-5,
        }
    }
}

/// Complex scalar over a [`Real`].
pub type C<T> = Complex<T>;

#[inline]
pub(crate) fn cr<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}

#[cfg(test)]
#[inline]
pub(crate) fn cx<T: Real>(re: f64, im: f64) -> C<T> {
    Complex::new(T::lit(re), T::lit(im))
}

/// Absolute tolerances used by validation and consistency checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(bound = "T: Real")]
pub struct Tolerances<T> {
    /// Max entrywise |M - M†| for a Hermitian operator.
    pub herm: T,
    /// Max entrywise |U†U - I| for a unitary.
    pub unitary: T,
    /// |Tr(ρ) - 1| for a density matrix.
    pub trace: T,
    /// Smallest eigenvalue allowed for a state is `-psd`.
    pub psd: T,
    /// Max entrywise commutator |[ρ_B, U]|.
    pub cyclic: T,
    /// Relative gap below which eigenvalues of ρ_B share a block.
    pub eps_deg: T,
    /// Margin above 1/√2 required before certifying entanglement.
    pub bound: T,
    /// Negative radicands above `-radicand` are rounding and clamp to zero.
    pub radicand: T,
    /// Allowed disagreement between the two shift formulas.
    pub cross_check: T,
    /// Partial-transpose eigenvalue below `-ppt` flags entanglement.
    pub ppt: T,
    /// Normalization slack for amplitudes and weights.
    pub normalization: T,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        T::default_tolerances()
    }
}

impl<T: Real> Tolerances<T> {
    /// True when every tolerance is strictly positive.
    pub fn is_valid(&self) -> bool {
        [
            self.herm,
            self.unitary,
            self.trace,
            self.psd,
            self.cyclic,
            self.eps_deg,
            self.bound,
            self.radicand,
            self.cross_check,
            self.ppt,
            self.normalization,
        ]
        .iter()
        .all(|t| *t > T::zero() && t.is_finite())
    }
}
