//! Separability diagnostics built on the maximal shift.
//!
//! Two-qubit states with d_max > 1/√2 are entangled. The PPT test is run
//! alongside; it is exact for 2×2 and 2×3 and only a witness beyond that.

use serde::{Deserialize, Serialize};

use crate::bloch::{norm, BipartiteState, BlochForm};
use crate::cyclic::{d_max_with, DMaxOptions};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, partial_transpose, Subsystem};
use crate::real::RealMatrix;
use crate::scalar::{Real, C};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PptResult<T> {
    pub min_eigenvalue: T,
    /// Negative partial transpose. Exact for 2×2 and 2×3.
    pub entangled: bool,
}

/// Partial transpose on B and its smallest eigenvalue.
pub fn ppt_test<T: Real>(state: &BipartiteState<T>) -> PptResult<T> {
    let tol = T::default_tolerances();
    let pt = partial_transpose(state.rho(), state.dims(), Subsystem::B).expect("state dims");
    let eig = hermitian_eig(&pt, T::infinity()).expect("partial transpose is Hermitian");
    let min_eigenvalue = eig.values[0];
    PptResult {
        min_eigenvalue,
        entangled: min_eigenvalue < -tol.ppt,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    ProductLike,
    ClassicallyCorrelatedCompatible,
    EntangledCertified,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::ProductLike => "product-like",
            Self::ClassicallyCorrelatedCompatible => "classically-correlated-compatible",
            Self::EntangledCertified => "entangled-certified",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DetectionReport<T> {
    pub d_max: T,
    /// d_max above 1/√2 for a two-qubit state.
    pub bound_violated: bool,
    pub ppt_negative: bool,
    pub min_pt_eigenvalue: T,
    /// Only for pure two-qubit states.
    #[serde(rename = "gisin_Bmax")]
    pub gisin_bmax: Option<T>,
    /// β = α r^A (r^B)ᵀ for some α ∈ [0, 1].
    pub theorem_class: bool,
    pub classification: Classification,
}

/// Least-squares α for β ≈ α r^A (r^B)ᵀ, clamped to [0, 1], and whether the fit
/// is exact within `tol` entrywise.
pub fn theorem_fit<T: Real>(form: &BlochForm<T>, tol: T) -> (T, bool) {
    if norm(&form.r_a).is_zero() || norm(&form.r_b).is_zero() {
        return (T::zero(), form.beta.max_abs() < tol);
    }
    let model = RealMatrix::outer(&form.r_a, &form.r_b);
    let alpha = (form.beta.dot(&model) / model.frobenius_norm_sqr())
        .max(T::zero())
        .min(T::one());
    let residual = form.beta.max_abs_diff(&model.scale(alpha));
    (alpha, residual < tol)
}

pub fn detect<T: Real>(state: &BipartiteState<T>) -> Result<DetectionReport<T>> {
    detect_with(state, &DMaxOptions::default())
}

pub fn detect_with<T: Real>(
    state: &BipartiteState<T>,
    opts: &DMaxOptions<T>,
) -> Result<DetectionReport<T>> {
    let tol = &opts.tolerances;
    let shift = d_max_with(state, opts)?;
    let qubits = state.dims() == (2, 2);
    let bound_violated = qubits && shift.d > T::FRAC_1_SQRT_2() + tol.bound;
    let ppt = ppt_test(state);
    let form = BlochForm::of(state)?;
    let (_, theorem_class) = theorem_fit(&form, T::lit(1e-8));
    let gisin = if qubits && is_pure(state) {
        Some(gisin_from_dmax(shift.d))
    } else {
        None
    };
    let classification = if bound_violated || ppt.entangled {
        Classification::EntangledCertified
    } else if theorem_class {
        Classification::ProductLike
    } else {
        Classification::ClassicallyCorrelatedCompatible
    };
    Ok(DetectionReport {
        d_max: shift.d,
        bound_violated,
        ppt_negative: ppt.entangled,
        min_pt_eigenvalue: ppt.min_eigenvalue,
        gisin_bmax: gisin,
        theorem_class,
        classification,
    })
}

fn is_pure<T: Real>(state: &BipartiteState<T>) -> bool {
    (state.purity() - T::one()).abs() < T::lit(1e-9)
}

fn gisin_from_dmax<T: Real>(d: T) -> T {
    T::lit(2.0) * (T::one() + d * d).sqrt()
}

/// Maximal CHSH value of a pure two-qubit state, 2√(1 + d_max²).
pub fn gisin_bmax<T: Real>(state: &BipartiteState<T>) -> Result<T> {
    if state.dims() != (2, 2) {
        return Err(Error::Domain(format!(
            "CHSH maximum needs two qubits, got {:?}",
            state.dims()
        )));
    }
    if !is_pure(state) {
        return Err(Error::Domain(format!(
            "state is mixed (purity {})",
            state.purity()
        )));
    }
    Ok(gisin_from_dmax(
        d_max_with(state, &DMaxOptions::default())?.d,
    ))
}

/// 2√(1 + 4|k1 k2|²)
pub fn gisin_bmax_schmidt<T: Real>(k1: C<T>, k2: C<T>) -> T {
    let p = k1.norm() * k2.norm();
    T::lit(2.0) * (T::one() + T::lit(4.0) * p * p).sqrt()
}
