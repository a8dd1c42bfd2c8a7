//! Nonlocal state shift of bipartite quantum states under local cyclic
//! operations.
//!
//! A unitary U on subsystem B is *cyclic* for ρ_0 when it commutes with the
//! reduced state ρ_0^B. It then leaves both marginals untouched, yet can move
//! the joint state. The size of that move,
//! d = √(½‖ρ_0 − (I⊗U)ρ_0(I⊗U†)‖²), maximized over all cyclic U, is `d_max`.
//! For two qubits every separable state has d_max ≤ 1/√2, so a larger value
//! certifies entanglement.
//!
//! Everything is generic over the scalar type ([`Real`], implemented for `f32`
//! and `f64`); the `*64` aliases below fix it to `f64`.
//!
//! ```
//! use nlshift::{cyclic::d_max, states::schmidt_real};
//!
//! let psi = schmidt_real::<f64>(0.6).unwrap();
//! let r = d_max(&psi).unwrap();
//! assert!((r.d - 0.96).abs() < 1e-9);
//! ```

pub mod analysis;
pub mod bloch;
pub mod chsh;
pub mod cyclic;
pub mod error;
pub mod linalg;
pub mod real;
pub mod scalar;
pub mod states;

pub use analysis::{detect, ppt_test, Classification, DetectionReport};
pub use bloch::{BipartiteState, BlochForm};
pub use chsh::{protocol_run, ChshTranscript, MeasurementSettings};
pub use cyclic::{d_max, make_cyclic, shift_correlation, shift_direct, CyclicUnitary, ShiftResult};
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, Subsystem};
pub use real::RealMatrix;
pub use scalar::{Real, Tolerances};

pub type ComplexMatrix64 = ComplexMatrix<f64>;
pub type ComplexMatrix32 = ComplexMatrix<f32>;
pub type RealMatrix64 = RealMatrix<f64>;
pub type BipartiteState64 = BipartiteState<f64>;
pub type BipartiteState32 = BipartiteState<f32>;
pub type BlochForm64 = BlochForm<f64>;
pub type BlochForm32 = BlochForm<f32>;
pub type CyclicUnitary64 = CyclicUnitary<f64>;
pub type ShiftResult64 = ShiftResult<f64>;
pub type ShiftResult32 = ShiftResult<f32>;
pub type DetectionReport64 = DetectionReport<f64>;
pub type ChshTranscript64 = ChshTranscript<f64>;
pub type Tolerances64 = Tolerances<f64>;
