//! Local cyclic operations on subsystem B and the nonlocal shift they induce.
//!
//! A unitary U on B is cyclic for ρ_0 when [ρ_0^B, U] = 0. Such unitaries
//! are exactly the block-diagonal unitaries in an eigenbasis of ρ_0^B, one
//! block per (numerically) degenerate eigenvalue. The shift
//!
//! ```text
//! d(ρ_0, U) = √(½ Tr|ρ_0 − ρ_f|²) = √(Tr ρ_0² − Tr ρ_0 ρ_f),   ρ_f = (I⊗U) ρ_0 (I⊗U†)
//! ```
//!
//! is computed both directly and from the correlation matrix,
//! d² = (N_A−1)(N_B−1)/(N_A N_B) · (|β|² − Σ β_ij β^f_ij).

mod dmax;

pub use dmax::{
    d_max, d_max_closed_form, d_max_generic, d_max_with, su2_axis_angle, DMaxOptions, Method,
    OptimizerDiagnostics, ShiftFormula, ShiftResult,
};

use serde::{Deserialize, Serialize};

use crate::bloch::{local_weight, BipartiteState, BlochForm};
use crate::error::{Error, Result};
use crate::linalg::{gell_mann_basis, hermitian_eig, ComplexMatrix, GeneratorBasis, Subsystem};
use crate::real::RealMatrix;
use crate::scalar::{cr, Real, Tolerances};

/// Eigenvalues of ρ_0^B that are merged into one block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EigenBlock<T> {
    /// Mean of the merged eigenvalues.
    pub eigenvalue: T,
    /// Column indices into the eigenbasis; always a contiguous range.
    pub indices: Vec<usize>,
}

impl<T> EigenBlock<T> {
    pub fn size(&self) -> usize {
        self.indices.len()
    }

    pub fn start(&self) -> usize {
        self.indices[0]
    }
}

/// Eigenspace structure of ρ_0^B, which fixes its unitary commutant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CommutantStructure<T: Real> {
    /// Ascending eigenvalues of ρ_0^B.
    pub eigenvalues: Vec<T>,
    /// Unitary whose columns are the matching eigenvectors.
    pub basis: ComplexMatrix<T>,
    pub blocks: Vec<EigenBlock<T>>,
    /// Relative degeneracy threshold used for the grouping.
    pub eps_deg: T,
}

impl<T: Real> CommutantStructure<T> {
    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(EigenBlock::size).collect()
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// V (⊕ W_k) V†
    pub fn assemble(&self, block_unitaries: &[ComplexMatrix<T>]) -> ComplexMatrix<T> {
        let v = &self.basis;
        &(v * &self.block_diagonal(block_unitaries)) * &v.adjoint()
    }

    /// ⊕ W_k in the eigenbasis.
    pub fn block_diagonal(&self, block_unitaries: &[ComplexMatrix<T>]) -> ComplexMatrix<T> {
        let n = self.dim();
        let mut out = ComplexMatrix::zeros(n, n);
        for (blk, w) in self.blocks.iter().zip(block_unitaries) {
            let s = blk.start();
            for r in 0..blk.size() {
                for c in 0..blk.size() {
                    out[(s + r, s + c)] = w[(r, c)];
                }
            }
        }
        out
    }
}

/// Groups the spectrum of ρ_0^B: neighbouring eigenvalues merge when their
/// gap is below `eps_deg · max(1, λ_max)`.
pub fn commutant_basis<T: Real>(state: &BipartiteState<T>, eps_deg: T) -> CommutantStructure<T> {
    let rho_b = state.reduced(Subsystem::B);
    let eig = hermitian_eig(&rho_b, T::infinity()).expect("reduced state is Hermitian");
    let values = eig.values;
    let lmax = values.last().copied().unwrap_or(T::zero());
    let gap = eps_deg * T::one().max(lmax);
    let mut blocks: Vec<EigenBlock<T>> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match blocks.last_mut() {
            Some(b) if (v - values[i - 1]).abs() < gap => b.indices.push(i),
            _ => blocks.push(EigenBlock {
                eigenvalue: v,
                indices: vec![i],
            }),
        }
    }
    for b in &mut blocks {
        let sum: T = b.indices.iter().map(|&i| values[i]).sum();
        b.eigenvalue = sum / T::lit(b.size() as f64);
    }
    CommutantStructure {
        eigenvalues: values,
        basis: eig.vectors,
        blocks,
        eps_deg,
    }
}

/// Stable 64-bit FNV-1a fingerprint of a state's dims and matrix entries.
pub fn state_fingerprint<T: Real>(state: &BipartiteState<T>) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |x: u64| {
        for byte in x.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    let (na, nb) = state.dims();
    eat(na as u64);
    eat(nb as u64);
    for z in state.rho().as_slice() {
        eat(z.re.to_f64().to_bits());
        eat(z.im.to_f64().to_bits());
    }
    format!("{h:016x}")
}

/// One block of a cyclic unitary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CyclicBlock<T: Real> {
    pub eigenvalue: T,
    pub indices: Vec<usize>,
    pub unitary: ComplexMatrix<T>,
}

/// A unitary on B that commutes with ρ_0^B, with its block structure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CyclicUnitary<T: Real> {
    pub unitary: ComplexMatrix<T>,
    /// Eigenbasis V of ρ_0^B.
    pub eigenbasis: ComplexMatrix<T>,
    pub blocks: Vec<CyclicBlock<T>>,
    pub reference_state_id: String,
}

impl<T: Real> CyclicUnitary<T> {
    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.unitary
    }

    pub fn identity(state: &BipartiteState<T>) -> Self {
        let s = commutant_basis(state, Tolerances::<T>::default().eps_deg);
        let blocks = s
            .blocks
            .iter()
            .map(|b| ComplexMatrix::identity(b.size()))
            .collect::<Vec<_>>();
        Self::from_parts(state, &s, blocks)
    }

    fn from_parts(
        state: &BipartiteState<T>,
        s: &CommutantStructure<T>,
        block_unitaries: Vec<ComplexMatrix<T>>,
    ) -> Self {
        let unitary = s.assemble(&block_unitaries);
        Self {
            unitary,
            eigenbasis: s.basis.clone(),
            blocks: s
                .blocks
                .iter()
                .zip(block_unitaries)
                .map(|(b, w)| CyclicBlock {
                    eigenvalue: b.eigenvalue,
                    indices: b.indices.clone(),
                    unitary: w,
                })
                .collect(),
            reference_state_id: state_fingerprint(state),
        }
    }

    /// Wraps an arbitrary unitary after checking that it commutes with ρ_0^B.
    /// The stored blocks are the diagonal blocks of V†UV.
    pub fn from_unitary(
        state: &BipartiteState<T>,
        u: ComplexMatrix<T>,
        tol: &Tolerances<T>,
    ) -> Result<Self> {
        let nb = state.dims().1;
        if u.rows() != nb || u.cols() != nb {
            return Err(Error::InvalidDimension(format!("U must be {nb}x{nb}")));
        }
        let uerr = u.unitarity_error();
        if uerr > tol.unitary {
            return Err(Error::InvalidOperator(format!(
                "U is not unitary (|U†U - I| = {:e})",
                uerr.to_f64()
            )));
        }
        let comm = commutator_norm(state, &u);
        if comm > tol.cyclic {
            return Err(Error::NotCyclic {
                norm: comm.to_f64(),
                tol: tol.cyclic.to_f64(),
            });
        }
        let s = commutant_basis(state, tol.eps_deg);
        let inner = &(&s.basis.adjoint() * &u) * &s.basis;
        let blocks = s
            .blocks
            .iter()
            .map(|b| {
                let k = b.start();
                ComplexMatrix::from_fn(b.size(), b.size(), |r, c| inner[(k + r, k + c)])
            })
            .collect();
        let mut cu = Self::from_parts(state, &s, blocks);
        cu.unitary = u;
        Ok(cu)
    }

    /// Max entrywise |[ρ_0^B, U]|.
    pub fn commutator_norm(&self, state: &BipartiteState<T>) -> T {
        commutator_norm(state, &self.unitary)
    }
}

pub fn commutator_norm<T: Real>(state: &BipartiteState<T>, u: &ComplexMatrix<T>) -> T {
    state.reduced(Subsystem::B).commutator(u).max_abs()
}

/// Assembles a cyclic unitary from one unitary per eigenspace block of ρ_0^B.
pub fn make_cyclic<T: Real>(
    state: &BipartiteState<T>,
    block_unitaries: Vec<ComplexMatrix<T>>,
) -> Result<CyclicUnitary<T>> {
    make_cyclic_with(state, block_unitaries, &Tolerances::default())
}

pub fn make_cyclic_with<T: Real>(
    state: &BipartiteState<T>,
    block_unitaries: Vec<ComplexMatrix<T>>,
    tol: &Tolerances<T>,
) -> Result<CyclicUnitary<T>> {
    let s = commutant_basis(state, tol.eps_deg);
    if block_unitaries.len() != s.blocks.len() {
        return Err(Error::InvalidDimension(format!(
            "expected {} blocks with sizes {:?}, got {}",
            s.blocks.len(),
            s.block_sizes(),
            block_unitaries.len()
        )));
    }
    for (k, (b, w)) in s.blocks.iter().zip(&block_unitaries).enumerate() {
        if w.rows() != b.size() || w.cols() != b.size() {
            return Err(Error::InvalidDimension(format!(
                "block {k} must be {0}x{0}, got {1}x{2}",
                b.size(),
                w.rows(),
                w.cols()
            )));
        }
        let err = w.unitarity_error();
        if err > tol.unitary {
            return Err(Error::InvalidOperator(format!(
                "block {k} is not unitary (|W†W - I| = {:e})",
                err.to_f64()
            )));
        }
    }
    let cu = CyclicUnitary::from_parts(state, &s, block_unitaries);
    let comm = cu.commutator_norm(state);
    if comm > tol.cyclic {
        return Err(Error::NotCyclic {
            norm: comm.to_f64(),
            tol: tol.cyclic.to_f64(),
        });
    }
    Ok(cu)
}

fn ensure_cyclic<T: Real>(
    state: &BipartiteState<T>,
    u: &ComplexMatrix<T>,
    tol: &Tolerances<T>,
) -> Result<()> {
    let nb = state.dims().1;
    if u.rows() != nb || u.cols() != nb {
        return Err(Error::InvalidDimension(format!("U must be {nb}x{nb}")));
    }
    let comm = commutator_norm(state, u);
    if comm > tol.cyclic {
        return Err(Error::NotCyclic {
            norm: comm.to_f64(),
            tol: tol.cyclic.to_f64(),
        });
    }
    Ok(())
}

/// Turns a radicand into a shift after checking its literal form.
fn checked_sqrt<T: Real>(literal: T, stable: T, tol: &Tolerances<T>, what: &str) -> Result<T> {
    if literal < -tol.radicand {
        return Err(Error::InternalConsistency(format!(
            "{what}: negative radicand {:e}",
            literal.to_f64()
        )));
    }
    Ok(stable.max(T::zero()).sqrt())
}

/// ρ_f = (I⊗U) ρ_0 (I⊗U†)
pub fn final_state<T: Real>(
    state: &BipartiteState<T>,
    u: &CyclicUnitary<T>,
) -> Result<BipartiteState<T>> {
    state.apply_local_b(u.matrix())
}

/// d from the density matrices.
pub fn shift_direct<T: Real>(state: &BipartiteState<T>, u: &CyclicUnitary<T>) -> Result<T> {
    shift_direct_with(state, u, &Tolerances::default())
}

pub fn shift_direct_with<T: Real>(
    state: &BipartiteState<T>,
    u: &CyclicUnitary<T>,
    tol: &Tolerances<T>,
) -> Result<T> {
    ensure_cyclic(state, u.matrix(), tol)?;
    let rho0 = state.rho();
    let rhof = state.apply_local_b(u.matrix())?;
    let literal = state.purity() - rho0.trace_product(rhof.rho()).re;
    let stable = (rho0 - rhof.rho()).frobenius_norm_sqr() * T::lit(0.5);
    checked_sqrt(literal, stable, tol, "Tr ρ0² − Tr ρ0ρf")
}

/// Adjoint action of U on the generators: Q_kj = ½Tr(λ_k U λ_j U†).
pub fn adjoint_action<T: Real>(u: &ComplexMatrix<T>, basis: &GeneratorBasis<T>) -> RealMatrix<T> {
    let conj: Vec<ComplexMatrix<T>> = basis
        .generators()
        .iter()
        .map(|g| g.conjugate_by(u))
        .collect();
    let half = T::lit(0.5);
    RealMatrix::from_fn(basis.len(), basis.len(), |k, j| {
        basis.get(k).trace_product(&conj[j]).re * half
    })
}

/// Correlation matrix of ρ_f: β^f = β Qᵀ with Q the adjoint action of U.
pub fn beta_final<T: Real>(form: &BlochForm<T>, u: &CyclicUnitary<T>) -> Result<RealMatrix<T>> {
    beta_final_with(form, u, &Tolerances::default())
}

pub fn beta_final_with<T: Real>(
    form: &BlochForm<T>,
    u: &CyclicUnitary<T>,
    tol: &Tolerances<T>,
) -> Result<RealMatrix<T>> {
    let nb = form.dims.1;
    if u.matrix().rows() != nb {
        return Err(Error::InvalidDimension(format!(
            "U is {0}x{0}, subsystem B has dimension {nb}",
            u.matrix().rows()
        )));
    }
    let basis = gell_mann_basis::<T>(nb)?;
    let q = adjoint_action(u.matrix(), &basis);
    let beta_f = &form.beta * &q.transpose();
    let (n0, n1) = (form.beta.frobenius_norm(), beta_f.frobenius_norm());
    if (n0 - n1).abs() > tol.unitary * T::one().max(n0) {
        return Err(Error::InternalConsistency(format!(
            "|β^f| = {n1} differs from |β| = {n0}"
        )));
    }
    Ok(beta_f)
}

/// ρ_B rebuilt from r^B.
fn reduced_b_from_form<T: Real>(form: &BlochForm<T>) -> Result<ComplexMatrix<T>> {
    let nb = form.dims.1;
    let basis = gell_mann_basis::<T>(nb)?;
    let n = T::lit(nb as f64);
    let m =
        &ComplexMatrix::identity(nb) + &basis.combine(&form.r_b).scale_real(local_weight::<T>(nb));
    Ok(m.scale(cr(T::one() / n)))
}

/// d from the correlation matrices.
pub fn shift_correlation<T: Real>(form: &BlochForm<T>, u: &CyclicUnitary<T>) -> Result<T> {
    shift_correlation_with(form, u, &Tolerances::default())
}

pub fn shift_correlation_with<T: Real>(
    form: &BlochForm<T>,
    u: &CyclicUnitary<T>,
    tol: &Tolerances<T>,
) -> Result<T> {
    let rho_b = reduced_b_from_form(form)?;
    let comm = rho_b.commutator(u.matrix()).max_abs();
    if comm > tol.cyclic {
        return Err(Error::NotCyclic {
            norm: comm.to_f64(),
            tol: tol.cyclic.to_f64(),
        });
    }
    let beta_f = beta_final_with(form, u, tol)?;
    correlation_shift_from(form, &beta_f, tol)
}

/// d² = pref · (|β|² − Σβ_ijβ^f_ij), evaluated through ½|β − β^f|².
pub(crate) fn correlation_shift_from<T: Real>(
    form: &BlochForm<T>,
    beta_f: &RealMatrix<T>,
    tol: &Tolerances<T>,
) -> Result<T> {
    let pref = form.shift_prefactor();
    let literal = pref * (form.beta_norm_sqr() - form.beta.dot(beta_f));
    let stable = pref * form.beta.sub(beta_f).frobenius_norm_sqr() * T::lit(0.5);
    checked_sqrt(literal, stable, tol, "|β|² − Σββ^f")
}
