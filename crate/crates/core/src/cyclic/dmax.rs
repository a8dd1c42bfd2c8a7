//! Maximization of the shift over the commutant of ρ_0^B.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    commutant_basis, make_cyclic_with, shift_correlation_with, shift_direct_with,
    CommutantStructure, CyclicUnitary,
};
use crate::bloch::{BipartiteState, BlochForm};
use crate::error::{Error, Result};
use crate::linalg::{
    expm_i_hermitian, hermitian_eig, partial_trace, pauli, pauli_dot, tensor, ComplexMatrix,
    Subsystem,
};
use crate::real::{normalize3, Vec3};
use crate::scalar::{cr, Real, Tolerances, C};
use crate::states::{haar_unitary, item_rng};

/// How the maximizing unitary was found.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Qubit B, non-degenerate ρ_B: one relative phase, d² harmonic in φ.
    PhaseClosedForm,
    /// Qubit B, ρ_B = I/2: minimize Tr(βᵀβ Q) over proper rotations Q.
    RotationClosedForm,
    /// Multi-start ascent over block unitaries.
    Optimizer,
}

/// Which formula the reported `d` was evaluated with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftFormula {
    Direct,
    Correlation,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct OptimizerDiagnostics<T> {
    pub block_sizes: Vec<usize>,
    pub restarts: usize,
    /// Iterations used by each restart.
    pub iterations: Vec<usize>,
    /// Whether each restart met the convergence criterion.
    pub converged: Vec<bool>,
    /// d reached by each restart.
    pub restart_values: Vec<T>,
    pub best_restart: Option<usize>,
    /// Value predicted by a closed form, when one was used.
    pub closed_form: Option<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ShiftResult<T: Real> {
    /// Maximal shift, evaluated directly at `unitary`.
    pub d: T,
    pub formula: ShiftFormula,
    /// The same shift from the correlation-matrix formula.
    pub d_correlation: T,
    pub cross_check_residual: T,
    pub method: Method,
    /// False when no optimizer restart converged within its iteration budget.
    pub certified: bool,
    /// For qubit B: U ∝ exp(iφ/2 u·σ), reported as (u, φ) with φ ∈ [0, π].
    pub axis_angle: Option<(Vec3<T>, T)>,
    pub unitary: CyclicUnitary<T>,
    pub diagnostics: OptimizerDiagnostics<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DMaxOptions<T> {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    /// Stop a restart once d improves by less than this in one iteration.
    pub convergence: T,
    /// Use the qubit-B closed forms when they apply.
    pub closed_forms: bool,
    pub tolerances: Tolerances<T>,
}

impl<T: Real> Default for DMaxOptions<T> {
    fn default() -> Self {
        Self {
            restarts: 16,
            max_iters: 2000,
            seed: 0x5eed,
            convergence: T::lit(1e-10),
            closed_forms: true,
            tolerances: Tolerances::default(),
        }
    }
}

pub fn d_max<T: Real>(state: &BipartiteState<T>) -> Result<ShiftResult<T>> {
    d_max_with(state, &DMaxOptions::default())
}

pub fn d_max_with<T: Real>(
    state: &BipartiteState<T>,
    opts: &DMaxOptions<T>,
) -> Result<ShiftResult<T>> {
    if opts.closed_forms {
        if let Some(res) = d_max_closed_form(state, &opts.tolerances)? {
            return Ok(res);
        }
    }
    d_max_generic(state, opts)
}

/// Exact maximum when B is a qubit; `None` otherwise.
pub fn d_max_closed_form<T: Real>(
    state: &BipartiteState<T>,
    tol: &Tolerances<T>,
) -> Result<Option<ShiftResult<T>>> {
    if state.dims().1 != 2 {
        return Ok(None);
    }
    let s = commutant_basis(state, tol.eps_deg);
    let form = BlochForm::of(state)?;
    let pref = form.shift_prefactor();
    let (d_cf, blocks, method) = if s.blocks.len() == 2 {
        let phase_u = |phi: T| {
            vec![
                ComplexMatrix::identity(1),
                ComplexMatrix::from_vec(1, 1, vec![C::new(phi.cos(), phi.sin())]).expect("1x1"),
            ]
        };
        // D(φ) = |β|² − Σββ^f(φ) = B(1 − cos φ) − C sin φ
        let gap = |phi: T| -> Result<T> {
            let cu = make_cyclic_with(state, phase_u(phi), tol)?;
            let bf = super::beta_final_with(&form, &cu, tol)?;
            Ok(form.beta.sub(&bf).frobenius_norm_sqr() * T::lit(0.5))
        };
        let b = gap(T::PI())? * T::lit(0.5);
        let c = b - gap(T::FRAC_PI_2())?;
        let amp = (b * b + c * c).sqrt();
        let phi = if amp.is_zero() {
            T::PI()
        } else {
            (-c).atan2(-b)
        };
        (
            (pref * (b + amp)).sqrt(),
            phase_u(phi),
            Method::PhaseClosedForm,
        )
    } else {
        let m = &form.beta.transpose() * &form.beta;
        let mc = ComplexMatrix::from_fn(3, 3, |r, c| cr(m[(r, c)]));
        let eig = hermitian_eig(&mc, T::infinity())?;
        let w: Vec3<T> = [
            eig.vectors[(0, 0)].re,
            eig.vectors[(1, 0)].re,
            eig.vectors[(2, 0)].re,
        ];
        let w = normalize3(&w).unwrap_or([T::zero(), T::zero(), T::one()]);
        // Rotation by π about the least-weighted axis: U = i w·σ.
        let u = pauli_dot(&w).scale(C::new(T::zero(), T::one()));
        let top = eig.values[1].max(T::zero()) + eig.values[2].max(T::zero());
        let d = (pref * T::lit(2.0) * top).sqrt();
        // Single block of size 2 in the eigenbasis V of ρ_B.
        let inner = &(&s.basis.adjoint() * &u) * &s.basis;
        (d, vec![inner], Method::RotationClosedForm)
    };
    let cu = make_cyclic_with(state, blocks, tol)?;
    let mut res = finish(state, &form, cu, method, true, tol)?;
    if (res.d - d_cf).abs() > tol.cross_check {
        return Err(Error::InternalConsistency(format!(
            "closed form gives d = {d_cf}, direct evaluation at its argmax gives {}",
            res.d
        )));
    }
    res.diagnostics.block_sizes = s.block_sizes();
    res.diagnostics.closed_form = Some(d_cf);
    Ok(Some(res))
}

fn finish<T: Real>(
    state: &BipartiteState<T>,
    form: &BlochForm<T>,
    cu: CyclicUnitary<T>,
    method: Method,
    certified: bool,
    tol: &Tolerances<T>,
) -> Result<ShiftResult<T>> {
    let d = shift_direct_with(state, &cu, tol)?;
    let d_corr = shift_correlation_with(form, &cu, tol)?;
    let residual = (d - d_corr).abs();
    if residual > tol.cross_check {
        return Err(Error::InternalConsistency(format!(
            "direct shift {d} and correlation shift {d_corr} disagree"
        )));
    }
    let axis_angle = (state.dims().1 == 2).then(|| su2_axis_angle(cu.matrix()));
    Ok(ShiftResult {
        d,
        formula: ShiftFormula::Direct,
        d_correlation: d_corr,
        cross_check_residual: residual,
        method,
        certified,
        axis_angle,
        unitary: cu,
        diagnostics: OptimizerDiagnostics::default(),
    })
}

/// Axis and angle of a 2×2 unitary, U = e^{iα} exp(iφ/2 u·σ), φ ∈ [0, π].
pub fn su2_axis_angle<T: Real>(u: &ComplexMatrix<T>) -> (Vec3<T>, T) {
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let mut v = u.scale(cr(T::one()) / det.sqrt());
    if v.trace().re < T::zero() {
        v = v.scale(cr(-T::one()));
    }
    let half = T::lit(0.5);
    let cos_half = v.trace().re * half;
    let s = pauli::<T>();
    let sin_u: Vec3<T> = [
        v.trace_product(&s[0]).im * half,
        v.trace_product(&s[1]).im * half,
        v.trace_product(&s[2]).im * half,
    ];
    let sin_half = (sin_u[0] * sin_u[0] + sin_u[1] * sin_u[1] + sin_u[2] * sin_u[2]).sqrt();
    let phi = T::lit(2.0) * sin_half.atan2(cos_half);
    let axis = normalize3(&sin_u).unwrap_or([T::zero(), T::zero(), T::one()]);
    (axis, phi)
}

struct Restart<T: Real> {
    blocks: Vec<ComplexMatrix<T>>,
    d2: T,
    iterations: usize,
    converged: bool,
}

struct Landscape<'a, T: Real> {
    rho0: ComplexMatrix<T>,
    dims: (usize, usize),
    s: &'a CommutantStructure<T>,
}

impl<T: Real> Landscape<'_, T> {
    fn final_state(&self, blocks: &[ComplexMatrix<T>]) -> ComplexMatrix<T> {
        let w = tensor(
            &ComplexMatrix::identity(self.dims.0),
            &self.s.block_diagonal(blocks),
        );
        self.rho0.conjugate_by(&w)
    }

    /// d² = ½‖ρ_0 − ρ_f‖²
    fn value(&self, rhof: &ComplexMatrix<T>) -> T {
        (&self.rho0 - rhof).frobenius_norm_sqr() * T::lit(0.5)
    }

    /// Projected Tr_A(i[ρ_f, ρ_0]), one Hermitian block per eigenspace.
    /// Moving W_k → exp(iεH_k)W_k changes Tr(ρ_0ρ_f) at rate Σ Tr(H_k G_k).
    fn gradient(&self, rhof: &ComplexMatrix<T>) -> Vec<ComplexMatrix<T>> {
        let comm = rhof
            .commutator(&self.rho0)
            .scale(C::new(T::zero(), T::one()));
        let g = partial_trace(&comm, self.dims, Subsystem::B).expect("dims match");
        self.s
            .blocks
            .iter()
            .map(|b| {
                let k = b.start();
                ComplexMatrix::from_fn(b.size(), b.size(), |r, c| g[(k + r, k + c)])
                    .hermitian_part()
            })
            .collect()
    }

    fn ascend(
        &self,
        mut blocks: Vec<ComplexMatrix<T>>,
        opts: &DMaxOptions<T>,
    ) -> Result<Restart<T>> {
        let armijo = T::lit(1e-4);
        let mut rhof = self.final_state(&blocks);
        let mut d2 = self.value(&rhof);
        let mut step = T::one();
        let mut converged = false;
        let mut iterations = 0;
        while iterations < opts.max_iters {
            iterations += 1;
            let grad = self.gradient(&rhof);
            let g2: T = grad.iter().map(ComplexMatrix::frobenius_norm_sqr).sum();
            if g2 <= T::epsilon() * T::epsilon() {
                converged = true;
                break;
            }
            let mut accepted = None;
            let mut t = step;
            for _ in 0..60 {
                let trial = blocks
                    .iter()
                    .zip(&grad)
                    .map(|(w, g)| Ok(&expm_i_hermitian(g, -t)? * w))
                    .collect::<Result<Vec<_>>>()?;
                let rf = self.final_state(&trial);
                let v = self.value(&rf);
                if v >= d2 + armijo * t * g2 {
                    accepted = Some((trial, rf, v));
                    break;
                }
                t *= T::lit(0.5);
            }
            let Some((trial, rf, v)) = accepted else {
                converged = true;
                break;
            };
            let gain = v.sqrt() - d2.sqrt();
            blocks = trial;
            rhof = rf;
            d2 = v;
            step = (t * T::lit(2.0)).min(T::lit(1e3));
            if gain < opts.convergence {
                converged = true;
                break;
            }
        }
        Ok(Restart {
            blocks,
            d2,
            iterations,
            converged,
        })
    }
}

/// Multi-start Riemannian ascent over ⊕_k U(n_k).
pub fn d_max_generic<T: Real>(
    state: &BipartiteState<T>,
    opts: &DMaxOptions<T>,
) -> Result<ShiftResult<T>> {
    if opts.restarts == 0 {
        return Err(Error::InvalidInput("restarts must be >= 1".into()));
    }
    let tol = &opts.tolerances;
    let s = commutant_basis(state, tol.eps_deg);
    let dims = state.dims();
    let v = tensor(&ComplexMatrix::identity(dims.0), &s.basis);
    let landscape = Landscape {
        rho0: state.rho().conjugate_by(&v.adjoint()),
        dims,
        s: &s,
    };

    let runs = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = item_rng(opts.seed, r as u64);
            let mut start: Vec<ComplexMatrix<T>> = s
                .blocks
                .iter()
                .map(|b| haar_unitary(&mut rng, b.size()))
                .collect();
            // Global phase is a gauge: pin a leading 1×1 block.
            if s.blocks[0].size() == 1 {
                start[0] = ComplexMatrix::identity(1);
            }
            landscape.ascend(start, opts)
        })
        .collect::<Result<Vec<_>>>()?;

    let best = runs
        .iter()
        .enumerate()
        .fold(0, |bi, (i, r)| if r.d2 > runs[bi].d2 { i } else { bi });
    let diagnostics = OptimizerDiagnostics {
        block_sizes: s.block_sizes(),
        restarts: opts.restarts,
        iterations: runs.iter().map(|r| r.iterations).collect(),
        converged: runs.iter().map(|r| r.converged).collect(),
        restart_values: runs.iter().map(|r| r.d2.sqrt()).collect(),
        best_restart: Some(best),
        closed_form: None,
    };
    let certified = runs[best].converged;
    let blocks = runs
        .into_iter()
        .nth(best)
        .expect("at least one restart")
        .blocks;
    // Re-unitarize accumulated rounding before the strict unitarity check.
    let blocks = blocks
        .into_iter()
        .map(polish_unitary)
        .collect::<Result<Vec<_>>>()?;
    let cu = make_cyclic_with(state, blocks, tol)?;
    let form = BlochForm::of(state)?;
    let mut res = finish(state, &form, cu, Method::Optimizer, certified, tol)?;
    res.diagnostics = diagnostics;
    Ok(res)
}

/// Nearest unitary W(W†W)^{-1/2}.
fn polish_unitary<T: Real>(w: ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let wtw = &w.adjoint() * &w;
    let eig = hermitian_eig(&wtw, T::infinity())?;
    let inv_sqrt = eig.map_values(|x| cr(T::one() / x.max(T::epsilon()).sqrt()));
    Ok(&w * &inv_sqrt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::random_state;

    #[test]
    fn gradient_matches_finite_difference() {
        let mut rng = item_rng(7, 0);
        let state = random_state::<f64, _>(&mut rng, (2, 3), 3).unwrap();
        let s = commutant_basis(&state, 1e-9);
        let v = tensor(&ComplexMatrix::identity(2), &s.basis);
        let land = Landscape {
            rho0: state.rho().conjugate_by(&v.adjoint()),
            dims: (2, 3),
            s: &s,
        };
        let blocks: Vec<ComplexMatrix<f64>> = s
            .blocks
            .iter()
            .map(|b| haar_unitary(&mut rng, b.size()))
            .collect();
        let rhof = land.final_state(&blocks);
        let grad = land.gradient(&rhof);
        let dirs: Vec<ComplexMatrix<f64>> = s
            .blocks
            .iter()
            .map(|b| haar_unitary::<f64, _>(&mut rng, b.size()).hermitian_part())
            .collect();
        let along = |eps: f64| {
            let moved: Vec<_> = blocks
                .iter()
                .zip(&dirs)
                .map(|(w, h)| &expm_i_hermitian(h, eps).unwrap() * w)
                .collect();
            land.value(&land.final_state(&moved))
        };
        let h = 1e-6;
        let fd = (along(h) - along(-h)) / (2.0 * h);
        let analytic: f64 = -dirs
            .iter()
            .zip(&grad)
            .map(|(d, g)| d.trace_product(g).re)
            .sum::<f64>();
        assert!((fd - analytic).abs() < 1e-7, "{fd} vs {analytic}");
    }
}
