//! Bipartite density matrices and their Bloch form
//!
//! ```text
//! ρ = 1/(N_A N_B) [ I⊗I + c_A r^A·λ^A ⊗ I + c_B I ⊗ r^B·λ^B + c_AB β_ij λ_i^A ⊗ λ_j^B ]
//! c_X = √(N_X(N_X−1)/2),   c_AB = c_A c_B
//! ```
//!
//! With Tr(λ_iλ_j) = 2δ_ij the coefficients are recovered as
//! r_i^A = √(N_A/(2(N_A−1))) Tr(ρ λ_i⊗I) and
//! β_ij = √(N_A N_B/(4(N_A−1)(N_B−1))) Tr(ρ λ_i⊗λ_j). For two qubits these
//! are plain Pauli expectations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    gell_mann_basis, hermitian_eig, partial_trace, tensor, ComplexMatrix, GeneratorBasis, Subsystem,
};
use crate::real::RealMatrix;
use crate::scalar::{cr, Real, Tolerances};

/// Validated density matrix on C^(N_A·N_B).
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct BipartiteState<T: Real> {
    rho: ComplexMatrix<T>,
    dims: (usize, usize),
}

impl<T: Real> BipartiteState<T> {
    pub fn new(rho: ComplexMatrix<T>, dims: (usize, usize)) -> Result<Self> {
        Self::with_tolerances(rho, dims, &Tolerances::default())
    }

    /// Checks Hermiticity, unit trace and positivity. The stored matrix is
    /// the Hermitian part of `rho`.
    pub fn with_tolerances(
        rho: ComplexMatrix<T>,
        dims: (usize, usize),
        tol: &Tolerances<T>,
    ) -> Result<Self> {
        let (na, nb) = dims;
        if na < 2 || nb < 2 {
            return Err(Error::InvalidDimension(format!(
                "subsystem dimensions must be >= 2, got ({na},{nb})"
            )));
        }
        let n = na * nb;
        if rho.rows() != n || rho.cols() != n {
            return Err(Error::InvalidDimension(format!(
                "dims ({na},{nb}) need a {n}x{n} matrix, got {}x{}",
                rho.rows(),
                rho.cols()
            )));
        }
        if rho
            .as_slice()
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NotAState("non-finite entries".into()));
        }
        let herm = rho.hermiticity_error();
        if herm > tol.herm {
            return Err(Error::NotAState(format!(
                "not Hermitian (|ρ - ρ†| = {:e})",
                herm.to_f64()
            )));
        }
        let rho = rho.hermitian_part();
        let tr = rho.trace().re;
        if (tr - T::one()).abs() > tol.trace {
            return Err(Error::NotAState(format!("trace is {tr}, expected 1")));
        }
        let min_eig = hermitian_eig(&rho, tol.herm)?.values[0];
        if min_eig < -tol.psd {
            return Err(Error::NotAState(format!(
                "negative eigenvalue {:e}",
                min_eig.to_f64()
            )));
        }
        Ok(Self { rho, dims })
    }

    /// Wraps a matrix already known to be a state (e.g. a unitary image of one).
    pub(crate) fn trusted(rho: ComplexMatrix<T>, dims: (usize, usize)) -> Self {
        Self { rho, dims }
    }

    pub fn rho(&self) -> &ComplexMatrix<T> {
        &self.rho
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.0 * self.dims.1
    }

    pub fn reduced(&self, keep: Subsystem) -> ComplexMatrix<T> {
        partial_trace(&self.rho, self.dims, keep).expect("dimensions validated on construction")
    }

    /// Tr(ρ²)
    pub fn purity(&self) -> T {
        self.rho.trace_product(&self.rho).re
    }

    /// (I ⊗ U) ρ (I ⊗ U†) without any cyclicity check.
    pub fn apply_local_b(&self, u: &ComplexMatrix<T>) -> Result<Self> {
        if u.rows() != self.dims.1 || u.cols() != self.dims.1 {
            return Err(Error::InvalidDimension(format!(
                "local operator must be {0}x{0}",
                self.dims.1
            )));
        }
        let w = tensor(&ComplexMatrix::identity(self.dims.0), u);
        Ok(Self::trusted(self.rho.conjugate_by(&w), self.dims))
    }

    /// Relabels A ↔ B so operations defined on B can act on A.
    pub fn swapped(&self) -> Self {
        let (na, nb) = self.dims;
        let n = na * nb;
        let idx = |i: usize| (i % nb) * na + i / nb;
        let mut out = ComplexMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                out[(idx(r), idx(c))] = self.rho[(r, c)];
            }
        }
        Self::trusted(out, (nb, na))
    }

    pub fn cast<S: Real>(&self) -> BipartiteState<S> {
        BipartiteState {
            rho: self.rho.cast(),
            dims: self.dims,
        }
    }
}

/// Bloch vectors of both parties plus the correlation matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct BlochForm<T> {
    pub dims: (usize, usize),
    pub r_a: Vec<T>,
    pub r_b: Vec<T>,
    pub beta: RealMatrix<T>,
}

/// √(N(N−1)/2)
pub fn local_weight<T: Real>(n: usize) -> T {
    let n = T::lit(n as f64);
    (n * (n - T::one()) / T::lit(2.0)).sqrt()
}

/// Tr(ρ (X ⊗ Y)) without forming the Kronecker product.
pub(crate) fn expect_product<T: Real>(
    rho: &ComplexMatrix<T>,
    x: &ComplexMatrix<T>,
    y: &ComplexMatrix<T>,
) -> T {
    let (na, nb) = (x.rows(), y.rows());
    let mut acc = crate::scalar::C::new(T::zero(), T::zero());
    for a in 0..na {
        for b in 0..nb {
            let r = a * nb + b;
            for a2 in 0..na {
                let xa = x[(a2, a)];
                if xa.re.is_zero() && xa.im.is_zero() {
                    continue;
                }
                for b2 in 0..nb {
                    acc += rho[(r, a2 * nb + b2)] * xa * y[(b2, b)];
                }
            }
        }
    }
    acc.re
}

fn check_bases<T: Real>(
    dims: (usize, usize),
    basis_a: &GeneratorBasis<T>,
    basis_b: &GeneratorBasis<T>,
) -> Result<()> {
    if basis_a.dim() != dims.0 || basis_b.dim() != dims.1 {
        return Err(Error::InvalidDimension(format!(
            "bases are SU({}) x SU({}), state dims are ({},{})",
            basis_a.dim(),
            basis_b.dim(),
            dims.0,
            dims.1
        )));
    }
    Ok(())
}

pub fn decompose<T: Real>(
    state: &BipartiteState<T>,
    basis_a: &GeneratorBasis<T>,
    basis_b: &GeneratorBasis<T>,
) -> Result<BlochForm<T>> {
    let dims = state.dims();
    check_bases(dims, basis_a, basis_b)?;
    let (na, nb) = dims;
    let (fa, fb) = (T::lit(na as f64), T::lit(nb as f64));
    let two = T::lit(2.0);
    let ka = (fa / (two * (fa - T::one()))).sqrt();
    let kb = (fb / (two * (fb - T::one()))).sqrt();
    let kab = (fa * fb / (two * two * (fa - T::one()) * (fb - T::one()))).sqrt();

    let rho = state.rho();
    let id_a = ComplexMatrix::identity(na);
    let id_b = ComplexMatrix::identity(nb);
    let r_a = basis_a
        .generators()
        .iter()
        .map(|g| ka * expect_product(rho, g, &id_b))
        .collect();
    let r_b = basis_b
        .generators()
        .iter()
        .map(|g| kb * expect_product(rho, &id_a, g))
        .collect();
    let beta = RealMatrix::from_fn(basis_a.len(), basis_b.len(), |i, j| {
        kab * expect_product(rho, basis_a.get(i), basis_b.get(j))
    });
    Ok(BlochForm {
        dims,
        r_a,
        r_b,
        beta,
    })
}

/// Builds ρ from its Bloch form and validates it as a state.
pub fn reconstruct<T: Real>(
    form: &BlochForm<T>,
    basis_a: &GeneratorBasis<T>,
    basis_b: &GeneratorBasis<T>,
) -> Result<BipartiteState<T>> {
    reconstruct_with(form, basis_a, basis_b, &Tolerances::default())
}

pub fn reconstruct_with<T: Real>(
    form: &BlochForm<T>,
    basis_a: &GeneratorBasis<T>,
    basis_b: &GeneratorBasis<T>,
    tol: &Tolerances<T>,
) -> Result<BipartiteState<T>> {
    let dims = form.dims;
    check_bases(dims, basis_a, basis_b)?;
    let (na, nb) = dims;
    if form.r_a.len() != basis_a.len()
        || form.r_b.len() != basis_b.len()
        || form.beta.rows() != basis_a.len()
        || form.beta.cols() != basis_b.len()
    {
        return Err(Error::InvalidDimension(
            "Bloch vector or correlation matrix has the wrong shape".into(),
        ));
    }
    let ca: T = local_weight(na);
    let cb: T = local_weight(nb);
    let id_a = ComplexMatrix::identity(na);
    let id_b = ComplexMatrix::identity(nb);

    let local_a = basis_a.combine(&form.r_a).scale_real(ca);
    let local_b = basis_b.combine(&form.r_b).scale_real(cb);
    let mut rho = &tensor(&id_a, &id_b) + &tensor(&local_a, &id_b);
    rho = &rho + &tensor(&id_a, &local_b);
    for i in 0..basis_a.len() {
        let row: Vec<T> = (0..basis_b.len()).map(|j| form.beta[(i, j)]).collect();
        if row.iter().all(|x| x.is_zero()) {
            continue;
        }
        let mixed = basis_b.combine(&row).scale_real(ca * cb);
        rho = &rho + &tensor(basis_a.get(i), &mixed);
    }
    let rho = rho.scale(cr(T::one() / T::lit((na * nb) as f64)));
    BipartiteState::with_tolerances(rho, dims, tol)
}

/// Bloch vectors of the two reduced states, computed from partial traces.
pub fn reduced_bloch<T: Real>(state: &BipartiteState<T>) -> Result<(Vec<T>, Vec<T>)> {
    let (na, nb) = state.dims();
    let ba = gell_mann_basis::<T>(na)?;
    let bb = gell_mann_basis::<T>(nb)?;
    Ok((
        single_bloch(&state.reduced(Subsystem::A), &ba),
        single_bloch(&state.reduced(Subsystem::B), &bb),
    ))
}

/// Bloch vector of a single-party density matrix:
/// ρ = (I + √(N(N−1)/2) r·λ)/N.
pub fn single_bloch<T: Real>(rho: &ComplexMatrix<T>, basis: &GeneratorBasis<T>) -> Vec<T> {
    let n = T::lit(basis.dim() as f64);
    let k = n / (T::lit(2.0) * local_weight::<T>(basis.dim()));
    basis
        .generators()
        .iter()
        .map(|g| k * g.trace_product(rho).re)
        .collect()
}

impl<T: Real> BlochForm<T> {
    /// Decomposes in the canonical Gell-Mann bases.
    pub fn of(state: &BipartiteState<T>) -> Result<Self> {
        let (na, nb) = state.dims();
        decompose(state, &gell_mann_basis(na)?, &gell_mann_basis(nb)?)
    }

    pub fn to_state(&self) -> Result<BipartiteState<T>> {
        let (na, nb) = self.dims;
        reconstruct(self, &gell_mann_basis(na)?, &gell_mann_basis(nb)?)
    }

    /// |β|² = Σβ_ij²
    pub fn beta_norm_sqr(&self) -> T {
        self.beta.frobenius_norm_sqr()
    }

    /// (N_A−1)(N_B−1)/(N_A N_B)
    pub fn shift_prefactor(&self) -> T {
        let (na, nb) = (T::lit(self.dims.0 as f64), T::lit(self.dims.1 as f64));
        (na - T::one()) * (nb - T::one()) / (na * nb)
    }
}

/// Euclidean norm.
pub fn norm<T: Real>(v: &[T]) -> T {
    v.iter().map(|x| *x * *x).sum::<T>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;
    use crate::states::{product_state, random_states, schmidt_state, werner_state};

    fn pauli_expectation_beta(state: &BipartiteState<f64>) -> RealMatrix<f64> {
        let s = crate::linalg::pauli::<f64>();
        RealMatrix::from_fn(3, 3, |i, j| {
            state.rho().trace_product(&tensor(&s[i], &s[j])).re
        })
    }

    #[test]
    fn bell_state_form() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let state = schmidt_state(cx(h, 0.), cx(h, 0.)).unwrap();
        let form = BlochForm::of(&state).unwrap();
        assert!(norm(&form.r_a) < 1e-15 && norm(&form.r_b) < 1e-15);
        let want = RealMatrix::from_mat3(&[[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(form.beta.max_abs_diff(&want) < 1e-14);
        assert!(form.beta.max_abs_diff(&pauli_expectation_beta(&state)) < 1e-14);
    }

    #[test]
    fn basis_state_form() {
        let state = schmidt_state(cx(1., 0.), cx(0., 0.)).unwrap();
        let form = BlochForm::of(&state).unwrap();
        assert_eq!(form.r_a, vec![0.0, 0.0, 1.0]);
        assert_eq!(form.r_b, vec![0.0, 0.0, 1.0]);
        let mut want = RealMatrix::zeros(3, 3);
        want[(2, 2)] = 1.0;
        assert!(form.beta.max_abs_diff(&want) < 1e-15);
        assert!(form.beta.max_abs_diff(&pauli_expectation_beta(&state)) < 1e-15);
    }

    #[test]
    fn maximally_mixed_form() {
        for dims in [(2, 2), (2, 3), (3, 3)] {
            let n = dims.0 * dims.1;
            let rho = ComplexMatrix::identity(n).scale_real(1.0 / n as f64);
            let form = BlochForm::of(&BipartiteState::new(rho.clone(), dims).unwrap()).unwrap();
            assert!(norm(&form.r_a) < 1e-15 && norm(&form.r_b) < 1e-15);
            assert!(form.beta.max_abs() < 1e-15);
            assert!(form.to_state().unwrap().rho().max_abs_diff(&rho) < 1e-15);
        }
    }

    #[test]
    fn unphysical_triple_is_rejected() {
        let mut beta = RealMatrix::zeros(3, 3);
        beta[(0, 0)] = 2.0;
        let form = BlochForm {
            dims: (2, 2),
            r_a: vec![0.0; 3],
            r_b: vec![0.0; 3],
            beta,
        };
        assert!(matches!(form.to_state(), Err(Error::NotAState(_))));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let form = BlochForm::<f64> {
            dims: (2, 2),
            r_a: vec![0.0; 8],
            r_b: vec![0.0; 3],
            beta: RealMatrix::zeros(3, 3),
        };
        assert!(matches!(form.to_state(), Err(Error::InvalidDimension(_))));
        let state = werner_state(0.5).unwrap();
        let b3 = gell_mann_basis::<f64>(3).unwrap();
        let b2 = gell_mann_basis::<f64>(2).unwrap();
        assert!(matches!(
            decompose(&state, &b3, &b2),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn roundtrip_random_states() {
        for dims in [(2, 2), (2, 3), (3, 3)] {
            for (k, state) in
                random_states::<f64>(17 + dims.1 as u64, dims, dims.0 * dims.1, 50).enumerate()
            {
                let form = BlochForm::of(&state).unwrap();
                let back = form.to_state().unwrap();
                assert!(
                    back.rho().max_abs_diff(state.rho()) < 1e-10,
                    "{dims:?} #{k}"
                );
                let (ra, rb) = reduced_bloch(&state).unwrap();
                for (x, y) in ra.iter().zip(&form.r_a).chain(rb.iter().zip(&form.r_b)) {
                    assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn roundtrip_500_two_qubit_states() {
        for state in random_states::<f64>(5, (2, 2), 4, 500) {
            let back = BlochForm::of(&state).unwrap().to_state().unwrap();
            assert!(back.rho().max_abs_diff(state.rho()) < 1e-10);
        }
    }

    #[test]
    fn schmidt_reduced_vectors() {
        for k1 in [0.0, 0.3, 0.6, 0.9, 1.0] {
            let k2 = (1.0_f64 - k1 * k1).sqrt();
            let state = schmidt_state::<f64>(cx(k1, 0.), cx(k2, 0.)).unwrap();
            let (ra, rb) = reduced_bloch(&state).unwrap();
            let z = k1 * k1 - k2 * k2;
            for r in [ra, rb] {
                assert!(r[0].abs() < 1e-15 && r[1].abs() < 1e-15 && (r[2] - z).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn werner_has_no_local_vectors() {
        for p in [-1.0 / 3.0, 0.0, 0.25, 0.5, 1.0] {
            let (ra, rb) = reduced_bloch(&werner_state(p).unwrap()).unwrap();
            assert!(norm(&ra) < 1e-15 && norm(&rb) < 1e-15);
        }
    }

    #[test]
    fn product_state_vectors_and_outer_product_beta() {
        let ba = gell_mann_basis::<f64>(2).unwrap();
        let bb = gell_mann_basis::<f64>(3).unwrap();
        let psi_a = vec![cx(0.6, 0.0), cx(0.0, 0.8)];
        let psi_b = vec![cx(0.5, 0.1), cx(-0.3, 0.2), cx(0.0, 0.7810249675906654)];
        let state = product_state(&psi_a, &psi_b).unwrap();
        let form = BlochForm::of(&state).unwrap();
        let ra = single_bloch(&ComplexMatrix::projector(&psi_a), &ba);
        let rb = single_bloch(&ComplexMatrix::projector(&psi_b), &bb);
        for (x, y) in ra.iter().zip(&form.r_a).chain(rb.iter().zip(&form.r_b)) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(form.beta.max_abs_diff(&RealMatrix::outer(&ra, &rb)) < 1e-12);
    }

    #[test]
    fn swap_exchanges_parties() {
        let state = random_states::<f64>(3, (2, 3), 6, 1).next().unwrap();
        let sw = state.swapped();
        assert_eq!(sw.dims(), (3, 2));
        assert!(
            sw.reduced(Subsystem::A)
                .max_abs_diff(&state.reduced(Subsystem::B))
                < 1e-14
        );
        assert!(sw.swapped().rho().max_abs_diff(state.rho()) < 1e-15);
        let f = BlochForm::of(&state).unwrap();
        let g = BlochForm::of(&sw).unwrap();
        assert!(f.beta.transpose().max_abs_diff(&g.beta) < 1e-12);
    }

    #[test]
    fn state_validation_errors() {
        let bad_trace = ComplexMatrix::<f64>::identity(4);
        assert!(matches!(
            BipartiteState::new(bad_trace, (2, 2)),
            Err(Error::NotAState(_))
        ));
        let neg = ComplexMatrix::<f64>::from_real_diagonal(&[0.6, 0.6, -0.1, -0.1]);
        assert!(matches!(
            BipartiteState::new(neg, (2, 2)),
            Err(Error::NotAState(_))
        ));
        let mut nh = ComplexMatrix::<f64>::identity(4).scale_real(0.25);
        nh[(0, 1)] = cx(0.1, 0.0);
        assert!(matches!(
            BipartiteState::new(nh, (2, 2)),
            Err(Error::NotAState(_))
        ));
        let wrong = ComplexMatrix::<f64>::identity(4).scale_real(0.25);
        assert!(matches!(
            BipartiteState::new(wrong, (2, 3)),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn single_precision_bell() {
        let h = std::f32::consts::FRAC_1_SQRT_2;
        let psi = vec![
            cx::<f32>(h as f64, 0.),
            cx(0., 0.),
            cx(0., 0.),
            cx(h as f64, 0.),
        ];
        let state = BipartiteState::<f32>::new(ComplexMatrix::projector(&psi), (2, 2)).unwrap();
        let form = BlochForm::of(&state).unwrap();
        assert!((form.beta[(0, 0)] - 1.0).abs() < 1e-5);
        assert!((form.beta[(1, 1)] + 1.0).abs() < 1e-5);
    }
}
