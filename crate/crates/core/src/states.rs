//! State factories and seeded samplers.
//!
//! Samplers draw every item from its own ChaCha8 stream: item `i` of a run
//! with seed `s` uses `ChaCha8Rng::seed_from_u64(s)` with stream `i`. Items are
//! therefore independent of evaluation order and can be produced in parallel.

use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bloch::{single_bloch, BipartiteState};
use crate::error::{Error, Result};
use crate::linalg::{gell_mann_basis, tensor, tensor_vec, ComplexMatrix};
use crate::real::RealMatrix;
use crate::scalar::{cr, Real, Tolerances, C};

fn norm_sqr<T: Real>(v: &[C<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum()
}

fn check_normalized<T: Real>(v: &[C<T>], what: &str) -> Result<()> {
    let n = norm_sqr(v);
    if (n - T::one()).abs() > T::default_tolerances().normalization {
        return Err(Error::Normalization(format!("{what} has squared norm {n}")));
    }
    Ok(())
}

/// k1|00⟩ + k2|11⟩
pub fn schmidt_state<T: Real>(k1: C<T>, k2: C<T>) -> Result<BipartiteState<T>> {
    let n = k1.norm_sqr() + k2.norm_sqr();
    if (n - T::one()).abs() > T::default_tolerances().normalization {
        return Err(Error::Normalization(format!(
            "|k1|² + |k2|² = {n}, expected 1"
        )));
    }
    let z = C::new(T::zero(), T::zero());
    let psi = [k1, z, z, k2];
    BipartiteState::new(ComplexMatrix::projector(&psi), (2, 2))
}

/// Schmidt state with real coefficients k1 and √(1−k1²).
pub fn schmidt_real<T: Real>(k1: T) -> Result<BipartiteState<T>> {
    if !(T::zero()..=T::one()).contains(&k1.abs()) {
        return Err(Error::Normalization(format!("|k1| = {k1} exceeds 1")));
    }
    schmidt_state(cr(k1), cr((T::one() - k1 * k1).max(T::zero()).sqrt()))
}

/// (|00⟩ + |11⟩)/√2
pub fn bell_state<T: Real>() -> BipartiteState<T> {
    let h = T::FRAC_1_SQRT_2();
    schmidt_state(cr(h), cr(h)).expect("normalized")
}

fn singlet<T: Real>() -> ComplexMatrix<T> {
    let h = T::FRAC_1_SQRT_2();
    let z = cr(T::zero());
    ComplexMatrix::projector(&[z, cr(h), cr(-h), z])
}

pub fn maximally_mixed<T: Real>(dims: (usize, usize)) -> Result<BipartiteState<T>> {
    let n = dims.0 * dims.1;
    BipartiteState::new(
        ComplexMatrix::identity(n).scale_real(T::one() / T::lit(n as f64)),
        dims,
    )
}

/// p·|Ψ⁻⟩⟨Ψ⁻| + (1−p)·I/4, a state for p ∈ [−1/3, 1].
pub fn werner_state<T: Real>(p: T) -> Result<BipartiteState<T>> {
    let lo = -T::one() / T::lit(3.0);
    let slack = T::lit(1e-12).max(T::epsilon());
    if !p.is_finite() || p < lo - slack || p > T::one() + slack {
        return Err(Error::NotAState(format!(
            "Werner parameter {p} outside [-1/3, 1]"
        )));
    }
    let mixed = ComplexMatrix::identity(4).scale_real((T::one() - p) / T::lit(4.0));
    BipartiteState::new(&singlet::<T>().scale_real(p) + &mixed, (2, 2))
}

/// ½(|00⟩⟨00| + |11⟩⟨11|)
pub fn classically_correlated_5050<T: Real>() -> BipartiteState<T> {
    BipartiteState::new(
        ComplexMatrix::from_real_diagonal(&[T::lit(0.5), T::zero(), T::zero(), T::lit(0.5)]),
        (2, 2),
    )
    .expect("valid state")
}

/// |ψ_A⟩⟨ψ_A| ⊗ |ψ_B⟩⟨ψ_B|
pub fn product_state<T: Real>(psi_a: &[C<T>], psi_b: &[C<T>]) -> Result<BipartiteState<T>> {
    check_normalized(psi_a, "ψ_A")?;
    check_normalized(psi_b, "ψ_B")?;
    BipartiteState::new(
        ComplexMatrix::projector(&tensor_vec(psi_a, psi_b)),
        (psi_a.len(), psi_b.len()),
    )
}

/// ρ_A ⊗ ρ_B for mixed factors.
pub fn product_of<T: Real>(
    rho_a: &ComplexMatrix<T>,
    rho_b: &ComplexMatrix<T>,
) -> Result<BipartiteState<T>> {
    BipartiteState::new(tensor(rho_a, rho_b), (rho_a.rows(), rho_b.rows()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EnsembleTerm<T> {
    pub weight: T,
    pub psi_a: Vec<C<T>>,
    pub psi_b: Vec<C<T>>,
}

/// Convex mixture of pure product states, Σ_l p_l |ψ_A^l⟩⟨ψ_A^l| ⊗ |ψ_B^l⟩⟨ψ_B^l|.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Ensemble<T> {
    pub terms: Vec<EnsembleTerm<T>>,
}

impl<T: Real> Ensemble<T> {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.terms
            .first()
            .map_or((0, 0), |t| (t.psi_a.len(), t.psi_b.len()))
    }

    /// Σ_l p_l r^{A_l} (r^{B_l})ᵀ
    pub fn correlation_from_terms(&self) -> Result<RealMatrix<T>> {
        let (na, nb) = self.dims();
        let ba = gell_mann_basis::<T>(na)?;
        let bb = gell_mann_basis::<T>(nb)?;
        let mut beta = RealMatrix::zeros(ba.len(), bb.len());
        for t in &self.terms {
            let ra = single_bloch(&ComplexMatrix::projector(&t.psi_a), &ba);
            let rb = single_bloch(&ComplexMatrix::projector(&t.psi_b), &bb);
            for i in 0..ra.len() {
                for j in 0..rb.len() {
                    beta[(i, j)] += t.weight * ra[i] * rb[j];
                }
            }
        }
        Ok(beta)
    }
}

pub fn ensemble_state<T: Real>(
    terms: Vec<EnsembleTerm<T>>,
) -> Result<(BipartiteState<T>, Ensemble<T>)> {
    let first = terms
        .first()
        .ok_or_else(|| Error::InvalidInput("ensemble needs at least one term".into()))?;
    let dims = (first.psi_a.len(), first.psi_b.len());
    let tol = Tolerances::<T>::default();
    let mut total = T::zero();
    let n = dims.0 * dims.1;
    let mut rho = ComplexMatrix::zeros(n, n);
    for (l, t) in terms.iter().enumerate() {
        if t.weight.is_nan() || t.weight <= T::zero() {
            return Err(Error::InvalidInput(format!(
                "weight {} of term {l} is not positive",
                t.weight
            )));
        }
        if (t.psi_a.len(), t.psi_b.len()) != dims {
            return Err(Error::InvalidDimension(format!(
                "term {l} has local dimensions ({},{}), expected {dims:?}",
                t.psi_a.len(),
                t.psi_b.len()
            )));
        }
        check_normalized(&t.psi_a, "ψ_A")?;
        check_normalized(&t.psi_b, "ψ_B")?;
        total += t.weight;
        let psi = tensor_vec(&t.psi_a, &t.psi_b);
        rho = &rho + &ComplexMatrix::projector(&psi).scale_real(t.weight);
    }
    if (total - T::one()).abs() > tol.normalization {
        return Err(Error::Normalization(format!("weights sum to {total}")));
    }
    let state = BipartiteState::with_tolerances(rho, dims, &tol)?;
    Ok((state, Ensemble { terms }))
}

/// Independent generator for item `index` of a seeded run.
pub fn item_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn gaussian_complex<T: Real, R: Rng + ?Sized>(rng: &mut R) -> C<T> {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C::new(T::lit(re), T::lit(im))
}

/// Haar-uniform pure state in C^n.
pub fn haar_pure<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C<T>> {
    loop {
        let v: Vec<C<T>> = (0..n).map(|_| gaussian_complex(rng)).collect();
        let nrm = norm_sqr(&v).sqrt();
        if nrm > T::lit(1e-6) {
            return v.into_iter().map(|z| z / cr(nrm)).collect();
        }
    }
}

/// Haar-random unitary from Gram-Schmidt on a complex Ginibre matrix.
pub fn haar_unitary<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix<T> {
    'retry: loop {
        let mut cols: Vec<Vec<C<T>>> = Vec::with_capacity(n);
        for _ in 0..n {
            let mut v: Vec<C<T>> = (0..n).map(|_| gaussian_complex(rng)).collect();
            for q in &cols {
                let proj: C<T> = q.iter().zip(&v).map(|(a, b)| a.conj() * *b).sum();
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= proj * *y;
                }
            }
            let nrm = norm_sqr(&v).sqrt();
            if nrm < T::lit(1e-8) {
                continue 'retry;
            }
            cols.push(v.into_iter().map(|z| z / cr(nrm)).collect());
        }
        return ComplexMatrix::from_fn(n, n, |r, c| cols[c][r]);
    }
}

/// ρ = GG†/Tr(GG†) with G a complex Gaussian (N_A N_B)×rank matrix.
pub fn random_state<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    dims: (usize, usize),
    rank: usize,
) -> Result<BipartiteState<T>> {
    let n = dims.0 * dims.1;
    if rank == 0 || rank > n {
        return Err(Error::InvalidInput(format!(
            "rank must be in 1..={n}, got {rank}"
        )));
    }
    let g = ComplexMatrix::from_fn(n, rank, |_, _| gaussian_complex(rng));
    let ggd = &g * &g.adjoint();
    let tr = ggd.trace().re;
    BipartiteState::new(ggd.scale_real(T::one() / tr), dims)
}

/// Seeded stream of `count` random states of fixed rank.
///
/// Panics if `rank` is outside `1..=N_A·N_B`.
pub fn random_states<T: Real>(
    seed: u64,
    dims: (usize, usize),
    rank: usize,
    count: usize,
) -> impl Iterator<Item = BipartiteState<T>> {
    assert!(rank >= 1 && rank <= dims.0 * dims.1, "rank out of range");
    (0..count as u64)
        .map(move |i| random_state(&mut item_rng(seed, i), dims, rank).expect("GG† is a state"))
}

/// Same as [`random_states`] but with an error instead of a panic.
pub fn sample_random_state<T: Real>(
    seed: u64,
    dims: (usize, usize),
    rank: usize,
    count: usize,
) -> Result<impl Iterator<Item = BipartiteState<T>>> {
    if rank == 0 || rank > dims.0 * dims.1 {
        return Err(Error::InvalidInput(format!(
            "rank must be in 1..={}, got {rank}",
            dims.0 * dims.1
        )));
    }
    Ok(random_states(seed, dims, rank, count))
}

/// Distribution of sampled separable states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeparableSampler {
    pub dims: (usize, usize),
    /// Number of product terms, drawn uniformly.
    pub terms: RangeInclusive<usize>,
}

impl Default for SeparableSampler {
    fn default() -> Self {
        Self {
            dims: (2, 2),
            terms: 2..=8,
        }
    }
}

impl SeparableSampler {
    /// Flat-simplex weights, Haar local pure states.
    pub fn sample<T: Real, R: Rng + ?Sized>(
        &self,
        rng: &mut R,
    ) -> Result<(BipartiteState<T>, Ensemble<T>)> {
        let m = rng.random_range(self.terms.clone());
        let raw: Vec<f64> = (0..m)
            .map(|_| loop {
                let e: f64 = Exp1.sample(rng);
                if e > 0.0 {
                    break e;
                }
            })
            .collect();
        let total: f64 = raw.iter().sum();
        let terms = raw
            .iter()
            .map(|w| EnsembleTerm {
                weight: T::lit(w / total),
                psi_a: haar_pure(rng, self.dims.0),
                psi_b: haar_pure(rng, self.dims.1),
            })
            .collect();
        ensemble_state(terms)
    }

    /// The `index`-th sample of the seeded stream.
    pub fn nth<T: Real>(&self, seed: u64, index: u64) -> Result<(BipartiteState<T>, Ensemble<T>)> {
        self.sample(&mut item_rng(seed, index))
    }
}

pub fn sample_separable<T: Real>(
    seed: u64,
    sampler: SeparableSampler,
    count: usize,
) -> Result<impl Iterator<Item = (BipartiteState<T>, Ensemble<T>)>> {
    if count == 0 {
        return Err(Error::InvalidInput("count must be >= 1".into()));
    }
    if *sampler.terms.start() == 0 || sampler.terms.is_empty() {
        return Err(Error::InvalidInput(
            "term count range must be within 1..".into(),
        ));
    }
    Ok((0..count as u64).map(move |i| sampler.nth(seed, i).expect("sampled ensembles are valid")))
}

/// File format for states: `{ "dims": [N_A, N_B], "matrix": [[re, im], ...] }`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateJson {
    pub dims: [usize; 2],
    pub matrix: Vec<[f64; 2]>,
}

impl StateJson {
    pub fn from_state<T: Real>(state: &BipartiteState<T>) -> Self {
        let (na, nb) = state.dims();
        Self {
            dims: [na, nb],
            matrix: state
                .rho()
                .as_slice()
                .iter()
                .map(|z| [z.re.to_f64(), z.im.to_f64()])
                .collect(),
        }
    }

    pub fn to_state<T: Real>(&self, tol: &Tolerances<T>) -> Result<BipartiteState<T>> {
        let n = self.dims[0] * self.dims[1];
        let data = self
            .matrix
            .iter()
            .map(|[re, im]| C::new(T::lit(*re), T::lit(*im)))
            .collect();
        let rho = ComplexMatrix::from_vec(n, n, data)?;
        BipartiteState::with_tolerances(rho, (self.dims[0], self.dims[1]), tol)
    }
}

fn parse_param<T: Real>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse::<f64>()
        .map(T::lit)
        .map_err(|_| Error::InvalidInput(format!("cannot parse {what} from '{s}'")))
}

fn parse_dims(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| Error::InvalidInput(format!("dims '{s}' should look like 2x3")))?;
    let p = |x: &str| {
        x.trim()
            .parse::<usize>()
            .map_err(|_| Error::InvalidInput(format!("bad dimension '{x}'")))
    };
    Ok((p(a)?, p(b)?))
}

/// Resolves a builtin state name of the form `name[:param[:param]]`.
///
/// | name | state |
/// |------|-------|
/// | `bell` | (|00⟩+|11⟩)/√2 |
/// | `singlet` | (|01⟩−|10⟩)/√2 |
/// | `schmidt:k1[:k2]` | k1|00⟩+k2|11⟩, k2 defaults to √(1−k1²) |
/// | `werner:p` | p·|Ψ⁻⟩⟨Ψ⁻| + (1−p)I/4 |
/// | `cc5050` | ½(|00⟩⟨00|+|11⟩⟨11|) |
/// | `maxmixed[:NAxNB]` | I/(N_A N_B), default 2x2 |
pub fn builtin<T: Real>(source: &str) -> Result<BipartiteState<T>> {
    let mut parts = source.split(':');
    let name = parts.next().unwrap_or_default().trim().to_ascii_lowercase();
    let params: Vec<&str> = parts.collect();
    let arity = |max: usize| -> Result<()> {
        if params.len() > max {
            Err(Error::InvalidInput(format!(
                "'{name}' takes at most {max} parameter(s)"
            )))
        } else {
            Ok(())
        }
    };
    match name.as_str() {
        "bell" | "phi+" => {
            arity(0)?;
            Ok(bell_state())
        }
        "singlet" | "psi-" => {
            arity(0)?;
            werner_state(T::one())
        }
        "schmidt" => {
            arity(2)?;
            let k1: T = parse_param(
                params
                    .first()
                    .ok_or_else(|| Error::InvalidInput("schmidt needs k1".into()))?,
                "k1",
            )?;
            match params.get(1) {
                Some(k2) => schmidt_state(cr(k1), cr(parse_param(k2, "k2")?)),
                None => schmidt_real(k1),
            }
        }
        "werner" => {
            arity(1)?;
            let p = params
                .first()
                .ok_or_else(|| Error::InvalidInput("werner needs p".into()))?;
            werner_state(parse_param(p, "p")?)
        }
        "cc5050" => {
            arity(0)?;
            Ok(classically_correlated_5050())
        }
        "maxmixed" => {
            arity(1)?;
            let dims = params.first().map_or(Ok((2, 2)), |d| parse_dims(d))?;
            maximally_mixed(dims)
        }
        _ => Err(Error::InvalidInput(format!(
            "unknown builtin state '{source}'"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::{norm, BlochForm};
    use crate::linalg::{hermitian_eig, Subsystem};
    use crate::scalar::cx;

    #[test]
    fn schmidt_factory() {
        let s = schmidt_real(std::f64::consts::FRAC_1_SQRT_2).unwrap();
        assert!(s.rho().max_abs_diff(bell_state::<f64>().rho()) < 1e-15);
        let s = schmidt_state::<f64>(cx(1., 0.), cx(0., 0.)).unwrap();
        assert_eq!(s.rho()[(0, 0)], cx(1., 0.));
        assert!((s.purity() - 1.0).abs() < 1e-12);
        let s = schmidt_real(0.6).unwrap();
        let want = ComplexMatrix::from_real_diagonal(&[0.36, 0.64]);
        assert!(s.reduced(Subsystem::A).max_abs_diff(&want) < 1e-15);
        assert!(s.reduced(Subsystem::B).max_abs_diff(&want) < 1e-15);
        assert!(matches!(
            schmidt_state::<f64>(cx(0.6, 0.), cx(0.6, 0.)),
            Err(Error::Normalization(_))
        ));
    }

    #[test]
    fn werner_factory() {
        let w0 = werner_state::<f64>(0.0).unwrap();
        assert!(
            w0.rho()
                .max_abs_diff(&ComplexMatrix::identity(4).scale_real(0.25))
                < 1e-15
        );
        let w1 = werner_state::<f64>(1.0).unwrap();
        assert!((w1.purity() - 1.0).abs() < 1e-14);
        assert!(werner_state::<f64>(-1.0 / 3.0).is_ok());
        assert!(matches!(werner_state::<f64>(1.1), Err(Error::NotAState(_))));
        assert!(matches!(
            werner_state::<f64>(-0.4),
            Err(Error::NotAState(_))
        ));
    }

    #[test]
    fn ensemble_validation() {
        assert!(matches!(
            ensemble_state::<f64>(vec![]),
            Err(Error::InvalidInput(_))
        ));
        let up = vec![cx(1., 0.), cx(0., 0.)];
        let bad = vec![EnsembleTerm {
            weight: -1.0,
            psi_a: up.clone(),
            psi_b: up.clone(),
        }];
        assert!(matches!(ensemble_state(bad), Err(Error::InvalidInput(_))));
        let half = vec![EnsembleTerm {
            weight: 0.5,
            psi_a: up.clone(),
            psi_b: up.clone(),
        }];
        assert!(matches!(ensemble_state(half), Err(Error::Normalization(_))));
    }

    #[test]
    fn cc5050_from_ensemble() {
        let up = vec![cx(1., 0.), cx(0., 0.)];
        let dn = vec![cx(0., 0.), cx(1., 0.)];
        let (state, ens) = ensemble_state(vec![
            EnsembleTerm {
                weight: 0.5,
                psi_a: up.clone(),
                psi_b: up,
            },
            EnsembleTerm {
                weight: 0.5,
                psi_a: dn.clone(),
                psi_b: dn,
            },
        ])
        .unwrap();
        assert!(
            state
                .rho()
                .max_abs_diff(classically_correlated_5050::<f64>().rho())
                < 1e-15
        );
        let form = BlochForm::of(&state).unwrap();
        let mut want = RealMatrix::zeros(3, 3);
        want[(2, 2)] = 1.0;
        assert!(form.beta.max_abs_diff(&want) < 1e-15);
        assert!(norm(&form.r_b) < 1e-15);
        assert!(ens.correlation_from_terms().unwrap().max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn sampled_ensembles_match_outer_product_identity() {
        for dims in [(2, 2), (2, 3)] {
            let sampler = SeparableSampler { dims, terms: 2..=8 };
            for (state, ens) in sample_separable::<f64>(9, sampler, 200).unwrap() {
                let total: f64 = ens.terms.iter().map(|t| t.weight).sum();
                assert!((total - 1.0).abs() < 1e-12);
                assert!((2..=8).contains(&ens.len()));
                let form = BlochForm::of(&state).unwrap();
                assert!(
                    form.beta
                        .max_abs_diff(&ens.correlation_from_terms().unwrap())
                        < 1e-12
                );
                if dims == (2, 2) {
                    assert!(form.beta.frobenius_norm() <= 1.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn random_state_properties() {
        for s in random_states::<f64>(1, (2, 3), 1, 20) {
            assert!((s.purity() - 1.0).abs() < 1e-12);
        }
        for s in random_states::<f64>(2, (2, 2), 4, 20) {
            assert!(hermitian_eig(s.rho(), 1e-10).unwrap().values[0] > 0.0);
        }
        let a: Vec<_> = random_states::<f64>(3, (2, 2), 2, 5).collect();
        let b: Vec<_> = random_states::<f64>(3, (2, 2), 2, 5).collect();
        assert_eq!(a, b);
        assert!(sample_random_state::<f64>(1, (2, 2), 5, 1).is_err());
        assert!(sample_random_state::<f64>(1, (2, 2), 0, 1).is_err());
    }

    #[test]
    fn haar_qubits_are_isotropic() {
        let basis = gell_mann_basis::<f64>(2).unwrap();
        let mut rng = item_rng(77, 0);
        let n = 100_000;
        let mut mean = [0.0; 3];
        for _ in 0..n {
            let psi = haar_pure::<f64, _>(&mut rng, 2);
            let r = single_bloch(&ComplexMatrix::projector(&psi), &basis);
            for k in 0..3 {
                mean[k] += r[k] / n as f64;
            }
        }
        assert!(norm(&mean) < 0.02, "mean Bloch vector {mean:?}");
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = item_rng(5, 0);
        for n in 1..=4 {
            let u = haar_unitary::<f64, _>(&mut rng, n);
            assert!(u.is_unitary(1e-12));
        }
    }

    #[test]
    fn builtins_resolve() {
        assert!(builtin::<f64>("bell").is_ok());
        assert!(
            (BlochForm::of(&builtin::<f64>("schmidt:0.6").unwrap())
                .unwrap()
                .beta[(0, 0)]
                - 0.96)
                .abs()
                < 1e-14
        );
        assert!(builtin::<f64>("schmidt:0.6:0.8").is_ok());
        assert!(builtin::<f64>("werner:0.5").is_ok());
        assert_eq!(builtin::<f64>("maxmixed:2x3").unwrap().dims(), (2, 3));
        assert!(builtin::<f64>("cc5050").is_ok());
        assert!(builtin::<f64>("nope").is_err());
        assert!(builtin::<f64>("werner:abc").is_err());
        assert!(builtin::<f64>("werner:2").is_err());
        assert!(builtin::<f64>("bell:1").is_err());
    }

    #[test]
    fn state_json_roundtrip() {
        let s = werner_state::<f64>(0.3).unwrap();
        let j = StateJson::from_state(&s);
        assert_eq!(j.dims, [2, 2]);
        assert_eq!(j.matrix.len(), 16);
        let back = j.to_state(&Tolerances::default()).unwrap();
        assert_eq!(back.rho(), s.rho());
        let short = StateJson {
            dims: [2, 2],
            matrix: vec![[0.25, 0.0]; 15],
        };
        assert!(matches!(
            short.to_state::<f64>(&Tolerances::default()),
            Err(Error::InvalidDimension(_))
        ));
    }
}
