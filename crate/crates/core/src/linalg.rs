//! Dense complex matrices and the operator toolkit built on them: Kronecker
//! products, partial traces and transposes, Hermitian eigendecomposition and
//! the generalized Gell-Mann bases of SU(N).

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cr, Real, C};

/// Which half of a bipartite system an operation refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subsystem {
    A,
    B,
}

/// Dense complex matrix stored row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ComplexMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> fmt::Debug for ComplexMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl<T: Real> ComplexMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C<T>>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::InvalidDimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<C<T>>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidDimension("ragged rows".into()));
        }
        Self::from_vec(r, c, rows.concat())
    }

    pub fn from_real_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = cr(*d);
        }
        m
    }

    /// |ψ⟩⟨φ|
    pub fn outer(ket: &[C<T>], bra: &[C<T>]) -> Self {
        Self::from_fn(ket.len(), bra.len(), |r, c| ket[r] * bra[c].conj())
    }

    /// |ψ⟩⟨ψ| for a (not necessarily normalized) vector.
    pub fn projector(psi: &[C<T>]) -> Self {
        Self::outer(psi, psi)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }

    pub fn column(&self, c: usize) -> Vec<C<T>> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| *z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.scale(cr(s))
    }

    pub fn trace(&self) -> C<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Tr(self · other) without forming the product.
    pub fn trace_product(&self, other: &Self) -> C<T> {
        debug_assert_eq!(self.cols, other.rows);
        debug_assert_eq!(self.rows, other.cols);
        let mut acc = C::zero();
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    /// Σ |m_ij|²
    pub fn frobenius_norm_sqr(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .map(|z| z.norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Largest entrywise |self - other|.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    pub fn hermiticity_error(&self) -> T {
        if !self.is_square() {
            return T::infinity();
        }
        let mut worst = T::zero();
        for r in 0..self.rows {
            for c in r..self.cols {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn unitarity_error(&self) -> T {
        if !self.is_square() {
            return T::infinity();
        }
        (&self.adjoint() * self).max_abs_diff(&Self::identity(self.rows))
    }

    pub fn is_unitary(&self, tol: T) -> bool {
        self.unitarity_error() <= tol
    }

    /// (M + M†)/2
    pub fn hermitian_part(&self) -> Self {
        let adj = self.adjoint();
        (self + &adj).scale_real(T::lit(0.5))
    }

    /// AB - BA
    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// U M U†
    pub fn conjugate_by(&self, u: &Self) -> Self {
        &(u * self) * &u.adjoint()
    }

    pub fn mul_vec(&self, v: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self[(r, c)] * v[c]).sum())
            .collect()
    }

    /// Real parts of the diagonal.
    pub fn real_diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)].re)
            .collect()
    }

    /// Converts the scalar type entrywise.
    pub fn cast<S: Real>(&self) -> ComplexMatrix<S> {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|z| Complex::new(S::lit(z.re.to_f64()), S::lit(z.im.to_f64())))
                .collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = C<T>;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C<T> {
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for ComplexMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C<T> {
        &mut self.data[r * self.cols + c]
    }
}

impl<T: Real> Mul for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;

    fn mul(self, rhs: Self) -> ComplexMatrix<T> {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl<T: Real> Add for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;

    fn add(self, rhs: Self) -> ComplexMatrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| *a + *b)
                .collect(),
        }
    }
}

impl<T: Real> Sub for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;

    fn sub(self, rhs: Self) -> ComplexMatrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| *a - *b)
                .collect(),
        }
    }
}

/// Kronecker product A ⊗ B, A-index major.
pub fn tensor<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    ComplexMatrix::from_fn(a.rows * b.rows, a.cols * b.cols, |r, c| {
        a[(r / b.rows, c / b.cols)] * b[(r % b.rows, c % b.cols)]
    })
}

/// Kronecker product of two vectors.
pub fn tensor_vec<T: Real>(a: &[C<T>], b: &[C<T>]) -> Vec<C<T>> {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| *x * *y))
        .collect()
}

fn check_bipartite<T: Real>(rho: &ComplexMatrix<T>, (na, nb): (usize, usize)) -> Result<()> {
    let n = na * nb;
    if na == 0 || nb == 0 || rho.rows != n || rho.cols != n {
        return Err(Error::InvalidDimension(format!(
            "operator is {}x{}, dims ({na},{nb}) need {n}x{n}",
            rho.rows, rho.cols
        )));
    }
    Ok(())
}

/// Traces out the subsystem that is not `keep`.
pub fn partial_trace<T: Real>(
    rho: &ComplexMatrix<T>,
    dims: (usize, usize),
    keep: Subsystem,
) -> Result<ComplexMatrix<T>> {
    check_bipartite(rho, dims)?;
    let (na, nb) = dims;
    Ok(match keep {
        Subsystem::A => ComplexMatrix::from_fn(na, na, |a, a2| {
            (0..nb).map(|b| rho[(a * nb + b, a2 * nb + b)]).sum()
        }),
        Subsystem::B => ComplexMatrix::from_fn(nb, nb, |b, b2| {
            (0..na).map(|a| rho[(a * nb + b, a * nb + b2)]).sum()
        }),
    })
}

/// Transposes the indices of `which` subsystem.
pub fn partial_transpose<T: Real>(
    rho: &ComplexMatrix<T>,
    dims: (usize, usize),
    which: Subsystem,
) -> Result<ComplexMatrix<T>> {
    check_bipartite(rho, dims)?;
    let (na, nb) = dims;
    let n = na * nb;
    Ok(ComplexMatrix::from_fn(n, n, |r, c| {
        let (a, b) = (r / nb, r % nb);
        let (a2, b2) = (c / nb, c % nb);
        match which {
            Subsystem::B => rho[(a * nb + b2, a2 * nb + b)],
            Subsystem::A => rho[(a2 * nb + b, a * nb + b2)],
        }
    }))
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen<T: Real> {
    /// Ascending.
    pub values: Vec<T>,
    /// Unitary; column `k` is the eigenvector of `values[k]`.
    pub vectors: ComplexMatrix<T>,
}

impl<T: Real> HermitianEigen<T> {
    /// V diag(f(w)) V†
    pub fn map_values(&self, f: impl Fn(T) -> C<T>) -> ComplexMatrix<T> {
        let n = self.values.len();
        let v = &self.vectors;
        ComplexMatrix::from_fn(n, n, |r, c| {
            (0..n)
                .map(|k| v[(r, k)] * f(self.values[k]) * v[(c, k)].conj())
                .sum()
        })
    }

    pub fn reconstruct(&self) -> ComplexMatrix<T> {
        self.map_values(cr)
    }
}

const MAX_JACOBI_SWEEPS: usize = 100;

/// Cyclic complex Jacobi eigendecomposition.
///
/// Fails with `InvalidOperator` when `m` is not Hermitian within `tol`.
pub fn hermitian_eig<T: Real>(m: &ComplexMatrix<T>, tol: T) -> Result<HermitianEigen<T>> {
    if !m.is_square() {
        return Err(Error::InvalidDimension(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.rows, m.cols
        )));
    }
    let herm_err = m.hermiticity_error();
    if herm_err > tol {
        return Err(Error::InvalidOperator(format!(
            "matrix is not Hermitian (|M - M†| = {:e})",
            herm_err.to_f64()
        )));
    }
    let n = m.rows;
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::<T>::identity(n);
    let scale = a.max_abs().max(T::min_positive_value());
    let eps = T::epsilon();

    for _ in 0..MAX_JACOBI_SWEEPS {
        let off: T = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)].norm_sqr())
            .sum();
        if off.sqrt() <= eps * eps.sqrt() * scale || off.is_zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r <= eps * eps * scale {
                    continue;
                }
                // Phase e^{iθ} of a_pq; D = diag(1, e^{-iθ}) makes the pair real.
                let phase = apq / cr(r);
                let theta = (a[(q, q)].re - a[(p, p)].re) / (T::lit(2.0) * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                // J = D·G with G = [[c, s], [-s, c]]
                let jpp = cr(c);
                let jpq = cr(s);
                let jqp = cr(-s) * phase.conj();
                let jqq = cr(c) * phase.conj();
                // A ← A J
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * jpp + akq * jqp;
                    a[(k, q)] = akp * jpq + akq * jqq;
                }
                // A ← J† A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
                    a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
                }
                a[(p, q)] = C::zero();
                a[(q, p)] = C::zero();
                // V ← V J
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * jpp + vkq * jqp;
                    v[(k, q)] = vkp * jpq + vkq * jqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag = a.real_diagonal();
    order.sort_by(|&i, &j| {
        diag[i]
            .partial_cmp(&diag[j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

/// exp(i·t·H) for Hermitian `h`.
pub fn expm_i_hermitian<T: Real>(h: &ComplexMatrix<T>, t: T) -> Result<ComplexMatrix<T>> {
    let tol = T::default_tolerances()
        .herm
        .max(h.max_abs() * T::lit(1e-12));
    let eig = hermitian_eig(h, tol)?;
    Ok(eig.map_values(|w| {
        let a = w * t;
        C::new(a.cos(), a.sin())
    }))
}

/// Ordered set of N²−1 traceless Hermitian generators of SU(N), normalized
/// so that Tr(λ_i λ_j) = 2δ_ij.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorBasis<T: Real> {
    dim: usize,
    generators: Vec<ComplexMatrix<T>>,
}

impl<T: Real> GeneratorBasis<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn generators(&self) -> &[ComplexMatrix<T>] {
        &self.generators
    }

    pub fn get(&self, i: usize) -> &ComplexMatrix<T> {
        &self.generators[i]
    }

    /// Coefficients c_k = ½Tr(λ_k M) of M in this basis.
    pub fn coefficients(&self, m: &ComplexMatrix<T>) -> Vec<T> {
        let half = T::lit(0.5);
        self.generators
            .iter()
            .map(|g| g.trace_product(m).re * half)
            .collect()
    }

    /// Σ_k c_k λ_k
    pub fn combine(&self, coeffs: &[T]) -> ComplexMatrix<T> {
        assert_eq!(coeffs.len(), self.generators.len());
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for (c, g) in coeffs.iter().zip(&self.generators) {
            if c.is_zero() {
                continue;
            }
            out = &out + &g.scale_real(*c);
        }
        out
    }
}

/// Generalized Gell-Mann matrices for SU(N).
///
/// Order: all symmetric off-diagonal generators, then all antisymmetric
/// off-diagonal generators (each over index pairs j<k in lexicographic
/// order), then the N−1 diagonal generators. For N=2 this is (σ_1, σ_2, σ_3).
pub fn gell_mann_basis<T: Real>(n: usize) -> Result<GeneratorBasis<T>> {
    if n < 2 {
        return Err(Error::InvalidDimension(format!(
            "SU(N) generators need N >= 2, got {n}"
        )));
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|j| ((j + 1)..n).map(move |k| (j, k)))
        .collect();
    let mut generators = Vec::with_capacity(n * n - 1);
    for &(j, k) in &pairs {
        let mut m = ComplexMatrix::zeros(n, n);
        m[(j, k)] = C::one();
        m[(k, j)] = C::one();
        generators.push(m);
    }
    for &(j, k) in &pairs {
        let mut m = ComplexMatrix::zeros(n, n);
        m[(j, k)] = C::new(T::zero(), -T::one());
        m[(k, j)] = C::new(T::zero(), T::one());
        generators.push(m);
    }
    for l in 1..n {
        let lf = T::lit(l as f64);
        let norm = (T::lit(2.0) / (lf * (lf + T::one()))).sqrt();
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..l {
            m[(i, i)] = cr(norm);
        }
        m[(l, l)] = cr(-lf * norm);
        generators.push(m);
    }
    Ok(GeneratorBasis { dim: n, generators })
}

/// Pauli matrices (σ_1, σ_2, σ_3).
pub fn pauli<T: Real>() -> [ComplexMatrix<T>; 3] {
    let b = gell_mann_basis::<T>(2).expect("N=2 is valid");
    [b.get(0).clone(), b.get(1).clone(), b.get(2).clone()]
}

/// n·σ for a real 3-vector.
pub fn pauli_dot<T: Real>(n: &[T; 3]) -> ComplexMatrix<T> {
    let s = pauli::<T>();
    let mut out = ComplexMatrix::zeros(2, 2);
    for i in 0..3 {
        out = &out + &s[i].scale_real(n[i]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;

    type M = ComplexMatrix<f64>;

    fn brute_kron(a: &M, b: &M) -> M {
        let mut out = M::zeros(a.rows() * b.rows(), a.cols() * b.cols());
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                for k in 0..b.rows() {
                    for l in 0..b.cols() {
                        out[(i * b.rows() + k, j * b.cols() + l)] = a[(i, j)] * b[(k, l)];
                    }
                }
            }
        }
        out
    }

    fn pseudo_random(n: usize, seed: u64) -> M {
        let mut s = seed;
        let mut next = || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        M::from_fn(n, n, |_, _| C::new(next(), next()))
    }

    #[test]
    fn su2_basis_is_pauli() {
        let b = gell_mann_basis::<f64>(2).unwrap();
        let s1 =
            M::from_rows(&[vec![cx(0., 0.), cx(1., 0.)], vec![cx(1., 0.), cx(0., 0.)]]).unwrap();
        let s2 =
            M::from_rows(&[vec![cx(0., 0.), cx(0., -1.)], vec![cx(0., 1.), cx(0., 0.)]]).unwrap();
        let s3 =
            M::from_rows(&[vec![cx(1., 0.), cx(0., 0.)], vec![cx(0., 0.), cx(-1., 0.)]]).unwrap();
        assert_eq!(b.len(), 3);
        assert_eq!(b.get(0), &s1);
        assert_eq!(b.get(1), &s2);
        assert_eq!(b.get(2), &s3);
    }

    #[test]
    fn generators_are_orthonormal_and_traceless() {
        for n in 2..=4 {
            let b = gell_mann_basis::<f64>(n).unwrap();
            assert_eq!(b.len(), n * n - 1);
            for (i, gi) in b.generators().iter().enumerate() {
                assert!(gi.is_hermitian(1e-15));
                assert!(gi.trace().norm() < 1e-12);
                for (j, gj) in b.generators().iter().enumerate() {
                    let want = if i == j { 2.0 } else { 0.0 };
                    assert!(
                        (gi.trace_product(gj) - cx(want, 0.)).norm() < 1e-12,
                        "n={n} ({i},{j})"
                    );
                }
            }
        }
    }

    #[test]
    fn rejects_small_dimension() {
        assert!(matches!(
            gell_mann_basis::<f64>(1),
            Err(Error::InvalidDimension(_))
        ));
        assert!(matches!(
            gell_mann_basis::<f64>(0),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn coefficients_roundtrip() {
        let b = gell_mann_basis::<f64>(3).unwrap();
        let c: Vec<f64> = (0..8).map(|i| 0.1 * i as f64 - 0.3).collect();
        let m = b.combine(&c);
        let back = b.coefficients(&m);
        for (x, y) in c.iter().zip(&back) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn kronecker_examples() {
        assert_eq!(tensor(&M::identity(2), &M::identity(2)), M::identity(4));
        let [_, _, s3] = pauli::<f64>();
        let zz = tensor(&s3, &s3);
        assert_eq!(zz, M::from_real_diagonal(&[1.0, -1.0, -1.0, 1.0]));
        let (a, b, c, d) = (
            pseudo_random(2, 1),
            pseudo_random(2, 2),
            pseudo_random(2, 3),
            pseudo_random(2, 4),
        );
        assert!(tensor(&a, &b).max_abs_diff(&brute_kron(&a, &b)) < 1e-15);
        let lhs = &tensor(&a, &b) * &tensor(&c, &d);
        let rhs = tensor(&(&a * &c), &(&b * &d));
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn partial_trace_of_bell_is_maximally_mixed() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = vec![cx(h, 0.), cx(0., 0.), cx(0., 0.), cx(h, 0.)];
        let rho = M::projector(&psi);
        // explicit index sum oracle
        let mut oracle = M::zeros(2, 2);
        for a in 0..2 {
            for a2 in 0..2 {
                for b in 0..2 {
                    oracle[(a, a2)] += rho[(2 * a + b, 2 * a2 + b)];
                }
            }
        }
        let ra = partial_trace(&rho, (2, 2), Subsystem::A).unwrap();
        assert!(ra.max_abs_diff(&oracle) < 1e-15);
        assert!(ra.max_abs_diff(&M::identity(2).scale_real(0.5)) < 1e-15);
        let rb = partial_trace(&rho, (2, 2), Subsystem::B).unwrap();
        assert!(rb.max_abs_diff(&M::identity(2).scale_real(0.5)) < 1e-15);
    }

    #[test]
    fn partial_trace_dimension_mismatch() {
        let rho = M::identity(4);
        assert!(matches!(
            partial_trace(&rho, (2, 3), Subsystem::A),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn partial_trace_of_product_and_linearity() {
        let a = pseudo_random(2, 7).hermitian_part();
        let b = pseudo_random(3, 8).hermitian_part();
        let ab = tensor(&a, &b);
        let ta = partial_trace(&ab, (2, 3), Subsystem::A).unwrap();
        assert!(ta.max_abs_diff(&a.scale(b.trace())) < 1e-12);
        let tb = partial_trace(&ab, (2, 3), Subsystem::B).unwrap();
        assert!(tb.max_abs_diff(&b.scale(a.trace())) < 1e-12);

        let x = pseudo_random(6, 9);
        let y = pseudo_random(6, 10);
        let (p, q) = (cx(0.3, 0.0), cx(-1.7, 0.0));
        let lhs = partial_trace(&(&x.scale(p) + &y.scale(q)), (2, 3), Subsystem::A).unwrap();
        let rhs = &partial_trace(&x, (2, 3), Subsystem::A).unwrap().scale(p)
            + &partial_trace(&y, (2, 3), Subsystem::A).unwrap().scale(q);
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn partial_transpose_is_involution_and_matches_kron() {
        let a = pseudo_random(2, 11);
        let b = pseudo_random(3, 12);
        let pt = partial_transpose(&tensor(&a, &b), (2, 3), Subsystem::B).unwrap();
        assert!(pt.max_abs_diff(&tensor(&a, &b.transpose())) < 1e-15);
        let pta = partial_transpose(&tensor(&a, &b), (2, 3), Subsystem::A).unwrap();
        assert!(pta.max_abs_diff(&tensor(&a.transpose(), &b)) < 1e-15);
        let x = pseudo_random(6, 13);
        let twice = partial_transpose(
            &partial_transpose(&x, (2, 3), Subsystem::B).unwrap(),
            (2, 3),
            Subsystem::B,
        )
        .unwrap();
        assert_eq!(twice, x);
    }

    #[test]
    fn eig_examples() {
        let [_, _, s3] = pauli::<f64>();
        let e = hermitian_eig(&s3, 1e-10).unwrap();
        assert_eq!(e.values, vec![-1.0, 1.0]);

        let rho_b = M::from_real_diagonal(&[0.36, 0.64]);
        let e = hermitian_eig(&rho_b, 1e-10).unwrap();
        assert!((e.values[0] - 0.36).abs() < 1e-15 && (e.values[1] - 0.64).abs() < 1e-15);

        for seed in 0..20 {
            let h = pseudo_random(4, 100 + seed).hermitian_part();
            let e = hermitian_eig(&h, 1e-10).unwrap();
            assert!(e.reconstruct().max_abs_diff(&h) < 1e-10);
            assert!(e.vectors.is_unitary(1e-10));
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = pseudo_random(3, 5);
        assert!(matches!(
            hermitian_eig(&m, 1e-10),
            Err(Error::InvalidOperator(_))
        ));
    }

    #[test]
    fn eig_handles_degenerate_spectrum() {
        let h = M::identity(3).scale_real(0.5);
        let e = hermitian_eig(&h, 1e-10).unwrap();
        assert!(e.values.iter().all(|v| (v - 0.5).abs() < 1e-15));
        assert!(e.vectors.is_unitary(1e-12));
    }

    #[test]
    fn expm_of_pauli_z() {
        let [_, _, s3] = pauli::<f64>();
        let phi = 0.7_f64;
        let u = expm_i_hermitian(&s3, phi / 2.0).unwrap();
        assert!((u[(0, 0)] - C::new((phi / 2.0).cos(), (phi / 2.0).sin())).norm() < 1e-14);
        assert!((u[(1, 1)] - C::new((phi / 2.0).cos(), -(phi / 2.0).sin())).norm() < 1e-14);
        assert!(u.is_unitary(1e-14));
    }

    #[test]
    fn works_in_single_precision() {
        let b = gell_mann_basis::<f32>(3).unwrap();
        for (i, gi) in b.generators().iter().enumerate() {
            for (j, gj) in b.generators().iter().enumerate() {
                let want = if i == j { 2.0 } else { 0.0 };
                assert!((gi.trace_product(gj).re - want).abs() < 1e-6);
            }
        }
        let h = ComplexMatrix::<f32>::from_real_diagonal(&[0.25, 0.75]);
        let e = hermitian_eig(&h, 1e-5).unwrap();
        assert!((e.values[1] - 0.75).abs() < 1e-6);
    }
}
