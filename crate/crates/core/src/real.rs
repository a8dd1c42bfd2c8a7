//! Small real-valued matrices and 3-vectors (correlation matrices, Bloch
//! vectors, measurement axes, SO(3) rotations).

use std::ops::{Index, IndexMut, Mul};

use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::scalar::Real;

pub type Vec3<T> = [T; 3];

#[derive(Clone, PartialEq, Debug)]
pub struct RealMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> RealMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| if r == c { T::one() } else { T::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Option<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return None;
        }
        Some(Self {
            rows: r,
            cols: c,
            data: rows.concat(),
        })
    }

    pub fn from_mat3(m: &[[T; 3]; 3]) -> Self {
        Self::from_fn(3, 3, |r, c| m[r][c])
    }

    /// a bᵀ
    pub fn outer(a: &[T], b: &[T]) -> Self {
        Self::from_fn(a.len(), b.len(), |r, c| a[r] * b[c])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.data
            .chunks(self.cols.max(1))
            .map(<[T]>::to_vec)
            .collect()
    }

    /// Panics unless the matrix is 3×3.
    pub fn to_mat3(&self) -> [[T; 3]; 3] {
        assert_eq!((self.rows, self.cols), (3, 3));
        let mut m = [[T::zero(); 3]; 3];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = self[(r, c)];
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| *x * s).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| *a - *b)
                .collect(),
        }
    }

    /// Frobenius inner product Σ a_ij b_ij.
    pub fn dot(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| *a * *b)
            .sum()
    }

    pub fn frobenius_norm_sqr(&self) -> T {
        self.dot(self)
    }

    pub fn frobenius_norm(&self) -> T {
        self.frobenius_norm_sqr().sqrt()
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.sub(other).max_abs()
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self[(r, c)] * v[c]).sum())
            .collect()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
}

impl<T> Index<(usize, usize)> for RealMatrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for RealMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.cols + c]
    }
}

impl<T: Real> Mul for &RealMatrix<T> {
    type Output = RealMatrix<T>;

    fn mul(self, rhs: Self) -> RealMatrix<T> {
        assert_eq!(self.cols, rhs.rows);
        RealMatrix::from_fn(self.rows, rhs.cols, |r, c| {
            (0..self.cols).map(|k| self[(r, k)] * rhs[(k, c)]).sum()
        })
    }
}

impl<T: Real> Serialize for RealMatrix<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.rows))?;
        for r in 0..self.rows {
            seq.serialize_element(&self.data[r * self.cols..(r + 1) * self.cols])?;
        }
        seq.end()
    }
}

impl<'de, T: Real> Deserialize<'de> for RealMatrix<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<T>>::deserialize(deserializer)?;
        RealMatrix::from_rows(&rows).ok_or_else(|| serde::de::Error::custom("ragged matrix rows"))
    }
}

pub fn dot3<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross3<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm3<T: Real>(a: &Vec3<T>) -> T {
    dot3(a, a).sqrt()
}

pub fn add3<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub3<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale3<T: Real>(a: &Vec3<T>, s: T) -> Vec3<T> {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Unit vector along `a`, or `None` for a zero vector.
pub fn normalize3<T: Real>(a: &Vec3<T>) -> Option<Vec3<T>> {
    let n = norm3(a);
    if n > T::zero() && n.is_finite() {
        Some(scale3(a, T::one() / n))
    } else {
        None
    }
}

pub fn det3<T: Real>(m: &[[T; 3]; 3]) -> T {
    dot3(&m[0], &cross3(&m[1], &m[2]))
}

pub fn mat3_mul<T: Real>(a: &[[T; 3]; 3], b: &[[T; 3]; 3]) -> [[T; 3]; 3] {
    let mut out = [[T::zero(); 3]; 3];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|k| a[r][k] * b[k][c]).sum();
        }
    }
    out
}

pub fn mat3_transpose<T: Real>(a: &[[T; 3]; 3]) -> [[T; 3]; 3] {
    let mut out = [[T::zero(); 3]; 3];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = a[c][r];
        }
    }
    out
}

pub fn mat3_vec<T: Real>(a: &[[T; 3]; 3], v: &Vec3<T>) -> Vec3<T> {
    [dot3(&a[0], v), dot3(&a[1], v), dot3(&a[2], v)]
}

/// Max entrywise |QᵀQ - I|.
pub fn orthogonality_error<T: Real>(q: &[[T; 3]; 3]) -> T {
    let qtq = mat3_mul(&mat3_transpose(q), q);
    let mut worst = T::zero();
    for (r, row) in qtq.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            let want = if r == c { T::one() } else { T::zero() };
            worst = worst.max((*v - want).abs());
        }
    }
    worst
}

/// Orthonormal frame (columns) built from two independent vectors:
/// e1 ∥ a, e2 in span(a, b), e3 = e1 × e2.
pub fn triad<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Option<[[T; 3]; 3]> {
    let e1 = normalize3(a)?;
    let e2 = normalize3(&sub3(b, &scale3(&e1, dot3(&e1, b))))?;
    let e3 = cross3(&e1, &e2);
    Some([
        [e1[0], e2[0], e3[0]],
        [e1[1], e2[1], e3[1]],
        [e1[2], e2[2], e3[2]],
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triad_is_proper_rotation() {
        let f = triad(&[1.0, 2.0, 0.5], &[-0.3, 0.4, 2.0]).unwrap();
        assert!(orthogonality_error(&f) < 1e-14);
        assert!((det3(&f) - 1.0_f64).abs() < 1e-14);
        assert!(triad(&[1.0, 0.0, 0.0], &[2.0, 0.0, 0.0]).is_none());
    }

    #[test]
    fn serializes_as_nested_rows() {
        let m = RealMatrix::<f64>::from_fn(2, 3, |r, c| (r * 3 + c) as f64);
        let rows = m.to_rows();
        assert_eq!(rows, vec![vec![0.0, 1.0, 2.0], vec![3.0, 4.0, 5.0]]);
        assert_eq!(RealMatrix::from_rows(&rows).unwrap(), m);
    }
}
