//! Exact dense linear algebra over any [`Field`]: products, Gaussian
//! elimination, rank, nullspace, determinant and inverse.

use std::fmt;

use crate::scalar::{Field, ScalarError, ScalarResult};

/// A dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Field> Matrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![F::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, F::one());
        }
        m
    }

    /// Builds a matrix from rows.
    ///
    /// # Panics
    /// Panics if the rows have different lengths.
    pub fn from_rows(rows: Vec<Vec<F>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix rows");
        Self { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
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

    pub fn get(&self, i: usize, j: usize) -> &F {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: F) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> Vec<F> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn column(&self, j: usize) -> Vec<F> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    /// Entrywise map into another field.
    pub fn map<G: Field>(&self, f: impl Fn(&F) -> G) -> Matrix<G> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    /// Entrywise fallible map into another field.
    pub fn try_map<G: Field, E>(&self, f: impl Fn(&F) -> Result<G, E>) -> Result<Matrix<G>, E> {
        let data = self.data.iter().map(f).collect::<Result<_, E>>()?;
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    /// Matrix product.
    ///
    /// # Panics
    /// Panics on incompatible shapes.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "incompatible matrix shapes");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let v = out.get(i, j).add_ref(&a.mul_ref(b));
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Matrix times column vector.
    pub fn mul_vec(&self, v: &[F]) -> Vec<F> {
        assert_eq!(self.cols, v.len(), "incompatible vector length");
        (0..self.rows)
            .map(|i| {
                (0..self.cols).fold(F::zero(), |acc, j| {
                    let a = self.get(i, j);
                    if a.is_zero() || v[j].is_zero() {
                        acc
                    } else {
                        acc.add_ref(&a.mul_ref(&v[j]))
                    }
                })
            })
            .collect()
    }

    /// Row vector times matrix.
    pub fn vec_mul(&self, v: &[F]) -> Vec<F> {
        self.transpose().mul_vec(v)
    }

    pub fn scale(&self, c: &F) -> Self {
        self.map(|a| a.mul_ref(c))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.add_ref(b)).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Field::is_zero)
    }

    /// Reduced row echelon form and its pivot columns.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m.get(i, c).is_zero()) else {
                continue;
            };
            m.swap_rows(r, p);
            let inv = m.get(r, c).inv().expect("pivot is nonzero");
            for j in c..m.cols {
                let v = m.get(r, j).mul_ref(&inv);
                m.set(r, j, v);
            }
            for i in 0..m.rows {
                if i == r || m.get(i, c).is_zero() {
                    continue;
                }
                let factor = m.get(i, c).clone();
                for j in c..m.cols {
                    let v = m.get(i, j).sub_ref(&factor.mul_ref(m.get(r, j)));
                    m.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// A basis of `{x : self · x = 0}`.
    pub fn nullspace(&self) -> Vec<Vec<F>> {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![F::zero(); self.cols];
                v[f] = F::one();
                for (row, &p) in pivots.iter().enumerate() {
                    v[p] = r.get(row, f).neg_ref();
                }
                v
            })
            .collect()
    }

    /// Determinant by Gaussian elimination.
    pub fn determinant(&self) -> F {
        assert!(self.is_square(), "determinant of a non-square matrix");
        let mut m = self.clone();
        let n = m.rows;
        let mut det = F::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !m.get(i, c).is_zero()) else {
                return F::zero();
            };
            if p != c {
                m.swap_rows(p, c);
                det = det.neg_ref();
            }
            let pivot = m.get(c, c).clone();
            det = det.mul_ref(&pivot);
            let inv = pivot.inv().expect("pivot is nonzero");
            for i in c + 1..n {
                if m.get(i, c).is_zero() {
                    continue;
                }
                let factor = m.get(i, c).mul_ref(&inv);
                for j in c..n {
                    let v = m.get(i, j).sub_ref(&factor.mul_ref(m.get(c, j)));
                    m.set(i, j, v);
                }
            }
        }
        det
    }

    /// Inverse by Gauss–Jordan elimination.
    pub fn inverse(&self) -> ScalarResult<Self> {
        assert!(self.is_square(), "inverse of a non-square matrix");
        let n = self.rows;
        let mut aug = Self::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, n + i, F::one());
        }
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] >= n {
            return Err(ScalarError::DivisionByZero);
        }
        let mut inv = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv.set(i, j, r.get(i, n + j).clone());
            }
        }
        Ok(inv)
    }
}

impl<F: Field> fmt::Display for Matrix<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            let row: Vec<String> = self.row(i).iter().map(ToString::to_string).collect();
            write!(f, "{}", row.join(", "))?;
        }
        write!(f, "]")
    }
}

/// Rank of a list of vectors (as rows).
pub fn rank_of<F: Field>(vectors: &[Vec<F>], dim: usize) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let rows: Vec<Vec<F>> = vectors
        .iter()
        .map(|v| {
            assert_eq!(v.len(), dim, "vector length mismatch");
            v.clone()
        })
        .collect();
    Matrix::from_rows(rows).rank()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{QuadExt, RatFunc};

    fn q(n: i64) -> QuadExt {
        QuadExt::int(n)
    }

    #[test]
    fn inverse_round_trips() {
        let m = Matrix::from_rows(vec![vec![q(2), q(1), q(0)], vec![q(1), q(3), q(1)], vec![q(0), q(1), q(4)]]);
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv), Matrix::identity(3));
        assert_eq!(m.determinant(), q(18));
    }

    #[test]
    fn singular_matrix_has_no_inverse() {
        let m = Matrix::from_rows(vec![vec![q(1), q(2)], vec![q(2), q(4)]]);
        assert!(m.inverse().is_err());
        assert_eq!(m.rank(), 1);
        assert_eq!(m.determinant(), q(0));
        let ns = m.nullspace();
        assert_eq!(ns.len(), 1);
        assert!(m.mul_vec(&ns[0]).iter().all(Field::is_zero));
    }

    #[test]
    fn rational_function_inverse() {
        let t = RatFunc::t();
        let m = Matrix::from_rows(vec![vec![t.clone(), RatFunc::int(0)], vec![RatFunc::int(1), t.mul_ref(&t)]]);
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv), Matrix::identity(2));
    }
}
