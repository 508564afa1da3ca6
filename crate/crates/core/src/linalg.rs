//! Dense LU factorization with partial pivoting.
//!
//! Both the Newton flow solvers and the simplex basis work on systems with at
//! most a few hundred unknowns, where a dense row-major factorization is the
//! simplest robust choice.

use crate::scalar::Scalar;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Scalar> DenseMatrix<S> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![S::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [S] {
        let n = self.n;
        &mut self.data[i * n..(i + 1) * n]
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        (0..self.n).map(|i| self.row(i).iter().zip(x).fold(S::zero(), |acc, (&a, &b)| acc + a * b)).collect()
    }

    /// Largest absolute entry, used for conditioning diagnostics.
    pub fn max_abs(&self) -> S {
        self.data.iter().fold(S::zero(), |m, v| m.max(v.abs()))
    }
}

impl<S> std::ops::Index<(usize, usize)> for DenseMatrix<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.n + j]
    }
}

impl<S> std::ops::IndexMut<(usize, usize)> for DenseMatrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.n + j]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("singular matrix: pivot {pivot:e} in column {column} (max entry {scale:e})")]
pub struct SingularMatrix {
    pub column: usize,
    pub pivot: f64,
    pub scale: f64,
}

/// `P A = L U` packed in one matrix.
#[derive(Debug, Clone)]
pub struct LuFactors<S> {
    lu: DenseMatrix<S>,
    perm: Vec<usize>,
}

impl<S: Scalar> LuFactors<S> {
    /// Factorizes `a`; pivots smaller than `rel_tol * max|a|` are singular.
    pub fn factorize(mut a: DenseMatrix<S>, rel_tol: S) -> Result<Self, SingularMatrix> {
        let n = a.n;
        let scale = a.max_abs();
        let threshold = rel_tol * scale.max(S::min_positive_value());
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot) =
                (k..n)
                    .map(|i| (i, a[(i, k)].abs()))
                    .fold((k, S::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pivot > threshold) {
                return Err(SingularMatrix { column: k, pivot: pivot.to_f64_lossy(), scale: scale.to_f64_lossy() });
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let inv = S::one() / a[(k, k)];
            for i in k + 1..n {
                let f = a[(i, k)] * inv;
                if f == S::zero() {
                    continue;
                }
                a[(i, k)] = f;
                for j in k + 1..n {
                    let akj = a[(k, j)];
                    a[(i, j)] -= f * akj;
                }
            }
        }
        Ok(Self { lu: a, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.n
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[S]) -> Vec<S> {
        let n = self.lu.n;
        let mut x: Vec<S> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }

    /// Solves `Aᵀ x = b`.
    pub fn solve_transpose(&self, b: &[S]) -> Vec<S> {
        let n = self.lu.n;
        // Uᵀ z = b
        let mut z = b.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for j in 0..i {
                s -= self.lu[(j, i)] * z[j];
            }
            z[i] = s / self.lu[(i, i)];
        }
        // Lᵀ w = z
        for i in (0..n).rev() {
            let mut s = z[i];
            for j in i + 1..n {
                s -= self.lu[(j, i)] * z[j];
            }
            z[i] = s;
        }
        let mut x = vec![S::zero(); n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = z[k];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DenseMatrix<f64> {
        let mut a = DenseMatrix::zeros(3);
        let vals = [[0.0, 2.0, 1.0], [1.0, -1.0, 0.0], [3.0, 0.5, 4.0]];
        for i in 0..3 {
            for j in 0..3 {
                a[(i, j)] = vals[i][j];
            }
        }
        a
    }

    #[test]
    fn solve_and_transpose_solve() {
        let a = sample();
        let lu = LuFactors::factorize(a.clone(), 1e-14).unwrap();
        let b = [1.0, 2.0, 3.0];
        let x = lu.solve(&b);
        let r = a.mul_vec(&x);
        for i in 0..3 {
            assert!((r[i] - b[i]).abs() < 1e-12);
        }
        let y = lu.solve_transpose(&b);
        for j in 0..3 {
            let col: f64 = (0..3).map(|i| a[(i, j)] * y[i]).sum();
            assert!((col - b[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_is_reported() {
        let mut a = DenseMatrix::<f64>::zeros(2);
        a[(0, 0)] = 1.0;
        a[(0, 1)] = 2.0;
        a[(1, 0)] = 2.0;
        a[(1, 1)] = 4.0;
        let err = LuFactors::factorize(a, 1e-12).unwrap_err();
        assert_eq!(err.column, 1);
    }

    #[test]
    fn works_in_f32() {
        let a = DenseMatrix::<f32>::identity(4);
        let lu = LuFactors::factorize(a, 1e-6).unwrap();
        assert_eq!(lu.solve(&[1.0, 2.0, 3.0, 4.0]), vec![1.0, 2.0, 3.0, 4.0]);
    }
}
