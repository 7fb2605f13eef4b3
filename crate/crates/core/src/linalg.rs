//! Small dense complex linear algebra.
//!
//! The only system the optimizers ever solve is the `M x M` MMSE normal
//! matrix, which is Hermitian positive definite whenever the noise variance
//! is positive, so a Cholesky factorization is all that is needed.

use num_complex::Complex64;

use crate::error::{check_len, Error, Result};

/// Dense square complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(n: usize, data: Vec<Complex64>) -> Result<Self> {
        check_len("matrix storage", n * n, data.len())?;
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `self += scale * v v^H`
    pub fn add_outer(&mut self, scale: f64, v: &[Complex64]) {
        debug_assert_eq!(v.len(), self.n);
        for (i, vi) in v.iter().enumerate() {
            let vi = vi * scale;
            for (cell, vj) in self.data[i * self.n..(i + 1) * self.n].iter_mut().zip(v) {
                *cell += vi * vj.conj();
            }
        }
    }

    pub fn add_diagonal(&mut self, value: f64) {
        for i in 0..self.n {
            self.data[i * self.n + i] += value;
        }
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| {
                self.data[i * self.n..(i + 1) * self.n]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for SquareMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for SquareMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

/// Lower-triangular Cholesky factor `L` with `A = L L^H`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    lower: SquareMatrix,
}

impl Cholesky {
    pub fn factor(matrix: &SquareMatrix) -> Result<Self> {
        let n = matrix.dim();
        if matrix.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("Cholesky input"));
        }
        let scale = matrix.max_abs().max(f64::MIN_POSITIVE);
        if matrix.hermitian_defect() > 1e-10 * scale {
            return Err(Error::InvalidParameter(
                "matrix passed to the Hermitian solver is not Hermitian".into(),
            ));
        }

        let mut lower = SquareMatrix::zeros(n);
        for j in 0..n {
            let mut diag = matrix[(j, j)].re;
            for k in 0..j {
                diag -= lower[(j, k)].norm_sqr();
            }
            if !(diag > 0.0) {
                return Err(Error::NotPositiveDefinite {
                    pivot: j,
                    value: diag,
                });
            }
            let ljj = diag.sqrt();
            lower[(j, j)] = Complex64::new(ljj, 0.0);
            for i in (j + 1)..n {
                let mut acc = matrix[(i, j)];
                for k in 0..j {
                    acc -= lower[(i, k)] * lower[(j, k)].conj();
                }
                lower[(i, j)] = acc / ljj;
            }
        }
        Ok(Self { lower })
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.lower.dim();
        check_len("right-hand side", n, rhs.len())?;
        let l = &self.lower;

        // L y = b
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut acc = y[i];
            for k in 0..i {
                acc -= l[(i, k)] * y[k];
            }
            y[i] = acc / l[(i, i)].re;
        }
        // L^H x = y
        for i in (0..n).rev() {
            let mut acc = y[i];
            for k in (i + 1)..n {
                acc -= l[(k, i)].conj() * y[k];
            }
            y[i] = acc / l[(i, i)].re;
        }
        Ok(y)
    }
}

/// Solves `A x = b` for Hermitian positive definite `A` without forming an inverse.
pub fn hermitian_solve(matrix: &SquareMatrix, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
    check_len("right-hand side", matrix.dim(), rhs.len())?;
    Cholesky::factor(matrix)?.solve(rhs)
}
