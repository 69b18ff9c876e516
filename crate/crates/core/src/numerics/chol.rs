//! Cholesky factorization of Hermitian positive-definite matrices in
//! profile (envelope) storage.
//!
//! Row `i` of the factor is stored from its first structurally non-zero
//! column onwards. Fill-in never leaves the envelope of the input, so a
//! dense matrix costs the usual `n³/6` while a banded matrix with a few
//! wrap-around corner entries costs `O(n·b²)` plus the corner rows.

use num_complex::Complex64;

use super::ComplexMatrix;
use crate::error::{Error, Result};

/// Lower triangle of a Hermitian matrix in envelope storage.
#[derive(Clone, Debug)]
pub struct ProfileMatrix {
    first: Vec<usize>,
    rows: Vec<Vec<Complex64>>,
}

impl ProfileMatrix {
    /// Captures the lower triangle of `a`; the upper triangle is assumed to
    /// be its conjugate mirror and is not read.
    pub fn from_dense(a: &ComplexMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::dim(format!("profile of {}x{} matrix", a.rows(), a.cols())));
        }
        let n = a.rows();
        let mut first = Vec::with_capacity(n);
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let row = a.row(i);
            let f = (0..i).find(|&j| row[j] != Complex64::new(0.0, 0.0)).unwrap_or(i);
            first.push(f);
            rows.push(row[f..=i].to_vec());
        }
        Ok(Self { first, rows })
    }

    pub fn size(&self) -> usize {
        self.first.len()
    }

    /// Stored entries, a proxy for factorization cost.
    pub fn envelope_len(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Factors `A + shift·I`.
    pub fn cholesky_shifted(&self, shift: f64) -> Result<Cholesky> {
        let n = self.size();
        let mut rows = self.rows.clone();
        for i in 0..n {
            let fi = self.first[i];
            let diag_pos = i - fi;
            rows[i][diag_pos].re += shift;
            rows[i][diag_pos].im = 0.0;
            for j in fi..=i {
                let fj = self.first[j];
                let start = fi.max(fj);
                let mut acc = rows[i][j - fi];
                if j > start {
                    // split borrow: row j is finished, row i is in progress
                    let (done, rest) = rows.split_at(i);
                    let row_i = &rest[0];
                    let row_j: &[Complex64] = if j == i { row_i } else { &done[j] };
                    let li = &row_i[start - fi..j - fi];
                    let lj = &row_j[start - fj..j - fj];
                    for (a, b) in li.iter().zip(lj) {
                        acc -= a * b.conj();
                    }
                }
                if j == i {
                    if acc.re <= 0.0 || !acc.re.is_finite() {
                        return Err(Error::NotPositiveDefinite { index: i });
                    }
                    rows[i][j - fi] = Complex64::new(acc.re.sqrt(), 0.0);
                } else {
                    let ljj = rows[j][j - fj].re;
                    rows[i][j - fi] = acc / ljj;
                }
            }
        }
        Ok(Cholesky {
            first: self.first.clone(),
            rows,
        })
    }
}

/// `A = L·Lᴴ` with `L` lower triangular in envelope storage.
#[derive(Clone, Debug)]
pub struct Cholesky {
    first: Vec<usize>,
    rows: Vec<Vec<Complex64>>,
}

impl Cholesky {
    /// Factors a dense Hermitian positive-definite matrix.
    pub fn factor(a: &ComplexMatrix) -> Result<Self> {
        ProfileMatrix::from_dense(a)?.cholesky_shifted(0.0)
    }

    pub fn size(&self) -> usize {
        self.first.len()
    }

    /// Solves `A·x = b`.
    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.size();
        if b.len() != n {
            return Err(Error::dim(format!("rhs of length {} for {n}x{n} system", b.len())));
        }
        let mut z = b.to_vec();
        self.solve_in_place(&mut z);
        Ok(z)
    }

    fn solve_in_place(&self, z: &mut [Complex64]) {
        let n = self.size();
        // forward: L·w = b
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.rows[i];
            let mut acc = z[i];
            for (l, w) in row[..i - fi].iter().zip(&z[fi..i]) {
                acc -= l * w;
            }
            z[i] = acc / row[i - fi].re;
        }
        // backward: Lᴴ·x = w, row-oriented scatter
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.rows[i];
            let xi = z[i] / row[i - fi].re;
            z[i] = xi;
            for (l, zk) in row[..i - fi].iter().zip(&mut z[fi..i]) {
                *zk -= l.conj() * xi;
            }
        }
    }

    /// Dense `A⁻¹`.
    pub fn inverse(&self) -> ComplexMatrix {
        let n = self.size();
        let mut inv = ComplexMatrix::zeros(n, n);
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            col.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            col[j] = Complex64::new(1.0, 0.0);
            self.solve_in_place(&mut col);
            for (i, v) in col.iter().enumerate() {
                inv[(i, j)] = *v;
            }
        }
        inv
    }

    /// Dense lower-triangular factor.
    pub fn lower(&self) -> ComplexMatrix {
        let n = self.size();
        let mut l = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            let fi = self.first[i];
            for (k, v) in self.rows[i].iter().enumerate() {
                l[(i, fi + k)] = *v;
            }
        }
        l
    }
}
