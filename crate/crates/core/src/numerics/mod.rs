//! Complex linear-algebra kernels shared by every other module.

mod chol;
mod dft;
mod eig;
mod matrix;
mod rng;

pub use chol::{Cholesky, ProfileMatrix};
pub use dft::{cyclic_delay, cyclic_shift_matrix, fft_unitary, ifft_unitary, unitary_dft};
pub use eig::{hermitian_eigen, hermitian_rank_eigs, HermitianEigen, DEFAULT_RANK_TOL, HERMITIAN_TOL};
pub use matrix::ComplexMatrix;
pub use rng::{complex_gaussian, SimRng};

pub use num_complex::Complex64;

/// Largest entrywise modulus of `a − b`; infinite on length mismatch.
pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn energy(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}
