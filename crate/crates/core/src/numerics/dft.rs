//! Unitary DFT kernels: the dense reference matrix and an FFT-backed fast path.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::ComplexMatrix;

/// Dense unitary DFT matrix, `F[m][n] = exp(−j2πmn/size)/√size`.
///
/// # Panics
///
/// Panics if `size == 0`.
pub fn unitary_dft(size: usize) -> ComplexMatrix {
    assert!(size >= 1, "DFT size must be positive");
    let scale = 1.0 / (size as f64).sqrt();
    ComplexMatrix::from_fn(size, size, |m, n| {
        // reduce mn mod size first so the phase stays small for large sizes
        let k = (m * n) % size;
        Complex64::from_polar(scale, -2.0 * PI * k as f64 / size as f64)
    })
}

/// `Πᵖ` where `Π` is the one-sample cyclic delay, `(Π·v)[n] = v[(n−1) mod size]`.
///
/// # Panics
///
/// Panics if `size == 0`.
pub fn cyclic_shift_matrix(size: usize, power: usize) -> ComplexMatrix {
    assert!(size >= 1, "shift size must be positive");
    let p = power % size;
    ComplexMatrix::from_fn(size, size, |r, c| {
        if (c + p) % size == r {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Cyclic delay of a vector by `delay` samples: `out[n] = v[(n − delay) mod len]`.
pub fn cyclic_delay(v: &[Complex64], delay: usize) -> Vec<Complex64> {
    let n = v.len();
    if n == 0 {
        return Vec::new();
    }
    let d = delay % n;
    let mut out = Vec::with_capacity(n);
    out.extend_from_slice(&v[n - d..]);
    out.extend_from_slice(&v[..n - d]);
    out
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn run_fft(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    if n <= 1 {
        return;
    }
    let plan = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    });
    plan.process(buf);
    let scale = 1.0 / (n as f64).sqrt();
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// In-place `F·v` with unitary scaling.
pub fn fft_unitary(buf: &mut [Complex64]) {
    run_fft(buf, false);
}

/// In-place `Fᴴ·v` with unitary scaling.
pub fn ifft_unitary(buf: &mut [Complex64]) {
    run_fft(buf, true);
}
