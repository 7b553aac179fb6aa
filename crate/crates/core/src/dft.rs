//! Unitary DFT matrices and FFT helpers.
//!
//! Convention: `F[p][q] = exp(-j 2π p q / N) / √N` (0-based), so `F Fᴴ = I`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) fn cis(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

/// Unitary `n × n` DFT matrix.
pub fn dft_matrix(n: usize) -> DMatrix<Complex64> {
    truncated_dft_matrix(n, n)
}

/// First `cols` columns of the unitary `rows × rows` DFT matrix.
///
/// `truncated_dft_matrix(2n, n)` is the zero-padded DFT used by the
/// aperiodic EISL expression.
pub fn truncated_dft_matrix(rows: usize, cols: usize) -> DMatrix<Complex64> {
    let scale = 1.0 / (rows as f64).sqrt();
    DMatrix::from_fn(rows, cols, |p, q| {
        // reduce the exponent first to keep the phase argument small
        let e = (p * q) % rows;
        cis(-2.0 * PI * e as f64 / rows as f64) * scale
    })
}

/// `max |Uᴴ U − I|` over all entries.
pub fn unitarity_residual(u: &DMatrix<Complex64>) -> f64 {
    let g = u.adjoint() * u;
    let mut worst = 0.0_f64;
    for (idx, v) in g.iter().enumerate() {
        let (i, j) = (idx % g.nrows(), idx / g.nrows());
        let target = if i == j { 1.0 } else { 0.0 };
        worst = worst.max((v - Complex64::new(target, 0.0)).norm());
    }
    worst
}

/// Maximum entrywise modulus of `a − b`.
pub fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Forward/inverse FFT pair of a fixed length with unitary scaling.
#[derive(Clone)]
pub struct Dft {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Dft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dft").field("n", &self.n).finish()
    }
}

impl Dft {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unnormalized forward transform, `Σ x_q e^{-j2πpq/n}`.
    pub fn forward_raw(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    /// Unnormalized inverse transform, `Σ X_p e^{+j2πpq/n}`.
    pub fn inverse_raw(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
    }

    /// In-place `buf ← F buf`.
    pub fn forward_unitary(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
        let s = 1.0 / (self.n as f64).sqrt();
        buf.iter_mut().for_each(|v| *v *= s);
    }

    /// In-place `buf ← Fᴴ buf`.
    pub fn inverse_unitary(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        let s = 1.0 / (self.n as f64).sqrt();
        buf.iter_mut().for_each(|v| *v *= s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dft_matrix_is_unitary() {
        for n in [1, 2, 5, 16, 64] {
            assert!(unitarity_residual(&dft_matrix(n)) < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn fft_matches_matrix() {
        let n = 12;
        let f = dft_matrix(n);
        let x: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(i as f64 * 0.3 - 1.0, (i * i) as f64 * 0.01))
            .collect();
        let dense = &f * nalgebra::DVector::from_vec(x.clone());
        let mut buf = x;
        Dft::new(n).forward_unitary(&mut buf);
        for (a, b) in dense.iter().zip(buf.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn truncated_dft_columns_are_orthonormal() {
        let f = truncated_dft_matrix(16, 8);
        assert_eq!(f.shape(), (16, 8));
        assert!(unitarity_residual(&f) < 1e-12);
    }
}
