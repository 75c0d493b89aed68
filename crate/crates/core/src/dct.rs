//! Orthonormal type-II DCT on square blocks.

use crate::scalar::Real;

/// Separable orthonormal N×N DCT-II. `basis[k * n + i] = c_k cos((2i + 1) k π / 2n)`.
#[derive(Clone, Debug)]
pub struct DctBasis<T> {
    n: usize,
    basis: Vec<T>,
}

impl<T: Real> DctBasis<T> {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "DCT size must be positive");
        let mut basis = Vec::with_capacity(n * n);
        let nf = n as f64;
        for k in 0..n {
            let scale = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
            for i in 0..n {
                let angle = std::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2.0 * nf);
                basis.push(T::lit(scale * angle.cos()));
            }
        }
        Self { n, basis }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Coefficient block (row = vertical frequency) of a row-major spatial block.
    pub fn forward(&self, block: &[T], out: &mut [T]) {
        self.separable(block, out, false);
    }

    pub fn inverse(&self, coeffs: &[T], out: &mut [T]) {
        self.separable(coeffs, out, true);
    }

    fn separable(&self, input: &[T], out: &mut [T], transpose: bool) {
        let n = self.n;
        assert_eq!(input.len(), n * n);
        assert_eq!(out.len(), n * n);
        let c = |k: usize, i: usize| {
            if transpose {
                self.basis[i * n + k]
            } else {
                self.basis[k * n + i]
            }
        };
        // rows first, then columns
        let mut tmp = vec![T::zero(); n * n];
        for r in 0..n {
            let row = &input[r * n..(r + 1) * n];
            for k in 0..n {
                let mut acc = T::zero();
                for (i, &v) in row.iter().enumerate() {
                    acc += c(k, i) * v;
                }
                tmp[r * n + k] = acc;
            }
        }
        for col in 0..n {
            for k in 0..n {
                let mut acc = T::zero();
                for i in 0..n {
                    acc += c(k, i) * tmp[i * n + col];
                }
                out[k * n + col] = acc;
            }
        }
    }
}

/// The 8×8 transform used for JPEG code blocks.
#[derive(Clone, Debug)]
pub struct Dct8x8<T>(DctBasis<T>);

impl<T: Real> Default for Dct8x8<T> {
    fn default() -> Self {
        Self(DctBasis::new(8))
    }
}

impl<T: Real> Dct8x8<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn forward(&self, block: &[T; 64]) -> [T; 64] {
        let mut out = [T::zero(); 64];
        self.0.forward(block, &mut out);
        out
    }

    pub fn inverse(&self, coeffs: &[T; 64]) -> [T; 64] {
        let mut out = [T::zero(); 64];
        self.0.inverse(coeffs, &mut out);
        out
    }
}
