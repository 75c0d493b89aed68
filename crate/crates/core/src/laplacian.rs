//! Laplacian DCT-coefficient prior and the closed-form MMSE estimate inside a
//! quantization bin.
//!
//! Bins are round-consistent: index `q` with step `Q` covers `[(q − ½)Q, (q + ½)Q)`.
//! The prior density is `p(y) = exp(−|y| / b) / 2b` with scale `b` (rate `μ = 1/b`).

use thiserror::Error;

use crate::jpeg::{reconstruct_plane, QuantizedImage};
use crate::raster::{GrayImage, Plane};
use crate::scalar::Real;

/// Smallest scale a fitted frequency may take.
pub const SCALE_FLOOR: f64 = 1e-4;
/// Blocks required before per-frequency statistics are trusted.
pub const MIN_BLOCKS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PriorError {
    #[error("need at least {MIN_BLOCKS} code blocks to fit the prior, got {0}")]
    TooFewBlocks(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CoefficientPrior<T> {
    /// Flat prior: the estimate is the bin center.
    Uniform,
    /// Zero-mean Laplacian with the given scale.
    Laplacian { scale: T },
}

impl<T: Real> CoefficientPrior<T> {
    pub fn rate(&self) -> Option<T> {
        match *self {
            CoefficientPrior::Uniform => None,
            CoefficientPrior::Laplacian { scale } => Some(scale.recip()),
        }
    }
}

/// One prior per DCT frequency (row-major order).
#[derive(Clone, Debug, PartialEq)]
pub struct LaplacianParams<T> {
    pub priors: [CoefficientPrior<T>; 64],
}

impl<T: Real> LaplacianParams<T> {
    pub fn uniform() -> Self {
        Self { priors: [CoefficientPrior::Uniform; 64] }
    }

    pub fn scale(&self, i: usize) -> Option<T> {
        match self.priors[i] {
            CoefficientPrior::Uniform => None,
            CoefficientPrior::Laplacian { scale } => Some(scale),
        }
    }
}

/// Maximum-likelihood Laplacian scale (mean absolute value), floored at [`SCALE_FLOOR`].
pub fn fit_scale<T: Real>(samples: &[T]) -> T {
    let floor = T::lit(SCALE_FLOOR);
    if samples.is_empty() {
        return floor;
    }
    let mad = samples.iter().map(|v| v.abs()).sum::<T>() / T::from_usize_lossy(samples.len());
    mad.max(floor)
}

/// Fits one Laplacian per AC frequency from the hard-decoded coefficients; DC is uniform.
pub fn fit_laplacian<T: Real>(qimg: &QuantizedImage) -> Result<LaplacianParams<T>, PriorError> {
    let blocks = qimg.blocks();
    if blocks.len() < MIN_BLOCKS {
        return Err(PriorError::TooFewBlocks(blocks.len()));
    }
    let mut params = LaplacianParams::uniform();
    for i in 1..64 {
        let step = f64::from(qimg.qtable().natural(i));
        let samples: Vec<T> = blocks.iter().map(|b| T::lit(f64::from(b[i]) * step)).collect();
        params.priors[i] = CoefficientPrior::Laplacian { scale: fit_scale(&samples) };
    }
    Ok(params)
}

/// Prior-weighted centroid of bin `q` with step `step`.
pub fn mmse_coefficient<T: Real>(q: i32, step: u16, prior: CoefficientPrior<T>) -> T {
    let width = T::lit(f64::from(step));
    let center = T::lit(f64::from(q)) * width;
    let scale = match prior {
        CoefficientPrior::Uniform => return center,
        CoefficientPrior::Laplacian { scale } => scale,
    };
    if q == 0 {
        return T::zero();
    }
    let half = T::lit(0.5);
    // truncated exponential on [lower, lower + width], decaying away from zero
    let lower = (T::lit(f64::from(q.unsigned_abs())) - half) * width;
    let offset = truncated_exponential_mean(width, scale);
    let magnitude = lower + offset;
    if q < 0 {
        -magnitude
    } else {
        magnitude
    }
}

/// Mean of `t ∈ [0, w]` under density ∝ `exp(−t / s)`: `s − w / (exp(w/s) − 1)`.
fn truncated_exponential_mean<T: Real>(w: T, s: T) -> T {
    let x = w / s;
    if x < T::lit(1e-2) {
        // series of s − w/expm1(w/s) in x; the closed form cancels catastrophically here
        let x2 = x * x;
        w * (T::lit(0.5) - x / T::lit(12.0) + x * x2 / T::lit(720.0) - x2 * x2 * x / T::lit(30240.0))
    } else {
        let denom = x.exp_m1();
        if denom.is_infinite() {
            s
        } else {
            s - w / denom
        }
    }
}

/// MMSE reconstruction on the block-aligned plane, unclamped.
pub fn mmse_decode_plane<T: Real>(qimg: &QuantizedImage, params: &LaplacianParams<T>) -> Plane<T> {
    reconstruct_plane(qimg, |i, q, step| mmse_coefficient(q, step, params.priors[i]))
}

/// MMSE soft decode: per-coefficient bin centroids, inverse DCT, level shift, clamp, crop.
pub fn mmse_decode<T: Real>(qimg: &QuantizedImage, params: &LaplacianParams<T>) -> GrayImage {
    mmse_decode_plane(qimg, params).to_gray_cropped(qimg.width(), qimg.height())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jpeg::{hard_decode, quantize, QuantTable};
    use crate::synth::{structured_image, Scene};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lap(scale: f64) -> CoefficientPrior<f64> {
        CoefficientPrior::Laplacian { scale }
    }

    /// Adaptive Simpson; independent of the closed form above.
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                    + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
            }
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 50)
    }

    fn quadrature_centroid(q: i32, step: f64, scale: f64) -> f64 {
        let (lo, hi) = ((f64::from(q) - 0.5) * step, (f64::from(q) + 0.5) * step);
        let nearest = if lo <= 0.0 && hi >= 0.0 { 0.0 } else { lo.abs().min(hi.abs()) };
        let density = move |y: f64| (-(y.abs() - nearest) / scale).exp();
        let mass = simpson(&density, lo, hi, 1e-13 * step);
        let moment = simpson(&|y| y * density(y), lo, hi, 1e-13 * step * step);
        moment / mass
    }

    #[test]
    fn zero_bin_is_zero() {
        for step in [1u16, 7, 100] {
            for scale in [0.1, 3.0, 1e6] {
                assert_eq!(mmse_coefficient(0, step, lap(scale)), 0.0);
            }
        }
    }

    #[test]
    fn shrinks_inside_bin() {
        let v = mmse_coefficient(3, 10, lap(5.0));
        assert!(v > 25.0 && v < 30.0, "{v}");
        let oracle = quadrature_centroid(3, 10.0, 5.0);
        assert!(((v - oracle) / oracle).abs() <= 1e-6, "{v} vs {oracle}");
    }

    #[test]
    fn flat_prior_limit_is_bin_center() {
        let v = mmse_coefficient(3, 10, lap(1e9));
        assert!((v - 30.0).abs() < 1e-6, "{v}");
        assert_eq!(mmse_coefficient(3, 10, CoefficientPrior::<f64>::Uniform), 30.0);
        assert_eq!(mmse_coefficient(-4, 10, CoefficientPrior::<f64>::Uniform), -40.0);
    }

    #[test]
    fn very_sharp_prior_hugs_lower_edge() {
        let v = mmse_coefficient(2, 50, lap(1e-4));
        assert!((75.0..75.001).contains(&v));
        assert_eq!(mmse_coefficient(-2, 50, lap(1e-4)), -v);
    }

    #[test]
    fn matches_quadrature_on_random_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..300 {
            let q = rng.gen_range(-25..=25);
            let step = rng.gen_range(1..=255u16);
            let scale = 10f64.powf(rng.gen_range(-0.5..2.7));
            let v = mmse_coefficient(q, step, lap(scale));
            let oracle = quadrature_centroid(q, f64::from(step), scale);
            if q == 0 {
                assert!(v.abs() <= 1e-6 * f64::from(step));
            } else {
                assert!(((v - oracle) / oracle).abs() <= 1e-6, "q={q} Q={step} b={scale}: {v} vs {oracle}");
            }
        }
    }

    #[test]
    fn single_precision_agrees() {
        let a = mmse_coefficient(5, 12, CoefficientPrior::Laplacian { scale: 7.0f32 });
        let b = mmse_coefficient(5, 12, lap(7.0));
        assert!((f64::from(a) - b).abs() < 1e-3);
    }

    #[test]
    fn monte_carlo_scale_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for scale in [0.7, 4.0, 25.0] {
            let samples: Vec<f64> = (0..10_000)
                .map(|_| {
                    let u: f64 = rng.gen_range(-0.5..0.5);
                    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
                })
                .collect();
            let fitted = fit_scale(&samples);
            assert!(((fitted - scale) / scale).abs() < 0.05, "{fitted} vs {scale}");
        }
    }

    #[test]
    fn degenerate_samples_hit_floor() {
        assert_eq!(fit_scale(&[0.0f64; 100]), SCALE_FLOOR);
        let qimg = QuantizedImage::new(32, 32, vec![[0; 64]; 16], QuantTable::ijg(50).unwrap()).unwrap();
        let params = fit_laplacian::<f64>(&qimg).unwrap();
        assert_eq!(params.priors[0], CoefficientPrior::Uniform);
        assert!((1..64).all(|i| params.scale(i) == Some(SCALE_FLOOR)));
    }

    #[test]
    fn too_few_blocks() {
        let qimg = quantize(&GrayImage::filled(24, 24, 50), 50).unwrap();
        assert_eq!(fit_laplacian::<f64>(&qimg), Err(PriorError::TooFewBlocks(9)));
    }

    #[test]
    fn higher_frequencies_are_sharper() {
        let img = structured_image(Scene::Shapes, 128, 128, 4);
        let params = fit_laplacian::<f64>(&quantize(&img, 75).unwrap()).unwrap();
        let mean_rate = |lo: usize, hi: usize| {
            let rates: Vec<f64> = (1..64)
                .filter(|i| (lo..=hi).contains(&(i / 8 + i % 8)))
                .map(|i| params.priors[i].rate().unwrap())
                .collect();
            rates.iter().sum::<f64>() / rates.len() as f64
        };
        assert!(mean_rate(1, 2) < mean_rate(5, 7));
        assert!(mean_rate(5, 7) < mean_rate(10, 14));
    }

    #[test]
    fn uniform_prior_reproduces_hard_decode() {
        let img = structured_image(Scene::Rings, 40, 24, 1);
        let q = quantize(&img, 20).unwrap();
        assert_eq!(mmse_decode(&q, &LaplacianParams::<f64>::uniform()), hard_decode(&q));
    }

    #[test]
    fn zero_ac_image_is_flat_per_block() {
        let mut blocks = vec![[0; 64]; 16];
        for (k, b) in blocks.iter_mut().enumerate() {
            b[0] = k as i32 - 8;
        }
        let q = QuantizedImage::new(32, 32, blocks, QuantTable::ijg(50).unwrap()).unwrap();
        let params = fit_laplacian::<f64>(&q).unwrap();
        assert_eq!(mmse_decode(&q, &params), hard_decode(&q));
    }

    proptest! {
        #[test]
        fn estimate_stays_in_bin_and_shrinks(q in -60i32..60, step in 1u16..=255, log_scale in -4.0f64..6.0) {
            let scale = 10f64.powf(log_scale);
            let v = mmse_coefficient(q, step, lap(scale));
            let (lo, hi) = ((f64::from(q) - 0.5) * f64::from(step), (f64::from(q) + 0.5) * f64::from(step));
            prop_assert!(v >= lo && v < hi, "{} not in [{}, {})", v, lo, hi);
            prop_assert!(v.abs() <= (f64::from(q) * f64::from(step)).abs());
            prop_assert_eq!(mmse_coefficient(-q, step, lap(scale)), -v);
        }
    }
}
