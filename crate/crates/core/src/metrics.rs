//! PSNR and SSIM on 8-bit rasters.

use serde::{Deserialize, Serialize};

use crate::raster::GrayImage;

const PEAK: f64 = 255.0;
const SSIM_WINDOW: usize = 8;

pub fn mse(reference: &GrayImage, test: &GrayImage) -> f64 {
    assert_same_shape(reference, test);
    let sum: f64 = reference
        .pixels()
        .iter()
        .zip(test.pixels())
        .map(|(&a, &b)| {
            let d = f64::from(a) - f64::from(b);
            d * d
        })
        .sum();
    sum / reference.pixels().len() as f64
}

/// Peak signal-to-noise ratio in dB with peak 255; `f64::INFINITY` for identical images.
pub fn psnr(reference: &GrayImage, test: &GrayImage) -> f64 {
    let m = mse(reference, test);
    if m == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (PEAK * PEAK / m).log10()
    }
}

/// Mean SSIM over all 8×8 windows (uniform weights, stride 1).
///
/// Images smaller than the window in either direction are scored with a single
/// window covering the whole image.
pub fn ssim(reference: &GrayImage, test: &GrayImage) -> f64 {
    assert_same_shape(reference, test);
    let (w, h) = (reference.width(), reference.height());
    let (ww, wh) = (SSIM_WINDOW.min(w), SSIM_WINDOW.min(h));
    let c1 = (0.01 * PEAK).powi(2);
    let c2 = (0.03 * PEAK).powi(2);
    let n = (ww * wh) as f64;
    let mut total = 0.0;
    let mut windows = 0usize;
    for y0 in 0..=h - wh {
        for x0 in 0..=w - ww {
            let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for y in y0..y0 + wh {
                for x in x0..x0 + ww {
                    let a = f64::from(reference.get(x, y));
                    let b = f64::from(test.get(x, y));
                    sx += a;
                    sy += b;
                    sxx += a * a;
                    syy += b * b;
                    sxy += a * b;
                }
            }
            let (mx, my) = (sx / n, sy / n);
            let vx = (sxx / n - mx * mx).max(0.0);
            let vy = (syy / n - my * my).max(0.0);
            let cov = sxy / n - mx * my;
            total += ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2));
            windows += 1;
        }
    }
    total / windows as f64
}

fn assert_same_shape(a: &GrayImage, b: &GrayImage) {
    assert!(
        a.width() == b.width() && a.height() == b.height(),
        "image shapes differ: {}x{} vs {}x{}",
        a.width(),
        a.height(),
        b.width(),
        b.height()
    );
}

/// One evaluated (image, method, quality factor) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub method: String,
    pub qf: u8,
    pub psnr: f64,
    pub ssim: f64,
    pub runtime_ms: f64,
}

impl QualityReport {
    pub fn measure(
        method: impl Into<String>,
        qf: u8,
        reference: &GrayImage,
        test: &GrayImage,
        runtime_ms: f64,
    ) -> Self {
        Self {
            method: method.into(),
            qf,
            psnr: psnr(reference, test),
            ssim: ssim(reference, test),
            runtime_ms,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_images() {
        let img = GrayImage::from_fn(16, 16, |x, y| (x * 13 + y * 7) as u8);
        assert_eq!(psnr(&img, &img), f64::INFINITY);
        assert!((ssim(&img, &img) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn black_versus_white_is_zero_db() {
        let a = GrayImage::filled(4, 4, 0);
        let b = GrayImage::filled(4, 4, 255);
        assert!(psnr(&a, &b).abs() < 1e-12);
    }

    #[test]
    fn checkerboard_against_flat() {
        // checker of 0/100 vs flat 50: every pixel errs by 50, MSE = 2500
        let checker = GrayImage::from_fn(8, 8, |x, y| if (x + y) % 2 == 0 { 0 } else { 100 });
        let flat = GrayImage::filled(8, 8, 50);
        let expected = 10.0 * (255.0f64 * 255.0 / 2500.0).log10();
        assert!((psnr(&checker, &flat) - expected).abs() < 1e-12);
        assert!((psnr(&flat, &checker) - expected).abs() < 1e-12);
    }

    #[test]
    fn constant_offset_matches_formula() {
        let a = GrayImage::filled(12, 10, 100);
        let b = GrayImage::filled(12, 10, 150);
        let c1 = (0.01f64 * 255.0).powi(2);
        let expected = (2.0 * 100.0 * 150.0 + c1) / (100.0f64.powi(2) + 150.0f64.powi(2) + c1);
        let got = ssim(&a, &b);
        assert!((got - expected).abs() < 1e-12);
        assert!(got < 1.0);
    }

    #[test]
    fn anticorrelated_patterns_score_negative() {
        let a = GrayImage::from_fn(16, 16, |x, y| if (x + y) % 2 == 0 { 178 } else { 78 });
        let b = GrayImage::from_fn(16, 16, |x, y| if (x + y) % 2 == 0 { 78 } else { 178 });
        let s = ssim(&a, &b);
        assert!(s < -0.9, "ssim {s}");
        assert!((s - ssim(&b, &a)).abs() < 1e-12);
    }

    #[test]
    fn tiny_images_use_one_window() {
        let a = GrayImage::from_fn(3, 5, |x, y| (x * 50 + y * 10) as u8);
        assert!((ssim(&a, &a) - 1.0).abs() < 1e-12);
    }
}
