mod common;

use softjpeg::laplacian::{fit_laplacian, mmse_decode};
use softjpeg::metrics::psnr;
use softjpeg::{hard_decode, quantize};

// camera0 at QF 5: hard 22.556 dB, MMSE 22.710 dB when pinned
const PINNED_CAMERA_QF5_GAIN: f64 = 0.154;

#[test]
fn mmse_gain_on_natural_crop_is_pinned() {
    let img = common::fixture("camera0");
    let q = quantize(&img, 5).unwrap();
    let params = fit_laplacian::<f64>(&q).unwrap();
    let gain = psnr(&img, &mmse_decode(&q, &params)) - psnr(&img, &hard_decode(&q));
    assert!(gain >= 0.0);
    assert!((gain - PINNED_CAMERA_QF5_GAIN).abs() < 0.01, "gain {gain:.4}");
}

#[test]
fn mmse_never_loses_to_hard_decode_on_natural_crops() {
    for name in common::EVAL_IMAGES.iter().chain(&common::TRAIN_IMAGES) {
        let img = common::fixture(name);
        for qf in [5, 10, 20] {
            let q = quantize(&img, qf).unwrap();
            let params = fit_laplacian::<f64>(&q).unwrap();
            let hard = psnr(&img, &hard_decode(&q));
            let soft = psnr(&img, &mmse_decode(&q, &params));
            assert!(soft >= hard, "{name} qf {qf}: mmse {soft:.3} < hard {hard:.3}");
        }
    }
}

#[test]
fn natural_crop_priors_sharpen_with_frequency() {
    let img = common::fixture("astronaut0");
    let params = fit_laplacian::<f64>(&quantize(&img, 90).unwrap()).unwrap();
    let band = |lo: usize, hi: usize| {
        let rates: Vec<f64> = (1..64)
            .filter(|i| (lo..=hi).contains(&(i / 8 + i % 8)))
            .map(|i| params.priors[i].rate().unwrap())
            .collect();
        rates.iter().sum::<f64>() / rates.len() as f64
    };
    assert!(band(1, 2) < band(3, 5));
    assert!(band(3, 5) < band(6, 9));
    assert!(band(6, 9) < band(10, 14));
}
