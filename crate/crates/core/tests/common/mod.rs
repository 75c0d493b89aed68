#![allow(dead_code)]

pub mod qp;

use std::fs::File;
use std::path::PathBuf;

use softjpeg::GrayImage;

pub const EVAL_IMAGES: [&str; 4] = ["astronaut0", "astronaut1", "camera0", "coins0"];
pub const TRAIN_IMAGES: [&str; 3] = ["coffee0", "coffee1", "chelsea0"];

pub fn fixture(name: &str) -> GrayImage {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "data", &format!("{name}.pgm")].iter().collect();
    GrayImage::read_pgm(File::open(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display())))
        .unwrap()
}
