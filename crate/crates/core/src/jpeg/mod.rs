//! Baseline sequential grayscale JPEG, exposed at the level of quantized DCT
//! coefficients.
//!
//! [`parse_jpeg`] stops after entropy decoding: it returns the q-indices of every
//! 8×8 block together with the luminance quantization table, so restoration code
//! can reason about quantization bins instead of pixels.

mod encoder;
mod huffman;
mod parser;
pub mod tables;

use thiserror::Error;

use crate::dct::Dct8x8;
use crate::raster::{GrayImage, Plane};
use crate::scalar::Real;

pub use encoder::{encode_jpeg, encode_quantized, quantize};
pub use parser::parse_jpeg;
use tables::{IJG_LUMA, UNZIGZAG, ZIGZAG};

/// Largest magnitude representable by a baseline q-index.
pub const MAX_QINDEX: i32 = (1 << 11) - 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum JpegError {
    #[error("malformed marker segment: {0}")]
    MalformedMarker(String),
    #[error("unsupported JPEG feature: {0}")]
    UnsupportedFeature(String),
    #[error("truncated stream: {0}")]
    TruncatedStream(String),
    #[error("huffman decode error: {0}")]
    HuffmanDecodeError(String),
    #[error("invalid encoder input: {0}")]
    InvalidInput(String),
}

/// Luminance quantization table (entries stored in zig-zag order, as in DQT).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantTable {
    zigzag: [u16; 64],
    quality_factor: Option<u8>,
}

impl QuantTable {
    /// Builds a table from zig-zag ordered entries; every entry must lie in 1..=255.
    pub fn from_zigzag(zigzag: [u16; 64], quality_factor: Option<u8>) -> Result<Self, JpegError> {
        if let Some(bad) = zigzag.iter().find(|&&q| q == 0 || q > 255) {
            return Err(JpegError::MalformedMarker(format!(
                "quantization entry {bad} outside 1..=255"
            )));
        }
        Ok(Self { zigzag, quality_factor })
    }

    pub fn from_natural(natural: [u16; 64], quality_factor: Option<u8>) -> Result<Self, JpegError> {
        let mut zigzag = [0u16; 64];
        for (k, z) in zigzag.iter_mut().enumerate() {
            *z = natural[ZIGZAG[k]];
        }
        Self::from_zigzag(zigzag, quality_factor)
    }

    /// IJG quality scaling of the standard luminance table.
    pub fn ijg(quality_factor: u8) -> Result<Self, JpegError> {
        if !(1..=100).contains(&quality_factor) {
            return Err(JpegError::InvalidInput(format!(
                "quality factor {quality_factor} outside 1..=100"
            )));
        }
        let qf = u32::from(quality_factor);
        let scale = if qf < 50 { 5000 / qf } else { 200 - 2 * qf };
        let mut natural = [0u16; 64];
        for (dst, &base) in natural.iter_mut().zip(IJG_LUMA.iter()) {
            let v = (u32::from(base) * scale + 50) / 100;
            *dst = v.clamp(1, 255) as u16;
        }
        Self::from_natural(natural, Some(quality_factor))
    }

    pub fn zigzag(&self) -> &[u16; 64] {
        &self.zigzag
    }

    /// Step size of the coefficient at row-major position `i`.
    #[inline]
    pub fn natural(&self, i: usize) -> u16 {
        self.zigzag[UNZIGZAG[i]]
    }

    pub fn natural_array(&self) -> [u16; 64] {
        std::array::from_fn(|i| self.natural(i))
    }

    pub fn quality_factor(&self) -> Option<u8> {
        self.quality_factor
    }
}

/// One 8×8 block of q-indices in row-major order.
pub type QBlock = [i32; 64];

/// Entropy-decoded image: q-indices for every code block plus the quantization table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantizedImage {
    width: usize,
    height: usize,
    blocks: Vec<QBlock>,
    qtable: QuantTable,
}

impl QuantizedImage {
    pub fn new(
        width: usize,
        height: usize,
        blocks: Vec<QBlock>,
        qtable: QuantTable,
    ) -> Result<Self, JpegError> {
        if width == 0 || height == 0 {
            return Err(JpegError::InvalidInput("zero image dimension".into()));
        }
        let expected = width.div_ceil(8) * height.div_ceil(8);
        if blocks.len() != expected {
            return Err(JpegError::InvalidInput(format!(
                "expected {expected} blocks, got {}",
                blocks.len()
            )));
        }
        if blocks.iter().flatten().any(|q| q.abs() > MAX_QINDEX) {
            return Err(JpegError::InvalidInput("q-index outside baseline range".into()));
        }
        Ok(Self { width, height, blocks, qtable })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn blocks_wide(&self) -> usize {
        self.width.div_ceil(8)
    }

    pub fn blocks_high(&self) -> usize {
        self.height.div_ceil(8)
    }

    /// Blocks in raster order (left to right, top to bottom).
    pub fn blocks(&self) -> &[QBlock] {
        &self.blocks
    }

    pub fn block(&self, bx: usize, by: usize) -> &QBlock {
        &self.blocks[by * self.blocks_wide() + bx]
    }

    pub fn qtable(&self) -> &QuantTable {
        &self.qtable
    }

    /// Width of the block-aligned plane the blocks tile.
    pub fn padded_width(&self) -> usize {
        self.blocks_wide() * 8
    }

    pub fn padded_height(&self) -> usize {
        self.blocks_high() * 8
    }
}

/// Reconstructs every block from per-coefficient values chosen by `coefficient`
/// (called with the row-major index, the q-index and the step size), producing
/// the block-aligned plane without clamping.
pub(crate) fn reconstruct_plane<T: Real>(
    qimg: &QuantizedImage,
    mut coefficient: impl FnMut(usize, i32, u16) -> T,
) -> Plane<T> {
    let dct = Dct8x8::<T>::new();
    let (bw, pw) = (qimg.blocks_wide(), qimg.padded_width());
    let mut plane = Plane::zeros(pw, qimg.padded_height());
    let level = T::lit(128.0);
    for (b, block) in qimg.blocks().iter().enumerate() {
        let coeffs: [T; 64] =
            std::array::from_fn(|i| coefficient(i, block[i], qimg.qtable().natural(i)));
        let pixels = dct.inverse(&coeffs);
        let (x0, y0) = ((b % bw) * 8, (b / bw) * 8);
        for r in 0..8 {
            for c in 0..8 {
                plane.set(x0 + c, y0 + r, pixels[r * 8 + c] + level);
            }
        }
    }
    plane
}

/// Bin-center reconstruction on the block-aligned plane, unclamped.
pub fn hard_decode_plane<T: Real>(qimg: &QuantizedImage) -> Plane<T> {
    reconstruct_plane(qimg, |_, q, step| T::lit(f64::from(q) * f64::from(step)))
}

/// Standard decoding: every coefficient at its bin center, inverse DCT, level
/// shift, clamp to [0, 255], crop to the image size.
pub fn hard_decode(qimg: &QuantizedImage) -> GrayImage {
    hard_decode_plane::<f64>(qimg).to_gray_cropped(qimg.width(), qimg.height())
}
