//! 8-bit grayscale rasters, real-valued planes, and PGM (P5) I/O.

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum PgmError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not a binary PGM (P5) file")]
    BadMagic,
    #[error("malformed PGM header: {0}")]
    BadHeader(&'static str),
    #[error("unsupported maxval {0}; only 8-bit PGM is supported")]
    UnsupportedDepth(u32),
    #[error("PGM pixel data truncated")]
    Truncated,
}

/// Row-major 8-bit grayscale image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Self {
        assert_eq!(data.len(), width * height, "raster size mismatch");
        Self { width, height, data }
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    /// Pixel lookup with coordinates clamped to the image (edge replication).
    #[inline]
    pub fn get_clamped(&self, x: usize, y: usize) -> u8 {
        self.get(x.min(self.width - 1), y.min(self.height - 1))
    }

    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> GrayImage {
        assert!(x0 + width <= self.width && y0 + height <= self.height);
        GrayImage::from_fn(width, height, |x, y| self.get(x0 + x, y0 + y))
    }

    pub fn to_plane<T: Real>(&self) -> Plane<T> {
        Plane::from_fn(self.width, self.height, |x, y| T::lit(f64::from(self.get(x, y))))
    }

    pub fn read_pgm<R: Read>(mut reader: R) -> Result<Self, PgmError> {
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes)?;
        Self::decode_pgm(&bytes)
    }

    pub fn decode_pgm(bytes: &[u8]) -> Result<Self, PgmError> {
        if bytes.len() < 2 || &bytes[..2] != b"P5" {
            return Err(PgmError::BadMagic);
        }
        let mut pos = 2;
        let mut fields = [0u32; 3];
        for field in fields.iter_mut() {
            // whitespace and comments between header tokens
            loop {
                match bytes.get(pos) {
                    Some(b) if b.is_ascii_whitespace() => pos += 1,
                    Some(b'#') => {
                        while pos < bytes.len() && bytes[pos] != b'\n' {
                            pos += 1;
                        }
                    }
                    Some(_) => break,
                    None => return Err(PgmError::BadHeader("unexpected end of header")),
                }
            }
            let start = pos;
            while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                pos += 1;
            }
            if start == pos {
                return Err(PgmError::BadHeader("expected a decimal number"));
            }
            let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
            *field = text.parse().map_err(|_| PgmError::BadHeader("number out of range"))?;
        }
        // exactly one whitespace byte separates the header from the raster
        match bytes.get(pos) {
            Some(b) if b.is_ascii_whitespace() => pos += 1,
            _ => return Err(PgmError::BadHeader("missing separator after maxval")),
        }
        let [width, height, maxval] = fields;
        if width == 0 || height == 0 {
            return Err(PgmError::BadHeader("zero dimension"));
        }
        if maxval == 0 || maxval > 255 {
            return Err(PgmError::UnsupportedDepth(maxval));
        }
        let (width, height) = (width as usize, height as usize);
        let len = width.checked_mul(height).ok_or(PgmError::BadHeader("dimensions overflow"))?;
        let raster = bytes.get(pos..pos + len).ok_or(PgmError::Truncated)?;
        let data = if maxval == 255 {
            raster.to_vec()
        } else {
            raster
                .iter()
                .map(|&v| ((u32::from(v.min(maxval as u8)) * 255 + maxval / 2) / maxval) as u8)
                .collect()
        };
        Ok(Self::new(width, height, data))
    }

    pub fn write_pgm<W: Write>(&self, mut writer: W) -> io::Result<()> {
        write!(writer, "P5\n{} {}\n255\n", self.width, self.height)?;
        writer.write_all(&self.data)
    }

    pub fn encode_pgm(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.data.len() + 20);
        self.write_pgm(&mut out).expect("writing to a Vec cannot fail");
        out
    }
}

/// Real-valued, row-major image plane. Intensities use the 0..255 pixel scale.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Real> Plane<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), width * height, "plane size mismatch");
        Self { width, height, data }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::new(width, height, vec![T::zero(); width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: T) {
        self.data[y * self.width + x] = v;
    }

    /// Rounds to the nearest integer and clamps to [0, 255], keeping the top-left
    /// `width`×`height` region.
    pub fn to_gray_cropped(&self, width: usize, height: usize) -> GrayImage {
        assert!(width <= self.width && height <= self.height);
        GrayImage::from_fn(width, height, |x, y| clamp_u8(self.get(x, y)))
    }

    pub fn to_gray(&self) -> GrayImage {
        self.to_gray_cropped(self.width, self.height)
    }
}

#[inline]
pub fn clamp_u8<T: Real>(v: T) -> u8 {
    let r = v.to_f64_lossy().round();
    if r.is_nan() {
        0
    } else {
        r.clamp(0.0, 255.0) as u8
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip() {
        let img = GrayImage::from_fn(5, 3, |x, y| (x * 40 + y) as u8);
        let bytes = img.encode_pgm();
        assert_eq!(GrayImage::decode_pgm(&bytes).unwrap(), img);
    }

    #[test]
    fn pgm_header_comments() {
        let mut bytes = b"P5\n# made by hand\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[7, 9]);
        let img = GrayImage::decode_pgm(&bytes).unwrap();
        assert_eq!(img.pixels(), &[7, 9]);
    }

    #[test]
    fn pgm_errors() {
        assert!(matches!(GrayImage::decode_pgm(b"P6\n1 1\n255\n\0"), Err(PgmError::BadMagic)));
        assert!(matches!(GrayImage::decode_pgm(b"P5\n2 2\n255\n\0"), Err(PgmError::Truncated)));
        assert!(matches!(
            GrayImage::decode_pgm(b"P5\n1 1\n65535\n\0\0"),
            Err(PgmError::UnsupportedDepth(65535))
        ));
    }

    #[test]
    fn clamp_rounds_and_saturates() {
        assert_eq!(clamp_u8(-3.0f64), 0);
        assert_eq!(clamp_u8(254.6f64), 255);
        assert_eq!(clamp_u8(300.0f32), 255);
        assert_eq!(clamp_u8(12.49f64), 12);
    }
}
