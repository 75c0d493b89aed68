//! Canonical Huffman tables and the entropy-layer bit I/O.

use super::JpegError;

/// Canonical Huffman table as transmitted in a DHT segment.
#[derive(Clone, Debug)]
pub(crate) struct HuffmanSpec {
    pub bits: [u8; 16],
    pub values: Vec<u8>,
}

impl HuffmanSpec {
    pub fn new(bits: [u8; 16], values: Vec<u8>) -> Result<Self, JpegError> {
        let total: usize = bits.iter().map(|&b| b as usize).sum();
        if total != values.len() || total > 256 {
            return Err(JpegError::MalformedMarker(format!(
                "huffman table declares {total} codes but carries {}",
                values.len()
            )));
        }
        // the canonical code space must not overflow at any length
        let mut code: u32 = 0;
        for (len, &count) in bits.iter().enumerate() {
            code += u32::from(count);
            if code > 1 << (len + 1) {
                return Err(JpegError::MalformedMarker("huffman code lengths overflow".into()));
            }
            code <<= 1;
        }
        Ok(Self { bits, values })
    }

    /// (code, length) per symbol, in table order.
    fn codes(&self) -> Vec<(u16, u8)> {
        let mut out = Vec::with_capacity(self.values.len());
        let mut code: u16 = 0;
        for (len, &count) in self.bits.iter().enumerate() {
            for _ in 0..count {
                out.push((code, len as u8 + 1));
                code = code.wrapping_add(1);
            }
            code = code.wrapping_shl(1);
        }
        out
    }
}

pub(crate) struct HuffmanEncoder {
    lookup: [(u16, u8); 256],
}

impl HuffmanEncoder {
    pub fn new(spec: &HuffmanSpec) -> Self {
        let mut lookup = [(0u16, 0u8); 256];
        for (&sym, code) in spec.values.iter().zip(spec.codes()) {
            lookup[sym as usize] = code;
        }
        Self { lookup }
    }

    pub fn emit(&self, writer: &mut BitWriter, symbol: u8) {
        let (code, len) = self.lookup[symbol as usize];
        debug_assert!(len > 0, "symbol {symbol:#x} has no code");
        writer.put(u32::from(code), len);
    }
}

pub(crate) struct HuffmanDecoder {
    /// Largest code of each length, or -1 when the length is unused.
    maxcode: [i32; 17],
    /// Offset into `values` for codes of each length.
    valptr: [i32; 17],
    mincode: [i32; 17],
    values: Vec<u8>,
}

impl HuffmanDecoder {
    pub fn new(spec: &HuffmanSpec) -> Self {
        let mut maxcode = [-1i32; 17];
        let mut valptr = [0i32; 17];
        let mut mincode = [0i32; 17];
        let mut code = 0i32;
        let mut k = 0i32;
        for len in 1..=16 {
            let count = i32::from(spec.bits[len - 1]);
            if count > 0 {
                valptr[len] = k;
                mincode[len] = code;
                code += count;
                k += count;
                maxcode[len] = code - 1;
            }
            code <<= 1;
        }
        Self { maxcode, valptr, mincode, values: spec.values.clone() }
    }

    pub fn decode(&self, reader: &mut BitReader<'_>) -> Result<u8, JpegError> {
        let mut code = 0i32;
        for len in 1..=16 {
            code = (code << 1) | reader.bit()? as i32;
            if code <= self.maxcode[len] {
                let idx = self.valptr[len] + code - self.mincode[len];
                return self
                    .values
                    .get(idx as usize)
                    .copied()
                    .ok_or_else(|| JpegError::HuffmanDecodeError("code index out of range".into()));
            }
        }
        Err(JpegError::HuffmanDecodeError("no code matches 16 input bits".into()))
    }
}

/// MSB-first bit writer with 0xFF byte stuffing.
#[derive(Default)]
pub(crate) struct BitWriter {
    out: Vec<u8>,
    acc: u32,
    nbits: u8,
}

impl BitWriter {
    pub fn put(&mut self, value: u32, len: u8) {
        debug_assert!(len <= 24);
        if len == 0 {
            return;
        }
        self.acc = (self.acc << len) | (value & ((1 << len) - 1));
        self.nbits += len;
        while self.nbits >= 8 {
            let byte = (self.acc >> (self.nbits - 8)) as u8;
            self.push_byte(byte);
            self.nbits -= 8;
            self.acc &= (1 << self.nbits) - 1;
        }
    }

    fn push_byte(&mut self, byte: u8) {
        self.out.push(byte);
        if byte == 0xFF {
            self.out.push(0x00);
        }
    }

    /// Pads the final byte with one bits.
    pub fn finish(mut self) -> Vec<u8> {
        if self.nbits > 0 {
            let pad = 8 - self.nbits;
            self.put((1 << pad) - 1, pad);
        }
        self.out
    }
}

/// MSB-first reader over entropy-coded data; removes stuffed zero bytes and
/// refuses to read across a marker.
pub(crate) struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
    acc: u32,
    nbits: u8,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0, acc: 0, nbits: 0 }
    }

    fn fill(&mut self) -> Result<(), JpegError> {
        let byte = *self
            .data
            .get(self.pos)
            .ok_or_else(|| JpegError::TruncatedStream("entropy-coded data ended early".into()))?;
        if byte == 0xFF {
            match self.data.get(self.pos + 1) {
                Some(0x00) => self.pos += 2,
                Some(_) => {
                    return Err(JpegError::TruncatedStream(
                        "marker reached inside entropy-coded data".into(),
                    ))
                }
                None => {
                    return Err(JpegError::TruncatedStream("entropy-coded data ended early".into()))
                }
            }
        } else {
            self.pos += 1;
        }
        self.acc = (self.acc << 8) | u32::from(byte);
        self.nbits += 8;
        Ok(())
    }

    pub fn bit(&mut self) -> Result<u32, JpegError> {
        if self.nbits == 0 {
            self.fill()?;
        }
        self.nbits -= 1;
        let bit = (self.acc >> self.nbits) & 1;
        self.acc &= (1 << self.nbits) - 1;
        Ok(bit)
    }

    pub fn bits(&mut self, len: u8) -> Result<u32, JpegError> {
        let mut v = 0;
        for _ in 0..len {
            v = (v << 1) | self.bit()?;
        }
        Ok(v)
    }

    /// Bytes consumed so far, including a partially read final byte.
    pub fn consumed(&self) -> usize {
        self.pos
    }
}

/// Magnitude category (number of bits) of a coefficient value.
#[inline]
pub(crate) fn category(v: i32) -> u8 {
    (32 - v.unsigned_abs().leading_zeros()) as u8
}

/// Appended bits for value `v` of category `size`.
#[inline]
pub(crate) fn magnitude_bits(v: i32, size: u8) -> u32 {
    if v >= 0 {
        v as u32
    } else {
        (v + (1 << size) - 1) as u32
    }
}

/// Inverse of [`magnitude_bits`] (the EXTEND procedure).
#[inline]
pub(crate) fn extend(bits: u32, size: u8) -> i32 {
    if size == 0 {
        return 0;
    }
    let v = bits as i32;
    if v < 1 << (size - 1) {
        v - (1 << size) + 1
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jpeg::tables::{AC_LUMA_BITS, AC_LUMA_VALUES};

    #[test]
    fn categories_and_extension() {
        assert_eq!(category(0), 0);
        assert_eq!(category(1), 1);
        assert_eq!(category(-1), 1);
        assert_eq!(category(-1023), 10);
        assert_eq!(category(2047), 11);
        for v in -2047..=2047 {
            let s = category(v);
            assert_eq!(extend(magnitude_bits(v, s), s), v);
        }
    }

    #[test]
    fn symbols_round_trip_through_bitstream() {
        let spec = HuffmanSpec::new(AC_LUMA_BITS, AC_LUMA_VALUES.to_vec()).unwrap();
        let enc = HuffmanEncoder::new(&spec);
        let dec = HuffmanDecoder::new(&spec);
        let mut w = BitWriter::default();
        for &s in AC_LUMA_VALUES.iter() {
            enc.emit(&mut w, s);
        }
        let bytes = w.finish();
        let mut r = BitReader::new(&bytes);
        for &s in AC_LUMA_VALUES.iter() {
            assert_eq!(dec.decode(&mut r).unwrap(), s);
        }
    }

    #[test]
    fn overfull_table_rejected() {
        let mut bits = [0u8; 16];
        bits[0] = 3; // three 1-bit codes cannot exist
        assert!(HuffmanSpec::new(bits, vec![0, 1, 2]).is_err());
        assert!(HuffmanSpec::new(bits, vec![0, 1]).is_err());
    }

    #[test]
    fn reader_stops_at_marker() {
        let mut r = BitReader::new(&[0xFF, 0xD9]);
        assert!(matches!(r.bit(), Err(JpegError::TruncatedStream(_))));
        let mut r = BitReader::new(&[0xFF, 0x00]);
        assert_eq!(r.bits(8).unwrap(), 0xFF);
        assert_eq!(r.consumed(), 2);
    }
}
