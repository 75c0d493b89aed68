use super::huffman::{category, magnitude_bits, BitWriter, HuffmanEncoder, HuffmanSpec};
use super::tables::{AC_LUMA_BITS, AC_LUMA_VALUES, DC_LUMA_BITS, DC_LUMA_VALUES, ZIGZAG};
use super::{JpegError, QBlock, QuantTable, QuantizedImage, MAX_QINDEX};
use crate::dct::Dct8x8;
use crate::raster::GrayImage;

/// Forward DCT and `round(Y / Q)` quantization with the IJG table for `qf`.
/// Edge blocks are completed by replicating the last row and column.
pub fn quantize(img: &GrayImage, qf: u8) -> Result<QuantizedImage, JpegError> {
    let qtable = QuantTable::ijg(qf)?;
    if img.width() == 0 || img.height() == 0 {
        return Err(JpegError::InvalidInput("zero image dimension".into()));
    }
    let dct = Dct8x8::<f64>::new();
    let (bw, bh) = (img.width().div_ceil(8), img.height().div_ceil(8));
    let steps = qtable.natural_array();
    let mut blocks = Vec::with_capacity(bw * bh);
    for by in 0..bh {
        for bx in 0..bw {
            let spatial: [f64; 64] = std::array::from_fn(|i| {
                f64::from(img.get_clamped(bx * 8 + i % 8, by * 8 + i / 8)) - 128.0
            });
            let coeffs = dct.forward(&spatial);
            let block: QBlock = std::array::from_fn(|i| {
                let q = (coeffs[i] / f64::from(steps[i])).round() as i32;
                let limit = if i == 0 { MAX_QINDEX } else { 1023 };
                q.clamp(-limit, limit)
            });
            blocks.push(block);
        }
    }
    QuantizedImage::new(img.width(), img.height(), blocks, qtable)
}

/// Baseline JFIF encoding of a grayscale raster at IJG quality `qf`.
pub fn encode_jpeg(img: &GrayImage, qf: u8) -> Result<Vec<u8>, JpegError> {
    encode_quantized(&quantize(img, qf)?)
}

/// Entropy-codes already quantized blocks with the Annex K luminance tables.
pub fn encode_quantized(qimg: &QuantizedImage) -> Result<Vec<u8>, JpegError> {
    let (w, h) = (qimg.width(), qimg.height());
    if w > 0xFFFF || h > 0xFFFF {
        return Err(JpegError::InvalidInput(format!("{w}x{h} exceeds 65535 pixels per side")));
    }
    let dc_spec = HuffmanSpec::new(DC_LUMA_BITS, DC_LUMA_VALUES.to_vec())?;
    let ac_spec = HuffmanSpec::new(AC_LUMA_BITS, AC_LUMA_VALUES.to_vec())?;

    let mut out = Vec::new();
    out.extend_from_slice(&[0xFF, 0xD8]);
    // APP0 / JFIF 1.01, no thumbnail
    segment(&mut out, 0xE0, &[b'J', b'F', b'I', b'F', 0, 1, 1, 0, 0, 1, 0, 1, 0, 0]);

    let mut dqt = vec![0x00];
    dqt.extend(qimg.qtable().zigzag().iter().map(|&q| q as u8));
    segment(&mut out, 0xDB, &dqt);

    let mut sof = vec![8];
    sof.extend_from_slice(&(h as u16).to_be_bytes());
    sof.extend_from_slice(&(w as u16).to_be_bytes());
    sof.extend_from_slice(&[1, 1, 0x11, 0]);
    segment(&mut out, 0xC0, &sof);

    for (class, spec) in [(0x00u8, &dc_spec), (0x10u8, &ac_spec)] {
        let mut dht = vec![class];
        dht.extend_from_slice(&spec.bits);
        dht.extend_from_slice(&spec.values);
        segment(&mut out, 0xC4, &dht);
    }

    segment(&mut out, 0xDA, &[1, 1, 0x00, 0, 63, 0]);
    out.extend(entropy_code(qimg, &dc_spec, &ac_spec));
    out.extend_from_slice(&[0xFF, 0xD9]);
    Ok(out)
}

fn segment(out: &mut Vec<u8>, marker: u8, payload: &[u8]) {
    out.extend_from_slice(&[0xFF, marker]);
    out.extend_from_slice(&((payload.len() + 2) as u16).to_be_bytes());
    out.extend_from_slice(payload);
}

fn entropy_code(qimg: &QuantizedImage, dc_spec: &HuffmanSpec, ac_spec: &HuffmanSpec) -> Vec<u8> {
    let dc = HuffmanEncoder::new(dc_spec);
    let ac = HuffmanEncoder::new(ac_spec);
    let mut w = BitWriter::default();
    let mut pred = 0i32;
    for block in qimg.blocks() {
        let diff = block[0] - pred;
        pred = block[0];
        let size = category(diff);
        dc.emit(&mut w, size);
        w.put(magnitude_bits(diff, size), size);

        let mut run = 0u8;
        for &idx in &ZIGZAG[1..] {
            let v = block[idx];
            if v == 0 {
                run += 1;
                continue;
            }
            while run >= 16 {
                ac.emit(&mut w, 0xF0);
                run -= 16;
            }
            let size = category(v);
            ac.emit(&mut w, (run << 4) | size);
            w.put(magnitude_bits(v, size), size);
            run = 0;
        }
        if run > 0 {
            ac.emit(&mut w, 0x00);
        }
    }
    w.finish()
}
