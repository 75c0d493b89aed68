use super::huffman::{extend, BitReader, HuffmanDecoder, HuffmanSpec};
use super::tables::ZIGZAG;
use super::{JpegError, QBlock, QuantTable, QuantizedImage, MAX_QINDEX};

struct Frame {
    width: usize,
    height: usize,
    component_id: u8,
    qtable_id: usize,
}

fn malformed(msg: impl Into<String>) -> JpegError {
    JpegError::MalformedMarker(msg.into())
}

fn unsupported(msg: impl Into<String>) -> JpegError {
    JpegError::UnsupportedFeature(msg.into())
}

fn truncated(msg: impl Into<String>) -> JpegError {
    JpegError::TruncatedStream(msg.into())
}

/// Decodes a baseline, Huffman-coded, single-component JPEG down to its q-indices.
/// No inverse DCT is performed.
pub fn parse_jpeg(bytes: &[u8]) -> Result<QuantizedImage, JpegError> {
    if bytes.len() < 2 {
        return Err(truncated("missing SOI"));
    }
    if bytes[0] != 0xFF || bytes[1] != 0xD8 {
        return Err(malformed("stream does not start with SOI"));
    }
    let mut pos = 2;
    let mut qtables: [Option<[u16; 64]>; 4] = [None; 4];
    let mut dc_tables: [Option<HuffmanSpec>; 4] = Default::default();
    let mut ac_tables: [Option<HuffmanSpec>; 4] = Default::default();
    let mut frame: Option<Frame> = None;
    let mut blocks: Option<Vec<QBlock>> = None;

    loop {
        // markers may be preceded by any number of 0xFF fill bytes
        if pos >= bytes.len() {
            return Err(truncated("missing EOI"));
        }
        if bytes[pos] != 0xFF {
            return Err(malformed(format!("expected marker at offset {pos}")));
        }
        while pos < bytes.len() && bytes[pos] == 0xFF {
            pos += 1;
        }
        let marker = *bytes.get(pos).ok_or_else(|| truncated("missing marker code"))?;
        pos += 1;

        match marker {
            0xD9 => break,
            0xD8 => return Err(malformed("repeated SOI")),
            0x00 | 0x01 | 0xD0..=0xD7 => {
                return Err(malformed(format!("marker 0x{marker:02X} outside entropy data")))
            }
            _ => {}
        }

        let len_bytes = bytes.get(pos..pos + 2).ok_or_else(|| truncated("segment length"))?;
        let len = usize::from(u16::from_be_bytes([len_bytes[0], len_bytes[1]]));
        if len < 2 {
            return Err(malformed(format!("segment 0x{marker:02X} has length {len}")));
        }
        let payload = bytes
            .get(pos + 2..pos + len)
            .ok_or_else(|| truncated(format!("segment 0x{marker:02X} overruns the stream")))?;
        pos += len;

        match marker {
            0xE0..=0xEF | 0xFE => {}
            0xDB => parse_dqt(payload, &mut qtables)?,
            0xC4 => parse_dht(payload, &mut dc_tables, &mut ac_tables)?,
            0xDD => {
                if payload.len() != 2 {
                    return Err(malformed("DRI length"));
                }
                if payload != [0, 0] {
                    return Err(unsupported("restart intervals"));
                }
            }
            0xC0 => {
                if frame.is_some() {
                    return Err(malformed("second SOF"));
                }
                frame = Some(parse_sof(payload)?);
            }
            0xC2 | 0xC6 | 0xCA | 0xCE => return Err(unsupported("progressive DCT")),
            0xC9..=0xCF => return Err(unsupported("arithmetic coding")),
            0xC1 => return Err(unsupported("extended sequential DCT")),
            0xC3 | 0xC5 | 0xC7 | 0xC8 => {
                return Err(unsupported(format!("SOF 0x{marker:02X} (lossless/hierarchical)")))
            }
            0xDC => return Err(unsupported("DNL marker")),
            0xDA => {
                let frame = frame.as_ref().ok_or_else(|| malformed("SOS before SOF"))?;
                if blocks.is_some() {
                    return Err(malformed("more than one scan"));
                }
                let (dc_id, ac_id) = parse_sos(payload, frame)?;
                let dc = dc_tables[dc_id]
                    .as_ref()
                    .ok_or_else(|| malformed(format!("DC table {dc_id} not defined")))?;
                let ac = ac_tables[ac_id]
                    .as_ref()
                    .ok_or_else(|| malformed(format!("AC table {ac_id} not defined")))?;
                let (decoded, used) = decode_scan(&bytes[pos..], frame, dc, ac)?;
                blocks = Some(decoded);
                pos += used;
                // skip padding up to the next marker
                while pos < bytes.len() && bytes[pos] != 0xFF {
                    pos += 1;
                }
            }
            _ => return Err(malformed(format!("unexpected marker 0x{marker:02X}"))),
        }
    }

    let frame = frame.ok_or_else(|| malformed("EOI without SOF"))?;
    let blocks = blocks.ok_or_else(|| malformed("EOI without scan"))?;
    let table = qtables[frame.qtable_id]
        .ok_or_else(|| malformed(format!("quantization table {} not defined", frame.qtable_id)))?;
    let qtable = QuantTable::from_zigzag(table, None)?;
    QuantizedImage::new(frame.width, frame.height, blocks, qtable)
        .map_err(|e| malformed(e.to_string()))
}

fn parse_dqt(mut payload: &[u8], qtables: &mut [Option<[u16; 64]>; 4]) -> Result<(), JpegError> {
    if payload.is_empty() {
        return Err(malformed("empty DQT"));
    }
    while !payload.is_empty() {
        let (precision, id) = (payload[0] >> 4, usize::from(payload[0] & 0x0F));
        if precision != 0 {
            return Err(unsupported("16-bit quantization tables"));
        }
        if id > 3 {
            return Err(malformed(format!("quantization table id {id}")));
        }
        let entries = payload.get(1..65).ok_or_else(|| malformed("short DQT"))?;
        let mut table = [0u16; 64];
        for (t, &e) in table.iter_mut().zip(entries) {
            if e == 0 {
                return Err(malformed("zero quantization step"));
            }
            *t = u16::from(e);
        }
        qtables[id] = Some(table);
        payload = &payload[65..];
    }
    Ok(())
}

fn parse_dht(
    mut payload: &[u8],
    dc: &mut [Option<HuffmanSpec>; 4],
    ac: &mut [Option<HuffmanSpec>; 4],
) -> Result<(), JpegError> {
    if payload.is_empty() {
        return Err(malformed("empty DHT"));
    }
    while !payload.is_empty() {
        let (class, id) = (payload[0] >> 4, usize::from(payload[0] & 0x0F));
        if class > 1 || id > 3 {
            return Err(malformed(format!("huffman table class {class} id {id}")));
        }
        let counts = payload.get(1..17).ok_or_else(|| malformed("short DHT"))?;
        let bits: [u8; 16] = counts.try_into().expect("16 bytes");
        let total: usize = bits.iter().map(|&b| usize::from(b)).sum();
        let values = payload.get(17..17 + total).ok_or_else(|| malformed("short DHT values"))?;
        let spec = HuffmanSpec::new(bits, values.to_vec())?;
        if class == 0 { &mut dc[id] } else { &mut ac[id] }.replace(spec);
        payload = &payload[17 + total..];
    }
    Ok(())
}

fn parse_sof(payload: &[u8]) -> Result<Frame, JpegError> {
    if payload.len() < 6 {
        return Err(malformed("short SOF"));
    }
    if payload[0] != 8 {
        return Err(unsupported(format!("{}-bit samples", payload[0])));
    }
    let height = usize::from(u16::from_be_bytes([payload[1], payload[2]]));
    let width = usize::from(u16::from_be_bytes([payload[3], payload[4]]));
    let ncomp = payload[5];
    if ncomp != 1 {
        return Err(unsupported(format!("{ncomp} components (only grayscale)")));
    }
    if payload.len() != 9 {
        return Err(malformed("SOF length does not match component count"));
    }
    if height == 0 {
        return Err(unsupported("height defined by DNL"));
    }
    if width == 0 {
        return Err(malformed("zero width"));
    }
    let qtable_id = usize::from(payload[8]);
    if qtable_id > 3 {
        return Err(malformed(format!("quantization table id {qtable_id}")));
    }
    Ok(Frame { width, height, component_id: payload[6], qtable_id })
}

fn parse_sos(payload: &[u8], frame: &Frame) -> Result<(usize, usize), JpegError> {
    if payload.is_empty() {
        return Err(malformed("empty SOS"));
    }
    if payload[0] != 1 {
        return Err(unsupported(format!("scan with {} components", payload[0])));
    }
    if payload.len() != 6 {
        return Err(malformed("SOS length"));
    }
    if payload[1] != frame.component_id {
        return Err(malformed(format!("scan references unknown component {}", payload[1])));
    }
    let (dc, ac) = (usize::from(payload[2] >> 4), usize::from(payload[2] & 0x0F));
    if dc > 3 || ac > 3 {
        return Err(malformed("huffman table selector"));
    }
    if payload[3] != 0 || payload[4] != 63 || payload[5] != 0 {
        return Err(unsupported("spectral selection or successive approximation"));
    }
    Ok((dc, ac))
}

fn decode_scan(
    data: &[u8],
    frame: &Frame,
    dc_spec: &HuffmanSpec,
    ac_spec: &HuffmanSpec,
) -> Result<(Vec<QBlock>, usize), JpegError> {
    let dc = HuffmanDecoder::new(dc_spec);
    let ac = HuffmanDecoder::new(ac_spec);
    let count = frame.width.div_ceil(8) * frame.height.div_ceil(8);
    let mut reader = BitReader::new(data);
    // every block costs at least one bit, so the stream length bounds the allocation
    let mut blocks = Vec::with_capacity(count.min(data.len() * 8 + 1));
    let mut pred = 0i32;
    for _ in 0..count {
        let mut block = [0i32; 64];
        let size = dc.decode(&mut reader)?;
        if size > 11 {
            return Err(JpegError::HuffmanDecodeError(format!("DC category {size}")));
        }
        pred += extend(reader.bits(size)?, size);
        if pred.abs() > MAX_QINDEX {
            return Err(JpegError::HuffmanDecodeError("DC value out of range".into()));
        }
        block[0] = pred;

        let mut k = 1usize;
        while k < 64 {
            let symbol = ac.decode(&mut reader)?;
            let (run, size) = (usize::from(symbol >> 4), symbol & 0x0F);
            if size == 0 {
                if run == 15 {
                    k += 16;
                    continue;
                }
                if run == 0 {
                    break;
                }
                return Err(JpegError::HuffmanDecodeError(format!("AC symbol 0x{symbol:02X}")));
            }
            if size > 10 {
                return Err(JpegError::HuffmanDecodeError(format!("AC category {size}")));
            }
            k += run;
            if k > 63 {
                return Err(JpegError::HuffmanDecodeError("AC run past end of block".into()));
            }
            block[ZIGZAG[k]] = extend(reader.bits(size)?, size);
            k += 1;
        }
        if k > 64 {
            return Err(JpegError::HuffmanDecodeError("zero run past end of block".into()));
        }
        blocks.push(block);
    }
    Ok((blocks, reader.consumed()))
}
