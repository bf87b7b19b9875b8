//! Binary netpbm codecs: PGM (P5) in and out, PPM (P6) in.

use std::path::Path;

use crate::{Error, GrayImage, Result};

struct Header {
    magic: [u8; 2],
    width: usize,
    height: usize,
    max_value: u16,
    data_start: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 2 || bytes[0] != b'P' || !matches!(bytes[1], b'5' | b'6') {
        return Err(Error::format("netpbm", "expected a P5 or P6 magic number"));
    }
    let mut pos = 2;
    let mut fields = [0u64; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format("netpbm", "truncated header"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format("netpbm", "header number out of range"))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::format("netpbm", "missing whitespace after header"));
    }
    let [w, h, max] = fields;
    if w == 0 || h == 0 {
        return Err(Error::format("netpbm", "zero image dimension"));
    }
    if max == 0 || max > 65535 {
        return Err(Error::format(
            "netpbm",
            format!("max value {} outside 1..=65535", max),
        ));
    }
    Ok(Header {
        magic: [bytes[0], bytes[1]],
        width: usize::try_from(w).map_err(|_| Error::format("netpbm", "width too large"))?,
        height: usize::try_from(h).map_err(|_| Error::format("netpbm", "height too large"))?,
        max_value: max as u16,
        data_start: pos + 1,
    })
}

/// Decodes a P5 or P6 image; colour is converted to luminance.
pub fn decode_pnm(bytes: &[u8]) -> Result<GrayImage> {
    let h = parse_header(bytes)?;
    let channels = if h.magic[1] == b'6' { 3 } else { 1 };
    let sample_bytes = if h.max_value > 255 { 2 } else { 1 };
    let samples = h
        .width
        .checked_mul(h.height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::format("netpbm", "image too large"))?;
    let data = &bytes[h.data_start..];
    if data.len() < samples * sample_bytes {
        return Err(Error::format(
            "netpbm",
            format!(
                "expected {} bytes of pixel data, found {}",
                samples * sample_bytes,
                data.len()
            ),
        ));
    }
    let values: Vec<u16> = if sample_bytes == 1 {
        data[..samples].iter().map(|&b| u16::from(b)).collect()
    } else {
        data[..2 * samples]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    if values.iter().any(|&v| v > h.max_value) {
        return Err(Error::format("netpbm", "sample exceeds max value"));
    }
    if channels == 3 {
        GrayImage::from_rgb(h.width, h.height, &values, h.max_value)
    } else {
        let max = f32::from(h.max_value);
        GrayImage::new(
            h.width,
            h.height,
            values.iter().map(|&v| f32::from(v) / max).collect(),
        )
    }
}

/// Encodes as 8-bit P5, rounding to the nearest level.
pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(
        image
            .pixels()
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    out
}

pub fn read_image(path: &Path) -> Result<GrayImage> {
    let bytes = std::fs::read(path)?;
    decode_pnm(&bytes).map_err(|e| match e {
        Error::Format { kind, reason } => {
            Error::format(kind, format!("{}: {}", path.display(), reason))
        }
        other => other,
    })
}

pub fn write_pgm(image: &GrayImage, path: &Path) -> Result<()> {
    std::fs::write(path, encode_pgm(image))?;
    Ok(())
}
