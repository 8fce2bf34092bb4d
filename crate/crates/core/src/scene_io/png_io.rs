//! Minimal 8-bit PNG reading and writing.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use crate::error::{Error, Result};

const SIGNATURE: [u8; 8] = [137, 80, 78, 71, 13, 10, 26, 10];

/// Reads an 8-bit grayscale or 8-bit indexed PNG without palette expansion.
pub(crate) fn read_gray8(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_gray8(&bytes).map_err(|e| match e {
        Error::Decode { msg, .. } => Error::Decode {
            path: path.into(),
            msg,
        },
        Error::UnsupportedImage { msg, .. } => Error::UnsupportedImage {
            path: path.into(),
            msg,
        },
        other => other,
    })
}

pub(crate) fn decode_gray8(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let decode_err = |msg: String| Error::Decode {
        path: "<memory>".into(),
        msg,
    };
    // The decoder rejects zero dimensions with a generic message, so the
    // header is inspected first.
    if bytes.len() >= 24 && bytes[..8] == SIGNATURE && &bytes[12..16] == b"IHDR" {
        let w = u32::from_be_bytes(bytes[16..20].try_into().unwrap());
        let h = u32::from_be_bytes(bytes[20..24].try_into().unwrap());
        if w == 0 || h == 0 {
            return Err(Error::ZeroArea);
        }
    }
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(|e| decode_err(e.to_string()))?;
    let (color, depth) = {
        let info = reader.info();
        (info.color_type, info.bit_depth)
    };
    if !matches!(color, png::ColorType::Grayscale | png::ColorType::Indexed) {
        return Err(Error::UnsupportedImage {
            path: "<memory>".into(),
            msg: format!("color type {color:?}"),
        });
    }
    if depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedImage {
            path: "<memory>".into(),
            msg: format!("bit depth {depth:?}"),
        });
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| decode_err("image too large".into()))?;
    let mut buf = vec![0; size];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| decode_err(e.to_string()))?;
    let (w, h) = (frame.width as usize, frame.height as usize);
    if w == 0 || h == 0 {
        return Err(Error::ZeroArea);
    }
    let mut data = Vec::with_capacity(w * h);
    for row in buf.chunks(frame.line_size).take(h) {
        data.extend_from_slice(&row[..w]);
    }
    Ok((w, h, data))
}

fn encode(width: usize, height: usize, color: png::ColorType, data: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(color);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc
            .write_header()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        writer
            .write_image_data(data)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    }
    Ok(out)
}

pub(crate) fn encode_gray8(width: usize, height: usize, data: &[u8]) -> Result<Vec<u8>> {
    encode(width, height, png::ColorType::Grayscale, data)
}

pub(crate) fn encode_rgb8(width: usize, height: usize, data: &[u8]) -> Result<Vec<u8>> {
    encode(width, height, png::ColorType::Rgb, data)
}

/// Writes through a sibling temp file and renames it into place.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
