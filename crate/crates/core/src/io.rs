//! The .mvi container: a minimal binary format for manifold-valued images.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! offset 0   magic "MVI1" (4 bytes)
//! offset 4   tag length L (u8)
//! offset 5   manifold tag, L ASCII bytes (see [`Manifold::tag`])
//! offset 5+L rows (u32), cols (u32)
//! offset 13+L payload: rows * cols * ambient_len f64 values, row-major
//! ```
//!
//! Encoding and decoding round-trip bit-exactly; decode errors report the
//! byte offset of the offending field.

use crate::error::{Error, Result};
use crate::image::ManifoldImage;
use crate::manifold::Manifold;
use std::path::Path;

const MAGIC: &[u8; 4] = b"MVI1";

/// Serializes an image to the .mvi byte layout.
pub fn encode_mvi(image: &ManifoldImage) -> Vec<u8> {
    let tag = image.manifold.tag();
    let mut out = Vec::with_capacity(13 + tag.len() + image.data.len() * 8);
    out.extend_from_slice(MAGIC);
    out.push(tag.len() as u8);
    out.extend_from_slice(tag.as_bytes());
    out.extend_from_slice(&(image.rows as u32).to_le_bytes());
    out.extend_from_slice(&(image.cols as u32).to_le_bytes());
    for v in &image.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn take<'a>(bytes: &'a [u8], pos: &mut usize, n: usize, what: &str) -> Result<&'a [u8]> {
    if bytes.len() < *pos + n {
        return Err(Error::Parse {
            offset: *pos as u64,
            detail: format!("truncated while reading {what}: need {n} bytes, have {}", bytes.len() - *pos),
        });
    }
    let slice = &bytes[*pos..*pos + n];
    *pos += n;
    Ok(slice)
}

/// Parses an image from .mvi bytes, validating every pixel.
pub fn decode_mvi(bytes: &[u8]) -> Result<ManifoldImage> {
    let mut pos = 0;
    let magic = take(bytes, &mut pos, 4, "magic")?;
    if magic != MAGIC {
        return Err(Error::Parse { offset: 0, detail: format!("bad magic {magic:?}, expected \"MVI1\"") });
    }
    let tag_len = take(bytes, &mut pos, 1, "tag length")?[0] as usize;
    let tag_offset = pos as u64;
    let tag_bytes = take(bytes, &mut pos, tag_len, "manifold tag")?;
    let tag = std::str::from_utf8(tag_bytes).map_err(|_| Error::Parse {
        offset: tag_offset,
        detail: "manifold tag is not ASCII".into(),
    })?;
    let manifold = Manifold::from_tag(tag).map_err(|e| Error::Parse {
        offset: tag_offset,
        detail: format!("unusable manifold tag '{tag}': {e}"),
    })?;

    let rows = u32::from_le_bytes(take(bytes, &mut pos, 4, "row count")?.try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(take(bytes, &mut pos, 4, "column count")?.try_into().unwrap()) as usize;

    let byte_count = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(manifold.ambient_len()))
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::Parse {
            offset: pos as u64,
            detail: format!("image dimensions {rows}x{cols} overflow the address space"),
        })?;
    let payload = take(bytes, &mut pos, byte_count, "pixel payload")?;
    if pos != bytes.len() {
        return Err(Error::Parse {
            offset: pos as u64,
            detail: format!("{} trailing bytes after the payload", bytes.len() - pos),
        });
    }
    let mut data = Vec::with_capacity(byte_count / 8);
    for chunk in payload.chunks_exact(8) {
        data.push(f64::from_le_bytes(chunk.try_into().unwrap()));
    }
    ManifoldImage::new(manifold, rows, cols, data)
}

/// Writes an image to a .mvi file.
pub fn write_mvi(image: &ManifoldImage, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_mvi(image))?;
    Ok(())
}

/// Reads and validates a .mvi file.
pub fn read_mvi(path: impl AsRef<Path>) -> Result<ManifoldImage> {
    decode_mvi(&std::fs::read(path)?)
}
