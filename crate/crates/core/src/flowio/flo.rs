//! Middlebury `.flo` container.

use super::{check_dims, FlowField, FormatError, Result};

/// Sentinel float at the start of every `.flo` file ("PIEH" in ASCII).
pub const FLO_MAGIC: f32 = 202021.25;

const HEADER_LEN: usize = 12;

fn le_i32(b: &[u8]) -> i32 {
    i32::from_le_bytes([b[0], b[1], b[2], b[3]])
}

fn le_f32(b: &[u8]) -> f32 {
    f32::from_le_bytes([b[0], b[1], b[2], b[3]])
}

/// Decodes a `.flo` file. Trailing bytes after the payload are ignored
/// (a warning is logged).
pub fn read_flo(bytes: &[u8]) -> Result<FlowField> {
    let (flow, trailing) = read_flo_reporting(bytes)?;
    if trailing > 0 {
        log::warn!("ignoring {trailing} trailing bytes after .flo payload");
    }
    Ok(flow)
}

/// Like [`read_flo`] but also returns the number of ignored trailing bytes.
pub fn read_flo_reporting(bytes: &[u8]) -> Result<(FlowField, usize)> {
    if bytes.len() < 4 {
        return Err(FormatError::Truncated {
            needed: HEADER_LEN,
            available: bytes.len(),
        });
    }
    let magic = le_f32(&bytes[0..4]);
    if magic.to_bits() != FLO_MAGIC.to_bits() {
        return Err(FormatError::BadMagic {
            expected: FLO_MAGIC.to_string(),
            found: magic.to_string(),
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(FormatError::Truncated {
            needed: HEADER_LEN,
            available: bytes.len(),
        });
    }
    let width = le_i32(&bytes[4..8]) as i64;
    let height = le_i32(&bytes[8..12]) as i64;
    check_dims(width, height)?;
    let (w, h) = (width as usize, height as usize);
    let needed = HEADER_LEN + w * h * 8;
    if bytes.len() < needed {
        return Err(FormatError::Truncated {
            needed,
            available: bytes.len(),
        });
    }
    let data = bytes[HEADER_LEN..needed]
        .chunks_exact(8)
        .map(|c| [le_f32(&c[0..4]), le_f32(&c[4..8])])
        .collect();
    Ok((FlowField::new(w, h, data)?, bytes.len() - needed))
}

pub fn write_flo(flow: &FlowField) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + flow.data().len() * 8);
    out.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    out.extend_from_slice(&(flow.width() as i32).to_le_bytes());
    out.extend_from_slice(&(flow.height() as i32).to_le_bytes());
    for [u, v] in flow.data() {
        out.extend_from_slice(&u.to_le_bytes());
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}
