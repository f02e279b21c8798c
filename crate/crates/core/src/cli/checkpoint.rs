//! Binary wavefunction checkpoints.
//!
//! Layout, all little-endian: magic `BECW`, version u16, dims 3×u32,
//! spacing 3×f64 (m), norm target f64, then nx·ny·nz complex values as
//! (re, im) f64 pairs in grid order (x fastest).

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use thiserror::Error;

use crate::field::ComplexField;
use crate::grid::Grid;

pub const MAGIC: [u8; 4] = *b"BECW";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 3 * 4 + 3 * 8 + 8;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a wavefunction checkpoint (magic {0:?})")]
    BadMagic([u8; 4]),

    #[error("unsupported checkpoint version {found} (this build reads {VERSION})")]
    UnsupportedVersion { found: u16 },

    #[error("checkpoint truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("checkpoint has {0} bytes beyond the declared payload")]
    TrailingBytes(usize),

    #[error("invalid checkpoint header: {0}")]
    InvalidHeader(String),

    #[error("checkpoint I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// Serializes `field` into the checkpoint byte layout.
pub fn encode(field: &ComplexField) -> Vec<u8> {
    let grid = &field.grid;
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * grid.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for n in grid.dims {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for d in grid.spacing {
        out.extend_from_slice(&d.to_le_bytes());
    }
    out.extend_from_slice(&field.norm_target.to_le_bytes());
    for v in &field.values {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

fn f64_at(bytes: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(bytes[at..at + 8].try_into().expect("8-byte slice"))
}

/// Parses the checkpoint byte layout.
pub fn decode(bytes: &[u8]) -> Result<ComplexField, CheckpointError> {
    if bytes.len() < 6 {
        return Err(CheckpointError::Truncated {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[0..4].try_into().expect("4-byte slice");
    if magic != MAGIC {
        return Err(CheckpointError::BadMagic(magic));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(CheckpointError::UnsupportedVersion { found: version });
    }
    if bytes.len() < HEADER_LEN {
        return Err(CheckpointError::Truncated {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let mut dims = [0usize; 3];
    for (a, d) in dims.iter_mut().enumerate() {
        let at = 6 + 4 * a;
        *d = u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4-byte slice")) as usize;
    }
    let spacing = [f64_at(bytes, 18), f64_at(bytes, 26), f64_at(bytes, 34)];
    let norm_target = f64_at(bytes, 42);
    let grid = Grid::new(dims, spacing).map_err(|e| CheckpointError::InvalidHeader(e.to_string()))?;
    let expected = grid
        .len()
        .checked_mul(16)
        .and_then(|p| p.checked_add(HEADER_LEN))
        .ok_or_else(|| CheckpointError::InvalidHeader(format!("dims {dims:?} overflow")))?;
    if bytes.len() < expected {
        return Err(CheckpointError::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(CheckpointError::TrailingBytes(bytes.len() - expected));
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(16)
        .map(|c| Complex64::new(f64_at(c, 0), f64_at(c, 8)))
        .collect();
    Ok(ComplexField::new(grid, values, norm_target))
}

pub fn write_checkpoint(path: &Path, field: &ComplexField) -> Result<(), CheckpointError> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(&encode(field))?;
    file.flush()?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<ComplexField, CheckpointError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes)
}
