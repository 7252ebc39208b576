//! Readers and writers for every file that crosses a stage boundary.
//!
//! Binary containers (`.flo`, PGM/PPM) are bit-exact: decoding an encoded
//! value reproduces it exactly. Text containers (TRJ1, SPL1, GRF1) print
//! floats with their shortest round-trip representation, so they are exact
//! as well.

mod flo;
mod labelmap;
mod pnm;
mod text;

use thiserror::Error;

pub use flo::{read_flo, read_flo_reporting, write_flo, FLO_MAGIC};
pub use labelmap::{read_labelmap, write_labelmap, LabelMap, Palette, VOID};
pub use pnm::{read_pnm, read_pnm_reporting, write_pnm, Image};
pub use text::{
    read_grf, read_spl, read_trj, write_grf, write_spl, write_trj, SparseLabels, TrajectoryFile,
};

/// Largest accepted width or height of any raster.
pub const MAX_DIM: i64 = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("bad magic: expected {expected}, found {found}")]
    BadMagic { expected: String, found: String },
    #[error("truncated payload: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("bad dimensions {width}x{height}")]
    BadDims { width: i64, height: i64 },
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("unsupported maxval {0} (only 255 is supported)")]
    UnsupportedMaxval(u32),
    #[error("label {0} does not fit in 8 bits")]
    LabelOverflow(u32),
    #[error("palette has no color for label {0}")]
    MissingPaletteEntry(u32),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

pub type Result<T> = std::result::Result<T, FormatError>;

/// Dense 2D displacement field in pixels per frame, row-major `(u, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    data: Vec<[f32; 2]>,
}

impl FlowField {
    pub fn new(width: usize, height: usize, data: Vec<[f32; 2]>) -> Result<Self> {
        check_dims(width as i64, height as i64)?;
        if data.len() != width * height {
            return Err(FormatError::DimensionMismatch(format!(
                "{} flow vectors for a {width}x{height} field",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Field with the same vector at every pixel.
    pub fn constant(width: usize, height: usize, uv: [f32; 2]) -> Result<Self> {
        Self::new(width, height, vec![uv; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f32; 2],
    ) -> Result<Self> {
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

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[[f32; 2]] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f32; 2] {
        self.data[y * self.width + x]
    }
}

pub(crate) fn check_dims(width: i64, height: i64) -> Result<()> {
    if width <= 0 || height <= 0 || width > MAX_DIM || height > MAX_DIM {
        Err(FormatError::BadDims { width, height })
    } else {
        Ok(())
    }
}
