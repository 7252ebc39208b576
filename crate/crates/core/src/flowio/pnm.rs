//! Binary PGM (`P5`) and PPM (`P6`) rasters with 8-bit samples.

use super::{check_dims, FormatError, Result};

/// Row-major 8-bit raster with 1 (gray) or 3 (RGB) interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width as i64, height as i64)?;
        if channels != 1 && channels != 3 {
            return Err(FormatError::BadHeader(format!(
                "{channels} channels (expected 1 or 3)"
            )));
        }
        if data.len() != width * height * channels {
            return Err(FormatError::DimensionMismatch(format!(
                "{} samples for {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self> {
        Self::new(
            width,
            height,
            channels,
            vec![value; width * height * channels],
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    /// Samples of pixel `(x, y)`.
    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [u8] {
        let i = (y * self.width + x) * self.channels;
        &mut self.data[i..i + self.channels]
    }
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let c = self.bytes[self.pos];
            if c == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<&'a [u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            if self.bytes[self.pos] == b'#' {
                break;
            }
            self.pos += 1;
        }
        if start == self.pos {
            return Err(FormatError::BadHeader("unexpected end of header".into()));
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<i64> {
        let tok = self.token()?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<i64>().ok())
            .ok_or_else(|| {
                FormatError::BadHeader(format!(
                    "{what}: not an integer: {:?}",
                    String::from_utf8_lossy(tok)
                ))
            })
    }
}

pub fn read_pnm(bytes: &[u8]) -> Result<Image> {
    let (img, trailing) = read_pnm_reporting(bytes)?;
    if trailing > 0 {
        log::warn!("ignoring {trailing} trailing bytes after PNM payload");
    }
    Ok(img)
}

/// Decodes a P5/P6 raster and returns the number of ignored trailing bytes.
pub fn read_pnm_reporting(bytes: &[u8]) -> Result<(Image, usize)> {
    let mut r = HeaderReader { bytes, pos: 0 };
    let channels = match r.token()? {
        b"P5" => 1,
        b"P6" => 3,
        other => {
            return Err(FormatError::BadHeader(format!(
                "unsupported format tag {:?}",
                String::from_utf8_lossy(other)
            )))
        }
    };
    let width = r.number("width")?;
    let height = r.number("height")?;
    let maxval = r.number("maxval")?;
    check_dims(width, height)?;
    if maxval != 255 {
        return Err(FormatError::UnsupportedMaxval(
            maxval.clamp(0, u32::MAX as i64) as u32,
        ));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(r.pos) {
        Some(c) if c.is_ascii_whitespace() => r.pos += 1,
        _ => return Err(FormatError::BadHeader("missing raster separator".into())),
    }
    let (w, h) = (width as usize, height as usize);
    let len = w * h * channels;
    let available = bytes.len() - r.pos;
    if available < len {
        return Err(FormatError::Truncated {
            needed: r.pos + len,
            available: bytes.len(),
        });
    }
    let data = bytes[r.pos..r.pos + len].to_vec();
    Ok((Image::new(w, h, channels, data)?, available - len))
}

pub fn write_pnm(img: &Image) -> Vec<u8> {
    let tag = if img.channels() == 1 { "P5" } else { "P6" };
    let mut out = format!("{tag}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}
