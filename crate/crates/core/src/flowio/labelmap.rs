use std::collections::BTreeMap;

use super::pnm::{read_pnm, write_pnm, Image};
use super::{check_dims, FormatError, Result};

/// Label reserved for unlabeled pixels.
pub const VOID: u32 = 0;

const WHITE: [u8; 3] = [255, 255, 255];

/// Dense per-pixel labels, row-major. Label 0 is void.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        check_dims(width as i64, height as i64)?;
        if labels.len() != width * height {
            return Err(FormatError::DimensionMismatch(format!(
                "{} labels for {width}x{height}",
                labels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn filled(width: usize, height: usize, label: u32) -> Result<Self> {
        Self::new(width, height, vec![label; width * height])
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

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, label: u32) {
        self.labels[y * self.width + x] = label;
    }

    /// Distinct labels present, ascending.
    pub fn present_labels(&self) -> Vec<u32> {
        let mut v = self.labels.clone();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Label to color mapping for overlays. Void always renders white.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Palette {
    colors: BTreeMap<u32, [u8; 3]>,
}

impl Palette {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, label: u32, rgb: [u8; 3]) -> &mut Self {
        self.colors.insert(label, rgb);
        self
    }

    pub fn color(&self, label: u32) -> Option<[u8; 3]> {
        if label == VOID {
            Some(WHITE)
        } else {
            self.colors.get(&label).copied()
        }
    }

    /// Fixed, well separated colors for labels `1..=255`.
    pub fn distinct() -> Self {
        const BASE: [[u8; 3]; 10] = [
            [60, 60, 60],
            [220, 30, 30],
            [30, 90, 220],
            [30, 170, 60],
            [240, 160, 20],
            [150, 40, 180],
            [20, 180, 190],
            [200, 90, 140],
            [120, 110, 30],
            [90, 60, 20],
        ];
        let mut p = Self::new();
        for label in 1..=255u32 {
            let base = BASE[(label as usize - 1) % BASE.len()];
            // darken repeated cycles so neighbours stay distinguishable
            let cycle = ((label as usize - 1) / BASE.len()) as u32;
            let scale = 1.0 / (1.0 + 0.15 * cycle as f32);
            p.insert(label, base.map(|c| (c as f32 * scale) as u8));
        }
        p
    }
}

/// Encodes a label map as a raw-index PGM plus a palette-colored PPM.
pub fn write_labelmap(map: &LabelMap, palette: &Palette) -> Result<(Vec<u8>, Vec<u8>)> {
    let mut gray = Vec::with_capacity(map.labels.len());
    let mut rgb = Vec::with_capacity(map.labels.len() * 3);
    for &l in &map.labels {
        if l > 255 {
            return Err(FormatError::LabelOverflow(l));
        }
        let c = palette
            .color(l)
            .ok_or(FormatError::MissingPaletteEntry(l))?;
        gray.push(l as u8);
        rgb.extend_from_slice(&c);
    }
    let pgm = write_pnm(&Image::new(map.width, map.height, 1, gray)?);
    let ppm = write_pnm(&Image::new(map.width, map.height, 3, rgb)?);
    Ok((pgm, ppm))
}

/// Reads a label PGM written by [`write_labelmap`] (or any P5 raster).
pub fn read_labelmap(bytes: &[u8]) -> Result<LabelMap> {
    let img = read_pnm(bytes)?;
    if img.channels() != 1 {
        return Err(FormatError::BadHeader(
            "label maps must be single-channel PGM".into(),
        ));
    }
    LabelMap::new(
        img.width(),
        img.height(),
        img.data().iter().map(|&b| b as u32).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_pixel() {
        let map = LabelMap::new(1, 1, vec![3]).unwrap();
        let mut pal = Palette::new();
        pal.insert(3, [255, 0, 0]);
        let (pgm, ppm) = write_labelmap(&map, &pal).unwrap();
        assert_eq!(read_pnm(&pgm).unwrap().data(), &[3]);
        assert_eq!(read_pnm(&ppm).unwrap().data(), &[255, 0, 0]);
        assert_eq!(read_labelmap(&pgm).unwrap(), map);
    }

    #[test]
    fn overflow_and_missing_color() {
        let map = LabelMap::new(2, 1, vec![1, 256]).unwrap();
        assert_eq!(
            write_labelmap(&map, &Palette::distinct()),
            Err(FormatError::LabelOverflow(256))
        );
        let map = LabelMap::new(1, 1, vec![4]).unwrap();
        assert_eq!(
            write_labelmap(&map, &Palette::new()),
            Err(FormatError::MissingPaletteEntry(4))
        );
    }

    #[test]
    fn void_is_white() {
        let mut pal = Palette::new();
        pal.insert(0, [1, 2, 3]);
        let map = LabelMap::filled(1, 1, VOID).unwrap();
        let (_, ppm) = write_labelmap(&map, &pal).unwrap();
        assert_eq!(read_pnm(&ppm).unwrap().data(), &WHITE);
    }

    #[test]
    fn rejects_color_input() {
        let ppm = write_pnm(&Image::filled(1, 1, 3, 0).unwrap());
        assert!(read_labelmap(&ppm).is_err());
    }
}
