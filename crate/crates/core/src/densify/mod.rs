//! Sparse trajectory labels to dense per-frame label maps.
//!
//! Seeds come from the clustered trajectories; every other pixel takes the
//! label of the seed that is closest along paths which are expensive to run
//! across image edges of the smoothed frame.

mod filters;
mod geodesic;
mod seeds;

use thiserror::Error;

pub use filters::{
    gaussian_blur, gaussian_blur_plane, gaussian_kernel, luma, sobel_magnitude, sobel_max_response,
    sobel_plane, Plane,
};
pub use geodesic::geodesic_propagate;
pub use seeds::{
    rasterize_sparse_labels, select_labels, LabelMode, LabelSelection, SparseFrameLabels,
};

use crate::flowio::{Image, LabelMap, Palette};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DensifyError {
    #[error("frame {frame} has no seeds")]
    NoSeeds { frame: usize },
    #[error("no trajectory labels to densify")]
    EmptyPartition,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

pub type Result<T> = std::result::Result<T, DensifyError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensifyParams {
    pub sigma_blur: f64,
    pub lambda: f64,
}

impl Default for DensifyParams {
    fn default() -> Self {
        Self {
            sigma_blur: 2.0,
            lambda: 50.0,
        }
    }
}

/// Dense labels for one frame: blur, Sobel edges of the blurred frame, then
/// geodesic propagation from `seeds`.
pub fn geodesic_densify<T: Scalar>(
    img: &Image,
    seeds: &SparseFrameLabels,
    params: &DensifyParams,
) -> Result<LabelMap> {
    if let Some(&(x, y, _)) = seeds
        .seeds
        .iter()
        .find(|&&(x, y, _)| x >= img.width() || y >= img.height())
    {
        return Err(DensifyError::DimensionMismatch(format!(
            "seed ({x}, {y}) outside {}x{} frame",
            img.width(),
            img.height()
        )));
    }
    let gray: Plane<T> = luma(img);
    let smooth = gaussian_blur_plane(&gray, T::lit(params.sigma_blur));
    let edges = sobel_plane(&smooth);
    geodesic_propagate(&edges, seeds, T::lit(params.lambda))
}

/// Seed pixels as a label map, void elsewhere.
pub fn seed_map(width: usize, height: usize, seeds: &SparseFrameLabels) -> LabelMap {
    let mut m = LabelMap::filled(width, height, crate::flowio::VOID).expect("valid dimensions");
    for &(x, y, l) in &seeds.seeds {
        m.set(x, y, l);
    }
    m
}

/// Frame blended half and half with the label colors.
pub fn overlay(img: &Image, labels: &LabelMap, palette: &Palette) -> Image {
    let mut out = Image::filled(img.width(), img.height(), 3, 0).expect("valid dimensions");
    for y in 0..img.height() {
        for x in 0..img.width() {
            let p = img.pixel(x, y);
            let rgb = if p.len() == 1 {
                [p[0]; 3]
            } else {
                [p[0], p[1], p[2]]
            };
            let c = palette.color(labels.get(x, y)).unwrap_or([0, 0, 0]);
            let o = out.pixel_mut(x, y);
            for k in 0..3 {
                o[k] = ((rgb[k] as u16 + c[k] as u16) / 2) as u8;
            }
        }
    }
    out
}
