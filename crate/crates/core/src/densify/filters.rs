//! Image filters used as propagation cues.

use crate::flowio::Image;
use crate::scalar::Scalar;

/// Single-channel real-valued raster, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Plane<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    /// Sample with replicated borders.
    #[inline]
    fn clamped(&self, x: isize, y: isize) -> T {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.height, self.width, |x, y| self.get(y, x))
    }
}

/// Gray level of every pixel; RGB uses `0.299 R + 0.587 G + 0.114 B`.
pub fn luma<T: Scalar>(img: &Image) -> Plane<T> {
    let (r, g, b) = (T::lit(0.299), T::lit(0.587), T::lit(0.114));
    Plane::from_fn(img.width(), img.height(), |x, y| {
        let p = img.pixel(x, y);
        if p.len() == 1 {
            T::lit(p[0] as f64)
        } else {
            r * T::lit(p[0] as f64) + g * T::lit(p[1] as f64) + b * T::lit(p[2] as f64)
        }
    })
}

/// Largest gradient magnitude the 3x3 Sobel pair can produce on samples in
/// `[0, 255]`.
pub fn sobel_max_response() -> f64 {
    255.0 * 20f64.sqrt()
}

/// Sobel gradient magnitude of a gray plane, scaled into `[0, 1]` by
/// [`sobel_max_response`].
pub fn sobel_plane<T: Scalar>(p: &Plane<T>) -> Plane<T> {
    let norm = T::lit(sobel_max_response());
    let two = T::lit(2.0);
    Plane::from_fn(p.width, p.height, |x, y| {
        let (x, y) = (x as isize, y as isize);
        let s = |dx: isize, dy: isize| p.clamped(x + dx, y + dy);
        let gx = (s(1, -1) + two * s(1, 0) + s(1, 1)) - (s(-1, -1) + two * s(-1, 0) + s(-1, 1));
        let gy = (s(-1, 1) + two * s(0, 1) + s(1, 1)) - (s(-1, -1) + two * s(0, -1) + s(1, -1));
        (gx * gx + gy * gy).sqrt() / norm
    })
}

pub fn sobel_magnitude<T: Scalar>(img: &Image) -> Plane<T> {
    sobel_plane(&luma(img))
}

/// Normalized 1D Gaussian taps for offsets `-r..=r`, `r = ceil(3 sigma)`.
pub fn gaussian_kernel<T: Scalar>(sigma: T) -> Vec<T> {
    if sigma <= T::zero() {
        return vec![T::one()];
    }
    let r = (T::lit(3.0) * sigma).ceil().to_usize().unwrap_or(0);
    let two_s2 = T::lit(2.0) * sigma * sigma;
    let taps: Vec<T> = (0..=2 * r)
        .map(|i| {
            let d = T::from_usize_lossy(i) - T::from_usize_lossy(r);
            (-(d * d) / two_s2).exp()
        })
        .collect();
    let sum: T = taps.iter().copied().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

/// Separable Gaussian smoothing with replicated borders. `sigma = 0` is the
/// identity.
pub fn gaussian_blur_plane<T: Scalar>(p: &Plane<T>, sigma: T) -> Plane<T> {
    let k = gaussian_kernel(sigma);
    if k.len() == 1 {
        return p.clone();
    }
    let r = (k.len() / 2) as isize;
    let pass = |src: &Plane<T>, horizontal: bool| {
        Plane::from_fn(src.width, src.height, |x, y| {
            let (x, y) = (x as isize, y as isize);
            k.iter()
                .enumerate()
                .map(|(i, w)| {
                    let o = i as isize - r;
                    let v = if horizontal {
                        src.clamped(x + o, y)
                    } else {
                        src.clamped(x, y + o)
                    };
                    *w * v
                })
                .sum()
        })
    };
    pass(&pass(p, true), false)
}

/// Blurs every channel and rounds back to 8 bits.
pub fn gaussian_blur<T: Scalar>(img: &Image, sigma: T) -> Image {
    let c = img.channels();
    let mut out = img.clone();
    for ch in 0..c {
        let plane: Plane<T> = Plane::from_fn(img.width(), img.height(), |x, y| {
            T::lit(img.pixel(x, y)[ch] as f64)
        });
        let blurred = gaussian_blur_plane(&plane, sigma);
        for (i, v) in blurred.data.iter().enumerate() {
            let q = v.round().to_f64_lossy().clamp(0.0, 255.0) as u8;
            out.data_mut()[i * c + ch] = q;
        }
    }
    out
}
