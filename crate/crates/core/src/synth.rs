//! Synthetic sequences of textured rectangles translating over a static
//! textured background, with exact flow and ground truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::flowio::{FlowField, Image, LabelMap};

/// Ground-truth label of the static background.
pub const BACKGROUND: u32 = 1;

/// An axis-aligned square translating by a constant integer step per frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MovingRect {
    /// Top-left corner in frame 0.
    pub origin: [i64; 2],
    pub size: usize,
    pub velocity: [i64; 2],
    pub color: [u8; 3],
}

impl MovingRect {
    pub fn top_left(&self, t: usize) -> [i64; 2] {
        [
            self.origin[0] + self.velocity[0] * t as i64,
            self.origin[1] + self.velocity[1] * t as i64,
        ]
    }

    pub fn contains(&self, t: usize, x: usize, y: usize) -> bool {
        let [x0, y0] = self.top_left(t);
        let (x, y) = (x as i64, y as i64);
        x >= x0 && y >= y0 && x < x0 + self.size as i64 && y < y0 + self.size as i64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub objects: Vec<MovingRect>,
    /// Amplitude of the texture noise added to every color channel.
    pub texture: u8,
    pub seed: u64,
}

impl SynthParams {
    /// 64x64, 12 frames; the first `objects` (at most 2) of a rectangle
    /// moving by (2, 0) and one moving by (-1, 1).
    pub fn two_rects(objects: usize) -> Self {
        let all = [
            MovingRect {
                origin: [2, 4],
                size: 20,
                velocity: [2, 0],
                color: [230, 120, 60],
            },
            MovingRect {
                origin: [38, 28],
                size: 20,
                velocity: [-1, 1],
                color: [90, 200, 250],
            },
        ];
        Self {
            width: 64,
            height: 64,
            frames: 12,
            objects: all.into_iter().take(objects.min(2)).collect(),
            texture: 12,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSequence {
    pub frames: Vec<Image>,
    /// `fwd[t]` maps frame `t` to `t + 1`.
    pub fwd: Vec<FlowField>,
    /// `bwd[t]` maps frame `t + 1` to `t`.
    pub bwd: Vec<FlowField>,
    /// Background is [`BACKGROUND`], object `k` is `k + 2`.
    pub gt: Vec<LabelMap>,
}

/// Object index under pixel `(x, y)` of frame `t`; later objects are on top.
fn owner(p: &SynthParams, t: usize, x: usize, y: usize) -> Option<usize> {
    (0..p.objects.len())
        .rev()
        .find(|&k| p.objects[k].contains(t, x, y))
}

fn noise(rng: &mut ChaCha8Rng, n: usize, amp: u8) -> Vec<i16> {
    let a = amp as i16;
    (0..n).map(|_| rng.gen_range(-a..=a)).collect()
}

pub fn generate(p: &SynthParams) -> SynthSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let (w, h) = (p.width, p.height);
    let bg_tex = noise(&mut rng, w * h, p.texture);
    let obj_tex: Vec<Vec<i16>> = p
        .objects
        .iter()
        .map(|o| noise(&mut rng, o.size * o.size, p.texture))
        .collect();
    let bg_color = [60i16, 60, 60];

    let mut frames = Vec::with_capacity(p.frames);
    let mut gt = Vec::with_capacity(p.frames);
    for t in 0..p.frames {
        let mut data = Vec::with_capacity(w * h * 3);
        let mut labels = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let (color, n, label) = match owner(p, t, x, y) {
                    Some(k) => {
                        let o = &p.objects[k];
                        let [x0, y0] = o.top_left(t);
                        let (u, v) = ((x as i64 - x0) as usize, (y as i64 - y0) as usize);
                        (
                            o.color.map(|c| c as i16),
                            obj_tex[k][v * o.size + u],
                            k as u32 + 2,
                        )
                    }
                    None => (bg_color, bg_tex[y * w + x], BACKGROUND),
                };
                data.extend(color.map(|c| (c + n).clamp(0, 255) as u8));
                labels.push(label);
            }
        }
        frames.push(Image::new(w, h, 3, data).expect("valid dimensions"));
        gt.push(LabelMap::new(w, h, labels).expect("valid dimensions"));
    }

    let velocity = |k: Option<usize>| match k {
        Some(k) => p.objects[k].velocity.map(|v| v as f32),
        None => [0.0, 0.0],
    };
    let mut fwd = Vec::new();
    let mut bwd = Vec::new();
    for t in 0..p.frames.saturating_sub(1) {
        fwd.push(
            FlowField::from_fn(w, h, |x, y| velocity(owner(p, t, x, y))).expect("valid dimensions"),
        );
        bwd.push(
            FlowField::from_fn(w, h, |x, y| velocity(owner(p, t + 1, x, y)).map(|v| -v))
                .expect("valid dimensions"),
        );
    }
    SynthSequence {
        frames,
        fwd,
        bwd,
        gt,
    }
}
