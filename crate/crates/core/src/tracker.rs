//! Semi-dense point trajectories obtained by integrating optical flow.
//!
//! Points are seeded on a regular grid (one per `sampling_step` cell),
//! advected frame to frame with bilinearly sampled forward flow, and
//! terminated when they leave the frame or fail the forward-backward
//! consistency test. Empty cells are re-seeded after every frame so the set
//! keeps its target density.

use thiserror::Error;

use crate::flowio::FlowField;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrackError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("point ({x}, {y}) outside {width}x{height} field")]
    OutOfBounds {
        x: f64,
        y: f64,
        width: usize,
        height: usize,
    },
    #[error("invalid trajectory {id}: {reason}")]
    InvalidTrajectory { id: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, TrackError>;

/// One tracked point: a start frame plus one position per frame alive.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub id: usize,
    pub start_frame: usize,
    pub positions: Vec<[T; 2]>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn new(id: usize, start_frame: usize, positions: Vec<[T; 2]>) -> Self {
        Self {
            id,
            start_frame,
            positions,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Last frame with a position (inclusive).
    pub fn end_frame(&self) -> usize {
        self.start_frame + self.positions.len() - 1
    }

    pub fn is_alive_at(&self, frame: usize) -> bool {
        frame >= self.start_frame && frame <= self.end_frame()
    }

    pub fn position_at(&self, frame: usize) -> Option<[T; 2]> {
        if self.is_alive_at(frame) {
            Some(self.positions[frame - self.start_frame])
        } else {
            None
        }
    }
}

/// All trajectories of one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySet<T> {
    pub trajectories: Vec<Trajectory<T>>,
    pub frame_count: usize,
    pub width: usize,
    pub height: usize,
    pub sampling_step: usize,
}

impl<T: Scalar> TrajectorySet<T> {
    /// Assembles a set and checks its invariants: unique ids, at least two
    /// positions per trajectory, positions inside the frame, lifetimes inside
    /// `0..frame_count`.
    pub fn new(
        trajectories: Vec<Trajectory<T>>,
        frame_count: usize,
        width: usize,
        height: usize,
        sampling_step: usize,
    ) -> Result<Self> {
        let set = Self {
            trajectories,
            frame_count,
            width,
            height,
            sampling_step,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids: Vec<usize> = self.trajectories.iter().map(|t| t.id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(TrackError::InvalidTrajectory {
                id: w[0],
                reason: "duplicate id".into(),
            });
        }
        let (xmax, ymax) = (
            T::from_usize_lossy(self.width.saturating_sub(1)),
            T::from_usize_lossy(self.height.saturating_sub(1)),
        );
        for t in &self.trajectories {
            let bad = |reason: &str| TrackError::InvalidTrajectory {
                id: t.id,
                reason: reason.into(),
            };
            if t.len() < 2 {
                return Err(bad("fewer than two positions"));
            }
            if t.end_frame() >= self.frame_count {
                return Err(bad("lifetime exceeds frame count"));
            }
            let inside =
                |p: &[T; 2]| p[0] >= T::zero() && p[1] >= T::zero() && p[0] <= xmax && p[1] <= ymax;
            if !t.positions.iter().all(inside) {
                return Err(bad("position outside the frame"));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&Trajectory<T>> {
        self.trajectories.iter().find(|t| t.id == id)
    }

    /// Trajectories alive at `frame`.
    pub fn alive_at(&self, frame: usize) -> impl Iterator<Item = &Trajectory<T>> {
        self.trajectories
            .iter()
            .filter(move |t| t.is_alive_at(frame))
    }
}

/// Tracker thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerParams {
    pub sampling_step: usize,
    /// Relative tolerance of the forward-backward test.
    pub fb_c1: f64,
    /// Absolute tolerance of the forward-backward test, squared pixels.
    pub fb_c2: f64,
}

impl Default for TrackerParams {
    fn default() -> Self {
        Self {
            sampling_step: 8,
            fb_c1: 0.01,
            fb_c2: 0.5,
        }
    }
}

/// Why a trajectory stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Still alive in the last frame.
    SequenceEnd,
    /// The advected point left the frame.
    LeftFrame,
    /// Forward and backward flow disagreed.
    Inconsistent,
}

/// Per-pixel occupancy of the sampling grid.
#[derive(Debug, Clone)]
pub struct OccupancyMask {
    width: usize,
    height: usize,
    occupied: Vec<bool>,
}

impl OccupancyMask {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            occupied: vec![false; width * height],
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            occupied: vec![true; width * height],
        }
    }

    /// Marks every pixel within Chebyshev distance `sampling_step / 2` of
    /// each point.
    pub fn from_points<T: Scalar>(
        width: usize,
        height: usize,
        sampling_step: usize,
        points: impl IntoIterator<Item = [T; 2]>,
    ) -> Self {
        let mut mask = Self::empty(width, height);
        let radius = sampling_step as f64 / 2.0;
        for p in points {
            let (px, py) = (p[0].to_f64_lossy(), p[1].to_f64_lossy());
            let x0 = (px - radius).ceil().max(0.0) as usize;
            let y0 = (py - radius).ceil().max(0.0) as usize;
            let x1 = ((px + radius).floor() as i64).min(width as i64 - 1);
            let y1 = ((py + radius).floor() as i64).min(height as i64 - 1);
            if x1 < 0 || y1 < 0 {
                continue;
            }
            for y in y0..=y1 as usize {
                for x in x0..=x1 as usize {
                    mask.occupied[y * width + x] = true;
                }
            }
        }
        mask
    }

    pub fn is_occupied(&self, x: usize, y: usize) -> bool {
        self.occupied[y * self.width + x]
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

/// Grid cell centers `(i*s + s/2, j*s + s/2)` whose pixel is not occupied,
/// in row-major order.
pub fn seed_points(
    width: usize,
    height: usize,
    sampling_step: usize,
    occupied: &OccupancyMask,
) -> Vec<(usize, usize)> {
    assert!(sampling_step >= 1, "sampling step must be positive");
    let half = sampling_step / 2;
    let mut out = Vec::new();
    for j in 0..height / sampling_step {
        for i in 0..width / sampling_step {
            let (x, y) = (i * sampling_step + half, j * sampling_step + half);
            if !occupied.is_occupied(x, y) {
                out.push((x, y));
            }
        }
    }
    out
}

fn in_bounds<T: Scalar>(flow: &FlowField, p: [T; 2]) -> bool {
    let xmax = T::from_usize_lossy(flow.width() - 1);
    let ymax = T::from_usize_lossy(flow.height() - 1);
    p[0] >= T::zero() && p[1] >= T::zero() && p[0] <= xmax && p[1] <= ymax
}

/// Bilinear interpolation of the flow at a sub-pixel position.
pub fn sample_flow_bilinear<T: Scalar>(flow: &FlowField, p: [T; 2]) -> Result<[T; 2]> {
    if !in_bounds(flow, p) {
        return Err(TrackError::OutOfBounds {
            x: p[0].to_f64_lossy(),
            y: p[1].to_f64_lossy(),
            width: flow.width(),
            height: flow.height(),
        });
    }
    let x0 = p[0].floor().to_usize().unwrap_or(0);
    let y0 = p[1].floor().to_usize().unwrap_or(0);
    let x1 = (x0 + 1).min(flow.width() - 1);
    let y1 = (y0 + 1).min(flow.height() - 1);
    let fx = p[0] - T::from_usize_lossy(x0);
    let fy = p[1] - T::from_usize_lossy(y0);
    let cast = |uv: [f32; 2]| [T::lit(uv[0] as f64), T::lit(uv[1] as f64)];
    let (a, b) = (cast(flow.get(x0, y0)), cast(flow.get(x1, y0)));
    let (c, d) = (cast(flow.get(x0, y1)), cast(flow.get(x1, y1)));
    let one = T::one();
    let mut out = [T::zero(); 2];
    for k in 0..2 {
        // exact at grid nodes: zero weights drop the other corners entirely
        let top = if fx.is_zero() {
            a[k]
        } else {
            a[k] * (one - fx) + b[k] * fx
        };
        let bottom = if fx.is_zero() {
            c[k]
        } else {
            c[k] * (one - fx) + d[k] * fx
        };
        out[k] = if fy.is_zero() {
            top
        } else {
            top * (one - fy) + bottom * fy
        };
    }
    Ok(out)
}

/// Forward-backward consistency of the flow at `p`.
///
/// Reliable iff `|w + ŵ|² < c1 (|w|² + |ŵ|²) + c2` where `w` is the forward
/// flow at `p` and `ŵ` the backward flow at `p + w`. Points advected out of
/// the frame are unreliable.
pub fn fb_check<T: Scalar>(fwd: &FlowField, bwd: &FlowField, p: [T; 2], c1: T, c2: T) -> bool {
    let Ok(w) = sample_flow_bilinear(fwd, p) else {
        return false;
    };
    let target = [p[0] + w[0], p[1] + w[1]];
    let Ok(wb) = sample_flow_bilinear(bwd, target) else {
        return false;
    };
    let sq = |v: [T; 2]| v[0] * v[0] + v[1] * v[1];
    let lhs = sq([w[0] + wb[0], w[1] + wb[1]]);
    lhs < c1 * (sq(w) + sq(wb)) + c2
}

struct Live<T> {
    start_frame: usize,
    positions: Vec<[T; 2]>,
    creation: usize,
}

/// Tracks points through a sequence; see [`track_sequence_detailed`].
pub fn track_sequence<T: Scalar>(
    fwd_flows: &[FlowField],
    bwd_flows: Option<&[FlowField]>,
    dims: (usize, usize),
    params: &TrackerParams,
) -> Result<TrajectorySet<T>> {
    track_sequence_detailed(fwd_flows, bwd_flows, dims, params).map(|(set, _)| set)
}

/// Tracks points through `fwd_flows.len() + 1` frames.
///
/// `fwd_flows[t]` maps frame `t` to `t + 1`; `bwd_flows[t]`, when given, maps
/// frame `t + 1` back to `t`. Trajectory ids are assigned `0..n` in creation
/// order (frame, then row-major seed order) after short tracks are dropped.
/// Also returns the termination reason of each kept trajectory, indexed by id.
pub fn track_sequence_detailed<T: Scalar>(
    fwd_flows: &[FlowField],
    bwd_flows: Option<&[FlowField]>,
    dims: (usize, usize),
    params: &TrackerParams,
) -> Result<(TrajectorySet<T>, Vec<Termination>)> {
    let (width, height) = dims;
    for (t, f) in fwd_flows.iter().enumerate() {
        if f.dims() != dims {
            return Err(TrackError::DimensionMismatch(format!(
                "forward flow {t} is {:?}, expected {dims:?}",
                f.dims()
            )));
        }
    }
    if let Some(bwd) = bwd_flows {
        if bwd.len() != fwd_flows.len() {
            return Err(TrackError::DimensionMismatch(format!(
                "{} backward flows for {} forward flows",
                bwd.len(),
                fwd_flows.len()
            )));
        }
        for (t, f) in bwd.iter().enumerate() {
            if f.dims() != dims {
                return Err(TrackError::DimensionMismatch(format!(
                    "backward flow {t} is {:?}, expected {dims:?}",
                    f.dims()
                )));
            }
        }
    }
    let step = params.sampling_step.max(1);
    let (c1, c2) = (T::lit(params.fb_c1), T::lit(params.fb_c2));

    let mut created = 0usize;
    let mut finished: Vec<(Live<T>, Termination)> = Vec::new();
    let mut live: Vec<Live<T>> = Vec::new();

    let seed = |live: &mut Vec<Live<T>>, created: &mut usize, frame: usize| {
        let mask = OccupancyMask::from_points(
            width,
            height,
            step,
            live.iter().map(|l| *l.positions.last().unwrap()),
        );
        for (x, y) in seed_points(width, height, step, &mask) {
            live.push(Live {
                start_frame: frame,
                positions: vec![[T::from_usize_lossy(x), T::from_usize_lossy(y)]],
                creation: *created,
            });
            *created += 1;
        }
    };

    seed(&mut live, &mut created, 0);
    for (t, fwd) in fwd_flows.iter().enumerate() {
        let bwd = bwd_flows.map(|b| &b[t]);
        let mut next = Vec::with_capacity(live.len());
        for mut l in live.drain(..) {
            let p = *l.positions.last().unwrap();
            let moved = sample_flow_bilinear(fwd, p)
                .ok()
                .map(|w| [p[0] + w[0], p[1] + w[1]])
                .filter(|q| in_bounds(fwd, *q));
            match moved {
                None => finished.push((l, Termination::LeftFrame)),
                Some(q) => {
                    if bwd.is_some_and(|b| !fb_check(fwd, b, p, c1, c2)) {
                        finished.push((l, Termination::Inconsistent));
                    } else {
                        l.positions.push(q);
                        next.push(l);
                    }
                }
            }
        }
        live = next;
        seed(&mut live, &mut created, t + 1);
    }
    finished.extend(live.into_iter().map(|l| (l, Termination::SequenceEnd)));
    finished.retain(|(l, _)| l.positions.len() >= 2);
    finished.sort_by_key(|(l, _)| l.creation);

    let mut reasons = Vec::with_capacity(finished.len());
    let trajectories = finished
        .into_iter()
        .enumerate()
        .map(|(id, (l, why))| {
            reasons.push(why);
            Trajectory::new(id, l.start_frame, l.positions)
        })
        .collect();
    let set = TrajectorySet::new(trajectories, fwd_flows.len() + 1, width, height, step)?;
    Ok((set, reasons))
}
