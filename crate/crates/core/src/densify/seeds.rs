//! Trajectory labels to per-frame seed pixels.

use std::collections::{BTreeMap, HashMap};

use super::{DensifyError, Result};
use crate::flowio::SparseLabels;
use crate::scalar::Scalar;
use crate::tracker::TrajectorySet;

/// Labeled seed pixels of one frame, sorted by `(y, x)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseFrameLabels {
    pub frame: usize,
    pub seeds: Vec<(usize, usize, u32)>,
}

/// Seeds of frame `t`: every trajectory alive there whose label `map`
/// accepts, at its rounded position. Pixels hit by trajectories with
/// different (mapped) labels are dropped.
pub fn rasterize_sparse_labels<T: Scalar>(
    ts: &TrajectorySet<T>,
    labels: &SparseLabels,
    t: usize,
    map: impl Fn(u32) -> Option<u32>,
) -> SparseFrameLabels {
    let mut pixels: BTreeMap<(usize, usize), Option<u32>> = BTreeMap::new();
    for tr in ts.alive_at(t) {
        let Some(label) = labels.get(&tr.id).and_then(|&l| map(l)) else {
            continue;
        };
        let p = tr.position_at(t).expect("alive");
        let (Some(x), Some(y)) = (p[0].round().to_usize(), p[1].round().to_usize()) else {
            continue;
        };
        if x >= ts.width || y >= ts.height {
            continue;
        }
        pixels
            .entry((y, x))
            .and_modify(|cur| {
                if *cur != Some(label) {
                    *cur = None;
                }
            })
            .or_insert(Some(label));
    }
    SparseFrameLabels {
        frame: t,
        seeds: pixels
            .into_iter()
            .filter_map(|((y, x), l)| l.map(|l| (x, y, l)))
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LabelMode {
    /// Background plus the dominant moving component of every frame.
    Binary,
    /// Every component with enough trajectories.
    Multi { min_count: usize, min_fraction: f64 },
}

impl LabelMode {
    pub fn multi() -> Self {
        LabelMode::Multi {
            min_count: 5,
            min_fraction: 0.05,
        }
    }
}

/// Which cluster labels become seeds, and under which output label.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelSelection {
    /// `background` becomes 1; `foreground[t]` becomes 2 in frame `t`.
    Binary {
        background: u32,
        foreground: Vec<Option<u32>>,
    },
    /// Kept cluster labels and their output labels `1..=K`.
    Multi { remap: BTreeMap<u32, u32> },
}

impl LabelSelection {
    pub fn map(&self, label: u32, frame: usize) -> Option<u32> {
        match self {
            LabelSelection::Binary {
                background,
                foreground,
            } => {
                if label == *background {
                    Some(1)
                } else if foreground.get(frame).copied().flatten() == Some(label) {
                    Some(2)
                } else {
                    None
                }
            }
            LabelSelection::Multi { remap } => remap.get(&label).copied(),
        }
    }
}

/// Most frequent key, smaller key on ties.
fn argmax(counts: &HashMap<u32, usize>) -> Option<u32> {
    counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(l, _)| *l)
}

/// Chooses the labels to densify.
///
/// Binary mode counts trajectory points over all frames to find the
/// background and trajectories per frame for the foreground. Multi mode keeps
/// clusters with at least `max(min_count, min_fraction * largest)`
/// trajectories, renumbered by decreasing size.
pub fn select_labels<T: Scalar>(
    labels: &SparseLabels,
    ts: &TrajectorySet<T>,
    mode: LabelMode,
) -> Result<LabelSelection> {
    if labels.is_empty() {
        return Err(DensifyError::EmptyPartition);
    }
    match mode {
        LabelMode::Binary => {
            let mut global: HashMap<u32, usize> = HashMap::new();
            let mut per_frame: Vec<HashMap<u32, usize>> = vec![HashMap::new(); ts.frame_count];
            for tr in &ts.trajectories {
                let Some(&l) = labels.get(&tr.id) else {
                    continue;
                };
                *global.entry(l).or_default() += tr.len();
                for f in tr.start_frame..=tr.end_frame() {
                    *per_frame[f].entry(l).or_default() += 1;
                }
            }
            let Some(background) = argmax(&global) else {
                return Err(DensifyError::EmptyPartition);
            };
            let foreground = per_frame
                .into_iter()
                .map(|mut c| {
                    c.remove(&background);
                    argmax(&c)
                })
                .collect();
            Ok(LabelSelection::Binary {
                background,
                foreground,
            })
        }
        LabelMode::Multi {
            min_count,
            min_fraction,
        } => {
            let mut sizes: HashMap<u32, usize> = HashMap::new();
            for l in labels.values() {
                *sizes.entry(*l).or_default() += 1;
            }
            let mut order: Vec<(u32, usize)> = sizes.into_iter().collect();
            order.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            let largest = order[0].1;
            let threshold = (min_fraction * largest as f64).max(min_count as f64);
            let remap = order
                .into_iter()
                .filter(|(_, n)| *n as f64 >= threshold)
                .enumerate()
                .map(|(i, (l, _))| (l, i as u32 + 1))
                .collect();
            Ok(LabelSelection::Multi { remap })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracker::Trajectory;

    fn set(trs: Vec<Trajectory<f64>>) -> TrajectorySet<f64> {
        TrajectorySet::new(trs, 3, 16, 16, 8).unwrap()
    }

    #[test]
    fn rounding_and_conflicts() {
        let ts = set(vec![
            Trajectory::new(0, 0, vec![[4.4, 7.6], [1.0, 1.0]]),
            Trajectory::new(1, 0, vec![[9.2, 3.0], [1.0, 1.0]]),
            Trajectory::new(2, 0, vec![[8.8, 2.9], [1.0, 1.0]]),
            Trajectory::new(3, 0, vec![[12.0, 12.0], [1.0, 1.0]]),
            Trajectory::new(4, 0, vec![[12.2, 11.8], [1.0, 1.0]]),
        ]);
        let labels: SparseLabels = [(0, 2), (1, 1), (2, 3), (3, 1), (4, 1)]
            .into_iter()
            .collect();
        let s = rasterize_sparse_labels(&ts, &labels, 0, Some);
        // (9, 3) is contested by labels 1 and 3; (12, 12) agrees
        assert_eq!(s.seeds, vec![(4, 8, 2), (12, 12, 1)]);
        let s = rasterize_sparse_labels(&ts, &labels, 0, |l| (l != 3).then_some(l));
        assert_eq!(s.seeds, vec![(9, 3, 1), (4, 8, 2), (12, 12, 1)]);
        assert!(rasterize_sparse_labels(&ts, &labels, 1, Some)
            .seeds
            .is_empty());
    }

    fn sized(sizes: &[(u32, usize)]) -> (SparseLabels, TrajectorySet<f64>) {
        let mut labels = SparseLabels::new();
        let mut trs = Vec::new();
        for &(l, n) in sizes {
            for _ in 0..n {
                let id = trs.len();
                labels.insert(id, l);
                trs.push(Trajectory::new(id, 0, vec![[1.0, 1.0]; 3]));
            }
        }
        (labels, set(trs))
    }

    #[test]
    fn binary_frequency_order() {
        let (labels, ts) = sized(&[(1, 100), (2, 900)]);
        let sel = select_labels(&labels, &ts, LabelMode::Binary).unwrap();
        assert_eq!(sel.map(2, 0), Some(1));
        assert_eq!(sel.map(1, 2), Some(2));
    }

    #[test]
    fn binary_single_component_has_no_foreground() {
        let (labels, ts) = sized(&[(4, 10)]);
        let sel = select_labels(&labels, &ts, LabelMode::Binary).unwrap();
        assert_eq!(
            sel,
            LabelSelection::Binary {
                background: 4,
                foreground: vec![None; 3]
            }
        );
    }

    #[test]
    fn multi_threshold() {
        let (labels, ts) = sized(&[(7, 3), (3, 400), (9, 30), (1, 1000)]);
        let sel = select_labels(&labels, &ts, LabelMode::multi()).unwrap();
        assert_eq!(
            sel,
            LabelSelection::Multi {
                remap: [(1, 1), (3, 2)].into_iter().collect()
            }
        );
    }

    #[test]
    fn empty_partition() {
        let ts = set(vec![]);
        assert_eq!(
            select_labels(&SparseLabels::new(), &ts, LabelMode::Binary),
            Err(DensifyError::EmptyPartition)
        );
    }
}
