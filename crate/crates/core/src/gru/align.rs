//! Fixed-length pair alignment and balanced training-pair sampling.

use std::ops::Range;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{AlignedPair, GruError, Result};
use crate::affinity::{motion_derivative, step_distances, AffinityGraph, SigmaProvider};
use crate::flowio::{LabelMap, VOID};
use crate::scalar::Scalar;
use crate::tracker::{Trajectory, TrajectorySet};

/// Window of `steps` consecutive joint steps around the largest distance.
///
/// The first maximum wins ties. The window starts `⌈(steps-1)/2⌉` steps
/// before it and is shifted to stay inside `0..distances.len()`. Requires
/// `distances.len() >= steps`.
pub fn select_window<T: Scalar>(distances: &[T], steps: usize) -> Range<usize> {
    let joint = distances.len();
    assert!(
        joint >= steps && steps > 0,
        "window longer than joint lifetime"
    );
    let peak = distances.iter().enumerate().fold(
        0,
        |best, (i, d)| if *d > distances[best] { i } else { best },
    );
    let before = steps / 2; // == ceil((steps - 1) / 2)
    let start = peak.saturating_sub(before).min(joint - steps);
    start..start + steps
}

/// Derivative sequences of both trajectories over their joint lifetime,
/// brought to exactly `steps` entries.
///
/// Shorter joint lifetimes are padded with each trajectory's last joint
/// derivative; longer ones are cut to the window around the step of largest
/// motion distance (see [`select_window`]).
pub fn align_pair<T: Scalar>(
    a: &Trajectory<T>,
    b: &Trajectory<T>,
    steps: usize,
    sigma: &impl SigmaProvider<T>,
) -> Result<(Vec<[T; 2]>, Vec<[T; 2]>)> {
    let (first, distances) =
        step_distances(a, b, sigma).map_err(|_| GruError::NoOverlap { a: a.id, b: b.id })?;
    let joint = distances.len();
    let range = if joint < steps {
        0..joint
    } else {
        select_window(&distances, steps)
    };
    let derivs = |t: &Trajectory<T>| -> Vec<[T; 2]> {
        let mut v: Vec<[T; 2]> = range
            .clone()
            .map(|k| motion_derivative(t, first + k).expect("inside joint lifetime"))
            .collect();
        let last = *v.last().unwrap();
        v.resize(steps, last);
        v
    };
    Ok((derivs(a), derivs(b)))
}

/// Ground-truth region under a trajectory, if it is the same in every
/// annotated frame it visits. Void gt pixels carry no information.
pub fn reliable_gt_label<T: Scalar>(t: &Trajectory<T>, gt: &[Option<LabelMap>]) -> Option<u32> {
    let mut label = None;
    for (k, p) in t.positions.iter().enumerate() {
        let Some(Some(map)) = gt.get(t.start_frame + k) else {
            continue;
        };
        let x = p[0].round().to_usize()?.min(map.width() - 1);
        let y = p[1].round().to_usize()?.min(map.height() - 1);
        let l = map.get(x, y);
        if l == VOID {
            continue;
        }
        match label {
            None => label = Some(l),
            Some(prev) if prev != l => return None,
            _ => {}
        }
    }
    label
}

/// Labeled, class-balanced training pairs from the edges of `graph`.
///
/// Node `i` of the graph is `ts.trajectories[i]`; `gt[f]` is the annotation
/// of frame `f` when present. Trajectories whose region changes over time
/// are skipped. The larger class is subsampled (seeded) to the size of the
/// smaller one; the output keeps graph edge order.
pub fn sample_training_pairs<T: Scalar>(
    graph: &AffinityGraph<T>,
    ts: &TrajectorySet<T>,
    gt: &[Option<LabelMap>],
    steps: usize,
    sigma: &impl SigmaProvider<T>,
    seed: u64,
) -> Result<Vec<AlignedPair<T>>> {
    let regions: Vec<Option<u32>> = ts
        .trajectories
        .iter()
        .map(|t| reliable_gt_label(t, gt))
        .collect();
    let mut same = Vec::new();
    let mut different = Vec::new();
    for (k, e) in graph.edges().iter().enumerate() {
        if let (Some(a), Some(b)) = (regions[e.u], regions[e.v]) {
            if a == b {
                same.push(k);
            } else {
                different.push(k);
            }
        }
    }
    if same.is_empty() || different.is_empty() {
        return Err(GruError::NoUsablePairs {
            same: same.len(),
            different: different.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keep = same.len().min(different.len());
    for class in [&mut same, &mut different] {
        if class.len() > keep {
            class.shuffle(&mut rng);
            class.truncate(keep);
            class.sort_unstable();
        }
    }
    let mut chosen: Vec<(usize, u8)> = same
        .into_iter()
        .map(|k| (k, 0))
        .chain(different.into_iter().map(|k| (k, 1)))
        .collect();
    chosen.sort_unstable();
    chosen
        .into_iter()
        .map(|(k, label)| {
            let e = graph.edges()[k];
            let (xa, xb) = align_pair(&ts.trajectories[e.u], &ts.trajectories[e.v], steps, sigma)?;
            Ok(AlignedPair { xa, xb, label })
        })
        .collect()
}
