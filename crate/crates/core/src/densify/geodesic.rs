//! Multi-source edge-aware shortest paths on the pixel grid.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::filters::Plane;
use super::seeds::SparseFrameLabels;
use super::{DensifyError, Result};
use crate::flowio::LabelMap;
use crate::scalar::Scalar;

struct Entry<T> {
    dist: T,
    label: u32,
    idx: usize,
}

impl<T: Scalar> PartialEq for Entry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar> Eq for Entry<T> {}

impl<T: Scalar> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Entry<T> {
    // reversed: BinaryHeap pops the smallest (dist, label, idx)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .partial_cmp(&self.dist)
            .expect("finite distances")
            .then(other.label.cmp(&self.label))
            .then(other.idx.cmp(&self.idx))
    }
}

/// Labels every pixel with its geodesically nearest seed. Moving between
/// 4-neighbours `p` and `q` costs `1 + lambda * (g(p) + g(q)) / 2`; equal
/// distances go to the smaller label.
pub fn geodesic_propagate<T: Scalar>(
    edges: &Plane<T>,
    seeds: &SparseFrameLabels,
    lambda: T,
) -> Result<LabelMap> {
    if seeds.seeds.is_empty() {
        return Err(DensifyError::NoSeeds { frame: seeds.frame });
    }
    let (w, h) = (edges.width, edges.height);
    let mut dist = vec![T::infinity(); w * h];
    let mut label = vec![u32::MAX; w * h];
    let mut done = vec![false; w * h];
    let mut heap = BinaryHeap::new();
    for &(x, y, l) in &seeds.seeds {
        let idx = y * w + x;
        if l < label[idx] {
            dist[idx] = T::zero();
            label[idx] = l;
            heap.push(Entry {
                dist: T::zero(),
                label: l,
                idx,
            });
        }
    }
    let half = T::lit(0.5);
    while let Some(Entry {
        dist: d,
        label: l,
        idx,
    }) = heap.pop()
    {
        if done[idx] || d != dist[idx] || l != label[idx] {
            continue;
        }
        done[idx] = true;
        let (x, y) = (idx % w, idx / w);
        let mut relax = |n: usize| {
            if done[n] {
                return;
            }
            let nd = d + T::one() + lambda * (edges.data[idx] + edges.data[n]) * half;
            if nd < dist[n] || (nd == dist[n] && l < label[n]) {
                dist[n] = nd;
                label[n] = l;
                heap.push(Entry {
                    dist: nd,
                    label: l,
                    idx: n,
                });
            }
        };
        if x > 0 {
            relax(idx - 1);
        }
        if x + 1 < w {
            relax(idx + 1);
        }
        if y > 0 {
            relax(idx - w);
        }
        if y + 1 < h {
            relax(idx + w);
        }
    }
    Ok(LabelMap::new(w, h, label).expect("dimensions come from a valid plane"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(seeds: Vec<(usize, usize, u32)>) -> SparseFrameLabels {
        SparseFrameLabels { frame: 0, seeds }
    }

    #[test]
    fn single_seed_floods_everything() {
        let g = Plane::from_fn(9, 7, |x, y| ((x * y) % 5) as f64 / 5.0);
        let m = geodesic_propagate(&g, &frame(vec![(3, 3, 4)]), 50.0).unwrap();
        assert!(m.labels().iter().all(|&l| l == 4));
    }

    #[test]
    fn uniform_plane_is_manhattan_voronoi() {
        let g = Plane::filled(16, 16, 0.0f64);
        let seeds = vec![(2, 3, 1), (12, 5, 2), (7, 13, 3), (7, 8, 5)];
        let m = geodesic_propagate(&g, &frame(seeds.clone()), 50.0).unwrap();
        for y in 0..16 {
            for x in 0..16 {
                let best = seeds
                    .iter()
                    .map(|&(sx, sy, l)| (sx.abs_diff(x) + sy.abs_diff(y), l))
                    .min()
                    .unwrap();
                assert_eq!(m.get(x, y), best.1, "({x}, {y})");
            }
        }
    }

    #[test]
    fn lambda_zero_ignores_edges() {
        let g = Plane::from_fn(12, 4, |x, _| if x == 5 { 1.0 } else { 0.0 });
        let m = geodesic_propagate(&g, &frame(vec![(1, 1, 1), (10, 1, 2)]), 0.0).unwrap();
        for y in 0..4usize {
            for x in 0..12usize {
                let d1 = x.abs_diff(1) + y.abs_diff(1);
                let d2 = x.abs_diff(10) + y.abs_diff(1);
                assert_eq!(m.get(x, y), if d1 <= d2 { 1 } else { 2 });
            }
        }
    }

    #[test]
    fn no_seeds() {
        let g = Plane::filled(3, 3, 0.0f64);
        assert_eq!(
            geodesic_propagate(
                &g,
                &SparseFrameLabels {
                    frame: 4,
                    seeds: vec![]
                },
                1.0
            ),
            Err(DensifyError::NoSeeds { frame: 4 })
        );
    }
}
