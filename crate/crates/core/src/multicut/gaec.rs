use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use super::Partition;
use crate::affinity::AffinityGraph;
use crate::scalar::Scalar;

struct Candidate<T> {
    cost: T,
    u: usize,
    v: usize,
    stamp: u64,
}

impl<T: Scalar> PartialEq for Candidate<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar> Eq for Candidate<T> {}

impl<T: Scalar> PartialOrd for Candidate<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Candidate<T> {
    // max-heap: larger cost first, then smaller (u, v)
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost
            .partial_cmp(&other.cost)
            .expect("finite costs")
            .then_with(|| (other.u, other.v).cmp(&(self.u, self.v)))
    }
}

/// Greedy additive edge contraction.
///
/// Repeatedly contracts the most attractive remaining edge while its cost is
/// positive; parallel edges created by a contraction are merged by summing
/// their costs. The contracted pair keeps the smaller node id, and ties are
/// broken by the smallest `(u, v)`.
pub fn gaec<T: Scalar>(g: &AffinityGraph<T>) -> Partition {
    let n = g.node_count();
    let mut adj: Vec<BTreeMap<usize, (T, u64)>> = vec![BTreeMap::new(); n];
    let mut heap = BinaryHeap::new();
    for e in g.edges() {
        adj[e.u].insert(e.v, (e.cost, 0));
        adj[e.v].insert(e.u, (e.cost, 0));
        if e.cost > T::zero() {
            heap.push(Candidate {
                cost: e.cost,
                u: e.u,
                v: e.v,
                stamp: 0,
            });
        }
    }
    let mut parent: Vec<usize> = (0..n).collect();
    let mut alive = vec![true; n];
    let mut stamp = 0u64;

    while let Some(c) = heap.pop() {
        if !alive[c.u] || !alive[c.v] {
            continue;
        }
        match adj[c.u].get(&c.v) {
            Some(&(_, s)) if s == c.stamp => {}
            _ => continue,
        }
        let (keep, gone) = (c.u, c.v);
        alive[gone] = false;
        parent[gone] = keep;
        let moved = std::mem::take(&mut adj[gone]);
        adj[keep].remove(&gone);
        for (w, (cost, _)) in moved {
            if w == keep {
                continue;
            }
            adj[w].remove(&gone);
            stamp += 1;
            let merged = adj[keep].get(&w).map_or(cost, |&(c0, _)| c0 + cost);
            adj[keep].insert(w, (merged, stamp));
            adj[w].insert(keep, (merged, stamp));
            if merged > T::zero() {
                heap.push(Candidate {
                    cost: merged,
                    u: keep.min(w),
                    v: keep.max(w),
                    stamp,
                });
            }
        }
    }

    let find = |mut i: usize| {
        while parent[i] != i {
            i = parent[i];
        }
        i
    };
    Partition::new((0..n).map(find).collect()).canonical()
}
