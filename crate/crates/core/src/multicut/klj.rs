//! Kernighan-Lin local search with joins.
//!
//! Every pass visits each pair of adjacent components and each component
//! paired with a fresh empty one. For a pair it builds a greedy sequence of
//! single-node moves across the pair boundary (best objective decrease
//! first, every node moved at most once) and commits the best prefix when it
//! lowers the objective. Joining the two components outright is evaluated
//! alongside and wins when it is strictly better.

use super::{multicut_objective, MulticutError, Partition, Result};
use crate::affinity::AffinityGraph;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KljParams {
    /// Upper bound on the number of passes.
    pub max_iter: usize,
}

impl Default for KljParams {
    fn default() -> Self {
        Self { max_iter: 100 }
    }
}

/// Refines `init`; the result never has a larger objective than `init`.
pub fn klj<T: Scalar>(
    g: &AffinityGraph<T>,
    init: &Partition,
    params: &KljParams,
) -> Result<Partition> {
    klj_traced(g, init, params).map(|(p, _)| p)
}

/// Like [`klj`], also returning the objective before the first pass and
/// after every pass.
pub fn klj_traced<T: Scalar>(
    g: &AffinityGraph<T>,
    init: &Partition,
    params: &KljParams,
) -> Result<(Partition, Vec<T>)> {
    if init.len() != g.node_count() {
        return Err(MulticutError::SizeMismatch {
            expected: g.node_count(),
            got: init.len(),
        });
    }
    let mut search = Search::new(g, init);
    let mut trace = vec![multicut_objective(g, init)?];
    for _ in 0..params.max_iter {
        let changed = search.pass();
        trace.push(multicut_objective(
            g,
            &Partition::new(search.labels.clone()),
        )?);
        if !changed {
            break;
        }
    }
    Ok((Partition::new(search.labels).canonical(), trace))
}

const NONE: u8 = 0;
const SIDE_A: u8 = 1;
const SIDE_B: u8 = 2;

struct Search<T> {
    adj: Vec<Vec<(usize, T)>>,
    labels: Vec<usize>,
    next_label: usize,
    tol: T,
    // scratch, reset after every pair
    side: Vec<u8>,
    delta: Vec<T>,
    cross: Vec<usize>,
    moved: Vec<bool>,
}

impl<T: Scalar> Search<T> {
    fn new(g: &AffinityGraph<T>, init: &Partition) -> Self {
        let n = g.node_count();
        let labels = init.canonical().labels().to_vec();
        let next_label = labels.iter().copied().max().map_or(0, |m| m + 1);
        Self {
            adj: g.adjacency(),
            labels,
            next_label,
            tol: T::epsilon().sqrt(),
            side: vec![NONE; n],
            delta: vec![T::zero(); n],
            cross: vec![0; n],
            moved: vec![false; n],
        }
    }

    fn members(&self, label: usize) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i] == label)
            .collect()
    }

    fn adjacent_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for (u, nbrs) in self.adj.iter().enumerate() {
            for &(v, _) in nbrs {
                let (a, b) = (self.labels[u], self.labels[v]);
                if u < v && a != b {
                    pairs.push((a.min(b), a.max(b)));
                }
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }

    fn pass(&mut self) -> bool {
        let mut changed = false;
        for (a, b) in self.adjacent_pairs() {
            changed |= self.improve_pair(a, Some(b));
        }
        let mut comps = self.labels.clone();
        comps.sort_unstable();
        comps.dedup();
        for a in comps {
            changed |= self.improve_pair(a, None);
        }
        changed
    }

    /// One greedy move sequence between component `a` and `b` (a fresh
    /// component when `b` is `None`). Returns whether anything was committed.
    fn improve_pair(&mut self, a: usize, b: Option<usize>) -> bool {
        let nodes_a = self.members(a);
        let nodes_b = b.map(|b| self.members(b)).unwrap_or_default();
        if nodes_a.is_empty() || (b.is_some() && nodes_b.is_empty()) {
            return false;
        }
        let involved: Vec<usize> = nodes_a.iter().chain(&nodes_b).copied().collect();
        for &i in &nodes_a {
            self.side[i] = SIDE_A;
        }
        for &i in &nodes_b {
            self.side[i] = SIDE_B;
        }
        let mut count = [0usize, nodes_a.len(), nodes_b.len()];

        // delta[i]: objective change if i switched sides now
        let mut join = T::zero();
        for &i in &involved {
            let mut d = T::zero();
            let mut cross = 0;
            for &(j, c) in &self.adj[i] {
                if self.side[j] == NONE {
                    continue;
                }
                if self.side[j] == self.side[i] {
                    d += c;
                } else {
                    d -= c;
                    cross += 1;
                    if self.side[i] == SIDE_A {
                        join -= c;
                    }
                }
            }
            self.delta[i] = d;
            self.cross[i] = cross;
        }

        let mut moves = Vec::new();
        let mut cumulative = T::zero();
        let mut best = T::zero();
        let mut best_len = 0;
        loop {
            let mut pick: Option<usize> = None;
            for &i in &involved {
                if self.moved[i] {
                    continue;
                }
                let other = if self.side[i] == SIDE_A {
                    SIDE_B
                } else {
                    SIDE_A
                };
                if count[other as usize] > 0 && self.cross[i] == 0 {
                    continue;
                }
                if pick.is_none_or(|p| self.delta[i] < self.delta[p]) {
                    pick = Some(i);
                }
            }
            let Some(i) = pick else { break };
            let from = self.side[i];
            let to = if from == SIDE_A { SIDE_B } else { SIDE_A };
            cumulative += self.delta[i];
            self.side[i] = to;
            self.moved[i] = true;
            count[from as usize] -= 1;
            count[to as usize] += 1;
            moves.push(i);
            self.delta[i] = -self.delta[i];
            self.cross[i] = 0;
            for k in 0..self.adj[i].len() {
                let (j, c) = self.adj[i][k];
                let sj = self.side[j];
                if sj == NONE {
                    continue;
                }
                let two = c + c;
                if sj == to {
                    // j now shares i's side
                    self.delta[j] += two;
                    self.cross[j] -= 1;
                } else {
                    self.delta[j] -= two;
                    self.cross[j] += 1;
                    self.cross[i] += 1;
                }
            }
            if cumulative < best - self.tol {
                best = cumulative;
                best_len = moves.len();
            }
        }

        let joinable = b.filter(|_| join < best - self.tol && join < -self.tol);
        let committed = if let Some(b) = joinable {
            for &i in &nodes_b {
                self.labels[i] = a;
            }
            log::trace!("klj: joined {b} into {a} (delta {join})");
            true
        } else if best_len > 0 {
            let target = b.unwrap_or_else(|| {
                self.next_label += 1;
                self.next_label - 1
            });
            for &i in &moves[..best_len] {
                self.labels[i] = if self.labels[i] == a { target } else { a };
            }
            true
        } else {
            false
        };

        for &i in &involved {
            self.side[i] = NONE;
            self.moved[i] = false;
            self.delta[i] = T::zero();
            self.cross[i] = 0;
        }
        committed
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::{graph, triangle};
    use super::super::{gaec, oracle_optimal};
    use super::*;

    #[test]
    fn four_cycle_from_singletons() {
        let g = graph(4, &[(0, 1, 3.0), (1, 2, -3.0), (2, 3, 3.0), (0, 3, -3.0)]);
        let init = Partition::singletons(4);
        assert_eq!(multicut_objective(&g, &init).unwrap(), 0.0);
        let p = klj(&g, &init, &KljParams::default()).unwrap();
        assert_eq!(multicut_objective(&g, &p).unwrap(), -6.0);
        assert_eq!(p.labels(), &[0, 0, 1, 1]);
    }

    #[test]
    fn optimum_is_a_fixed_point() {
        let g = triangle();
        let (opt, obj) = oracle_optimal(&g).unwrap();
        let p = klj(&g, &opt, &KljParams::default()).unwrap();
        assert_eq!(multicut_objective(&g, &p).unwrap(), obj);
    }

    #[test]
    fn splits_off_a_repulsive_node() {
        // everything joined, node 3 is repelled by all others
        let g = graph(
            4,
            &[
                (0, 1, 1.0),
                (1, 2, 1.0),
                (0, 2, 1.0),
                (0, 3, -1.0),
                (1, 3, -1.0),
                (2, 3, 0.5),
            ],
        );
        let p = klj(&g, &Partition::joined(4), &KljParams::default()).unwrap();
        assert_eq!(p.labels(), &[0, 0, 0, 1]);
    }

    #[test]
    fn join_move_merges_components() {
        // two attractive cliques joined by strongly attractive edges: moving
        // single nodes never helps, joining does
        let g = graph(
            4,
            &[
                (0, 1, 5.0),
                (2, 3, 5.0),
                (0, 2, 1.0),
                (1, 3, 1.0),
                (0, 3, 1.0),
                (1, 2, 1.0),
            ],
        );
        let p = klj(&g, &Partition::new(vec![0, 0, 1, 1]), &KljParams::default()).unwrap();
        assert_eq!(p, Partition::joined(4));
    }

    #[test]
    fn trace_is_monotone() {
        let g = graph(
            6,
            &[
                (0, 1, 0.7),
                (1, 2, -0.4),
                (2, 3, 0.9),
                (3, 4, -0.2),
                (4, 5, 0.3),
                (0, 5, -0.8),
                (1, 4, 0.6),
                (2, 5, -0.5),
            ],
        );
        for init in [Partition::singletons(6), Partition::joined(6), gaec(&g)] {
            let (_, trace) = klj_traced(&g, &init, &KljParams::default()).unwrap();
            assert!(trace.windows(2).all(|w| w[1] <= w[0]), "{trace:?}");
        }
    }

    #[test]
    fn size_mismatch() {
        assert!(klj(&triangle(), &Partition::joined(2), &KljParams::default()).is_err());
    }
}
