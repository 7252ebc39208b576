//! Minimum cost multicut (correlation clustering).
//!
//! A [`Partition`] assigns every node a component; an edge is cut when its
//! endpoints land in different components, so every partition is a feasible
//! multicut. The objective is the total cost of cut edges, to be minimized.

mod gaec;
mod klj;
mod oracle;

use thiserror::Error;

use crate::affinity::AffinityGraph;
use crate::scalar::Scalar;

pub use gaec::gaec;
pub use klj::{klj, klj_traced, KljParams};
pub use oracle::{oracle_optimal, ORACLE_MAX_NODES};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MulticutError {
    #[error("exhaustive search is limited to {max} nodes, graph has {nodes}")]
    TooLarge { nodes: usize, max: usize },
    #[error("partition covers {got} nodes, graph has {expected}")]
    SizeMismatch { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, MulticutError>;

/// Component id per node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    labels: Vec<usize>,
}

impl Partition {
    pub fn new(labels: Vec<usize>) -> Self {
        Self { labels }
    }

    pub fn singletons(n: usize) -> Self {
        Self::new((0..n).collect())
    }

    pub fn joined(n: usize) -> Self {
        Self::new(vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn component(&self, node: usize) -> usize {
        self.labels[node]
    }

    /// Relabels components `0, 1, ...` in order of first occurrence.
    pub fn canonical(&self) -> Self {
        let mut map = std::collections::HashMap::new();
        let labels = self
            .labels
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Self { labels }
    }

    pub fn component_count(&self) -> usize {
        let mut l = self.labels.clone();
        l.sort_unstable();
        l.dedup();
        l.len()
    }

    /// Output labels starting at 1, numbered by decreasing component size
    /// (ties: earlier first occurrence first).
    pub fn labels_by_size(&self) -> Vec<u32> {
        let canon = self.canonical();
        let k = canon.component_count();
        let mut sizes = vec![0usize; k];
        for &l in &canon.labels {
            sizes[l] += 1;
        }
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
        let mut rank = vec![0u32; k];
        for (r, &c) in order.iter().enumerate() {
            rank[c] = r as u32 + 1;
        }
        canon.labels.iter().map(|&l| rank[l]).collect()
    }
}

/// Total cost of the edges cut by `p`.
pub fn multicut_objective<T: Scalar>(g: &AffinityGraph<T>, p: &Partition) -> Result<T> {
    if p.len() != g.node_count() {
        return Err(MulticutError::SizeMismatch {
            expected: g.node_count(),
            got: p.len(),
        });
    }
    Ok(g.edges()
        .iter()
        .filter(|e| p.labels[e.u] != p.labels[e.v])
        .map(|e| e.cost)
        .sum())
}

/// GAEC followed by KLj refinement. Returns a canonical partition.
pub fn decompose<T: Scalar>(g: &AffinityGraph<T>) -> (Partition, T) {
    let init = gaec(g);
    let p = klj(g, &init, &KljParams::default()).expect("gaec covers every node");
    let obj = multicut_objective(g, &p).expect("klj covers every node");
    (p, obj)
}
