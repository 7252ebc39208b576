use super::{multicut_objective, MulticutError, Partition, Result};
use crate::affinity::AffinityGraph;
use crate::scalar::Scalar;

/// Bell(10) = 115975 partitions is the largest search we allow.
pub const ORACLE_MAX_NODES: usize = 10;

/// Exact minimizer by enumerating every set partition as a restricted growth
/// string in lexicographic order. Ties keep the lexicographically smallest
/// canonical labeling.
pub fn oracle_optimal<T: Scalar>(g: &AffinityGraph<T>) -> Result<(Partition, T)> {
    let n = g.node_count();
    if n > ORACLE_MAX_NODES {
        return Err(MulticutError::TooLarge {
            nodes: n,
            max: ORACLE_MAX_NODES,
        });
    }
    if n == 0 {
        return Ok((Partition::new(Vec::new()), T::zero()));
    }
    let mut labels = vec![0usize; n];
    let mut best: Option<(Vec<usize>, T)> = None;
    loop {
        let obj = multicut_objective(g, &Partition::new(labels.clone()))?;
        if best.as_ref().is_none_or(|(_, b)| obj < *b) {
            best = Some((labels.clone(), obj));
        }
        // next restricted growth string
        let mut i = n - 1;
        loop {
            if i == 0 {
                let (l, o) = best.unwrap();
                return Ok((Partition::new(l), o));
            }
            let max_before = labels[..i].iter().copied().max().unwrap();
            if labels[i] <= max_before {
                labels[i] += 1;
                for l in &mut labels[i + 1..] {
                    *l = 0;
                }
                break;
            }
            i -= 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::{graph, triangle};
    use super::*;

    fn count_partitions(n: usize) -> usize {
        // same successor rule as the oracle
        let mut labels = vec![0usize; n];
        let mut count = 0;
        loop {
            count += 1;
            let mut i = n - 1;
            loop {
                if i == 0 {
                    return count;
                }
                let m = labels[..i].iter().copied().max().unwrap();
                if labels[i] <= m {
                    labels[i] += 1;
                    labels[i + 1..].iter_mut().for_each(|l| *l = 0);
                    break;
                }
                i -= 1;
            }
        }
    }

    #[test]
    fn enumerates_bell_numbers() {
        let bell = [1, 1, 2, 5, 15, 52, 203, 877, 4140];
        for n in 1..bell.len() {
            assert_eq!(count_partitions(n), bell[n], "n={n}");
        }
    }

    #[test]
    fn triangle_optimum() {
        let (p, obj) = oracle_optimal(&triangle()).unwrap();
        assert_eq!(p.labels(), &[0, 1, 0]);
        assert_eq!(obj, -10.0);
    }

    #[test]
    fn sign_extremes() {
        let pos = graph(4, &[(0, 1, 1.0), (1, 2, 2.0), (2, 3, 0.5), (0, 3, 1.0)]);
        let (p, obj) = oracle_optimal(&pos).unwrap();
        assert_eq!(p, Partition::joined(4));
        assert_eq!(obj, 0.0);
        let neg = graph(4, &[(0, 1, -1.0), (1, 2, -2.0), (2, 3, -0.5), (0, 3, -1.0)]);
        let (p, obj) = oracle_optimal(&neg).unwrap();
        // cutting every edge of the even cycle needs only two components
        assert_eq!(p.labels(), &[0, 1, 0, 1]);
        assert_eq!(obj, -4.5);
    }

    #[test]
    fn four_cycle() {
        let g = graph(4, &[(0, 1, 3.0), (1, 2, -3.0), (2, 3, 3.0), (0, 3, -3.0)]);
        let (p, obj) = oracle_optimal(&g).unwrap();
        assert_eq!(obj, -6.0);
        assert_eq!(p.labels(), &[0, 0, 1, 1]);
    }

    #[test]
    fn too_large() {
        let g = graph(11, &[]);
        assert_eq!(
            oracle_optimal(&g),
            Err(MulticutError::TooLarge { nodes: 11, max: 10 })
        );
    }
}
