//! Generators and oracles shared by the integration tests.
#![allow(dead_code)]

use moseg::affinity::{AffinityGraph, Edge};
use moseg::flowio::LabelMap;
use moseg::gru::{batch_loss, loss_and_gradients, AlignedPair, GruParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Graph on `n` nodes, each pair linked with probability `density`, costs
/// uniform in `[-1, 1]`.
pub fn random_graph(n: usize, density: f64, seed: u64) -> AffinityGraph<f64> {
    let mut r = rng(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if r.gen_bool(density) {
                edges.push(Edge {
                    u,
                    v,
                    cost: r.gen_range(-1.0..=1.0),
                });
            }
        }
    }
    AffinityGraph::new(n, edges).unwrap()
}

/// Pairs of `steps` derivatives: label 0 pairs share their derivatives
/// exactly, label 1 pairs differ by a constant offset of 2 to 4 px/frame.
/// Labels alternate.
pub fn separable_pairs(count: usize, steps: usize, seed: u64) -> Vec<AlignedPair<f64>> {
    let mut r = rng(seed);
    (0..count)
        .map(|i| {
            let base = [r.gen_range(-3.0..=3.0), r.gen_range(-3.0..=3.0)];
            let xa: Vec<[f64; 2]> = (0..steps)
                .map(|_| {
                    [
                        base[0] + r.gen_range(-0.2..=0.2),
                        base[1] + r.gen_range(-0.2..=0.2),
                    ]
                })
                .collect();
            let label = (i % 2) as u8;
            let xb = if label == 0 {
                xa.clone()
            } else {
                let m: f64 = r.gen_range(2.0..=4.0);
                let a: f64 = r.gen_range(0.0..std::f64::consts::TAU);
                let off = [m * a.cos(), m * a.sin()];
                xa.iter().map(|d| [d[0] + off[0], d[1] + off[1]]).collect()
            };
            AlignedPair::new(xa, xb, label)
        })
        .collect()
}

/// Random pairs with arbitrary derivatives and labels.
pub fn random_pairs(count: usize, steps: usize, seed: u64) -> Vec<AlignedPair<f64>> {
    let mut r = rng(seed);
    let seq = |r: &mut ChaCha8Rng| -> Vec<[f64; 2]> {
        (0..steps)
            .map(|_| [r.gen_range(-2.0..=2.0), r.gen_range(-2.0..=2.0)])
            .collect()
    };
    (0..count)
        .map(|_| {
            let xa = seq(&mut r);
            let xb = seq(&mut r);
            AlignedPair::new(xa, xb, r.gen_range(0..=1))
        })
        .collect()
}

/// Largest `|analytic - central difference| / max(1, |analytic|)` over all
/// parameters.
pub fn worst_gradient_error(batch: &[AlignedPair<f64>], p: &GruParams<f64>, eps: f64) -> f64 {
    let (_, grads) = loss_and_gradients(batch, p);
    let analytic = grads.flatten();
    let base = p.flatten();
    let mut q = p.clone();
    let mut worst = 0.0f64;
    for i in 0..base.len() {
        let mut v = base.clone();
        v[i] = base[i] + eps;
        q.set_flat(&v);
        let plus = batch_loss(batch, &q);
        v[i] = base[i] - eps;
        q.set_flat(&v);
        let minus = batch_loss(batch, &q);
        let fd = (plus - minus) / (2.0 * eps);
        worst = worst.max((analytic[i] - fd).abs() / analytic[i].abs().max(1.0));
    }
    worst
}

/// Label map with labels drawn from `1..=labels`.
pub fn random_map(w: usize, h: usize, labels: u32, r: &mut ChaCha8Rng) -> LabelMap {
    LabelMap::new(w, h, (0..w * h).map(|_| r.gen_range(1..=labels)).collect()).unwrap()
}

/// `map` with every label `l` replaced by `perm[l]`.
pub fn relabel(map: &LabelMap, perm: &[u32]) -> LabelMap {
    LabelMap::new(
        map.width(),
        map.height(),
        map.labels().iter().map(|&l| perm[l as usize]).collect(),
    )
    .unwrap()
}
