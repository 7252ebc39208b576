//! Forward and backward passes of the Siamese GRU.
//!
//! Cell (per leg, `h_0 = 0`):
//!
//! ```text
//! z  = σ(W_z x + U_z h + b_z)
//! r  = σ(W_r x + U_r h + b_r)
//! h~ = tanh(W_h x + U_h (r ⊙ h) + b_h)
//! h' = (1 - z) ⊙ h + z ⊙ h~
//! ```
//!
//! Head: `D_t = Σ_i (hA_t,i - hB_t,i)²` for every step, then
//! `prob = σ(fc2 · relu(fc1 D + b1) + b2)`, the probability that the two
//! trajectories move differently.

use rayon::prelude::*;

use super::params::{GruParams, INPUT_DIM};
use super::AlignedPair;
use crate::scalar::Scalar;

pub(crate) fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

fn matvec<T: Scalar>(w: &[T], cols: usize, x: &[T], out: &mut [T]) {
    for (r, o) in out.iter_mut().enumerate() {
        *o = w[r * cols..(r + 1) * cols]
            .iter()
            .zip(x)
            .map(|(a, b)| *a * *b)
            .sum();
    }
}

/// Adds `wᵀ g` to `out`.
fn matvec_t_acc<T: Scalar>(w: &[T], cols: usize, g: &[T], out: &mut [T]) {
    for (r, gr) in g.iter().enumerate() {
        for (c, o) in out.iter_mut().enumerate() {
            *o += w[r * cols + c] * *gr;
        }
    }
}

/// Adds the outer product `g xᵀ` to `acc`.
fn outer_acc<T: Scalar>(acc: &mut [T], g: &[T], x: &[T]) {
    let cols = x.len();
    for (r, gr) in g.iter().enumerate() {
        for (c, xc) in x.iter().enumerate() {
            acc[r * cols + c] += *gr * *xc;
        }
    }
}

/// Intermediates of one cell update.
#[derive(Debug, Clone)]
pub struct StepCache<T> {
    pub x: [T; 2],
    pub h_prev: Vec<T>,
    pub z: Vec<T>,
    pub r: Vec<T>,
    pub candidate: Vec<T>,
    pub h: Vec<T>,
}

fn step_cached<T: Scalar>(x: [T; 2], h_prev: &[T], p: &GruParams<T>) -> StepCache<T> {
    let hd = p.dims.hidden;
    let gate = |w: &[T], u: &[T], b: &[T], hin: &[T]| {
        let mut a = vec![T::zero(); hd];
        let mut rec = vec![T::zero(); hd];
        matvec(w, INPUT_DIM, &x, &mut a);
        matvec(u, hd, hin, &mut rec);
        for i in 0..hd {
            a[i] += rec[i] + b[i];
        }
        a
    };
    let z: Vec<T> = gate(&p.w_z, &p.u_z, &p.b_z, h_prev)
        .into_iter()
        .map(sigmoid)
        .collect();
    let r: Vec<T> = gate(&p.w_r, &p.u_r, &p.b_r, h_prev)
        .into_iter()
        .map(sigmoid)
        .collect();
    let rh: Vec<T> = r.iter().zip(h_prev).map(|(a, b)| *a * *b).collect();
    let candidate: Vec<T> = gate(&p.w_h, &p.u_h, &p.b_h, &rh)
        .into_iter()
        .map(|v| v.tanh())
        .collect();
    let h = (0..hd)
        .map(|i| (T::one() - z[i]) * h_prev[i] + z[i] * candidate[i])
        .collect();
    StepCache {
        x,
        h_prev: h_prev.to_vec(),
        z,
        r,
        candidate,
        h,
    }
}

/// One GRU cell update.
pub fn gru_step<T: Scalar>(x: [T; 2], h_prev: &[T], p: &GruParams<T>) -> Vec<T> {
    step_cached(x, h_prev, p).h
}

/// Runs one leg over a sequence from `h_0 = 0`.
pub fn encode<T: Scalar>(xs: &[[T; 2]], p: &GruParams<T>) -> Vec<StepCache<T>> {
    let mut h = vec![T::zero(); p.dims.hidden];
    let mut out = Vec::with_capacity(xs.len());
    for &x in xs {
        let c = step_cached(x, &h, p);
        h.clone_from(&c.h);
        out.push(c);
    }
    out
}

/// Everything the backward pass needs.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    pub leg_a: Vec<StepCache<T>>,
    pub leg_b: Vec<StepCache<T>>,
    /// Per-step squared embedding distance.
    pub distances: Vec<T>,
    pub fc1_pre: Vec<T>,
    pub fc1_out: Vec<T>,
    pub logit: T,
    pub prob: T,
}

/// Probability that the pair moves differently, with the forward cache.
pub fn siamese_forward<T: Scalar>(pair: &AlignedPair<T>, p: &GruParams<T>) -> ForwardCache<T> {
    let dims = p.dims;
    assert_eq!(pair.xa.len(), dims.steps, "sequence a length");
    assert_eq!(pair.xb.len(), dims.steps, "sequence b length");
    let leg_a = encode(&pair.xa, p);
    let leg_b = encode(&pair.xb, p);
    let distances: Vec<T> = leg_a
        .iter()
        .zip(&leg_b)
        .map(|(a, b)| {
            a.h.iter()
                .zip(&b.h)
                .map(|(x, y)| (*x - *y) * (*x - *y))
                .sum()
        })
        .collect();
    let mut fc1_pre = vec![T::zero(); dims.head];
    matvec(&p.fc1_w, dims.steps, &distances, &mut fc1_pre);
    for (a, b) in fc1_pre.iter_mut().zip(&p.fc1_b) {
        *a += *b;
    }
    let fc1_out: Vec<T> = fc1_pre.iter().map(|a| a.max(T::zero())).collect();
    let logit = p
        .fc2_w
        .iter()
        .zip(&fc1_out)
        .map(|(w, a)| *w * *a)
        .sum::<T>()
        + p.fc2_b[0];
    ForwardCache {
        leg_a,
        leg_b,
        distances,
        fc1_pre,
        fc1_out,
        logit,
        prob: sigmoid(logit),
    }
}

/// Probability of "different motion" for a pair.
pub fn predict<T: Scalar>(pair: &AlignedPair<T>, p: &GruParams<T>) -> T {
    siamese_forward(pair, p).prob
}

fn backprop_leg<T: Scalar>(
    leg: &[StepCache<T>],
    dh_ext: &[Vec<T>],
    p: &GruParams<T>,
    g: &mut GruParams<T>,
) {
    let hd = p.dims.hidden;
    let mut carry = vec![T::zero(); hd];
    for (t, c) in leg.iter().enumerate().rev() {
        let dh: Vec<T> = (0..hd).map(|i| dh_ext[t][i] + carry[i]).collect();
        let mut dh_prev: Vec<T> = (0..hd).map(|i| dh[i] * (T::one() - c.z[i])).collect();

        // candidate branch
        let da_h: Vec<T> = (0..hd)
            .map(|i| dh[i] * c.z[i] * (T::one() - c.candidate[i] * c.candidate[i]))
            .collect();
        let rh: Vec<T> = (0..hd).map(|i| c.r[i] * c.h_prev[i]).collect();
        outer_acc(&mut g.w_h, &da_h, &c.x);
        outer_acc(&mut g.u_h, &da_h, &rh);
        for i in 0..hd {
            g.b_h[i] += da_h[i];
        }
        let mut d_rh = vec![T::zero(); hd];
        matvec_t_acc(&p.u_h, hd, &da_h, &mut d_rh);
        for i in 0..hd {
            dh_prev[i] += d_rh[i] * c.r[i];
        }

        // update gate
        let da_z: Vec<T> = (0..hd)
            .map(|i| dh[i] * (c.candidate[i] - c.h_prev[i]) * c.z[i] * (T::one() - c.z[i]))
            .collect();
        outer_acc(&mut g.w_z, &da_z, &c.x);
        outer_acc(&mut g.u_z, &da_z, &c.h_prev);
        for i in 0..hd {
            g.b_z[i] += da_z[i];
        }
        matvec_t_acc(&p.u_z, hd, &da_z, &mut dh_prev);

        // reset gate
        let da_r: Vec<T> = (0..hd)
            .map(|i| d_rh[i] * c.h_prev[i] * c.r[i] * (T::one() - c.r[i]))
            .collect();
        outer_acc(&mut g.w_r, &da_r, &c.x);
        outer_acc(&mut g.u_r, &da_r, &c.h_prev);
        for i in 0..hd {
            g.b_r[i] += da_r[i];
        }
        matvec_t_acc(&p.u_r, hd, &da_r, &mut dh_prev);

        carry = dh_prev;
    }
}

/// Accumulates into `g` the gradient of `weight * (prob - label)²`.
fn backward_pair<T: Scalar>(
    cache: &ForwardCache<T>,
    label: T,
    weight: T,
    p: &GruParams<T>,
    g: &mut GruParams<T>,
) {
    let dims = p.dims;
    let dprob = (T::one() + T::one()) * (cache.prob - label) * weight;
    let dlogit = dprob * cache.prob * (T::one() - cache.prob);
    g.fc2_b[0] += dlogit;
    for j in 0..dims.head {
        g.fc2_w[j] += dlogit * cache.fc1_out[j];
    }
    let da1: Vec<T> = (0..dims.head)
        .map(|j| {
            if cache.fc1_pre[j] > T::zero() {
                dlogit * p.fc2_w[j]
            } else {
                T::zero()
            }
        })
        .collect();
    outer_acc(&mut g.fc1_w, &da1, &cache.distances);
    for j in 0..dims.head {
        g.fc1_b[j] += da1[j];
    }
    let mut dd = vec![T::zero(); dims.steps];
    matvec_t_acc(&p.fc1_w, dims.steps, &da1, &mut dd);

    let two = T::one() + T::one();
    let mut dh_a = Vec::with_capacity(dims.steps);
    let mut dh_b = Vec::with_capacity(dims.steps);
    for t in 0..dims.steps {
        let (ha, hb) = (&cache.leg_a[t].h, &cache.leg_b[t].h);
        let da: Vec<T> = ha
            .iter()
            .zip(hb)
            .map(|(a, b)| two * (*a - *b) * dd[t])
            .collect();
        dh_b.push(da.iter().map(|v| -*v).collect());
        dh_a.push(da);
    }
    backprop_leg(&cache.leg_a, &dh_a, p, g);
    backprop_leg(&cache.leg_b, &dh_b, p, g);
}

/// Mean squared error of the batch and its exact gradient.
pub fn loss_and_gradients<T: Scalar>(
    batch: &[AlignedPair<T>],
    p: &GruParams<T>,
) -> (T, GruParams<T>) {
    assert!(!batch.is_empty(), "empty batch");
    let weight = T::one() / T::from_usize_lossy(batch.len());
    // per-pair work in parallel, reduction in batch order for determinism
    let parts: Vec<(T, GruParams<T>)> = batch
        .par_iter()
        .map(|pair| {
            let cache = siamese_forward(pair, p);
            let label = T::from_u8(pair.label).unwrap();
            let mut g = GruParams::zeros(p.dims);
            backward_pair(&cache, label, weight, p, &mut g);
            let err = cache.prob - label;
            (err * err, g)
        })
        .collect();
    let mut grads = GruParams::zeros(p.dims);
    let mut loss = T::zero();
    for (l, g) in &parts {
        loss += *l;
        grads.axpy(T::one(), g);
    }
    (loss * weight, grads)
}

/// Mean squared error only.
pub fn batch_loss<T: Scalar>(batch: &[AlignedPair<T>], p: &GruParams<T>) -> T {
    let total: T = batch
        .iter()
        .map(|pair| {
            let e = predict(pair, p) - T::from_u8(pair.label).unwrap();
            e * e
        })
        .sum();
    total / T::from_usize_lossy(batch.len())
}

/// Fraction of pairs classified correctly at threshold 0.5.
pub fn accuracy<T: Scalar>(pairs: &[AlignedPair<T>], p: &GruParams<T>) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let half = T::lit(0.5);
    let correct = pairs
        .par_iter()
        .filter(|pair| (predict(pair, p) > half) == (pair.label == 1))
        .count();
    correct as f64 / pairs.len() as f64
}
