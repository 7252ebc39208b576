use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

/// Input width of the recurrent cell: one `(dx, dy)` derivative per step.
pub const INPUT_DIM: usize = 2;

/// Names of the parameter tensors in serialization order.
pub const TENSOR_NAMES: [&str; 13] = [
    "W_z", "U_z", "b_z", "W_r", "U_r", "b_r", "W_h", "U_h", "b_h", "fc1_w", "fc1_b", "fc2_w",
    "fc2_b",
];

/// Layer sizes of the Siamese model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GruDims {
    /// Hidden units of the recurrent cell.
    pub hidden: usize,
    /// Time steps per aligned sequence.
    pub steps: usize,
    /// Width of the first fully connected layer.
    pub head: usize,
}

impl Default for GruDims {
    fn default() -> Self {
        Self {
            hidden: 2,
            steps: 25,
            head: 8,
        }
    }
}

impl GruDims {
    /// `(rows, cols)` of each tensor, in [`TENSOR_NAMES`] order.
    pub fn shapes(&self) -> [(usize, usize); 13] {
        let (h, n, k) = (self.hidden, self.steps, self.head);
        [
            (h, INPUT_DIM),
            (h, h),
            (h, 1),
            (h, INPUT_DIM),
            (h, h),
            (h, 1),
            (h, INPUT_DIM),
            (h, h),
            (h, 1),
            (k, n),
            (k, 1),
            (1, k),
            (1, 1),
        ]
    }
}

/// Weights shared by both legs of the Siamese GRU plus the two-layer head.
/// Matrices are row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GruParams<T> {
    pub dims: GruDims,
    pub w_z: Vec<T>,
    pub u_z: Vec<T>,
    pub b_z: Vec<T>,
    pub w_r: Vec<T>,
    pub u_r: Vec<T>,
    pub b_r: Vec<T>,
    pub w_h: Vec<T>,
    pub u_h: Vec<T>,
    pub b_h: Vec<T>,
    pub fc1_w: Vec<T>,
    pub fc1_b: Vec<T>,
    pub fc2_w: Vec<T>,
    pub fc2_b: Vec<T>,
}

impl<T: Scalar> GruParams<T> {
    pub fn zeros(dims: GruDims) -> Self {
        let s = dims.shapes();
        let z = |i: usize| vec![T::zero(); s[i].0 * s[i].1];
        Self {
            dims,
            w_z: z(0),
            u_z: z(1),
            b_z: z(2),
            w_r: z(3),
            u_r: z(4),
            b_r: z(5),
            w_h: z(6),
            u_h: z(7),
            b_h: z(8),
            fc1_w: z(9),
            fc1_b: z(10),
            fc2_w: z(11),
            fc2_b: z(12),
        }
    }

    /// Every parameter drawn uniformly from `[-scale, scale]`.
    pub fn uniform(dims: GruDims, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::zeros(dims);
        for t in p.tensors_mut() {
            for v in t.iter_mut() {
                *v = T::lit(rng.gen_range(-scale..=scale));
            }
        }
        p
    }

    pub fn tensors(&self) -> [&[T]; 13] {
        [
            &self.w_z,
            &self.u_z,
            &self.b_z,
            &self.w_r,
            &self.u_r,
            &self.b_r,
            &self.w_h,
            &self.u_h,
            &self.b_h,
            &self.fc1_w,
            &self.fc1_b,
            &self.fc2_w,
            &self.fc2_b,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<T>; 13] {
        [
            &mut self.w_z,
            &mut self.u_z,
            &mut self.b_z,
            &mut self.w_r,
            &mut self.u_r,
            &mut self.b_r,
            &mut self.w_h,
            &mut self.u_h,
            &mut self.b_h,
            &mut self.fc1_w,
            &mut self.fc1_b,
            &mut self.fc2_w,
            &mut self.fc2_b,
        ]
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// All parameters flattened in serialization order.
    pub fn flatten(&self) -> Vec<T> {
        self.tensors().concat()
    }

    /// Inverse of [`flatten`](Self::flatten).
    pub fn set_flat(&mut self, values: &[T]) {
        assert_eq!(values.len(), self.param_count(), "flat parameter length");
        let mut off = 0;
        for t in self.tensors_mut() {
            let n = t.len();
            t.copy_from_slice(&values[off..off + n]);
            off += n;
        }
    }

    /// `self += scale * other`, tensor by tensor.
    pub fn axpy(&mut self, scale: T, other: &Self) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * *s;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|v| v.is_finite()))
    }
}
