//! Pairwise motion distances, the sparse trajectory graph and the mapping
//! from distances or learned probabilities to signed multicut costs.
//!
//! Cost convention: positive costs are attractive (cutting them is
//! penalized), negative costs are repulsive.

use rayon::prelude::*;
use thiserror::Error;

use crate::flowio::FlowField;
use crate::scalar::Scalar;
use crate::tracker::{Trajectory, TrajectorySet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AffinityError {
    #[error("frame {frame} outside the lifetime of trajectory {id}")]
    OutOfLifetime { id: usize, frame: usize },
    #[error("trajectories {a} and {b} share no derivative step")]
    NoOverlap { a: usize, b: usize },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
}

pub type Result<T> = std::result::Result<T, AffinityError>;

/// Largest magnitude of any edge cost.
pub const COST_CLAMP: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<T> {
    pub u: usize,
    pub v: usize,
    pub cost: T,
}

/// Undirected weighted graph over trajectories, edges sorted by `(u, v)`
/// with `u < v`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityGraph<T> {
    node_count: usize,
    edges: Vec<Edge<T>>,
    node_meta: Vec<usize>,
}

impl<T: Scalar> AffinityGraph<T> {
    /// Builds a graph whose node `i` stands for trajectory id `i`.
    pub fn new(node_count: usize, edges: Vec<Edge<T>>) -> Result<Self> {
        Self::with_meta(node_count, edges, (0..node_count).collect())
    }

    /// Builds a graph with explicit trajectory ids per node. Edges may come in
    /// any order and orientation; they are canonicalized to `u < v` and
    /// sorted.
    pub fn with_meta(
        node_count: usize,
        edges: Vec<Edge<T>>,
        node_meta: Vec<usize>,
    ) -> Result<Self> {
        if node_meta.len() != node_count {
            return Err(AffinityError::InvalidGraph(format!(
                "{} node ids for {node_count} nodes",
                node_meta.len()
            )));
        }
        let mut edges: Vec<Edge<T>> = edges
            .into_iter()
            .map(|e| Edge {
                u: e.u.min(e.v),
                v: e.u.max(e.v),
                cost: e.cost,
            })
            .collect();
        for e in &edges {
            if e.u == e.v {
                return Err(AffinityError::InvalidGraph(format!("self-loop at {}", e.u)));
            }
            if e.v >= node_count {
                return Err(AffinityError::InvalidGraph(format!(
                    "edge ({}, {}) references a missing node",
                    e.u, e.v
                )));
            }
            if !e.cost.is_finite() {
                return Err(AffinityError::InvalidGraph(format!(
                    "non-finite cost on ({}, {})",
                    e.u, e.v
                )));
            }
        }
        edges.sort_by_key(|e| (e.u, e.v));
        if let Some(w) = edges
            .windows(2)
            .find(|w| (w[0].u, w[0].v) == (w[1].u, w[1].v))
        {
            return Err(AffinityError::InvalidGraph(format!(
                "duplicate edge ({}, {})",
                w[0].u, w[0].v
            )));
        }
        Ok(Self {
            node_count,
            edges,
            node_meta,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn node_meta(&self) -> &[usize] {
        &self.node_meta
    }

    /// Same topology with new costs, one per edge in order.
    pub fn with_costs(&self, costs: Vec<T>) -> Result<Self> {
        if costs.len() != self.edges.len() {
            return Err(AffinityError::InvalidGraph(format!(
                "{} costs for {} edges",
                costs.len(),
                self.edges.len()
            )));
        }
        if let Some(c) = costs.iter().find(|c| !c.is_finite()) {
            return Err(AffinityError::InvalidGraph(format!("non-finite cost {c}")));
        }
        let edges = self
            .edges
            .iter()
            .zip(costs)
            .map(|(e, cost)| Edge { cost, ..*e })
            .collect();
        Ok(Self {
            node_count: self.node_count,
            edges,
            node_meta: self.node_meta.clone(),
        })
    }

    /// Adjacency lists `(neighbor, cost)`.
    pub fn adjacency(&self) -> Vec<Vec<(usize, T)>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for e in &self.edges {
            adj[e.u].push((e.v, e.cost));
            adj[e.v].push((e.u, e.cost));
        }
        adj
    }
}

/// Normalizer of frame-wise motion differences.
pub trait SigmaProvider<T>: Sync {
    /// Scale at frame `frame` for the points `a` and `b` (positions at that
    /// frame). Must be strictly positive.
    fn sigma(&self, frame: usize, a: [T; 2], b: [T; 2]) -> T;
}

/// Same normalizer everywhere.
#[derive(Debug, Clone, Copy)]
pub struct ConstantSigma<T>(pub T);

impl<T: Scalar> SigmaProvider<T> for ConstantSigma<T> {
    fn sigma(&self, _frame: usize, _a: [T; 2], _b: [T; 2]) -> T {
        self.0
    }
}

/// Local flow variation around the two points, see [`sigma_t`].
#[derive(Debug, Clone, Copy)]
pub struct FlowSigma<'a, T> {
    pub flows: &'a [FlowField],
    pub radius: usize,
    pub eps: T,
}

impl<T: Scalar> SigmaProvider<T> for FlowSigma<'_, T> {
    fn sigma(&self, frame: usize, a: [T; 2], b: [T; 2]) -> T {
        sigma_t(&self.flows[frame], a, b, self.radius, self.eps)
    }
}

/// Forward difference of the trajectory's position at absolute frame `f`.
pub fn motion_derivative<T: Scalar>(t: &Trajectory<T>, f: usize) -> Result<[T; 2]> {
    match (t.position_at(f), t.position_at(f + 1)) {
        (Some(p), Some(q)) => Ok([q[0] - p[0], q[1] - p[1]]),
        _ => Err(AffinityError::OutOfLifetime { id: t.id, frame: f }),
    }
}

/// Root-mean-square deviation of the flow from its mean over the
/// `(2r+1)²` window centered at `round(p)`, clipped to the image.
pub fn local_flow_deviation<T: Scalar>(flow: &FlowField, p: [T; 2], radius: usize) -> T {
    let round = |v: T, max: usize| -> usize {
        v.round().to_i64().unwrap_or(0).clamp(0, max as i64 - 1) as usize
    };
    let cx = round(p[0], flow.width());
    let cy = round(p[1], flow.height());
    let (x0, x1) = (
        cx.saturating_sub(radius),
        (cx + radius).min(flow.width() - 1),
    );
    let (y0, y1) = (
        cy.saturating_sub(radius),
        (cy + radius).min(flow.height() - 1),
    );
    let n = T::from_usize_lossy((x1 - x0 + 1) * (y1 - y0 + 1));
    let sample = |x, y| {
        let [u, v] = flow.get(x, y);
        [T::lit(u as f64), T::lit(v as f64)]
    };
    let mut mean = [T::zero(); 2];
    for y in y0..=y1 {
        for x in x0..=x1 {
            let s = sample(x, y);
            mean[0] += s[0];
            mean[1] += s[1];
        }
    }
    mean = [mean[0] / n, mean[1] / n];
    let mut var = T::zero();
    for y in y0..=y1 {
        for x in x0..=x1 {
            let s = sample(x, y);
            let (du, dv) = (s[0] - mean[0], s[1] - mean[1]);
            var += du * du + dv * dv;
        }
    }
    (var / n).sqrt()
}

/// Flow-variation normalizer: `eps + min(s(a), s(b))` with `s` the local
/// flow deviation.
pub fn sigma_t<T: Scalar>(flow: &FlowField, a: [T; 2], b: [T; 2], radius: usize, eps: T) -> T {
    let sa = local_flow_deviation(flow, a, radius);
    let sb = local_flow_deviation(flow, b, radius);
    eps + sa.min(sb)
}

/// Normalized difference of the two motion derivatives at frame `t`.
pub fn dist_t<T: Scalar>(a: &Trajectory<T>, b: &Trajectory<T>, t: usize, sigma: T) -> Result<T> {
    let no_overlap = || AffinityError::NoOverlap { a: a.id, b: b.id };
    let da = motion_derivative(a, t).map_err(|_| no_overlap())?;
    let db = motion_derivative(b, t).map_err(|_| no_overlap())?;
    let (dx, dy) = (da[0] - db[0], da[1] - db[1]);
    Ok((dx * dx + dy * dy).sqrt() / sigma)
}

/// Frames `first..last` at which both trajectories have a forward derivative.
pub fn shared_steps<T: Scalar>(a: &Trajectory<T>, b: &Trajectory<T>) -> std::ops::Range<usize> {
    let first = a.start_frame.max(b.start_frame);
    let last = a.end_frame().min(b.end_frame());
    first..last.max(first)
}

/// Frame-wise distances over the joint lifetime; returns the first shared
/// frame and one distance per shared derivative step.
pub fn step_distances<T: Scalar>(
    a: &Trajectory<T>,
    b: &Trajectory<T>,
    sigma: &impl SigmaProvider<T>,
) -> Result<(usize, Vec<T>)> {
    let steps = shared_steps(a, b);
    if steps.is_empty() {
        return Err(AffinityError::NoOverlap { a: a.id, b: b.id });
    }
    let first = steps.start;
    let d = steps
        .map(|t| {
            let s = sigma.sigma(t, a.position_at(t).unwrap(), b.position_at(t).unwrap());
            dist_t(a, b, t, s)
        })
        .collect::<Result<Vec<T>>>()?;
    Ok((first, d))
}

/// Maximum of the frame-wise distances over the joint lifetime.
pub fn motion_distance<T: Scalar>(
    a: &Trajectory<T>,
    b: &Trajectory<T>,
    sigma: &impl SigmaProvider<T>,
) -> Result<T> {
    let (_, d) = step_distances(a, b, sigma)?;
    Ok(d.into_iter().fold(T::zero(), T::max))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphParams {
    /// Largest spatial distance (pixels) at which two trajectories are linked.
    pub d_max: f64,
    /// Minimum number of shared derivative steps.
    pub min_overlap: usize,
}

impl Default for GraphParams {
    fn default() -> Self {
        Self {
            d_max: 30.0,
            min_overlap: 1,
        }
    }
}

fn min_spatial_distance<T: Scalar>(a: &Trajectory<T>, b: &Trajectory<T>) -> Option<T> {
    let first = a.start_frame.max(b.start_frame);
    let last = a.end_frame().min(b.end_frame());
    (first..=last)
        .map(|f| {
            let (p, q) = (a.position_at(f).unwrap(), b.position_at(f).unwrap());
            let (dx, dy) = (p[0] - q[0], p[1] - q[1]);
            (dx * dx + dy * dy).sqrt()
        })
        .reduce(T::min)
}

/// Links trajectories that overlap for at least `min_overlap` derivative
/// steps and come within `d_max` pixels of each other. Costs are zero.
pub fn build_graph<T: Scalar>(ts: &TrajectorySet<T>, params: &GraphParams) -> AffinityGraph<T> {
    let trajs = &ts.trajectories;
    let d_max = T::lit(params.d_max);
    let min_overlap = params.min_overlap.max(1);
    let edges: Vec<Edge<T>> = (0..trajs.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let a = &trajs[i];
            (i + 1..trajs.len()).filter_map(move |j| {
                let b = &trajs[j];
                if shared_steps(a, b).len() < min_overlap {
                    return None;
                }
                let close = min_spatial_distance(a, b).is_some_and(|d| d <= d_max);
                close.then_some(Edge {
                    u: i,
                    v: j,
                    cost: T::zero(),
                })
            })
        })
        .collect();
    let meta = trajs.iter().map(|t| t.id).collect();
    AffinityGraph::with_meta(trajs.len(), edges, meta).expect("generated edges are canonical")
}

fn clamp_cost<T: Scalar>(c: T) -> T {
    let m = T::lit(COST_CLAMP);
    c.max(-m).min(m)
}

/// `theta - d`, clamped to `[-10, 10]`.
pub fn cost_from_distance<T: Scalar>(d: T, theta: T) -> T {
    clamp_cost(theta - d)
}

/// Log-odds of "same motion" given the probability `p` of "different
/// motion", clamped to `[-10, 10]`.
pub fn cost_from_probability<T: Scalar>(p: T) -> T {
    let lo = T::lit(1e-6);
    let p = p.max(lo).min(T::one() - lo);
    clamp_cost(((T::one() - p) / p).ln())
}

/// Assigns translational-motion costs to every edge of `graph`.
/// Node `i` of the graph must be `ts.trajectories[i]`.
pub fn translational_costs<T: Scalar>(
    graph: &AffinityGraph<T>,
    ts: &TrajectorySet<T>,
    sigma: &impl SigmaProvider<T>,
    theta: T,
) -> Result<AffinityGraph<T>> {
    let costs = graph
        .edges()
        .par_iter()
        .map(|e| {
            let d = motion_distance(&ts.trajectories[e.u], &ts.trajectories[e.v], sigma)?;
            Ok(cost_from_distance(d, theta))
        })
        .collect::<Result<Vec<T>>>()?;
    graph.with_costs(costs)
}
