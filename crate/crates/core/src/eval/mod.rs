//! Segmentation metrics: Jaccard, FBMS-style precision/recall/F with a
//! one-to-one cluster-to-region matching, and sparse label density.

mod hungarian;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

pub use hungarian::max_weight_assignment;

use crate::densify::SparseFrameLabels;
use crate::flowio::{LabelMap, VOID};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("dimension mismatch: prediction {pred:?}, ground truth {gt:?}")]
    DimMismatch {
        pred: (usize, usize),
        gt: (usize, usize),
    },
    #[error("no frames to evaluate")]
    NoFrames,
}

pub type Result<T> = std::result::Result<T, EvalError>;

fn same_dims(pred: &LabelMap, gt: &LabelMap) -> Result<()> {
    if pred.dims() != gt.dims() {
        return Err(EvalError::DimMismatch {
            pred: pred.dims(),
            gt: gt.dims(),
        });
    }
    Ok(())
}

/// Intersection over union of the `fg_label` pixels of both maps. Two empty
/// masks score 1.
pub fn jaccard_binary(pred: &LabelMap, gt: &LabelMap, fg_label: u32) -> Result<f64> {
    same_dims(pred, gt)?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&p, &g) in pred.labels().iter().zip(gt.labels()) {
        let (a, b) = (p == fg_label, g == fg_label);
        inter += (a && b) as usize;
        union += (a || b) as usize;
    }
    Ok(if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    })
}

/// Maps every non-void label other than `background` to 2 and `background`
/// to 1.
pub fn foreground_mask(map: &LabelMap, background: u32) -> LabelMap {
    let labels = map
        .labels()
        .iter()
        .map(|&l| match l {
            VOID => VOID,
            l if l == background => 1,
            _ => 2,
        })
        .collect();
    LabelMap::new(map.width(), map.height(), labels).expect("same dimensions")
}

/// Pixel co-occurrence counts of predicted clusters and gt regions,
/// accumulated over any number of frames. Pixels void on either side are
/// skipped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Contingency {
    pub counts: BTreeMap<(u32, u32), i64>,
    pub cluster_sizes: BTreeMap<u32, i64>,
    pub region_sizes: BTreeMap<u32, i64>,
}

impl Contingency {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, pred: &LabelMap, gt: &LabelMap) -> Result<()> {
        same_dims(pred, gt)?;
        for (&p, &g) in pred.labels().iter().zip(gt.labels()) {
            if p == VOID || g == VOID {
                continue;
            }
            *self.counts.entry((p, g)).or_default() += 1;
            *self.cluster_sizes.entry(p).or_default() += 1;
            *self.region_sizes.entry(g).or_default() += 1;
        }
        Ok(())
    }

    pub fn from_pair(pred: &LabelMap, gt: &LabelMap) -> Result<Self> {
        let mut c = Self::new();
        c.add(pred, gt)?;
        Ok(c)
    }

    /// One-to-one cluster/region pairs maximizing the total overlap.
    pub fn matching(&self) -> Vec<(u32, u32)> {
        let clusters: Vec<u32> = self.cluster_sizes.keys().copied().collect();
        let regions: Vec<u32> = self.region_sizes.keys().copied().collect();
        let mut w = vec![0i64; clusters.len() * regions.len()];
        for (i, c) in clusters.iter().enumerate() {
            for (j, g) in regions.iter().enumerate() {
                w[i * regions.len() + j] = self.counts.get(&(*c, *g)).copied().unwrap_or(0);
            }
        }
        max_weight_assignment(&w, clusters.len(), regions.len())
            .into_iter()
            .enumerate()
            .filter_map(|(i, j)| j.map(|j| (clusters[i], regions[j])))
            .collect()
    }
}

fn f_measure(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairScore {
    pub cluster: u32,
    pub region: u32,
    pub intersection: i64,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
    /// Matched pairs ordered by region.
    pub pairs: Vec<PairScore>,
    pub extracted_objects: usize,
}

/// Per-pair F at which a gt object counts as extracted.
pub const EXTRACTED_F: f64 = 0.75;

/// Precision, recall and F of the best one-to-one matching.
/// `background` names the gt region that is not an object.
pub fn prf_from_contingency(c: &Contingency, background: u32) -> Prf {
    let mut pairs: Vec<PairScore> = c
        .matching()
        .into_iter()
        .map(|(cl, g)| {
            let inter = c.counts.get(&(cl, g)).copied().unwrap_or(0);
            let p = inter as f64 / c.cluster_sizes[&cl] as f64;
            let r = inter as f64 / c.region_sizes[&g] as f64;
            PairScore {
                cluster: cl,
                region: g,
                intersection: inter,
                f: f_measure(p, r),
            }
        })
        .collect();
    pairs.sort_by_key(|p| p.region);
    let matched: i64 = pairs.iter().map(|p| p.intersection).sum();
    let total_pred: i64 = c.cluster_sizes.values().sum();
    let total_gt: i64 = c.region_sizes.values().sum();
    let ratio = |a: i64, b: i64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(matched, total_pred);
    let recall = ratio(matched, total_gt);
    let extracted_objects = pairs
        .iter()
        .filter(|p| p.region != background && p.f >= EXTRACTED_F)
        .count();
    Prf {
        precision,
        recall,
        f: f_measure(precision, recall),
        pairs,
        extracted_objects,
    }
}

pub fn fbms_prf(pred: &LabelMap, gt: &LabelMap, background: u32) -> Result<Prf> {
    Ok(prf_from_contingency(
        &Contingency::from_pair(pred, gt)?,
        background,
    ))
}

/// Seeds per gt-annotated pixel, averaged over the frames with gt.
/// `gt[k]` belongs to `seeds[k]`.
pub fn sparse_density(seeds: &[SparseFrameLabels], gt: &[LabelMap]) -> f64 {
    let per_frame: Vec<f64> = seeds
        .iter()
        .zip(gt)
        .map(|(s, g)| {
            let annotated = g.labels().iter().filter(|&&l| l != VOID).count();
            let labeled = s
                .seeds
                .iter()
                .filter(|&&(x, y, _)| x < g.width() && y < g.height() && g.get(x, y) != VOID)
                .count();
            if annotated == 0 {
                0.0
            } else {
                labeled as f64 / annotated as f64
            }
        })
        .collect();
    if per_frame.is_empty() {
        0.0
    } else {
        per_frame.iter().sum::<f64>() / per_frame.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectScore {
    pub region: u32,
    /// Predicted cluster matched over the whole sequence, if any.
    pub cluster: Option<u32>,
    pub mean_jaccard: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// `(frame, Jaccard)` of the binary foreground.
    pub jaccard: Vec<(usize, f64)>,
    pub mean_jaccard: f64,
    pub prf: Prf,
    pub objects: Vec<ObjectScore>,
    pub density: Option<f64>,
}

/// Scores predicted maps against gt maps frame by frame. The cluster to
/// region matching is computed once over all frames, so cluster ids must be
/// consistent across the sequence. Label 1 of the prediction is its
/// background; `background` is the gt background label.
pub fn evaluate_sequence(
    frames: &[(usize, LabelMap, LabelMap)],
    background: u32,
    density: Option<f64>,
) -> Result<EvalReport> {
    if frames.is_empty() {
        return Err(EvalError::NoFrames);
    }
    let mut c = Contingency::new();
    let mut jaccard = Vec::with_capacity(frames.len());
    for (f, pred, gt) in frames {
        c.add(pred, gt)?;
        let j = jaccard_binary(
            &foreground_mask(pred, 1),
            &foreground_mask(gt, background),
            2,
        )?;
        jaccard.push((*f, j));
    }
    let prf = prf_from_contingency(&c, background);
    let mut objects = Vec::new();
    for &region in c.region_sizes.keys().filter(|&&g| g != background) {
        let cluster = prf
            .pairs
            .iter()
            .find(|p| p.region == region)
            .map(|p| p.cluster);
        let mut sum = 0.0;
        for (_, pred, gt) in frames {
            sum += match cluster {
                Some(cl) => {
                    let p = LabelMap::new(
                        pred.width(),
                        pred.height(),
                        pred.labels().iter().map(|&l| (l == cl) as u32).collect(),
                    )
                    .expect("same dimensions");
                    let g = LabelMap::new(
                        gt.width(),
                        gt.height(),
                        gt.labels().iter().map(|&l| (l == region) as u32).collect(),
                    )
                    .expect("same dimensions");
                    jaccard_binary(&p, &g, 1)?
                }
                None => 0.0,
            };
        }
        objects.push(ObjectScore {
            region,
            cluster,
            mean_jaccard: sum / frames.len() as f64,
        });
    }
    let mean_jaccard = jaccard.iter().map(|j| j.1).sum::<f64>() / jaccard.len() as f64;
    Ok(EvalReport {
        jaccard,
        mean_jaccard,
        prf,
        objects,
        density,
    })
}

impl EvalReport {
    /// Human-readable table.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{:<20}{:>10}", "frame", "jaccard").unwrap();
        for (f, j) in &self.jaccard {
            writeln!(s, "{f:<20}{j:>10.4}").unwrap();
        }
        writeln!(s, "{:<20}{:>10.4}", "mean", self.mean_jaccard).unwrap();
        writeln!(s).unwrap();
        writeln!(s, "{:<20}{:>10.4}", "precision", self.prf.precision).unwrap();
        writeln!(s, "{:<20}{:>10.4}", "recall", self.prf.recall).unwrap();
        writeln!(s, "{:<20}{:>10.4}", "f", self.prf.f).unwrap();
        writeln!(
            s,
            "{:<20}{:>10}",
            "extracted_objects", self.prf.extracted_objects
        )
        .unwrap();
        for o in &self.objects {
            let name = format!("object {}", o.region);
            writeln!(s, "{name:<20}{:>10.4}", o.mean_jaccard).unwrap();
        }
        if let Some(d) = self.density {
            writeln!(s, "{:<20}{:>10.6}", "density", d).unwrap();
        }
        s
    }

    /// One `metric=value` line per metric.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        for (f, j) in &self.jaccard {
            writeln!(s, "jaccard.{f}={j}").unwrap();
        }
        writeln!(s, "mean_jaccard={}", self.mean_jaccard).unwrap();
        writeln!(s, "precision={}", self.prf.precision).unwrap();
        writeln!(s, "recall={}", self.prf.recall).unwrap();
        writeln!(s, "f={}", self.prf.f).unwrap();
        writeln!(s, "extracted_objects={}", self.prf.extracted_objects).unwrap();
        for o in &self.objects {
            writeln!(s, "object_jaccard.{}={}", o.region, o.mean_jaccard).unwrap();
        }
        if let Some(d) = self.density {
            writeln!(s, "density={d}").unwrap();
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(w: usize, h: usize, f: impl Fn(usize, usize) -> u32) -> LabelMap {
        let mut v = Vec::new();
        for y in 0..h {
            for x in 0..w {
                v.push(f(x, y));
            }
        }
        LabelMap::new(w, h, v).unwrap()
    }

    #[test]
    fn jaccard_examples() {
        let full = map(8, 6, |_, _| 2);
        let left = map(8, 6, |x, _| if x < 4 { 2 } else { 1 });
        let right = map(8, 6, |x, _| if x >= 4 { 2 } else { 1 });
        assert_eq!(jaccard_binary(&left, &left, 2).unwrap(), 1.0);
        assert_eq!(jaccard_binary(&left, &right, 2).unwrap(), 0.0);
        assert_eq!(jaccard_binary(&left, &full, 2).unwrap(), 0.5);
        let empty = map(8, 6, |_, _| 1);
        assert_eq!(jaccard_binary(&empty, &empty, 2).unwrap(), 1.0);
        assert_eq!(jaccard_binary(&empty, &left, 2).unwrap(), 0.0);
        assert!(jaccard_binary(&empty, &map(6, 8, |_, _| 1), 2).is_err());
    }

    #[test]
    fn perfect_prediction() {
        let gt = map(10, 10, |x, y| {
            if x < 3 {
                2
            } else if y < 4 {
                3
            } else {
                1
            }
        });
        let r = fbms_prf(&gt, &gt, 1).unwrap();
        assert_eq!((r.precision, r.recall, r.f), (1.0, 1.0, 1.0));
        assert_eq!(r.extracted_objects, 2);
    }

    #[test]
    fn single_cluster_against_sixty_forty() {
        let gt = map(10, 10, |x, _| if x < 6 { 1 } else { 2 });
        let pred = map(10, 10, |_, _| 7);
        let r = fbms_prf(&pred, &gt, 1).unwrap();
        assert_eq!(r.pairs.len(), 1);
        assert_eq!((r.pairs[0].cluster, r.pairs[0].region), (7, 1));
        assert!((r.precision - 0.6).abs() < 1e-15);
        assert!((r.recall - 0.6).abs() < 1e-15);
        assert!((r.f - 0.6).abs() < 1e-15);
        assert_eq!(r.extracted_objects, 0);
    }

    #[test]
    fn void_pixels_are_ignored() {
        let gt = map(4, 4, |x, _| if x == 0 { VOID } else { 2 });
        let pred = map(4, 4, |x, _| if x == 0 { 5 } else { 3 });
        let r = fbms_prf(&pred, &gt, 1).unwrap();
        assert_eq!((r.precision, r.recall), (1.0, 1.0));
    }

    #[test]
    fn density_on_a_grid() {
        let gt = map(64, 64, |_, _| 1);
        let seeds = SparseFrameLabels {
            frame: 0,
            seeds: (0..8)
                .flat_map(|i| (0..8).map(move |j| (i * 8 + 4, j * 8 + 4, 1)))
                .collect(),
        };
        assert_eq!(sparse_density(&[seeds], &[gt.clone()]), 1.0 / 64.0);
        let none = SparseFrameLabels {
            frame: 0,
            seeds: vec![],
        };
        assert_eq!(sparse_density(&[none], &[gt.clone()]), 0.0);
        let all = SparseFrameLabels {
            frame: 0,
            seeds: (0..64)
                .flat_map(|x| (0..64).map(move |y| (x, y, 1)))
                .collect(),
        };
        assert_eq!(sparse_density(&[all], &[gt]), 1.0);
    }

    #[test]
    fn sequence_report() {
        let gt = map(10, 10, |x, y| if x < 3 && y < 3 { 2 } else { 1 });
        let pred = map(10, 10, |x, y| if x < 3 && y < 2 { 4 } else { 1 });
        let r = evaluate_sequence(
            &[(0, pred.clone(), gt.clone()), (1, pred, gt)],
            1,
            Some(0.25),
        )
        .unwrap();
        assert_eq!(r.objects.len(), 1);
        assert_eq!(r.objects[0].cluster, Some(4));
        assert!((r.objects[0].mean_jaccard - 6.0 / 9.0).abs() < 1e-12);
        assert!((r.mean_jaccard - 6.0 / 9.0).abs() < 1e-12);
        let kv = r.to_kv();
        // P = 1, R = 6/9 gives F = 0.8
        assert!(kv.contains("extracted_objects=1\n"));
        assert!(kv.contains("density=0.25\n"));
        assert!(r.to_text().contains("precision"));
    }
}
