//! File-based pipeline stages. Every stage reads its inputs from disk and
//! writes its outputs to disk, so any stage can be rerun on its own.
//!
//! Per-frame files are named `<seq>_<index:05>.<ext>`. Forward flow file `t`
//! maps frame `t` to `t + 1`; backward flow file `t + 1` maps frame `t + 1`
//! back to `t`. Trajectory frame 0 is the first forward flow (or frame) file.

mod config;

use std::fmt;
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;

pub use config::{CostModel, PipelineConfig};

use crate::affinity::{build_graph, translational_costs, AffinityGraph, FlowSigma, GraphParams};
use crate::densify::{
    geodesic_densify, overlay, rasterize_sparse_labels, seed_map, select_labels, SparseFrameLabels,
};
use crate::eval::{evaluate_sequence, sparse_density, EvalReport};
use crate::flowio::{
    read_flo, read_grf, read_labelmap, read_pnm, read_spl, read_trj, write_flo, write_grf,
    write_labelmap, write_pnm, write_spl, write_trj, FlowField, Image, LabelMap, Palette,
    SparseLabels, VOID,
};
use crate::gru::{learned_costs, read_checkpoint, sample_training_pairs, train, write_checkpoint};
use crate::multicut::decompose;
use crate::synth::{generate, SynthParams};
use crate::tracker::{track_sequence, TrajectorySet};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineError {
    pub stage: &'static str,
    /// Short error class: `io`, `format`, `config`, or the failing module.
    pub kind: &'static str,
    pub msg: String,
}

impl PipelineError {
    pub fn new(stage: &'static str, kind: &'static str, msg: impl Into<String>) -> Self {
        Self {
            stage,
            kind,
            msg: msg.into(),
        }
    }
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "stage={} kind={} msg={}",
            self.stage,
            self.kind,
            self.msg.replace('\n', " ")
        )
    }
}

impl std::error::Error for PipelineError {}

pub type Result<T> = std::result::Result<T, PipelineError>;

/// Output locations inside `out_dir`.
#[derive(Debug, Clone, PartialEq)]
pub struct Paths {
    pub trajectories: PathBuf,
    pub graph: PathBuf,
    pub model: PathBuf,
    pub learned_graph: PathBuf,
    pub labels: PathBuf,
    pub dense_dir: PathBuf,
    pub overlay_dir: PathBuf,
    pub sparse_dir: PathBuf,
    pub report: PathBuf,
    pub metrics: PathBuf,
}

impl Paths {
    pub fn new(out: &Path) -> Self {
        Self {
            trajectories: out.join("trajectories.trj"),
            graph: out.join("graph.grf"),
            model: out.join("gru.grup"),
            learned_graph: out.join("graph_learned.grf"),
            labels: out.join("labels.spl"),
            dense_dir: out.join("dense"),
            overlay_dir: out.join("overlay"),
            sparse_dir: out.join("sparse"),
            report: out.join("report.txt"),
            metrics: out.join("metrics.txt"),
        }
    }

    /// Graph the `cluster` stage reads under `model`.
    pub fn costed_graph(&self, model: CostModel) -> &Path {
        match model {
            CostModel::Gru => &self.learned_graph,
            CostModel::Translational => &self.graph,
        }
    }
}

pub fn frame_file_name(seq: &str, index: usize, ext: &str) -> String {
    format!("{seq}_{index:05}.{ext}")
}

fn io_err(stage: &'static str, path: &Path, e: impl fmt::Display) -> PipelineError {
    PipelineError::new(stage, "io", format!("{}: {e}", path.display()))
}

fn format_err(stage: &'static str, path: &Path, e: impl fmt::Display) -> PipelineError {
    PipelineError::new(stage, "format", format!("{}: {e}", path.display()))
}

fn read_bytes(stage: &'static str, path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| io_err(stage, path, e))
}

fn read_text(stage: &'static str, path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| io_err(stage, path, e))
}

fn write_file(stage: &'static str, path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_err(stage, dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| io_err(stage, path, e))
}

/// Trailing decimal digits of a file stem.
fn trailing_index(stem: &str) -> Option<usize> {
    let digits = stem.len() - stem.trim_end_matches(|c: char| c.is_ascii_digit()).len();
    if digits == 0 {
        return None;
    }
    stem[stem.len() - digits..].parse().ok()
}

/// Files of `dir` with one of `exts`, keyed by the index at the end of their
/// name and sorted by it.
pub fn list_indexed(
    stage: &'static str,
    dir: &Path,
    exts: &[&str],
) -> Result<Vec<(usize, PathBuf)>> {
    let entries = std::fs::read_dir(dir).map_err(|e| io_err(stage, dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| io_err(stage, dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        if !path.is_file() || !exts.contains(&ext) {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
        let Some(index) = trailing_index(stem) else {
            return Err(format_err(stage, &path, "file name has no frame index"));
        };
        files.push((index, path));
    }
    files.sort();
    if let Some(w) = files.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(format_err(
            stage,
            &w[1].1,
            format_args!("duplicate frame index {}", w[0].0),
        ));
    }
    if files.is_empty() {
        return Err(io_err(
            stage,
            dir,
            format_args!("no .{} files", exts.join("/.")),
        ));
    }
    Ok(files)
}

/// Forward flows, their first file index, and the backward flows if present.
struct Flows {
    base: usize,
    fwd: Vec<FlowField>,
    bwd: Option<Vec<FlowField>>,
}

impl Flows {
    fn dims(&self) -> (usize, usize) {
        self.fwd[0].dims()
    }
}

fn load_flow_dir(stage: &'static str, dir: &Path) -> Result<Vec<(usize, FlowField)>> {
    list_indexed(stage, dir, &["flo"])?
        .into_par_iter()
        .map(|(i, path)| {
            let bytes = read_bytes(stage, &path)?;
            Ok((
                i,
                read_flo(&bytes).map_err(|e| format_err(stage, &path, e))?,
            ))
        })
        .collect()
}

fn load_flows(stage: &'static str, cfg: &PipelineConfig, with_bwd: bool) -> Result<Flows> {
    let fwd = load_flow_dir(stage, &cfg.flow_fwd_dir)?;
    let base = fwd[0].0;
    if let Some((i, _)) = fwd.iter().enumerate().find(|(k, (i, _))| *i != base + k) {
        return Err(PipelineError::new(
            stage,
            "format",
            format!("forward flow indices are not consecutive at position {i}"),
        ));
    }
    let dims = fwd[0].1.dims();
    if let Some((i, f)) = fwd.iter().find(|(_, f)| f.dims() != dims) {
        return Err(PipelineError::new(
            stage,
            "format",
            format!("forward flow {i} is {:?}, expected {dims:?}", f.dims()),
        ));
    }
    let bwd = if with_bwd && cfg.flow_bwd_dir.is_dir() {
        let bwd = load_flow_dir(stage, &cfg.flow_bwd_dir)?;
        if bwd.len() != fwd.len() {
            return Err(PipelineError::new(
                stage,
                "format",
                format!(
                    "{} backward flows for {} forward flows",
                    bwd.len(),
                    fwd.len()
                ),
            ));
        }
        Some(bwd.into_iter().map(|(_, f)| f).collect())
    } else {
        None
    };
    Ok(Flows {
        base,
        fwd: fwd.into_iter().map(|(_, f)| f).collect(),
        bwd,
    })
}

fn load_trajectories(
    stage: &'static str,
    cfg: &PipelineConfig,
    dims: (usize, usize),
) -> Result<TrajectorySet<f64>> {
    let path = Paths::new(&cfg.out_dir).trajectories;
    let file =
        read_trj::<f64>(&read_text(stage, &path)?).map_err(|e| format_err(stage, &path, e))?;
    TrajectorySet::new(
        file.trajectories,
        file.frame_count,
        dims.0,
        dims.1,
        cfg.sampling_step,
    )
    .map_err(|e| format_err(stage, &path, e))
}

fn load_graph(stage: &'static str, path: &Path, nodes: usize) -> Result<AffinityGraph<f64>> {
    let g = read_grf::<f64>(&read_text(stage, path)?).map_err(|e| format_err(stage, path, e))?;
    if g.node_count() != nodes {
        return Err(format_err(
            stage,
            path,
            format_args!("{} nodes for {nodes} trajectories", g.node_count()),
        ));
    }
    Ok(g)
}

fn sigma<'a>(cfg: &PipelineConfig, flows: &'a Flows) -> FlowSigma<'a, f64> {
    FlowSigma {
        flows: &flows.fwd,
        radius: cfg.sigma_radius,
        eps: cfg.sigma_eps,
    }
}

/// Flows to TRJ1.
pub fn run_track(cfg: &PipelineConfig) -> Result<TrajectorySet<f64>> {
    const STAGE: &str = "track";
    let flows = load_flows(STAGE, cfg, true)?;
    let ts = track_sequence::<f64>(
        &flows.fwd,
        flows.bwd.as_deref(),
        flows.dims(),
        &cfg.tracker_params(),
    )
    .map_err(|e| PipelineError::new(STAGE, "tracker", e.to_string()))?;
    info!(
        "track: {} trajectories over {} frames",
        ts.len(),
        ts.frame_count
    );
    let path = Paths::new(&cfg.out_dir).trajectories;
    write_file(STAGE, &path, write_trj(ts.frame_count, &ts.trajectories))?;
    Ok(ts)
}

/// TRJ1 and flows to a GRF1 graph with translational costs.
pub fn run_graph(cfg: &PipelineConfig) -> Result<AffinityGraph<f64>> {
    const STAGE: &str = "graph";
    let flows = load_flows(STAGE, cfg, false)?;
    let ts = load_trajectories(STAGE, cfg, flows.dims())?;
    let params = GraphParams {
        d_max: cfg.d_max,
        min_overlap: cfg.min_overlap,
    };
    let g = build_graph(&ts, &params);
    let g = translational_costs(&g, &ts, &sigma(cfg, &flows), cfg.theta)
        .map_err(|e| PipelineError::new(STAGE, "affinity", e.to_string()))?;
    info!("graph: {} nodes, {} edges", g.node_count(), g.edges().len());
    write_file(STAGE, &Paths::new(&cfg.out_dir).graph, write_grf(&g))?;
    Ok(g)
}

/// Ground truth per trajectory frame; frames without a gt file are `None`.
fn load_gt_by_frame(
    stage: &'static str,
    cfg: &PipelineConfig,
    base: usize,
    frame_count: usize,
) -> Result<Vec<Option<LabelMap>>> {
    let mut gt = vec![None; frame_count];
    for (i, path) in list_indexed(stage, &cfg.gt_dir, &["pgm"])? {
        let Some(t) = i.checked_sub(base).filter(|&t| t < frame_count) else {
            continue;
        };
        gt[t] = Some(
            read_labelmap(&read_bytes(stage, &path)?).map_err(|e| format_err(stage, &path, e))?,
        );
    }
    Ok(gt)
}

/// TRJ1, GRF1 and gt to a GRUP1 checkpoint.
pub fn run_gru_train(cfg: &PipelineConfig) -> Result<crate::gru::GruParams<f64>> {
    const STAGE: &str = "gru-train";
    let flows = load_flows(STAGE, cfg, false)?;
    let ts = load_trajectories(STAGE, cfg, flows.dims())?;
    let paths = Paths::new(&cfg.out_dir);
    let g = load_graph(STAGE, &paths.graph, ts.len())?;
    let gt = load_gt_by_frame(STAGE, cfg, flows.base, ts.frame_count)?;
    let gru_err = |e: crate::gru::GruError| PipelineError::new(STAGE, "gru", e.to_string());
    let tc = cfg.train_config();
    let pairs = sample_training_pairs(&g, &ts, &gt, tc.dims.steps, &sigma(cfg, &flows), cfg.seed)
        .map_err(gru_err)?;
    info!("gru-train: {} training pairs", pairs.len());
    let report = train(&pairs, &tc).map_err(gru_err)?;
    write_file(STAGE, &paths.model, write_checkpoint(&report.params))?;
    Ok(report.params)
}

/// TRJ1, GRF1 and GRUP1 to a GRF1 graph with learned costs.
pub fn run_gru_cost(cfg: &PipelineConfig) -> Result<AffinityGraph<f64>> {
    const STAGE: &str = "gru-cost";
    let flows = load_flows(STAGE, cfg, false)?;
    let ts = load_trajectories(STAGE, cfg, flows.dims())?;
    let paths = Paths::new(&cfg.out_dir);
    let g = load_graph(STAGE, &paths.graph, ts.len())?;
    let params = read_checkpoint::<f64>(&read_text(STAGE, &paths.model)?)
        .map_err(|e| format_err(STAGE, &paths.model, e))?;
    let g = learned_costs(&g, &ts, &params, &sigma(cfg, &flows))
        .map_err(|e| PipelineError::new(STAGE, "gru", e.to_string()))?;
    write_file(STAGE, &paths.learned_graph, write_grf(&g))?;
    Ok(g)
}

/// GRF1 to SPL1. Labels start at 1 and are numbered by decreasing cluster
/// size.
pub fn run_cluster(cfg: &PipelineConfig) -> Result<SparseLabels> {
    const STAGE: &str = "cluster";
    let paths = Paths::new(&cfg.out_dir);
    let input = paths.costed_graph(cfg.cost_model);
    let g = read_grf::<f64>(&read_text(STAGE, input)?).map_err(|e| format_err(STAGE, input, e))?;
    let (p, objective) = decompose(&g);
    info!(
        "cluster: {} components, objective {}",
        p.component_count(),
        objective + 0.0
    );
    let labels: SparseLabels = p.labels_by_size().into_iter().enumerate().collect();
    write_file(STAGE, &paths.labels, write_spl(&labels))?;
    Ok(labels)
}

/// Frames, TRJ1 and SPL1 to dense label maps, overlays and sparse seed maps.
pub fn run_densify(cfg: &PipelineConfig) -> Result<()> {
    const STAGE: &str = "densify";
    let frames = list_indexed(STAGE, &cfg.frames_dir, &["ppm", "pgm"])?;
    let first = read_pnm(&read_bytes(STAGE, &frames[0].1)?)
        .map_err(|e| format_err(STAGE, &frames[0].1, e))?;
    let ts = load_trajectories(STAGE, cfg, (first.width(), first.height()))?;
    let paths = Paths::new(&cfg.out_dir);
    let labels = read_spl(&read_text(STAGE, &paths.labels)?)
        .map_err(|e| format_err(STAGE, &paths.labels, e))?;
    let selection = select_labels(&labels, &ts, cfg.label_mode)
        .map_err(|e| PipelineError::new(STAGE, "densify", e.to_string()))?;
    let base = frames[0].0;
    let params = cfg.densify_params();
    let palette = Palette::distinct();
    let outputs = frames
        .par_iter()
        .filter_map(|(i, path)| (i - base < ts.frame_count).then_some((*i, path)))
        .map(|(i, path)| {
            let img: Image =
                read_pnm(&read_bytes(STAGE, path)?).map_err(|e| format_err(STAGE, path, e))?;
            if (img.width(), img.height()) != (ts.width, ts.height) {
                return Err(format_err(
                    STAGE,
                    path,
                    "frame size differs from the first frame",
                ));
            }
            let t = i - base;
            let seeds = rasterize_sparse_labels(&ts, &labels, t, |l| selection.map(l, t));
            let dense = geodesic_densify::<f64>(&img, &seeds, &params)
                .map_err(|e| PipelineError::new(STAGE, "densify", format!("frame {i}: {e}")))?;
            let sparse = seed_map(img.width(), img.height(), &seeds);
            let blend = overlay(&img, &dense, &palette);
            Ok((i, dense, sparse, blend))
        })
        .collect::<Result<Vec<_>>>()?;
    for (i, dense, sparse, blend) in outputs {
        let name = |ext| frame_file_name(&cfg.seq, i, ext);
        let enc = |m: &LabelMap| {
            write_labelmap(m, &palette)
                .map_err(|e| PipelineError::new(STAGE, "format", e.to_string()))
        };
        let (pgm, ppm) = enc(&dense)?;
        write_file(STAGE, &paths.dense_dir.join(name("pgm")), pgm)?;
        write_file(STAGE, &paths.dense_dir.join(name("ppm")), ppm)?;
        write_file(STAGE, &paths.sparse_dir.join(name("pgm")), enc(&sparse)?.0)?;
        write_file(
            STAGE,
            &paths.overlay_dir.join(name("ppm")),
            write_pnm(&blend),
        )?;
    }
    info!("densify: {} frames", frames.len());
    Ok(())
}

/// Dense maps and gt to `report.txt` (table) and `metrics.txt`
/// (`metric=value`). Density is reported when sparse seed maps exist.
pub fn run_eval(cfg: &PipelineConfig) -> Result<EvalReport> {
    const STAGE: &str = "eval";
    let paths = Paths::new(&cfg.out_dir);
    let gt_files = list_indexed(STAGE, &cfg.gt_dir, &["pgm"])?;
    let load = |path: &Path| -> Result<LabelMap> {
        read_labelmap(&read_bytes(STAGE, path)?).map_err(|e| format_err(STAGE, path, e))
    };
    let mut frames = Vec::with_capacity(gt_files.len());
    let mut seeds = Vec::new();
    let mut seed_gt = Vec::new();
    for (i, gt_path) in &gt_files {
        let gt = load(gt_path)?;
        let pred = load(&paths.dense_dir.join(frame_file_name(&cfg.seq, *i, "pgm")))?;
        let sparse_path = paths.sparse_dir.join(frame_file_name(&cfg.seq, *i, "pgm"));
        if sparse_path.is_file() {
            let m = load(&sparse_path)?;
            let mut s = Vec::new();
            for y in 0..m.height() {
                for x in 0..m.width() {
                    if m.get(x, y) != VOID {
                        s.push((x, y, m.get(x, y)));
                    }
                }
            }
            seeds.push(SparseFrameLabels {
                frame: *i,
                seeds: s,
            });
            seed_gt.push(gt.clone());
        }
        frames.push((*i, pred, gt));
    }
    let density = (!seeds.is_empty()).then(|| sparse_density(&seeds, &seed_gt));
    let report = evaluate_sequence(&frames, cfg.background_label, density)
        .map_err(|e| PipelineError::new(STAGE, "eval", e.to_string()))?;
    write_file(STAGE, &paths.report, report.to_text())?;
    write_file(STAGE, &paths.metrics, report.to_kv())?;
    Ok(report)
}

/// Runs every stage in order. The GRU stages run only with the GRU cost
/// model; evaluation runs only when the gt directory exists.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Option<EvalReport>> {
    run_track(cfg)?;
    run_graph(cfg)?;
    if cfg.cost_model == CostModel::Gru {
        run_gru_train(cfg)?;
        run_gru_cost(cfg)?;
    }
    run_cluster(cfg)?;
    run_densify(cfg)?;
    if cfg.gt_dir.is_dir() {
        run_eval(cfg).map(Some)
    } else {
        Ok(None)
    }
}

/// Writes a synthetic sequence as `frames/`, `flow_fwd/`, `flow_bwd/`, `gt/`
/// and a `config` file that points at them, into `dir`.
pub fn write_synth_dataset(dir: &Path, params: &SynthParams, seq: &str) -> Result<PathBuf> {
    const STAGE: &str = "synth";
    let s = generate(params);
    let palette = Palette::distinct();
    for (t, (frame, gt)) in s.frames.iter().zip(&s.gt).enumerate() {
        write_file(
            STAGE,
            &dir.join("frames").join(frame_file_name(seq, t, "ppm")),
            write_pnm(frame),
        )?;
        let (pgm, _) = write_labelmap(gt, &palette)
            .map_err(|e| PipelineError::new(STAGE, "format", e.to_string()))?;
        write_file(
            STAGE,
            &dir.join("gt").join(frame_file_name(seq, t, "pgm")),
            pgm,
        )?;
    }
    for (t, (f, b)) in s.fwd.iter().zip(&s.bwd).enumerate() {
        write_file(
            STAGE,
            &dir.join("flow_fwd").join(frame_file_name(seq, t, "flo")),
            write_flo(f),
        )?;
        write_file(
            STAGE,
            &dir.join("flow_bwd")
                .join(frame_file_name(seq, t + 1, "flo")),
            write_flo(b),
        )?;
    }
    let cfg = PipelineConfig {
        seq: seq.to_string(),
        ..PipelineConfig::default()
    };
    let path = dir.join("config");
    write_file(STAGE, &path, cfg.to_text())?;
    Ok(path)
}
