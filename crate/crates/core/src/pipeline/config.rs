//! Flat `key = value` pipeline configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::PipelineError;
use crate::densify::{DensifyParams, LabelMode};
use crate::gru::{GruDims, Optimizer, TrainConfig};
use crate::tracker::TrackerParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostModel {
    /// Learned Siamese GRU costs.
    Gru,
    /// Maximum normalized motion difference.
    Translational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Prefix of every per-frame file name, `<seq>_<frame:05>`.
    pub seq: String,
    pub frames_dir: PathBuf,
    pub flow_fwd_dir: PathBuf,
    pub flow_bwd_dir: PathBuf,
    pub gt_dir: PathBuf,
    pub out_dir: PathBuf,

    pub sampling_step: usize,
    pub fb_c1: f64,
    pub fb_c2: f64,

    pub d_max: f64,
    pub min_overlap: usize,
    pub theta: f64,
    pub sigma_radius: usize,
    pub sigma_eps: f64,
    pub cost_model: CostModel,

    pub gru_hidden: usize,
    pub gru_steps: usize,
    pub gru_head: usize,
    pub gru_lr: f64,
    pub gru_batch: usize,
    pub gru_epochs: usize,
    pub gru_optimizer: Optimizer,
    pub gru_init_scale: f64,
    pub seed: u64,

    pub sigma_blur: f64,
    pub lambda: f64,
    pub label_mode: LabelMode,
    /// Gt label of the background region.
    pub background_label: u32,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let tracker = TrackerParams::default();
        let gru = TrainConfig::default();
        let dense = DensifyParams::default();
        Self {
            seq: "seq".into(),
            frames_dir: "frames".into(),
            flow_fwd_dir: "flow_fwd".into(),
            flow_bwd_dir: "flow_bwd".into(),
            gt_dir: "gt".into(),
            out_dir: "out".into(),
            sampling_step: tracker.sampling_step,
            fb_c1: tracker.fb_c1,
            fb_c2: tracker.fb_c2,
            d_max: 30.0,
            min_overlap: 1,
            theta: 1.0,
            sigma_radius: 3,
            sigma_eps: 0.5,
            cost_model: CostModel::Gru,
            gru_hidden: gru.dims.hidden,
            gru_steps: gru.dims.steps,
            gru_head: gru.dims.head,
            gru_lr: gru.lr,
            gru_batch: gru.batch,
            gru_epochs: gru.epochs,
            gru_optimizer: gru.optimizer,
            gru_init_scale: gru.init_scale,
            seed: 0,
            sigma_blur: dense.sigma_blur,
            lambda: dense.lambda,
            label_mode: LabelMode::multi(),
            background_label: 1,
        }
    }
}

fn bad(key: &str, msg: impl std::fmt::Display) -> PipelineError {
    PipelineError::new("config", "config", format!("{key}: {msg}"))
}

fn num<F: std::str::FromStr>(key: &str, value: &str) -> Result<F, PipelineError> {
    value
        .parse()
        .map_err(|_| bad(key, format_args!("invalid value '{value}'")))
}

impl PipelineConfig {
    /// Parses a config file's text. Relative paths are resolved against
    /// `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, PipelineError> {
        let mut cfg = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(bad(&format!("line {}", i + 1), "expected 'key = value'"));
            };
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.resolve(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::new("config", "io", format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn resolve(&mut self, base: &Path) {
        for p in [
            &mut self.frames_dir,
            &mut self.flow_fwd_dir,
            &mut self.flow_bwd_dir,
            &mut self.gt_dir,
            &mut self.out_dir,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    /// Overrides one key. Path values are taken as given.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), PipelineError> {
        match key {
            "seq" => self.seq = value.to_string(),
            "frames_dir" => self.frames_dir = value.into(),
            "flow_fwd_dir" => self.flow_fwd_dir = value.into(),
            "flow_bwd_dir" => self.flow_bwd_dir = value.into(),
            "gt_dir" => self.gt_dir = value.into(),
            "out_dir" => self.out_dir = value.into(),
            "sampling_step" => self.sampling_step = num(key, value)?,
            "fb_c1" => self.fb_c1 = num(key, value)?,
            "fb_c2" => self.fb_c2 = num(key, value)?,
            "d_max" => self.d_max = num(key, value)?,
            "min_overlap" => self.min_overlap = num(key, value)?,
            "theta" => self.theta = num(key, value)?,
            "sigma_radius" => self.sigma_radius = num(key, value)?,
            "sigma_eps" => self.sigma_eps = num(key, value)?,
            "cost_model" => {
                self.cost_model = match value {
                    "gru" => CostModel::Gru,
                    "translational" => CostModel::Translational,
                    _ => return Err(bad(key, "expected gru or translational")),
                }
            }
            "gru_hidden" => self.gru_hidden = num(key, value)?,
            "gru_steps" => self.gru_steps = num(key, value)?,
            "gru_head" => self.gru_head = num(key, value)?,
            "gru_lr" => self.gru_lr = num(key, value)?,
            "gru_batch" => self.gru_batch = num(key, value)?,
            "gru_epochs" => self.gru_epochs = num(key, value)?,
            "gru_optimizer" => {
                self.gru_optimizer = match value {
                    "adam" => Optimizer::adam(),
                    "sgd_momentum" => Optimizer::sgd_momentum(),
                    _ => return Err(bad(key, "expected adam or sgd_momentum")),
                }
            }
            "gru_init_scale" => self.gru_init_scale = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "sigma_blur" => self.sigma_blur = num(key, value)?,
            "lambda" => self.lambda = num(key, value)?,
            "label_mode" => {
                self.label_mode = match value {
                    "binary" => LabelMode::Binary,
                    "multi" => match self.label_mode {
                        m @ LabelMode::Multi { .. } => m,
                        LabelMode::Binary => LabelMode::multi(),
                    },
                    _ => return Err(bad(key, "expected binary or multi")),
                }
            }
            "multi_min_count" | "multi_min_fraction" => {
                let (mut count, mut fraction) = match self.label_mode {
                    LabelMode::Multi {
                        min_count,
                        min_fraction,
                    } => (min_count, min_fraction),
                    LabelMode::Binary => (5, 0.05),
                };
                if key == "multi_min_count" {
                    count = num(key, value)?;
                } else {
                    fraction = num(key, value)?;
                }
                if let LabelMode::Multi { .. } = self.label_mode {
                    self.label_mode = LabelMode::Multi {
                        min_count: count,
                        min_fraction: fraction,
                    };
                }
            }
            "background_label" => self.background_label = num(key, value)?,
            _ => return Err(bad(key, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let positive = |k: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(bad(k, format_args!("must be positive, got {v}")))
            }
        };
        let non_negative = |k: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(bad(k, format_args!("must be non-negative, got {v}")))
            }
        };
        if self.seq.is_empty() || self.seq.contains(['/', '\\']) {
            return Err(bad("seq", "must be a non-empty file name prefix"));
        }
        positive("sampling_step", self.sampling_step as f64)?;
        non_negative("fb_c1", self.fb_c1)?;
        non_negative("fb_c2", self.fb_c2)?;
        positive("d_max", self.d_max)?;
        positive("min_overlap", self.min_overlap as f64)?;
        if !self.theta.is_finite() {
            return Err(bad("theta", "must be finite"));
        }
        positive("sigma_eps", self.sigma_eps)?;
        positive("gru_hidden", self.gru_hidden as f64)?;
        positive("gru_steps", self.gru_steps as f64)?;
        positive("gru_head", self.gru_head as f64)?;
        non_negative("gru_lr", self.gru_lr)?;
        positive("gru_batch", self.gru_batch as f64)?;
        non_negative("gru_init_scale", self.gru_init_scale)?;
        non_negative("sigma_blur", self.sigma_blur)?;
        non_negative("lambda", self.lambda)?;
        if let LabelMode::Multi { min_fraction, .. } = self.label_mode {
            if !(0.0..=1.0).contains(&min_fraction) {
                return Err(bad("multi_min_fraction", "must lie in [0, 1]"));
            }
        }
        if self.background_label == 0 || self.background_label > 255 {
            return Err(bad("background_label", "must lie in 1..=255"));
        }
        Ok(())
    }

    pub fn tracker_params(&self) -> TrackerParams {
        TrackerParams {
            sampling_step: self.sampling_step,
            fb_c1: self.fb_c1,
            fb_c2: self.fb_c2,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            dims: GruDims {
                hidden: self.gru_hidden,
                steps: self.gru_steps,
                head: self.gru_head,
            },
            epochs: self.gru_epochs,
            lr: self.gru_lr,
            batch: self.gru_batch,
            optimizer: self.gru_optimizer,
            init_scale: self.gru_init_scale,
            seed: self.seed,
        }
    }

    pub fn densify_params(&self) -> DensifyParams {
        DensifyParams {
            sigma_blur: self.sigma_blur,
            lambda: self.lambda,
        }
    }

    /// Config file text that [`parse`](Self::parse) reads back to `self`
    /// (paths are written as stored).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        kv("seq", self.seq.clone());
        kv("frames_dir", self.frames_dir.display().to_string());
        kv("flow_fwd_dir", self.flow_fwd_dir.display().to_string());
        kv("flow_bwd_dir", self.flow_bwd_dir.display().to_string());
        kv("gt_dir", self.gt_dir.display().to_string());
        kv("out_dir", self.out_dir.display().to_string());
        kv("sampling_step", self.sampling_step.to_string());
        kv("fb_c1", self.fb_c1.to_string());
        kv("fb_c2", self.fb_c2.to_string());
        kv("d_max", self.d_max.to_string());
        kv("min_overlap", self.min_overlap.to_string());
        kv("theta", self.theta.to_string());
        kv("sigma_radius", self.sigma_radius.to_string());
        kv("sigma_eps", self.sigma_eps.to_string());
        kv(
            "cost_model",
            match self.cost_model {
                CostModel::Gru => "gru",
                CostModel::Translational => "translational",
            }
            .into(),
        );
        kv("gru_hidden", self.gru_hidden.to_string());
        kv("gru_steps", self.gru_steps.to_string());
        kv("gru_head", self.gru_head.to_string());
        kv("gru_lr", self.gru_lr.to_string());
        kv("gru_batch", self.gru_batch.to_string());
        kv("gru_epochs", self.gru_epochs.to_string());
        kv(
            "gru_optimizer",
            match self.gru_optimizer {
                Optimizer::Adam { .. } => "adam",
                Optimizer::Momentum { .. } => "sgd_momentum",
            }
            .into(),
        );
        kv("gru_init_scale", self.gru_init_scale.to_string());
        kv("seed", self.seed.to_string());
        kv("sigma_blur", self.sigma_blur.to_string());
        kv("lambda", self.lambda.to_string());
        match self.label_mode {
            LabelMode::Binary => kv("label_mode", "binary".into()),
            LabelMode::Multi {
                min_count,
                min_fraction,
            } => {
                kv("label_mode", "multi".into());
                kv("multi_min_count", min_count.to_string());
                kv("multi_min_fraction", min_fraction.to_string());
            }
        }
        kv("background_label", self.background_label.to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = PipelineConfig::default();
        assert_eq!(c.sampling_step, 8);
        assert_eq!((c.gru_hidden, c.gru_steps, c.gru_head), (2, 25, 8));
        assert_eq!((c.gru_lr, c.gru_batch, c.gru_epochs), (0.001, 256, 3));
        assert_eq!((c.sigma_blur, c.lambda), (2.0, 50.0));
        assert!(c.validate().is_ok());
    }

    #[test]
    fn parse_resolves_paths_and_round_trips() {
        let text = "# comment\nseq = cars\nframes_dir = img\nout_dir = /tmp/x  # trailing\nlambda = 10\nlabel_mode = binary\n";
        let c = PipelineConfig::parse(text, Path::new("/data/run")).unwrap();
        assert_eq!(c.seq, "cars");
        assert_eq!(c.frames_dir, PathBuf::from("/data/run/img"));
        assert_eq!(c.flow_fwd_dir, PathBuf::from("/data/run/flow_fwd"));
        assert_eq!(c.out_dir, PathBuf::from("/tmp/x"));
        assert_eq!(c.lambda, 10.0);
        assert_eq!(c.label_mode, LabelMode::Binary);
        let again = PipelineConfig::parse(&c.to_text(), Path::new("/elsewhere")).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn rejects_bad_input() {
        let base = Path::new(".");
        assert!(PipelineConfig::parse("nonsense", base).is_err());
        assert!(PipelineConfig::parse("colour = red", base).is_err());
        assert!(PipelineConfig::parse("lambda = -1", base).is_err());
        assert!(PipelineConfig::parse("sampling_step = 0", base).is_err());
        assert!(PipelineConfig::parse("cost_model = magic", base).is_err());
        let e = PipelineConfig::parse("gru_batch = x", base).unwrap_err();
        assert_eq!(e.stage, "config");
        assert!(e.msg.contains("gru_batch"));
    }

    #[test]
    fn multi_threshold_keys() {
        let c = PipelineConfig::parse(
            "multi_min_count = 9\nmulti_min_fraction = 0.2",
            Path::new("."),
        )
        .unwrap();
        assert_eq!(
            c.label_mode,
            LabelMode::Multi {
                min_count: 9,
                min_fraction: 0.2
            }
        );
    }
}
