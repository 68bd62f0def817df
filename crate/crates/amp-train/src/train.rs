//! The training loop: batch size one, seed-shuffled sample order per epoch,
//! line-delimited JSON logging and atomic checkpoints.

use std::io::Write;
use std::path::{Path, PathBuf};

use amp_model::{ModelConfig, ModelParams, ModelShapes, MolecularSystem, ParamRegistry, Segment};
use cc_engine::{AmplitudeSet, IntegralSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grad::gradient;
use crate::optim::OptimizerState;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value encountered during the forward/backward pass")]
    NonFinite,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Model(#[from] amp_model::ModelError),
    #[error(transparent)]
    Engine(#[from] cc_engine::CcError),
}

/// One labeled system.
#[derive(Debug, Clone)]
pub struct TrainingSample {
    pub system: MolecularSystem,
    pub integrals: IntegralSet,
    pub target: AmplitudeSet,
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub steps: usize,
    pub seed: u64,
    pub base_lr: f64,
    pub decay_every: usize,
    pub decay_factor: f64,
    /// Write the checkpoint every this many steps (0 = only at the end).
    pub checkpoint_every: usize,
    pub checkpoint_path: Option<PathBuf>,
    pub log_path: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: 2000,
            seed: 1,
            base_lr: 1e-2,
            decay_every: 500,
            decay_factor: 0.5,
            checkpoint_every: 0,
            checkpoint_path: None,
            log_path: None,
        }
    }
}

/// Serialized training state; loading and resuming reproduces the
/// uninterrupted trajectory bit-for-bit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub config: ModelConfig,
    pub padded_signature: irreps::IrrepsSignature,
    pub params: Vec<f64>,
    pub optimizer: OptimizerState,
    pub loss_history: Vec<f64>,
    pub param_index: Vec<Segment>,
    pub seed: u64,
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: impl AsRef<Path>) -> Result<(), TrainError> {
    let path = path.as_ref();
    let text =
        serde_json::to_string(ckpt).map_err(|e| TrainError::Checkpoint(e.to_string()))?;
    // atomic: write to a sibling temp file, then rename into place
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(text.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint, TrainError> {
    let text = std::fs::read_to_string(path)?;
    let ckpt: Checkpoint =
        serde_json::from_str(&text).map_err(|e| TrainError::Checkpoint(e.to_string()))?;
    if ckpt.format != "ckpt/1" {
        return Err(TrainError::Checkpoint(format!(
            "unsupported checkpoint format '{}'",
            ckpt.format
        )));
    }
    Ok(ckpt)
}

fn epoch_order(seed: u64, epoch: usize, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(epoch as u64 + 1)));
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    order
}

/// Minimizes the squared amplitude error over the samples. Deterministic
/// given (samples, configs, seed); resuming from a checkpoint continues the
/// identical trajectory.
pub fn train(
    samples: &[TrainingSample],
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
    resume: Option<Checkpoint>,
) -> Result<Checkpoint, TrainError> {
    if samples.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let padded = samples[0].system.layout.padded_signature();
    for s in samples {
        if s.system.layout.padded_signature() != padded {
            return Err(TrainError::Shape(
                "all samples must share one padded basis signature".into(),
            ));
        }
    }
    let shapes = ModelShapes::new(model_cfg, padded.clone())?;
    let reg = ParamRegistry::new(model_cfg, &shapes);

    let (mut params, mut opt, mut losses) = match resume {
        Some(ckpt) => {
            if ckpt.config != *model_cfg {
                return Err(TrainError::Checkpoint(
                    "checkpoint was produced by a different model configuration".into(),
                ));
            }
            if ckpt.params.len() != reg.total {
                return Err(TrainError::Checkpoint("parameter count mismatch".into()));
            }
            (ModelParams { values: ckpt.params }, ckpt.optimizer, ckpt.loss_history)
        }
        None => (
            ModelParams::init(&reg, cfg.seed),
            OptimizerState::new(reg.total, cfg.base_lr, cfg.decay_every, cfg.decay_factor),
            Vec::new(),
        ),
    };

    let mut log = match &cfg.log_path {
        Some(p) => Some(std::io::BufWriter::new(
            std::fs::OpenOptions::new().create(true).append(true).open(p)?,
        )),
        None => None,
    };

    let n = samples.len();
    while opt.step < cfg.steps {
        let step = opt.step;
        let order = epoch_order(cfg.seed, step / n, n);
        let sample = &samples[order[step % n]];
        let t0 = std::time::Instant::now();
        let (loss, grad) = gradient(&params, sample, model_cfg)?;
        let lr = opt.current_lr();
        opt.apply(&mut params.values, &grad);
        losses.push(loss);
        if let Some(w) = log.as_mut() {
            writeln!(
                w,
                "{{\"step\":{},\"loss\":{},\"lr\":{},\"wall_ms\":{:.3}}}",
                step,
                loss,
                lr,
                t0.elapsed().as_secs_f64() * 1e3
            )?;
        }
        let ckpt_due = cfg.checkpoint_every > 0 && opt.step % cfg.checkpoint_every == 0;
        if ckpt_due {
            if let Some(path) = &cfg.checkpoint_path {
                let ckpt = make_checkpoint(model_cfg, &padded, &params, &opt, &losses, &reg, cfg.seed);
                save_checkpoint(&ckpt, path)?;
            }
        }
    }
    if let Some(mut w) = log {
        w.flush()?;
    }

    let ckpt = make_checkpoint(model_cfg, &padded, &params, &opt, &losses, &reg, cfg.seed);
    if let Some(path) = &cfg.checkpoint_path {
        save_checkpoint(&ckpt, path)?;
    }
    Ok(ckpt)
}

fn make_checkpoint(
    model_cfg: &ModelConfig,
    padded: &irreps::IrrepsSignature,
    params: &ModelParams,
    opt: &OptimizerState,
    losses: &[f64],
    reg: &ParamRegistry,
    seed: u64,
) -> Checkpoint {
    Checkpoint {
        format: "ckpt/1".into(),
        config: model_cfg.clone(),
        padded_signature: padded.clone(),
        params: params.values.clone(),
        optimizer: opt.clone(),
        loss_history: losses.to_vec(),
        param_index: reg.segments.clone(),
        seed,
    }
}
