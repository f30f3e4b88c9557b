//! Progressive-resizing training loop.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::mpsc::sync_channel;
use std::time::Instant;

use gestigo_nn::{cosine_lr, Adam, Checkpoint, ForwardCtx, Mode, Tensor};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::augment::{augment, AugmentConfig};
use crate::data::{image_planes, ImageSource};
use crate::error::{NetError, Result};
use crate::model::Model;
use crate::predict::accuracy;

pub const DEFAULT_BATCH_SIZE: usize = 16;
pub const DEFAULT_EPOCHS_PER_STAGE: usize = 8;
pub const DEFAULT_LR_GRID: [f64; 3] = [3e-3, 1e-3, 3e-4];
pub const DEFAULT_SEED: u64 = 17;

#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs_per_stage: usize,
    /// Candidate learning rates, compared on the first stage.
    pub lr_grid: Vec<f64>,
    pub seed: u64,
    pub augment: AugmentConfig,
    /// Where to write the best checkpoint as training goes.
    pub checkpoint: Option<PathBuf>,
    pub eval_batch: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: DEFAULT_BATCH_SIZE,
            epochs_per_stage: DEFAULT_EPOCHS_PER_STAGE,
            lr_grid: DEFAULT_LR_GRID.to_vec(),
            seed: DEFAULT_SEED,
            augment: AugmentConfig::default(),
            checkpoint: None,
            eval_batch: 32,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    /// 1-based stage and epoch-within-stage.
    pub stage: usize,
    pub epoch: usize,
    pub size: usize,
    pub lr: f64,
    /// Mean training loss per task: streams, then tuner.
    pub losses: Vec<f64>,
    pub total_loss: f64,
    /// Loss log-variances at the end of the epoch.
    pub log_vars: Vec<f64>,
    pub val_accuracy: f64,
    pub stream_val_accuracy: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BestEpoch {
    pub stage: usize,
    pub epoch: usize,
    pub size: usize,
    pub val_accuracy: f64,
}

#[derive(Clone, Debug, Default)]
pub struct TrainReport {
    pub seed: u64,
    /// Final first-stage validation accuracy per candidate learning rate.
    pub lr_trials: Vec<(f64, f64)>,
    pub chosen_lr: f64,
    /// Epochs of the kept run, in order.
    pub epochs: Vec<EpochRecord>,
    pub best: Option<BestEpoch>,
    pub log: Vec<String>,
}

impl TrainReport {
    fn note(&mut self, line: String) {
        log::info!("{line}");
        self.log.push(line);
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }

    /// One tab-separated row per epoch, with a header naming the tasks.
    pub fn summary_tsv(&self, task_names: &[String]) -> String {
        let mut out = String::new();
        let mut cols = vec!["stage".to_string(), "epoch".into(), "size".into(), "lr".into()];
        cols.extend(task_names.iter().map(|t| format!("loss_{t}")));
        cols.extend(task_names.iter().map(|t| format!("s_{t}")));
        cols.push("total".into());
        cols.push("val_acc".into());
        cols.extend(task_names[..task_names.len().saturating_sub(1)].iter().map(|t| format!("val_acc_{t}")));
        writeln!(out, "# seed {}", self.seed).unwrap();
        writeln!(out, "{}", cols.join("\t")).unwrap();
        for r in &self.epochs {
            let mut row = vec![r.stage.to_string(), r.epoch.to_string(), r.size.to_string(), format!("{:e}", r.lr)];
            row.extend(r.losses.iter().map(|v| format!("{v:.6}")));
            row.extend(r.log_vars.iter().map(|v| format!("{v:.6}")));
            row.push(format!("{:.6}", r.total_loss));
            row.push(format!("{:.6}", r.val_accuracy));
            row.extend(r.stream_val_accuracy.iter().map(|v| format!("{v:.6}")));
            writeln!(out, "{}", row.join("\t")).unwrap();
        }
        out
    }

    /// Writes `train.log` and `summary.tsv` into `dir`.
    pub fn write(&self, dir: &Path, task_names: &[String]) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| NetError::io(dir, e))?;
        let log = dir.join("train.log");
        fs::write(&log, self.log.join("\n") + "\n").map_err(|e| NetError::io(&log, e))?;
        let summary = dir.join("summary.tsv");
        fs::write(&summary, self.summary_tsv(task_names)).map_err(|e| NetError::io(&summary, e))
    }
}

pub struct TrainOutcome {
    /// The model restored to its best-validation weights.
    pub model: Model,
    pub report: TrainReport,
}

/// A failed run, with everything recorded up to the failure.
#[derive(Debug, Error)]
#[error("{error}")]
pub struct TrainFailure {
    #[source]
    pub error: NetError,
    pub report: TrainReport,
}

struct Batch {
    streams: Vec<Vec<f32>>,
    labels: Vec<usize>,
}

fn mix(parts: &[u64]) -> u64 {
    // splitmix64 over the parts
    parts.iter().fold(0x9E37_79B9_7F4A_7C15u64, |h, p| {
        let mut z = h ^ p.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    })
}

/// Shuffled batches for one epoch. A trailing batch of one sample is
/// dropped; batch statistics are undefined for it.
fn epoch_batches(n: usize, batch: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order
        .chunks(batch)
        .filter(|c| c.len() > 1 || n == 1)
        .map(<[usize]>::to_vec)
        .collect()
}

struct EpochPlan<'a> {
    src: &'a dyn ImageSource,
    cfg: &'a TrainConfig,
    stage: usize,
    epoch: usize,
    size: usize,
    streams: usize,
}

impl EpochPlan<'_> {
    fn prepare(&self, indices: &[usize]) -> Result<Batch> {
        let samples = indices
            .par_iter()
            .map(|&i| {
                let images = self.src.images(i)?;
                if images.len() != self.streams {
                    return Err(NetError::Argument(format!(
                        "sample {i} has {} images, model has {} streams",
                        images.len(),
                        self.streams
                    )));
                }
                Ok(images
                    .iter()
                    .enumerate()
                    .map(|(k, img)| {
                        if self.cfg.augment.is_identity() {
                            image_planes(img, self.size)
                        } else {
                            let seed = mix(&[self.cfg.seed, self.stage as u64, self.epoch as u64, i as u64, k as u64]);
                            image_planes(&augment(img, &self.cfg.augment, seed), self.size)
                        }
                    })
                    .collect::<Vec<_>>())
            })
            .collect::<Result<Vec<_>>>()?;
        let streams = (0..self.streams)
            .map(|k| samples.iter().flat_map(|s| s[k].iter().copied()).collect())
            .collect();
        Ok(Batch {
            streams,
            labels: indices.iter().map(|&i| self.src.label(i)).collect(),
        })
    }
}

struct StageRun {
    records: Vec<EpochRecord>,
    best: Option<(BestEpoch, Checkpoint)>,
}

/// Trains one stage with a fresh optimizer and cosine cycle.
fn run_stage(
    model: &mut Model,
    train: &dyn ImageSource,
    val: &dyn ImageSource,
    cfg: &TrainConfig,
    stage: usize,
    size: usize,
    lr: f64,
    report: &mut TrainReport,
) -> Result<StageRun> {
    let j = model.config().stream_count();
    let batches_per_epoch = epoch_batches(train.len(), cfg.batch_size, 0).len();
    let total_steps = batches_per_epoch * cfg.epochs_per_stage;
    let mut opt = Adam::new(model.params(), lr);
    let mut run = StageRun {
        records: Vec::new(),
        best: None,
    };
    for epoch in 1..=cfg.epochs_per_stage {
        let started = Instant::now();
        let plan = EpochPlan {
            src: train,
            cfg,
            stage,
            epoch,
            size,
            streams: j,
        };
        let batches = epoch_batches(train.len(), cfg.batch_size, mix(&[cfg.seed, stage as u64, epoch as u64]));
        let mut ctx = ForwardCtx::new(mix(&[cfg.seed, stage as u64, epoch as u64, 1]));
        let mut sums = vec![0.0; j + 1];
        let mut total_sum = 0.0;
        let mut seen = 0usize;
        let epoch_lr = cosine_lr(lr, (epoch - 1) * batches_per_epoch, total_steps);
        let step0 = (epoch - 1) * batches_per_epoch;

        std::thread::scope(|scope| -> Result<()> {
            let (tx, rx) = sync_channel::<Result<Batch>>(2);
            let plan = &plan;
            let batches = &batches;
            scope.spawn(move || {
                for b in batches {
                    if tx.send(plan.prepare(b)).is_err() {
                        break;
                    }
                }
            });
            for (bi, batch) in rx.into_iter().enumerate() {
                let batch = batch?;
                let b = batch.labels.len();
                let inputs = batch
                    .streams
                    .into_iter()
                    .map(|d| Tensor::new(d, &[b, 3, size, size]))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                let out = model.forward(&inputs, Mode::Train, &mut ctx)?;
                let losses = out.losses(&batch.labels)?;
                let total = model.total_loss(&losses)?;
                opt.zero_grad();
                total.backward()?;
                opt.set_lr(cosine_lr(lr, step0 + bi, total_steps));
                opt.step()?;
                for (s, l) in sums.iter_mut().zip(&losses) {
                    *s += l.item() as f64 * b as f64;
                }
                total_sum += total.item() as f64 * b as f64;
                seen += b;
            }
            Ok(())
        })?;

        let (val_accuracy, stream_val_accuracy) = accuracy(model, val, size, cfg.eval_batch)?;
        let record = EpochRecord {
            stage,
            epoch,
            size,
            lr: epoch_lr,
            losses: sums.iter().map(|s| s / seen.max(1) as f64).collect(),
            total_loss: total_sum / seen.max(1) as f64,
            log_vars: model.log_vars().to_vec().iter().map(|v| *v as f64).collect(),
            val_accuracy,
            stream_val_accuracy,
        };
        report.note(format!(
            "stage {stage} ({size}px) epoch {epoch}: lr {:.2e} loss {:.4} [{}] val {:.4} streams [{}] ({:.1}s)",
            record.lr,
            record.total_loss,
            record.losses.iter().map(|l| format!("{l:.4}")).collect::<Vec<_>>().join(" "),
            record.val_accuracy,
            record.stream_val_accuracy.iter().map(|a| format!("{a:.4}")).collect::<Vec<_>>().join(" "),
            started.elapsed().as_secs_f64()
        ));
        if run.best.as_ref().is_none_or(|(b, _)| val_accuracy > b.val_accuracy) {
            model.config_mut().eval_px = size;
            let best = BestEpoch {
                stage,
                epoch,
                size,
                val_accuracy,
            };
            run.best = Some((best, model.to_checkpoint()));
        }
        run.records.push(record);
    }
    Ok(run)
}

fn fail(error: NetError, report: &mut TrainReport) -> TrainFailure {
    report.note(format!("training stopped: {error}"));
    TrainFailure {
        error,
        report: std::mem::take(report),
    }
}

/// Progressive-resizing training over the model's stage sizes.
///
/// The learning rate is picked on the first stage: every grid value
/// trains that stage from the same initial weights and the best validation
/// accuracy wins (ties go to the earlier value). Each stage then restarts
/// the optimizer and the cosine cycle. The best-validation weights are
/// written to `cfg.checkpoint` whenever they improve, so a run that fails
/// part-way leaves the last good checkpoint in place.
pub fn train(
    model: Model,
    train: &dyn ImageSource,
    val: &dyn ImageSource,
    cfg: &TrainConfig,
) -> std::result::Result<TrainOutcome, TrainFailure> {
    let mut report = TrainReport {
        seed: cfg.seed,
        ..Default::default()
    };
    let checks = || -> Result<()> {
        if train.is_empty() || val.is_empty() {
            return Err(NetError::Argument("training and validation sets must be non-empty".into()));
        }
        if cfg.batch_size < 2 || cfg.epochs_per_stage == 0 || cfg.lr_grid.is_empty() {
            return Err(NetError::Argument(
                "batch size must be at least 2, with at least one epoch and one learning rate".into(),
            ));
        }
        if cfg.lr_grid.iter().any(|lr| !lr.is_finite() || *lr <= 0.0) {
            return Err(NetError::Argument("learning rates must be positive".into()));
        }
        let n = model.config().class_count();
        if let Some(i) = (0..train.len()).find(|&i| train.label(i) >= n) {
            return Err(NetError::Argument(format!("training label {} outside {n} classes", train.label(i))));
        }
        Ok(())
    };
    if let Err(e) = checks() {
        return Err(fail(e, &mut report));
    }
    report.note(format!(
        "training {} streams [{}], {} classes, {} train / {} val, seed {}, {} parameters",
        model.config().stream_count(),
        crate::predict::names(&model.config().vos),
        model.config().class_count(),
        train.len(),
        val.len(),
        cfg.seed,
        model.param_count()
    ));

    let stages = model.config().stage_sizes.clone();
    let mut best: Option<(BestEpoch, Checkpoint)> = None;
    let mut keep = |run_best: Option<(BestEpoch, Checkpoint)>, report: &mut TrainReport| -> Result<()> {
        let Some((b, ck)) = run_best else { return Ok(()) };
        if best.as_ref().is_some_and(|(cur, _)| b.val_accuracy <= cur.val_accuracy) {
            return Ok(());
        }
        if let Some(path) = &cfg.checkpoint {
            ck.save(path)?;
        }
        report.note(format!(
            "best so far: stage {} epoch {} at {}px, val {:.4}",
            b.stage, b.epoch, b.size, b.val_accuracy
        ));
        report.best = Some(b.clone());
        best = Some((b, ck));
        Ok(())
    };

    // First stage, once per learning rate.
    let mut chosen: Option<(f64, Model, StageRun)> = None;
    for &lr in &cfg.lr_grid {
        let mut candidate = model.duplicate();
        report.note(format!("stage 1 with lr {lr:.2e}"));
        let run = match run_stage(&mut candidate, train, val, cfg, 1, stages[0], lr, &mut report) {
            Ok(run) => run,
            Err(e) => return Err(fail(e, &mut report)),
        };
        let acc = run.best.as_ref().map_or(0.0, |(b, _)| b.val_accuracy);
        report.lr_trials.push((lr, acc));
        let better = chosen
            .as_ref()
            .is_none_or(|(_, _, r)| acc > r.best.as_ref().map_or(0.0, |(b, _)| b.val_accuracy));
        if better {
            chosen = Some((lr, candidate, run));
        }
    }
    let (lr, mut model, run) = chosen.expect("non-empty grid");
    report.chosen_lr = lr;
    report.note(format!("chose lr {lr:.2e}"));
    report.epochs.extend(run.records);
    if let Err(e) = keep(run.best, &mut report) {
        return Err(fail(e, &mut report));
    }

    for (si, &size) in stages.iter().enumerate().skip(1) {
        let run = match run_stage(&mut model, train, val, cfg, si + 1, size, lr, &mut report) {
            Ok(run) => run,
            Err(e) => return Err(fail(e, &mut report)),
        };
        report.epochs.extend(run.records);
        if let Err(e) = keep(run.best, &mut report) {
            return Err(fail(e, &mut report));
        }
    }

    let (_, ck) = best.expect("at least one epoch ran");
    let restored = Model::from_checkpoint(&ck).map_err(|e| fail(e, &mut report))?;
    Ok(TrainOutcome {
        model: restored,
        report,
    })
}
