use gestigo_core::{RasterImage, RenderConfig, SkeletonSequence, VoName};
use gestigo_nn::{no_grad, ops, ForwardCtx, Mode};

use crate::data::{image_batch, render_views, ImageSource};
use crate::error::{NetError, Result};
use crate::model::Model;

/// All `j + 1` probability vectors for one gesture.
#[derive(Clone, Debug, PartialEq)]
pub struct StreamPrediction {
    pub stream_probs: Vec<Vec<f32>>,
    pub tuner_probs: Vec<f32>,
    /// Cross-entropy of each stream and of the tuner, when the label is
    /// known.
    pub stream_losses: Option<Vec<f64>>,
    pub tuner_loss: Option<f64>,
}

impl StreamPrediction {
    /// The decision: tuner argmax, 0-based.
    pub fn class(&self) -> usize {
        argmax(&self.tuner_probs)
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(v: &[f32]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

fn nll(p: f32) -> f64 {
    -(p.max(f32::MIN_POSITIVE) as f64).ln()
}

/// Eval-mode forward over several gestures at `size` px. Each gesture is
/// a slice of `j` images in stream order.
pub fn predict_batch(
    model: &Model,
    gestures: &[&[RasterImage]],
    size: usize,
    labels: Option<&[usize]>,
) -> Result<Vec<StreamPrediction>> {
    let j = model.config().stream_count();
    if let Some(bad) = gestures.iter().find(|g| g.len() != j) {
        return Err(NetError::Argument(format!("model expects {j} images per gesture, got {}", bad.len())));
    }
    if gestures.is_empty() {
        return Ok(Vec::new());
    }
    let streams = (0..j)
        .map(|k| image_batch(&gestures.iter().map(|g| &g[k]).collect::<Vec<_>>(), size))
        .collect::<Result<Vec<_>>>()?;
    let out = no_grad(|| model.forward(&streams, Mode::Eval, &mut ForwardCtx::new(0)))?;
    let n = model.config().class_count();
    let sp: Vec<Vec<f32>> = out.stream_probs.iter().map(|t| t.to_vec()).collect();
    let tp = no_grad(|| ops::softmax(&out.tuner_logits))?.to_vec();
    Ok((0..gestures.len())
        .map(|b| {
            let stream_probs: Vec<Vec<f32>> = sp.iter().map(|s| s[b * n..(b + 1) * n].to_vec()).collect();
            let tuner_probs = tp[b * n..(b + 1) * n].to_vec();
            let label = labels.map(|l| l[b]);
            StreamPrediction {
                stream_losses: label.map(|l| stream_probs.iter().map(|p| nll(p[l])).collect()),
                tuner_loss: label.map(|l| nll(tuner_probs[l])),
                stream_probs,
                tuner_probs,
            }
        })
        .collect())
}

/// One gesture from pre-rendered views, at the model's inference size.
pub fn predict_images(model: &Model, images: &[RasterImage], label: Option<usize>) -> Result<StreamPrediction> {
    let labels = label.map(|l| [l]);
    let mut out = predict_batch(model, &[images], model.config().eval_px, labels.as_ref().map(|l| &l[..]))?;
    Ok(out.remove(0))
}

/// Renders a sequence the way the model's training images were rendered.
pub fn render_for_model(model: &Model, seq: &SkeletonSequence) -> Result<Vec<RasterImage>> {
    let cfg = model.config();
    render_views(seq, cfg.dataset, &cfg.vos, &RenderConfig::with_size(cfg.master_px))
}

/// Condenses `seq` on the fly and classifies it. `vos` must be the order
/// the model was trained with.
pub fn predict(model: &Model, seq: &SkeletonSequence, vos: &[VoName]) -> Result<StreamPrediction> {
    if vos != model.config().vos.as_slice() {
        return Err(NetError::Config(format!(
            "views {} do not match the model's {}",
            names(vos),
            names(&model.config().vos)
        )));
    }
    let images = render_for_model(model, seq)?;
    predict_images(model, &images, seq.label().map(|l| l - 1))
}

pub(crate) fn names(vos: &[VoName]) -> String {
    vos.iter().map(|v| v.as_str()).collect::<Vec<_>>().join(",")
}

/// Tuner accuracy and per-stream accuracies over a source at `size` px.
pub fn accuracy<S: ImageSource + ?Sized>(model: &Model, src: &S, size: usize, batch: usize) -> Result<(f64, Vec<f64>)> {
    if src.is_empty() {
        return Err(NetError::Argument("empty validation set".into()));
    }
    let j = model.config().stream_count();
    let (mut tuner, mut streams) = (0usize, vec![0usize; j]);
    let indices: Vec<usize> = (0..src.len()).collect();
    for chunk in indices.chunks(batch.max(1)) {
        let images = chunk.iter().map(|&i| src.images(i)).collect::<Result<Vec<_>>>()?;
        let refs: Vec<&[RasterImage]> = images.iter().map(Vec::as_slice).collect();
        for (p, &i) in predict_batch(model, &refs, size, None)?.iter().zip(chunk) {
            let label = src.label(i);
            tuner += usize::from(p.class() == label);
            for (k, sp) in p.stream_probs.iter().enumerate() {
                streams[k] += usize::from(argmax(sp) == label);
            }
        }
    }
    let n = src.len() as f64;
    Ok((tuner as f64 / n, streams.into_iter().map(|c| c as f64 / n).collect()))
}
