use std::path::Path;

use gestigo_nn::{ops, Checkpoint, ForwardCtx, Layer, LayerSpec, Mode, Scalar, Sequential, StoredTensor, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{ModelConfig, HEAD_DROPOUT};
use crate::error::{NetError, Result};
use crate::loss::homoscedastic_loss;
use crate::pseudo::pseudo_tensor;

/// `[3×3 conv → batchnorm → relu → 2×2 maxpool]` per width.
fn conv_stack(widths: &[usize]) -> Vec<LayerSpec> {
    let mut specs = Vec::new();
    let mut in_ch = 3;
    for &w in widths {
        specs.extend([
            LayerSpec::Conv2d {
                in_ch,
                out_ch: w,
                kernel: 3,
                stride: 1,
                padding: 1,
            },
            LayerSpec::BatchNorm2d { channels: w },
            LayerSpec::Relu,
            LayerSpec::MaxPool2d { kernel: 2, stride: 2 },
        ]);
        in_ch = w;
    }
    specs
}

/// Classifier head: concatenated global average and max pooling, then two
/// batchnorm/dropout/linear blocks.
#[derive(Debug)]
pub struct Head<T: Scalar = f32> {
    avg: Layer<T>,
    max: Layer<T>,
    concat: Layer<T>,
    mlp: Sequential<T>,
}

impl<T: Scalar> Head<T> {
    fn new(features: usize, hidden: usize, classes: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        let pooled = 2 * features;
        let mlp = [
            LayerSpec::Flatten,
            LayerSpec::BatchNorm1d { features: pooled },
            LayerSpec::Dropout { p: HEAD_DROPOUT[0] },
            LayerSpec::Linear {
                in_features: pooled,
                out_features: hidden,
            },
            LayerSpec::Relu,
            LayerSpec::BatchNorm1d { features: hidden },
            LayerSpec::Dropout { p: HEAD_DROPOUT[1] },
            LayerSpec::Linear {
                in_features: hidden,
                out_features: classes,
            },
        ];
        Ok(Head {
            avg: Layer::new(LayerSpec::AdaptiveAvgPool { out_h: 1, out_w: 1 }, rng)?,
            max: Layer::new(LayerSpec::AdaptiveMaxPool { out_h: 1, out_w: 1 }, rng)?,
            concat: Layer::new(LayerSpec::Concat { dim: 1 }, rng)?,
            mlp: Sequential::new(&mlp, rng)?,
        })
    }

    fn forward(&self, x: &Tensor<T>, mode: Mode, ctx: &mut ForwardCtx) -> Result<Tensor<T>> {
        let a = self.avg.forward(&[x], mode, ctx)?;
        let m = self.max.forward(&[x], mode, ctx)?;
        let c = self.concat.forward(&[&a, &m], mode, ctx)?;
        Ok(self.mlp.forward(&c, mode, ctx)?)
    }

    fn layers(&self) -> impl Iterator<Item = &Layer<T>> {
        [&self.avg, &self.max, &self.concat].into_iter().chain(&self.mlp.layers)
    }

    fn cast<U: Scalar>(&self) -> Head<U> {
        Head {
            avg: self.avg.cast(),
            max: self.max.cast(),
            concat: self.concat.cast(),
            mlp: self.mlp.cast(),
        }
    }
}

/// Outputs of one forward pass over a batch.
pub struct ForwardOutput<T: Scalar = f32> {
    /// One `[B, N]` logit tensor per stream, in stream order.
    pub stream_logits: Vec<Tensor<T>>,
    pub stream_probs: Vec<Tensor<T>>,
    /// Float pseudo-image `[B, 3, P, P]` fed to the tuner.
    pub pseudo: Tensor<T>,
    pub tuner_logits: Tensor<T>,
}

impl<T: Scalar> ForwardOutput<T> {
    /// The `j + 1` cross-entropy losses (streams, then tuner); every
    /// stream shares the gesture label.
    pub fn losses(&self, labels: &[usize]) -> Result<Vec<Tensor<T>>> {
        self.stream_logits
            .iter()
            .chain([&self.tuner_logits])
            .map(|l| ops::cross_entropy(l, labels).map_err(Into::into))
            .collect()
    }
}

/// Multi-stream network with a shared encoder and classifier, a
/// pseudo-image fusion step and a small tuner network.
#[derive(Debug)]
pub struct Model<T: Scalar = f32> {
    config: ModelConfig,
    encoder: Sequential<T>,
    head: Head<T>,
    tuner_encoder: Sequential<T>,
    tuner_head: Head<T>,
    log_vars: Tensor<T>,
}

impl<T: Scalar> Model<T> {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = config.class_count();
        let enc_out = *config.encoder_widths.last().expect("validated");
        let tun_out = *config.tuner_widths.last().expect("validated");
        let model = Model {
            encoder: Sequential::new(&conv_stack(&config.encoder_widths), &mut rng)?,
            head: Head::new(enc_out, config.head_hidden, n, &mut rng)?,
            tuner_encoder: Sequential::new(&conv_stack(&config.tuner_widths), &mut rng)?,
            tuner_head: Head::new(tun_out, config.tuner_hidden, n, &mut rng)?,
            log_vars: Tensor::param(vec![T::zero(); config.stream_count() + 1], &[config.stream_count() + 1])?,
            config,
        };
        if model.tuner_param_count() >= model.encoder_param_count() {
            return Err(NetError::Config(format!(
                "tuner has {} parameters, not fewer than the encoder's {}",
                model.tuner_param_count(),
                model.encoder_param_count()
            )));
        }
        Ok(model)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub(crate) fn config_mut(&mut self) -> &mut ModelConfig {
        &mut self.config
    }

    /// The encoder used for stream `k`. Every stream gets the same one.
    pub fn stream_encoder(&self, _k: usize) -> &Sequential<T> {
        &self.encoder
    }

    pub fn log_vars(&self) -> &Tensor<T> {
        &self.log_vars
    }

    pub fn encoder_param_count(&self) -> usize {
        self.encoder.param_count()
    }

    pub fn tuner_param_count(&self) -> usize {
        self.tuner_encoder.param_count() + self.tuner_head.layers().map(Layer::param_count).sum::<usize>()
    }

    /// Every layer in checkpoint order.
    pub fn layers(&self) -> Vec<&Layer<T>> {
        self.encoder
            .layers
            .iter()
            .chain(self.head.layers())
            .chain(&self.tuner_encoder.layers)
            .chain(self.tuner_head.layers())
            .collect()
    }

    /// All trainable tensors, log-variances last.
    pub fn params(&self) -> Vec<Tensor<T>> {
        self.layers()
            .iter()
            .flat_map(|l| l.params().iter().cloned())
            .chain([self.log_vars.clone()])
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(Tensor::numel).sum()
    }

    /// Copy with another element type (fresh storage, same values).
    pub fn cast<U: Scalar>(&self) -> Model<U> {
        Model {
            config: self.config.clone(),
            encoder: self.encoder.cast(),
            head: self.head.cast(),
            tuner_encoder: self.tuner_encoder.cast(),
            tuner_head: self.tuner_head.cast(),
            log_vars: self.log_vars.cast(),
        }
    }

    pub fn duplicate(&self) -> Model<T> {
        self.cast()
    }

    /// Runs every stream through the shared encoder and head, fuses the
    /// stream probabilities into a pseudo-image and classifies it.
    ///
    /// `streams[k]` is the `[B, 3, S, S]` batch for view `k`.
    pub fn forward(&self, streams: &[Tensor<T>], mode: Mode, ctx: &mut ForwardCtx) -> Result<ForwardOutput<T>> {
        let j = self.config.stream_count();
        if streams.len() != j {
            return Err(NetError::Argument(format!(
                "model expects {j} streams, got {}",
                streams.len()
            )));
        }
        let first = streams[0].shape();
        let ok = first.len() == 4 && first[1] == 3 && first[2] == first[3] && streams.iter().all(|s| s.shape() == first);
        if !ok {
            return Err(NetError::Argument(format!(
                "stream inputs must be identical square [B, 3, S, S] batches; got {:?}",
                streams.iter().map(|s| s.shape().to_vec()).collect::<Vec<_>>()
            )));
        }
        let mut stream_logits = Vec::with_capacity(j);
        let mut stream_probs = Vec::with_capacity(j);
        for x in streams {
            let features = self.encoder.forward(x, mode, ctx)?;
            let logits = self.head.forward(&features, mode, ctx)?;
            stream_probs.push(ops::softmax(&logits)?);
            stream_logits.push(logits);
        }
        let pseudo = pseudo_tensor(&stream_probs, self.config.pseudo_px)?;
        let features = self.tuner_encoder.forward(&pseudo, mode, ctx)?;
        let tuner_logits = self.tuner_head.forward(&features, mode, ctx)?;
        Ok(ForwardOutput {
            stream_logits,
            stream_probs,
            pseudo,
            tuner_logits,
        })
    }

    /// Homoscedastic total over the `j + 1` losses.
    pub fn total_loss(&self, losses: &[Tensor<T>]) -> Result<Tensor<T>> {
        homoscedastic_loss(losses, &self.log_vars)
    }
}

impl Model<f32> {
    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::capture(self.config.to_header(), &self.layers());
        ck.tensors.push(StoredTensor {
            name: "log_vars".into(),
            shape: self.log_vars.shape().to_vec(),
            data: self.log_vars.to_vec(),
        });
        ck
    }

    /// Overwrites the weights with a checkpoint of the same architecture.
    pub fn restore(&self, ck: &Checkpoint) -> Result<()> {
        let rest = ck.restore(&self.layers())?;
        match rest {
            [lv] if lv.name == "log_vars" && lv.shape == self.log_vars.shape() => {
                self.log_vars.set_data(lv.data.clone())?;
                Ok(())
            }
            _ => Err(NetError::Config("checkpoint lacks the loss log-variances".into())),
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let config = ModelConfig::from_header(&ck.header)?;
        let model = Model::new(config, 0)?;
        model.restore(ck)?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        Ok(self.to_checkpoint().save(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }
}
