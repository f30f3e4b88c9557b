//! Parameterized layers and their serializable descriptions.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{NnError, Result};
use crate::ops;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

/// Shape-level description of one layer. The text form (`Display` /
/// `FromStr`) is what checkpoints store.
#[derive(Clone, Debug, PartialEq)]
pub enum LayerSpec {
    Conv2d {
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    },
    MaxPool2d {
        kernel: usize,
        stride: usize,
    },
    AdaptiveAvgPool {
        out_h: usize,
        out_w: usize,
    },
    AdaptiveMaxPool {
        out_h: usize,
        out_w: usize,
    },
    BatchNorm2d {
        channels: usize,
    },
    BatchNorm1d {
        features: usize,
    },
    Dropout {
        p: f64,
    },
    Linear {
        in_features: usize,
        out_features: usize,
    },
    Relu,
    Flatten,
    /// Joins its inputs along `dim`.
    Concat {
        dim: usize,
    },
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerSpec::Conv2d {
                in_ch,
                out_ch,
                kernel,
                stride,
                padding,
            } => write!(f, "conv2d {in_ch} {out_ch} {kernel} {stride} {padding}"),
            LayerSpec::MaxPool2d { kernel, stride } => write!(f, "maxpool2d {kernel} {stride}"),
            LayerSpec::AdaptiveAvgPool { out_h, out_w } => write!(f, "adaptive_avg_pool {out_h} {out_w}"),
            LayerSpec::AdaptiveMaxPool { out_h, out_w } => write!(f, "adaptive_max_pool {out_h} {out_w}"),
            LayerSpec::BatchNorm2d { channels } => write!(f, "batchnorm2d {channels}"),
            LayerSpec::BatchNorm1d { features } => write!(f, "batchnorm1d {features}"),
            // {:?} on f64 round-trips exactly.
            LayerSpec::Dropout { p } => write!(f, "dropout {p:?}"),
            LayerSpec::Linear {
                in_features,
                out_features,
            } => write!(f, "linear {in_features} {out_features}"),
            LayerSpec::Relu => write!(f, "relu"),
            LayerSpec::Flatten => write!(f, "flatten"),
            LayerSpec::Concat { dim } => write!(f, "concat {dim}"),
        }
    }
}

impl FromStr for LayerSpec {
    type Err = NnError;

    fn from_str(s: &str) -> Result<Self> {
        let mut it = s.split_whitespace();
        let kind = it.next().ok_or_else(|| NnError::Checkpoint("empty layer spec".into()))?;
        let args: Vec<&str> = it.collect();
        let bad = || NnError::Checkpoint(format!("malformed layer spec {s:?}"));
        let int = |i: usize| -> Result<usize> { args.get(i).and_then(|a| a.parse().ok()).ok_or_else(bad) };
        let arity = |n: usize| if args.len() == n { Ok(()) } else { Err(bad()) };
        let spec = match kind {
            "conv2d" => {
                arity(5)?;
                LayerSpec::Conv2d {
                    in_ch: int(0)?,
                    out_ch: int(1)?,
                    kernel: int(2)?,
                    stride: int(3)?,
                    padding: int(4)?,
                }
            }
            "maxpool2d" => {
                arity(2)?;
                LayerSpec::MaxPool2d {
                    kernel: int(0)?,
                    stride: int(1)?,
                }
            }
            "adaptive_avg_pool" => {
                arity(2)?;
                LayerSpec::AdaptiveAvgPool {
                    out_h: int(0)?,
                    out_w: int(1)?,
                }
            }
            "adaptive_max_pool" => {
                arity(2)?;
                LayerSpec::AdaptiveMaxPool {
                    out_h: int(0)?,
                    out_w: int(1)?,
                }
            }
            "batchnorm2d" => {
                arity(1)?;
                LayerSpec::BatchNorm2d { channels: int(0)? }
            }
            "batchnorm1d" => {
                arity(1)?;
                LayerSpec::BatchNorm1d { features: int(0)? }
            }
            "dropout" => {
                arity(1)?;
                LayerSpec::Dropout {
                    p: args[0].parse().map_err(|_| bad())?,
                }
            }
            "linear" => {
                arity(2)?;
                LayerSpec::Linear {
                    in_features: int(0)?,
                    out_features: int(1)?,
                }
            }
            "relu" => {
                arity(0)?;
                LayerSpec::Relu
            }
            "flatten" => {
                arity(0)?;
                LayerSpec::Flatten
            }
            "concat" => {
                arity(1)?;
                LayerSpec::Concat { dim: int(0)? }
            }
            _ => return Err(NnError::Checkpoint(format!("unknown layer kind {kind:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl LayerSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            LayerSpec::Conv2d {
                in_ch,
                out_ch,
                kernel,
                stride,
                ..
            } => in_ch > 0 && out_ch > 0 && kernel > 0 && stride > 0,
            LayerSpec::MaxPool2d { kernel, stride } => kernel > 0 && stride > 0,
            LayerSpec::AdaptiveAvgPool { out_h, out_w } | LayerSpec::AdaptiveMaxPool { out_h, out_w } => {
                out_h > 0 && out_w > 0
            }
            LayerSpec::BatchNorm2d { channels: n } | LayerSpec::BatchNorm1d { features: n } => n > 0,
            LayerSpec::Dropout { p } => (0.0..1.0).contains(&p),
            LayerSpec::Linear {
                in_features,
                out_features,
            } => in_features > 0 && out_features > 0,
            LayerSpec::Relu | LayerSpec::Flatten | LayerSpec::Concat { .. } => true,
        };
        if ok {
            Ok(())
        } else {
            Err(NnError::Argument(format!("invalid layer spec `{self}`")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Per-forward state: the dropout random stream.
pub struct ForwardCtx {
    pub rng: ChaCha8Rng,
}

impl ForwardCtx {
    pub fn new(seed: u64) -> Self {
        ForwardCtx {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

/// A layer instance: spec plus trainable parameters and non-trainable
/// buffers (batchnorm running statistics).
#[derive(Debug)]
pub struct Layer<T: Scalar = f32> {
    spec: LayerSpec,
    params: Vec<Tensor<T>>,
    buffers: Vec<Tensor<T>>,
}

fn uniform<T: Scalar, R: Rng>(rng: &mut R, n: usize, bound: f64) -> Vec<T> {
    (0..n).map(|_| T::lit(rng.gen_range(-bound..=bound))).collect()
}

impl<T: Scalar> Layer<T> {
    /// He-uniform weights, zero biases, unit batchnorm scale.
    pub fn new<R: Rng>(spec: LayerSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let mut params = Vec::new();
        let mut buffers = Vec::new();
        match spec {
            LayerSpec::Conv2d {
                in_ch, out_ch, kernel, ..
            } => {
                let fan_in = in_ch * kernel * kernel;
                let bound = (6.0 / fan_in as f64).sqrt();
                params.push(Tensor::param(
                    uniform(rng, out_ch * fan_in, bound),
                    &[out_ch, in_ch, kernel, kernel],
                )?);
                params.push(Tensor::param(vec![T::zero(); out_ch], &[out_ch])?);
            }
            LayerSpec::Linear {
                in_features,
                out_features,
            } => {
                let bound = (6.0 / in_features as f64).sqrt();
                params.push(Tensor::param(
                    uniform(rng, out_features * in_features, bound),
                    &[out_features, in_features],
                )?);
                params.push(Tensor::param(vec![T::zero(); out_features], &[out_features])?);
            }
            LayerSpec::BatchNorm2d { channels: n } | LayerSpec::BatchNorm1d { features: n } => {
                params.push(Tensor::param(vec![T::one(); n], &[n])?);
                params.push(Tensor::param(vec![T::zero(); n], &[n])?);
                buffers.push(Tensor::new(vec![T::zero(); n], &[n])?);
                buffers.push(Tensor::new(vec![T::one(); n], &[n])?);
            }
            _ => {}
        }
        Ok(Layer { spec, params, buffers })
    }

    pub fn spec(&self) -> &LayerSpec {
        &self.spec
    }

    pub fn params(&self) -> &[Tensor<T>] {
        &self.params
    }

    pub fn buffers(&self) -> &[Tensor<T>] {
        &self.buffers
    }

    /// Parameters followed by buffers, the order checkpoints use.
    pub fn state(&self) -> impl Iterator<Item = &Tensor<T>> {
        self.params.iter().chain(&self.buffers)
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Tensor::numel).sum()
    }

    /// Copy with another element type; parameters stay trainable.
    pub fn cast<U: Scalar>(&self) -> Layer<U> {
        Layer {
            spec: self.spec.clone(),
            params: self.params.iter().map(Tensor::cast).collect(),
            buffers: self.buffers.iter().map(Tensor::cast).collect(),
        }
    }

    /// Deep copy with fresh storage.
    pub fn duplicate(&self) -> Layer<T> {
        self.cast()
    }

    pub fn forward(&self, inputs: &[&Tensor<T>], mode: Mode, ctx: &mut ForwardCtx) -> Result<Tensor<T>> {
        if let LayerSpec::Concat { dim } = self.spec {
            return ops::concat(inputs, dim);
        }
        let [x] = inputs else {
            return Err(NnError::Argument(format!(
                "layer `{}` takes one input, got {}",
                self.spec,
                inputs.len()
            )));
        };
        let train = mode == Mode::Train;
        match self.spec {
            LayerSpec::Conv2d { stride, padding, .. } => {
                ops::conv2d(x, &self.params[0], Some(&self.params[1]), stride, padding)
            }
            LayerSpec::MaxPool2d { kernel, stride } => ops::max_pool2d(x, kernel, stride),
            LayerSpec::AdaptiveAvgPool { out_h, out_w } => ops::adaptive_avg_pool2d(x, out_h, out_w),
            LayerSpec::AdaptiveMaxPool { out_h, out_w } => ops::adaptive_max_pool2d(x, out_h, out_w),
            LayerSpec::BatchNorm2d { .. } | LayerSpec::BatchNorm1d { .. } => {
                let want = if matches!(self.spec, LayerSpec::BatchNorm2d { .. }) { 4 } else { 2 };
                if x.shape().len() != want {
                    return Err(NnError::Shape(format!(
                        "`{}` expects a rank-{want} input, got {:?}",
                        self.spec,
                        x.shape()
                    )));
                }
                ops::batch_norm(
                    x,
                    &self.params[0],
                    &self.params[1],
                    &self.buffers[0],
                    &self.buffers[1],
                    train,
                    BN_EPS,
                    BN_MOMENTUM,
                )
            }
            LayerSpec::Dropout { p } => ops::dropout(x, p, train, &mut ctx.rng),
            LayerSpec::Linear { .. } => ops::linear(x, &self.params[0], Some(&self.params[1])),
            LayerSpec::Relu => ops::relu(x),
            LayerSpec::Flatten => ops::flatten(x),
            LayerSpec::Concat { .. } => unreachable!(),
        }
    }
}

/// Layers applied in order to a single input.
#[derive(Debug)]
pub struct Sequential<T: Scalar = f32> {
    pub layers: Vec<Layer<T>>,
}

impl<T: Scalar> Sequential<T> {
    pub fn new<R: Rng>(specs: &[LayerSpec], rng: &mut R) -> Result<Self> {
        let layers = specs.iter().map(|s| Layer::new(s.clone(), rng)).collect::<Result<_>>()?;
        Ok(Sequential { layers })
    }

    pub fn forward(&self, x: &Tensor<T>, mode: Mode, ctx: &mut ForwardCtx) -> Result<Tensor<T>> {
        let mut h = x.clone();
        for l in &self.layers {
            h = l.forward(&[&h], mode, ctx)?;
        }
        Ok(h)
    }

    pub fn params(&self) -> Vec<Tensor<T>> {
        self.layers.iter().flat_map(|l| l.params().iter().cloned()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    pub fn cast<U: Scalar>(&self) -> Sequential<U> {
        Sequential {
            layers: self.layers.iter().map(Layer::cast).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_text_round_trips() {
        let specs = [
            LayerSpec::Conv2d {
                in_ch: 3,
                out_ch: 16,
                kernel: 3,
                stride: 1,
                padding: 1,
            },
            LayerSpec::MaxPool2d { kernel: 2, stride: 2 },
            LayerSpec::AdaptiveAvgPool { out_h: 1, out_w: 1 },
            LayerSpec::AdaptiveMaxPool { out_h: 2, out_w: 3 },
            LayerSpec::BatchNorm2d { channels: 8 },
            LayerSpec::BatchNorm1d { features: 256 },
            LayerSpec::Dropout { p: 0.1 + 0.2 },
            LayerSpec::Linear {
                in_features: 256,
                out_features: 512,
            },
            LayerSpec::Relu,
            LayerSpec::Flatten,
            LayerSpec::Concat { dim: 1 },
        ];
        for s in specs {
            assert_eq!(s.to_string().parse::<LayerSpec>().unwrap(), s);
        }
        assert!("conv2d 1 2".parse::<LayerSpec>().is_err());
        assert!("dropout 1.0".parse::<LayerSpec>().is_err());
        assert!("softmax".parse::<LayerSpec>().is_err());
    }
}
