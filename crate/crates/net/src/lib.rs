//! Multi-stream gesture classifier.
//!
//! Each gesture is rendered from `j` view orientations. A shared encoder
//! and classifier turn every view into class probabilities; those are laid
//! out as a pseudo-image that a small tuner network classifies again. The
//! tuner's output is the decision. All `j + 1` cross-entropy losses are
//! combined with learned homoscedastic weights.

pub mod augment;
pub mod config;
pub mod data;
pub mod error;
pub mod loss;
pub mod model;
pub mod predict;
pub mod pseudo;
pub mod train;

pub use augment::{augment, AugmentConfig};
pub use config::ModelConfig;
pub use data::{image_batch, render_source, EncodedSource, ImageSource, MemorySource, Sample};
pub use error::{NetError, Result};
pub use loss::homoscedastic_loss;
pub use model::{ForwardOutput, Model};
pub use predict::{accuracy, argmax, predict, predict_batch, predict_images, render_for_model, StreamPrediction};
pub use pseudo::{decode_pseudo, encode_pseudo, pseudo_tensor};
pub use train::{train, EpochRecord, TrainConfig, TrainFailure, TrainOutcome, TrainReport};
