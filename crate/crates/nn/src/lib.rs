//! A small reverse-mode autodiff engine for CNN classifiers.
//!
//! Tensors are generic over [`Scalar`]; models run in `f32` and can be cast
//! to `f64` copies for finite-difference gradient checks.

pub mod checkpoint;
pub mod error;
pub mod layers;
pub mod ops;
pub mod optim;
pub mod scalar;
pub mod tensor;

pub use checkpoint::{Checkpoint, StoredTensor};
pub use error::{NnError, Result};
pub use layers::{ForwardCtx, Layer, LayerSpec, Mode, Sequential};
pub use optim::{cosine_lr, Adam};
pub use scalar::Scalar;
pub use tensor::{grad_enabled, no_grad, Tensor};
