use gestigo_nn::{Scalar, Tensor};

use crate::error::{NetError, Result};

/// Uncertainty-weighted multi-task total `Σ_k exp(−s_k)·L_k + s_k`, where
/// `s` holds one learnable log-variance per loss.
pub fn homoscedastic_loss<T: Scalar>(losses: &[Tensor<T>], s: &Tensor<T>) -> Result<Tensor<T>> {
    if losses.is_empty() || s.shape() != [losses.len()] {
        return Err(NetError::Argument(format!(
            "{} losses for log-variances of shape {:?}",
            losses.len(),
            s.shape()
        )));
    }
    if let Some(l) = losses.iter().find(|l| l.numel() != 1) {
        return Err(NetError::Argument(format!("loss of shape {:?} is not a scalar", l.shape())));
    }
    let ls: Vec<T> = losses.iter().map(Tensor::item).collect();
    let sv = s.to_vec();
    let w: Vec<T> = sv.iter().map(|v| (-*v).exp()).collect();
    let total = ls
        .iter()
        .zip(&sv)
        .zip(&w)
        .fold(T::zero(), |acc, ((l, s), w)| acc + *w * *l + *s);
    let mut parents = losses.to_vec();
    parents.push(s.clone());
    let k = losses.len();
    Tensor::from_op(vec![total], &[1], parents, move |g| {
        let mut grads: Vec<Option<Vec<T>>> = w.iter().map(|w| Some(vec![*w * g[0]])).collect();
        grads.push(Some((0..k).map(|i| (T::one() - w[i] * ls[i]) * g[0]).collect()));
        grads
    })
    .map_err(Into::into)
}
