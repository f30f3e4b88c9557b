//! Decision-level fusion: per-stream class probabilities laid out as an
//! image for the tuner.
//!
//! The canvas is split into `j` horizontal bands (stream order, top to
//! bottom), each split into `N` vertical cells (class order, left to right).
//! A cell holds its probability in all three channels. Integer-division
//! remainders go to the last band and the last cell.

use gestigo_core::RasterImage;
use gestigo_nn::{Scalar, Tensor};

use crate::error::{NetError, Result};

/// Tolerance on probability-vector sums.
pub const PROB_SUM_TOL: f64 = 1e-4;

/// `[start, end)` of each of `parts` strips over `px` pixels.
pub fn strip_bounds(parts: usize, px: usize) -> Vec<(usize, usize)> {
    let w = px / parts;
    (0..parts)
        .map(|i| (i * w, if i + 1 == parts { px } else { (i + 1) * w }))
        .collect()
}

fn check_layout(j: usize, n: usize, px: usize) -> Result<()> {
    if j == 0 || n == 0 || px < j || px < n {
        return Err(NetError::Argument(format!(
            "a {px} px pseudo-image cannot hold {j} bands of {n} cells"
        )));
    }
    Ok(())
}

/// Float pseudo-image `[B, 3, px, px]` from `j` tensors of shape `[B, N]`.
///
/// This is the training path: values are the probabilities themselves and
/// the gradient of a cell is the sum over its pixels.
pub fn pseudo_tensor<T: Scalar>(probs: &[Tensor<T>], px: usize) -> Result<Tensor<T>> {
    let first = probs
        .first()
        .ok_or_else(|| NetError::Argument("pseudo-image needs at least one stream".into()))?;
    if first.shape().len() != 2 || probs.iter().any(|p| p.shape() != first.shape()) {
        return Err(NetError::Argument("stream probabilities must share a [B, N] shape".into()));
    }
    let (j, b, n) = (probs.len(), first.shape()[0], first.shape()[1]);
    check_layout(j, n, px)?;
    let bands = strip_bounds(j, px);
    let cells = strip_bounds(n, px);
    // Column → class lookup for one row.
    let col_class: Vec<usize> = cells
        .iter()
        .enumerate()
        .flat_map(|(c, (x0, x1))| std::iter::repeat(c).take(x1 - x0))
        .collect();

    let plane = px * px;
    let mut out = vec![T::zero(); b * 3 * plane];
    let datas: Vec<Vec<T>> = probs.iter().map(Tensor::to_vec).collect();
    for bi in 0..b {
        for (s, (y0, y1)) in bands.iter().enumerate() {
            let row: Vec<T> = col_class.iter().map(|&c| datas[s][bi * n + c]).collect();
            for ch in 0..3 {
                for y in *y0..*y1 {
                    let start = (bi * 3 + ch) * plane + y * px;
                    out[start..start + px].copy_from_slice(&row);
                }
            }
        }
    }
    Tensor::from_op(out, &[b, 3, px, px], probs.to_vec(), move |g| {
        let mut grads = vec![vec![T::zero(); b * n]; j];
        for bi in 0..b {
            for (s, (y0, y1)) in bands.iter().enumerate() {
                for ch in 0..3 {
                    for y in *y0..*y1 {
                        let start = (bi * 3 + ch) * plane + y * px;
                        for (x, &c) in col_class.iter().enumerate() {
                            grads[s][bi * n + c] = grads[s][bi * n + c] + g[start + x];
                        }
                    }
                }
            }
        }
        grads.into_iter().map(Some).collect()
    })
    .map_err(Into::into)
}

fn validate_probs(probs: &[Vec<f32>]) -> Result<usize> {
    let n = probs
        .first()
        .map(Vec::len)
        .ok_or_else(|| NetError::Argument("pseudo-image needs at least one stream".into()))?;
    for (s, p) in probs.iter().enumerate() {
        if p.len() != n {
            return Err(NetError::Argument(format!("stream {s} has {} classes, expected {n}", p.len())));
        }
        if p.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(NetError::Argument(format!("stream {s} has entries outside [0, 1]")));
        }
        let sum: f64 = p.iter().map(|v| *v as f64).sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(NetError::Argument(format!("stream {s} sums to {sum}")));
        }
    }
    Ok(n)
}

/// 8-bit pseudo-image with cell intensity `round(255·p)`.
pub fn encode_pseudo(probs: &[Vec<f32>], px: usize) -> Result<RasterImage> {
    let n = validate_probs(probs)?;
    check_layout(probs.len(), n, px)?;
    let mut img = RasterImage::new(px, px, [0, 0, 0]);
    for ((y0, y1), p) in strip_bounds(probs.len(), px).into_iter().zip(probs) {
        for ((x0, x1), v) in strip_bounds(n, px).into_iter().zip(p) {
            let level = (255.0 * *v as f64).round() as u8;
            for y in y0..y1 {
                for x in x0..x1 {
                    img.put(x, y, [level; 3]);
                }
            }
        }
    }
    Ok(img)
}

/// Inverse of [`encode_pseudo`]: mean cell intensity over 255.
pub fn decode_pseudo(img: &RasterImage, streams: usize, classes: usize) -> Result<Vec<Vec<f32>>> {
    if img.width() != img.height() {
        return Err(NetError::Argument("pseudo-images are square".into()));
    }
    let px = img.width();
    check_layout(streams, classes, px)?;
    let cells = strip_bounds(classes, px);
    Ok(strip_bounds(streams, px)
        .into_iter()
        .map(|(y0, y1)| {
            cells
                .iter()
                .map(|&(x0, x1)| {
                    let mut sum = 0u64;
                    for y in y0..y1 {
                        for x in x0..x1 {
                            sum += img.get(x, y).iter().map(|c| *c as u64).sum::<u64>();
                        }
                    }
                    (sum as f64 / (3 * (y1 - y0) * (x1 - x0)) as f64 / 255.0) as f32
                })
                .collect()
        })
        .collect())
}
