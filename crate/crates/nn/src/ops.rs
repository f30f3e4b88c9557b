//! Differentiable operations. Layouts are row-major; images are `[N, C, H, W]`.

use rand::Rng;

use crate::error::{NnError, Result};
use crate::scalar::Scalar;
use crate::tensor::{grad_enabled, numel, Tensor};

fn same_shape<T: Scalar>(op: &str, a: &Tensor<T>, b: &Tensor<T>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(NnError::Shape(format!(
            "{op}: shapes {:?} and {:?} differ",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

fn rank<T: Scalar>(op: &str, x: &Tensor<T>, r: usize) -> Result<()> {
    if x.shape().len() != r {
        return Err(NnError::Shape(format!(
            "{op}: expected a rank-{r} input, got shape {:?}",
            x.shape()
        )));
    }
    Ok(())
}

pub fn add<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    same_shape("add", a, b)?;
    let data = a.data().iter().zip(b.data().iter()).map(|(x, y)| *x + *y).collect();
    Tensor::from_op(data, a.shape(), vec![a.clone(), b.clone()], |g| {
        vec![Some(g.to_vec()), Some(g.to_vec())]
    })
}

pub fn mul<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    same_shape("mul", a, b)?;
    let data = a.data().iter().zip(b.data().iter()).map(|(x, y)| *x * *y).collect();
    let (ac, bc) = (a.clone(), b.clone());
    Tensor::from_op(data, a.shape(), vec![a.clone(), b.clone()], move |g| {
        let da = g.iter().zip(bc.data().iter()).map(|(g, y)| *g * *y).collect();
        let db = g.iter().zip(ac.data().iter()).map(|(g, x)| *g * *x).collect();
        vec![Some(da), Some(db)]
    })
}

pub fn scale<T: Scalar>(a: &Tensor<T>, k: T) -> Result<Tensor<T>> {
    let data = a.data().iter().map(|x| *x * k).collect();
    Tensor::from_op(data, a.shape(), vec![a.clone()], move |g| {
        vec![Some(g.iter().map(|v| *v * k).collect())]
    })
}

pub fn sum<T: Scalar>(a: &Tensor<T>) -> Result<Tensor<T>> {
    let s = a.data().iter().fold(T::zero(), |acc, v| acc + *v);
    let n = a.numel();
    Tensor::from_op(vec![s], &[1], vec![a.clone()], move |g| vec![Some(vec![g[0]; n])])
}

pub fn mean<T: Scalar>(a: &Tensor<T>) -> Result<Tensor<T>> {
    let n = a.numel();
    scale(&sum(a)?, T::one() / T::lit(n as f64))
}

pub fn relu<T: Scalar>(a: &Tensor<T>) -> Result<Tensor<T>> {
    let data = a.data().iter().map(|v| v.max(T::zero())).collect();
    let ac = a.clone();
    Tensor::from_op(data, a.shape(), vec![a.clone()], move |g| {
        let d = g
            .iter()
            .zip(ac.data().iter())
            .map(|(g, x)| if *x > T::zero() { *g } else { T::zero() })
            .collect();
        vec![Some(d)]
    })
}

pub fn reshape<T: Scalar>(a: &Tensor<T>, shape: &[usize]) -> Result<Tensor<T>> {
    if numel(shape) != a.numel() {
        return Err(NnError::Shape(format!(
            "reshape: {:?} to {shape:?} changes the element count",
            a.shape()
        )));
    }
    Tensor::from_op(a.to_vec(), shape, vec![a.clone()], |g| vec![Some(g.to_vec())])
}

/// `[N, ...] -> [N, prod(...)]`.
pub fn flatten<T: Scalar>(a: &Tensor<T>) -> Result<Tensor<T>> {
    let n = a.shape()[0];
    reshape(a, &[n, a.numel() / n])
}

/// Concatenates along `dim`; all other dimensions must agree.
pub fn concat<T: Scalar>(ts: &[&Tensor<T>], dim: usize) -> Result<Tensor<T>> {
    let first = ts
        .first()
        .ok_or_else(|| NnError::Argument("concat of zero tensors".into()))?;
    let r = first.shape().len();
    if dim >= r {
        return Err(NnError::Shape(format!("concat: dim {dim} out of range for rank {r}")));
    }
    for t in ts {
        let ok = t.shape().len() == r
            && t.shape().iter().zip(first.shape()).enumerate().all(|(d, (a, b))| d == dim || a == b);
        if !ok {
            return Err(NnError::Shape(format!(
                "concat along {dim}: shapes {:?} and {:?} are incompatible",
                first.shape(),
                t.shape()
            )));
        }
    }
    let outer: usize = first.shape()[..dim].iter().product();
    let inner: usize = first.shape()[dim + 1..].iter().product();
    let widths: Vec<usize> = ts.iter().map(|t| t.shape()[dim] * inner).collect();
    let total: usize = widths.iter().sum();
    let mut data = Vec::with_capacity(outer * total);
    let guards: Vec<_> = ts.iter().map(|t| t.data()).collect();
    for o in 0..outer {
        for (g, w) in guards.iter().zip(&widths) {
            data.extend_from_slice(&g[o * w..(o + 1) * w]);
        }
    }
    drop(guards);
    let mut shape = first.shape().to_vec();
    shape[dim] = ts.iter().map(|t| t.shape()[dim]).sum();
    Tensor::from_op(data, &shape, ts.iter().map(|t| (*t).clone()).collect(), move |g| {
        let mut out: Vec<Vec<T>> = widths.iter().map(|w| Vec::with_capacity(outer * w)).collect();
        for o in 0..outer {
            let mut off = o * total;
            for (buf, w) in out.iter_mut().zip(&widths) {
                buf.extend_from_slice(&g[off..off + w]);
                off += w;
            }
        }
        out.into_iter().map(Some).collect()
    })
}

/// `x [B, in] · wᵀ [in, out] + b`.
pub fn linear<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, b: Option<&Tensor<T>>) -> Result<Tensor<T>> {
    rank("linear", x, 2)?;
    rank("linear weight", w, 2)?;
    let (bs, fin) = (x.shape()[0], x.shape()[1]);
    let fout = w.shape()[0];
    if w.shape()[1] != fin {
        return Err(NnError::Shape(format!(
            "linear: input {:?} vs weight {:?}",
            x.shape(),
            w.shape()
        )));
    }
    if let Some(b) = b {
        if b.shape() != [fout] {
            return Err(NnError::Shape(format!("linear: bias {:?} for {fout} outputs", b.shape())));
        }
    }
    let mut out = vec![T::zero(); bs * fout];
    {
        let (xd, wd) = (x.data(), w.data());
        T::gemm(bs, fin, fout, T::one(), &xd, fin as isize, 1, &wd, 1, fin as isize, T::zero(), &mut out, fout as isize, 1);
    }
    if let Some(b) = b {
        let bd = b.data();
        for row in out.chunks_mut(fout) {
            row.iter_mut().zip(bd.iter()).for_each(|(o, b)| *o = *o + *b);
        }
    }
    let mut parents = vec![x.clone(), w.clone()];
    if let Some(b) = b {
        parents.push(b.clone());
    }
    let (xc, wc, has_bias) = (x.clone(), w.clone(), b.is_some());
    Tensor::from_op(out, &[bs, fout], parents, move |g| {
        let (xd, wd) = (xc.data(), wc.data());
        let mut dx = vec![T::zero(); bs * fin];
        T::gemm(bs, fout, fin, T::one(), g, fout as isize, 1, &wd, fin as isize, 1, T::zero(), &mut dx, fin as isize, 1);
        let mut dw = vec![T::zero(); fout * fin];
        T::gemm(fout, bs, fin, T::one(), g, 1, fout as isize, &xd, fin as isize, 1, T::zero(), &mut dw, fin as isize, 1);
        let mut grads = vec![Some(dx), Some(dw)];
        if has_bias {
            let mut db = vec![T::zero(); fout];
            for row in g.chunks(fout) {
                db.iter_mut().zip(row).for_each(|(d, v)| *d = *d + *v);
            }
            grads.push(Some(db));
        }
        grads
    })
}

#[derive(Clone, Copy, Debug)]
struct ConvGeom {
    c: usize,
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    oh: usize,
    ow: usize,
}

impl ConvGeom {
    fn rows(&self) -> usize {
        self.c * self.kh * self.kw
    }

    fn cols(&self) -> usize {
        self.oh * self.ow
    }

    /// Source offset within one image for (row, col) of the column matrix.
    fn for_each<F: FnMut(usize, usize, Option<usize>)>(&self, mut f: F) {
        let cols = self.cols();
        for c in 0..self.c {
            for ki in 0..self.kh {
                for kj in 0..self.kw {
                    let row = (c * self.kh + ki) * self.kw + kj;
                    for oy in 0..self.oh {
                        let y = (oy * self.stride + ki) as isize - self.pad as isize;
                        for ox in 0..self.ow {
                            let x = (ox * self.stride + kj) as isize - self.pad as isize;
                            let src = if y >= 0 && x >= 0 && (y as usize) < self.h && (x as usize) < self.w {
                                Some((c * self.h + y as usize) * self.w + x as usize)
                            } else {
                                None
                            };
                            f(row, oy * self.ow + ox, src);
                        }
                    }
                    let _ = cols;
                }
            }
        }
    }

    fn im2col<T: Scalar>(&self, img: &[T], col: &mut [T]) {
        let cols = self.cols();
        if self.stride != 1 {
            self.for_each(|r, c, src| col[r * cols + c] = src.map_or(T::zero(), |s| img[s]));
            return;
        }
        // Unit stride: each output row reads one contiguous input run.
        for c in 0..self.c {
            for ki in 0..self.kh {
                for kj in 0..self.kw {
                    let row = &mut col[((c * self.kh + ki) * self.kw + kj) * cols..][..cols];
                    let lo = self.pad.saturating_sub(kj).min(self.ow);
                    let hi = (self.w + self.pad).saturating_sub(kj).min(self.ow).max(lo);
                    for oy in 0..self.oh {
                        let dst = &mut row[oy * self.ow..(oy + 1) * self.ow];
                        let y = (oy + ki) as isize - self.pad as isize;
                        if y < 0 || y as usize >= self.h {
                            dst.fill(T::zero());
                            continue;
                        }
                        let src = (c * self.h + y as usize) * self.w;
                        dst[..lo].fill(T::zero());
                        dst[lo..hi].copy_from_slice(&img[src + lo + kj - self.pad..src + hi + kj - self.pad]);
                        dst[hi..].fill(T::zero());
                    }
                }
            }
        }
    }

    fn col2im<T: Scalar>(&self, col: &[T], img: &mut [T]) {
        let cols = self.cols();
        self.for_each(|r, c, src| {
            if let Some(s) = src {
                img[s] = img[s] + col[r * cols + c];
            }
        });
    }
}

/// 2-D cross-correlation with square stride and zero padding.
pub fn conv2d<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    b: Option<&Tensor<T>>,
    stride: usize,
    padding: usize,
) -> Result<Tensor<T>> {
    rank("conv2d", x, 4)?;
    rank("conv2d weight", w, 4)?;
    let [n, c, h, wd] = [x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]];
    let [o, wc, kh, kw] = [w.shape()[0], w.shape()[1], w.shape()[2], w.shape()[3]];
    if wc != c {
        return Err(NnError::Shape(format!(
            "conv2d: input {:?} has {c} channels, weight {:?} expects {wc}",
            x.shape(),
            w.shape()
        )));
    }
    if stride == 0 {
        return Err(NnError::Argument("conv2d: stride must be positive".into()));
    }
    if h + 2 * padding < kh || wd + 2 * padding < kw {
        return Err(NnError::Shape(format!(
            "conv2d: kernel {kh}x{kw} larger than padded input {:?}",
            x.shape()
        )));
    }
    if let Some(b) = b {
        if b.shape() != [o] {
            return Err(NnError::Shape(format!("conv2d: bias {:?} for {o} filters", b.shape())));
        }
    }
    let g = ConvGeom {
        c,
        h,
        w: wd,
        kh,
        kw,
        stride,
        pad: padding,
        oh: (h + 2 * padding - kh) / stride + 1,
        ow: (wd + 2 * padding - kw) / stride + 1,
    };
    let (rows, cols) = (g.rows(), g.cols());
    let in_sz = c * h * wd;
    let mut out = vec![T::zero(); n * o * cols];
    {
        let (xd, wdata) = (x.data(), w.data());
        let mut col = vec![T::zero(); rows * cols];
        for i in 0..n {
            g.im2col(&xd[i * in_sz..(i + 1) * in_sz], &mut col);
            let dst = &mut out[i * o * cols..(i + 1) * o * cols];
            T::gemm(o, rows, cols, T::one(), &wdata, rows as isize, 1, &col, cols as isize, 1, T::zero(), dst, cols as isize, 1);
            if let Some(b) = b {
                let bd = b.data();
                for (oc, plane) in dst.chunks_mut(cols).enumerate() {
                    plane.iter_mut().for_each(|v| *v = *v + bd[oc]);
                }
            }
        }
    }
    let mut parents = vec![x.clone(), w.clone()];
    if let Some(b) = b {
        parents.push(b.clone());
    }
    let (xc, wc, has_bias) = (x.clone(), w.clone(), b.is_some());
    Tensor::from_op(out, &[n, o, g.oh, g.ow], parents, move |grad| {
        let (xd, wdata) = (xc.data(), wc.data());
        let mut dx = vec![T::zero(); n * in_sz];
        let mut dw = vec![T::zero(); o * rows];
        let mut col = vec![T::zero(); rows * cols];
        let mut dcol = vec![T::zero(); rows * cols];
        for i in 0..n {
            let gi = &grad[i * o * cols..(i + 1) * o * cols];
            g.im2col(&xd[i * in_sz..(i + 1) * in_sz], &mut col);
            T::gemm(o, cols, rows, T::one(), gi, cols as isize, 1, &col, 1, cols as isize, T::one(), &mut dw, rows as isize, 1);
            T::gemm(rows, o, cols, T::one(), &wdata, 1, rows as isize, gi, cols as isize, 1, T::zero(), &mut dcol, cols as isize, 1);
            g.col2im(&dcol, &mut dx[i * in_sz..(i + 1) * in_sz]);
        }
        let mut grads = vec![Some(dx), Some(dw)];
        if has_bias {
            let mut db = vec![T::zero(); o];
            for (k, plane) in grad.chunks(cols).enumerate() {
                db[k % o] = plane.iter().fold(db[k % o], |acc, v| acc + *v);
            }
            grads.push(Some(db));
        }
        grads
    })
}

fn nchw<T: Scalar>(op: &str, x: &Tensor<T>) -> Result<[usize; 4]> {
    rank(op, x, 4)?;
    let s = x.shape();
    Ok([s[0], s[1], s[2], s[3]])
}

/// Routes gradients back through recorded argmax positions.
fn scatter_back<T: Scalar>(g: &[T], argmax: &[usize], len: usize) -> Vec<T> {
    let mut dx = vec![T::zero(); len];
    for (gv, &src) in g.iter().zip(argmax) {
        dx[src] = dx[src] + *gv;
    }
    dx
}

/// Max pooling without padding; trailing rows/cols that do not fill a
/// window are dropped.
pub fn max_pool2d<T: Scalar>(x: &Tensor<T>, kernel: usize, stride: usize) -> Result<Tensor<T>> {
    let [n, c, h, w] = nchw("max_pool2d", x)?;
    if kernel == 0 || stride == 0 || h < kernel || w < kernel {
        return Err(NnError::Shape(format!(
            "max_pool2d: kernel {kernel} stride {stride} on input {:?}",
            x.shape()
        )));
    }
    let (oh, ow) = ((h - kernel) / stride + 1, (w - kernel) / stride + 1);
    let mut out = Vec::with_capacity(n * c * oh * ow);
    let mut argmax = Vec::with_capacity(n * c * oh * ow);
    {
        let xd = x.data();
        for plane in 0..n * c {
            let base = plane * h * w;
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = base + oy * stride * w + ox * stride;
                    for ky in 0..kernel {
                        for kx in 0..kernel {
                            let i = base + (oy * stride + ky) * w + ox * stride + kx;
                            if xd[i] > xd[best] {
                                best = i;
                            }
                        }
                    }
                    out.push(xd[best]);
                    argmax.push(best);
                }
            }
        }
    }
    let len = x.numel();
    Tensor::from_op(out, &[n, c, oh, ow], vec![x.clone()], move |g| {
        vec![Some(scatter_back(g, &argmax, len))]
    })
}

/// Bin `i` of `out` bins over `len` cells: `[floor(i·len/out), ceil((i+1)·len/out))`.
fn adaptive_bin(i: usize, out: usize, len: usize) -> (usize, usize) {
    (i * len / out, ((i + 1) * len).div_ceil(out))
}

pub fn adaptive_avg_pool2d<T: Scalar>(x: &Tensor<T>, oh: usize, ow: usize) -> Result<Tensor<T>> {
    let [n, c, h, w] = nchw("adaptive_avg_pool2d", x)?;
    if oh == 0 || ow == 0 {
        return Err(NnError::Argument("adaptive_avg_pool2d: output size must be positive".into()));
    }
    let mut out = Vec::with_capacity(n * c * oh * ow);
    {
        let xd = x.data();
        for plane in 0..n * c {
            let base = plane * h * w;
            for i in 0..oh {
                let (y0, y1) = adaptive_bin(i, oh, h);
                for j in 0..ow {
                    let (x0, x1) = adaptive_bin(j, ow, w);
                    let mut s = T::zero();
                    for y in y0..y1 {
                        for xx in x0..x1 {
                            s = s + xd[base + y * w + xx];
                        }
                    }
                    out.push(s / T::lit(((y1 - y0) * (x1 - x0)) as f64));
                }
            }
        }
    }
    let len = x.numel();
    Tensor::from_op(out, &[n, c, oh, ow], vec![x.clone()], move |g| {
        let mut dx = vec![T::zero(); len];
        for plane in 0..n * c {
            let base = plane * h * w;
            for i in 0..oh {
                let (y0, y1) = adaptive_bin(i, oh, h);
                for j in 0..ow {
                    let (x0, x1) = adaptive_bin(j, ow, w);
                    let share = g[(plane * oh + i) * ow + j] / T::lit(((y1 - y0) * (x1 - x0)) as f64);
                    for y in y0..y1 {
                        for xx in x0..x1 {
                            dx[base + y * w + xx] = dx[base + y * w + xx] + share;
                        }
                    }
                }
            }
        }
        vec![Some(dx)]
    })
}

pub fn adaptive_max_pool2d<T: Scalar>(x: &Tensor<T>, oh: usize, ow: usize) -> Result<Tensor<T>> {
    let [n, c, h, w] = nchw("adaptive_max_pool2d", x)?;
    if oh == 0 || ow == 0 {
        return Err(NnError::Argument("adaptive_max_pool2d: output size must be positive".into()));
    }
    let mut out = Vec::with_capacity(n * c * oh * ow);
    let mut argmax = Vec::with_capacity(n * c * oh * ow);
    {
        let xd = x.data();
        for plane in 0..n * c {
            let base = plane * h * w;
            for i in 0..oh {
                let (y0, y1) = adaptive_bin(i, oh, h);
                for j in 0..ow {
                    let (x0, x1) = adaptive_bin(j, ow, w);
                    let mut best = base + y0 * w + x0;
                    for y in y0..y1 {
                        for xx in x0..x1 {
                            if xd[base + y * w + xx] > xd[best] {
                                best = base + y * w + xx;
                            }
                        }
                    }
                    out.push(xd[best]);
                    argmax.push(best);
                }
            }
        }
    }
    let len = x.numel();
    Tensor::from_op(out, &[n, c, oh, ow], vec![x.clone()], move |g| {
        vec![Some(scatter_back(g, &argmax, len))]
    })
}

/// Batch normalization over channel axis 1 of `[B, C]` or `[B, C, H, W]`.
///
/// Training mode normalizes with batch statistics and folds them into the
/// running estimates (unbiased variance); evaluation mode uses the running
/// estimates.
#[allow(clippy::too_many_arguments)]
pub fn batch_norm<T: Scalar>(
    x: &Tensor<T>,
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
    running_mean: &Tensor<T>,
    running_var: &Tensor<T>,
    training: bool,
    eps: f64,
    momentum: f64,
) -> Result<Tensor<T>> {
    let s = x.shape();
    if s.len() != 2 && s.len() != 4 {
        return Err(NnError::Shape(format!("batch_norm: expected [B,C] or [B,C,H,W], got {s:?}")));
    }
    let (b, c) = (s[0], s[1]);
    let spatial: usize = s[2..].iter().product();
    for (name, t) in [("gamma", gamma), ("beta", beta), ("running mean", running_mean), ("running var", running_var)] {
        if t.shape() != [c] {
            return Err(NnError::Shape(format!(
                "batch_norm: {name} {:?} for input {s:?}",
                t.shape()
            )));
        }
    }
    let m = b * spatial;
    let eps_t = T::lit(eps);
    let at = move |bi: usize, ch: usize, k: usize| (bi * c + ch) * spatial + k;

    let xd = x.data();
    let (mean, var) = if training {
        let mut mean = vec![T::zero(); c];
        let mut var = vec![T::zero(); c];
        for ch in 0..c {
            let mut acc = T::zero();
            for bi in 0..b {
                for k in 0..spatial {
                    acc = acc + xd[at(bi, ch, k)];
                }
            }
            mean[ch] = acc / T::lit(m as f64);
            let mut sq = T::zero();
            for bi in 0..b {
                for k in 0..spatial {
                    let d = xd[at(bi, ch, k)] - mean[ch];
                    sq = sq + d * d;
                }
            }
            var[ch] = sq / T::lit(m as f64);
        }
        let mom = T::lit(momentum);
        let unbias = if m > 1 { T::lit(m as f64 / (m - 1) as f64) } else { T::one() };
        running_mean.update_data(|rm| {
            for ch in 0..c {
                rm[ch] = (T::one() - mom) * rm[ch] + mom * mean[ch];
            }
        });
        running_var.update_data(|rv| {
            for ch in 0..c {
                rv[ch] = (T::one() - mom) * rv[ch] + mom * var[ch] * unbias;
            }
        });
        (mean, var)
    } else {
        (running_mean.to_vec(), running_var.to_vec())
    };
    let inv_std: Vec<T> = var.iter().map(|v| T::one() / (*v + eps_t).sqrt()).collect();
    // The normalized input is only needed by the backward pass.
    let keep = grad_enabled() && [x, gamma, beta].iter().any(|t| t.requires_grad());
    let mut xhat = if keep { vec![T::zero(); xd.len()] } else { Vec::new() };
    let mut out = vec![T::zero(); xd.len()];
    {
        let (gd, bd) = (gamma.data(), beta.data());
        for bi in 0..b {
            for ch in 0..c {
                let (mu, is, g, bb) = (mean[ch], inv_std[ch], gd[ch], bd[ch]);
                let r = at(bi, ch, 0)..at(bi, ch, 0) + spatial;
                for (o, v) in out[r.clone()].iter_mut().zip(&xd[r.clone()]) {
                    *o = g * ((*v - mu) * is) + bb;
                }
                if keep {
                    for (h, v) in xhat[r.clone()].iter_mut().zip(&xd[r]) {
                        *h = (*v - mu) * is;
                    }
                }
            }
        }
    }
    drop(xd);
    let gamma_c = gamma.clone();
    Tensor::from_op(out, s, vec![x.clone(), gamma.clone(), beta.clone()], move |g| {
        let gd = gamma_c.data();
        let mut dgamma = vec![T::zero(); c];
        let mut dbeta = vec![T::zero(); c];
        for bi in 0..b {
            for ch in 0..c {
                for k in 0..spatial {
                    let i = at(bi, ch, k);
                    dgamma[ch] = dgamma[ch] + g[i] * xhat[i];
                    dbeta[ch] = dbeta[ch] + g[i];
                }
            }
        }
        let mut dx = vec![T::zero(); g.len()];
        let mf = T::lit(m as f64);
        for ch in 0..c {
            for bi in 0..b {
                for k in 0..spatial {
                    let i = at(bi, ch, k);
                    dx[i] = if training {
                        // dxhat = g·γ; dx = inv_std/M · (M·dxhat − Σdxhat − xhat·Σ(dxhat·xhat))
                        gd[ch] * inv_std[ch] / mf * (mf * g[i] - dbeta[ch] - xhat[i] * dgamma[ch])
                    } else {
                        g[i] * gd[ch] * inv_std[ch]
                    };
                }
            }
        }
        vec![Some(dx), Some(dgamma), Some(dbeta)]
    })
}

/// Inverted dropout: in training, zeroes each element with probability `p`
/// and scales survivors by `1/(1−p)`; identity otherwise.
pub fn dropout<T: Scalar, R: Rng>(x: &Tensor<T>, p: f64, training: bool, rng: &mut R) -> Result<Tensor<T>> {
    if !(0.0..1.0).contains(&p) {
        return Err(NnError::Argument(format!("dropout probability {p} outside [0, 1)")));
    }
    if !training || p == 0.0 {
        return Ok(x.clone());
    }
    let keep = T::lit(1.0 / (1.0 - p));
    let mask: Vec<T> = (0..x.numel())
        .map(|_| if rng.gen::<f64>() < p { T::zero() } else { keep })
        .collect();
    let data = x.data().iter().zip(&mask).map(|(v, m)| *v * *m).collect();
    Tensor::from_op(data, x.shape(), vec![x.clone()], move |g| {
        vec![Some(g.iter().zip(&mask).map(|(g, m)| *g * *m).collect())]
    })
}

fn softmax_rows<T: Scalar>(x: &[T], n: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(x.len());
    for row in x.chunks(n) {
        let mx = row.iter().fold(T::neg_infinity(), |a, v| a.max(*v));
        let e: Vec<T> = row.iter().map(|v| (*v - mx).exp()).collect();
        let s = e.iter().fold(T::zero(), |a, v| a + *v);
        out.extend(e.into_iter().map(|v| v / s));
    }
    out
}

pub fn softmax<T: Scalar>(x: &Tensor<T>) -> Result<Tensor<T>> {
    rank("softmax", x, 2)?;
    let n = x.shape()[1];
    let s = softmax_rows(&x.data(), n);
    let sc = s.clone();
    Tensor::from_op(s, x.shape(), vec![x.clone()], move |g| {
        let mut dx = Vec::with_capacity(g.len());
        for (gr, sr) in g.chunks(n).zip(sc.chunks(n)) {
            let dot = gr.iter().zip(sr).fold(T::zero(), |a, (g, s)| a + *g * *s);
            dx.extend(gr.iter().zip(sr).map(|(g, s)| *s * (*g - dot)));
        }
        vec![Some(dx)]
    })
}

pub fn log_softmax<T: Scalar>(x: &Tensor<T>) -> Result<Tensor<T>> {
    rank("log_softmax", x, 2)?;
    let n = x.shape()[1];
    let mut out = Vec::with_capacity(x.numel());
    for row in x.data().chunks(n) {
        let mx = row.iter().fold(T::neg_infinity(), |a, v| a.max(*v));
        let lse = row.iter().fold(T::zero(), |a, v| a + (*v - mx).exp()).ln() + mx;
        out.extend(row.iter().map(|v| *v - lse));
    }
    let sm: Vec<T> = out.iter().map(|v| v.exp()).collect();
    Tensor::from_op(out, x.shape(), vec![x.clone()], move |g| {
        let mut dx = Vec::with_capacity(g.len());
        for (gr, sr) in g.chunks(n).zip(sm.chunks(n)) {
            let total = gr.iter().fold(T::zero(), |a, v| a + *v);
            dx.extend(gr.iter().zip(sr).map(|(g, s)| *g - *s * total));
        }
        vec![Some(dx)]
    })
}

/// Mean over the batch of `−log softmax(logits)[label]` (labels 0-based).
pub fn cross_entropy<T: Scalar>(logits: &Tensor<T>, labels: &[usize]) -> Result<Tensor<T>> {
    rank("cross_entropy", logits, 2)?;
    let (b, n) = (logits.shape()[0], logits.shape()[1]);
    if labels.len() != b {
        return Err(NnError::Shape(format!(
            "cross_entropy: {} labels for batch of {b}",
            labels.len()
        )));
    }
    if let Some(l) = labels.iter().find(|l| **l >= n) {
        return Err(NnError::Argument(format!("cross_entropy: label {l} outside [0, {n})")));
    }
    let mut loss = T::zero();
    let mut probs = Vec::with_capacity(b * n);
    for (row, &label) in logits.data().chunks(n).zip(labels) {
        let mx = row.iter().fold(T::neg_infinity(), |a, v| a.max(*v));
        let se = row.iter().fold(T::zero(), |a, v| a + (*v - mx).exp());
        loss = loss + (se.ln() + mx - row[label]);
        probs.extend(row.iter().map(|v| (*v - mx).exp() / se));
    }
    let bf = T::lit(b as f64);
    let labels = labels.to_vec();
    Tensor::from_op(vec![loss / bf], &[1], vec![logits.clone()], move |g| {
        let mut d = probs.clone();
        for (i, &l) in labels.iter().enumerate() {
            d[i * n + l] = d[i * n + l] - T::one();
        }
        vec![Some(d.into_iter().map(|v| v * g[0] / bf).collect())]
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adaptive_bins_cover_and_overlap_like_reference() {
        assert_eq!(adaptive_bin(0, 3, 10), (0, 4));
        assert_eq!(adaptive_bin(1, 3, 10), (3, 7));
        assert_eq!(adaptive_bin(2, 3, 10), (6, 10));
        assert_eq!(adaptive_bin(0, 1, 7), (0, 7));
    }

    #[test]
    fn concat_middle_dim() {
        let a = Tensor::<f32>::new(vec![1.0, 2.0, 3.0, 4.0], &[2, 2]).unwrap();
        let b = Tensor::<f32>::new(vec![5.0, 6.0], &[2, 1]).unwrap();
        let c = concat(&[&a, &b], 1).unwrap();
        assert_eq!(c.shape(), &[2, 3]);
        assert_eq!(c.to_vec(), vec![1.0, 2.0, 5.0, 3.0, 4.0, 6.0]);
        assert!(concat(&[&a, &b], 0).is_err());
    }
}
