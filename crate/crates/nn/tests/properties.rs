use gestigo_nn::ops;
use gestigo_nn::{cosine_lr, Adam, Checkpoint, ForwardCtx, Layer, LayerSpec, Mode, NnError, Sequential, Tensor};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn randn(rng: &mut ChaCha8Rng, n: usize, scale: f32) -> Vec<f32> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

/// Direct seven-loop convolution in f64.
#[allow(clippy::too_many_arguments)]
fn conv_oracle(
    x: &[f32],
    [n, c, h, w]: [usize; 4],
    k: &[f32],
    [o, kh, kw]: [usize; 3],
    bias: &[f32],
    stride: usize,
    pad: usize,
) -> Vec<f64> {
    let oh = (h + 2 * pad - kh) / stride + 1;
    let ow = (w + 2 * pad - kw) / stride + 1;
    let mut out = vec![0.0; n * o * oh * ow];
    for b in 0..n {
        for f in 0..o {
            for y in 0..oh {
                for xx in 0..ow {
                    let mut acc = bias[f] as f64;
                    for ch in 0..c {
                        for i in 0..kh {
                            for j in 0..kw {
                                let sy = (y * stride + i) as isize - pad as isize;
                                let sx = (xx * stride + j) as isize - pad as isize;
                                if sy < 0 || sx < 0 || sy >= h as isize || sx >= w as isize {
                                    continue;
                                }
                                let xv = x[((b * c + ch) * h + sy as usize) * w + sx as usize] as f64;
                                let kv = k[((f * c + ch) * kh + i) * kw + j] as f64;
                                acc += xv * kv;
                            }
                        }
                    }
                    out[((b * o + f) * oh + y) * ow + xx] = acc;
                }
            }
        }
    }
    out
}

#[test]
fn conv2d_matches_direct_loops() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (shape, (o, k), stride, pad) in [
        ([2, 3, 9, 7], (4, 3), 1, 1),
        ([1, 2, 8, 8], (3, 5), 2, 2),
        ([3, 1, 4, 6], (2, 1), 1, 0),
        ([1, 2, 5, 6], (3, 3), 1, 2),
        ([2, 1, 2, 3], (2, 5), 1, 3),
    ] {
        let x = randn(&mut rng, shape.iter().product(), 1.0);
        let kern = randn(&mut rng, o * shape[1] * k * k, 1.0);
        let bias = randn(&mut rng, o, 1.0);
        let got = ops::conv2d(
            &Tensor::new(x.clone(), &shape).unwrap(),
            &Tensor::new(kern.clone(), &[o, shape[1], k, k]).unwrap(),
            Some(&Tensor::new(bias.clone(), &[o]).unwrap()),
            stride,
            pad,
        )
        .unwrap();
        let want = conv_oracle(&x, shape, &kern, [o, k, k], &bias, stride, pad);
        assert_eq!(got.numel(), want.len());
        for (g, w) in got.to_vec().iter().zip(&want) {
            assert!((*g as f64 - w).abs() < 1e-4, "{g} vs {w}");
        }
    }
}

#[test]
fn cross_entropy_matches_f64_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let logits = randn(&mut rng, 6 * 5, 4.0);
    let labels = [0, 1, 2, 3, 4, 0];
    let want: f64 = logits
        .chunks(5)
        .zip(labels)
        .map(|(row, l)| {
            let lse = row.iter().map(|v| (*v as f64).exp()).sum::<f64>().ln();
            lse - row[l] as f64
        })
        .sum::<f64>()
        / 6.0;
    let got = ops::cross_entropy(&Tensor::new(logits, &[6, 5]).unwrap(), &labels).unwrap().item();
    assert!((got as f64 - want).abs() < 1e-5);
    let bad = Tensor::<f32>::zeros(&[2, 3]);
    assert!(matches!(ops::cross_entropy(&bad, &[0, 3]), Err(NnError::Argument(_))));
    assert!(matches!(ops::cross_entropy(&bad, &[0]), Err(NnError::Shape(_))));
}

#[test]
fn adam_matches_hand_computed_steps() {
    let p = Tensor::<f32>::param(vec![1.0, -2.0], &[2]).unwrap();
    let mut opt = Adam::new(vec![p.clone()], 0.1);
    let (mut m, mut v, mut theta) = ([0.0f64; 2], [0.0f64; 2], [1.0f64, -2.0]);
    for t in 1..=3 {
        opt.zero_grad();
        // loss = Σ θ², gradient 2θ
        ops::sum(&ops::mul(&p, &p).unwrap()).unwrap().backward().unwrap();
        opt.step().unwrap();
        for i in 0..2 {
            let g = 2.0 * theta[i];
            m[i] = 0.9 * m[i] + 0.1 * g;
            v[i] = 0.99 * v[i] + 0.01 * g * g;
            let mh = m[i] / (1.0 - 0.9f64.powi(t));
            let vh = v[i] / (1.0 - 0.99f64.powi(t));
            theta[i] -= 0.1 * mh / (vh.sqrt() + 1e-5);
            theta[i] = theta[i] as f32 as f64;
        }
        for (got, want) in p.to_vec().iter().zip(theta) {
            assert!((*got as f64 - want).abs() < 1e-6, "step {t}: {got} vs {want}");
        }
    }
}

#[test]
fn cosine_schedule_endpoints_and_midpoint() {
    assert_eq!(cosine_lr(1e-3, 0, 100), 1e-3);
    assert!((cosine_lr(1e-3, 50, 100) - 5e-4).abs() < 1e-15);
    assert!(cosine_lr(1e-3, 100, 100).abs() < 1e-18);
    assert!(cosine_lr(1e-3, 150, 100).abs() < 1e-18);
    let lrs: Vec<f64> = (0..=100).map(|s| cosine_lr(3e-3, s, 100)).collect();
    assert!(lrs.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn non_finite_values_are_numeric_errors() {
    let x = Tensor::<f32>::new(vec![1e30, 1e30], &[1, 2]).unwrap();
    assert!(matches!(ops::mul(&x, &x), Err(NnError::Numeric(_))));
    let p = Tensor::<f32>::param(vec![1.0], &[1]).unwrap();
    assert!(matches!(p.set_data(vec![f32::INFINITY]), Err(NnError::Numeric(_))));
}

#[test]
fn batchnorm_running_statistics_follow_momentum() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let layer = Layer::<f32>::new(LayerSpec::BatchNorm1d { features: 1 }, &mut rng).unwrap();
    let x = Tensor::new(vec![1.0, 3.0], &[2, 1]).unwrap();
    layer.forward(&[&x], Mode::Train, &mut ForwardCtx::new(0)).unwrap();
    // mean 2, unbiased var 2
    assert!((layer.buffers()[0].item() - 0.2).abs() < 1e-7);
    assert!((layer.buffers()[1].item() - (0.9 + 0.1 * 2.0)).abs() < 1e-6);
    let y = layer.forward(&[&x], Mode::Eval, &mut ForwardCtx::new(0)).unwrap();
    let rm = layer.buffers()[0].item();
    let rv = layer.buffers()[1].item();
    let want = (1.0 - rm) / (rv + 1e-5).sqrt();
    assert!((y.to_vec()[0] - want).abs() < 1e-6);
}

fn model(seed: u64) -> Sequential<f32> {
    let specs = [
        LayerSpec::Conv2d {
            in_ch: 3,
            out_ch: 4,
            kernel: 3,
            stride: 1,
            padding: 1,
        },
        LayerSpec::BatchNorm2d { channels: 4 },
        LayerSpec::Relu,
        LayerSpec::MaxPool2d { kernel: 2, stride: 2 },
        LayerSpec::AdaptiveAvgPool { out_h: 1, out_w: 1 },
        LayerSpec::Flatten,
        LayerSpec::Dropout { p: 0.5 },
        LayerSpec::Linear {
            in_features: 4,
            out_features: 3,
        },
    ];
    Sequential::new(&specs, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

#[test]
fn checkpoint_round_trips_bit_exactly() {
    let net = model(9);
    // Move running stats off their defaults.
    let x = Tensor::new(randn(&mut ChaCha8Rng::seed_from_u64(5), 2 * 3 * 8 * 8, 2.0), &[2, 3, 8, 8]).unwrap();
    net.forward(&x, Mode::Train, &mut ForwardCtx::new(0)).unwrap();
    let layers: Vec<&Layer> = net.layers.iter().collect();
    let header = vec![("streams".to_string(), "custom,top-down".to_string()), ("j".into(), "2".into())];
    let ck = Checkpoint::capture(header, &layers);
    let bytes = ck.to_bytes();
    let back = Checkpoint::from_bytes(&bytes).unwrap();
    assert_eq!(back, ck);
    assert_eq!(back.to_bytes(), bytes);
    assert_eq!(back.header_value("j"), Some("2"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m/model.ckpt");
    ck.save(&path).unwrap();
    let fresh = model(10);
    let fresh_layers: Vec<&Layer> = fresh.layers.iter().collect();
    let ck2 = Checkpoint::load(&path).unwrap();
    assert!(ck2.restore(&fresh_layers).unwrap().is_empty());
    for (a, b) in net.layers.iter().zip(&fresh.layers) {
        for (ta, tb) in a.state().zip(b.state()) {
            let bits = |t: &Tensor| t.to_vec().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(ta), bits(tb));
        }
    }
    let ya = net.forward(&x, Mode::Eval, &mut ForwardCtx::new(0)).unwrap().to_vec();
    let yb = fresh.forward(&x, Mode::Eval, &mut ForwardCtx::new(0)).unwrap().to_vec();
    assert_eq!(ya, yb);
}

#[test]
fn corrupt_checkpoints_are_rejected() {
    let net = model(1);
    let layers: Vec<&Layer> = net.layers.iter().collect();
    let bytes = Checkpoint::capture(vec![], &layers).to_bytes();
    for cut in [0, 7, 12, bytes.len() / 2, bytes.len() - 1] {
        assert!(matches!(Checkpoint::from_bytes(&bytes[..cut]), Err(NnError::Checkpoint(_))), "cut {cut}");
    }
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(Checkpoint::from_bytes(&bad).is_err());
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(Checkpoint::from_bytes(&extra).is_err());

    let other = Sequential::<f32>::new(&[LayerSpec::Relu], &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let other_layers: Vec<&Layer> = other.layers.iter().collect();
    let ck = Checkpoint::from_bytes(&bytes).unwrap();
    assert!(ck.restore(&other_layers).is_err());
}

#[test]
fn eval_forward_is_deterministic() {
    let net = model(3);
    let x = Tensor::new(randn(&mut ChaCha8Rng::seed_from_u64(6), 4 * 3 * 6 * 6, 1.0), &[4, 3, 6, 6]).unwrap();
    let a = net.forward(&x, Mode::Eval, &mut ForwardCtx::new(1)).unwrap().to_vec();
    let b = net.forward(&x, Mode::Eval, &mut ForwardCtx::new(2)).unwrap().to_vec();
    assert_eq!(a, b);
}

#[test]
fn dropout_preserves_expectation() {
    for p in [0.25, 0.5] {
        let n = 10_000;
        let x = Tensor::<f32>::new(vec![1.0; n], &[1, n]).unwrap();
        let y = ops::dropout(&x, p, true, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let mean = y.to_vec().iter().map(|v| *v as f64).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "p={p}: mean {mean}");
        let zeros = y.to_vec().iter().filter(|v| **v == 0.0).count() as f64 / n as f64;
        assert!((zeros - p).abs() < 0.02);
    }
}

#[test]
fn training_reduces_loss_on_separable_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let net = Sequential::<f32>::new(
        &[
            LayerSpec::Linear {
                in_features: 2,
                out_features: 8,
            },
            LayerSpec::Relu,
            LayerSpec::Linear {
                in_features: 8,
                out_features: 2,
            },
        ],
        &mut rng,
    )
    .unwrap();
    let xs: Vec<f32> = (0..64).flat_map(|i| [(i % 2) as f32 * 2.0 - 1.0, rng.gen_range(-1.0..1.0)]).collect();
    let labels: Vec<usize> = (0..64).map(|i| i % 2).collect();
    let x = Tensor::new(xs, &[64, 2]).unwrap();
    let mut opt = Adam::new(net.params(), 1e-2);
    let mut ctx = ForwardCtx::new(0);
    let mut first = None;
    let mut last = 0.0;
    for _ in 0..100 {
        opt.zero_grad();
        let loss = ops::cross_entropy(&net.forward(&x, Mode::Train, &mut ctx).unwrap(), &labels).unwrap();
        loss.backward().unwrap();
        opt.step().unwrap();
        last = loss.item();
        first.get_or_insert(last);
    }
    assert!(last < first.unwrap() * 0.2, "{first:?} -> {last}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn softmax_rows_sum_to_one(rows in 1usize..6, cols in 1usize..12, seed in any::<u64>(), scale in 0.1f32..30.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Tensor::new(randn(&mut rng, rows * cols, scale), &[rows, cols]).unwrap();
        let s = ops::softmax(&x).unwrap().to_vec();
        for row in s.chunks(cols) {
            let total: f64 = row.iter().map(|v| *v as f64).sum();
            prop_assert!((total - 1.0).abs() < 1e-6);
            prop_assert!(row.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn batchnorm_train_output_is_standardized(
        batch in 2usize..8,
        ch in 1usize..4,
        hw in 1usize..4,
        seed in any::<u64>(),
        shift in -5.0f32..5.0,
        scale in 1.0f32..10.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layer = Layer::<f32>::new(LayerSpec::BatchNorm2d { channels: ch }, &mut rng).unwrap();
        let n = batch * ch * hw * hw;
        let data: Vec<f32> = randn(&mut rng, n, scale).into_iter().map(|v| v + shift).collect();
        let sp = hw * hw;
        let channel = |v: &[f32], c: usize| -> Vec<f64> {
            (0..batch).flat_map(|b| (0..sp).map(move |k| (b * ch + c) * sp + k)).map(|i| v[i] as f64).collect()
        };
        let moments = |vals: &[f64]| {
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            (m, vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / vals.len() as f64)
        };
        // The normalized variance is var/(var+eps); it is within 1e-4 of 1
        // only when the input variance exceeds 0.1.
        for c in 0..ch {
            prop_assume!(moments(&channel(&data, c)).1 > 0.1);
        }
        let x = Tensor::new(data, &[batch, ch, hw, hw]).unwrap();
        let y = layer.forward(&[&x], Mode::Train, &mut ForwardCtx::new(0)).unwrap().to_vec();
        for c in 0..ch {
            let (m, var) = moments(&channel(&y, c));
            prop_assert!(m.abs() < 1e-5, "mean {m}");
            prop_assert!((var - 1.0).abs() < 1e-4, "var {var}");
        }
    }

    #[test]
    fn linear_matches_f64_matmul(b in 1usize..5, fin in 1usize..7, fout in 1usize..7, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = randn(&mut rng, b * fin, 1.0);
        let w = randn(&mut rng, fout * fin, 1.0);
        let bias = randn(&mut rng, fout, 1.0);
        let y = ops::linear(
            &Tensor::new(x.clone(), &[b, fin]).unwrap(),
            &Tensor::new(w.clone(), &[fout, fin]).unwrap(),
            Some(&Tensor::new(bias.clone(), &[fout]).unwrap()),
        ).unwrap().to_vec();
        for i in 0..b {
            for o in 0..fout {
                let want: f64 = bias[o] as f64 + (0..fin).map(|k| x[i * fin + k] as f64 * w[o * fin + k] as f64).sum::<f64>();
                prop_assert!((y[i * fout + o] as f64 - want).abs() < 1e-5);
            }
        }
    }
}
