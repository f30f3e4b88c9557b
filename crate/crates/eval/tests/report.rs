use gestigo_core::{DatasetId, RasterImage, VoName};
use gestigo_eval::{confusion_pairs, evaluate, ConfusedPair, EvalError, EvalReport};
use gestigo_net::{accuracy, MemorySource, Model, ModelConfig, Sample};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("Class {i}")).collect()
}

fn vos() -> Vec<VoName> {
    vec![VoName::Custom, VoName::TopDown, VoName::FrontAway]
}

fn report(truth: &[usize], pred: &[usize], n: usize) -> EvalReport {
    EvalReport::from_decisions(DatasetId::DHG1428_14G, vos(), names(n), 17, truth, pred).unwrap()
}

#[test]
fn perfect_predictor() {
    let truth = [0, 1, 2, 2, 1, 0, 0];
    let r = report(&truth, &truth, 3);
    assert_eq!(r.accuracy, 1.0);
    assert_eq!(r.confusion, vec![vec![3, 0, 0], vec![0, 2, 0], vec![0, 0, 2]]);
    assert_eq!(r.per_class_accuracy, vec![1.0; 3]);
}

#[test]
fn constant_predictor_scores_the_prevalence() {
    let truth = [0, 1, 1, 2, 1, 0, 2, 2, 2, 1];
    let r = report(&truth, &[1; 10], 3);
    assert_eq!(r.accuracy, 0.4);
    assert_eq!(r.per_class_accuracy, vec![0.0, 1.0, 0.0]);
}

#[test]
fn rejects_bad_input() {
    let mk = |t: &[usize], p: &[usize]| EvalReport::from_decisions(DatasetId::DHG1428_14G, vos(), names(3), 17, t, p);
    assert!(matches!(mk(&[], &[]), Err(EvalError::Argument(_))));
    assert!(mk(&[0, 1], &[0]).is_err());
    assert!(mk(&[3], &[0]).is_err());
}

#[test]
fn text_round_trip() {
    let r = report(&[0, 1, 2, 2, 1, 0, 0, 1], &[0, 2, 2, 1, 1, 0, 1, 1], 3);
    let text = r.to_text();
    assert!(text.contains("seed\t17\n"));
    assert!(text.contains("vos\tcustom,top-down,front-away\n"));
    assert!(text.contains("2\t0\t2\t1\n"));
    assert_eq!(EvalReport::parse(&text).unwrap(), r);
    let tampered = text.replace(&format!("accuracy\t{}", r.accuracy), "accuracy\t0.9");
    assert!(EvalReport::parse(&tampered).is_err());
}

#[test]
fn writes_text_and_heatmap() {
    let r = report(&[0, 0, 1, 1], &[0, 1, 1, 1], 2);
    let dir = tempfile::tempdir().unwrap();
    r.write(dir.path()).unwrap();
    let back = EvalReport::parse(&std::fs::read_to_string(dir.path().join("report.txt")).unwrap()).unwrap();
    assert_eq!(back, r);
    let png = RasterImage::read_png(&dir.path().join("confusion.png")).unwrap();
    assert_eq!(png, r.heatmap());
    // Full row is the darkest cell, half row lies between, empty is white.
    let (full, half, empty) = (png.get(24, 24), png.get(8, 8), png.get(8, 24));
    assert_eq!(empty, [255; 3]);
    assert!(full[0] < half[0] && half[0] < empty[0]);
}

#[test]
fn confusion_pairs_examples() {
    assert!(confusion_pairs(&report(&[0, 1, 2], &[0, 1, 2], 3), 5).is_empty());
    let mut m = vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 5, 1]];
    let r = EvalReport::from_confusion(DatasetId::DHG1428_14G, vos(), names(3), 17, m.clone()).unwrap();
    assert_eq!(confusion_pairs(&r, 3), vec![ConfusedPair { a: 1, b: 2, count: 5 }]);
    m[0][2] = 2;
    m[2][0] = 3;
    let r = EvalReport::from_confusion(DatasetId::DHG1428_14G, vos(), names(3), 17, m).unwrap();
    assert_eq!(
        confusion_pairs(&r, 3),
        vec![ConfusedPair { a: 0, b: 2, count: 5 }, ConfusedPair { a: 1, b: 2, count: 5 }]
    );
    assert_eq!(confusion_pairs(&r, 1).len(), 1);
}

proptest! {
    #[test]
    fn report_invariants(seed in any::<u64>(), n in 2usize..8, len in 1usize..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth: Vec<usize> = (0..len).map(|_| rng.gen_range(0..n)).collect();
        let pred: Vec<usize> = (0..len).map(|_| rng.gen_range(0..n)).collect();
        let r = report(&truth, &pred, n);
        for c in 0..n {
            prop_assert_eq!(r.confusion[c].iter().sum::<u64>() as usize, truth.iter().filter(|t| **t == c).count());
        }
        let trace: u64 = (0..n).map(|i| r.confusion[i][i]).sum();
        prop_assert_eq!(r.accuracy, trace as f64 / len as f64);
        let hits = truth.iter().zip(&pred).filter(|(t, p)| t == p).count();
        prop_assert_eq!(r.accuracy, hits as f64 / len as f64);
    }

    #[test]
    fn confusion_pairs_match_brute_force(seed in any::<u64>(), n in 2usize..9, k in 0usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m: Vec<Vec<u64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(0..4)).collect()).collect();
        let mut m = m;
        m[0][0] += 1;
        let r = EvalReport::from_confusion(DatasetId::DHG1428_14G, vos(), names(n), 17, m.clone()).unwrap();
        let mut all = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if a < b && m[a][b] + m[b][a] > 0 {
                    all.push((m[a][b] + m[b][a], a, b));
                }
            }
        }
        all.sort_by(|x, y| y.0.cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        let want: Vec<ConfusedPair> = all.into_iter().take(k).map(|(count, a, b)| ConfusedPair { a, b, count }).collect();
        prop_assert_eq!(confusion_pairs(&r, k), want);
    }
}

fn tiny_model() -> Model {
    let mut cfg = ModelConfig::new(DatasetId::DHG1428_14G, names(3), vos());
    cfg.encoder_widths = vec![4, 8];
    cfg.tuner_widths = vec![2, 4];
    cfg.head_hidden = 8;
    cfg.tuner_hidden = 8;
    cfg.stage_sizes = vec![16];
    cfg.eval_px = 16;
    cfg.pseudo_px = 16;
    Model::new(cfg, 3).unwrap()
}

fn noise_source(n: usize) -> MemorySource {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut img = || {
        let px: Vec<u8> = (0..16 * 16 * 3).map(|_| rng.gen()).collect();
        RasterImage::from_raw(16, 16, px).unwrap()
    };
    MemorySource {
        samples: (0..n)
            .map(|i| Sample {
                images: vec![img(), img(), img()],
                label: i % 3,
            })
            .collect(),
    }
}

#[test]
fn evaluate_agrees_with_tuner_accuracy() {
    let model = tiny_model();
    let src = noise_source(23);
    let r = evaluate(&model, &src, &vos(), 17, 5).unwrap();
    assert_eq!(r.total(), 23);
    assert_eq!(r.accuracy, accuracy(&model, &src, 16, 7).unwrap().0);
    assert_eq!(evaluate(&model, &src, &vos(), 17, 23).unwrap(), r);
}

#[test]
fn evaluate_checks_views_and_data() {
    let model = tiny_model();
    let swapped = vec![VoName::TopDown, VoName::Custom, VoName::FrontAway];
    assert!(matches!(evaluate(&model, &noise_source(3), &swapped, 17, 4), Err(EvalError::Config(_))));
    assert!(matches!(evaluate(&model, &MemorySource::default(), &vos(), 17, 4), Err(EvalError::Argument(_))));
}
