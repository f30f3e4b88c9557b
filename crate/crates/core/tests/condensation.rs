use std::sync::Arc;

use gestigo_core::condense::{centroid, extents, trail_alpha, Projector};
use gestigo_core::raster::Canvas;
use gestigo_core::synth::dhg_gesture;
use gestigo_core::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dhg() -> Arc<JointSchema> {
    Arc::new(JointSchema::dhg22())
}

fn random_seq(rng: &mut ChaCha8Rng, frames: usize) -> SkeletonSequence {
    let frames = (0..frames)
        .map(|_| {
            (0..22)
                .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0)])
                .collect()
        })
        .collect();
    SkeletonSequence::new(frames, dhg(), Some(1), None, "rand").unwrap()
}

fn swipe(seed: u64, g: usize) -> SkeletonSequence {
    let frames = dhg_gesture(g, 2, &mut ChaCha8Rng::seed_from_u64(seed));
    SkeletonSequence::new(frames, dhg(), Some(g), None, "synth").unwrap()
}

/// Independent 1-D linear interpolation at normalized time `u`.
fn lerp_oracle(samples: &[f64], u: f64) -> f64 {
    let pos = u * (samples.len() - 1) as f64;
    let lo = (pos.floor() as usize).min(samples.len() - 2);
    let w = pos - lo as f64;
    samples[lo] * (1.0 - w) + samples[lo + 1] * w
}

#[test]
fn resample_matches_scalar_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let n = rng.gen_range(2..160);
        let seq = random_seq(&mut rng, n);
        let out = resample_sequence(&seq, 250).unwrap();
        assert_eq!(out.len(), 250);
        assert_eq!(out.frames()[0], seq.frames()[0]);
        assert_eq!(out.frames()[249], seq.frames()[n - 1]);
        for j in [0, 9, 21] {
            for a in 0..3 {
                let samples: Vec<f64> = seq.frames().iter().map(|f| f[j][a]).collect();
                for (i, f) in out.frames().iter().enumerate() {
                    let want = lerp_oracle(&samples, i as f64 / 249.0);
                    let got = f[j][a];
                    assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "{got} vs {want}");
                }
            }
        }
    }
}

#[test]
fn resample_fixed_points() {
    let frames = vec![vec![[0.1, -0.2, 0.3]; 22]; 30];
    let seq = SkeletonSequence::new(frames, dhg(), None, None, "c").unwrap();
    let out = resample_sequence(&seq, 250).unwrap();
    assert!(out.frames().iter().all(|f| f == &seq.frames()[0]));

    // Already 250 frames of affine motion: reproduced exactly.
    let frames = (0..250)
        .map(|t| vec![[0.5 + 0.01 * t as f64, 2.0 - 0.003 * t as f64, 1.0]; 22])
        .collect();
    let seq = SkeletonSequence::new(frames, dhg(), None, None, "a").unwrap();
    assert_eq!(resample_sequence(&seq, 250).unwrap().frames(), seq.frames());
}

#[test]
fn fit_zoom_for_half_unit_cube() {
    let frames = vec![vec![[0.0; 3]; 22], vec![[0.5; 3]; 22]];
    let seq = SkeletonSequence::new(frames, dhg(), None, None, "cube").unwrap();
    assert_eq!(fit_sequence(&seq, 1.0, 0.125).unwrap().zoom, 0.625);
}

#[test]
fn fit_is_identity_on_centered_gesture() {
    let frames = vec![vec![[0.25, 0.5, 0.75]; 22], vec![[0.75, 0.5, 0.25]; 22]];
    let seq = SkeletonSequence::new(frames, dhg(), None, None, "c").unwrap();
    let fit = fit_sequence(&seq, 1.0, 0.125).unwrap();
    assert_eq!(fit.centered.frames(), seq.frames());
}

#[test]
fn fit_centroid_and_extent_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let n = rng.gen_range(2..40);
        let seq = random_seq(&mut rng, n);
        let fit = fit_sequence(&seq, 1.0, 0.125).unwrap();
        let coords: Vec<[f64; 3]> = fit.centered.points().copied().collect();
        for a in 0..3 {
            let mean = coords.iter().map(|p| p[a]).sum::<f64>() / coords.len() as f64;
            assert!((mean - fit.target[a]).abs() < 1e-9);
            let lo = coords.iter().map(|p| p[a]).fold(f64::MAX, f64::min);
            let hi = coords.iter().map(|p| p[a]).fold(f64::MIN, f64::max);
            assert!(fit.zoom >= hi - lo);
        }
        let c = centroid(&fit.centered);
        assert!((0..3).all(|a| (c[a] - fit.target[a]).abs() < 1e-9));
        assert!(extents(&fit.centered).iter().all(|e| *e <= fit.zoom));
    }
}

#[test]
fn centroid_projects_to_center_and_zoom_spans_canvas() {
    let seq = swipe(3, 9);
    let fit = fit_sequence(&seq, 1.0, 0.125).unwrap();
    for vo in vo_table(DatasetId::DHG1428_14G) {
        let p = project(&[fit.target], &fit, &vo, 960).unwrap();
        assert!((p[0][0] - 480.0).abs() < 1e-9 && (p[0][1] - 480.0).abs() < 1e-9);
    }
    // Identity view: points Z apart along camera x land image_px apart.
    let top = vo_table(DatasetId::DHG1428_14G)[0];
    let a = [fit.target[0] - fit.zoom / 2.0, fit.target[1], fit.target[2]];
    let b = [fit.target[0] + fit.zoom / 2.0, fit.target[1], fit.target[2]];
    let p = project(&[a, b], &fit, &top, 960).unwrap();
    assert!((p[1][0] - p[0][0] - 960.0).abs() < 1e-9);
    assert!(project(&[[f64::NAN, 0.0, 0.0]], &fit, &top, 960).is_err());
}

/// Points within (Z - gamma)/2 of the look-at target keep a margin of
/// gamma * px / (2Z) from every canvas edge, whatever the view.
#[test]
fn padding_margin_around_target() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for seed in 0..20u64 {
        let fit = fit_sequence(&swipe(seed, 1 + seed as usize % 14), 1.0, 0.125).unwrap();
        let r = (fit.zoom - fit.padding) / 2.0;
        let margin = fit.padding * 960.0 / (2.0 * fit.zoom);
        for vo in vo_table(DatasetId::DHG1428_14G) {
            let proj = Projector::new(&fit, &vo, 960);
            for _ in 0..200 {
                let d: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt().max(1e-12);
                let q = [0, 1, 2].map(|a| fit.target[a] + d[a] / n * r * rng.gen_range(0.0..=1.0));
                let [x, y] = proj.apply(&q);
                let m = x.min(y).min(960.0 - x).min(960.0 - y);
                assert!(m >= margin - 1e-9, "{m} < {margin}");
            }
        }
    }
}

#[test]
fn framing_is_scale_invariant_without_padding() {
    let seq = swipe(5, 11);
    let fit = fit_sequence(&seq, 1.0, 0.0).unwrap();
    for s in [0.001, 0.37, 25.0, 1000.0] {
        let scaled: Vec<Frame> = seq
            .frames()
            .iter()
            .map(|f| f.iter().map(|p| p.map(|v| v * s)).collect())
            .collect();
        let scaled = seq.with_frames(scaled).unwrap();
        let fit_s = fit_sequence(&scaled, 1.0, 0.0).unwrap();
        for vo in vo_table(DatasetId::DHG1428_14G) {
            let a = project(&fit.centered.points().copied().collect::<Vec<_>>(), &fit, &vo, 960).unwrap();
            let b = project(&fit_s.centered.points().copied().collect::<Vec<_>>(), &fit_s, &vo, 960).unwrap();
            for (p, q) in a.iter().zip(&b) {
                assert!((p[0] - q[0]).abs() < 1e-6 && (p[1] - q[1]).abs() < 1e-6, "scale {s}");
            }
        }
    }
}

fn small_cfg() -> RenderConfig {
    RenderConfig::with_size(192)
}

#[test]
fn condense_is_deterministic_and_view_dependent() {
    let seq = swipe(8, 12);
    let views = vo_table(DatasetId::DHG1428_14G);
    let a = condense(&seq, &views[1], &small_cfg(), 0.125, 1.0).unwrap();
    let b = condense(&seq, &views[1], &small_cfg(), 0.125, 1.0).unwrap();
    assert_eq!(a, b);
    let c = condense(&seq, &views[4], &small_cfg(), 0.125, 1.0).unwrap();
    assert_ne!(a, c);
    let many = condense_views(&seq, &views, &small_cfg(), 0.125, 1.0).unwrap();
    assert_eq!(many[1], a);
}

#[test]
fn full_size_images_for_all_views() {
    let seq = swipe(2, 7);
    let imgs = condense_views(&seq, &vo_table(DatasetId::DHG1428_14G), &RenderConfig::default(), 0.125, 1.0)
        .unwrap();
    assert_eq!(imgs.len(), 6);
    for img in imgs {
        assert_eq!((img.width(), img.height(), img.pixels().len()), (960, 960, 960 * 960 * 3));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn translation_leaves_images_unchanged(
        seed in 0u64..1000,
        dx in -50.0f64..50.0,
        dy in -50.0f64..50.0,
        dz in -50.0f64..50.0,
        view in 0usize..6,
    ) {
        let seq = swipe(seed, 1 + (seed as usize % 14));
        let moved: Vec<Frame> = seq
            .frames()
            .iter()
            .map(|f| f.iter().map(|p| [p[0] + dx, p[1] + dy, p[2] + dz]).collect())
            .collect();
        let moved = seq.with_frames(moved).unwrap();
        let vo = vo_table(DatasetId::DHG1428_14G)[view];
        let a = condense(&seq, &vo, &small_cfg(), 0.125, 1.0).unwrap();
        let b = condense(&moved, &vo, &small_cfg(), 0.125, 1.0).unwrap();
        prop_assert!(a == b);
    }

    #[test]
    fn resample_length_and_endpoints(n in 2usize..300, t in 2usize..400, seed in 0u64..100) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seq = random_seq(&mut rng, n);
        let out = resample_sequence(&seq, t).unwrap();
        prop_assert_eq!(out.len(), t);
        prop_assert_eq!(&out.frames()[0], &seq.frames()[0]);
        prop_assert_eq!(&out.frames()[t - 1], &seq.frames()[n - 1]);
    }
}

/// 100 px canvas with the full-size stroke widths, so markers cover pixels.
fn cfg100() -> RenderConfig {
    RenderConfig {
        image_px: 100,
        ..RenderConfig::default()
    }
}

fn one_bone_schema(bones: Vec<(usize, usize)>) -> JointSchema {
    let mut s = JointSchema::dhg22();
    s.bones = bones;
    s
}

fn flat_fit() -> FitResult {
    // Two points 0.5 apart on x; zoom 1.0 so 1 unit = image_px pixels.
    let frames = vec![vec![[0.25, 0.5, 0.5]; 22], vec![[0.75, 0.5, 0.5]; 22]];
    let seq = SkeletonSequence::new(frames, dhg(), None, None, "f").unwrap();
    fit_sequence(&seq, 1.0, 0.5).unwrap()
}

#[test]
fn spatial_render_edge_cases() {
    let cfg = cfg100();
    let fit = flat_fit();
    let top = vo_table(DatasetId::DHG1428_14G)[0];
    let mut frame = vec![[0.5, 0.5, 0.5]; 22];
    frame[0] = [0.25, 0.5, 0.5];
    frame[1] = [0.75, 0.5, 0.5];

    let blank = Canvas::new(100, 100, cfg.background).to_image();
    let mut canvas = Canvas::new(100, 100, cfg.background);
    render_spatial(&frame, &one_bone_schema(vec![]), &fit, &top, &cfg, &mut canvas).unwrap();
    assert_eq!(canvas.to_image(), blank);

    // Horizontal bone from x=25 to x=75 on row 50 (scanline oracle).
    let mut cfg_thick = cfg.clone();
    cfg_thick.bone_width_px = 3.0;
    let mut canvas = Canvas::new(100, 100, cfg.background);
    let schema = one_bone_schema(vec![(0, 1)]);
    render_spatial(&frame, &schema, &fit, &top, &cfg_thick, &mut canvas).unwrap();
    let img = canvas.to_image();
    for x in 26..74 {
        assert_eq!(img.get(x, 49), [230, 230, 230], "x={x}");
        assert_eq!(img.get(x, 50), [230, 230, 230], "x={x}");
    }
    for y in (0..44).chain(56..100) {
        for x in 0..100 {
            assert_eq!(img.get(x, y), cfg.background);
        }
    }
    let mut again = Canvas::new(100, 100, cfg.background);
    render_spatial(&frame, &schema, &fit, &top, &cfg_thick, &mut again).unwrap();
    assert_eq!(again.to_image(), img);
}

#[test]
fn stationary_trail_follows_closed_form_compositing() {
    let cfg = cfg100();
    let fit = flat_fit();
    let top = vo_table(DatasetId::DHG1428_14G)[0];
    let schema = JointSchema::dhg22();
    let frames: Vec<Frame> = vec![vec![[0.5, 0.5, 0.5]; 22]; 30];
    let mut canvas = Canvas::new(100, 100, cfg.background);
    render_temporal(&frames, &schema, &fit, &top, &cfg, &mut canvas).unwrap();

    // The five fingertips share one location; the last one drawn is pinky
    // (magenta). Closed form over every marker composited in order.
    let mut expected = cfg.background.map(|v| v as f64);
    for tau in 1..=frames.len() {
        let a = trail_alpha(&cfg, tau, frames.len());
        for color in &schema.palette.fingertips {
            for c in 0..3 {
                expected[c] += a * (color[c] as f64 - expected[c]);
            }
        }
    }
    let got = canvas.pixel(50, 50);
    for c in 0..3 {
        assert!((got[c] as f64 - expected[c]).abs() < 1e-3, "{got:?} vs {expected:?}");
    }
    // A single-color trail approaches its color monotonically.
    let mut single = schema.clone();
    single.fingertips = vec![5, 9, 13, 17, 21];
    single.palette.fingertips = vec![[255, 0, 0]; 5];
    let mut prev = f32::MAX;
    for n in 2..=frames.len() {
        let mut c = Canvas::new(100, 100, cfg.background);
        render_temporal(&frames[..n], &single, &fit, &top, &cfg, &mut c).unwrap();
        let d = (255.0 - c.pixel(50, 50)[0]).abs();
        assert!(d <= prev + 1e-4);
        prev = d;
    }
}

#[test]
fn single_trail_frame_uses_alpha_min() {
    let cfg = cfg100();
    let fit = flat_fit();
    let top = vo_table(DatasetId::DHG1428_14G)[0];
    let mut single = JointSchema::dhg22();
    single.fingertips = vec![5, 9, 13, 17, 21];
    single.palette.fingertips = vec![[255, 255, 255]; 5];
    let frames: Vec<Frame> = vec![vec![[0.5, 0.5, 0.5]; 22]];
    let mut c = Canvas::new(100, 100, [0, 0, 0]);
    render_temporal(&frames, &single, &fit, &top, &cfg, &mut c).unwrap();
    // five coincident markers at alpha 0.1 each
    let want = 255.0 * (1.0 - 0.9f64.powi(5));
    assert!((c.pixel(50, 50)[0] as f64 - want).abs() < 1e-3);
}

#[test]
fn later_markers_are_brighter() {
    let cfg = cfg100();
    let fit = flat_fit();
    let top = vo_table(DatasetId::DHG1428_14G)[0];
    let mut schema = JointSchema::dhg22();
    schema.fingertips = vec![5, 9, 13, 17, 21];
    schema.palette.fingertips = vec![[255, 255, 255]; 5];
    let mut frames: Vec<Frame> = vec![vec![[0.5, 0.5, 0.5]; 22]; 10];
    for tip in [5, 9, 13, 17, 21] {
        frames[0][tip] = [0.3, 0.5, 0.5];
        frames[9][tip] = [0.7, 0.5, 0.5];
    }
    let mut c = Canvas::new(100, 100, [0, 0, 0]);
    render_temporal(&frames, &schema, &fit, &top, &cfg, &mut c).unwrap();
    assert!(c.pixel(30, 50)[0] < c.pixel(70, 50)[0]);
}
