use gestigo_core::RasterImage;
use gestigo_net::augment::{augment, rotate};
use gestigo_net::AugmentConfig;

fn pattern(size: usize) -> RasterImage {
    let mut img = RasterImage::new(size, size, [0, 0, 0]);
    for y in 0..size {
        for x in 0..size {
            let v = ((x as f64 / size as f64 * 6.0).sin() * (y as f64 / size as f64 * 4.0).cos() * 120.0 + 128.0) as u8;
            img.put(x, y, [v, (x * 255 / size) as u8, (y * 255 / size) as u8]);
        }
    }
    img
}

#[test]
fn disabled_config_is_identity() {
    let img = pattern(32);
    let cfg = AugmentConfig::none();
    assert!(cfg.is_identity());
    for seed in 0..10 {
        assert_eq!(augment(&img, &cfg, seed), img);
    }
}

#[test]
fn flip_is_an_involution() {
    let img = pattern(17);
    let cfg = AugmentConfig {
        flip: 1.0,
        ..AugmentConfig::none()
    };
    let once = augment(&img, &cfg, 3);
    assert_ne!(once, img);
    assert_eq!(once, img.flip_horizontal());
    assert_eq!(augment(&once, &cfg, 4), img);
}

#[test]
fn rotation_round_trip_preserves_the_interior() {
    let img = pattern(64);
    let back = rotate(&rotate(&img, 12.0), -12.0);
    let (mut total, mut count) = (0.0, 0);
    for y in 16..48 {
        for x in 16..48 {
            for c in 0..3 {
                total += (img.get(x, y)[c] as f64 - back.get(x, y)[c] as f64).abs();
                count += 1;
            }
        }
    }
    assert!(total / (count as f64) < 4.0, "mean abs diff {}", total / count as f64);
}

#[test]
fn same_seed_same_output() {
    let img = pattern(40);
    let cfg = AugmentConfig {
        flip: 0.5,
        affine: 1.0,
        perspective: 1.0,
        rotation: 1.0,
        color: 1.0,
        ..AugmentConfig::default()
    };
    assert_eq!(augment(&img, &cfg, 11), augment(&img, &cfg, 11));
    assert!((0..8).any(|s| augment(&img, &cfg, s) != augment(&img, &cfg, 11)));
}

#[test]
fn output_keeps_the_size() {
    let img = pattern(24);
    let out = augment(&img, &AugmentConfig::default(), 9);
    assert_eq!((out.width(), out.height()), (24, 24));
}
