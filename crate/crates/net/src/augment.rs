//! Training-time image augmentation.

use gestigo_core::RasterImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Mat3 = [[f64; 3]; 3];

/// Per-transform probabilities and magnitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentConfig {
    pub flip: f64,
    pub affine: f64,
    pub perspective: f64,
    pub rotation: f64,
    pub color: f64,
    /// Translation as a fraction of the image size, and scale deviation.
    pub max_shift: f64,
    pub max_zoom: f64,
    /// Corner displacement as a fraction of the image size.
    pub distortion: f64,
    pub max_rotation_deg: f64,
    /// Brightness and contrast deviation.
    pub max_color: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            flip: 0.5,
            affine: 0.3,
            perspective: 0.2,
            rotation: 0.3,
            color: 0.3,
            max_shift: 0.1,
            max_zoom: 0.1,
            distortion: 0.1,
            max_rotation_deg: 15.0,
            max_color: 0.1,
        }
    }
}

impl AugmentConfig {
    /// Every probability zero.
    pub fn none() -> Self {
        AugmentConfig {
            flip: 0.0,
            affine: 0.0,
            perspective: 0.0,
            rotation: 0.0,
            color: 0.0,
            ..Self::default()
        }
    }

    pub fn is_identity(&self) -> bool {
        [self.flip, self.affine, self.perspective, self.rotation, self.color]
            .iter()
            .all(|p| *p <= 0.0)
    }
}

fn mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

fn about_center(m: Mat3, c: f64) -> Mat3 {
    let to = [[1.0, 0.0, c], [0.0, 1.0, c], [0.0, 0.0, 1.0]];
    let from = [[1.0, 0.0, -c], [0.0, 1.0, -c], [0.0, 0.0, 1.0]];
    mul(&to, &mul(&m, &from))
}

/// Sampling map of a rotation by `deg` about the image center: output
/// pixel → source position.
fn rotation_map(deg: f64, size: usize) -> Mat3 {
    // Sampling with the inverse rotation rotates content by +deg.
    let (s, c) = (-deg).to_radians().sin_cos();
    about_center([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]], size as f64 / 2.0)
}

/// Homography taking `from[i]` to `to[i]`, via the 8×8 direct linear system.
fn homography(from: [[f64; 2]; 4], to: [[f64; 2]; 4]) -> Option<Mat3> {
    let mut a = [[0.0f64; 9]; 8];
    for i in 0..4 {
        let ([x, y], [u, v]) = (from[i], to[i]);
        a[2 * i] = [x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y, u];
        a[2 * i + 1] = [0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y, v];
    }
    for col in 0..8 {
        let pivot = (col..8).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        for row in 0..8 {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..9 {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    let h: Vec<f64> = (0..8).map(|i| a[i][8] / a[i][i]).collect();
    Some([[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], 1.0]])
}

/// Resamples with bilinear interpolation; `map` takes output pixel
/// centers to source coordinates. Out-of-range samples clamp to the border.
pub fn warp(img: &RasterImage, map: &Mat3) -> RasterImage {
    let (w, h) = (img.width(), img.height());
    let mut out = RasterImage::new(w, h, [0, 0, 0]);
    let src = img.pixels();
    let at = |x: isize, y: isize, c: usize| {
        let x = x.clamp(0, w as isize - 1) as usize;
        let y = y.clamp(0, h as isize - 1) as usize;
        src[(y * w + x) * 3 + c] as f64
    };
    for oy in 0..h {
        for ox in 0..w {
            let (px, py) = (ox as f64 + 0.5, oy as f64 + 0.5);
            let z = map[2][0] * px + map[2][1] * py + map[2][2];
            let sx = (map[0][0] * px + map[0][1] * py + map[0][2]) / z - 0.5;
            let sy = (map[1][0] * px + map[1][1] * py + map[1][2]) / z - 0.5;
            let (x0, y0) = (sx.floor(), sy.floor());
            let (fx, fy) = (sx - x0, sy - y0);
            let (x0, y0) = (x0 as isize, y0 as isize);
            let mut rgb = [0u8; 3];
            for (c, v) in rgb.iter_mut().enumerate() {
                let top = at(x0, y0, c) * (1.0 - fx) + at(x0 + 1, y0, c) * fx;
                let bottom = at(x0, y0 + 1, c) * (1.0 - fx) + at(x0 + 1, y0 + 1, c) * fx;
                *v = (top * (1.0 - fy) + bottom * fy).round().clamp(0.0, 255.0) as u8;
            }
            out.put(ox, oy, rgb);
        }
    }
    out
}

/// Rotates content by `deg` degrees (counter-clockwise on screen is
/// negative, y pointing down) about the center.
pub fn rotate(img: &RasterImage, deg: f64) -> RasterImage {
    warp(img, &rotation_map(deg, img.width().max(img.height())))
}

/// Applies each enabled transform with its probability. The same seed
/// always gives the same output.
pub fn augment(img: &RasterImage, cfg: &AugmentConfig, seed: u64) -> RasterImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = img.width().max(img.height()) as f64;
    let c = size / 2.0;
    let mut out = if rng.gen_bool(cfg.flip.clamp(0.0, 1.0)) {
        img.flip_horizontal()
    } else {
        img.clone()
    };

    let mut map = IDENTITY;
    let mut warped = false;
    if rng.gen_bool(cfg.affine.clamp(0.0, 1.0)) {
        let zoom = 1.0 + rng.gen_range(-cfg.max_zoom..=cfg.max_zoom);
        let tx = rng.gen_range(-cfg.max_shift..=cfg.max_shift) * size;
        let ty = rng.gen_range(-cfg.max_shift..=cfg.max_shift) * size;
        let m = about_center([[1.0 / zoom, 0.0, -tx], [0.0, 1.0 / zoom, -ty], [0.0, 0.0, 1.0]], c);
        map = mul(&map, &m);
        warped = true;
    }
    if rng.gen_bool(cfg.rotation.clamp(0.0, 1.0)) {
        let deg = rng.gen_range(-cfg.max_rotation_deg..=cfg.max_rotation_deg);
        map = mul(&map, &rotation_map(deg, size as usize));
        warped = true;
    }
    if rng.gen_bool(cfg.perspective.clamp(0.0, 1.0)) {
        let corners = [[0.0, 0.0], [size, 0.0], [size, size], [0.0, size]];
        let d = cfg.distortion * size;
        let moved = corners.map(|[x, y]| [x + rng.gen_range(-d..=d), y + rng.gen_range(-d..=d)]);
        if let Some(h) = homography(corners, moved) {
            map = mul(&map, &h);
            warped = true;
        }
    }
    if warped {
        out = warp(&out, &map);
    }

    if rng.gen_bool(cfg.color.clamp(0.0, 1.0)) {
        let brightness = 1.0 + rng.gen_range(-cfg.max_color..=cfg.max_color);
        let contrast = 1.0 + rng.gen_range(-cfg.max_color..=cfg.max_color);
        let px = out.pixels_mut();
        let mean = px.iter().map(|v| *v as f64).sum::<f64>() / px.len() as f64;
        for v in px.iter_mut() {
            let x = ((*v as f64 - mean) * contrast + mean) * brightness;
            *v = x.round().clamp(0.0, 255.0) as u8;
        }
    }
    out
}
