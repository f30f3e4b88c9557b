//! 8-bit RGB images and a small anti-aliased software rasterizer.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::CondenseError;
use crate::schema::Rgb;

/// Row-major 8-bit RGB image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, fill: Rgb) -> Self {
        let mut pixels = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            pixels.extend_from_slice(&fill);
        }
        RasterImage {
            width,
            height,
            pixels,
        }
    }

    pub fn from_raw(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, CondenseError> {
        if pixels.len() != width * height * 3 {
            return Err(CondenseError::Image(format!(
                "{}x{} RGB image needs {} bytes, got {}",
                width,
                height,
                width * height * 3,
                pixels.len()
            )));
        }
        Ok(RasterImage {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn put(&mut self, x: usize, y: usize, c: Rgb) {
        let i = (y * self.width + x) * 3;
        self.pixels[i..i + 3].copy_from_slice(&c);
    }

    pub fn flip_horizontal(&self) -> RasterImage {
        let mut out = self.clone();
        for y in 0..self.height {
            for x in 0..self.width {
                out.put(self.width - 1 - x, y, self.get(x, y));
            }
        }
        out
    }

    /// Downscales (or upscales) by area averaging: each output pixel is the
    /// coverage-weighted mean of the source pixels under its footprint.
    pub fn resize_area(&self, width: usize, height: usize) -> RasterImage {
        if width == self.width && height == self.height {
            return self.clone();
        }
        let wx = area_weights(self.width, width);
        let wy = area_weights(self.height, height);

        // Horizontal pass into floats, then vertical.
        let mut tmp = vec![0f32; width * self.height * 3];
        for y in 0..self.height {
            let src = &self.pixels[y * self.width * 3..(y + 1) * self.width * 3];
            for (ox, taps) in wx.iter().enumerate() {
                let mut acc = [0f32; 3];
                for &(sx, w) in taps {
                    for c in 0..3 {
                        acc[c] += w * src[sx * 3 + c] as f32;
                    }
                }
                tmp[(y * width + ox) * 3..(y * width + ox) * 3 + 3].copy_from_slice(&acc);
            }
        }
        let mut pixels = vec![0u8; width * height * 3];
        for (oy, taps) in wy.iter().enumerate() {
            for ox in 0..width {
                let mut acc = [0f32; 3];
                for &(sy, w) in taps {
                    let i = (sy * width + ox) * 3;
                    for c in 0..3 {
                        acc[c] += w * tmp[i + c];
                    }
                }
                let o = (oy * width + ox) * 3;
                for c in 0..3 {
                    pixels[o + c] = acc[c].round().clamp(0.0, 255.0) as u8;
                }
            }
        }
        RasterImage {
            width,
            height,
            pixels,
        }
    }

    pub fn write_png(&self, path: &Path) -> Result<(), CondenseError> {
        let file = File::create(path)
            .map_err(|e| CondenseError::Image(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        self.encode_png(&mut w)?;
        w.flush()
            .map_err(|e| CondenseError::Image(format!("{}: {e}", path.display())))
    }

    pub fn encode_png<W: Write>(&self, w: W) -> Result<(), CondenseError> {
        let mut enc = png::Encoder::new(w, self.width as u32, self.height as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc
            .write_header()
            .map_err(|e| CondenseError::Image(e.to_string()))?;
        writer
            .write_image_data(&self.pixels)
            .map_err(|e| CondenseError::Image(e.to_string()))?;
        writer.finish().map_err(|e| CondenseError::Image(e.to_string()))
    }

    pub fn read_png(path: &Path) -> Result<RasterImage, CondenseError> {
        let file = File::open(path)
            .map_err(|e| CondenseError::Image(format!("{}: {e}", path.display())))?;
        let decoder = png::Decoder::new(BufReader::new(file));
        let mut reader = decoder
            .read_info()
            .map_err(|e| CondenseError::Image(format!("{}: {e}", path.display())))?;
        let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
        let info = reader
            .next_frame(&mut buf)
            .map_err(|e| CondenseError::Image(format!("{}: {e}", path.display())))?;
        if info.color_type != png::ColorType::Rgb || info.bit_depth != png::BitDepth::Eight {
            return Err(CondenseError::Image(format!(
                "{}: expected 8-bit RGB, got {:?} {:?}",
                path.display(),
                info.color_type,
                info.bit_depth
            )));
        }
        buf.truncate(info.buffer_size());
        RasterImage::from_raw(info.width as usize, info.height as usize, buf)
    }
}

/// For each output cell, the (source index, weight) pairs of its footprint.
fn area_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f32)>> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|o| {
            let lo = o as f64 * scale;
            let hi = (o + 1) as f64 * scale;
            let mut taps = Vec::new();
            let mut s = lo.floor() as usize;
            while (s as f64) < hi && s < src {
                let overlap = (hi.min(s as f64 + 1.0) - lo.max(s as f64)).max(0.0);
                if overlap > 0.0 {
                    taps.push((s, (overlap / scale) as f32));
                }
                s += 1;
            }
            taps
        })
        .collect()
}

/// Positions are snapped to this many subpixel steps per pixel before
/// coverage is computed, so round-off far below a subpixel cannot change
/// the output.
const SUBPIXEL: f64 = 256.0;

fn snap(v: f64) -> f64 {
    (v * SUBPIXEL).round() / SUBPIXEL
}

/// Floating-point RGB working surface for source-over compositing.
#[derive(Clone, Debug)]
pub struct Canvas {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Canvas {
    pub fn new(width: usize, height: usize, background: Rgb) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            data.extend(background.iter().map(|&c| c as f32));
        }
        Canvas {
            width,
            height,
            data,
        }
    }

    pub fn from_image(img: &RasterImage) -> Self {
        Canvas {
            width: img.width,
            height: img.height,
            data: img.pixels.iter().map(|&c| c as f32).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Channel values in [0, 255].
    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn to_image(&self) -> RasterImage {
        RasterImage {
            width: self.width,
            height: self.height,
            pixels: self
                .data
                .iter()
                .map(|&v| v.round().clamp(0.0, 255.0) as u8)
                .collect(),
        }
    }

    fn blend(&mut self, x: usize, y: usize, color: Rgb, alpha: f32) {
        let i = (y * self.width + x) * 3;
        for c in 0..3 {
            let dst = self.data[i + c];
            self.data[i + c] = dst + alpha * (color[c] as f32 - dst);
        }
    }

    /// Pixels whose centers lie within `reach` of the box `[x0,x1]x[y0,y1]`.
    fn pixel_range(&self, x0: f64, x1: f64, y0: f64, y1: f64, reach: f64) -> Option<(usize, usize, usize, usize)> {
        let lo_x = (x0 - reach - 0.5).floor().max(0.0);
        let hi_x = (x1 + reach + 0.5).ceil().min(self.width as f64 - 1.0);
        let lo_y = (y0 - reach - 0.5).floor().max(0.0);
        let hi_y = (y1 + reach + 0.5).ceil().min(self.height as f64 - 1.0);
        if hi_x < lo_x || hi_y < lo_y || !lo_x.is_finite() || !lo_y.is_finite() {
            return None;
        }
        Some((lo_x as usize, hi_x as usize, lo_y as usize, hi_y as usize))
    }

    /// Filled disc with a one-pixel analytic anti-aliased rim.
    pub fn fill_disc(&mut self, center: [f64; 2], radius: f64, color: Rgb, alpha: f32) {
        let (cx, cy) = (snap(center[0]), snap(center[1]));
        let Some((x0, x1, y0, y1)) = self.pixel_range(cx, cx, cy, cy, radius) else {
            return;
        };
        for y in y0..=y1 {
            for x in x0..=x1 {
                let dx = x as f64 + 0.5 - cx;
                let dy = y as f64 + 0.5 - cy;
                let cov = coverage(radius - (dx * dx + dy * dy).sqrt());
                if cov > 0.0 {
                    self.blend(x, y, color, alpha * cov);
                }
            }
        }
    }

    /// Segment of the given width with round caps and anti-aliased edges.
    pub fn stroke_segment(&mut self, a: [f64; 2], b: [f64; 2], width: f64, color: Rgb, alpha: f32) {
        let (ax, ay, bx, by) = (snap(a[0]), snap(a[1]), snap(b[0]), snap(b[1]));
        let half = width / 2.0;
        let Some((x0, x1, y0, y1)) =
            self.pixel_range(ax.min(bx), ax.max(bx), ay.min(by), ay.max(by), half)
        else {
            return;
        };
        let (ex, ey) = (bx - ax, by - ay);
        let len2 = ex * ex + ey * ey;
        for y in y0..=y1 {
            for x in x0..=x1 {
                let px = x as f64 + 0.5 - ax;
                let py = y as f64 + 0.5 - ay;
                let t = if len2 > 0.0 {
                    ((px * ex + py * ey) / len2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let dx = px - t * ex;
                let dy = py - t * ey;
                let cov = coverage(half - (dx * dx + dy * dy).sqrt());
                if cov > 0.0 {
                    self.blend(x, y, color, alpha * cov);
                }
            }
        }
    }
}

/// Box-filter approximation of pixel coverage from signed edge distance.
fn coverage(inside_distance: f64) -> f32 {
    (inside_distance + 0.5).clamp(0.0, 1.0) as f32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn area_resize_preserves_constant_images() {
        let img = RasterImage::new(960, 960, [16, 200, 33]);
        for size in [224, 276, 328, 380, 64] {
            let out = img.resize_area(size, size);
            assert!(out.pixels().chunks(3).all(|p| p == [16, 200, 33]));
        }
    }

    #[test]
    fn area_weights_sum_to_one() {
        for (src, dst) in [(960, 224), (960, 380), (7, 3), (3, 7)] {
            for taps in area_weights(src, dst) {
                let total: f32 = taps.iter().map(|t| t.1).sum();
                assert!((total - 1.0).abs() < 1e-5, "{src}->{dst}: {total}");
            }
        }
    }

    #[test]
    fn area_resize_halves_checkerboard_to_gray() {
        let mut img = RasterImage::new(4, 4, [0, 0, 0]);
        for y in 0..4 {
            for x in 0..4 {
                if (x + y) % 2 == 0 {
                    img.put(x, y, [200, 200, 200]);
                }
            }
        }
        let out = img.resize_area(2, 2);
        assert!(out.pixels().iter().all(|&v| v == 100));
    }

    #[test]
    fn png_round_trip() {
        let mut img = RasterImage::new(5, 3, [1, 2, 3]);
        img.put(4, 2, [250, 0, 9]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.png");
        img.write_png(&path).unwrap();
        assert_eq!(RasterImage::read_png(&path).unwrap(), img);
    }

    #[test]
    fn disc_interior_is_opaque_and_far_pixels_untouched() {
        let mut c = Canvas::new(32, 32, [0, 0, 0]);
        c.fill_disc([16.3, 16.0], 4.0, [255, 0, 0], 1.0);
        assert_eq!(c.pixel(16, 16), [255.0, 0.0, 0.0]);
        assert_eq!(c.pixel(2, 2), [0.0, 0.0, 0.0]);
        // Rim pixels are partially covered.
        let rim = c.pixel(20, 16)[0];
        assert!(rim > 0.0 && rim < 255.0, "{rim}");
    }

    #[test]
    fn horizontal_segment_scanline() {
        let mut c = Canvas::new(40, 40, [0, 0, 0]);
        c.stroke_segment([5.0, 20.0], [35.0, 20.0], 3.0, [230, 230, 230], 1.0);
        let img = c.to_image();
        for x in 6..35 {
            assert_ne!(img.get(x, 19), [0, 0, 0], "x={x}");
            assert_ne!(img.get(x, 20), [0, 0, 0], "x={x}");
        }
        for y in (0..15).chain(25..40) {
            for x in 0..40 {
                assert_eq!(img.get(x, y), [0, 0, 0], "({x},{y})");
            }
        }
    }

    #[test]
    fn shapes_outside_canvas_are_clipped() {
        let mut c = Canvas::new(8, 8, [0, 0, 0]);
        c.fill_disc([-100.0, 4.0], 3.0, [255, 255, 255], 1.0);
        c.stroke_segment([-10.0, -10.0], [-1.0, -5.0], 2.0, [255, 255, 255], 1.0);
        assert!(c.to_image().pixels().iter().all(|&v| v == 0));
        c.fill_disc([0.0, 0.0], 3.0, [255, 255, 255], 1.0);
        assert_eq!(c.to_image().get(0, 0), [255, 255, 255]);
    }
}
