//! Temporal information condensation: a gesture becomes one static RGB image.
//!
//! The pipeline resamples the sequence to a fixed window, centers it on the
//! camera target, picks a zoom from its extent, then draws the fingertip
//! trails (fading in over time) under the final hand pose.

use std::path::{Path, PathBuf};

use crate::dataset::{DatasetId, ManifestEntry};
use crate::error::CondenseError;
use crate::raster::{Canvas, RasterImage};
use crate::schema::{JointSchema, Rgb};
use crate::sequence::{Frame, Joint, SkeletonSequence};
use crate::view::{camera_basis, mat_vec, ViewOrientation};

pub const DEFAULT_IMAGE_PX: usize = 960;
pub const DEFAULT_TEMPORAL_WINDOW: usize = 250;
pub const DEFAULT_PADDING: f64 = 0.125;
pub const DEFAULT_CANONICAL_LENGTH: f64 = 1.0;

#[derive(Clone, Debug, PartialEq)]
pub struct RenderConfig {
    pub image_px: usize,
    pub background: Rgb,
    pub bone_width_px: f64,
    pub marker_radius_px: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub temporal_window: usize,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            image_px: DEFAULT_IMAGE_PX,
            background: [16, 16, 16],
            bone_width_px: 3.0,
            marker_radius_px: 4.0,
            alpha_min: 0.1,
            alpha_max: 1.0,
            temporal_window: DEFAULT_TEMPORAL_WINDOW,
        }
    }
}

impl RenderConfig {
    /// Default styling at another canvas size, stroke sizes scaled with it.
    pub fn with_size(image_px: usize) -> Self {
        let base = RenderConfig::default();
        let k = image_px as f64 / DEFAULT_IMAGE_PX as f64;
        RenderConfig {
            image_px,
            bone_width_px: base.bone_width_px * k,
            marker_radius_px: base.marker_radius_px * k,
            ..base
        }
    }

    pub fn validate(&self) -> Result<(), CondenseError> {
        let bad = |m: &str| Err(CondenseError::Argument(m.to_string()));
        if self.image_px == 0 {
            return bad("image_px must be positive");
        }
        if !(self.bone_width_px > 0.0 && self.bone_width_px.is_finite()) {
            return bad("bone width must be positive");
        }
        if !(self.marker_radius_px > 0.0 && self.marker_radius_px.is_finite()) {
            return bad("marker radius must be positive");
        }
        if !(0.0..=1.0).contains(&self.alpha_min)
            || !(0.0..=1.0).contains(&self.alpha_max)
            || self.alpha_min >= self.alpha_max
        {
            return bad("alpha range must satisfy 0 <= alpha_min < alpha_max <= 1");
        }
        if self.temporal_window < 2 {
            return bad("temporal window must be at least 2");
        }
        Ok(())
    }
}

/// Piecewise-linear resampling to exactly `t` frames over normalized time.
///
/// Output frame `i` sits at input position `i·(Ti−1)/(t−1)`; the integer part
/// is computed exactly so frames that land on an input sample (including both
/// endpoints) are copied bit for bit.
pub fn resample_sequence(seq: &SkeletonSequence, t: usize) -> Result<SkeletonSequence, CondenseError> {
    if t < 2 {
        return Err(CondenseError::Argument(format!(
            "temporal window must be at least 2, got {t}"
        )));
    }
    let input = seq.frames();
    let span_in = input.len() - 1;
    let span_out = t - 1;
    let frames: Vec<Frame> = (0..t)
        .map(|i| {
            let num = i * span_in;
            let k = num / span_out;
            let rem = num % span_out;
            if rem == 0 {
                return input[k].clone();
            }
            let w = rem as f64 / span_out as f64;
            input[k]
                .iter()
                .zip(&input[k + 1])
                .map(|(a, b)| {
                    [
                        a[0] + w * (b[0] - a[0]),
                        a[1] + w * (b[1] - a[1]),
                        a[2] + w * (b[2] - a[2]),
                    ]
                })
                .collect()
        })
        .collect();
    Ok(seq.with_frames(frames)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub centered: SkeletonSequence,
    /// Camera look-at point; equals the centroid of `centered`.
    pub target: [f64; 3],
    /// Orthographic view extent in dataset units.
    pub zoom: f64,
    pub padding: f64,
    pub length: f64,
}

/// Mean of all coordinates, per axis.
pub fn centroid(seq: &SkeletonSequence) -> [f64; 3] {
    let mut sum = [0.0f64; 3];
    let mut n = 0usize;
    for p in seq.points() {
        for a in 0..3 {
            sum[a] += p[a];
        }
        n += 1;
    }
    sum.map(|s| s / n as f64)
}

/// Per-axis `max − min` over all coordinates.
pub fn extents(seq: &SkeletonSequence) -> [f64; 3] {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in seq.points() {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]]
}

/// Moves the gesture centroid onto the look-at point `(L/2, L/2, L/2)` and
/// sets the zoom to the largest axis extent plus `padding`.
pub fn fit_sequence(seq: &SkeletonSequence, length: f64, padding: f64) -> Result<FitResult, CondenseError> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(CondenseError::Argument(format!(
            "canonical length must be positive, got {length}"
        )));
    }
    if !(padding >= 0.0 && padding.is_finite()) {
        return Err(CondenseError::Argument(format!(
            "padding must be non-negative, got {padding}"
        )));
    }
    let mean = centroid(seq);
    let half = length / 2.0;
    let frames = seq
        .frames()
        .iter()
        .map(|f| {
            f.iter()
                .map(|p| {
                    [
                        p[0] - mean[0] + half,
                        p[1] - mean[1] + half,
                        p[2] - mean[2] + half,
                    ]
                })
                .collect()
        })
        .collect();
    let centered = seq.with_frames(frames)?;
    let ext = extents(&centered);
    let zoom = ext.iter().cloned().fold(0.0, f64::max) + padding;
    if zoom <= 0.0 {
        return Err(CondenseError::Argument(format!(
            "{}: gesture has zero extent and no padding; cannot frame it",
            seq.source_path()
        )));
    }
    Ok(FitResult {
        centered,
        target: [half; 3],
        zoom,
        padding,
        length,
    })
}

/// Precomputed projection for one view of one fitted gesture.
#[derive(Clone, Debug)]
pub struct Projector {
    basis: [[f64; 3]; 3],
    target: [f64; 3],
    scale: f64,
    center: f64,
}

impl Projector {
    pub fn new(fit: &FitResult, vo: &ViewOrientation, image_px: usize) -> Self {
        Projector {
            basis: camera_basis(vo),
            target: fit.target,
            scale: image_px as f64 / fit.zoom,
            center: image_px as f64 / 2.0,
        }
    }

    /// Image coordinates, x to the right and y down.
    pub fn apply(&self, p: &Joint) -> [f64; 2] {
        let c = mat_vec(
            &self.basis,
            [p[0] - self.target[0], p[1] - self.target[1], p[2] - self.target[2]],
        );
        [self.center + c[0] * self.scale, self.center - c[1] * self.scale]
    }
}

/// Orthographic projection of `points` into pixel coordinates.
pub fn project(
    points: &[Joint],
    fit: &FitResult,
    vo: &ViewOrientation,
    image_px: usize,
) -> Result<Vec<[f64; 2]>, CondenseError> {
    if let Some(i) = points.iter().position(|p| p.iter().any(|v| !v.is_finite())) {
        return Err(CondenseError::Argument(format!("point {i} is not finite")));
    }
    let proj = Projector::new(fit, vo, image_px);
    Ok(points.iter().map(|p| proj.apply(p)).collect())
}

fn check_canvas(canvas: &Canvas, cfg: &RenderConfig) -> Result<(), CondenseError> {
    if canvas.width() != cfg.image_px || canvas.height() != cfg.image_px {
        return Err(CondenseError::Argument(format!(
            "canvas is {}x{}, config expects {}x{}",
            canvas.width(),
            canvas.height(),
            cfg.image_px,
            cfg.image_px
        )));
    }
    Ok(())
}

/// Draws the bones of `frame` opaquely in the schema's bone color.
pub fn render_spatial(
    frame: &[Joint],
    schema: &JointSchema,
    fit: &FitResult,
    vo: &ViewOrientation,
    cfg: &RenderConfig,
    canvas: &mut Canvas,
) -> Result<(), CondenseError> {
    check_canvas(canvas, cfg)?;
    let proj = Projector::new(fit, vo, cfg.image_px);
    for &(a, b) in &schema.bones {
        canvas.stroke_segment(
            proj.apply(&frame[a]),
            proj.apply(&frame[b]),
            cfg.bone_width_px,
            schema.palette.bone,
            1.0,
        );
    }
    Ok(())
}

/// Opacity of the trail marker for trail frame `tau` (1-based) out of
/// `trail_len`.
pub fn trail_alpha(cfg: &RenderConfig, tau: usize, trail_len: usize) -> f64 {
    if trail_len <= 1 {
        return cfg.alpha_min;
    }
    cfg.alpha_min + (cfg.alpha_max - cfg.alpha_min) * (tau - 1) as f64 / (trail_len - 1) as f64
}

/// Draws one marker per frame per fingertip, earliest frame first, with
/// opacity ramping from `alpha_min` to `alpha_max`.
pub fn render_temporal(
    frames: &[Frame],
    schema: &JointSchema,
    fit: &FitResult,
    vo: &ViewOrientation,
    cfg: &RenderConfig,
    canvas: &mut Canvas,
) -> Result<(), CondenseError> {
    check_canvas(canvas, cfg)?;
    let proj = Projector::new(fit, vo, cfg.image_px);
    for (i, frame) in frames.iter().enumerate() {
        let alpha = trail_alpha(cfg, i + 1, frames.len()) as f32;
        for (&tip, &color) in schema.fingertips.iter().zip(&schema.palette.fingertips) {
            canvas.fill_disc(proj.apply(&frame[tip]), cfg.marker_radius_px, color, alpha);
        }
    }
    Ok(())
}

fn render_fitted(fit: &FitResult, vo: &ViewOrientation, cfg: &RenderConfig) -> Result<RasterImage, CondenseError> {
    let frames = fit.centered.frames();
    let schema = fit.centered.schema();
    let mut canvas = Canvas::new(cfg.image_px, cfg.image_px, cfg.background);
    let (last, trail) = frames.split_last().expect("sequences have at least two frames");
    render_temporal(trail, schema, fit, vo, cfg, &mut canvas)?;
    render_spatial(last, schema, fit, vo, cfg, &mut canvas)?;
    Ok(canvas.to_image())
}

/// Full pipeline for one view: resample, fit, trail, pose.
pub fn condense(
    seq: &SkeletonSequence,
    vo: &ViewOrientation,
    cfg: &RenderConfig,
    padding: f64,
    length: f64,
) -> Result<RasterImage, CondenseError> {
    cfg.validate()?;
    let resampled = resample_sequence(seq, cfg.temporal_window)?;
    let fit = fit_sequence(&resampled, length, padding)?;
    render_fitted(&fit, vo, cfg)
}

/// [`condense`] for several views, sharing the resample and fit.
pub fn condense_views(
    seq: &SkeletonSequence,
    vos: &[ViewOrientation],
    cfg: &RenderConfig,
    padding: f64,
    length: f64,
) -> Result<Vec<RasterImage>, CondenseError> {
    cfg.validate()?;
    let resampled = resample_sequence(seq, cfg.temporal_window)?;
    let fit = fit_sequence(&resampled, length, padding)?;
    vos.iter().map(|vo| render_fitted(&fit, vo, cfg)).collect()
}

/// File stem for an encoded sequence: the locator without extension, with
/// path separators flattened.
pub fn sequence_id(locator: &str) -> String {
    let stem = locator.strip_suffix(".txt").unwrap_or(locator);
    stem.replace('/', "__")
}

/// `<out>/<dataset>/<vo>/<split>/<class>/<sequence-id>.png`
pub fn encoded_image_path(out: &Path, dataset: DatasetId, vo: &str, entry: &ManifestEntry) -> PathBuf {
    out.join(dataset.as_str())
        .join(vo)
        .join(entry.split.as_str())
        .join(format!("{:02}", entry.label))
        .join(format!("{}.png", sequence_id(&entry.locator)))
}
