use std::path::{Path, PathBuf};

use gestigo_core::condense::{DEFAULT_CANONICAL_LENGTH, DEFAULT_PADDING};
use gestigo_core::{
    condense::encoded_image_path, condense_views, load_sequence, select_views, DatasetManifest, RasterImage, RenderConfig,
    SkeletonSequence, Split, VoName,
};
use gestigo_nn::Tensor;
use rayon::prelude::*;

use crate::error::{NetError, Result};

/// Labelled multi-view samples. Labels are 0-based.
pub trait ImageSource: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn label(&self, i: usize) -> usize;

    /// The sample's images in stream order.
    fn images(&self, i: usize) -> Result<Vec<RasterImage>>;
}

#[derive(Clone, Debug)]
pub struct Sample {
    pub images: Vec<RasterImage>,
    pub label: usize,
}

/// Samples held in memory.
#[derive(Clone, Debug, Default)]
pub struct MemorySource {
    pub samples: Vec<Sample>,
}

impl ImageSource for MemorySource {
    fn len(&self) -> usize {
        self.samples.len()
    }

    fn label(&self, i: usize) -> usize {
        self.samples[i].label
    }

    fn images(&self, i: usize) -> Result<Vec<RasterImage>> {
        Ok(self.samples[i].images.clone())
    }
}

/// Samples read from an encoded-dataset tree on demand.
#[derive(Clone, Debug)]
pub struct EncodedSource {
    items: Vec<(Vec<PathBuf>, usize)>,
}

impl EncodedSource {
    /// Entries of `split` with one PNG per view in `vos`; every file must
    /// exist.
    pub fn new(encoded_root: &Path, manifest: &DatasetManifest, split: Split, vos: &[VoName]) -> Result<Self> {
        let mut items = Vec::new();
        for e in manifest.entries.iter().filter(|e| e.split == split) {
            let paths: Vec<PathBuf> = vos
                .iter()
                .map(|vo| encoded_image_path(encoded_root, manifest.dataset_id, vo.as_str(), e))
                .collect();
            if let Some(missing) = paths.iter().find(|p| !p.is_file()) {
                return Err(NetError::Argument(format!(
                    "encoded image {} is missing; run encode for these views first",
                    missing.display()
                )));
            }
            items.push((paths, e.label - 1));
        }
        Ok(EncodedSource { items })
    }
}

impl ImageSource for EncodedSource {
    fn len(&self) -> usize {
        self.items.len()
    }

    fn label(&self, i: usize) -> usize {
        self.items[i].1
    }

    fn images(&self, i: usize) -> Result<Vec<RasterImage>> {
        self.items[i].0.iter().map(|p| Ok(RasterImage::read_png(p)?)).collect()
    }
}

/// Renders one sequence from the given views with the standard fit.
pub fn render_views(
    seq: &SkeletonSequence,
    manifest_dataset: gestigo_core::DatasetId,
    vos: &[VoName],
    cfg: &RenderConfig,
) -> Result<Vec<RasterImage>> {
    let views = select_views(manifest_dataset, vos);
    Ok(condense_views(seq, &views, cfg, DEFAULT_PADDING, DEFAULT_CANONICAL_LENGTH)?)
}

/// Loads and renders the entries of `split` in memory, in parallel.
///
/// With `keep_px`, each render is area-downscaled to that size right away
/// so that only small images are held.
pub fn render_source(
    manifest: &DatasetManifest,
    split: Split,
    vos: &[VoName],
    cfg: &RenderConfig,
    keep_px: Option<usize>,
) -> Result<MemorySource> {
    let indices: Vec<usize> = (0..manifest.len()).filter(|&i| manifest.entries[i].split == split).collect();
    let samples = indices
        .par_iter()
        .map(|&i| {
            let seq = load_sequence(manifest, i)?;
            let mut images = render_views(&seq, manifest.dataset_id, vos, cfg)?;
            if let Some(px) = keep_px.filter(|px| *px < cfg.image_px) {
                images = images.iter().map(|img| img.resize_area(px, px)).collect();
            }
            Ok(Sample {
                images,
                label: manifest.entries[i].label - 1,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MemorySource { samples })
}

/// Maps an 8-bit channel to `[-1, 1]`.
pub fn normalize_pixel(v: u8) -> f32 {
    v as f32 / 127.5 - 1.0
}

/// Planar `[3, size, size]` values of one image, area-resized if needed.
pub fn image_planes(img: &RasterImage, size: usize) -> Vec<f32> {
    let resized;
    let img = if img.width() == size && img.height() == size {
        img
    } else {
        resized = img.resize_area(size, size);
        &resized
    };
    let plane = size * size;
    let mut out = vec![0.0; 3 * plane];
    for (i, px) in img.pixels().chunks_exact(3).enumerate() {
        for c in 0..3 {
            out[c * plane + i] = normalize_pixel(px[c]);
        }
    }
    out
}

/// `[B, 3, size, size]` batch.
pub fn image_batch(images: &[&RasterImage], size: usize) -> Result<Tensor<f32>> {
    if images.is_empty() {
        return Err(NetError::Argument("empty image batch".into()));
    }
    if let Some(bad) = images.iter().find(|i| i.width() != i.height()) {
        return Err(NetError::Argument(format!(
            "stream images must be square, got {}x{}",
            bad.width(),
            bad.height()
        )));
    }
    let data: Vec<f32> = images.iter().flat_map(|i| image_planes(i, size)).collect();
    Ok(Tensor::new(data, &[images.len(), 3, size, size])?)
}
