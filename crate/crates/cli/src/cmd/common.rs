use std::fs;
use std::path::{Path, PathBuf};

use gestigo_core::condense::encoded_image_path;
use gestigo_core::dataset::parse_dataset_with_seed;
use gestigo_core::{DatasetManifest, RasterImage, RenderConfig, Split, VoName};
use gestigo_net::{render_source, AugmentConfig, EncodedSource, ImageSource, ModelConfig, TrainConfig};

use crate::args::{DatasetArgs, ModelArgs};
use crate::error::{io, CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.tsv";
pub const ENCODE_INFO_FILE: &str = "encode.tsv";

pub fn usize_list(what: &str, s: &str) -> CliResult<Vec<usize>> {
    s.split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|_| CliError::data(format!("--{what}: `{p}` is not a count"))))
        .collect()
}

pub fn f64_list(what: &str, s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| CliError::data(format!("--{what}: `{p}` is not a number"))))
        .collect()
}

pub fn vo_list(what: &str, s: &str) -> CliResult<Vec<VoName>> {
    VoName::parse_list(s).map_err(|e| CliError::data(format!("--{what}: {e}")))
}

pub fn names(vos: &[VoName]) -> String {
    vos.iter().map(|v| v.as_str()).collect::<Vec<_>>().join(",")
}

/// The dataset's manifest, restricted to `--classes` if given.
pub fn load_manifest(a: &DatasetArgs) -> CliResult<DatasetManifest> {
    let m = parse_dataset_with_seed(a.dataset, &a.root, a.split_seed)?;
    match &a.classes {
        Some(c) => Ok(m.filter_classes(&usize_list("classes", c)?)?),
        None => Ok(m),
    }
}

/// Directory holding one dataset's encoded images.
pub fn encoded_dir(root: &Path, m: &DatasetManifest) -> PathBuf {
    root.join(m.dataset_id.as_str())
}

/// Checks that `encoded` was written for exactly this manifest and returns
/// the image size it was rendered at.
pub fn check_encoded(encoded: &Path, m: &DatasetManifest) -> CliResult<usize> {
    let dir = encoded_dir(encoded, m);
    let path = dir.join(MANIFEST_FILE);
    let text = io(fs::read_to_string(&path), &path)?;
    if text != m.to_index() {
        return Err(CliError::data(format!(
            "{} describes a different selection; encode again with the same --classes and --split-seed",
            path.display()
        )));
    }
    let info = dir.join(ENCODE_INFO_FILE);
    let text = io(fs::read_to_string(&info), &info)?;
    text.lines()
        .find_map(|l| l.strip_prefix("size\t"))
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| CliError::data(format!("{}: no size line", info.display())))
}

/// Training and validation images for `vos`, from an encoded tree or
/// rendered in memory at `master_px` and kept at `keep_px`.
pub fn sources(
    m: &DatasetManifest,
    vos: &[VoName],
    encoded: Option<&Path>,
    master_px: usize,
    keep_px: usize,
    splits: &[Split],
) -> CliResult<Vec<Box<dyn ImageSource>>> {
    splits
        .iter()
        .map(|&split| -> CliResult<Box<dyn ImageSource>> {
            Ok(match encoded {
                Some(dir) => Box::new(EncodedSource::new(dir, m, split, vos)?),
                None => Box::new(render_source(m, split, vos, &RenderConfig::with_size(master_px), Some(keep_px))?),
            })
        })
        .collect()
}

pub fn model_config(m: &DatasetManifest, vos: Vec<VoName>, a: &ModelArgs, master_px: usize) -> CliResult<ModelConfig> {
    let mut c = ModelConfig::new(m.dataset_id, m.class_names.clone(), vos);
    c.encoder_widths = usize_list("encoder-widths", &a.encoder_widths)?;
    c.tuner_widths = usize_list("tuner-widths", &a.tuner_widths)?;
    c.head_hidden = a.head_hidden;
    c.tuner_hidden = a.tuner_hidden;
    c.stage_sizes = usize_list("stages", &a.stages)?;
    c.pseudo_px = a.pseudo_px;
    c.master_px = master_px;
    c.eval_px = *c.stage_sizes.last().unwrap_or(&0);
    c.validate()?;
    Ok(c)
}

pub fn train_config(a: &ModelArgs, checkpoint: Option<PathBuf>) -> CliResult<TrainConfig> {
    let augment = match a.augment.as_str() {
        "on" => AugmentConfig::default(),
        "off" => AugmentConfig::none(),
        other => return Err(CliError::data(format!("--augment takes on or off, not `{other}`"))),
    };
    Ok(TrainConfig {
        batch_size: a.batch,
        epochs_per_stage: a.epochs,
        lr_grid: f64_list("lr", &a.lr)?,
        seed: a.seed,
        augment,
        checkpoint,
        ..TrainConfig::default()
    })
}

/// The stream views: `--vos`, cut to `--streams` if given.
pub fn stream_vos(a: &ModelArgs) -> CliResult<Vec<VoName>> {
    let mut vos = vo_list("vos", &a.vos)?;
    if let Some(n) = a.streams {
        if n == 0 || n > vos.len() {
            return Err(CliError::data(format!("--streams {n} with {} views in --vos", vos.len())));
        }
        vos.truncate(n);
    }
    Ok(vos)
}

pub fn create_dir(dir: &Path) -> CliResult<()> {
    io(fs::create_dir_all(dir), dir)
}

pub fn write(path: &Path, text: &str) -> CliResult<()> {
    if let Some(d) = path.parent() {
        create_dir(d)?;
    }
    io(fs::write(path, text), path)
}

pub fn write_png(img: &RasterImage, path: &Path) -> CliResult<()> {
    if let Some(d) = path.parent() {
        create_dir(d)?;
    }
    Ok(img.write_png(path)?)
}

pub fn image_path(encoded: &Path, m: &DatasetManifest, vo: VoName, i: usize) -> PathBuf {
    encoded_image_path(encoded, m.dataset_id, vo.as_str(), &m.entries[i])
}

/// A multi-thread runtime, capped at `threads` workers.
pub fn runtime(threads: Option<usize>) -> CliResult<tokio::runtime::Runtime> {
    let mut b = tokio::runtime::Builder::new_multi_thread();
    b.enable_all();
    if let Some(n) = threads {
        b.worker_threads(n);
    }
    b.build().map_err(|e| CliError::data(format!("cannot start the async runtime: {e}")))
}
