use gestigo_core::condense::DEFAULT_IMAGE_PX;
use gestigo_core::{DatasetId, VoName};

use crate::error::{NetError, Result};

pub const DEFAULT_ENCODER_WIDTHS: [usize; 4] = [16, 32, 64, 128];
pub const DEFAULT_TUNER_WIDTHS: [usize; 2] = [8, 16];
pub const DEFAULT_HEAD_HIDDEN: usize = 512;
pub const DEFAULT_TUNER_HIDDEN: usize = 128;
pub const DEFAULT_STAGE_SIZES: [usize; 4] = [224, 276, 328, 380];
pub const DEFAULT_PSEUDO_PX: usize = 224;
/// Dropout before the first and second linear layer of a head.
pub const HEAD_DROPOUT: [f64; 2] = [0.25, 0.5];

/// Architecture and input geometry of a multi-stream model.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    /// Source of the view-orientation angles.
    pub dataset: DatasetId,
    /// Class names; their count is the number of classes.
    pub class_names: Vec<String>,
    /// Stream order; their count is the number of streams.
    pub vos: Vec<VoName>,
    pub encoder_widths: Vec<usize>,
    pub tuner_widths: Vec<usize>,
    pub head_hidden: usize,
    pub tuner_hidden: usize,
    /// Progressive training input sizes.
    pub stage_sizes: Vec<usize>,
    pub pseudo_px: usize,
    /// Size at which gestures are rendered before downscaling.
    pub master_px: usize,
    /// Input size used at inference; set by training to the stage that
    /// produced the kept weights.
    pub eval_px: usize,
}

impl ModelConfig {
    pub fn new(dataset: DatasetId, class_names: Vec<String>, vos: Vec<VoName>) -> Self {
        ModelConfig {
            dataset,
            class_names,
            vos,
            encoder_widths: DEFAULT_ENCODER_WIDTHS.to_vec(),
            tuner_widths: DEFAULT_TUNER_WIDTHS.to_vec(),
            head_hidden: DEFAULT_HEAD_HIDDEN,
            tuner_hidden: DEFAULT_TUNER_HIDDEN,
            stage_sizes: DEFAULT_STAGE_SIZES.to_vec(),
            pseudo_px: DEFAULT_PSEUDO_PX,
            master_px: DEFAULT_IMAGE_PX,
            eval_px: DEFAULT_STAGE_SIZES[3],
        }
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn stream_count(&self) -> usize {
        self.vos.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(NetError::Config(m));
        let (j, n) = (self.stream_count(), self.class_count());
        if !(1..=3).contains(&j) {
            return bad(format!("{j} streams; between 1 and 3 are supported"));
        }
        if n < 2 {
            return bad(format!("{n} classes; at least 2 are needed"));
        }
        for (i, a) in self.vos.iter().enumerate() {
            if self.vos[i + 1..].contains(a) {
                return bad(format!("view {a} listed twice"));
            }
        }
        if self.class_names.iter().any(|c| c.is_empty() || c.contains(['|', '\n'])) {
            return bad("class names must be non-empty and free of '|' and newlines".into());
        }
        if self.encoder_widths.is_empty() || self.tuner_widths.is_empty() {
            return bad("encoder and tuner need at least one block".into());
        }
        if self.encoder_widths.contains(&0) || self.tuner_widths.contains(&0) || self.head_hidden == 0 || self.tuner_hidden == 0 {
            return bad("layer widths must be positive".into());
        }
        let min_input = 1 << self.encoder_widths.len();
        if self.stage_sizes.is_empty() || self.stage_sizes.iter().chain([&self.eval_px]).any(|s| *s < min_input) {
            return bad(format!(
                "input sizes {:?} (eval {}) must be at least {min_input} px for {} pooling blocks",
                self.stage_sizes,
                self.eval_px,
                self.encoder_widths.len()
            ));
        }
        if self.pseudo_px < n.max(j).max(1 << self.tuner_widths.len()) {
            return bad(format!(
                "pseudo-image of {} px cannot hold {j} bands of {n} cells",
                self.pseudo_px
            ));
        }
        if self.master_px < 2 {
            return bad("master render size must be at least 2 px".into());
        }
        Ok(())
    }

    /// Key/value pairs stored in a checkpoint header.
    pub fn to_header(&self) -> Vec<(String, String)> {
        let list = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        [
            ("model", "e2eet".to_string()),
            ("dataset", self.dataset.as_str().to_string()),
            ("classes", self.class_count().to_string()),
            ("class_names", self.class_names.join("|")),
            ("streams", self.stream_count().to_string()),
            ("vos", self.vos.iter().map(|v| v.as_str()).collect::<Vec<_>>().join(",")),
            ("encoder_widths", list(&self.encoder_widths)),
            ("tuner_widths", list(&self.tuner_widths)),
            ("head_hidden", self.head_hidden.to_string()),
            ("tuner_hidden", self.tuner_hidden.to_string()),
            ("stage_sizes", list(&self.stage_sizes)),
            ("pseudo_px", self.pseudo_px.to_string()),
            ("master_px", self.master_px.to_string()),
            ("eval_px", self.eval_px.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    pub fn from_header(header: &[(String, String)]) -> Result<Self> {
        let get = |k: &str| {
            header
                .iter()
                .find(|(key, _)| key == k)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| NetError::Config(format!("checkpoint header lacks `{k}`")))
        };
        let bad = |k: &str| NetError::Config(format!("checkpoint header `{k}` is malformed"));
        let num = |k: &str| get(k)?.parse::<usize>().map_err(|_| bad(k));
        let list = |k: &str| -> Result<Vec<usize>> {
            get(k)?.split(',').map(|s| s.parse().map_err(|_| bad(k))).collect()
        };
        if get("model")? != "e2eet" {
            return Err(bad("model"));
        }
        let cfg = ModelConfig {
            dataset: get("dataset")?.parse().map_err(|_| bad("dataset"))?,
            class_names: get("class_names")?.split('|').map(str::to_string).collect(),
            vos: VoName::parse_list(get("vos")?).map_err(|_| bad("vos"))?,
            encoder_widths: list("encoder_widths")?,
            tuner_widths: list("tuner_widths")?,
            head_hidden: num("head_hidden")?,
            tuner_hidden: num("tuner_hidden")?,
            stage_sizes: list("stage_sizes")?,
            pseudo_px: num("pseudo_px")?,
            master_px: num("master_px")?,
            eval_px: num("eval_px")?,
        };
        if cfg.class_count() != num("classes")? || cfg.stream_count() != num("streams")? {
            return Err(NetError::Config("checkpoint header counts disagree with its lists".into()));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
