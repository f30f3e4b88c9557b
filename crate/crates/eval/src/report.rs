use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use gestigo_core::{DatasetId, RasterImage, VoName};
use gestigo_net::{predict_batch, ImageSource, Model};

use crate::error::{EvalError, Result};
use crate::heatmap::render_heatmap;

/// Accuracy and confusion matrix of one model on one validation set.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub dataset: DatasetId,
    pub vos: Vec<VoName>,
    pub class_names: Vec<String>,
    pub seed: u64,
    pub accuracy: f64,
    /// `confusion[truth][prediction]` counts.
    pub confusion: Vec<Vec<u64>>,
    /// Recall per class; 0 for a class without validation samples.
    pub per_class_accuracy: Vec<f64>,
}

/// Two classes mistaken for each other `count` times in total, `a < b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConfusedPair {
    pub a: usize,
    pub b: usize,
    pub count: u64,
}

fn names(vos: &[VoName]) -> String {
    vos.iter().map(|v| v.as_str()).collect::<Vec<_>>().join(",")
}

impl EvalReport {
    /// Builds the report from a confusion matrix; accuracy is its trace
    /// over its total.
    pub fn from_confusion(
        dataset: DatasetId,
        vos: Vec<VoName>,
        class_names: Vec<String>,
        seed: u64,
        confusion: Vec<Vec<u64>>,
    ) -> Result<Self> {
        let n = class_names.len();
        if n == 0 || confusion.len() != n || confusion.iter().any(|r| r.len() != n) {
            return Err(EvalError::Argument(format!("confusion matrix must be {n}x{n}")));
        }
        if class_names.iter().any(|c| c.is_empty() || c.contains(['\t', '\n'])) {
            return Err(EvalError::Argument("class names must be non-empty, without tabs or newlines".into()));
        }
        let total: u64 = confusion.iter().flatten().sum();
        if total == 0 {
            return Err(EvalError::Argument("empty validation set".into()));
        }
        let trace: u64 = (0..n).map(|i| confusion[i][i]).sum();
        let per_class_accuracy = confusion
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let count: u64 = row.iter().sum();
                if count == 0 {
                    0.0
                } else {
                    row[i] as f64 / count as f64
                }
            })
            .collect();
        Ok(EvalReport {
            dataset,
            vos,
            class_names,
            seed,
            accuracy: trace as f64 / total as f64,
            confusion,
            per_class_accuracy,
        })
    }

    /// Builds the report from parallel truth/prediction label lists.
    pub fn from_decisions(
        dataset: DatasetId,
        vos: Vec<VoName>,
        class_names: Vec<String>,
        seed: u64,
        truth: &[usize],
        predicted: &[usize],
    ) -> Result<Self> {
        let n = class_names.len();
        if truth.len() != predicted.len() {
            return Err(EvalError::Argument(format!(
                "{} labels for {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let mut confusion = vec![vec![0u64; n]; n];
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= n || p >= n {
                return Err(EvalError::Argument(format!("label pair ({t}, {p}) outside {n} classes")));
            }
            confusion[t][p] += 1;
        }
        Self::from_confusion(dataset, vos, class_names, seed, confusion)
    }

    pub fn total(&self) -> u64 {
        self.confusion.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.confusion.len()).map(|i| self.confusion[i][i]).sum()
    }

    /// Summary lines followed by tab-separated per-class and confusion
    /// sections. Floats are written in their shortest exact form.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# gestigo evaluation report").unwrap();
        writeln!(s, "seed\t{}", self.seed).unwrap();
        writeln!(s, "dataset\t{}", self.dataset).unwrap();
        writeln!(s, "vos\t{}", names(&self.vos)).unwrap();
        writeln!(s, "samples\t{}", self.total()).unwrap();
        writeln!(s, "correct\t{}", self.correct()).unwrap();
        writeln!(s, "accuracy\t{}", self.accuracy).unwrap();
        writeln!(s, "\n## per-class accuracy").unwrap();
        writeln!(s, "class\tname\tcount\taccuracy").unwrap();
        for (i, name) in self.class_names.iter().enumerate() {
            let count: u64 = self.confusion[i].iter().sum();
            writeln!(s, "{}\t{name}\t{count}\t{}", i + 1, self.per_class_accuracy[i]).unwrap();
        }
        writeln!(s, "\n## confusion (rows: truth, columns: prediction)").unwrap();
        let header: Vec<String> = (1..=self.class_names.len()).map(|c| c.to_string()).collect();
        writeln!(s, "truth\\pred\t{}", header.join("\t")).unwrap();
        for (i, row) in self.confusion.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            writeln!(s, "{}\t{}", i + 1, cells.join("\t")).unwrap();
        }
        s
    }

    /// Reads back [`EvalReport::to_text`] output.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |detail: String| EvalError::Parse {
            what: "evaluation report",
            detail,
        };
        let mut fields = std::collections::HashMap::new();
        let mut class_names = Vec::new();
        let mut confusion = Vec::new();
        let mut section = "";
        for line in text.lines() {
            if line.is_empty() || line.starts_with("# ") {
                continue;
            }
            if let Some(title) = line.strip_prefix("## ") {
                section = if title.starts_with("per-class") { "classes" } else { "confusion" };
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            match section {
                "" if cols.len() == 2 => {
                    fields.insert(cols[0], cols[1]);
                }
                "classes" if cols[0] != "class" && cols.len() == 4 => class_names.push(cols[1].to_string()),
                "confusion" if !cols[0].starts_with("truth") => {
                    let row = cols[1..]
                        .iter()
                        .map(|c| c.parse::<u64>().map_err(|_| bad(format!("count `{c}`"))))
                        .collect::<Result<Vec<_>>>()?;
                    confusion.push(row);
                }
                "classes" | "confusion" => {}
                _ => return Err(bad(format!("unexpected line `{line}`"))),
            }
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(|| bad(format!("missing `{k}`")));
        let report = Self::from_confusion(
            get("dataset")?.parse().map_err(|_| bad("dataset".into()))?,
            VoName::parse_list(get("vos")?).map_err(|_| bad("vos".into()))?,
            class_names,
            get("seed")?.parse().map_err(|_| bad("seed".into()))?,
            confusion,
        )?;
        let stated: f64 = get("accuracy")?.parse().map_err(|_| bad("accuracy".into()))?;
        if stated != report.accuracy {
            return Err(bad(format!("accuracy {stated} disagrees with the confusion matrix")));
        }
        Ok(report)
    }

    /// Writes `report.txt` and `confusion.png` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let io = |path: &Path, source| EvalError::Io {
            path: path.to_path_buf(),
            source,
        };
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let text = dir.join("report.txt");
        fs::write(&text, self.to_text()).map_err(|e| io(&text, e))?;
        self.heatmap().write_png(&dir.join("confusion.png"))?;
        Ok(())
    }

    pub fn heatmap(&self) -> RasterImage {
        render_heatmap(&self.confusion)
    }
}

/// Classifies every sample of `val` with the tuner decision.
///
/// `vos` must be the order the model was trained with.
pub fn evaluate<S: ImageSource + ?Sized>(
    model: &Model,
    val: &S,
    vos: &[VoName],
    seed: u64,
    batch: usize,
) -> Result<EvalReport> {
    let cfg = model.config();
    if vos != cfg.vos.as_slice() {
        return Err(EvalError::Config(format!(
            "views {} do not match the model's {}",
            names(vos),
            names(&cfg.vos)
        )));
    }
    if val.is_empty() {
        return Err(EvalError::Argument("empty validation set".into()));
    }
    let mut truth = Vec::with_capacity(val.len());
    let mut predicted = Vec::with_capacity(val.len());
    let indices: Vec<usize> = (0..val.len()).collect();
    for chunk in indices.chunks(batch.max(1)) {
        let images = chunk.iter().map(|&i| val.images(i)).collect::<Result<Vec<_>, _>>()?;
        let refs: Vec<&[RasterImage]> = images.iter().map(Vec::as_slice).collect();
        for (p, &i) in predict_batch(model, &refs, cfg.eval_px, None)?.iter().zip(chunk) {
            truth.push(val.label(i));
            predicted.push(p.class());
        }
    }
    EvalReport::from_decisions(cfg.dataset, vos.to_vec(), cfg.class_names.clone(), seed, &truth, &predicted)
}

/// The `k` most confused class pairs, counting both directions.
pub fn confusion_pairs(report: &EvalReport, k: usize) -> Vec<ConfusedPair> {
    let m = &report.confusion;
    let mut pairs: Vec<ConfusedPair> = (0..m.len())
        .flat_map(|a| (a + 1..m.len()).map(move |b| (a, b)))
        .map(|(a, b)| ConfusedPair {
            a,
            b,
            count: m[a][b] + m[b][a],
        })
        .filter(|p| p.count > 0)
        .collect();
    pairs.sort_by(|x, y| y.count.cmp(&x.count).then((x.a, x.b).cmp(&(y.a, y.b))));
    pairs.truncate(k);
    pairs
}
