//! Dataset parsing: on-disk skeleton trees to manifests and sequences.
//!
//! Each supported dataset has a fixed directory layout (see
//! `docs/datasets.md`). Skeleton files are plain text with one frame per
//! line and whitespace-separated `x y z` triples per joint; FPHA lines carry a
//! leading frame index. Parsing a tree yields a [`DatasetManifest`] whose
//! entries are sorted by locator; sequences are loaded lazily with
//! [`load_sequence`].

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::DatasetError;
use crate::schema::JointSchema;
use crate::sequence::{Frame, SkeletonSequence};

/// Seed for the 70:30 random split when no official split files exist.
pub const DEFAULT_SPLIT_SEED: u64 = 17;

/// Name of the FPHA action-recognition split file at the dataset root.
pub const FPHA_SPLIT_FILE: &str = "data_split_action_recognition.txt";
/// Directory holding FPHA skeleton annotations.
pub const FPHA_POSE_DIR: &str = "Hand_pose_annotation_v1";
/// Official SHREC'17-style split lists (`g f s e label14 label28 size`).
pub const OFFICIAL_TRAIN_LIST: &str = "train_gestures.txt";
pub const OFFICIAL_VAL_LIST: &str = "test_gestures.txt";

const INDEX_MAGIC: &str = "#gestigo-manifest";

#[allow(non_camel_case_types)]
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DatasetId {
    SHREC2017_14G,
    SHREC2017_28G,
    DHG1428_14G,
    DHG1428_28G,
    LMDHG,
    FPHA,
}

/// Datasets that share an on-disk tree (14G and 28G are two labelings).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DatasetFamily {
    Shrec2017,
    Dhg1428,
    Lmdhg,
    Fpha,
}

pub const DHG_GESTURES: [&str; 14] = [
    "Grab",
    "Tap",
    "Expand",
    "Pinch",
    "Rotation CW",
    "Rotation CCW",
    "Swipe Right",
    "Swipe Left",
    "Swipe Up",
    "Swipe Down",
    "Swipe X",
    "Swipe +",
    "Swipe V",
    "Shake",
];

/// 14G labels of the seven swipe gestures.
pub const DHG_SWIPE_CLASSES: [usize; 7] = [7, 8, 9, 10, 11, 12, 13];

pub const LMDHG_CLASSES: [&str; 13] = [
    "Catch",
    "Catch with two hands",
    "Draw C",
    "Draw line",
    "Point to",
    "Point to with two hands",
    "Rotate",
    "Scroll",
    "Shake",
    "Shake down",
    "Shake with two hands",
    "Slice",
    "Zoom",
];

pub const FPHA_CLASSES: [&str; 45] = [
    "charge_cell_phone",
    "clean_glasses",
    "close_juice_bottle",
    "close_liquid_soap",
    "close_milk",
    "close_peanut_butter",
    "drink_mug",
    "flip_pages",
    "flip_sponge",
    "give_card",
    "give_coin",
    "handshake",
    "high_five",
    "light_candle",
    "open_juice_bottle",
    "open_letter",
    "open_liquid_soap",
    "open_milk",
    "open_peanut_butter",
    "open_soda_can",
    "open_wallet",
    "pour_juice_bottle",
    "pour_liquid_soap",
    "pour_milk",
    "pour_wine",
    "prick",
    "put_salt",
    "put_sugar",
    "put_tea_bag",
    "read_letter",
    "receive_coin",
    "scoop_spoon",
    "scratch_sponge",
    "sprinkle",
    "squeeze_paper",
    "squeeze_sponge",
    "stir",
    "take_letter_from_enveloppe",
    "tear_paper",
    "toast_wine",
    "unfold_glasses",
    "use_calculator",
    "use_flash",
    "wash_sponge",
    "write",
];

impl DatasetId {
    pub const ALL: [DatasetId; 6] = [
        DatasetId::SHREC2017_14G,
        DatasetId::SHREC2017_28G,
        DatasetId::DHG1428_14G,
        DatasetId::DHG1428_28G,
        DatasetId::LMDHG,
        DatasetId::FPHA,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DatasetId::SHREC2017_14G => "SHREC2017_14G",
            DatasetId::SHREC2017_28G => "SHREC2017_28G",
            DatasetId::DHG1428_14G => "DHG1428_14G",
            DatasetId::DHG1428_28G => "DHG1428_28G",
            DatasetId::LMDHG => "LMDHG",
            DatasetId::FPHA => "FPHA",
        }
    }

    pub fn family(self) -> DatasetFamily {
        match self {
            DatasetId::SHREC2017_14G | DatasetId::SHREC2017_28G => DatasetFamily::Shrec2017,
            DatasetId::DHG1428_14G | DatasetId::DHG1428_28G => DatasetFamily::Dhg1428,
            DatasetId::LMDHG => DatasetFamily::Lmdhg,
            DatasetId::FPHA => DatasetFamily::Fpha,
        }
    }

    pub fn class_count(self) -> usize {
        match self {
            DatasetId::SHREC2017_14G | DatasetId::DHG1428_14G => 14,
            DatasetId::SHREC2017_28G | DatasetId::DHG1428_28G => 28,
            DatasetId::LMDHG => 13,
            DatasetId::FPHA => 45,
        }
    }

    fn fine_grained(self) -> bool {
        matches!(self, DatasetId::SHREC2017_28G | DatasetId::DHG1428_28G)
    }

    pub fn schema(self) -> JointSchema {
        match self.family() {
            DatasetFamily::Shrec2017 | DatasetFamily::Dhg1428 => JointSchema::dhg22(),
            DatasetFamily::Lmdhg => JointSchema::lmdhg46(),
            DatasetFamily::Fpha => JointSchema::fpha21(),
        }
    }

    /// Class names indexed by `label - 1`.
    pub fn class_names(self) -> Vec<String> {
        match self.family() {
            DatasetFamily::Shrec2017 | DatasetFamily::Dhg1428 => {
                if self.fine_grained() {
                    let one = DHG_GESTURES.iter().map(|g| format!("{g} (one finger)"));
                    let all = DHG_GESTURES.iter().map(|g| format!("{g} (whole hand)"));
                    one.chain(all).collect()
                } else {
                    DHG_GESTURES.iter().map(|s| s.to_string()).collect()
                }
            }
            DatasetFamily::Lmdhg => LMDHG_CLASSES.iter().map(|s| s.to_string()).collect(),
            DatasetFamily::Fpha => FPHA_CLASSES.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// (train, validation) sizes of the evaluation protocol.
    pub fn protocol_split(self) -> (usize, usize) {
        match self.family() {
            DatasetFamily::Shrec2017 | DatasetFamily::Dhg1428 => (1960, 840),
            DatasetFamily::Lmdhg => (414, 194),
            DatasetFamily::Fpha => (600, 575),
        }
    }

    /// FPHA lines start with a frame number before the coordinates.
    pub fn leading_frame_index(self) -> bool {
        self.family() == DatasetFamily::Fpha
    }
}

impl fmt::Display for DatasetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetId {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DatasetId::ALL
            .into_iter()
            .find(|d| d.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| DatasetError::Schema(format!("unknown dataset '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Val,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
        }
    }
}

impl FromStr for Split {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            other => Err(DatasetError::Schema(format!("unknown split tag '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    /// Path of the skeleton file relative to the dataset root, `/`-separated.
    pub locator: String,
    /// 1-based class label.
    pub label: usize,
    pub subject: String,
    pub split: Split,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    pub dataset_id: DatasetId,
    pub root: PathBuf,
    pub class_count: usize,
    pub class_names: Vec<String>,
    pub seed: u64,
    pub schema: Arc<JointSchema>,
    pub entries: Vec<ManifestEntry>,
}

/// Loader switches that change how coordinates are interpreted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Apply the FPHA world-to-camera extrinsics. Off by default: coordinates
    /// are used in world space as distributed.
    pub fpha_camera_frame: bool,
}

/// FPHA world-to-camera extrinsics, rows of a 3x4 affine map.
const FPHA_CAM_EXTR: [[f64; 4]; 3] = [
    [0.999988496304, -0.00468848412856, 0.000982563360594, 25.7],
    [0.00469115935266, 0.999985218048, -0.00273845880292, 1.22],
    [-0.000969709653873, 0.00274303671904, 0.99999576807, 3.902],
];

/// Parses the dataset tree under `root` with the default split seed.
pub fn parse_dataset(dataset_id: DatasetId, root: &Path) -> Result<DatasetManifest, DatasetError> {
    parse_dataset_with_seed(dataset_id, root, DEFAULT_SPLIT_SEED)
}

pub fn parse_dataset_with_seed(
    dataset_id: DatasetId,
    root: &Path,
    seed: u64,
) -> Result<DatasetManifest, DatasetError> {
    if !root.is_dir() {
        return Err(DatasetError::NotFound(format!(
            "dataset root {} does not exist",
            root.display()
        )));
    }
    let mut entries = match dataset_id.family() {
        DatasetFamily::Dhg1428 => walk_dhg_tree(dataset_id, root, "skeleton_world.txt", seed)?,
        DatasetFamily::Shrec2017 => {
            walk_dhg_tree(dataset_id, root, "skeletons_world.txt", seed)?
        }
        DatasetFamily::Lmdhg => walk_lmdhg(root)?,
        DatasetFamily::Fpha => read_fpha_split(root)?,
    };
    if entries.is_empty() {
        return Err(DatasetError::NotFound(format!(
            "no {} sequences under {}",
            dataset_id,
            root.display()
        )));
    }
    entries.sort_by(|a, b| a.locator.cmp(&b.locator));

    let manifest = DatasetManifest {
        dataset_id,
        root: root.to_path_buf(),
        class_count: dataset_id.class_count(),
        class_names: dataset_id.class_names(),
        seed,
        schema: Arc::new(dataset_id.schema()),
        entries,
    };
    manifest.validate()?;
    Ok(manifest)
}

/// Directory names like `gesture_12` → 12.
fn numbered(name: &str, prefix: &str) -> Option<usize> {
    name.strip_prefix(prefix)?.parse().ok()
}

fn sorted_subdirs(dir: &Path) -> Result<Vec<(String, PathBuf)>, DatasetError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| DatasetError::io(dir, e))? {
        let entry = entry.map_err(|e| DatasetError::io(dir, e))?;
        let path = entry.path();
        if path.is_dir() {
            out.push((entry.file_name().to_string_lossy().into_owned(), path));
        }
    }
    out.sort();
    Ok(out)
}

type DhgKey = (usize, usize, usize, usize);

/// `gesture_{g}/finger_{f}/subject_{s}/essai_{e}/<file>`.
fn walk_dhg_tree(
    dataset_id: DatasetId,
    root: &Path,
    file_name: &str,
    seed: u64,
) -> Result<Vec<ManifestEntry>, DatasetError> {
    let mut found: Vec<(DhgKey, String)> = Vec::new();
    for (gname, gdir) in sorted_subdirs(root)? {
        let Some(g) = numbered(&gname, "gesture_") else { continue };
        for (fname, fdir) in sorted_subdirs(&gdir)? {
            let Some(f) = numbered(&fname, "finger_") else { continue };
            for (sname, sdir) in sorted_subdirs(&fdir)? {
                let Some(s) = numbered(&sname, "subject_") else { continue };
                for (ename, edir) in sorted_subdirs(&sdir)? {
                    let Some(e) = numbered(&ename, "essai_") else { continue };
                    if edir.join(file_name).is_file() {
                        let locator = format!("{gname}/{fname}/{sname}/{ename}/{file_name}");
                        found.push(((g, f, s, e), locator));
                    }
                }
            }
        }
    }

    let n = dataset_id.class_count();
    let mut entries = Vec::with_capacity(found.len());
    for ((g, f, s, _), locator) in &found {
        if !(1..=14).contains(g) || !(1..=2).contains(f) {
            return Err(DatasetError::Schema(format!(
                "{locator}: gesture {g} / finger {f} outside the 14-gesture, 2-finger protocol"
            )));
        }
        let label = if dataset_id.fine_grained() { g + 14 * (f - 1) } else { *g };
        if label < 1 || label > n {
            return Err(DatasetError::Schema(format!("{locator}: label {label} outside [1, {n}]")));
        }
        entries.push(ManifestEntry {
            locator: locator.clone(),
            label,
            subject: format!("subject_{s}"),
            split: Split::Train,
        });
    }

    let train_list = root.join(OFFICIAL_TRAIN_LIST);
    let val_list = root.join(OFFICIAL_VAL_LIST);
    if train_list.is_file() && val_list.is_file() {
        let mut official: HashMap<DhgKey, Split> = HashMap::new();
        for (path, split) in [(train_list, Split::Train), (val_list, Split::Val)] {
            for key in read_official_list(&path)? {
                official.insert(key, split);
            }
        }
        for ((key, locator), entry) in found.iter().zip(entries.iter_mut()) {
            entry.split = *official.get(key).ok_or_else(|| {
                DatasetError::Schema(format!("{locator} is missing from the official split lists"))
            })?;
        }
    } else {
        entries.sort_by(|a, b| a.locator.cmp(&b.locator));
        assign_seeded_split(&mut entries, seed, 7, 10);
    }
    Ok(entries)
}

fn read_official_list(path: &Path) -> Result<Vec<DhgKey>, DatasetError> {
    let text = fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
    let file = path.display().to_string();
    let mut keys = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() < 4 {
            return Err(DatasetError::Parse {
                file,
                line: i + 1,
                msg: format!("expected at least 4 fields, got {}", tokens.len()),
            });
        }
        let mut nums = [0usize; 4];
        for (slot, tok) in nums.iter_mut().zip(&tokens) {
            *slot = tok.parse().map_err(|_| DatasetError::Parse {
                file: file.clone(),
                line: i + 1,
                msg: format!("'{tok}' is not an integer"),
            })?;
        }
        keys.push((nums[0], nums[1], nums[2], nums[3]));
    }
    Ok(keys)
}

/// Shuffles with a seeded generator and tags the first `num/den` as train.
fn assign_seeded_split(entries: &mut [ManifestEntry], seed: u64, num: usize, den: usize) {
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (entries.len() * num + den / 2) / den;
    for (rank, &i) in order.iter().enumerate() {
        entries[i].split = if rank < n_train { Split::Train } else { Split::Val };
    }
}

/// LMDHG data files 1..=35 form the training subset, 36..=50 validation.
const LMDHG_LAST_TRAIN_FILE: usize = 35;

/// `DataFile{k}/gesture_{i}_class_{label}.txt`.
fn walk_lmdhg(root: &Path) -> Result<Vec<ManifestEntry>, DatasetError> {
    let n = DatasetId::LMDHG.class_count();
    let mut entries = Vec::new();
    for (dname, ddir) in sorted_subdirs(root)? {
        let Some(k) = numbered(&dname, "DataFile") else { continue };
        let mut files: Vec<String> = fs::read_dir(&ddir)
            .map_err(|e| DatasetError::io(&ddir, e))?
            .filter_map(|e| e.ok())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|name| name.starts_with("gesture_") && name.ends_with(".txt"))
            .collect();
        files.sort();
        for name in files {
            let locator = format!("{dname}/{name}");
            let label = name
                .trim_end_matches(".txt")
                .rsplit_once("_class_")
                .and_then(|(_, l)| l.parse::<usize>().ok())
                .ok_or_else(|| DatasetError::Schema(format!("{locator}: no class in file name")))?;
            if label < 1 || label > n {
                return Err(DatasetError::Schema(format!("{locator}: label {label} outside [1, {n}]")));
            }
            entries.push(ManifestEntry {
                locator,
                label,
                subject: dname.clone(),
                split: if k <= LMDHG_LAST_TRAIN_FILE { Split::Train } else { Split::Val },
            });
        }
    }
    Ok(entries)
}

/// Reads `data_split_action_recognition.txt`:
///
/// ```text
/// Training 600
/// Subject_1/charge_cell_phone/1 0
/// ...
/// Test 575
/// ...
/// ```
fn read_fpha_split(root: &Path) -> Result<Vec<ManifestEntry>, DatasetError> {
    let path = root.join(FPHA_SPLIT_FILE);
    if !path.is_file() {
        return Err(DatasetError::NotFound(format!("{} is missing", path.display())));
    }
    let text = fs::read_to_string(&path).map_err(|e| DatasetError::io(&path, e))?;
    let file = path.display().to_string();
    let n = DatasetId::FPHA.class_count();
    let parse_err = |line: usize, msg: String| DatasetError::Parse {
        file: file.clone(),
        line,
        msg,
    };

    let mut entries = Vec::new();
    let mut section: Option<(Split, usize, usize)> = None;
    let close = |section: Option<(Split, usize, usize)>, line: usize| match section {
        Some((split, want, got)) if want != got => Err(parse_err(
            line,
            format!("{} section declares {want} entries, found {got}", split.as_str()),
        )),
        _ => Ok(()),
    };
    for (i, line) in text.lines().enumerate() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() != 2 {
            return Err(parse_err(i + 1, format!("expected 2 fields, got {}", tokens.len())));
        }
        let header = match tokens[0] {
            "Training" => Some(Split::Train),
            "Test" => Some(Split::Val),
            _ => None,
        };
        if let Some(split) = header {
            close(section, i + 1)?;
            let count = tokens[1]
                .parse()
                .map_err(|_| parse_err(i + 1, format!("'{}' is not a count", tokens[1])))?;
            section = Some((split, count, 0));
            continue;
        }
        let Some((split, _, got)) = section.as_mut() else {
            return Err(parse_err(i + 1, "entry before a Training/Test header".into()));
        };
        let raw: usize = tokens[1]
            .parse()
            .map_err(|_| parse_err(i + 1, format!("'{}' is not a label", tokens[1])))?;
        let label = raw + 1;
        if label > n {
            return Err(DatasetError::Schema(format!(
                "{}: label {label} outside [1, {n}]",
                tokens[0]
            )));
        }
        let rel = tokens[0].trim_matches('/');
        let locator = format!("{FPHA_POSE_DIR}/{rel}/skeleton.txt");
        if !root.join(&locator).is_file() {
            return Err(DatasetError::NotFound(format!("{locator} listed in split file")));
        }
        entries.push(ManifestEntry {
            locator,
            label,
            subject: rel.split('/').next().unwrap_or_default().to_string(),
            split: *split,
        });
        *got += 1;
    }
    close(section, text.lines().count())?;
    Ok(entries)
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.class_count == 0 {
            return Err(DatasetError::Schema("class count must be positive".into()));
        }
        if self.class_names.len() != self.class_count {
            return Err(DatasetError::Schema(format!(
                "{} class names for {} classes",
                self.class_names.len(),
                self.class_count
            )));
        }
        self.schema.validate()?;
        for e in &self.entries {
            if e.label < 1 || e.label > self.class_count {
                return Err(DatasetError::Schema(format!(
                    "{}: label {} outside [1, {}]",
                    e.locator, e.label, self.class_count
                )));
            }
        }
        for split in [Split::Train, Split::Val] {
            if !self.entries.iter().any(|e| e.split == split) {
                return Err(DatasetError::Schema(format!("{} split is empty", split.as_str())));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn class_name(&self, label: usize) -> &str {
        self.class_names
            .get(label.wrapping_sub(1))
            .map(String::as_str)
            .unwrap_or("?")
    }

    /// Keeps only the given labels, relabelled 1..=K in the order given.
    pub fn filter_classes(&self, labels: &[usize]) -> Result<DatasetManifest, DatasetError> {
        let mut remap = BTreeMap::new();
        for (i, &l) in labels.iter().enumerate() {
            if l < 1 || l > self.class_count {
                return Err(DatasetError::Schema(format!("label {l} outside [1, {}]", self.class_count)));
            }
            if remap.insert(l, i + 1).is_some() {
                return Err(DatasetError::Schema(format!("label {l} listed twice")));
            }
        }
        let entries = self
            .entries
            .iter()
            .filter_map(|e| {
                remap.get(&e.label).map(|&label| ManifestEntry {
                    label,
                    ..e.clone()
                })
            })
            .collect();
        let out = DatasetManifest {
            class_count: labels.len(),
            class_names: labels.iter().map(|&l| self.class_name(l).to_string()).collect(),
            entries,
            ..self.clone()
        };
        out.validate()?;
        Ok(out)
    }

    /// Serializes to the tab-separated index format.
    pub fn to_index(&self) -> String {
        let mut out = format!(
            "{INDEX_MAGIC}\tdataset={}\tclasses={}\tseed={}\n",
            self.dataset_id, self.class_count, self.seed
        );
        for (i, name) in self.class_names.iter().enumerate() {
            out.push_str(&format!("#class\t{}\t{}\n", i + 1, name));
        }
        for e in &self.entries {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                e.locator,
                e.label,
                e.subject,
                e.split.as_str()
            ));
        }
        out
    }

    /// Parses an index produced by [`DatasetManifest::to_index`].
    pub fn from_index(text: &str, root: &Path) -> Result<DatasetManifest, DatasetError> {
        let file = "<manifest index>".to_string();
        let perr = |line: usize, msg: String| DatasetError::Parse {
            file: file.clone(),
            line,
            msg,
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| perr(1, "empty index".into()))?;
        let mut fields = header.split('\t');
        if fields.next() != Some(INDEX_MAGIC) {
            return Err(perr(1, "missing manifest header".into()));
        }
        let mut kv = HashMap::new();
        for f in fields {
            let (k, v) = f
                .split_once('=')
                .ok_or_else(|| perr(1, format!("bad header field '{f}'")))?;
            kv.insert(k, v);
        }
        let get = |k: &str| kv.get(k).copied().ok_or_else(|| perr(1, format!("header lacks '{k}'")));
        let dataset_id: DatasetId = get("dataset")?.parse()?;
        let class_count: usize = get("classes")?
            .parse()
            .map_err(|_| perr(1, "bad class count".into()))?;
        let seed: u64 = get("seed")?.parse().map_err(|_| perr(1, "bad seed".into()))?;

        let mut class_names = Vec::new();
        let mut entries = Vec::new();
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols[0] == "#class" {
                if cols.len() != 3 {
                    return Err(perr(i + 1, "class line needs 3 fields".into()));
                }
                class_names.push(cols[2].to_string());
                continue;
            }
            if cols.len() != 4 {
                return Err(perr(i + 1, format!("expected 4 fields, got {}", cols.len())));
            }
            entries.push(ManifestEntry {
                locator: cols[0].to_string(),
                label: cols[1]
                    .parse()
                    .map_err(|_| perr(i + 1, format!("bad label '{}'", cols[1])))?,
                subject: cols[2].to_string(),
                split: cols[3].parse()?,
            });
        }
        let manifest = DatasetManifest {
            dataset_id,
            root: root.to_path_buf(),
            class_count,
            class_names,
            seed,
            schema: Arc::new(dataset_id.schema()),
            entries,
        };
        manifest.validate()?;
        Ok(manifest)
    }
}

/// Train and validation entries, in manifest order.
pub fn split(manifest: &DatasetManifest) -> (Vec<ManifestEntry>, Vec<ManifestEntry>) {
    manifest
        .entries
        .iter()
        .cloned()
        .partition(|e| e.split == Split::Train)
}

pub fn load_sequence(manifest: &DatasetManifest, index: usize) -> Result<SkeletonSequence, DatasetError> {
    load_sequence_with(manifest, index, LoadOptions::default())
}

pub fn load_sequence_with(
    manifest: &DatasetManifest,
    index: usize,
    options: LoadOptions,
) -> Result<SkeletonSequence, DatasetError> {
    let entry = manifest.entries.get(index).ok_or_else(|| {
        DatasetError::NotFound(format!("entry {index} of {}", manifest.entries.len()))
    })?;
    let path = manifest.root.join(&entry.locator);
    let text = fs::read_to_string(&path).map_err(|e| DatasetError::io(&path, e))?;
    let mut frames = parse_frames(
        &text,
        manifest.schema.joint_count,
        manifest.dataset_id.leading_frame_index(),
        &entry.locator,
    )?;
    if options.fpha_camera_frame && manifest.dataset_id == DatasetId::FPHA {
        for p in frames.iter_mut().flatten() {
            *p = apply_affine(&FPHA_CAM_EXTR, *p);
        }
    }
    SkeletonSequence::new(
        frames,
        manifest.schema.clone(),
        Some(entry.label),
        Some(entry.subject.clone()),
        entry.locator.clone(),
    )
}

fn apply_affine(m: &[[f64; 4]; 3], p: [f64; 3]) -> [f64; 3] {
    let row = |r: &[f64; 4]| r[0] * p[0] + r[1] * p[1] + r[2] * p[2] + r[3];
    [row(&m[0]), row(&m[1]), row(&m[2])]
}

/// Parses skeleton text: one frame per non-blank line, `3 * joint_count`
/// numbers per line (plus a leading frame index when `leading_index`).
///
/// Every frame line must be newline-terminated; an unterminated last line is
/// reported as a truncated file.
pub fn parse_frames(
    text: &str,
    joint_count: usize,
    leading_index: bool,
    file: &str,
) -> Result<Vec<Frame>, DatasetError> {
    let expected = 3 * joint_count + usize::from(leading_index);
    let line_count = text.lines().count();
    let mut frames = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let mut tokens = line.split_whitespace().peekable();
        if tokens.peek().is_none() {
            continue;
        }
        if i + 1 == line_count && !text.ends_with('\n') {
            return Err(DatasetError::Parse {
                file: file.to_string(),
                line: i + 1,
                msg: "unterminated last line (truncated file?)".into(),
            });
        }
        let mut values = Vec::with_capacity(expected);
        for tok in tokens {
            let v: f64 = tok.parse().map_err(|_| DatasetError::Parse {
                file: file.to_string(),
                line: i + 1,
                msg: format!("'{tok}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(DatasetError::Parse {
                    file: file.to_string(),
                    line: i + 1,
                    msg: format!("'{tok}' is not finite"),
                });
            }
            values.push(v);
        }
        if values.len() != expected {
            return Err(DatasetError::Parse {
                file: file.to_string(),
                line: i + 1,
                msg: format!("expected {expected} values, got {}", values.len()),
            });
        }
        let coords = &values[usize::from(leading_index)..];
        frames.push(coords.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect());
    }
    Ok(frames)
}

/// Formats frames in the skeleton text format read by [`parse_frames`].
pub fn format_frames(frames: &[Frame], leading_index: bool, decimals: usize) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    for (t, frame) in frames.iter().enumerate() {
        if leading_index {
            let _ = write!(out, "{t}");
        }
        for (j, p) in frame.iter().enumerate() {
            for (k, v) in p.iter().enumerate() {
                if leading_index || j > 0 || k > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{v:.decimals$}");
            }
        }
        out.push('\n');
    }
    out
}

/// Reads a standalone recorded sequence (no manifest), e.g. for replay.
pub fn read_sequence_file(
    path: &Path,
    schema: Arc<JointSchema>,
    leading_index: bool,
) -> Result<SkeletonSequence, DatasetError> {
    let text = fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
    let name = path.display().to_string();
    let frames = parse_frames(&text, schema.joint_count, leading_index, &name)?;
    SkeletonSequence::new(frames, schema, None, None, name)
}
