use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use gestigo_core::dataset::{format_frames, load_sequence_with, LoadOptions};
use gestigo_core::synth::{generate_dataset, SynthOptions};
use gestigo_core::*;
use proptest::prelude::*;
use tempfile::TempDir;

/// One synthetic tree per family, generated once for the whole test binary.
fn trees() -> &'static (TempDir, [std::path::PathBuf; 4]) {
    static TREES: OnceLock<(TempDir, [std::path::PathBuf; 4])> = OnceLock::new();
    TREES.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let roots = ["dhg", "shrec", "lmdhg", "fpha"].map(|n| dir.path().join(n));
        let ids = [DatasetId::DHG1428_14G, DatasetId::SHREC2017_14G, DatasetId::LMDHG, DatasetId::FPHA];
        for (id, root) in ids.iter().zip(&roots) {
            generate_dataset(*id, root, &SynthOptions::default()).unwrap();
        }
        (dir, roots)
    })
}

fn root(id: DatasetId) -> &'static Path {
    let roots = &trees().1;
    match id {
        DatasetId::DHG1428_14G | DatasetId::DHG1428_28G => &roots[0],
        DatasetId::SHREC2017_14G | DatasetId::SHREC2017_28G => &roots[1],
        DatasetId::LMDHG => &roots[2],
        DatasetId::FPHA => &roots[3],
    }
}

fn sizes(m: &DatasetManifest) -> (usize, usize, usize) {
    let (train, val) = split(m);
    (m.len(), train.len(), val.len())
}

#[test]
fn protocol_counts() {
    let want = [
        (DatasetId::DHG1428_14G, (2800, 1960, 840), 14, 22),
        (DatasetId::DHG1428_28G, (2800, 1960, 840), 28, 22),
        (DatasetId::SHREC2017_14G, (2800, 1960, 840), 14, 22),
        (DatasetId::SHREC2017_28G, (2800, 1960, 840), 28, 22),
        (DatasetId::LMDHG, (608, 414, 194), 13, 46),
        (DatasetId::FPHA, (1175, 600, 575), 45, 21),
    ];
    for (id, counts, n, joints) in want {
        let m = parse_dataset(id, root(id)).unwrap();
        assert_eq!(sizes(&m), counts, "{id}");
        assert_eq!(m.class_count, n);
        assert_eq!(m.schema.joint_count, joints);
        assert!(m.entries.iter().all(|e| (1..=n).contains(&e.label)));
    }
}

#[test]
fn labels_cover_fine_grained_classes() {
    let m = parse_dataset(DatasetId::DHG1428_28G, root(DatasetId::DHG1428_28G)).unwrap();
    for label in 1..=28 {
        assert_eq!(m.entries.iter().filter(|e| e.label == label).count(), 100);
    }
    let one = m.entries.iter().find(|e| e.locator.starts_with("gesture_3/finger_2/")).unwrap();
    assert_eq!(one.label, 17);
}

#[test]
fn parsing_is_deterministic_and_sorted() {
    let a = parse_dataset(DatasetId::SHREC2017_28G, root(DatasetId::SHREC2017_28G)).unwrap();
    let b = parse_dataset(DatasetId::SHREC2017_28G, root(DatasetId::SHREC2017_28G)).unwrap();
    assert_eq!(a, b);
    assert!(a.entries.windows(2).all(|w| w[0].locator < w[1].locator));
    assert_eq!(a.seed, 17);
}

#[test]
fn manifest_index_round_trip() {
    for id in DatasetId::ALL {
        let m = parse_dataset(id, root(id)).unwrap();
        let back = DatasetManifest::from_index(&m.to_index(), root(id)).unwrap();
        assert_eq!(back, m);
    }
}

#[test]
fn loaded_sequences_have_schema_joint_counts() {
    for (id, joints) in [(DatasetId::DHG1428_14G, 22), (DatasetId::FPHA, 21), (DatasetId::LMDHG, 46)] {
        let m = parse_dataset(id, root(id)).unwrap();
        for i in [0, m.len() / 2, m.len() - 1] {
            let seq = load_sequence(&m, i).unwrap();
            assert!(seq.frames().iter().all(|f| f.len() == joints));
            assert_eq!(seq.label(), Some(m.entries[i].label));
        }
    }
}

#[test]
fn coordinates_are_exactly_as_written() {
    let m = parse_dataset(DatasetId::DHG1428_14G, root(DatasetId::DHG1428_14G)).unwrap();
    let seq = load_sequence(&m, 5).unwrap();
    let text = fs::read_to_string(m.root.join(&m.entries[5].locator)).unwrap();
    let first: Vec<f64> = text.lines().next().unwrap().split_whitespace().map(|t| t.parse().unwrap()).collect();
    assert_eq!(seq.frames()[0][0], [first[0], first[1], first[2]]);
    assert_eq!(seq.frames()[0][21], [first[63], first[64], first[65]]);
}

#[test]
fn fpha_camera_toggle_changes_coordinates() {
    let m = parse_dataset(DatasetId::FPHA, root(DatasetId::FPHA)).unwrap();
    let world = load_sequence(&m, 0).unwrap();
    let cam = load_sequence_with(&m, 0, LoadOptions { fpha_camera_frame: true }).unwrap();
    assert_ne!(world.frames()[0][0], cam.frames()[0][0]);
    assert_eq!(world.len(), cam.len());
}

#[test]
fn empty_or_missing_roots_are_not_found() {
    let dir = tempfile::tempdir().unwrap();
    for id in DatasetId::ALL {
        assert!(matches!(parse_dataset(id, dir.path()), Err(DatasetError::NotFound(_))), "{id}");
        assert!(matches!(
            parse_dataset(id, &dir.path().join("nope")),
            Err(DatasetError::NotFound(_))
        ));
    }
}

fn write(path: &Path, text: &str) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(path, text).unwrap();
}

/// Four trials with the same content, enough for both splits to be non-empty.
fn write_trials(root: &Path, text: &str) {
    for e in 1..=4 {
        write(&root.join(format!("gesture_2/finger_1/subject_1/essai_{e}/skeleton_world.txt")), text);
    }
}

#[test]
fn one_frame_file_fails_on_load() {
    let dir = tempfile::tempdir().unwrap();
    let frame = vec![vec![[0.1, 0.2, 0.3]; 22]];
    write_trials(dir.path(), &format_frames(&frame, false, 4));
    let m = parse_dataset(DatasetId::DHG1428_14G, dir.path()).unwrap();
    assert!(matches!(load_sequence(&m, 0), Err(DatasetError::Sequence { .. })));
}

#[test]
fn malformed_line_reports_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let frames = vec![vec![[0.1, 0.2, 0.3]; 22]; 3];
    let good = format_frames(&frames, false, 4);
    let mut lines: Vec<&str> = good.lines().collect();
    let bad = lines[2].replacen("0.2000", "x.y", 1);
    lines[2] = &bad;
    let text = lines.join("\n") + "\n";
    write_trials(dir.path(), &text);
    let m = parse_dataset(DatasetId::DHG1428_14G, dir.path()).unwrap();
    match load_sequence(&m, 0).unwrap_err() {
        DatasetError::Parse { file, line, .. } => {
            assert!(file.ends_with("skeleton_world.txt"));
            assert_eq!(line, 3);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn out_of_range_label_is_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("DataFile1/gesture_01_class_14.txt"), "0 0 0\n");
    assert!(matches!(parse_dataset(DatasetId::LMDHG, dir.path()), Err(DatasetError::Schema(_))));
}

#[test]
fn official_split_lists_override_seeded_split() {
    let dir = tempfile::tempdir().unwrap();
    let frames = vec![vec![[0.1, 0.2, 0.3]; 22]; 3];
    for e in 1..=4 {
        write(
            &dir.path().join(format!("gesture_1/finger_1/subject_1/essai_{e}/skeletons_world.txt")),
            &format_frames(&frames, false, 4),
        );
    }
    write(&dir.path().join("train_gestures.txt"), "1 1 1 1\n1 1 1 3\n");
    write(&dir.path().join("test_gestures.txt"), "1 1 1 2\n1 1 1 4\n");
    let m = parse_dataset(DatasetId::SHREC2017_14G, dir.path()).unwrap();
    let tags: Vec<Split> = m.entries.iter().map(|e| e.split).collect();
    assert_eq!(tags, vec![Split::Train, Split::Val, Split::Train, Split::Val]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Cutting or corrupting a real file gives a structured error or, for a
    /// cut on a line boundary, exactly the complete frames before the cut.
    #[test]
    fn corrupted_files_never_panic(cut in 0usize..4000, flip in 0usize..4000, byte in any::<u8>()) {
        let m = parse_dataset(DatasetId::DHG1428_14G, root(DatasetId::DHG1428_14G)).unwrap();
        let full = fs::read(m.root.join(&m.entries[1].locator)).unwrap();
        let intact = load_sequence(&m, 1).unwrap();

        let mut bytes = full[..cut.min(full.len())].to_vec();
        let text = String::from_utf8_lossy(&bytes).into_owned();
        let parsed = gestigo_core::dataset::parse_frames(&text, 22, false, "cut");
        if let Ok(frames) = parsed {
            prop_assert!(text.is_empty() || text.ends_with('\n'));
            prop_assert_eq!(&frames[..], &intact.frames()[..frames.len()]);
        }

        bytes = full.clone();
        let i = flip % bytes.len();
        bytes[i] = byte;
        let text = String::from_utf8_lossy(&bytes).into_owned();
        let _ = gestigo_core::dataset::parse_frames(&text, 22, false, "flip");
    }
}
