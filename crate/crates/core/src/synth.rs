//! Procedural skeleton gestures written in the on-disk dataset layouts.
//!
//! A parametric hand (wrist, palm, four joints per finger) is posed per frame
//! from a gesture-specific motion script with per-subject variation in hand
//! size, amplitude, speed profile, orientation and sensor noise. The trees it
//! writes parse with [`crate::dataset::parse_dataset`] and match the
//! per-dataset protocol counts.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::dataset::{
    format_frames, DatasetFamily, DatasetId, FPHA_CLASSES, FPHA_POSE_DIR, FPHA_SPLIT_FILE,
};
use crate::error::DatasetError;
use crate::sequence::Frame;

#[derive(Clone, Debug)]
pub struct SynthOptions {
    pub seed: u64,
    /// Restrict DHG/SHREC trees to these 1-based gesture numbers.
    pub dhg_gestures: Option<Vec<usize>>,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            seed: 17,
            dhg_gestures: None,
        }
    }
}

type V3 = [f64; 3];

fn add(a: V3, b: V3) -> V3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn scale(a: V3, k: f64) -> V3 {
    [a[0] * k, a[1] * k, a[2] * k]
}

fn rot_xyz(yaw: f64, pitch: f64, roll: f64, v: V3) -> V3 {
    // roll about z, then pitch about x, then yaw about y
    let (s, c) = roll.sin_cos();
    let v = [c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]];
    let (s, c) = pitch.sin_cos();
    let v = [v[0], c * v[1] - s * v[2], s * v[1] + c * v[2]];
    let (s, c) = yaw.sin_cos();
    [c * v[0] + s * v[2], v[1], -s * v[0] + c * v[2]]
}

/// Finger order thumb..pinky: MCP position, in-plane direction, segment lengths.
const FINGERS: [(V3, [f64; 2], [f64; 3]); 5] = [
    ([-0.030, 0.020, 0.0], [-0.70, 0.71], [0.035, 0.030, 0.025]),
    ([-0.025, 0.090, 0.0], [-0.12, 0.99], [0.040, 0.025, 0.020]),
    ([-0.006, 0.095, 0.0], [0.00, 1.00], [0.045, 0.028, 0.022]),
    ([0.012, 0.090, 0.0], [0.10, 0.99], [0.042, 0.026, 0.020]),
    ([0.028, 0.080, 0.0], [0.22, 0.97], [0.032, 0.020, 0.018]),
];

/// Cumulative flexion (radians at curl 1) of the three finger segments.
const FLEX: [f64; 3] = [1.0, 2.4, 3.4];

/// Rigid placement and articulation of one hand at one instant.
#[derive(Clone, Copy, Debug)]
struct HandPose {
    position: V3,
    yaw: f64,
    pitch: f64,
    roll: f64,
    curl: [f64; 5],
    size: f64,
    /// -1 mirrors the hand for a left hand.
    side: f64,
}

impl HandPose {
    /// 22 joints: wrist, palm, then MCP and three distal joints per finger.
    fn joints(&self) -> [V3; 22] {
        let mut local = [[0.0; 3]; 22];
        local[1] = [0.0, 0.045, 0.0];
        for (f, (base, dir, lens)) in FINGERS.iter().enumerate() {
            let mut p = *base;
            local[2 + 4 * f] = p;
            for (k, len) in lens.iter().enumerate() {
                let theta = self.curl[f] * FLEX[k];
                let d = [dir[0] * theta.cos(), dir[1] * theta.cos(), -theta.sin()];
                p = add(p, scale(d, *len));
                local[3 + 4 * f + k] = p;
            }
        }
        local.map(|q| {
            let q = [q[0] * self.side, q[1], q[2]];
            add(self.position, rot_xyz(self.yaw, self.pitch, self.roll, scale(q, self.size)))
        })
    }

    fn elbow(&self) -> V3 {
        let q = [0.0, -0.26, 0.06];
        add(self.position, rot_xyz(self.yaw, self.pitch, self.roll, scale(q, self.size)))
    }
}

/// Per-sequence variation shared by all gesture scripts.
struct Performer {
    size: f64,
    amplitude: f64,
    base: V3,
    /// In-plane rotation of the motion path.
    path_angle: f64,
    yaw: f64,
    pitch: f64,
    ease: f64,
    frames: usize,
    lead_in: usize,
    lead_out: usize,
    noise: f64,
}

impl Performer {
    fn sample(rng: &mut ChaCha8Rng, frames: (usize, usize), units: f64) -> Self {
        Performer {
            size: rng.gen_range(0.85..1.15),
            amplitude: rng.gen_range(0.15..0.30),
            base: [
                rng.gen_range(-0.05..0.05),
                rng.gen_range(0.10..0.20),
                rng.gen_range(0.35..0.45),
            ],
            path_angle: rng.gen_range(-0.17..0.17),
            yaw: rng.gen_range(-0.17..0.17),
            pitch: rng.gen_range(-0.17..0.17),
            ease: rng.gen_range(1.5..3.0),
            frames: rng.gen_range(frames.0..=frames.1),
            lead_in: rng.gen_range(0..4),
            lead_out: rng.gen_range(0..4),
            noise: 0.002 * units,
        }
    }

    /// Motion progress for frame `t`, holding still during lead-in/out.
    fn progress(&self, t: usize) -> f64 {
        let active = self.frames - self.lead_in - self.lead_out;
        let u = (t.saturating_sub(self.lead_in) as f64 / (active - 1).max(1) as f64).clamp(0.0, 1.0);
        // symmetric ease-in/out with a subject-specific exponent
        let a = u.powf(self.ease);
        a / (a + (1.0 - u).powf(self.ease))
    }

    fn rest(&self, curl: f64) -> HandPose {
        HandPose {
            position: self.base,
            yaw: self.yaw,
            pitch: self.pitch,
            roll: 0.0,
            curl: [curl; 5],
            size: self.size,
            side: 1.0,
        }
    }

    /// Path offset in the x-y plane, rotated by the performer's jitter.
    fn planar(&self, x: f64, y: f64) -> V3 {
        let (s, c) = self.path_angle.sin_cos();
        scale([c * x - s * y, s * x + c * y, 0.0], self.amplitude)
    }
}

/// Point along a polyline of 2-D waypoints at arc-length fraction `u`.
fn polyline(points: &[[f64; 2]], u: f64) -> [f64; 2] {
    let seg: Vec<f64> = points
        .windows(2)
        .map(|w| ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt())
        .collect();
    let total: f64 = seg.iter().sum();
    let mut d = u.clamp(0.0, 1.0) * total;
    for (i, len) in seg.iter().enumerate() {
        if d <= *len || i + 1 == seg.len() {
            let w = if *len > 0.0 { (d / len).min(1.0) } else { 0.0 };
            let (a, b) = (points[i], points[i + 1]);
            return [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])];
        }
        d -= len;
    }
    points[points.len() - 1]
}

fn lerp(a: f64, b: f64, u: f64) -> f64 {
    a + (b - a) * u
}

/// DHG finger modes: 1 = one finger (index) extended, 2 = whole hand.
fn finger_curl(mode: usize) -> [f64; 5] {
    if mode == 1 {
        [0.6, 0.05, 0.85, 0.85, 0.85]
    } else {
        [0.1; 5]
    }
}

/// One DHG/SHREC gesture `g` (1..=14) performed in finger mode `f`.
pub fn dhg_gesture(g: usize, f: usize, rng: &mut ChaCha8Rng) -> Vec<Frame> {
    let p = Performer::sample(rng, (24, 64), 1.0);
    let open = finger_curl(f);
    let shake_cycles = rng.gen_range(2.0..3.0);
    let turn = rng.gen_range(1.0..1.7);
    let frames = (0..p.frames)
        .map(|t| {
            let u = p.progress(t);
            let mut h = p.rest(0.0);
            h.curl = open;
            let movers: &[usize] = if f == 1 { &[0, 1] } else { &[0, 1, 2, 3, 4] };
            match g {
                1 | 3 => {
                    let (from, to) = if g == 1 { (0.05, 0.9) } else { (0.9, 0.05) };
                    for &i in movers {
                        h.curl[i] = lerp(from, to, u);
                    }
                    h.position = add(h.position, [0.0, 0.0, -0.05 * p.amplitude * u]);
                }
                2 => {
                    let dz = -0.35 * (PI * u).sin();
                    h.position = add(h.position, scale([0.0, 0.0, dz], p.amplitude));
                }
                4 => {
                    h.curl[0] = lerp(0.1, 0.75, u);
                    h.curl[1] = lerp(0.1, 0.7, u);
                }
                5 | 6 => {
                    let sign = if g == 5 { -1.0 } else { 1.0 };
                    h.roll = sign * turn * u;
                }
                7..=13 => {
                    let path: &[[f64; 2]] = match g {
                        7 => &[[-0.5, 0.0], [0.5, 0.0]],
                        8 => &[[0.5, 0.0], [-0.5, 0.0]],
                        9 => &[[0.0, -0.5], [0.0, 0.5]],
                        10 => &[[0.0, 0.5], [0.0, -0.5]],
                        11 => &[[-0.4, 0.4], [0.4, -0.4], [0.4, 0.4], [-0.4, -0.4]],
                        12 => &[[0.0, 0.45], [0.0, -0.45], [-0.45, 0.0], [0.45, 0.0]],
                        _ => &[[-0.4, 0.4], [0.0, -0.4], [0.4, 0.4]],
                    };
                    let q = polyline(path, u);
                    h.position = add(h.position, p.planar(q[0], q[1]));
                }
                _ => {
                    let x = 0.25 * (2.0 * PI * shake_cycles * u).sin();
                    h.position = add(h.position, p.planar(x, 0.0));
                }
            }
            h.joints().to_vec()
        })
        .collect();
    with_noise(frames, p.noise, rng)
}

/// One LMDHG gesture (1..=13) with both hands and elbows, 46 joints.
pub fn lmdhg_gesture(class: usize, rng: &mut ChaCha8Rng) -> Vec<Frame> {
    let p = Performer::sample(rng, (30, 70), 1.0);
    let cycles = rng.gen_range(2.0..3.0);
    let frames = (0..p.frames)
        .map(|t| {
            let u = p.progress(t);
            let mut right = p.rest(0.1);
            right.position = add(right.position, [0.12, 0.0, 0.0]);
            let mut left = p.rest(0.3);
            left.side = -1.0;
            left.position = add(p.base, [-0.20, -0.12, 0.05]);
            let two_handed = matches!(class, 2 | 6 | 11 | 13);
            if two_handed {
                left.position = add(p.base, [-0.12, 0.0, 0.0]);
                left.curl = [0.1; 5];
            }
            let motion = |h: &mut HandPose, mirror: f64| match class {
                1 | 2 => {
                    h.curl = [lerp(0.05, 0.9, u); 5];
                    h.position = add(h.position, scale([0.0, 0.0, -0.3 * u], p.amplitude));
                }
                3 => {
                    let a = PI * (0.25 + 1.5 * u);
                    h.position = add(h.position, p.planar(0.4 * a.cos(), 0.4 * a.sin()));
                }
                4 => h.position = add(h.position, p.planar(lerp(-0.4, 0.4, u), 0.0)),
                5 | 6 => {
                    h.curl = [0.6, 0.05, 0.85, 0.85, 0.85];
                    h.position = add(h.position, scale([0.0, 0.0, -0.4 * u], p.amplitude));
                }
                7 => h.roll = -1.4 * u,
                8 => {
                    h.curl = [0.6, 0.05, 0.05, 0.85, 0.85];
                    let y = 0.15 * (2.0 * PI * cycles * u).sin();
                    h.position = add(h.position, p.planar(0.0, y));
                }
                9 | 11 => {
                    let x = 0.2 * (2.0 * PI * cycles * u).sin();
                    h.position = add(h.position, p.planar(mirror * x, 0.0));
                }
                10 => {
                    let y = 0.15 * (2.0 * PI * cycles * u).sin() - 0.3 * u;
                    h.position = add(h.position, p.planar(0.0, y));
                }
                12 => h.position = add(h.position, p.planar(lerp(-0.35, 0.35, u), lerp(0.35, -0.35, u))),
                _ => h.position = add(h.position, p.planar(mirror * 0.3 * u, 0.0)),
            };
            motion(&mut right, 1.0);
            if two_handed {
                motion(&mut left, -1.0);
            }
            let mut frame: Frame = right.joints().to_vec();
            frame.push(right.elbow());
            frame.extend(left.joints());
            frame.push(left.elbow());
            frame
        })
        .collect();
    with_noise(frames, p.noise, rng)
}

/// One FPHA action (1..=45) in millimetres, 21 joints in FPHA order.
pub fn fpha_gesture(class: usize, rng: &mut ChaCha8Rng) -> Vec<Frame> {
    let mut p = Performer::sample(rng, (30, 80), 1000.0);
    p.amplitude *= 0.5;
    // A class-specific motion signature: path direction, grip, twist, tremor.
    let c = class as f64;
    let dir = c * 2.399_963; // golden angle
    let grip = 0.15 + 0.7 * ((class * 7) % 11) as f64 / 10.0;
    let twist = ((class % 5) as f64 - 2.0) * 0.35;
    let cycles = (class % 4) as f64;
    let frames = (0..p.frames)
        .map(|t| {
            let u = p.progress(t);
            let mut h = p.rest(grip);
            let wobble = if cycles > 0.0 { 0.1 * (2.0 * PI * cycles * u).sin() } else { 0.0 };
            let r = 0.4 * u;
            h.position = add(h.position, p.planar(r * dir.cos() + wobble, r * dir.sin()));
            h.position = add(h.position, [0.0, 0.0, -0.05 * (class % 3) as f64 * u]);
            h.roll = twist * u;
            let j = h.joints();
            let mut frame = Vec::with_capacity(21);
            frame.push(j[0]);
            for f in 0..5 {
                frame.push(j[2 + 4 * f]);
            }
            for f in 0..5 {
                frame.extend_from_slice(&j[3 + 4 * f..6 + 4 * f]);
            }
            frame.into_iter().map(|q| scale(q, 1000.0)).collect()
        })
        .collect();
    with_noise(frames, p.noise, rng)
}

fn with_noise(mut frames: Vec<Frame>, sigma: f64, rng: &mut ChaCha8Rng) -> Vec<Frame> {
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    for q in frames.iter_mut().flatten() {
        for v in q.iter_mut() {
            *v += normal.sample(rng);
        }
    }
    frames
}

/// Stable per-file generator seed.
fn file_rng(seed: u64, family: u64, index: u64) -> ChaCha8Rng {
    let mixed = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(family.wrapping_mul(0xC2B2_AE3D_27D4_EB4F))
        .wrapping_add(index);
    ChaCha8Rng::seed_from_u64(mixed)
}

fn write_file(root: &Path, locator: &str, text: &str) -> Result<(), DatasetError> {
    let path = root.join(locator);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| DatasetError::io(dir, e))?;
    }
    fs::write(&path, text).map_err(|e| DatasetError::io(&path, e))
}

/// Writes a synthetic tree for `dataset` under `root`; returns the number
/// of sequence files written. 14G and 28G variants share one tree.
pub fn generate_dataset(dataset: DatasetId, root: &Path, opts: &SynthOptions) -> Result<usize, DatasetError> {
    fs::create_dir_all(root).map_err(|e| DatasetError::io(root, e))?;
    match dataset.family() {
        DatasetFamily::Dhg1428 => generate_dhg(root, opts, 20, 5, "skeleton_world.txt", 1),
        DatasetFamily::Shrec2017 => generate_dhg(root, opts, 28, 0, "skeletons_world.txt", 2),
        DatasetFamily::Lmdhg => generate_lmdhg(root, opts),
        DatasetFamily::Fpha => generate_fpha(root, opts),
    }
}

/// `trials == 0` spreads 100 sequences per (gesture, mode) over the subjects.
fn generate_dhg(
    root: &Path,
    opts: &SynthOptions,
    subjects: usize,
    trials: usize,
    file: &str,
    family: u64,
) -> Result<usize, DatasetError> {
    let gestures: Vec<usize> = opts.dhg_gestures.clone().unwrap_or_else(|| (1..=14).collect());
    let mut jobs = Vec::new();
    for &g in &gestures {
        for f in 1..=2 {
            for s in 1..=subjects {
                let n = if trials > 0 {
                    trials
                } else {
                    100 / subjects + usize::from(s <= 100 % subjects)
                };
                for e in 1..=n {
                    jobs.push((g, f, s, e));
                }
            }
        }
    }
    jobs.par_iter()
        .map(|&(g, f, s, e)| {
            let index = (((g * 4 + f) * 64 + s) * 16 + e) as u64;
            let mut rng = file_rng(opts.seed, family, index);
            let frames = dhg_gesture(g, f, &mut rng);
            let locator = format!("gesture_{g}/finger_{f}/subject_{s}/essai_{e}/{file}");
            write_file(root, &locator, &format_frames(&frames, false, 5))
        })
        .collect::<Result<Vec<()>, _>>()?;
    Ok(jobs.len())
}

/// 50 data files; files 1..=35 hold 414 sequences and 36..=50 hold 194.
fn generate_lmdhg(root: &Path, opts: &SynthOptions) -> Result<usize, DatasetError> {
    let mut jobs = Vec::new();
    let mut next = 0usize;
    for k in 1..=50usize {
        let n = if k <= 35 {
            414 / 35 + usize::from(k <= 414 % 35)
        } else {
            194 / 15 + usize::from(k - 35 <= 194 % 15)
        };
        for i in 1..=n {
            let class = next % 13 + 1;
            next += 1;
            jobs.push((k, i, class));
        }
    }
    jobs.par_iter()
        .map(|&(k, i, class)| {
            let mut rng = file_rng(opts.seed, 3, (k * 100 + i) as u64);
            let frames = lmdhg_gesture(class, &mut rng);
            let locator = format!("DataFile{k}/gesture_{i:02}_class_{class}.txt");
            write_file(root, &locator, &format_frames(&frames, false, 5))
        })
        .collect::<Result<Vec<()>, _>>()?;
    Ok(jobs.len())
}

/// Six subjects, 1175 sequences, a split file listing 600 train / 575 test.
fn generate_fpha(root: &Path, opts: &SynthOptions) -> Result<usize, DatasetError> {
    let mut jobs = Vec::new();
    for class in 1..=45usize {
        let n = 1175 / 45 + usize::from(class <= 1175 % 45);
        for i in 0..n {
            let subject = i % 6 + 1;
            let seq = i / 6 + 1;
            jobs.push((class, subject, seq));
        }
    }
    jobs.par_iter()
        .map(|&(class, subject, seq)| {
            let mut rng = file_rng(opts.seed, 4, (class * 1000 + subject * 100 + seq) as u64);
            let frames = fpha_gesture(class, &mut rng);
            let locator = format!(
                "{FPHA_POSE_DIR}/Subject_{subject}/{}/{seq}/skeleton.txt",
                FPHA_CLASSES[class - 1]
            );
            write_file(root, &locator, &format_frames(&frames, true, 4))
        })
        .collect::<Result<Vec<()>, _>>()?;

    // Every other sequence of each class goes to training until 600 are
    // taken, so both splits cover all classes.
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (rank, &(class, subject, seq)) in jobs.iter().enumerate() {
        let line = format!("Subject_{subject}/{}/{seq} {}\n", FPHA_CLASSES[class - 1], class - 1);
        let prefer_train = (seq + subject + rank) % 2 == 0;
        let remaining = jobs.len() - rank;
        let must_train = 600 - train.len() >= remaining;
        if train.len() < 600 && (prefer_train || must_train) {
            train.push(line);
        } else {
            test.push(line);
        }
    }
    let mut split = format!("Training {}\n", train.len());
    split.extend(train);
    split.push_str(&format!("Test {}\n", test.len()));
    split.extend(test);
    write_file(root, FPHA_SPLIT_FILE, &split)?;
    Ok(jobs.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polyline_endpoints_and_midpoint() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]];
        assert_eq!(polyline(&pts, 0.0), [0.0, 0.0]);
        assert_eq!(polyline(&pts, 0.5), [1.0, 0.0]);
        assert_eq!(polyline(&pts, 1.0), [1.0, 1.0]);
    }

    #[test]
    fn gestures_have_expected_joint_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for g in 1..=14 {
            let f = dhg_gesture(g, 1 + g % 2, &mut rng);
            assert!(f.len() >= 24 && f.iter().all(|fr| fr.len() == 22));
        }
        for c in 1..=13 {
            assert!(lmdhg_gesture(c, &mut rng).iter().all(|fr| fr.len() == 46));
        }
        assert!(fpha_gesture(45, &mut rng).iter().all(|fr| fr.len() == 21));
    }

    #[test]
    fn swipe_right_moves_right() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = dhg_gesture(7, 2, &mut rng);
        let palm = |fr: &Frame| fr[1][0];
        assert!(palm(f.last().unwrap()) - palm(&f[0]) > 0.1);
    }

    #[test]
    fn same_seed_same_gesture() {
        let a = dhg_gesture(9, 1, &mut file_rng(17, 1, 3));
        let b = dhg_gesture(9, 1, &mut file_rng(17, 1, 3));
        assert_eq!(a, b);
    }

    #[test]
    fn hand_mirror_flips_x() {
        let mut h = HandPose {
            position: [0.0; 3],
            yaw: 0.0,
            pitch: 0.0,
            roll: 0.0,
            curl: [0.0; 5],
            size: 1.0,
            side: 1.0,
        };
        let r = h.joints()[21];
        h.side = -1.0;
        let l = h.joints()[21];
        assert_eq!(r[0], -l[0]);
        assert_eq!(r[1], l[1]);
    }
}
