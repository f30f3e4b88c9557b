//! Joint layouts for the supported skeleton sources.
//!
//! Every schema lists the bones drawn for the hand pose, the fingertip joints
//! that leave temporal trails, and the palette used to render both.

use crate::error::DatasetError;

pub type Rgb = [u8; 3];

/// Colors used when drawing a schema.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Palette {
    /// One color per entry of [`JointSchema::fingertips`].
    pub fingertips: Vec<Rgb>,
    pub bone: Rgb,
}

const BONE_GRAY: Rgb = [230, 230, 230];

/// Thumb to pinky.
const FINGER_COLORS: [Rgb; 5] = [
    [255, 0, 0],
    [0, 255, 0],
    [0, 0, 255],
    [255, 255, 0],
    [255, 0, 255],
];

/// The same hues at half saturation, for the second hand of two-hand schemas.
const FINGER_COLORS_DIM: [Rgb; 5] = [
    [255, 128, 128],
    [128, 255, 128],
    [128, 128, 255],
    [255, 255, 128],
    [255, 128, 255],
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointSchema {
    pub name: String,
    pub joint_count: usize,
    pub bones: Vec<(usize, usize)>,
    pub fingertips: Vec<usize>,
    pub palette: Palette,
}

impl JointSchema {
    /// Checks the index and palette invariants.
    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.joint_count == 0 {
            return Err(DatasetError::Schema(format!(
                "schema {}: joint_count must be positive",
                self.name
            )));
        }
        if let Some(&(a, b)) = self
            .bones
            .iter()
            .find(|(a, b)| *a >= self.joint_count || *b >= self.joint_count)
        {
            return Err(DatasetError::Schema(format!(
                "schema {}: bone ({a}, {b}) out of range for {} joints",
                self.name, self.joint_count
            )));
        }
        if self.fingertips.is_empty() || self.fingertips.len() % 5 != 0 {
            return Err(DatasetError::Schema(format!(
                "schema {}: expected 5 fingertips per hand, got {}",
                self.name,
                self.fingertips.len()
            )));
        }
        for (i, &tip) in self.fingertips.iter().enumerate() {
            if tip >= self.joint_count {
                return Err(DatasetError::Schema(format!(
                    "schema {}: fingertip {tip} out of range",
                    self.name
                )));
            }
            if self.fingertips[..i].contains(&tip) {
                return Err(DatasetError::Schema(format!(
                    "schema {}: duplicate fingertip {tip}",
                    self.name
                )));
            }
        }
        if self.palette.fingertips.len() != self.fingertips.len() {
            return Err(DatasetError::Schema(format!(
                "schema {}: palette has {} fingertip colors for {} fingertips",
                self.name,
                self.palette.fingertips.len(),
                self.fingertips.len()
            )));
        }
        Ok(())
    }

    pub fn hands(&self) -> usize {
        self.fingertips.len() / 5
    }

    /// 22-joint layout shared by DHG-14/28 and SHREC'17: wrist, palm, then
    /// four joints per finger from thumb to pinky.
    pub fn dhg22() -> Self {
        JointSchema {
            name: "dhg22".into(),
            joint_count: 22,
            bones: hand22_bones(0),
            fingertips: vec![5, 9, 13, 17, 21],
            palette: Palette {
                fingertips: FINGER_COLORS.to_vec(),
                bone: BONE_GRAY,
            },
        }
    }

    /// 21-joint FPHA layout: wrist, five MCPs, then PIP/DIP/TIP per finger.
    pub fn fpha21() -> Self {
        let mut bones = Vec::new();
        for finger in 0..5 {
            let mcp = 1 + finger;
            let pip = 6 + 3 * finger;
            bones.extend([(0, mcp), (mcp, pip), (pip, pip + 1), (pip + 1, pip + 2)]);
        }
        JointSchema {
            name: "fpha21".into(),
            joint_count: 21,
            bones,
            fingertips: vec![8, 11, 14, 17, 20],
            palette: Palette {
                fingertips: FINGER_COLORS.to_vec(),
                bone: BONE_GRAY,
            },
        }
    }

    /// Two 23-joint hands (the 22-joint hand plus an elbow joint at index 22).
    pub fn lmdhg46() -> Self {
        let mut bones = hand22_bones(0);
        bones.push((22, 0));
        bones.extend(hand22_bones(23));
        bones.push((45, 23));
        let mut fingertips = vec![5, 9, 13, 17, 21];
        fingertips.extend([28, 32, 36, 40, 44]);
        let mut colors = FINGER_COLORS.to_vec();
        colors.extend(FINGER_COLORS_DIM);
        JointSchema {
            name: "lmdhg46".into(),
            joint_count: 46,
            bones,
            fingertips,
            palette: Palette {
                fingertips: colors,
                bone: BONE_GRAY,
            },
        }
    }

    /// 21-landmark layout produced by in-browser hand landmark models.
    pub fn mediapipe21() -> Self {
        let bones = vec![
            (0, 1),
            (1, 2),
            (2, 3),
            (3, 4),
            (0, 5),
            (5, 6),
            (6, 7),
            (7, 8),
            (5, 9),
            (9, 10),
            (10, 11),
            (11, 12),
            (9, 13),
            (13, 14),
            (14, 15),
            (15, 16),
            (13, 17),
            (0, 17),
            (17, 18),
            (18, 19),
            (19, 20),
        ];
        JointSchema {
            name: "mediapipe21".into(),
            joint_count: 21,
            bones,
            fingertips: vec![4, 8, 12, 16, 20],
            palette: Palette {
                fingertips: FINGER_COLORS.to_vec(),
                bone: BONE_GRAY,
            },
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "dhg22" => Some(Self::dhg22()),
            "fpha21" => Some(Self::fpha21()),
            "lmdhg46" => Some(Self::lmdhg46()),
            "mediapipe21" => Some(Self::mediapipe21()),
            _ => None,
        }
    }

    /// Finds a known schema with the given joint count and fingertip list.
    pub fn matching(joint_count: usize, fingertips: &[usize]) -> Option<Self> {
        [
            Self::dhg22(),
            Self::fpha21(),
            Self::lmdhg46(),
            Self::mediapipe21(),
        ]
        .into_iter()
        .find(|s| s.joint_count == joint_count && s.fingertips == fingertips)
    }
}

fn hand22_bones(offset: usize) -> Vec<(usize, usize)> {
    let mut bones = vec![(offset, offset + 1)];
    for finger in 0..5 {
        let base = offset + 2 + 4 * finger;
        let root = if finger == 0 { offset } else { offset + 1 };
        bones.extend([(root, base), (base, base + 1), (base + 1, base + 2), (base + 2, base + 3)]);
    }
    bones
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_schemas_are_valid() {
        for s in [
            JointSchema::dhg22(),
            JointSchema::fpha21(),
            JointSchema::lmdhg46(),
            JointSchema::mediapipe21(),
        ] {
            s.validate().unwrap();
            if s.name != "mediapipe21" {
                // Tree layouts: one bone per non-root joint.
                assert_eq!(s.bones.len(), s.joint_count - s.hands(), "{}", s.name);
            }
        }
        assert_eq!(JointSchema::lmdhg46().fingertips.len(), 10);
    }

    #[test]
    fn rejects_bad_indices() {
        let mut s = JointSchema::dhg22();
        s.bones.push((3, 22));
        assert!(s.validate().is_err());

        let mut s = JointSchema::dhg22();
        s.fingertips[1] = 5;
        assert!(s.validate().is_err());
    }

    #[test]
    fn matching_distinguishes_21_joint_layouts() {
        assert_eq!(
            JointSchema::matching(21, &[4, 8, 12, 16, 20]).unwrap().name,
            "mediapipe21"
        );
        assert_eq!(
            JointSchema::matching(21, &[8, 11, 14, 17, 20]).unwrap().name,
            "fpha21"
        );
        assert!(JointSchema::matching(21, &[1, 2, 3, 4, 5]).is_none());
    }
}
