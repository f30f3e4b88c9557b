use std::sync::Arc;

use crate::error::DatasetError;
use crate::schema::JointSchema;

pub type Joint = [f64; 3];
pub type Frame = Vec<Joint>;

/// A dynamic gesture: an ordered list of skeleton frames.
///
/// Construction validates that every frame carries `schema.joint_count`
/// finite joints and that there are at least two frames.
#[derive(Clone, Debug, PartialEq)]
pub struct SkeletonSequence {
    frames: Vec<Frame>,
    schema: Arc<JointSchema>,
    label: Option<usize>,
    subject: Option<String>,
    source_path: String,
}

impl SkeletonSequence {
    pub fn new(
        frames: Vec<Frame>,
        schema: Arc<JointSchema>,
        label: Option<usize>,
        subject: Option<String>,
        source_path: impl Into<String>,
    ) -> Result<Self, DatasetError> {
        let source_path = source_path.into();
        let fail = |msg: String| DatasetError::Sequence {
            source_path: source_path.clone(),
            msg,
        };
        if frames.len() < 2 {
            return Err(fail(format!("need at least 2 frames, got {}", frames.len())));
        }
        for (t, frame) in frames.iter().enumerate() {
            if frame.len() != schema.joint_count {
                return Err(fail(format!(
                    "frame {t} has {} joints, schema {} expects {}",
                    frame.len(),
                    schema.name,
                    schema.joint_count
                )));
            }
            if let Some(j) = frame.iter().position(|p| p.iter().any(|v| !v.is_finite())) {
                return Err(fail(format!("frame {t} joint {j} is not finite")));
            }
        }
        Ok(SkeletonSequence {
            frames,
            schema,
            label,
            subject,
            source_path,
        })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn schema(&self) -> &Arc<JointSchema> {
        &self.schema
    }

    /// 1-based class label, absent for live captures.
    pub fn label(&self) -> Option<usize> {
        self.label
    }

    pub fn subject(&self) -> Option<&str> {
        self.subject.as_deref()
    }

    pub fn source_path(&self) -> &str {
        &self.source_path
    }

    /// Same metadata, new frames. Used by stages that rewrite coordinates.
    pub fn with_frames(&self, frames: Vec<Frame>) -> Result<Self, DatasetError> {
        SkeletonSequence::new(
            frames,
            self.schema.clone(),
            self.label,
            self.subject.clone(),
            self.source_path.clone(),
        )
    }

    /// Every joint of every frame, in frame order.
    pub fn points(&self) -> impl Iterator<Item = &Joint> {
        self.frames.iter().flatten()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> Arc<JointSchema> {
        Arc::new(JointSchema::dhg22())
    }

    #[test]
    fn one_frame_is_rejected() {
        let err = SkeletonSequence::new(vec![vec![[0.0; 3]; 22]], schema(), Some(1), None, "x")
            .unwrap_err();
        assert!(matches!(err, DatasetError::Sequence { .. }));
    }

    #[test]
    fn wrong_joint_count_is_rejected() {
        let frames = vec![vec![[0.0; 3]; 22], vec![[0.0; 3]; 21]];
        assert!(SkeletonSequence::new(frames, schema(), Some(1), None, "x").is_err());
    }

    #[test]
    fn non_finite_is_rejected() {
        let mut frames = vec![vec![[0.0; 3]; 22]; 3];
        frames[2][7][1] = f64::NAN;
        assert!(SkeletonSequence::new(frames, schema(), Some(1), None, "x").is_err());
    }
}
