//! Motion containers: captured pose sequences and robot joint trajectories.
//!
//! Both are uniform-rate recordings (frame spacing is implied by `fps`).
//! The JSON document forms are the interchange schema used by the CLI:
//!
//! ```json
//! {"fps": 30.0, "body_names": ["pelvis"],
//!  "frames": [{"poses": [{"pos": [0,0,0.9], "quat_wxyz": [1,0,0,0]}]}]}
//! ```
//!
//! ```json
//! {"fps": 30.0, "joint_names": ["l_hip"],
//!  "frames": [{"root_pos": [0,0,0.85], "root_quat_wxyz": [1,0,0,0], "q": [0.1]}]}
//! ```

use nalgebra::{DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::JointConfig;
use crate::lie::{Pose, Rotation};

/// World pose of one tracked body in one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyPose {
    pub position: Vector3<f64>,
    pub rotation: Rotation,
}

impl BodyPose {
    pub fn pose(&self) -> Pose {
        Pose::new(self.rotation, self.position)
    }
}

/// A captured multi-body pose sequence (e.g. tracked human motion).
#[derive(Debug, Clone)]
pub struct MotionSequence {
    pub fps: f64,
    pub body_names: Vec<String>,
    /// One entry per frame, each aligned with `body_names`.
    pub frames: Vec<Vec<BodyPose>>,
}

impl MotionSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Frame spacing in seconds.
    pub fn dt(&self) -> f64 {
        1.0 / self.fps
    }

    pub fn body_index(&self, name: &str) -> Result<usize> {
        self.body_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownBody(name.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "fps {} must be positive and finite",
                self.fps
            )));
        }
        if self.body_names.is_empty() {
            return Err(Error::EmptyInput("sequence has no bodies".to_string()));
        }
        for (t, frame) in self.frames.iter().enumerate() {
            if frame.len() != self.body_names.len() {
                return Err(Error::DimensionMismatch {
                    context: format!("sequence frame {t}"),
                    expected: self.body_names.len(),
                    actual: frame.len(),
                });
            }
        }
        Ok(())
    }

    pub fn from_document(document: &str) -> Result<Self> {
        let doc: SequenceDoc =
            serde_json::from_str(document).map_err(|e| Error::Parse(e.to_string()))?;
        let mut frames = Vec::with_capacity(doc.frames.len());
        for f in &doc.frames {
            let mut poses = Vec::with_capacity(f.poses.len());
            for p in &f.poses {
                let [w, x, y, z] = p.quat_wxyz;
                poses.push(BodyPose {
                    position: Vector3::from(p.pos),
                    rotation: Rotation::from_quaternion_wxyz(w, x, y, z)?,
                });
            }
            frames.push(poses);
        }
        let seq = MotionSequence {
            fps: doc.fps,
            body_names: doc.body_names,
            frames,
        };
        seq.validate()?;
        Ok(seq)
    }

    pub fn to_document(&self) -> String {
        let doc = SequenceDoc {
            fps: self.fps,
            body_names: self.body_names.clone(),
            frames: self
                .frames
                .iter()
                .map(|frame| SequenceFrameDoc {
                    poses: frame
                        .iter()
                        .map(|p| BodyPoseDoc {
                            pos: p.position.into(),
                            quat_wxyz: p.rotation.to_quaternion_wxyz(),
                        })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("sequence serialization cannot fail")
    }
}

/// A robot trajectory: floating-base pose plus joint angles per frame.
#[derive(Debug, Clone)]
pub struct RobotTrajectory {
    pub fps: f64,
    pub joint_names: Vec<String>,
    pub frames: Vec<JointConfig>,
}

impl RobotTrajectory {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.fps
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "fps {} must be positive and finite",
                self.fps
            )));
        }
        for (t, frame) in self.frames.iter().enumerate() {
            if frame.q.len() != self.joint_names.len() {
                return Err(Error::DimensionMismatch {
                    context: format!("trajectory frame {t}"),
                    expected: self.joint_names.len(),
                    actual: frame.q.len(),
                });
            }
        }
        Ok(())
    }

    /// Checks that joint names and per-frame dimensions agree with a model.
    /// The error names the first joint that disagrees.
    pub fn check_model(&self, model: &crate::kinematics::RobotModel) -> Result<()> {
        self.validate()?;
        let expected = model.joint_names();
        if self.joint_names != expected {
            let offender = expected
                .iter()
                .find(|n| !self.joint_names.contains(n))
                .or_else(|| self.joint_names.iter().find(|n| !expected.contains(n)))
                .cloned()
                .unwrap_or_else(|| "joint order".to_string());
            return Err(Error::InvalidParameter(format!(
                "trajectory joints do not match the model (mismatch at `{offender}`)"
            )));
        }
        Ok(())
    }

    pub fn from_document(document: &str) -> Result<Self> {
        let doc: TrajectoryDoc =
            serde_json::from_str(document).map_err(|e| Error::Parse(e.to_string()))?;
        let mut frames = Vec::with_capacity(doc.frames.len());
        for f in &doc.frames {
            let [w, x, y, z] = f.root_quat_wxyz;
            frames.push(JointConfig::new(
                Pose::new(
                    Rotation::from_quaternion_wxyz(w, x, y, z)?,
                    Vector3::from(f.root_pos),
                ),
                DVector::from_vec(f.q.clone()),
            ));
        }
        let traj = RobotTrajectory {
            fps: doc.fps,
            joint_names: doc.joint_names,
            frames,
        };
        traj.validate()?;
        Ok(traj)
    }

    pub fn to_document(&self) -> String {
        let doc = TrajectoryDoc {
            fps: self.fps,
            joint_names: self.joint_names.clone(),
            frames: self
                .frames
                .iter()
                .map(|f| TrajectoryFrameDoc {
                    root_pos: f.root.translation.into(),
                    root_quat_wxyz: f.root.rotation.to_quaternion_wxyz(),
                    q: f.q.iter().copied().collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("trajectory serialization cannot fail")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SequenceDoc {
    fps: f64,
    body_names: Vec<String>,
    frames: Vec<SequenceFrameDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SequenceFrameDoc {
    poses: Vec<BodyPoseDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BodyPoseDoc {
    pos: [f64; 3],
    quat_wxyz: [f64; 4],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryDoc {
    fps: f64,
    joint_names: Vec<String>,
    frames: Vec<TrajectoryFrameDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryFrameDoc {
    root_pos: [f64; 3],
    root_quat_wxyz: [f64; 4],
    q: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_document_round_trip() {
        let doc = r#"{"fps": 30.0, "body_names": ["pelvis", "hand"],
            "frames": [{"poses": [
                {"pos": [0, 0, 0.9], "quat_wxyz": [1, 0, 0, 0]},
                {"pos": [0.4, 0.1, 1.2], "quat_wxyz": [0.7071067811865476, 0.7071067811865476, 0, 0]}
            ]}]}"#;
        let seq = MotionSequence::from_document(doc).unwrap();
        assert_eq!(seq.len(), 1);
        assert_eq!(seq.body_index("hand").unwrap(), 1);
        let again = MotionSequence::from_document(&seq.to_document()).unwrap();
        assert_eq!(again.frames[0][1].position, seq.frames[0][1].position);
    }

    #[test]
    fn ragged_frames_are_rejected() {
        let doc = r#"{"fps": 30.0, "body_names": ["a", "b"],
            "frames": [{"poses": [{"pos": [0,0,0], "quat_wxyz": [1,0,0,0]}]}]}"#;
        assert!(matches!(
            MotionSequence::from_document(doc),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn trajectory_document_round_trip_and_fps_check() {
        let doc = r#"{"fps": 60.0, "joint_names": ["j1", "j2"],
            "frames": [{"root_pos": [0,0,0.8], "root_quat_wxyz": [1,0,0,0], "q": [0.1, -0.2]}]}"#;
        let traj = RobotTrajectory::from_document(doc).unwrap();
        assert_eq!(traj.frames[0].q[1], -0.2);
        let again = RobotTrajectory::from_document(&traj.to_document()).unwrap();
        assert_eq!(again.frames[0].q, traj.frames[0].q);

        let bad = doc.replace("60.0", "0.0");
        assert!(MotionSequence::from_document(&bad).is_err());
    }
}
