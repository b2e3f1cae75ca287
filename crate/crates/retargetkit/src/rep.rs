//! Frame-wise motion representations for learning pipelines.
//!
//! Human sequences and robot trajectories are flattened into per-frame
//! feature vectors: planar root velocity, root orientation in a 6-D
//! rotation encoding, body positions and velocities in the root frame,
//! plus the joint vector for robots. Velocities are forward differences
//! at the sequence frame rate; the final frame repeats the previous
//! velocity so the representation has one entry per frame.
//!
//! The planar components are taken in the ground plane the model (or
//! caller) declares: the XZ plane for a Y-up world, XY for Z-up. The
//! field labels stay `r_x`/`r_z` either way.
//!
//! A root-height scalar is appended to every frame so the robot
//! representation is invertible back into a trajectory; the serialized
//! header lists it as `root_height` after the standard fields.

use nalgebra::{DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{forward_kinematics, JointConfig, RobotModel, UpAxis};
use crate::lie::{Pose, Rotation};
use crate::motion::{MotionSequence, RobotTrajectory};

/// Columns shorter than this cannot be orthonormalized reliably.
const DEGENERATE_COLUMN_TOL: f64 = 1e-9;

/// First two columns of a rotation matrix, stored column-major:
/// `[r11, r21, r31, r12, r22, r32]`.
///
/// The third column is implied (cross product of the first two), which
/// makes the encoding continuous in the rotation, unlike quaternions or
/// Euler angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Rotation6D(pub [f64; 6]);

/// Encodes a rotation as its first two matrix columns.
pub fn rotation_to_6d(r: &Rotation) -> Rotation6D {
    let m = r.matrix();
    Rotation6D([
        m[(0, 0)],
        m[(1, 0)],
        m[(2, 0)],
        m[(0, 1)],
        m[(1, 1)],
        m[(2, 1)],
    ])
}

/// Decodes a 6-D encoding back into a rotation.
///
/// The first column is normalized, the second is Gram-Schmidt
/// orthonormalized against it, and the third is their cross product, so
/// any pair of non-parallel, nonzero columns yields a proper rotation.
/// Encoding a valid rotation and decoding recovers it exactly (up to
/// rounding).
pub fn rotation_from_6d(x: &Rotation6D) -> Result<Rotation> {
    let a = Vector3::new(x.0[0], x.0[1], x.0[2]);
    let b = Vector3::new(x.0[3], x.0[4], x.0[5]);
    let norm_a = a.norm();
    if norm_a < DEGENERATE_COLUMN_TOL {
        return Err(Error::InvalidParameter(
            "6-D rotation: first column is numerically zero".to_string(),
        ));
    }
    let b1 = a / norm_a;
    let rejected = b - b1 * b1.dot(&b);
    let norm_r = rejected.norm();
    if norm_r < DEGENERATE_COLUMN_TOL {
        return Err(Error::InvalidParameter(
            "6-D rotation: columns are numerically parallel".to_string(),
        ));
    }
    let b2 = rejected / norm_r;
    let b3 = b1.cross(&b2);
    Ok(Rotation::from_matrix_unchecked(Matrix3::from_columns(&[
        b1, b2, b3,
    ])))
}

/// Per-frame feature vector for a human motion sequence.
///
/// The first body in the sequence is treated as the root; the remaining
/// `k` bodies contribute three position and three velocity channels each.
#[derive(Debug, Clone, PartialEq)]
pub struct HumanRep {
    /// Planar root velocity, first in-plane coordinate (m/s).
    pub r_x: f64,
    /// Planar root velocity, second in-plane coordinate (m/s).
    pub r_z: f64,
    /// Root orientation.
    pub rot6d: Rotation6D,
    /// Non-root body positions in the root frame, 3 per body.
    pub j_p: Vec<f64>,
    /// Forward-difference velocities of `j_p` (m/s), 3 per body.
    pub j_v: Vec<f64>,
    /// Root height above the ground plane (m). Extension field that makes
    /// the representation invertible.
    pub root_height: f64,
}

impl HumanRep {
    /// Flat layout: `[r_x, r_z, rot6d; j_p; j_v; root_height]`.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(9 + self.j_p.len() + self.j_v.len());
        out.push(self.r_x);
        out.push(self.r_z);
        out.extend_from_slice(&self.rot6d.0);
        out.extend_from_slice(&self.j_p);
        out.extend_from_slice(&self.j_v);
        out.push(self.root_height);
        out
    }
}

/// Per-frame feature vector for a robot trajectory. Mirrors [`HumanRep`]
/// over the model's non-base links and adds the joint vector `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotRep {
    /// Planar root velocity, first in-plane coordinate (m/s).
    pub r_x: f64,
    /// Planar root velocity, second in-plane coordinate (m/s).
    pub r_z: f64,
    /// Floating-base orientation.
    pub rot6d: Rotation6D,
    /// Non-base link positions in the base frame, 3 per link.
    pub j_p: Vec<f64>,
    /// Forward-difference velocities of `j_p` (m/s), 3 per link.
    pub j_v: Vec<f64>,
    /// Joint values in stacking order (rad).
    pub q: Vec<f64>,
    /// Base height above the ground plane (m). Extension field that makes
    /// the representation invertible.
    pub root_height: f64,
}

impl RobotRep {
    /// Flat layout: `[r_x, r_z, rot6d; j_p; j_v; q; root_height]`.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(9 + self.j_p.len() + self.j_v.len() + self.q.len());
        out.push(self.r_x);
        out.push(self.r_z);
        out.extend_from_slice(&self.rot6d.0);
        out.extend_from_slice(&self.j_p);
        out.extend_from_slice(&self.j_v);
        out.extend_from_slice(&self.q);
        out.push(self.root_height);
        out
    }
}

/// A human representation with the frame rate and ground plane it was
/// built at, which the flat file format records in its header.
#[derive(Debug, Clone, PartialEq)]
pub struct HumanRepSequence {
    pub fps: f64,
    pub up_axis: UpAxis,
    pub frames: Vec<HumanRep>,
}

/// A robot representation with the frame rate and ground plane it was
/// built at.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotRepSequence {
    pub fps: f64,
    pub up_axis: UpAxis,
    pub frames: Vec<RobotRep>,
}

const HUMAN_FIELDS: [&str; 6] = ["r_x", "r_z", "rot6d", "j_p", "j_v", "root_height"];
const ROBOT_FIELDS: [&str; 7] = ["r_x", "r_z", "rot6d", "j_p", "j_v", "q", "root_height"];

/// On-disk form: one flat array per frame plus a header giving the frame
/// rate, field order and the size parameters needed to slice the arrays
/// (`k` non-root bodies for humans, `d` non-base links and `n` joints for
/// robots).
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RepDoc {
    kind: String,
    fps: f64,
    up_axis: UpAxis,
    fields: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    frames: Vec<Vec<f64>>,
}

fn take_rot6d(frame: &[f64]) -> Rotation6D {
    Rotation6D([frame[0], frame[1], frame[2], frame[3], frame[4], frame[5]])
}

impl HumanRepSequence {
    /// Number of non-root bodies per frame.
    pub fn k(&self) -> usize {
        self.frames.first().map_or(0, |f| f.j_p.len() / 3)
    }

    pub fn to_document(&self) -> String {
        let doc = RepDoc {
            kind: "human".to_string(),
            fps: self.fps,
            up_axis: self.up_axis,
            fields: HUMAN_FIELDS.iter().map(|s| s.to_string()).collect(),
            k: Some(self.k()),
            d: None,
            n: None,
            frames: self.frames.iter().map(HumanRep::flat).collect(),
        };
        serde_json::to_string_pretty(&doc).expect("rep serialization cannot fail")
    }

    pub fn from_document(document: &str) -> Result<Self> {
        let doc: RepDoc =
            serde_json::from_str(document).map_err(|e| Error::Parse(e.to_string()))?;
        if doc.kind != "human" {
            return Err(Error::Parse(format!(
                "expected a human rep document, got kind `{}`",
                doc.kind
            )));
        }
        if doc.fields != HUMAN_FIELDS {
            return Err(Error::Parse(
                "human rep document lists unexpected fields".to_string(),
            ));
        }
        let k = doc
            .k
            .ok_or_else(|| Error::Parse("human rep document is missing `k`".to_string()))?;
        let width = 9 + 6 * k;
        let mut frames = Vec::with_capacity(doc.frames.len());
        for (t, flat) in doc.frames.iter().enumerate() {
            if flat.len() != width {
                return Err(Error::DimensionMismatch {
                    context: format!("human rep frame {t}"),
                    expected: width,
                    actual: flat.len(),
                });
            }
            frames.push(HumanRep {
                r_x: flat[0],
                r_z: flat[1],
                rot6d: take_rot6d(&flat[2..8]),
                j_p: flat[8..8 + 3 * k].to_vec(),
                j_v: flat[8 + 3 * k..8 + 6 * k].to_vec(),
                root_height: flat[width - 1],
            });
        }
        Ok(HumanRepSequence {
            fps: doc.fps,
            up_axis: doc.up_axis,
            frames,
        })
    }
}

impl RobotRepSequence {
    /// Number of non-base links per frame.
    pub fn d(&self) -> usize {
        self.frames.first().map_or(0, |f| f.j_p.len() / 3)
    }

    /// Joint vector length per frame.
    pub fn n(&self) -> usize {
        self.frames.first().map_or(0, |f| f.q.len())
    }

    pub fn to_document(&self) -> String {
        let doc = RepDoc {
            kind: "robot".to_string(),
            fps: self.fps,
            up_axis: self.up_axis,
            fields: ROBOT_FIELDS.iter().map(|s| s.to_string()).collect(),
            k: None,
            d: Some(self.d()),
            n: Some(self.n()),
            frames: self.frames.iter().map(RobotRep::flat).collect(),
        };
        serde_json::to_string_pretty(&doc).expect("rep serialization cannot fail")
    }

    pub fn from_document(document: &str) -> Result<Self> {
        let doc: RepDoc =
            serde_json::from_str(document).map_err(|e| Error::Parse(e.to_string()))?;
        if doc.kind != "robot" {
            return Err(Error::Parse(format!(
                "expected a robot rep document, got kind `{}`",
                doc.kind
            )));
        }
        if doc.fields != ROBOT_FIELDS {
            return Err(Error::Parse(
                "robot rep document lists unexpected fields".to_string(),
            ));
        }
        let d = doc
            .d
            .ok_or_else(|| Error::Parse("robot rep document is missing `d`".to_string()))?;
        let n = doc
            .n
            .ok_or_else(|| Error::Parse("robot rep document is missing `n`".to_string()))?;
        let width = 9 + 6 * d + n;
        let mut frames = Vec::with_capacity(doc.frames.len());
        for (t, flat) in doc.frames.iter().enumerate() {
            if flat.len() != width {
                return Err(Error::DimensionMismatch {
                    context: format!("robot rep frame {t}"),
                    expected: width,
                    actual: flat.len(),
                });
            }
            frames.push(RobotRep {
                r_x: flat[0],
                r_z: flat[1],
                rot6d: take_rot6d(&flat[2..8]),
                j_p: flat[8..8 + 3 * d].to_vec(),
                j_v: flat[8 + 3 * d..8 + 6 * d].to_vec(),
                q: flat[8 + 6 * d..8 + 6 * d + n].to_vec(),
                root_height: flat[width - 1],
            });
        }
        Ok(RobotRepSequence {
            fps: doc.fps,
            up_axis: doc.up_axis,
            frames,
        })
    }
}

/// Forward differences of a per-frame quantity, scaled to per-second.
/// The last frame repeats the previous velocity; a single frame gets
/// zeros so the output always has one entry per frame.
fn forward_rates(values: &[Vec<f64>], fps: f64) -> Vec<Vec<f64>> {
    let t_total = values.len();
    let mut rates = Vec::with_capacity(t_total);
    for t in 0..t_total {
        if t_total == 1 {
            rates.push(vec![0.0; values[0].len()]);
            break;
        }
        let (a, b) = if t + 1 < t_total {
            (&values[t], &values[t + 1])
        } else {
            (&values[t - 1], &values[t])
        };
        rates.push(a.iter().zip(b).map(|(x, y)| (y - x) * fps).collect());
    }
    rates
}

/// Converts a human motion sequence into per-frame feature vectors.
///
/// The first body is the root: its planar velocity, orientation and
/// height go into the root channels, and every other body is expressed
/// in its frame. Needs at least two frames to difference.
pub fn human_to_rep(seq: &MotionSequence, up_axis: UpAxis) -> Result<HumanRepSequence> {
    seq.validate()?;
    if seq.len() < 2 {
        return Err(Error::EmptyInput(
            "representation needs at least two frames to difference".to_string(),
        ));
    }
    let t_total = seq.len();
    let mut planar = Vec::with_capacity(t_total);
    let mut local = Vec::with_capacity(t_total);
    let mut roots = Vec::with_capacity(t_total);
    for frame in &seq.frames {
        let root = frame[0].pose();
        let inv = root.inverse();
        let mut j_p = Vec::with_capacity(3 * (frame.len() - 1));
        for body in &frame[1..] {
            let p = inv.transform_point(&body.position);
            j_p.extend_from_slice(&[p.x, p.y, p.z]);
        }
        let (px, pz) = up_axis.planar(&root.translation);
        planar.push(vec![px, pz]);
        local.push(j_p);
        roots.push(root);
    }
    let planar_rates = forward_rates(&planar, seq.fps);
    let local_rates = forward_rates(&local, seq.fps);
    let frames = (0..t_total)
        .map(|t| HumanRep {
            r_x: planar_rates[t][0],
            r_z: planar_rates[t][1],
            rot6d: rotation_to_6d(&roots[t].rotation),
            j_p: local[t].clone(),
            j_v: local_rates[t].clone(),
            root_height: up_axis.height(&roots[t].translation),
        })
        .collect();
    Ok(HumanRepSequence {
        fps: seq.fps,
        up_axis,
        frames,
    })
}

/// Converts a robot trajectory into per-frame feature vectors via
/// forward kinematics. Non-base links are expressed in the base frame in
/// link declaration order. A single frame gets zero velocities.
pub fn robot_traj_to_rep(traj: &RobotTrajectory, model: &RobotModel) -> Result<RobotRepSequence> {
    traj.check_model(model)?;
    if traj.frames.is_empty() {
        return Err(Error::EmptyInput(
            "cannot build a representation from an empty trajectory".to_string(),
        ));
    }
    let base = model.base_index();
    let t_total = traj.frames.len();
    let mut planar = Vec::with_capacity(t_total);
    let mut local = Vec::with_capacity(t_total);
    let mut roots = Vec::with_capacity(t_total);
    for cfg in &traj.frames {
        let fk = forward_kinematics(model, cfg)?;
        let root = *fk.pose(base);
        let inv = root.inverse();
        let mut j_p = Vec::with_capacity(3 * (model.links().len() - 1));
        for (i, _) in model.links().iter().enumerate() {
            if i == base {
                continue;
            }
            let p = inv.transform_point(&fk.pose(i).translation);
            j_p.extend_from_slice(&[p.x, p.y, p.z]);
        }
        let (px, pz) = model.up_axis.planar(&root.translation);
        planar.push(vec![px, pz]);
        local.push(j_p);
        roots.push(root);
    }
    let planar_rates = forward_rates(&planar, traj.fps);
    let local_rates = forward_rates(&local, traj.fps);
    let frames = (0..t_total)
        .map(|t| RobotRep {
            r_x: planar_rates[t][0],
            r_z: planar_rates[t][1],
            rot6d: rotation_to_6d(&roots[t].rotation),
            j_p: local[t].clone(),
            j_v: local_rates[t].clone(),
            q: traj.frames[t].q.iter().copied().collect(),
            root_height: model.up_axis.height(&roots[t].translation),
        })
        .collect();
    Ok(RobotRepSequence {
        fps: traj.fps,
        up_axis: model.up_axis,
        frames,
    })
}

/// Rebuilds a robot trajectory from its representation.
///
/// The planar root path is integrated from the per-frame velocities
/// starting at `initial_root`'s in-plane position; orientation and height
/// come directly from each frame's 6-D encoding and height scalar, and
/// `q` is copied verbatim. Because the velocities are forward
/// differences, integrating them undoes the differencing and the round
/// trip reproduces the source path up to rounding.
pub fn rep_to_robot_traj(
    reps: &RobotRepSequence,
    model: &RobotModel,
    initial_root: &Pose,
) -> Result<RobotTrajectory> {
    if reps.frames.is_empty() {
        return Err(Error::EmptyInput(
            "cannot rebuild a trajectory from an empty representation".to_string(),
        ));
    }
    if !(reps.fps > 0.0 && reps.fps.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "fps {} must be positive and finite",
            reps.fps
        )));
    }
    let dt = 1.0 / reps.fps;
    let up = reps.up_axis;
    let mut planar = up.planar(&initial_root.translation);
    let mut frames = Vec::with_capacity(reps.frames.len());
    for (t, rep) in reps.frames.iter().enumerate() {
        if rep.q.len() != model.dof() {
            return Err(Error::DimensionMismatch {
                context: format!("rep frame {t} joint vector"),
                expected: model.dof(),
                actual: rep.q.len(),
            });
        }
        let rotation = rotation_from_6d(&rep.rot6d)?;
        let translation = up.embed(planar, rep.root_height);
        frames.push(JointConfig::new(
            Pose::new(rotation, translation),
            DVector::from_vec(rep.q.clone()),
        ));
        planar = (planar.0 + rep.r_x * dt, planar.1 + rep.r_z * dt);
    }
    let traj = RobotTrajectory {
        fps: reps.fps,
        joint_names: model.joint_names(),
        frames,
    };
    traj.check_model(model)?;
    Ok(traj)
}
