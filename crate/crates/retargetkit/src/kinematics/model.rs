//! Robot model schema, validation and loading.
//!
//! Models are JSON documents:
//!
//! ```json
//! {
//!   "name": "biped",
//!   "up_axis": "z",
//!   "links": [
//!     {"name": "pelvis", "parent": null,
//!      "joint": {"type": "fixed"},
//!      "mass": 5.0, "com": [0, 0, 0],
//!      "capsules": [{"p0": [0, -0.1, 0], "p1": [0, 0.1, 0], "radius": 0.08}],
//!      "tags": []},
//!     {"name": "l_hip", "parent": "pelvis",
//!      "joint": {"type": "revolute", "axis": [1, 0, 0],
//!                "origin": {"xyz": [0, 0.1, 0], "rpy": [0, 0, 0]},
//!                "limits": {"lower": -1.5, "upper": 1.5, "velocity": 10.0}}}
//!   ]
//! }
//! ```
//!
//! Exactly one link has `parent: null`; it rides the floating base and must
//! use a fixed joint. `origin.rpy` is an intrinsic x-y-z Euler triple, i.e.
//! `R = Rx(r) * Ry(p) * Rz(y)`. Revolute axes must be unit length (checked
//! to 1e-9, not silently normalized). The optional per-link `tags` array
//! marks `"hand"` and `"foot"` links for the contact and collision checks.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::capsule::Capsule;
use crate::error::{Error, Result};
use crate::lie::{Pose, Rotation};

/// Tolerance for the unit-norm check on revolute axes.
const AXIS_NORM_TOL: f64 = 1e-9;

/// Gravity-aligned axis of the world frame. Determines which coordinate is
/// "height" and which two span the ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpAxis {
    Y,
    Z,
}

impl UpAxis {
    /// Height of a point above the ground plane.
    pub fn height(&self, p: &Vector3<f64>) -> f64 {
        match self {
            UpAxis::Y => p.y,
            UpAxis::Z => p.z,
        }
    }

    /// The two in-plane coordinates, in axis order: (x, z) for y-up,
    /// (x, y) for z-up.
    pub fn planar(&self, p: &Vector3<f64>) -> (f64, f64) {
        match self {
            UpAxis::Y => (p.x, p.z),
            UpAxis::Z => (p.x, p.y),
        }
    }

    /// Unit vector along the up direction.
    pub fn vector(&self) -> Vector3<f64> {
        match self {
            UpAxis::Y => Vector3::y(),
            UpAxis::Z => Vector3::z(),
        }
    }

    /// Rebuild a world point from its in-plane coordinates and height.
    /// Inverse of `planar` paired with `height`.
    pub fn embed(&self, planar: (f64, f64), height: f64) -> Vector3<f64> {
        match self {
            UpAxis::Y => Vector3::new(planar.0, height, planar.1),
            UpAxis::Z => Vector3::new(planar.0, planar.1, height),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointLimits {
    pub lower: f64,
    pub upper: f64,
    /// Magnitude bound on the joint velocity, rad/s. Strictly positive.
    pub velocity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Joint {
    Fixed,
    Revolute { axis: Vector3<f64>, limits: JointLimits },
}

#[derive(Debug, Clone)]
pub struct Link {
    pub name: String,
    /// Index of the parent link; `None` for the base link.
    pub parent: Option<usize>,
    /// Fixed transform from the parent frame to this link's joint frame.
    pub origin: Pose,
    pub joint: Joint,
    pub mass: f64,
    /// Center of mass in the link frame.
    pub com: Vector3<f64>,
    pub capsules: Vec<Capsule>,
    pub is_hand: bool,
    pub is_foot: bool,
}

/// A validated kinematic tree. Construction goes through [`load_model`],
/// which enforces the schema rules, so downstream code can assume a
/// well-formed tree.
#[derive(Debug, Clone)]
pub struct RobotModel {
    pub name: String,
    pub up_axis: UpAxis,
    links: Vec<Link>,
    base: usize,
    /// Link indices in an order where every parent precedes its children.
    topo_order: Vec<usize>,
    /// Link indices owning a joint angle, in declaration order.
    revolute: Vec<usize>,
}

impl RobotModel {
    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, index: usize) -> &Link {
        &self.links[index]
    }

    pub fn link_index(&self, name: &str) -> Result<usize> {
        self.links
            .iter()
            .position(|l| l.name == name)
            .ok_or_else(|| Error::UnknownBody(name.to_string()))
    }

    pub fn base_index(&self) -> usize {
        self.base
    }

    pub(crate) fn topo_order(&self) -> &[usize] {
        &self.topo_order
    }

    /// Link indices owning joint angles, in q order.
    pub fn revolute_links(&self) -> &[usize] {
        &self.revolute
    }

    /// Number of joint angles (the floating base is not counted).
    pub fn dof(&self) -> usize {
        self.revolute.len()
    }

    /// Names of the angle-owning joints in q order. Joints are named after
    /// the link they move.
    pub fn joint_names(&self) -> Vec<String> {
        self.revolute
            .iter()
            .map(|&i| self.links[i].name.clone())
            .collect()
    }

    /// `(lower, upper)` bounds in q order.
    pub fn joint_limits(&self) -> Vec<(f64, f64)> {
        self.revolute
            .iter()
            .map(|&i| match &self.links[i].joint {
                Joint::Revolute { limits, .. } => (limits.lower, limits.upper),
                Joint::Fixed => unreachable!("revolute index points at fixed joint"),
            })
            .collect()
    }

    /// Velocity magnitude bounds in q order.
    pub fn velocity_limits(&self) -> Vec<f64> {
        self.revolute
            .iter()
            .map(|&i| match &self.links[i].joint {
                Joint::Revolute { limits, .. } => limits.velocity,
                Joint::Fixed => unreachable!("revolute index points at fixed joint"),
            })
            .collect()
    }

    /// Mid-range joint vector, the default solver initialization.
    pub fn mid_range_q(&self) -> nalgebra::DVector<f64> {
        nalgebra::DVector::from_iterator(
            self.dof(),
            self.joint_limits().iter().map(|(lo, hi)| 0.5 * (lo + hi)),
        )
    }

    /// True when the two links form a parent-child pair.
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.links[a].parent == Some(b) || self.links[b].parent == Some(a)
    }
}

// --- raw document schema -------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    name: String,
    up_axis: UpAxis,
    links: Vec<LinkDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkDoc {
    name: String,
    parent: Option<String>,
    joint: JointDoc,
    #[serde(default)]
    mass: f64,
    #[serde(default)]
    com: [f64; 3],
    #[serde(default)]
    capsules: Vec<CapsuleDoc>,
    #[serde(default)]
    tags: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JointDoc {
    #[serde(rename = "type")]
    kind: JointKind,
    axis: Option<[f64; 3]>,
    origin: Option<OriginDoc>,
    limits: Option<LimitsDoc>,
}

#[derive(Deserialize, PartialEq, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum JointKind {
    Fixed,
    Revolute,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OriginDoc {
    #[serde(default)]
    xyz: [f64; 3],
    #[serde(default)]
    rpy: [f64; 3],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LimitsDoc {
    lower: f64,
    upper: f64,
    velocity: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CapsuleDoc {
    p0: [f64; 3],
    p1: [f64; 3],
    radius: f64,
}

fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

fn rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Intrinsic x-y-z Euler angles to a rotation: `R = Rx(r) * Ry(p) * Rz(y)`.
fn rpy_to_rotation(rpy: [f64; 3]) -> Rotation {
    Rotation::from_matrix_unchecked(rot_x(rpy[0]) * rot_y(rpy[1]) * rot_z(rpy[2]))
}

fn origin_pose(origin: &Option<OriginDoc>) -> Pose {
    match origin {
        None => Pose::identity(),
        Some(o) => Pose::new(rpy_to_rotation(o.rpy), Vector3::from(o.xyz)),
    }
}

/// Parses and validates a robot model document.
///
/// Rejects, with the offending link named: duplicate link names, unknown or
/// self parents, zero or multiple base links, links unreachable from the
/// base (cycles), a non-fixed base joint, revolute joints without a unit
/// axis or without limits, `lower >= upper`, non-positive velocity bounds,
/// fixed joints declaring an axis or limits, negative masses, non-positive
/// capsule radii and unknown tags.
pub fn load_model(document: &str) -> Result<RobotModel> {
    let doc: ModelDoc =
        serde_json::from_str(document).map_err(|e| Error::Parse(e.to_string()))?;

    if doc.links.is_empty() {
        return Err(Error::model(&doc.name, "model has no links"));
    }

    // Name uniqueness and parent resolution.
    let mut index_of = std::collections::HashMap::new();
    for (i, link) in doc.links.iter().enumerate() {
        if index_of.insert(link.name.clone(), i).is_some() {
            return Err(Error::model(&link.name, "duplicate link name"));
        }
    }

    let mut base = None;
    let mut parents: Vec<Option<usize>> = Vec::with_capacity(doc.links.len());
    for link in &doc.links {
        match &link.parent {
            None => {
                if base.replace(index_of[&link.name]).is_some() {
                    return Err(Error::model(
                        &link.name,
                        "multiple links have no parent; exactly one base link is allowed",
                    ));
                }
                parents.push(None);
            }
            Some(p) => {
                if p == &link.name {
                    return Err(Error::model(&link.name, "link is its own parent"));
                }
                let pi = *index_of
                    .get(p)
                    .ok_or_else(|| Error::model(&link.name, format!("unknown parent `{p}`")))?;
                parents.push(Some(pi));
            }
        }
    }
    let base = base.ok_or_else(|| Error::model(&doc.name, "no base link (parent: null)"))?;

    // Topological order by repeated sweeps; anything never placed is caught
    // in a cycle or disconnected from the base.
    let n = doc.links.len();
    let mut placed = vec![false; n];
    let mut topo_order = Vec::with_capacity(n);
    placed[base] = true;
    topo_order.push(base);
    loop {
        let mut progressed = false;
        for i in 0..n {
            if !placed[i] && parents[i].map(|p| placed[p]) == Some(true) {
                placed[i] = true;
                topo_order.push(i);
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    if topo_order.len() != n {
        let stray = (0..n).find(|&i| !placed[i]).unwrap();
        return Err(Error::model(
            &doc.links[stray].name,
            "link is not reachable from the base (cycle or detached subtree)",
        ));
    }

    // Per-link validation and conversion.
    let mut links = Vec::with_capacity(n);
    let mut revolute = Vec::new();
    for (i, link) in doc.links.iter().enumerate() {
        let joint = match link.joint.kind {
            JointKind::Fixed => {
                if link.joint.axis.is_some() || link.joint.limits.is_some() {
                    return Err(Error::model(
                        &link.name,
                        "fixed joint must not declare an axis or limits",
                    ));
                }
                Joint::Fixed
            }
            JointKind::Revolute => {
                if i == base {
                    return Err(Error::model(
                        &link.name,
                        "base link must use a fixed joint",
                    ));
                }
                let axis = Vector3::from(link.joint.axis.ok_or_else(|| {
                    Error::model(&link.name, "revolute joint is missing `axis`")
                })?);
                if (axis.norm() - 1.0).abs() > AXIS_NORM_TOL {
                    return Err(Error::model(
                        &link.name,
                        format!("revolute axis norm {} is not 1", axis.norm()),
                    ));
                }
                let lim = link.joint.limits.as_ref().ok_or_else(|| {
                    Error::model(&link.name, "revolute joint is missing `limits`")
                })?;
                if !(lim.lower < lim.upper) {
                    return Err(Error::model(
                        &link.name,
                        format!("limits lower {} >= upper {}", lim.lower, lim.upper),
                    ));
                }
                if !(lim.velocity > 0.0) {
                    return Err(Error::model(
                        &link.name,
                        format!("velocity limit {} must be positive", lim.velocity),
                    ));
                }
                revolute.push(i);
                Joint::Revolute {
                    axis,
                    limits: JointLimits {
                        lower: lim.lower,
                        upper: lim.upper,
                        velocity: lim.velocity,
                    },
                }
            }
        };

        if i == base && link.joint.kind != JointKind::Fixed {
            unreachable!("handled above");
        }
        if link.mass < 0.0 {
            return Err(Error::model(&link.name, "negative mass"));
        }

        let mut capsules = Vec::with_capacity(link.capsules.len());
        for c in &link.capsules {
            if !(c.radius > 0.0) {
                return Err(Error::model(
                    &link.name,
                    format!("capsule radius {} must be positive", c.radius),
                ));
            }
            capsules.push(Capsule {
                p0: Vector3::from(c.p0),
                p1: Vector3::from(c.p1),
                radius: c.radius,
            });
        }

        let mut is_hand = false;
        let mut is_foot = false;
        for tag in &link.tags {
            match tag.as_str() {
                "hand" => is_hand = true,
                "foot" => is_foot = true,
                other => {
                    return Err(Error::model(
                        &link.name,
                        format!("unknown tag `{other}` (expected \"hand\" or \"foot\")"),
                    ));
                }
            }
        }

        links.push(Link {
            name: link.name.clone(),
            parent: parents[i],
            origin: origin_pose(&link.joint.origin),
            joint,
            mass: link.mass,
            com: Vector3::from(link.com),
            capsules,
            is_hand,
            is_foot,
        });
    }

    Ok(RobotModel {
        name: doc.name,
        up_axis: doc.up_axis,
        links,
        base,
        topo_order,
        revolute,
    })
}
