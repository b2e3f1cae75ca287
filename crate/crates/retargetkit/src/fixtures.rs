//! Bundled test models.
//!
//! Three small robots exercise every code path without needing external
//! assets: a planar two-link arm (analytic FK and curvature references), a
//! two-axis wrist with zero link lengths (pure-rotation analysis), and a
//! biped with capsules, limits and foot/hand tags (contact, collision and
//! metric checks). The JSON sources double as schema examples and feed the
//! CLI tests.

use crate::kinematics::{load_model, RobotModel};

/// Two unit-length links in the x-y plane, both revolute about z.
/// At q = (0, 0) the end effector sits at (2, 0, 0).
pub const PLANAR2_JSON: &str = r#"{
  "name": "planar2",
  "up_axis": "z",
  "links": [
    {"name": "base", "parent": null, "joint": {"type": "fixed"}, "mass": 1.0},
    {"name": "link1", "parent": "base",
     "joint": {"type": "revolute", "axis": [0, 0, 1],
               "limits": {"lower": -3.0, "upper": 3.0, "velocity": 10.0}},
     "mass": 1.0, "com": [0.5, 0, 0]},
    {"name": "link2", "parent": "link1",
     "joint": {"type": "revolute", "axis": [0, 0, 1],
               "origin": {"xyz": [1, 0, 0]},
               "limits": {"lower": -3.0, "upper": 3.0, "velocity": 10.0}},
     "mass": 1.0, "com": [0.5, 0, 0]},
    {"name": "ee", "parent": "link2",
     "joint": {"type": "fixed", "origin": {"xyz": [1, 0, 0]}},
     "mass": 0.1}
  ]
}"#;

/// Two revolute joints with orthogonal axes (z then x) and zero link
/// lengths: the tool orientation is Rz(q0) * Rx(q1) and its position never
/// moves. Used for rotation-only curvature analysis.
pub const WRIST2_JSON: &str = r#"{
  "name": "wrist2",
  "up_axis": "z",
  "links": [
    {"name": "base", "parent": null, "joint": {"type": "fixed"}, "mass": 1.0},
    {"name": "w1", "parent": "base",
     "joint": {"type": "revolute", "axis": [0, 0, 1],
               "limits": {"lower": -3.1, "upper": 3.1, "velocity": 10.0}},
     "mass": 0.5},
    {"name": "w2", "parent": "w1",
     "joint": {"type": "revolute", "axis": [1, 0, 0],
               "limits": {"lower": -3.1, "upper": 3.1, "velocity": 10.0}},
     "mass": 0.5},
    {"name": "tool", "parent": "w2", "joint": {"type": "fixed"}, "mass": 0.1}
  ]
}"#;

/// A minimal biped: pelvis base, leaning torso, one arm (shoulder/elbow/
/// hand), two legs with feet. With the root at height 0.85 and all angles
/// zero the foot capsule surfaces touch the ground exactly. Swinging the
/// shoulder inward (negative angle) drives the forearm capsule into the
/// torso capsule, which is the non-adjacent self-collision used in tests.
pub const BIPED_JSON: &str = r#"{
  "name": "biped",
  "up_axis": "z",
  "links": [
    {"name": "pelvis", "parent": null, "joint": {"type": "fixed"}, "mass": 5.0,
     "capsules": [{"p0": [0, -0.06, 0], "p1": [0, 0.06, 0], "radius": 0.06}]},
    {"name": "torso", "parent": "pelvis",
     "joint": {"type": "revolute", "axis": [1, 0, 0],
               "origin": {"xyz": [0, 0, 0.1]},
               "limits": {"lower": -1.5, "upper": 1.5, "velocity": 8.0}},
     "mass": 10.0, "com": [0, 0, 0.15],
     "capsules": [{"p0": [0, 0, 0], "p1": [0, 0, 0.3], "radius": 0.09}]},
    {"name": "l_shoulder", "parent": "torso",
     "joint": {"type": "revolute", "axis": [1, 0, 0],
               "origin": {"xyz": [0, 0.26, 0.25]},
               "limits": {"lower": -2.5, "upper": 2.5, "velocity": 10.0}},
     "mass": 1.5, "com": [0, 0, -0.12],
     "capsules": [{"p0": [0, 0, 0], "p1": [0, 0, -0.25], "radius": 0.04}]},
    {"name": "l_elbow", "parent": "l_shoulder",
     "joint": {"type": "revolute", "axis": [1, 0, 0],
               "origin": {"xyz": [0, 0, -0.25]},
               "limits": {"lower": -2.5, "upper": 0.1, "velocity": 12.0}},
     "mass": 1.0, "com": [0, 0, -0.11],
     "capsules": [{"p0": [0, 0, 0], "p1": [0, 0, -0.22], "radius": 0.035}]},
    {"name": "l_hand", "parent": "l_elbow",
     "joint": {"type": "fixed", "origin": {"xyz": [0, 0, -0.25]}},
     "mass": 0.4, "tags": ["hand"],
     "capsules": [{"p0": [0, 0, 0], "p1": [0, 0, -0.08], "radius": 0.03}]},
    {"name": "l_hip", "parent": "pelvis",
     "joint": {"type": "revolute", "axis": [0, 1, 0],
               "origin": {"xyz": [0, 0.1, -0.1]},
               "limits": {"lower": -1.8, "upper": 1.8, "velocity": 12.0}},
     "mass": 3.0, "com": [0, 0, -0.17],
     "capsules": [{"p0": [0, 0, 0], "p1": [0, 0, -0.35], "radius": 0.05}]},
    {"name": "l_knee", "parent": "l_hip",
     "joint": {"type": "revolute", "axis": [0, 1, 0],
               "origin": {"xyz": [0, 0, -0.35]},
               "limits": {"lower": -2.2, "upper": 0.1, "velocity": 14.0}},
     "mass": 2.5, "com": [0, 0, -0.17],
     "capsules": [{"p0": [0, 0, 0], "p1": [0, 0, -0.35], "radius": 0.04}]},
    {"name": "l_foot", "parent": "l_knee",
     "joint": {"type": "fixed", "origin": {"xyz": [0, 0, -0.35]}},
     "mass": 0.8, "com": [0.03, 0, -0.02], "tags": ["foot"],
     "capsules": [{"p0": [-0.05, 0, -0.03], "p1": [0.12, 0, -0.03], "radius": 0.02}]},
    {"name": "r_hip", "parent": "pelvis",
     "joint": {"type": "revolute", "axis": [0, 1, 0],
               "origin": {"xyz": [0, -0.1, -0.1]},
               "limits": {"lower": -1.8, "upper": 1.8, "velocity": 12.0}},
     "mass": 3.0, "com": [0, 0, -0.17],
     "capsules": [{"p0": [0, 0, 0], "p1": [0, 0, -0.35], "radius": 0.05}]},
    {"name": "r_knee", "parent": "r_hip",
     "joint": {"type": "revolute", "axis": [0, 1, 0],
               "origin": {"xyz": [0, 0, -0.35]},
               "limits": {"lower": -2.2, "upper": 0.1, "velocity": 14.0}},
     "mass": 2.5, "com": [0, 0, -0.17],
     "capsules": [{"p0": [0, 0, 0], "p1": [0, 0, -0.35], "radius": 0.04}]},
    {"name": "r_foot", "parent": "r_knee",
     "joint": {"type": "fixed", "origin": {"xyz": [0, 0, -0.35]}},
     "mass": 0.8, "com": [0.03, 0, -0.02], "tags": ["foot"],
     "capsules": [{"p0": [-0.05, 0, -0.03], "p1": [0.12, 0, -0.03], "radius": 0.02}]}
  ]
}"#;

/// Height of the biped root at which the foot capsules touch the ground.
pub const BIPED_STAND_HEIGHT: f64 = 0.85;

pub fn planar2() -> RobotModel {
    load_model(PLANAR2_JSON).expect("planar2 fixture is valid")
}

pub fn wrist2() -> RobotModel {
    load_model(WRIST2_JSON).expect("wrist2 fixture is valid")
}

pub fn biped() -> RobotModel {
    load_model(BIPED_JSON).expect("biped fixture is valid")
}
