//! Robot model loading, forward kinematics and capsule geometry.
//!
//! A robot is a tree of links rooted at a single floating base. Each link
//! carries the joint that attaches it to its parent (fixed or revolute),
//! inertial data and zero or more collision capsules. Joint angles are
//! stacked in link declaration order, one entry per revolute joint; the
//! floating base pose is provided separately in [`JointConfig`].

mod capsule;
mod fk;
mod model;

pub use capsule::{capsule_distance, Capsule};
pub use fk::{forward_kinematics, xi_jacobian, FkResult, JointConfig};
pub use model::{load_model, Joint, JointLimits, Link, RobotModel, UpAxis};
