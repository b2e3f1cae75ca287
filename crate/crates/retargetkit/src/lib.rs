//! Kinematic motion retargeting toolkit.

pub mod cepr;
pub mod error;
pub mod fixtures;
pub mod kinematics;
pub mod lie;
pub mod metrics;
pub mod motion;
pub mod objective;
pub mod rep;
pub mod retargeter;

pub use error::{Error, Result};
