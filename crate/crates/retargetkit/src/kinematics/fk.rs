//! Forward kinematics and the pose-error Jacobian.

use nalgebra::{DMatrix, DVector, Vector3};

use super::model::{Joint, RobotModel};
use crate::error::{Error, Result};
use crate::lie::{se3_log, so3_exp, Pose};

/// Finite-difference step for [`xi_jacobian`] (central differences).
pub const XI_JACOBIAN_STEP: f64 = 1e-6;

/// A full configuration: floating-base pose plus joint angles in q order.
#[derive(Debug, Clone, PartialEq)]
pub struct JointConfig {
    pub root: Pose,
    pub q: DVector<f64>,
}

impl JointConfig {
    pub fn new(root: Pose, q: DVector<f64>) -> Self {
        JointConfig { root, q }
    }

    /// Identity root, all joint angles zero.
    pub fn zeros(dof: usize) -> Self {
        JointConfig {
            root: Pose::identity(),
            q: DVector::zeros(dof),
        }
    }
}

/// World poses of every link, in model declaration order.
#[derive(Debug, Clone)]
pub struct FkResult {
    body_poses: Vec<(String, Pose)>,
}

impl FkResult {
    /// Pose of a link by name (linear scan; link counts are small).
    pub fn get(&self, name: &str) -> Option<&Pose> {
        self.body_poses
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, p)| p)
    }

    /// Pose by link index (model declaration order).
    pub fn pose(&self, index: usize) -> &Pose {
        &self.body_poses[index].1
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Pose)> {
        self.body_poses.iter().map(|(n, p)| (n.as_str(), p))
    }

    pub fn len(&self) -> usize {
        self.body_poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.body_poses.is_empty()
    }
}

/// Computes world poses for all links.
///
/// Link pose = parent pose * origin * R(axis, q) for revolute joints,
/// parent pose * origin for fixed ones; the base link hangs off `cfg.root`.
/// Rejects joint vectors whose length differs from `model.dof()` and joint
/// angles large enough to leave the rotation exponential's principal branch
/// (|q| >= pi would alias anyway under the axis-angle convention used
/// throughout; limits in practical models keep angles well inside).
pub fn forward_kinematics(model: &RobotModel, cfg: &JointConfig) -> Result<FkResult> {
    if cfg.q.len() != model.dof() {
        return Err(Error::DimensionMismatch {
            context: "forward_kinematics joint vector".to_string(),
            expected: model.dof(),
            actual: cfg.q.len(),
        });
    }

    // Angle index per link (q order follows declaration order, which is not
    // necessarily topological order).
    let mut angle_index = vec![usize::MAX; model.links().len()];
    for (qi, &li) in model.revolute_links().iter().enumerate() {
        angle_index[li] = qi;
    }

    let mut poses: Vec<Option<Pose>> = vec![None; model.links().len()];
    for &i in model.topo_order() {
        let link = model.link(i);
        let parent_pose = match link.parent {
            None => cfg.root,
            Some(p) => poses[p].expect("topological order visits parents first"),
        };
        let joint_frame = parent_pose.compose(&link.origin);
        let pose = match &link.joint {
            Joint::Fixed => joint_frame,
            Joint::Revolute { axis, .. } => {
                let angle = cfg.q[angle_index[i]];
                let rot = so3_exp(&(axis * angle))?;
                joint_frame.compose(&Pose::new(rot, Vector3::zeros()))
            }
        };
        poses[i] = Some(pose);
    }

    Ok(FkResult {
        body_poses: model
            .links()
            .iter()
            .zip(poses)
            .map(|(l, p)| (l.name.clone(), p.unwrap()))
            .collect(),
    })
}

/// Jacobian of the relative pose error `xi(q) = log(target^-1 * T_body(q))`
/// with respect to the joint angles, by central finite differences with
/// step [`XI_JACOBIAN_STEP`].
///
/// Shape 6 x dof; rows 0..3 are the rotational coordinates, rows 3..6 the
/// translational ones (same stacking as [`crate::lie::TangentVector`]).
/// Fails if any stencil point pushes the relative rotation onto the log
/// branch boundary.
pub fn xi_jacobian(
    model: &RobotModel,
    cfg: &JointConfig,
    body: &str,
    target: &Pose,
) -> Result<DMatrix<f64>> {
    xi_jacobian_with_step(model, cfg, body, target, XI_JACOBIAN_STEP)
}

/// [`xi_jacobian`] with an explicit step, for callers that need to verify
/// convergence under step halving.
pub fn xi_jacobian_with_step(
    model: &RobotModel,
    cfg: &JointConfig,
    body: &str,
    target: &Pose,
    h: f64,
) -> Result<DMatrix<f64>> {
    let body_index = model.link_index(body)?;
    let target_inv = target.inverse();
    let n = model.dof();
    let mut jac = DMatrix::zeros(6, n);

    let xi_at = |q: &DVector<f64>| -> Result<[f64; 6]> {
        let cfg_j = JointConfig::new(cfg.root, q.clone());
        let fk = forward_kinematics(model, &cfg_j)?;
        let rel = target_inv.compose(fk.pose(body_index));
        Ok(se3_log(&rel)?.stacked())
    };

    let mut q = cfg.q.clone();
    for j in 0..n {
        let orig = q[j];
        q[j] = orig + h;
        let plus = xi_at(&q)?;
        q[j] = orig - h;
        let minus = xi_at(&q)?;
        q[j] = orig;
        for r in 0..6 {
            jac[(r, j)] = (plus[r] - minus[r]) / (2.0 * h);
        }
    }
    Ok(jac)
}
