//! Retargeting costs, their derivatives and the curvature certifier.
//!
//! Two cost layers live here. [`frame_cost`] is the tracking objective a
//! whole frame is solved against: a sum over mapped body pairs of squared
//! rotation-log errors plus, for end-effector pairs, squared Euclidean
//! position errors (no 1/2 factor). The surrogate family
//! ([`surrogate_cost`] / [`surrogate_gradient`] / [`surrogate_hessian`])
//! analyzes a single body against a single target as `1/2 r^T W r` and is
//! the object the curvature analysis speaks about.
//!
//! The surrogate residual depends on the target flavor:
//!
//! * [`SurrogateTarget::Pose`]: the full relative-pose log
//!   `xi = log(T*^-1 T(q))`, six coordinates, weights `(w_rot x3, w_pos x3)`;
//! * [`SurrogateTarget::Position`]: the Euclidean position error, which is
//!   the translational reduction used by the extended-arm analysis;
//! * [`SurrogateTarget::Rotation`]: the rotation-log error, the pure
//!   rotational reduction.
//!
//! The Hessian splits as `J^T W J` (Gauss-Newton, positive semidefinite)
//! plus the residual-curvature correction `sum_a (W r)_a Hess(r_a)`; indefinite
//! totals are exactly what [`certify_negative_curvature`] hunts for.

use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{forward_kinematics, JointConfig, RobotModel};
use crate::lie::{se3_log, so3_exp, so3_log, Pose, Rotation};

/// Central-difference step for residual Jacobians.
pub const GRADIENT_FD_STEP: f64 = 1e-6;

/// Central-difference step for second derivatives of the residual.
pub const HESSIAN_FD_STEP: f64 = 1e-4;

/// Threshold below which an eigenvalue counts as negative curvature.
pub const CURVATURE_TOL: f64 = 1e-6;

/// Weights on the rotational and translational residual blocks.
///
/// Non-negative, not both zero. A zero component selects the corresponding
/// reduction in the certifier (position-only or rotation-only analysis).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub w_rot: f64,
    pub w_pos: f64,
}

impl CostWeights {
    pub fn new(w_rot: f64, w_pos: f64) -> Result<Self> {
        if w_rot < 0.0 || w_pos < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "cost weights must be non-negative (got {w_rot}, {w_pos})"
            )));
        }
        if w_rot == 0.0 && w_pos == 0.0 {
            return Err(Error::InvalidParameter(
                "at least one cost weight must be positive".to_string(),
            ));
        }
        Ok(CostWeights { w_rot, w_pos })
    }
}

/// One tracked body pair: a source body drives a robot body.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingPair {
    pub human_body: String,
    pub robot_body: String,
    /// Rotation-error weight for this pair.
    #[serde(default = "default_weight")]
    pub w_rot: f64,
    /// Position-error weight; only used when `is_end_effector` is set.
    #[serde(default = "default_weight")]
    pub w_pos: f64,
    /// End-effector pairs additionally track position.
    #[serde(default)]
    pub is_end_effector: bool,
}

fn default_weight() -> f64 {
    1.0
}

/// The body correspondence used for retargeting, plus per-robot-body scale
/// factors applied to target positions (limb-length ratio compensation).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingConfig {
    pub pairs: Vec<MappingPair>,
    /// Keyed by robot body name; entries default to 1.0.
    #[serde(default)]
    pub scales: std::collections::BTreeMap<String, f64>,
}

impl MappingConfig {
    pub fn from_document(document: &str) -> Result<Self> {
        let cfg: MappingConfig =
            serde_json::from_str(document).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pairs.is_empty() {
            return Err(Error::EmptyInput("mapping has no pairs".to_string()));
        }
        for pair in &self.pairs {
            if pair.w_rot < 0.0 || pair.w_pos < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "mapping pair {} -> {} has a negative weight",
                    pair.human_body, pair.robot_body
                )));
            }
        }
        for (body, s) in &self.scales {
            if !(*s > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "scale for `{body}` must be positive (got {s})"
                )));
            }
        }
        Ok(())
    }

    /// Scale factor for a robot body (1.0 when unlisted).
    pub fn scale(&self, robot_body: &str) -> f64 {
        self.scales.get(robot_body).copied().unwrap_or(1.0)
    }
}

/// Target pose for one source body in one frame.
#[derive(Debug, Clone, Copy)]
pub struct BodyTarget {
    pub position: Vector3<f64>,
    pub rotation: Rotation,
}

/// Targets for one frame, keyed by source (human) body name.
pub type FrameTargets = std::collections::HashMap<String, BodyTarget>;

/// The per-frame tracking cost:
/// `sum_pairs w_rot |log(R_t^T R_b)|^2 + sum_ee w_pos |p_t - p_b|^2`.
///
/// Every mapped pair needs a target; rotation errors at the log branch
/// boundary propagate as errors.
pub fn frame_cost(
    model: &RobotModel,
    cfg: &JointConfig,
    targets: &FrameTargets,
    mapping: &MappingConfig,
) -> Result<f64> {
    let fk = forward_kinematics(model, cfg)?;
    let mut cost = 0.0;
    for pair in &mapping.pairs {
        let target = targets
            .get(&pair.human_body)
            .ok_or_else(|| Error::MissingTarget(pair.human_body.clone()))?;
        let body = fk
            .get(&pair.robot_body)
            .ok_or_else(|| Error::UnknownBody(pair.robot_body.clone()))?;
        if pair.w_rot > 0.0 {
            let rel = target.rotation.transpose().compose(&body.rotation);
            cost += pair.w_rot * so3_log(&rel)?.norm_squared();
        }
        if pair.is_end_effector && pair.w_pos > 0.0 {
            cost += pair.w_pos * (target.position - body.translation).norm_squared();
        }
    }
    Ok(cost)
}

/// Target flavor for the single-body surrogate analysis. See the module
/// docs for what each residual is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurrogateTarget {
    Pose(Pose),
    Position(Vector3<f64>),
    Rotation(Rotation),
}

impl SurrogateTarget {
    fn residual_dim(&self) -> usize {
        match self {
            SurrogateTarget::Pose(_) => 6,
            SurrogateTarget::Position(_) | SurrogateTarget::Rotation(_) => 3,
        }
    }

    /// Per-coordinate weight vector for `1/2 r^T W r`.
    fn weight_vector(&self, weights: &CostWeights) -> DVector<f64> {
        match self {
            SurrogateTarget::Pose(_) => DVector::from_vec(vec![
                weights.w_rot,
                weights.w_rot,
                weights.w_rot,
                weights.w_pos,
                weights.w_pos,
                weights.w_pos,
            ]),
            SurrogateTarget::Position(_) => DVector::from_element(3, weights.w_pos),
            SurrogateTarget::Rotation(_) => DVector::from_element(3, weights.w_rot),
        }
    }
}

fn residual(
    model: &RobotModel,
    root: &Pose,
    q: &DVector<f64>,
    body_index: usize,
    target: &SurrogateTarget,
) -> Result<DVector<f64>> {
    let fk = forward_kinematics(model, &JointConfig::new(*root, q.clone()))?;
    let body = fk.pose(body_index);
    Ok(match target {
        SurrogateTarget::Pose(t) => {
            let xi = se3_log(&t.inverse().compose(body))?;
            DVector::from_row_slice(&xi.stacked())
        }
        SurrogateTarget::Position(p) => DVector::from_column_slice(
            (body.translation - p).as_slice(),
        ),
        SurrogateTarget::Rotation(r) => DVector::from_column_slice(
            so3_log(&r.transpose().compose(&body.rotation))?.as_slice(),
        ),
    })
}

/// Central-difference Jacobian of the residual with respect to the joint
/// angles.
fn residual_jacobian(
    model: &RobotModel,
    cfg: &JointConfig,
    body_index: usize,
    target: &SurrogateTarget,
    h: f64,
) -> Result<DMatrix<f64>> {
    let n = model.dof();
    let dim = target.residual_dim();
    let mut jac = DMatrix::zeros(dim, n);
    let mut q = cfg.q.clone();
    for j in 0..n {
        let orig = q[j];
        q[j] = orig + h;
        let plus = residual(model, &cfg.root, &q, body_index, target)?;
        q[j] = orig - h;
        let minus = residual(model, &cfg.root, &q, body_index, target)?;
        q[j] = orig;
        for r in 0..dim {
            jac[(r, j)] = (plus[r] - minus[r]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// The single-body surrogate cost `1/2 r^T W r`.
pub fn surrogate_cost(
    model: &RobotModel,
    cfg: &JointConfig,
    body: &str,
    target: &SurrogateTarget,
    weights: &CostWeights,
) -> Result<f64> {
    let body_index = model.link_index(body)?;
    let r = residual(model, &cfg.root, &cfg.q, body_index, target)?;
    let w = target.weight_vector(weights);
    Ok(0.5 * r.iter().zip(w.iter()).map(|(ri, wi)| wi * ri * ri).sum::<f64>())
}

/// Gradient of the surrogate cost over the joint angles: `J^T W r` with the
/// residual Jacobian from central differences ([`GRADIENT_FD_STEP`]).
pub fn surrogate_gradient(
    model: &RobotModel,
    cfg: &JointConfig,
    body: &str,
    target: &SurrogateTarget,
    weights: &CostWeights,
) -> Result<DVector<f64>> {
    let body_index = model.link_index(body)?;
    let r = residual(model, &cfg.root, &cfg.q, body_index, target)?;
    let jac = residual_jacobian(model, cfg, body_index, target, GRADIENT_FD_STEP)?;
    let w = target.weight_vector(weights);
    Ok(jac.transpose() * DVector::from_iterator(r.len(), r.iter().zip(w.iter()).map(|(a, b)| a * b)))
}

/// The surrogate Hessian split into its Gauss-Newton part and the
/// residual-curvature correction. `total = gauss_newton + curvature`,
/// symmetrized.
#[derive(Debug, Clone)]
pub struct HessianBreakdown {
    /// `J^T W J`; positive semidefinite by construction.
    pub gauss_newton: DMatrix<f64>,
    /// `sum_a (W r)_a Hess(r_a)`; carries all the indefiniteness.
    pub curvature: DMatrix<f64>,
    pub total: DMatrix<f64>,
}

/// Hessian of the surrogate cost over the joint angles.
///
/// The Gauss-Newton block uses the residual Jacobian at
/// [`GRADIENT_FD_STEP`]; each residual-coordinate Hessian comes from a
/// central difference of Jacobian columns at [`HESSIAN_FD_STEP`] and is
/// symmetrized before weighting.
pub fn surrogate_hessian(
    model: &RobotModel,
    cfg: &JointConfig,
    body: &str,
    target: &SurrogateTarget,
    weights: &CostWeights,
) -> Result<HessianBreakdown> {
    surrogate_hessian_with_steps(model, cfg, body, target, weights, GRADIENT_FD_STEP, HESSIAN_FD_STEP)
}

/// [`surrogate_hessian`] with explicit steps, used by the certifier to
/// re-verify candidates at halved resolution.
pub fn surrogate_hessian_with_steps(
    model: &RobotModel,
    cfg: &JointConfig,
    body: &str,
    target: &SurrogateTarget,
    weights: &CostWeights,
    h_jac: f64,
    h_hess: f64,
) -> Result<HessianBreakdown> {
    let body_index = model.link_index(body)?;
    let n = model.dof();
    let dim = target.residual_dim();
    let w = target.weight_vector(weights);

    let r = residual(model, &cfg.root, &cfg.q, body_index, target)?;
    let jac = residual_jacobian(model, cfg, body_index, target, h_jac)?;

    let mut gauss_newton = DMatrix::zeros(n, n);
    for a in 0..dim {
        let row = jac.row(a);
        for i in 0..n {
            for j in 0..n {
                gauss_newton[(i, j)] += w[a] * row[i] * row[j];
            }
        }
    }

    // Second derivatives of each residual coordinate: central difference of
    // Jacobian columns, d2r_a/(dq_i dq_j) ~ (J(q + h e_j) - J(q - h e_j))[a,i] / 2h,
    // then symmetrized.
    let mut curvature = DMatrix::zeros(n, n);
    let mut cfg_j = cfg.clone();
    for j in 0..n {
        let orig = cfg_j.q[j];
        cfg_j.q[j] = orig + h_hess;
        let jac_plus = residual_jacobian(model, &cfg_j, body_index, target, h_jac)?;
        cfg_j.q[j] = orig - h_hess;
        let jac_minus = residual_jacobian(model, &cfg_j, body_index, target, h_jac)?;
        cfg_j.q[j] = orig;
        for a in 0..dim {
            let wr = w[a] * r[a];
            if wr == 0.0 {
                continue;
            }
            for i in 0..n {
                let second = (jac_plus[(a, i)] - jac_minus[(a, i)]) / (2.0 * h_hess);
                // Accumulate both (i, j) and (j, i) halves; dividing by two
                // symmetrizes each coordinate Hessian.
                curvature[(i, j)] += 0.5 * wr * second;
                curvature[(j, i)] += 0.5 * wr * second;
            }
        }
    }

    let total = 0.5 * (&gauss_newton + &curvature + (&gauss_newton + &curvature).transpose());
    Ok(HessianBreakdown {
        gauss_newton,
        curvature,
        total,
    })
}

/// Smallest eigenvalue of a symmetric matrix and its eigenvector.
///
/// Deterministic: nalgebra's symmetric eigendecomposition (tridiagonalize +
/// QL) with ties broken by lowest index and the eigenvector sign fixed so
/// its largest-magnitude component is positive.
pub fn min_curvature(h: &DMatrix<f64>) -> (f64, DVector<f64>) {
    assert_eq!(h.nrows(), h.ncols(), "min_curvature needs a square matrix");
    let eig = nalgebra::SymmetricEigen::new(h.clone());
    let mut min_idx = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] < eig.eigenvalues[min_idx] {
            min_idx = i;
        }
    }
    let mut v: DVector<f64> = eig.eigenvectors.column(min_idx).into();
    let mut lead = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[lead].abs() {
            lead = i;
        }
    }
    if v[lead] < 0.0 {
        v.neg_mut();
    }
    (eig.eigenvalues[min_idx], v)
}

/// Search box for the curvature certifier.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurvatureSearch {
    pub seed: u64,
    /// Random samples tried after the deterministic probes.
    pub n_samples: usize,
    /// Per-joint angle ranges; empty means the model's joint limits.
    pub config_box: Vec<(f64, f64)>,
    /// Axis-aligned box for sampled target positions.
    pub target_position_box: [(f64, f64); 3],
    /// Relative-rotation angle range for sampled target rotations.
    pub target_rotation_angle: (f64, f64),
}

impl Default for CurvatureSearch {
    fn default() -> Self {
        CurvatureSearch {
            seed: 0,
            n_samples: 200,
            config_box: Vec::new(),
            target_position_box: [(-2.0, 2.0), (-2.0, 2.0), (-2.0, 2.0)],
            target_rotation_angle: (1.6, 3.0),
        }
    }
}

/// A certified negative-curvature point of the surrogate cost.
#[derive(Debug, Clone)]
pub struct CurvatureCertificate {
    pub body: String,
    pub config: JointConfig,
    pub target: SurrogateTarget,
    /// Smallest eigenvalue of the total Hessian at the certified point.
    pub min_eigenvalue: f64,
    /// Unit direction realizing the negative curvature.
    pub direction: DVector<f64>,
    /// `direction^T H direction`; negative by certification.
    pub quadratic_form: f64,
}

/// Searches for a configuration/target pair at which the surrogate Hessian
/// has an eigenvalue below `-`[`CURVATURE_TOL`].
///
/// Deterministic probes run first: the zero-angle translational probes with
/// the target placed at the interior midpoint and at 1.5x of the body ray
/// (both variants are always tried), then rotation-only probes offsetting
/// the body orientation by 2.5 rad about each coordinate axis. Sampled
/// candidates follow, drawn from a ChaCha8 stream seeded by `search.seed`.
/// A zero weight component restricts candidates to the matching reduction.
///
/// Every candidate certificate is re-verified through the direct quadratic
/// form and through a second Hessian at halved difference steps before it is
/// returned; candidates failing re-verification are skipped, and `None`
/// means the search budget ran out.
pub fn certify_negative_curvature(
    model: &RobotModel,
    body: &str,
    weights: &CostWeights,
    search: &CurvatureSearch,
) -> Result<Option<CurvatureCertificate>> {
    if model.dof() < 2 {
        return Err(Error::InvalidParameter(format!(
            "curvature certification needs at least 2 joints (model has {})",
            model.dof()
        )));
    }
    let body_index = model.link_index(body)?;
    let limits = model.joint_limits();
    let boxes: Vec<(f64, f64)> = if search.config_box.is_empty() {
        limits.clone()
    } else {
        if search.config_box.len() != model.dof() {
            return Err(Error::DimensionMismatch {
                context: "curvature search config_box".to_string(),
                expected: model.dof(),
                actual: search.config_box.len(),
            });
        }
        search.config_box.clone()
    };

    let mut candidates: Vec<(JointConfig, SurrogateTarget)> = Vec::new();

    // Deterministic probes at the mid-range configuration.
    let q0 = model.mid_range_q();
    let cfg0 = JointConfig::new(Pose::identity(), q0);
    let fk0 = forward_kinematics(model, &cfg0)?;
    let body_pose0 = *fk0.pose(body_index);
    if weights.w_pos > 0.0 {
        let ray = body_pose0.translation - cfg0.root.translation;
        for scale in [0.5, 1.5] {
            let p = cfg0.root.translation + scale * ray;
            candidates.push((cfg0.clone(), SurrogateTarget::Position(p)));
        }
    }
    if weights.w_rot > 0.0 {
        for axis in [Vector3::x(), Vector3::y(), Vector3::z()] {
            let offset = so3_exp(&(-2.5 * axis))?;
            let target = body_pose0.rotation.compose(&offset);
            candidates.push((cfg0.clone(), SurrogateTarget::Rotation(target)));
        }
    }

    // Seeded random search.
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    for _ in 0..search.n_samples {
        let q = DVector::from_iterator(
            model.dof(),
            boxes.iter().map(|(lo, hi)| rng.gen_range(*lo..=*hi)),
        );
        let cfg = JointConfig::new(Pose::identity(), q);
        let position = Vector3::new(
            rng.gen_range(search.target_position_box[0].0..=search.target_position_box[0].1),
            rng.gen_range(search.target_position_box[1].0..=search.target_position_box[1].1),
            rng.gen_range(search.target_position_box[2].0..=search.target_position_box[2].1),
        );
        // Random rotation axis: rejection-sampled from the unit ball.
        let axis = loop {
            let v = Vector3::new(
                rng.gen_range(-1.0..=1.0),
                rng.gen_range(-1.0..=1.0),
                rng.gen_range(-1.0..=1.0),
            );
            let n = v.norm();
            if n > 1e-3 && n <= 1.0 {
                break v / n;
            }
        };
        let angle = rng.gen_range(search.target_rotation_angle.0..=search.target_rotation_angle.1);
        let rotation = so3_exp(&(angle.min(3.1) * axis))?;

        let target = if weights.w_pos == 0.0 {
            SurrogateTarget::Rotation(rotation)
        } else if weights.w_rot == 0.0 {
            SurrogateTarget::Position(position)
        } else {
            SurrogateTarget::Pose(Pose::new(rotation, position))
        };
        candidates.push((cfg, target));
    }

    for (cfg, target) in candidates {
        let breakdown = match surrogate_hessian(model, &cfg, body, &target, weights) {
            Ok(b) => b,
            // Candidates that wander onto the log branch boundary are not
            // certifiable points; skip them.
            Err(Error::NearPiSingularity { .. }) | Err(Error::AngleOutOfRange { .. }) => continue,
            Err(e) => return Err(e),
        };
        let (min_eigenvalue, direction) = min_curvature(&breakdown.total);
        if min_eigenvalue >= -CURVATURE_TOL {
            continue;
        }
        let quadratic_form = (direction.transpose() * &breakdown.total * &direction)[(0, 0)];
        if quadratic_form >= -CURVATURE_TOL {
            continue;
        }
        // Independent re-verification at halved steps.
        let half = match surrogate_hessian_with_steps(
            model,
            &cfg,
            body,
            &target,
            weights,
            GRADIENT_FD_STEP * 0.5,
            HESSIAN_FD_STEP * 0.5,
        ) {
            Ok(b) => b,
            Err(Error::NearPiSingularity { .. }) | Err(Error::AngleOutOfRange { .. }) => continue,
            Err(e) => return Err(e),
        };
        let half_form = (direction.transpose() * &half.total * &direction)[(0, 0)];
        if half_form >= -CURVATURE_TOL {
            continue;
        }
        return Ok(Some(CurvatureCertificate {
            body: body.to_string(),
            config: cfg,
            target,
            min_eigenvalue,
            direction,
            quadratic_form,
        }));
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn planar_cfg(a: f64, b: f64) -> JointConfig {
        JointConfig::new(Pose::identity(), DVector::from_vec(vec![a, b]))
    }

    fn ee_position_mapping() -> MappingConfig {
        MappingConfig {
            pairs: vec![MappingPair {
                human_body: "h_hand".to_string(),
                robot_body: "ee".to_string(),
                w_rot: 0.0,
                w_pos: 1.0,
                is_end_effector: true,
            }],
            scales: Default::default(),
        }
    }

    #[test]
    fn frame_cost_position_term_unhalved() {
        let m = fixtures::planar2();
        let mut targets = FrameTargets::new();
        targets.insert(
            "h_hand".to_string(),
            BodyTarget {
                position: Vector3::new(1.0, 0.0, 0.0),
                rotation: Rotation::identity(),
            },
        );
        // ee sits at (2,0,0); squared distance 1.0, no 1/2 factor.
        let cost = frame_cost(&m, &planar_cfg(0.0, 0.0), &targets, &ee_position_mapping()).unwrap();
        assert!((cost - 1.0).abs() < 1e-12);
    }

    #[test]
    fn frame_cost_rotation_term() {
        let m = fixtures::planar2();
        let mapping = MappingConfig {
            pairs: vec![MappingPair {
                human_body: "h".to_string(),
                robot_body: "ee".to_string(),
                w_rot: 1.0,
                w_pos: 0.0,
                is_end_effector: false,
            }],
            scales: Default::default(),
        };
        let mut targets = FrameTargets::new();
        targets.insert(
            "h".to_string(),
            BodyTarget {
                position: Vector3::zeros(),
                rotation: so3_exp(&Vector3::new(0.0, 0.0, 0.5)).unwrap(),
            },
        );
        // Body rotation at q=(0.3, 0) is Rz(0.3): log error 0.2, squared 0.04.
        let cost = frame_cost(&m, &planar_cfg(0.3, 0.0), &targets, &mapping).unwrap();
        assert!((cost - 0.04).abs() < 1e-12);
    }

    #[test]
    fn frame_cost_missing_target_errors() {
        let m = fixtures::planar2();
        let err = frame_cost(
            &m,
            &planar_cfg(0.0, 0.0),
            &FrameTargets::new(),
            &ee_position_mapping(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::MissingTarget(_)));
    }

    #[test]
    fn surrogate_cost_pose_matches_manual_log() {
        let m = fixtures::planar2();
        let cfg = planar_cfg(0.6, -0.4);
        let target = Pose::new(
            so3_exp(&Vector3::new(0.2, -0.1, 0.8)).unwrap(),
            Vector3::new(0.9, 0.5, 0.2),
        );
        let weights = CostWeights::new(2.0, 3.0).unwrap();
        let cost = surrogate_cost(&m, &cfg, "ee", &SurrogateTarget::Pose(target), &weights).unwrap();

        let fk = forward_kinematics(&m, &cfg).unwrap();
        let xi = se3_log(&target.inverse().compose(fk.get("ee").unwrap())).unwrap();
        let manual = 0.5 * (2.0 * xi.omega.norm_squared() + 3.0 * xi.v.norm_squared());
        assert!((cost - manual).abs() < 1e-14);
    }

    /// Central-difference gradient of the surrogate cost itself; oracle for
    /// the `J^T W r` path.
    fn fd_gradient(
        m: &RobotModel,
        cfg: &JointConfig,
        body: &str,
        target: &SurrogateTarget,
        w: &CostWeights,
    ) -> DVector<f64> {
        let h = 1e-6;
        let mut g = DVector::zeros(m.dof());
        let mut c = cfg.clone();
        for j in 0..m.dof() {
            let orig = c.q[j];
            c.q[j] = orig + h;
            let plus = surrogate_cost(m, &c, body, target, w).unwrap();
            c.q[j] = orig - h;
            let minus = surrogate_cost(m, &c, body, target, w).unwrap();
            c.q[j] = orig;
            g[j] = (plus - minus) / (2.0 * h);
        }
        g
    }

    #[test]
    fn gradient_matches_fd_oracle() {
        let m = fixtures::planar2();
        let cfg = planar_cfg(0.4, 0.9);
        let target = SurrogateTarget::Pose(Pose::new(
            so3_exp(&Vector3::new(0.0, 0.0, 1.2)).unwrap(),
            Vector3::new(0.5, 1.0, 0.0),
        ));
        let w = CostWeights::new(1.0, 1.0).unwrap();
        let g = surrogate_gradient(&m, &cfg, "ee", &target, &w).unwrap();
        let fd = fd_gradient(&m, &cfg, "ee", &target, &w);
        let rel = (&g - &fd).norm() / fd.norm().max(1.0);
        assert!(rel < 1e-6, "gradient rel err {rel}");
    }

    #[test]
    fn planar_position_hessian_reference() {
        // Extended arm, interior target: the classic indefinite case with
        // joint Hessian [[2,1],[1,0]] and min eigenvalue 1 - sqrt(2).
        let m = fixtures::planar2();
        let target = SurrogateTarget::Position(Vector3::new(1.0, 0.0, 0.0));
        let w = CostWeights::new(0.0, 1.0).unwrap();
        let b = surrogate_hessian(&m, &planar_cfg(0.0, 0.0), "ee", &target, &w).unwrap();
        let expect = [[2.0, 1.0], [1.0, 0.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!(
                    (b.total[(i, j)] - expect[i][j]).abs() < 1e-4,
                    "H[{i}{j}] = {}",
                    b.total[(i, j)]
                );
            }
        }
        let (lam, v) = min_curvature(&b.total);
        let gold = 1.0 - 2.0f64.sqrt();
        assert!((lam - gold).abs() < 1e-6, "min eig {lam} vs {gold}");
        // Eigenvector direction (-1, 1 + sqrt(2)) up to sign normalization;
        // the largest-magnitude component is made positive.
        assert!(v[1] > 0.0);
        assert!((v[0] / v[1] + 1.0 / (1.0 + 2.0f64.sqrt())).abs() < 1e-6);
    }

    #[test]
    fn gauss_newton_block_is_psd() {
        let m = fixtures::planar2();
        let target = SurrogateTarget::Pose(Pose::new(
            so3_exp(&Vector3::new(0.3, 0.2, -0.5)).unwrap(),
            Vector3::new(0.4, -0.3, 0.6),
        ));
        let w = CostWeights::new(1.5, 0.7).unwrap();
        let b = surrogate_hessian(&m, &planar_cfg(0.8, -0.5), "ee", &target, &w).unwrap();
        let (lam, _) = min_curvature(&b.gauss_newton);
        assert!(lam >= -1e-9, "GN min eig {lam}");
    }

    /// Full FD Hessian of the surrogate cost (second differences of the
    /// scalar), the independent oracle for the decomposition.
    fn fd_hessian(
        m: &RobotModel,
        cfg: &JointConfig,
        body: &str,
        target: &SurrogateTarget,
        w: &CostWeights,
    ) -> DMatrix<f64> {
        let h = 1e-4;
        let n = m.dof();
        let mut hess = DMatrix::zeros(n, n);
        let cost_at = |q: &DVector<f64>| {
            surrogate_cost(m, &JointConfig::new(cfg.root, q.clone()), body, target, w).unwrap()
        };
        for i in 0..n {
            for j in 0..n {
                let mut qpp = cfg.q.clone();
                qpp[i] += h;
                qpp[j] += h;
                let mut qpm = cfg.q.clone();
                qpm[i] += h;
                qpm[j] -= h;
                let mut qmp = cfg.q.clone();
                qmp[i] -= h;
                qmp[j] += h;
                let mut qmm = cfg.q.clone();
                qmm[i] -= h;
                qmm[j] -= h;
                hess[(i, j)] =
                    (cost_at(&qpp) - cost_at(&qpm) - cost_at(&qmp) + cost_at(&qmm)) / (4.0 * h * h);
            }
        }
        0.5 * (&hess + hess.transpose())
    }

    #[test]
    fn hessian_decomposition_matches_fd_oracle() {
        let m = fixtures::planar2();
        let cfg = planar_cfg(0.5, -1.1);
        let target = SurrogateTarget::Pose(Pose::new(
            so3_exp(&Vector3::new(-0.2, 0.4, 0.9)).unwrap(),
            Vector3::new(1.1, 0.2, -0.4),
        ));
        let w = CostWeights::new(1.0, 2.0).unwrap();
        let b = surrogate_hessian(&m, &cfg, "ee", &target, &w).unwrap();
        let fd = fd_hessian(&m, &cfg, "ee", &target, &w);
        let rel = (&b.total - &fd).norm() / fd.norm().max(1.0);
        assert!(rel < 1e-4, "decomposition rel err {rel}");
    }

    #[test]
    fn certifier_finds_planar_translational_saddle() {
        let m = fixtures::planar2();
        let w = CostWeights::new(0.0, 1.0).unwrap();
        let cert = certify_negative_curvature(&m, "ee", &w, &CurvatureSearch::default())
            .unwrap()
            .expect("planar2 must certify");
        // The first interior probe is the analytic saddle; its quadratic
        // form is 1 - sqrt(2) up to FD noise.
        assert!(cert.quadratic_form < -0.41 + 1e-6);
        assert!(matches!(cert.target, SurrogateTarget::Position(_)));
        assert!((cert.quadratic_form - cert.min_eigenvalue).abs() < 1e-9);
    }

    #[test]
    fn certifier_finds_wrist_rotational_curvature() {
        let m = fixtures::wrist2();
        let w = CostWeights::new(1.0, 0.0).unwrap();
        let cert = certify_negative_curvature(&m, "tool", &w, &CurvatureSearch::default())
            .unwrap()
            .expect("wrist2 must certify");
        assert!(cert.quadratic_form < -1e-6);
        assert!(matches!(cert.target, SurrogateTarget::Rotation(_)));
    }

    #[test]
    fn certifier_requires_two_joints() {
        let doc = r#"{"name":"one","up_axis":"z","links":[
            {"name":"base","parent":null,"joint":{"type":"fixed"}},
            {"name":"a","parent":"base","joint":{"type":"revolute","axis":[0,0,1],
             "limits":{"lower":-3,"upper":3,"velocity":1}}}]}"#;
        let m = crate::kinematics::load_model(doc).unwrap();
        let w = CostWeights::new(1.0, 1.0).unwrap();
        assert!(certify_negative_curvature(&m, "a", &w, &CurvatureSearch::default()).is_err());
    }

    #[test]
    fn weights_validation() {
        assert!(CostWeights::new(-1.0, 1.0).is_err());
        assert!(CostWeights::new(0.0, 0.0).is_err());
        assert!(CostWeights::new(0.0, 1.0).is_ok());
    }

    #[test]
    fn mapping_document_parsing() {
        let doc = r#"{"pairs": [
            {"human_body": "hand", "robot_body": "ee", "is_end_effector": true}],
            "scales": {"ee": 0.8}}"#;
        let cfg = MappingConfig::from_document(doc).unwrap();
        assert_eq!(cfg.pairs[0].w_rot, 1.0);
        assert_eq!(cfg.scale("ee"), 0.8);
        assert_eq!(cfg.scale("other"), 1.0);

        let bad = doc.replace("0.8", "-0.8");
        assert!(MappingConfig::from_document(&bad).is_err());
    }
}
