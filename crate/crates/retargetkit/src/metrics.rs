//! Trajectory quality and tracking-accuracy metrics.
//!
//! `quality_report` counts three per-frame defects in a robot trajectory:
//! joint jumps (any joint moving more than 0.5 rad in one step), self
//! collisions (any intersecting non-adjacent capsule pair, hands
//! excluded) and joint-limit proximity (any joint within 0.05 rad of a
//! bound). `tracking_errors` compares two trajectories over the same
//! model, once with per-frame root alignment and once in the world frame.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{capsule_distance, forward_kinematics, RobotModel, UpAxis};
use crate::lie::{Pose, Rotation};
use crate::motion::RobotTrajectory;
use crate::rep::RobotRepSequence;

/// A single-step joint change above this is a jump (rad).
pub const JOINT_JUMP_RAD: f64 = 0.5;
/// A joint at most this far from a bound counts as a limit frame (rad).
pub const LIMIT_MARGIN_RAD: f64 = 0.05;

/// Frames on which one defect occurred.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationStat {
    pub count: usize,
    /// Offending frame indices, ascending.
    pub frames: Vec<usize>,
    /// `count / frame_count`, as a fraction in [0, 1].
    pub percentage: f64,
}

impl ViolationStat {
    fn from_frames(frames: Vec<usize>, frame_count: usize) -> Self {
        let count = frames.len();
        ViolationStat {
            count,
            frames,
            percentage: count as f64 / frame_count as f64,
        }
    }
}

/// Per-trajectory defect counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityReport {
    pub frame_count: usize,
    pub joint_jump: ViolationStat,
    pub self_collision: ViolationStat,
    pub joint_limit: ViolationStat,
}

/// Counts jump, self-collision and limit-proximity frames.
///
/// Jumps compare consecutive frames, so frame 0 can never be a jump
/// frame. Self collision tests every capsule pair on distinct,
/// non-adjacent links where neither link is tagged as a hand; the
/// intersection test is strict (`distance < 0`), touching surfaces do
/// not count. Limit proximity is inclusive: a joint exactly 0.05 rad
/// from a bound (or past it) marks the frame.
pub fn quality_report(traj: &RobotTrajectory, model: &RobotModel) -> Result<QualityReport> {
    traj.check_model(model)?;
    if traj.frames.is_empty() {
        return Err(Error::EmptyInput(
            "cannot score an empty trajectory".to_string(),
        ));
    }
    let frame_count = traj.frames.len();

    let mut jump_frames = Vec::new();
    for t in 1..frame_count {
        let step = (&traj.frames[t].q - &traj.frames[t - 1].q).amax();
        if step > JOINT_JUMP_RAD {
            jump_frames.push(t);
        }
    }

    let limits = model.joint_limits();
    let mut limit_frames = Vec::new();
    for (t, cfg) in traj.frames.iter().enumerate() {
        let near = limits.iter().enumerate().any(|(j, (lo, hi))| {
            cfg.q[j] - lo <= LIMIT_MARGIN_RAD || hi - cfg.q[j] <= LIMIT_MARGIN_RAD
        });
        if near {
            limit_frames.push(t);
        }
    }

    // Capsule pairs eligible for the self-collision check: distinct,
    // non-adjacent links, hands excluded.
    let capsules: Vec<(usize, &crate::kinematics::Capsule)> = model
        .links()
        .iter()
        .enumerate()
        .flat_map(|(i, link)| link.capsules.iter().map(move |c| (i, c)))
        .collect();
    let mut pairs = Vec::new();
    for a in 0..capsules.len() {
        for b in (a + 1)..capsules.len() {
            let (la, ca) = capsules[a];
            let (lb, cb) = capsules[b];
            if la == lb || model.adjacent(la, lb) {
                continue;
            }
            if model.links()[la].is_hand || model.links()[lb].is_hand {
                continue;
            }
            pairs.push((la, ca, lb, cb));
        }
    }
    let mut collision_frames = Vec::new();
    if !pairs.is_empty() {
        for (t, cfg) in traj.frames.iter().enumerate() {
            let fk = forward_kinematics(model, cfg)?;
            let hit = pairs.iter().any(|&(la, ca, lb, cb)| {
                let wa = ca.transformed(fk.pose(la));
                let wb = cb.transformed(fk.pose(lb));
                capsule_distance(&wa, &wb) < 0.0
            });
            if hit {
                collision_frames.push(t);
            }
        }
    }

    Ok(QualityReport {
        frame_count,
        joint_jump: ViolationStat::from_frames(jump_frames, frame_count),
        self_collision: ViolationStat::from_frames(collision_frames, frame_count),
        joint_limit: ViolationStat::from_frames(limit_frames, frame_count),
    })
}

/// How body positions are expressed before the error norm is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    /// World frame, no alignment.
    None,
    /// Each frame's full root pose is removed.
    Root,
    /// Only the root's heading and translation are removed; pitch and
    /// roll differences still count.
    RootYaw,
}

/// Mean per-body position errors in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrackingErrors {
    /// Root-aligned mean error.
    pub mpjpe: f64,
    /// World-frame mean error.
    pub w_mpjpe: f64,
}

/// Rotation about the up axis that carries the world x direction onto
/// the heading of `r`'s x-axis. Identity when the x-axis points straight
/// up or down and the heading is undefined.
fn yaw_rotation(r: &Rotation, up: UpAxis) -> Rotation {
    let x = r.rotate(&Vector3::x());
    let (px, pz) = up.planar(&x);
    let norm = px.hypot(pz);
    if norm < 1e-9 {
        return Rotation::identity();
    }
    let (c, s) = match up {
        // R_z(yaw) maps x to (cos, sin, 0) in the (x, y) plane.
        UpAxis::Z => (px / norm, pz / norm),
        // R_y(yaw) maps x to (cos, 0, -sin): planar (x, z) = (cos, -sin).
        UpAxis::Y => (px / norm, -pz / norm),
    };
    let m = match up {
        UpAxis::Z => Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
        UpAxis::Y => Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c),
    };
    Rotation::from_matrix_unchecked(m)
}

fn alignment_pose(root: &Pose, alignment: Alignment, up: UpAxis) -> Pose {
    match alignment {
        Alignment::None => Pose::identity(),
        Alignment::Root => *root,
        Alignment::RootYaw => Pose::new(yaw_rotation(&root.rotation, up), root.translation),
    }
}

/// Mean over frames and non-base links of the distance between predicted
/// and reference link origins, after removing each trajectory's own
/// per-frame alignment pose.
pub fn mean_body_error(
    predicted: &RobotTrajectory,
    reference: &RobotTrajectory,
    model: &RobotModel,
    alignment: Alignment,
) -> Result<f64> {
    predicted.check_model(model)?;
    reference.check_model(model)?;
    if predicted.frames.len() != reference.frames.len() {
        return Err(Error::DimensionMismatch {
            context: "tracking comparison frame count".to_string(),
            expected: reference.frames.len(),
            actual: predicted.frames.len(),
        });
    }
    if predicted.frames.is_empty() {
        return Err(Error::EmptyInput(
            "cannot compare empty trajectories".to_string(),
        ));
    }
    let base = model.base_index();
    let bodies: Vec<usize> = (0..model.links().len()).filter(|&i| i != base).collect();
    if bodies.is_empty() {
        return Err(Error::EmptyInput(
            "model has no non-base links to compare".to_string(),
        ));
    }
    let mut total = 0.0;
    for (p_cfg, r_cfg) in predicted.frames.iter().zip(&reference.frames) {
        let fk_p = forward_kinematics(model, p_cfg)?;
        let fk_r = forward_kinematics(model, r_cfg)?;
        let inv_p = alignment_pose(fk_p.pose(base), alignment, model.up_axis).inverse();
        let inv_r = alignment_pose(fk_r.pose(base), alignment, model.up_axis).inverse();
        for &i in &bodies {
            let a = inv_p.transform_point(&fk_p.pose(i).translation);
            let b = inv_r.transform_point(&fk_r.pose(i).translation);
            total += (a - b).norm();
        }
    }
    Ok(total / (predicted.frames.len() * bodies.len()) as f64)
}

/// Root-aligned and world-frame mean body-position errors.
pub fn tracking_errors(
    predicted: &RobotTrajectory,
    reference: &RobotTrajectory,
    model: &RobotModel,
) -> Result<TrackingErrors> {
    Ok(TrackingErrors {
        mpjpe: mean_body_error(predicted, reference, model, Alignment::Root)?,
        w_mpjpe: mean_body_error(predicted, reference, model, Alignment::None)?,
    })
}

/// Sum over frames of the elementwise absolute difference between two
/// robot representations.
pub fn rep_l1_distance(a: &RobotRepSequence, b: &RobotRepSequence) -> Result<f64> {
    if a.frames.len() != b.frames.len() {
        return Err(Error::DimensionMismatch {
            context: "rep sequence length".to_string(),
            expected: a.frames.len(),
            actual: b.frames.len(),
        });
    }
    let mut total = 0.0;
    for (t, (fa, fb)) in a.frames.iter().zip(&b.frames).enumerate() {
        let va = fa.flat();
        let vb = fb.flat();
        if va.len() != vb.len() {
            return Err(Error::DimensionMismatch {
                context: format!("rep frame {t}"),
                expected: va.len(),
                actual: vb.len(),
            });
        }
        total += va.iter().zip(&vb).map(|(x, y)| (x - y).abs()).sum::<f64>();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cepr::{filter_robot_sequence, FilterConfig};
    use crate::fixtures;
    use crate::kinematics::{load_model, JointConfig};
    use crate::lie::so3_exp;
    use crate::motion::RobotTrajectory;
    use crate::rep::robot_traj_to_rep;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn biped_traj(qs: Vec<DVector<f64>>) -> RobotTrajectory {
        let model = fixtures::biped();
        RobotTrajectory {
            fps: 30.0,
            joint_names: model.joint_names(),
            frames: qs
                .into_iter()
                .map(|q| {
                    JointConfig::new(
                        Pose::from_translation(Vector3::new(0.0, 0.0, 0.85)),
                        q,
                    )
                })
                .collect(),
        }
    }

    #[test]
    fn clean_pose_has_zero_counts() {
        let model = fixtures::biped();
        let traj = biped_traj(vec![DVector::zeros(model.dof()); 5]);
        let report = quality_report(&traj, &model).unwrap();
        assert_eq!(report.frame_count, 5);
        assert_eq!(report.joint_jump.count, 0);
        assert_eq!(report.self_collision.count, 0);
        assert_eq!(report.joint_limit.count, 0);
        assert_eq!(report.joint_jump.percentage, 0.0);
    }

    #[test]
    fn single_step_jump_counted_once() {
        let model = fixtures::biped();
        let mut qs = vec![DVector::zeros(model.dof()); 6];
        for q in qs.iter_mut().skip(3) {
            q[0] = 0.65;
        }
        let traj = biped_traj(qs);
        let report = quality_report(&traj, &model).unwrap();
        assert_eq!(report.joint_jump.count, 1);
        assert_eq!(report.joint_jump.frames, vec![3]);
        assert!((report.joint_jump.percentage - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn half_radian_step_is_not_a_jump() {
        // The threshold is strict: exactly 0.5 rad does not count.
        let model = fixtures::biped();
        let mut qs = vec![DVector::zeros(model.dof()); 3];
        qs[1][0] = 0.5;
        qs[2][0] = 0.5;
        let report = quality_report(&biped_traj(qs), &model).unwrap();
        assert_eq!(report.joint_jump.count, 0);
    }

    #[test]
    fn limit_proximity_counted_per_frame() {
        // Torso bound is 1.5; holding 1.47 is 0.03 from it, inside the
        // 0.05 margin, for the first ten frames only.
        let model = fixtures::biped();
        let mut qs = vec![DVector::zeros(model.dof()); 15];
        for q in qs.iter_mut().take(10) {
            q[0] = 1.47;
        }
        let report = quality_report(&biped_traj(qs), &model).unwrap();
        assert_eq!(report.joint_limit.count, 10);
        assert_eq!(report.joint_limit.frames, (0..10).collect::<Vec<_>>());

        // Past the bound also counts.
        let mut beyond = vec![DVector::zeros(model.dof()); 2];
        beyond[0][0] = 1.6;
        let report = quality_report(&biped_traj(beyond), &model).unwrap();
        assert_eq!(report.joint_limit.frames, vec![0]);
    }

    #[test]
    fn forearm_torso_contact_counted() {
        let model = fixtures::biped();
        let mut qs = vec![DVector::zeros(model.dof()); 5];
        qs[2][1] = -1.4;
        qs[3][1] = -1.4;
        let report = quality_report(&biped_traj(qs), &model).unwrap();
        assert_eq!(report.self_collision.frames, vec![2, 3]);
        assert!((report.self_collision.percentage - 0.4).abs() < 1e-15);
    }

    /// A base capsule and an overlapping capsule two links away; the outer
    /// link is optionally tagged as a hand.
    fn overlap_model(tag: &str) -> RobotModel {
        let doc = format!(
            r#"{{
          "name": "overlap",
          "up_axis": "z",
          "links": [
            {{"name": "base", "parent": null, "joint": {{"type": "fixed"}},
              "mass": 1.0,
              "capsules": [{{"p0": [0, 0, 0], "p1": [0.1, 0, 0], "radius": 0.05}}]}},
            {{"name": "mid", "parent": "base",
              "joint": {{"type": "revolute", "axis": [0, 0, 1],
                        "limits": {{"lower": -1.0, "upper": 1.0, "velocity": 10.0}}}},
              "mass": 1.0}},
            {{"name": "end", "parent": "mid",
              "joint": {{"type": "fixed"}},
              "mass": 1.0, "tags": [{tag}],
              "capsules": [{{"p0": [0, 0, 0], "p1": [0, 0.1, 0], "radius": 0.05}}]}}
          ]
        }}"#
        );
        load_model(&doc).unwrap()
    }

    #[test]
    fn hand_contacts_are_excluded() {
        let traj = |model: &RobotModel| RobotTrajectory {
            fps: 30.0,
            joint_names: model.joint_names(),
            frames: vec![JointConfig::new(Pose::identity(), DVector::zeros(1)); 3],
        };
        let tagged = overlap_model("\"hand\"");
        let report = quality_report(&traj(&tagged), &tagged).unwrap();
        assert_eq!(report.self_collision.count, 0);

        let untagged = overlap_model("");
        let report = quality_report(&traj(&untagged), &untagged).unwrap();
        assert_eq!(report.self_collision.count, 3);
    }

    fn smooth_traj(model: &RobotModel, n: usize, shift: Vector3<f64>) -> RobotTrajectory {
        let frames = (0..n)
            .map(|t| {
                let s = t as f64 / 30.0;
                let root = Pose::new(
                    so3_exp(&(Vector3::z() * (0.3 * s))).unwrap(),
                    Vector3::new(0.4 * s, 0.0, 0.85) + shift,
                );
                let q = DVector::from_vec(vec![
                    0.2 * s.sin(),
                    0.3 * (2.0 * s).cos() - 0.3,
                    -0.5,
                    0.2,
                    -0.4,
                    -0.2,
                    -0.3,
                ]);
                JointConfig::new(root, q)
            })
            .collect();
        RobotTrajectory {
            fps: 30.0,
            joint_names: model.joint_names(),
            frames,
        }
    }

    #[test]
    fn identical_trajectories_have_zero_errors() {
        let model = fixtures::biped();
        let traj = smooth_traj(&model, 6, Vector3::zeros());
        let errors = tracking_errors(&traj, &traj, &model).unwrap();
        assert_eq!(errors.mpjpe, 0.0);
        assert_eq!(errors.w_mpjpe, 0.0);
    }

    #[test]
    fn root_alignment_removes_world_shift() {
        let model = fixtures::biped();
        let reference = smooth_traj(&model, 6, Vector3::zeros());
        let predicted = smooth_traj(&model, 6, Vector3::new(0.05, 0.0, 0.0));
        let errors = tracking_errors(&predicted, &reference, &model).unwrap();
        assert!(errors.mpjpe.abs() < 1e-12);
        assert!((errors.w_mpjpe - 0.05).abs() < 1e-12);
    }

    #[test]
    fn yaw_alignment_distinguishes_heading_from_tilt() {
        let model = fixtures::biped();
        let reference = smooth_traj(&model, 4, Vector3::zeros());

        // A pure heading change is removed by both root and root-yaw
        // alignment.
        let mut turned = reference.clone();
        let spin = so3_exp(&(Vector3::z() * 0.7)).unwrap();
        for cfg in &mut turned.frames {
            cfg.root = Pose::new(
                spin.compose(&cfg.root.rotation),
                spin.rotate(&cfg.root.translation),
            );
        }
        assert!(mean_body_error(&turned, &reference, &model, Alignment::Root).unwrap() < 1e-12);
        assert!(
            mean_body_error(&turned, &reference, &model, Alignment::RootYaw).unwrap() < 1e-12
        );

        // A tilt survives yaw alignment but not full root alignment.
        let mut tilted = reference.clone();
        let tilt = so3_exp(&(Vector3::x() * 0.3)).unwrap();
        for cfg in &mut tilted.frames {
            cfg.root = Pose::new(tilt.compose(&cfg.root.rotation), cfg.root.translation);
        }
        assert!(mean_body_error(&tilted, &reference, &model, Alignment::Root).unwrap() < 1e-12);
        assert!(
            mean_body_error(&tilted, &reference, &model, Alignment::RootYaw).unwrap() > 1e-3
        );
    }

    #[test]
    fn tracking_error_is_symmetric() {
        let model = fixtures::biped();
        let a = smooth_traj(&model, 5, Vector3::zeros());
        let mut b = smooth_traj(&model, 5, Vector3::new(0.02, -0.01, 0.0));
        for cfg in &mut b.frames {
            cfg.q[2] += 0.1;
        }
        let ab = tracking_errors(&a, &b, &model).unwrap();
        let ba = tracking_errors(&b, &a, &model).unwrap();
        assert_eq!(ab.mpjpe, ba.mpjpe);
        assert_eq!(ab.w_mpjpe, ba.w_mpjpe);
        assert!(ab.mpjpe > 0.0 && ab.w_mpjpe > 0.0);
    }

    #[test]
    fn frame_count_mismatch_rejected() {
        let model = fixtures::biped();
        let a = smooth_traj(&model, 5, Vector3::zeros());
        let b = smooth_traj(&model, 4, Vector3::zeros());
        assert!(matches!(
            tracking_errors(&a, &b, &model),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rep_distance_basics() {
        let model = fixtures::biped();
        let traj = smooth_traj(&model, 4, Vector3::zeros());
        let reps = robot_traj_to_rep(&traj, &model).unwrap();
        assert_eq!(rep_l1_distance(&reps, &reps).unwrap(), 0.0);

        // A unit difference in a single field adds exactly one.
        let mut bumped = reps.clone();
        bumped.frames[2].q[3] += 1.0;
        assert!((rep_l1_distance(&reps, &bumped).unwrap() - 1.0).abs() < 1e-12);

        // Differences accumulate over frames.
        let mut two = reps.clone();
        two.frames[0].r_x += 0.5;
        two.frames[1].root_height += 0.5;
        assert!((rep_l1_distance(&reps, &two).unwrap() - 1.0).abs() < 1e-12);

        let mut short = reps.clone();
        short.frames.pop();
        assert!(rep_l1_distance(&reps, &short).is_err());
    }

    #[test]
    fn rep_distance_triangle_inequality() {
        let model = fixtures::planar2();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut random_reps = || {
            let frames = (0..5)
                .map(|_| {
                    JointConfig::new(
                        Pose::identity(),
                        DVector::from_vec(vec![
                            rng.gen_range(-2.0..2.0),
                            rng.gen_range(-2.0..2.0),
                        ]),
                    )
                })
                .collect();
            let traj = RobotTrajectory {
                fps: 30.0,
                joint_names: model.joint_names(),
                frames,
            };
            robot_traj_to_rep(&traj, &model).unwrap()
        };
        for _ in 0..20 {
            let (a, b, c) = (random_reps(), random_reps(), random_reps());
            let ac = rep_l1_distance(&a, &c).unwrap();
            let ab = rep_l1_distance(&a, &b).unwrap();
            let bc = rep_l1_distance(&b, &c).unwrap();
            assert!(ac <= ab + bc + 1e-12);
        }
    }

    #[test]
    fn jump_count_agrees_with_velocity_filter() {
        // With per-joint speed limits of 0.5·fps the filter's velocity
        // check and the jump metric draw the same line.
        let model = fixtures::planar2();
        let fps = 30.0;
        let config = FilterConfig {
            qdot_max: Some(vec![0.5 * fps; model.dof()]),
            ..FilterConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..30 {
            let mut q = DVector::from_vec(vec![0.0, 0.0]);
            let mut frames = vec![JointConfig::new(Pose::identity(), q.clone())];
            for _ in 0..8 {
                for j in 0..2 {
                    q[j] = (q[j] + rng.gen_range(-0.7..0.7)).clamp(-2.9, 2.9);
                }
                frames.push(JointConfig::new(Pose::identity(), q.clone()));
            }
            let traj = RobotTrajectory {
                fps,
                joint_names: model.joint_names(),
                frames,
            };
            let report = quality_report(&traj, &model).unwrap();
            let filter = filter_robot_sequence(&traj, &model, &config).unwrap();
            let speeding = filter.reasons.iter().any(|r| r.check == "velocity");
            assert_eq!(report.joint_jump.count > 0, speeding);
        }
    }
}
