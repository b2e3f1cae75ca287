//! Per-frame damped Gauss-Newton IK and warm-started sequence retargeting.
//!
//! [`solve_frame`] minimizes the tracking cost of one frame over the joint
//! angles, optionally together with a 6-dof root block updated by an SE(3)
//! retraction. The residual is the weighted stack of per-pair rotation logs
//! and end-effector position errors, so the summed squares equal
//! [`frame_cost`](crate::objective::frame_cost). Steps use Levenberg
//! damping: solve `(2 J^T J + lambda I) s = -2 J^T r`, clamp each component,
//! accept only on strict cost decrease, and grow lambda otherwise. Joint
//! angles are projected onto their limits after every step, so outputs never
//! leave the feasible box.
//!
//! [`retarget_sequence`] runs the frame solver along a motion, warm-starting
//! each frame from the previous solution. Warm starting is what keeps the
//! output on one solution branch; with cold restarts the solver is free to
//! hop branches between frames, which shows up as joint jumps downstream.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{forward_kinematics, JointConfig, RobotModel};
use crate::lie::{se3_exp, so3_log, Pose, TangentVector};
use crate::motion::{MotionSequence, RobotTrajectory};
use crate::objective::{FrameTargets, MappingConfig};

/// Damping factor bounds for the Levenberg loop.
const LAMBDA_MIN: f64 = 1e-12;
const LAMBDA_MAX: f64 = 1e10;

/// Central-difference step for the residual Jacobian.
const JACOBIAN_STEP: f64 = 1e-6;

/// Solver settings. Defaults are the documented baseline; every test that
/// pins behavior spells out the fields it relies on.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Initial Levenberg damping.
    pub damping_init: f64,
    /// Multiplier applied to the damping after a rejected step.
    pub damping_growth: f64,
    /// Multiplier applied after an accepted step.
    pub damping_shrink: f64,
    /// Per-component step bound, radians (or tangent units for the root).
    pub step_clamp: f64,
    /// Terminate when the gradient infinity norm drops below this.
    pub gradient_tol: f64,
    /// Terminate when an accepted step decreases the cost by less than this.
    pub cost_tol: f64,
    /// Shrinks the feasible joint box on both sides during projection.
    pub limit_margin: f64,
    /// Include the floating root in the decision variables.
    pub optimize_root: bool,
    /// Start each frame from the previous frame's solution.
    pub warm_start: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 50,
            damping_init: 1e-3,
            damping_growth: 10.0,
            damping_shrink: 0.5,
            step_clamp: 0.2,
            gradient_tol: 1e-8,
            cost_tol: 1e-10,
            limit_margin: 0.0,
            optimize_root: true,
            warm_start: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positives = [
            ("damping_init", self.damping_init),
            ("damping_growth", self.damping_growth),
            ("damping_shrink", self.damping_shrink),
            ("step_clamp", self.step_clamp),
            ("gradient_tol", self.gradient_tol),
            ("cost_tol", self.cost_tol),
        ];
        for (name, value) in positives {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "solver {name} must be positive (got {value})"
                )));
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "solver max_iterations must be at least 1".to_string(),
            ));
        }
        if self.limit_margin < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "solver limit_margin must be non-negative (got {})",
                self.limit_margin
            )));
        }
        Ok(())
    }
}

/// Outcome of one frame solve.
#[derive(Debug, Clone, Copy)]
pub struct FrameDiagnostics {
    pub final_cost: f64,
    /// Outer iterations executed (0 when the initial point is stationary).
    pub iterations: usize,
    pub converged: bool,
    /// A joint sits on its (margin-shrunk) bound with the descent direction
    /// pointing out of the box.
    pub stalled_at_limit: bool,
}

/// Configuration plus diagnostics returned by [`solve_frame`].
#[derive(Debug, Clone)]
pub struct FrameSolution {
    pub cfg: JointConfig,
    pub diagnostics: FrameDiagnostics,
}

/// A retargeted trajectory with per-frame solver diagnostics.
#[derive(Debug, Clone)]
pub struct RetargetResult {
    pub trajectory: RobotTrajectory,
    pub per_frame: Vec<FrameDiagnostics>,
}

/// Mapping pairs resolved against a model, with weights prefetched.
struct ResolvedPair {
    human_body: String,
    body_index: usize,
    w_rot: f64,
    w_pos: f64,
    track_position: bool,
    scale: f64,
}

fn resolve_pairs(model: &RobotModel, mapping: &MappingConfig) -> Result<Vec<ResolvedPair>> {
    mapping.validate()?;
    mapping
        .pairs
        .iter()
        .map(|pair| {
            Ok(ResolvedPair {
                human_body: pair.human_body.clone(),
                body_index: model.link_index(&pair.robot_body)?,
                w_rot: pair.w_rot,
                w_pos: pair.w_pos,
                track_position: pair.is_end_effector,
                scale: mapping.scale(&pair.robot_body),
            })
        })
        .collect()
}

fn residual_dim(pairs: &[ResolvedPair]) -> usize {
    pairs
        .iter()
        .map(|p| {
            let rot = if p.w_rot > 0.0 { 3 } else { 0 };
            let pos = if p.track_position && p.w_pos > 0.0 { 3 } else { 0 };
            rot + pos
        })
        .sum()
}

/// Square-root-weighted residual stack; the squared norm equals the frame
/// cost. Scales are applied by the caller when building `targets`.
fn stack_residual(
    model: &RobotModel,
    cfg: &JointConfig,
    pairs: &[ResolvedPair],
    targets: &FrameTargets,
    out: &mut DVector<f64>,
) -> Result<()> {
    let fk = forward_kinematics(model, cfg)?;
    let mut row = 0;
    for pair in pairs {
        let target = targets
            .get(&pair.human_body)
            .ok_or_else(|| Error::MissingTarget(pair.human_body.clone()))?;
        let body = fk.pose(pair.body_index);
        if pair.w_rot > 0.0 {
            let log = so3_log(&target.rotation.transpose().compose(&body.rotation))?;
            let s = pair.w_rot.sqrt();
            for a in 0..3 {
                out[row + a] = s * log[a];
            }
            row += 3;
        }
        if pair.track_position && pair.w_pos > 0.0 {
            let s = pair.w_pos.sqrt();
            let d = body.translation - target.position;
            for a in 0..3 {
                out[row + a] = s * d[a];
            }
            row += 3;
        }
    }
    Ok(())
}

/// Applies a clamped step: root moves by right retraction, joints move
/// additively and are then projected onto the margin-shrunk limit box.
fn apply_step(
    cfg: &JointConfig,
    step: &DVector<f64>,
    optimize_root: bool,
    limits: &[(f64, f64)],
    margin: f64,
) -> JointConfig {
    let (root, joint_offset) = if optimize_root {
        let delta = TangentVector::new(
            nalgebra::Vector3::new(step[0], step[1], step[2]),
            nalgebra::Vector3::new(step[3], step[4], step[5]),
        );
        // step_clamp keeps |omega| well below pi, so exp cannot fail here.
        (cfg.root.compose(&se3_exp(&delta).expect("clamped root step")), 6)
    } else {
        (cfg.root, 0)
    };
    let mut q = cfg.q.clone();
    for j in 0..q.len() {
        let (lower, upper) = limits[j];
        q[j] = (q[j] + step[joint_offset + j]).clamp(lower + margin, upper - margin);
    }
    JointConfig::new(root, q)
}

/// Minimizes the frame tracking cost from `init` with Levenberg-damped
/// Gauss-Newton. See the module docs for the step rule; the returned
/// configuration always satisfies the joint limits exactly.
pub fn solve_frame(
    model: &RobotModel,
    mapping: &MappingConfig,
    targets: &FrameTargets,
    init: &JointConfig,
    solver: &SolverConfig,
) -> Result<FrameSolution> {
    let pairs = resolve_pairs(model, mapping)?;
    solve_frame_resolved(model, &pairs, targets, init, solver)
}

fn solve_frame_resolved(
    model: &RobotModel,
    pairs: &[ResolvedPair],
    targets: &FrameTargets,
    init: &JointConfig,
    solver: &SolverConfig,
) -> Result<FrameSolution> {
    solver.validate()?;
    if init.q.len() != model.dof() {
        return Err(Error::DimensionMismatch {
            context: "solve_frame init".to_string(),
            expected: model.dof(),
            actual: init.q.len(),
        });
    }
    let limits = model.joint_limits();
    let dim = residual_dim(pairs);
    let n_vars = model.dof() + if solver.optimize_root { 6 } else { 0 };

    // Project the initial point so the limit invariant holds even for
    // out-of-box inits.
    let mut cfg = apply_step(
        init,
        &DVector::zeros(n_vars),
        solver.optimize_root,
        &limits,
        solver.limit_margin,
    );

    let mut residual = DVector::zeros(dim);
    stack_residual(model, &cfg, pairs, targets, &mut residual)?;
    let mut cost = residual.norm_squared();

    let mut lambda = solver.damping_init;
    let mut iterations = 0;
    let mut converged = false;
    let mut gradient = DVector::zeros(n_vars);

    let mut plus = DVector::zeros(dim);
    let mut minus = DVector::zeros(dim);
    let mut jacobian = DMatrix::zeros(dim, n_vars);

    'outer: for iter in 0..solver.max_iterations {
        // Residual Jacobian by central differences over all decision
        // variables (root tangent perturbations first).
        for k in 0..n_vars {
            let mut e = DVector::zeros(n_vars);
            e[k] = JACOBIAN_STEP;
            let cfg_plus = apply_unclamped(&cfg, &e, solver.optimize_root);
            e[k] = -JACOBIAN_STEP;
            let cfg_minus = apply_unclamped(&cfg, &e, solver.optimize_root);
            stack_residual(model, &cfg_plus, pairs, targets, &mut plus)?;
            stack_residual(model, &cfg_minus, pairs, targets, &mut minus)?;
            for a in 0..dim {
                jacobian[(a, k)] = (plus[a] - minus[a]) / (2.0 * JACOBIAN_STEP);
            }
        }
        gradient = 2.0 * jacobian.transpose() * &residual;
        if gradient.amax() < solver.gradient_tol {
            converged = true;
            break;
        }
        let gauss_newton = 2.0 * jacobian.transpose() * &jacobian;

        loop {
            let mut system = gauss_newton.clone();
            for k in 0..n_vars {
                system[(k, k)] += lambda;
            }
            let step = match system.cholesky() {
                Some(chol) => {
                    let mut s = -&gradient;
                    chol.solve_mut(&mut s);
                    s.apply(|v| *v = v.clamp(-solver.step_clamp, solver.step_clamp));
                    Some(s)
                }
                None => None,
            };
            if let Some(step) = step {
                let candidate =
                    apply_step(&cfg, &step, solver.optimize_root, &limits, solver.limit_margin);
                let candidate_cost =
                    match stack_residual(model, &candidate, pairs, targets, &mut plus) {
                        Ok(()) => plus.norm_squared(),
                        // A candidate on the log branch boundary is treated
                        // as an unacceptable step, not a fatal error.
                        Err(Error::NearPiSingularity { .. })
                        | Err(Error::AngleOutOfRange { .. }) => f64::INFINITY,
                        Err(e) => return Err(e),
                    };
                if candidate_cost < cost {
                    let decrease = cost - candidate_cost;
                    cfg = candidate;
                    std::mem::swap(&mut residual, &mut plus);
                    cost = candidate_cost;
                    lambda = (lambda * solver.damping_shrink).max(LAMBDA_MIN);
                    iterations = iter + 1;
                    if decrease < solver.cost_tol {
                        converged = true;
                        break 'outer;
                    }
                    break;
                }
            }
            lambda *= solver.damping_growth;
            if lambda > LAMBDA_MAX {
                // Damping exhausted: no acceptable step exists at this
                // resolution. Report the last iterate as non-converged.
                iterations = iter + 1;
                break 'outer;
            }
        }
    }

    let stalled_at_limit = {
        let joint_offset = if solver.optimize_root { 6 } else { 0 };
        (0..model.dof()).any(|j| {
            let (lower, upper) = limits[j];
            let g = gradient[joint_offset + j];
            let at_lower = cfg.q[j] <= lower + solver.limit_margin + 1e-12;
            let at_upper = cfg.q[j] >= upper - solver.limit_margin - 1e-12;
            (at_lower && g > solver.gradient_tol) || (at_upper && g < -solver.gradient_tol)
        })
    };

    Ok(FrameSolution {
        cfg,
        diagnostics: FrameDiagnostics {
            final_cost: cost,
            iterations,
            converged,
            stalled_at_limit,
        },
    })
}

/// Step application without limit projection, used only for Jacobian
/// probes so differences are not distorted by the box.
fn apply_unclamped(cfg: &JointConfig, step: &DVector<f64>, optimize_root: bool) -> JointConfig {
    let (root, joint_offset) = if optimize_root {
        let delta = TangentVector::new(
            nalgebra::Vector3::new(step[0], step[1], step[2]),
            nalgebra::Vector3::new(step[3], step[4], step[5]),
        );
        (cfg.root.compose(&se3_exp(&delta).expect("probe step")), 6)
    } else {
        (cfg.root, 0)
    };
    let mut q = cfg.q.clone();
    for j in 0..q.len() {
        q[j] += step[joint_offset + j];
    }
    JointConfig::new(root, q)
}

/// Builds the frame targets for one motion frame, applying per-robot-body
/// position scales.
fn frame_targets(
    motion: &MotionSequence,
    frame: usize,
    pairs: &[ResolvedPair],
    body_indices: &[usize],
) -> FrameTargets {
    let mut targets = FrameTargets::new();
    for (pair, &human_idx) in pairs.iter().zip(body_indices) {
        let pose = &motion.frames[frame][human_idx];
        targets.insert(
            pair.human_body.clone(),
            crate::objective::BodyTarget {
                position: pair.scale * pose.position,
                rotation: pose.rotation,
            },
        );
    }
    targets
}

/// Retargets a whole motion sequence. Frame 0 starts from `init` when given,
/// otherwise from mid-range joints with the root taken from the base link's
/// mapped target in the first frame (identity when the base is unmapped).
/// Later frames warm-start from the previous solution unless
/// `solver.warm_start` is off, in which case every frame restarts from the
/// frame-0 initial guess.
///
/// Frames whose solve fails on a domain error keep the initial guess and are
/// recorded as non-converged; an empty motion is an error.
pub fn retarget_sequence(
    model: &RobotModel,
    mapping: &MappingConfig,
    motion: &MotionSequence,
    solver: &SolverConfig,
    init: Option<&JointConfig>,
) -> Result<RetargetResult> {
    solver.validate()?;
    motion.validate()?;
    if motion.frames.is_empty() {
        return Err(Error::EmptyInput("motion has no frames".to_string()));
    }
    let pairs = resolve_pairs(model, mapping)?;
    let body_indices: Vec<usize> = pairs
        .iter()
        .map(|p| motion.body_index(&p.human_body))
        .collect::<Result<_>>()?;

    let first = match init {
        Some(cfg) => {
            if cfg.q.len() != model.dof() {
                return Err(Error::DimensionMismatch {
                    context: "retarget init".to_string(),
                    expected: model.dof(),
                    actual: cfg.q.len(),
                });
            }
            cfg.clone()
        }
        None => {
            let base_name = model.link(model.base_index()).name.clone();
            let root = pairs
                .iter()
                .zip(&body_indices)
                .find(|(p, _)| p.body_index == model.base_index())
                .map(|(p, &idx)| {
                    let pose = &motion.frames[0][idx];
                    Pose::new(pose.rotation, p.scale * pose.position)
                })
                .unwrap_or_else(|| {
                    let _ = base_name;
                    Pose::identity()
                });
            JointConfig::new(root, model.mid_range_q())
        }
    };

    let mut frames = Vec::with_capacity(motion.frames.len());
    let mut per_frame = Vec::with_capacity(motion.frames.len());
    let mut previous = first.clone();
    for t in 0..motion.frames.len() {
        let targets = frame_targets(motion, t, &pairs, &body_indices);
        let start = if solver.warm_start && t > 0 {
            previous.clone()
        } else {
            first.clone()
        };
        match solve_frame_resolved(model, &pairs, &targets, &start, solver) {
            Ok(solution) => {
                previous = solution.cfg.clone();
                frames.push(solution.cfg);
                per_frame.push(solution.diagnostics);
            }
            Err(Error::NearPiSingularity { .. }) | Err(Error::AngleOutOfRange { .. }) => {
                frames.push(start.clone());
                per_frame.push(FrameDiagnostics {
                    final_cost: f64::INFINITY,
                    iterations: 0,
                    converged: false,
                    stalled_at_limit: false,
                });
                previous = start;
            }
            Err(e) => return Err(e),
        }
    }

    Ok(RetargetResult {
        trajectory: RobotTrajectory {
            fps: motion.fps,
            joint_names: model.joint_names(),
            frames,
        },
        per_frame,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::motion::BodyPose;
    use crate::objective::{BodyTarget, MappingPair};
    use nalgebra::Vector3;

    fn position_mapping() -> MappingConfig {
        MappingConfig {
            pairs: vec![MappingPair {
                human_body: "hand".to_string(),
                robot_body: "ee".to_string(),
                w_rot: 0.0,
                w_pos: 1.0,
                is_end_effector: true,
            }],
            scales: Default::default(),
        }
    }

    fn fixed_base_solver() -> SolverConfig {
        SolverConfig {
            optimize_root: false,
            ..SolverConfig::default()
        }
    }

    fn position_targets(p: Vector3<f64>) -> FrameTargets {
        let mut targets = FrameTargets::new();
        targets.insert(
            "hand".to_string(),
            BodyTarget {
                position: p,
                rotation: crate::lie::Rotation::identity(),
            },
        );
        targets
    }

    fn planar_ee(model: &RobotModel, q: &[f64]) -> Vector3<f64> {
        let cfg = JointConfig::new(Pose::identity(), DVector::from_row_slice(q));
        forward_kinematics(model, &cfg)
            .unwrap()
            .get("ee")
            .unwrap()
            .translation
    }

    #[test]
    fn exact_init_is_a_fixed_point() {
        let m = fixtures::planar2();
        let q_star = [0.7, -0.3];
        let targets = position_targets(planar_ee(&m, &q_star));
        let init = JointConfig::new(Pose::identity(), DVector::from_row_slice(&q_star));
        let sol = solve_frame(&m, &position_mapping(), &targets, &init, &fixed_base_solver())
            .unwrap();
        assert!(sol.diagnostics.converged);
        assert_eq!(sol.diagnostics.iterations, 0);
        assert!(sol.diagnostics.final_cost < 1e-12);
        assert_eq!(sol.cfg.q, init.q);
    }

    /// Two-link closed-form IK, the independent oracle: elbow-up and
    /// elbow-down solutions for unit link lengths.
    fn two_link_solutions(x: f64, y: f64) -> [(f64, f64); 2] {
        let c2 = (x * x + y * y - 2.0) / 2.0;
        let t2 = c2.clamp(-1.0, 1.0).acos();
        let mut out = [(0.0, 0.0); 2];
        for (i, s) in [t2, -t2].iter().enumerate() {
            let t1 = y.atan2(x) - s.sin().atan2(1.0 + s.cos());
            out[i] = (t1, *s);
        }
        out
    }

    #[test]
    fn reachable_target_matches_closed_form() {
        let m = fixtures::planar2();
        let targets = position_targets(Vector3::new(1.2, 0.8, 0.0));
        let init = JointConfig::new(Pose::identity(), DVector::from_vec(vec![0.3, 0.3]));
        let sol = solve_frame(&m, &position_mapping(), &targets, &init, &fixed_base_solver())
            .unwrap();
        let p = planar_ee(&m, &[sol.cfg.q[0], sol.cfg.q[1]]);
        assert!((p - Vector3::new(1.2, 0.8, 0.0)).norm() < 1e-3);
        let best = two_link_solutions(1.2, 0.8)
            .iter()
            .map(|(a, b)| (sol.cfg.q[0] - a).abs() + (sol.cfg.q[1] - b).abs())
            .fold(f64::INFINITY, f64::min);
        assert!(best < 1e-3, "distance to closed-form solutions {best}");
    }

    #[test]
    fn extended_init_parks_on_interior_target_saddle() {
        // At q = (0,0) the gradient toward the interior target (1,0,0)
        // vanishes identically, so the solver terminates immediately with
        // the full cost, while a nudged init reaches the target.
        let m = fixtures::planar2();
        let targets = position_targets(Vector3::new(1.0, 0.0, 0.0));
        let stuck = solve_frame(
            &m,
            &position_mapping(),
            &targets,
            &JointConfig::new(Pose::identity(), DVector::from_vec(vec![0.0, 0.0])),
            &fixed_base_solver(),
        )
        .unwrap();
        assert!(stuck.diagnostics.converged);
        assert!((stuck.diagnostics.final_cost - 1.0).abs() < 1e-9);

        let nudged = solve_frame(
            &m,
            &position_mapping(),
            &targets,
            &JointConfig::new(Pose::identity(), DVector::from_vec(vec![0.3, 0.3])),
            &fixed_base_solver(),
        )
        .unwrap();
        assert!(nudged.diagnostics.final_cost < 1e-6);
        assert!(nudged.diagnostics.iterations > stuck.diagnostics.iterations);
    }

    #[test]
    fn unreachable_target_stalls_at_limit() {
        let doc = r#"{"name":"tight","up_axis":"z","links":[
            {"name":"base","parent":null,"joint":{"type":"fixed"}},
            {"name":"link1","parent":"base","joint":{"type":"revolute","axis":[0,0,1],
             "limits":{"lower":-0.5,"upper":0.5,"velocity":10.0}}},
            {"name":"ee","parent":"link1","joint":{"type":"fixed",
             "origin":{"xyz":[1,0,0]}}}]}"#;
        let m = crate::kinematics::load_model(doc).unwrap();
        // Optimum would be at pi/2; the box stops at 0.5 exactly.
        let targets = position_targets(Vector3::new(0.0, 2.0, 0.0));
        let sol = solve_frame(
            &m,
            &position_mapping(),
            &targets,
            &JointConfig::new(Pose::identity(), DVector::from_vec(vec![0.0])),
            &fixed_base_solver(),
        )
        .unwrap();
        assert_eq!(sol.cfg.q[0], 0.5);
        assert!(sol.diagnostics.stalled_at_limit);
    }

    fn single_body_motion(fps: f64, positions: &[Vector3<f64>]) -> MotionSequence {
        MotionSequence {
            fps,
            body_names: vec!["hand".to_string()],
            frames: positions
                .iter()
                .map(|p| {
                    vec![BodyPose {
                        position: *p,
                        rotation: crate::lie::Rotation::identity(),
                    }]
                })
                .collect(),
        }
    }

    #[test]
    fn constant_motion_converges_to_constant_q() {
        let m = fixtures::planar2();
        let motion = single_body_motion(30.0, &vec![Vector3::new(1.2, 0.8, 0.0); 5]);
        let init = JointConfig::new(Pose::identity(), DVector::from_vec(vec![0.3, 0.3]));
        let result = retarget_sequence(
            &m,
            &position_mapping(),
            &motion,
            &fixed_base_solver(),
            Some(&init),
        )
        .unwrap();
        assert_eq!(result.trajectory.frames.len(), 5);
        let q0 = &result.trajectory.frames[0].q;
        for frame in &result.trajectory.frames {
            assert!((&frame.q - q0).amax() < 1e-6);
        }
    }

    #[test]
    fn smooth_path_has_no_joint_jumps() {
        let m = fixtures::planar2();
        let positions: Vec<Vector3<f64>> = (0..40)
            .map(|t| {
                let s = t as f64 / 39.0 * std::f64::consts::TAU;
                Vector3::new(1.2 + 0.3 * s.sin(), 0.5 + 0.3 * s.cos(), 0.0)
            })
            .collect();
        let motion = single_body_motion(20.0, &positions);
        let init = JointConfig::new(Pose::identity(), DVector::from_vec(vec![0.3, 0.3]));
        let result = retarget_sequence(
            &m,
            &position_mapping(),
            &motion,
            &fixed_base_solver(),
            Some(&init),
        )
        .unwrap();
        for w in result.trajectory.frames.windows(2) {
            assert!((&w[1].q - &w[0].q).amax() < 0.5);
        }
        assert!(result.per_frame.iter().all(|d| d.converged));
    }

    /// Targets sweeping through the straight-arm saddle; the branch choice
    /// flips sign as the target crosses the axis.
    pub(crate) fn saddle_sweep_motion() -> MotionSequence {
        let positions: Vec<Vector3<f64>> = (0..15)
            .map(|t| {
                let y = 0.35 - 0.7 * t as f64 / 14.0;
                Vector3::new(1.0, y, 0.0)
            })
            .collect();
        single_body_motion(30.0, &positions)
    }

    fn count_jumps(result: &RetargetResult) -> usize {
        result
            .trajectory
            .frames
            .windows(2)
            .filter(|w| (&w[1].q - &w[0].q).amax() > 0.5)
            .count()
    }

    #[test]
    fn cold_restarts_jump_where_warm_starts_track() {
        let m = fixtures::planar2();
        let motion = saddle_sweep_motion();
        let init = JointConfig::new(Pose::identity(), DVector::from_vec(vec![0.0, 0.0]));
        let cold = retarget_sequence(
            &m,
            &position_mapping(),
            &motion,
            &SolverConfig {
                warm_start: false,
                ..fixed_base_solver()
            },
            Some(&init),
        )
        .unwrap();
        let warm = retarget_sequence(
            &m,
            &position_mapping(),
            &motion,
            &fixed_base_solver(),
            Some(&init),
        )
        .unwrap();
        let cold_jumps = count_jumps(&cold);
        let warm_jumps = count_jumps(&warm);
        assert!(cold_jumps >= 1, "cold jumps {cold_jumps}");
        assert_eq!(warm_jumps, 0);
        assert!(warm_jumps <= cold_jumps);
    }

    #[test]
    fn retarget_is_deterministic() {
        let m = fixtures::planar2();
        let motion = saddle_sweep_motion();
        let run = || {
            retarget_sequence(&m, &position_mapping(), &motion, &fixed_base_solver(), None)
                .unwrap()
        };
        let a = run();
        let b = run();
        for (fa, fb) in a.trajectory.frames.iter().zip(&b.trajectory.frames) {
            assert_eq!(fa.q, fb.q);
            assert_eq!(fa.root.translation, fb.root.translation);
        }
    }

    #[test]
    fn empty_motion_is_an_error() {
        let m = fixtures::planar2();
        let motion = MotionSequence {
            fps: 30.0,
            body_names: vec!["hand".to_string()],
            frames: Vec::new(),
        };
        assert!(retarget_sequence(
            &m,
            &position_mapping(),
            &motion,
            &fixed_base_solver(),
            None
        )
        .is_err());
    }

    #[test]
    fn limits_hold_exactly_on_every_output_frame() {
        let m = fixtures::planar2();
        let motion = saddle_sweep_motion();
        let result =
            retarget_sequence(&m, &position_mapping(), &motion, &fixed_base_solver(), None)
                .unwrap();
        let limits = m.joint_limits();
        for frame in &result.trajectory.frames {
            for (j, &(lower, upper)) in limits.iter().enumerate() {
                assert!(frame.q[j] >= lower && frame.q[j] <= upper);
            }
        }
    }
}
