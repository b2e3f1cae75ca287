//! Dataset curation and filtering: physics-plausibility checks on human
//! motion, hard-threshold quality filters on retargeted robot motion,
//! spherical k-means clustering of motion embeddings, and the linear
//! reward-tightening schedule.
//!
//! Both filter entry points produce a [`FilterReport`]: a keep/reject
//! verdict plus one reason per violated check, carrying the measured value,
//! the threshold it was compared against and the offending frame indices.
//! Reasons are sorted by check name so reports are stable across runs.
//!
//! Thresholds live in [`CurationConfig`] and [`FilterConfig`]. The velocity,
//! self-intersection and floating limits follow the hardware-filter
//! conventions (cross ratio 0.05, float threshold 0.10 m); the curation
//! defaults are implementation defaults, chosen to be permissive for
//! ordinary motion capture and documented per field.

use std::collections::BTreeMap;

use nalgebra::{DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{forward_kinematics, RobotModel, UpAxis};
use crate::motion::{MotionSequence, RobotTrajectory};

/// Feet closer to the ground than this count as being in contact.
pub const CONTACT_HEIGHT: f64 = 0.02;

/// Thresholds for human-motion curation. All are implementation defaults
/// rather than values with external provenance, except where noted.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurationConfig {
    /// Maximum tolerated body-point jerk, m/s^3.
    pub jerk_max: f64,
    /// How far (m) the CoM ground projection may leave the support hull.
    pub com_margin: f64,
    /// Maximum tolerated mean clearance of the lowest foot, m.
    pub contact_float_max: f64,
    /// Maximum tolerated foot penetration below the ground plane, m.
    pub contact_penetration_max: f64,
    /// Minimum fraction of frames with at least one foot in contact.
    pub min_contact_ratio: f64,
}

impl Default for CurationConfig {
    fn default() -> Self {
        CurationConfig {
            jerk_max: 500.0,
            com_margin: 0.05,
            contact_float_max: 0.10,
            contact_penetration_max: 0.03,
            min_contact_ratio: 0.3,
        }
    }
}

impl CurationConfig {
    pub fn validate(&self) -> Result<()> {
        let positives = [
            ("jerk_max", self.jerk_max),
            ("com_margin", self.com_margin),
            ("contact_float_max", self.contact_float_max),
            ("contact_penetration_max", self.contact_penetration_max),
        ];
        for (name, v) in positives {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "curation {name} must be positive (got {v})"
                )));
            }
        }
        if !(self.min_contact_ratio > 0.0 && self.min_contact_ratio <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "curation min_contact_ratio must be in (0, 1] (got {})",
                self.min_contact_ratio
            )));
        }
        Ok(())
    }
}

/// Thresholds for robot-trajectory filtering.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    /// Per-joint speed limits, rad/s; `None` uses the model's velocity
    /// limits.
    pub qdot_max: Option<Vec<f64>>,
    /// Maximum tolerated fraction of self-intersecting frames.
    pub cross_ratio_max: f64,
    /// Maximum tolerated mean clearance of the lowest foot capsule, m.
    pub float_threshold: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            qdot_max: None,
            cross_ratio_max: 0.05,
            float_threshold: 0.10,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(limits) = &self.qdot_max {
            if limits.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::InvalidParameter(
                    "filter qdot_max entries must be positive".to_string(),
                ));
            }
        }
        if !(self.cross_ratio_max > 0.0 && self.cross_ratio_max <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "filter cross_ratio_max must be in (0, 1] (got {})",
                self.cross_ratio_max
            )));
        }
        if !(self.float_threshold > 0.0 && self.float_threshold.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "filter float_threshold must be positive (got {})",
                self.float_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Keep,
    Reject,
}

/// One violated check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterReason {
    pub check: String,
    pub measured: f64,
    pub threshold: f64,
    /// Frames that individually violate the check (for mean-based checks,
    /// frames whose own measurement exceeds the threshold).
    pub frames: Vec<usize>,
}

/// Verdict plus the reasons behind a rejection, sorted by check name.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterReport {
    pub verdict: Verdict,
    pub reasons: Vec<FilterReason>,
}

impl FilterReport {
    pub fn is_keep(&self) -> bool {
        self.verdict == Verdict::Keep
    }

    fn from_reasons(mut reasons: Vec<FilterReason>) -> Self {
        reasons.sort_by(|a, b| a.check.cmp(&b.check));
        FilterReport {
            verdict: if reasons.is_empty() {
                Verdict::Keep
            } else {
                Verdict::Reject
            },
            reasons,
        }
    }
}

/// Third-difference jerk magnitude (m/s^3) for one body at one stencil
/// anchor. Central stencil for interior frames; the 4-frame minimum uses a
/// forward stencil anchored at frame 1.
fn jerk_at(frames: &[Vec<crate::motion::BodyPose>], body: usize, t: usize, fps: f64) -> f64 {
    let p = |i: usize| frames[i][body].position;
    let len = frames.len();
    let num = if len >= 5 {
        (p(t + 2) - 2.0 * p(t + 1) + 2.0 * p(t - 1) - p(t - 2)) * 0.5
    } else {
        p(3) - 3.0 * p(2) + 3.0 * p(1) - p(0)
    };
    num.norm() * fps * fps * fps
}

fn jerk_anchor_range(len: usize) -> std::ops::Range<usize> {
    if len >= 5 {
        2..len - 2
    } else {
        1..2
    }
}

/// Squared distance from a planar point to a segment.
fn planar_point_segment_dist(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let ab = (b.0 - a.0, b.1 - a.1);
    let ap = (p.0 - a.0, p.1 - a.1);
    let len2 = ab.0 * ab.0 + ab.1 * ab.1;
    let t = if len2 > 0.0 {
        ((ap.0 * ab.0 + ap.1 * ab.1) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let d = (ap.0 - t * ab.0, ap.1 - t * ab.1);
    (d.0 * d.0 + d.1 * d.1).sqrt()
}

/// Andrew's monotone chain; returns the hull counter-clockwise without
/// duplicated endpoints. Collinear inputs degenerate to 2 points (or 1).
fn convex_hull(points: &mut Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    points.sort_by(|a, b| a.partial_cmp(b).expect("finite hull points"));
    points.dedup();
    let n = points.len();
    if n <= 2 {
        return points.clone();
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * n);
    for &p in points.iter() {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in points.iter().rev() {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Distance from a planar point to the outside of a convex support region
/// (0 when inside). Supports degenerate hulls of one or two points.
fn distance_outside_hull(p: (f64, f64), support: &mut Vec<(f64, f64)>) -> f64 {
    let hull = convex_hull(support);
    match hull.len() {
        0 => unreachable!("caller skips frames without support points"),
        1 => planar_point_segment_dist(p, hull[0], hull[0]),
        2 => planar_point_segment_dist(p, hull[0], hull[1]),
        _ => {
            let inside = (0..hull.len()).all(|i| {
                let a = hull[i];
                let b = hull[(i + 1) % hull.len()];
                (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0) >= 0.0
            });
            if inside {
                0.0
            } else {
                (0..hull.len())
                    .map(|i| planar_point_segment_dist(p, hull[i], hull[(i + 1) % hull.len()]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }
}

/// Physics-plausibility curation of a human motion sequence.
///
/// Checks, in report order: CoM support (ground projection of the
/// mass-weighted body centroid must stay within `com_margin` of the convex
/// hull of in-contact foot positions; frames without contact are skipped),
/// foot float (mean per-frame lowest-foot clearance), foot penetration
/// (max depth below ground), contact ratio (fraction of frames with a foot
/// in contact) and jerk (max third-difference body jerk).
///
/// `masses` maps body names to kg; unlisted bodies weigh 1.0. The ground
/// plane is height 0 along `up_axis`.
pub fn curate_human_sequence(
    seq: &MotionSequence,
    masses: &BTreeMap<String, f64>,
    feet: &[String],
    up_axis: UpAxis,
    config: &CurationConfig,
) -> Result<FilterReport> {
    config.validate()?;
    seq.validate()?;
    if seq.frames.len() < 4 {
        return Err(Error::EmptyInput(format!(
            "curation needs at least 4 frames, got {}",
            seq.frames.len()
        )));
    }
    for (name, m) in masses {
        if !(m.is_finite() && *m >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mass for `{name}` must be non-negative (got {m})"
            )));
        }
    }
    let foot_indices: Vec<usize> = feet
        .iter()
        .map(|f| seq.body_index(f))
        .collect::<Result<_>>()?;
    if foot_indices.is_empty() {
        return Err(Error::EmptyInput("no foot bodies given".to_string()));
    }
    let body_masses: Vec<f64> = seq
        .body_names
        .iter()
        .map(|n| masses.get(n).copied().unwrap_or(1.0))
        .collect();
    let total_mass: f64 = body_masses.iter().sum();
    if total_mass <= 0.0 {
        return Err(Error::InvalidParameter(
            "total body mass must be positive".to_string(),
        ));
    }

    let mut reasons = Vec::new();

    // Jerk.
    let mut jerk_frames = Vec::new();
    let mut jerk_peak = 0.0_f64;
    for t in jerk_anchor_range(seq.frames.len()) {
        let frame_peak = (0..seq.body_names.len())
            .map(|b| jerk_at(&seq.frames, b, t, seq.fps))
            .fold(0.0, f64::max);
        jerk_peak = jerk_peak.max(frame_peak);
        if frame_peak > config.jerk_max {
            jerk_frames.push(t);
        }
    }
    if !jerk_frames.is_empty() {
        reasons.push(FilterReason {
            check: "jerk".to_string(),
            measured: jerk_peak,
            threshold: config.jerk_max,
            frames: jerk_frames,
        });
    }

    // Per-frame foot statistics and CoM support.
    let mut com_frames = Vec::new();
    let mut com_peak = 0.0_f64;
    let mut float_frames = Vec::new();
    let mut penetration_frames = Vec::new();
    let mut penetration_peak = 0.0_f64;
    let mut clearance_sum = 0.0;
    let mut contact_free = Vec::new();
    for (t, frame) in seq.frames.iter().enumerate() {
        let heights: Vec<f64> = foot_indices
            .iter()
            .map(|&i| up_axis.height(&frame[i].position))
            .collect();
        let lowest = heights.iter().copied().fold(f64::INFINITY, f64::min);
        clearance_sum += lowest;
        if lowest > config.contact_float_max {
            float_frames.push(t);
        }
        let depth = -lowest;
        if depth > config.contact_penetration_max {
            penetration_frames.push(t);
        }
        penetration_peak = penetration_peak.max(depth);

        let mut support: Vec<(f64, f64)> = foot_indices
            .iter()
            .zip(&heights)
            .filter(|(_, h)| **h < CONTACT_HEIGHT)
            .map(|(&i, _)| up_axis.planar(&frame[i].position))
            .collect();
        if support.is_empty() {
            contact_free.push(t);
            continue;
        }
        let com = frame
            .iter()
            .zip(&body_masses)
            .map(|(b, m)| *m * b.position)
            .sum::<Vector3<f64>>()
            / total_mass;
        let outside = distance_outside_hull(up_axis.planar(&com), &mut support);
        com_peak = com_peak.max(outside);
        if outside > config.com_margin {
            com_frames.push(t);
        }
    }
    if !com_frames.is_empty() {
        reasons.push(FilterReason {
            check: "com_support".to_string(),
            measured: com_peak,
            threshold: config.com_margin,
            frames: com_frames,
        });
    }
    let mean_clearance = clearance_sum / seq.frames.len() as f64;
    if mean_clearance > config.contact_float_max {
        reasons.push(FilterReason {
            check: "contact_float".to_string(),
            measured: mean_clearance,
            threshold: config.contact_float_max,
            frames: float_frames,
        });
    }
    if !penetration_frames.is_empty() {
        reasons.push(FilterReason {
            check: "contact_penetration".to_string(),
            measured: penetration_peak,
            threshold: config.contact_penetration_max,
            frames: penetration_frames,
        });
    }
    let contact_ratio = 1.0 - contact_free.len() as f64 / seq.frames.len() as f64;
    if contact_ratio < config.min_contact_ratio {
        reasons.push(FilterReason {
            check: "contact_ratio".to_string(),
            measured: contact_ratio,
            threshold: config.min_contact_ratio,
            frames: contact_free,
        });
    }

    Ok(FilterReport::from_reasons(reasons))
}

/// Hard-threshold quality filter for a retargeted robot trajectory.
///
/// Checks: joint velocity (first differences against per-joint limits),
/// self-intersection (fraction of frames with any intersecting non-adjacent
/// capsule pair above `cross_ratio_max`) and floating (mean lowest
/// foot-capsule surface height above `float_threshold`; skipped when the
/// model has no foot capsules).
pub fn filter_robot_sequence(
    traj: &RobotTrajectory,
    model: &RobotModel,
    config: &FilterConfig,
) -> Result<FilterReport> {
    config.validate()?;
    traj.validate()?;
    traj.check_model(model)?;
    let limits = match &config.qdot_max {
        Some(given) => {
            if given.len() != model.dof() {
                return Err(Error::DimensionMismatch {
                    context: "filter qdot_max".to_string(),
                    expected: model.dof(),
                    actual: given.len(),
                });
            }
            given.clone()
        }
        None => model.velocity_limits(),
    };

    let mut reasons = Vec::new();

    // Joint continuity.
    let mut velocity_frames = Vec::new();
    let mut worst = (0.0_f64, f64::INFINITY, 0.0_f64); // ratio, threshold, measured
    for t in 1..traj.frames.len() {
        let qd: DVector<f64> = (&traj.frames[t].q - &traj.frames[t - 1].q) * traj.fps;
        let mut violated = false;
        for j in 0..qd.len() {
            let speed = qd[j].abs();
            if speed > limits[j] {
                violated = true;
            }
            let ratio = speed / limits[j];
            if ratio > worst.0 {
                worst = (ratio, limits[j], speed);
            }
        }
        if violated {
            velocity_frames.push(t);
        }
    }
    if !velocity_frames.is_empty() {
        reasons.push(FilterReason {
            check: "velocity".to_string(),
            measured: worst.2,
            threshold: worst.1,
            frames: velocity_frames,
        });
    }

    // Candidate capsule pairs: distinct, non-adjacent links only.
    let mut pairs = Vec::new();
    for i in 0..model.links().len() {
        for j in (i + 1)..model.links().len() {
            if model.adjacent(i, j) {
                continue;
            }
            for (a, _) in model.link(i).capsules.iter().enumerate() {
                for (b, _) in model.link(j).capsules.iter().enumerate() {
                    pairs.push((i, a, j, b));
                }
            }
        }
    }
    let feet: Vec<usize> = (0..model.links().len())
        .filter(|&i| model.link(i).is_foot && !model.link(i).capsules.is_empty())
        .collect();

    let mut crossing_frames = Vec::new();
    let mut float_sum = 0.0;
    let mut float_frames = Vec::new();
    for (t, cfg) in traj.frames.iter().enumerate() {
        if pairs.is_empty() && feet.is_empty() {
            break;
        }
        let fk = forward_kinematics(model, cfg)?;
        let crossing = pairs.iter().any(|&(i, a, j, b)| {
            let ca = model.link(i).capsules[a].transformed(fk.pose(i));
            let cb = model.link(j).capsules[b].transformed(fk.pose(j));
            crate::kinematics::capsule_distance(&ca, &cb) < 0.0
        });
        if crossing {
            crossing_frames.push(t);
        }
        if !feet.is_empty() {
            let lowest = feet
                .iter()
                .flat_map(|&i| {
                    model
                        .link(i)
                        .capsules
                        .iter()
                        .map(move |c| (i, c))
                })
                .map(|(i, c)| c.transformed(fk.pose(i)).lowest_surface_height(model.up_axis))
                .fold(f64::INFINITY, f64::min);
            float_sum += lowest;
            if lowest > config.float_threshold {
                float_frames.push(t);
            }
        }
    }
    let cross_fraction = crossing_frames.len() as f64 / traj.frames.len() as f64;
    if cross_fraction > config.cross_ratio_max {
        reasons.push(FilterReason {
            check: "self_intersection".to_string(),
            measured: cross_fraction,
            threshold: config.cross_ratio_max,
            frames: crossing_frames,
        });
    }
    if !feet.is_empty() {
        let mean_clearance = float_sum / traj.frames.len() as f64;
        if mean_clearance > config.float_threshold {
            reasons.push(FilterReason {
                check: "float".to_string(),
                measured: mean_clearance,
                threshold: config.float_threshold,
                frames: float_frames,
            });
        }
    }

    Ok(FilterReport::from_reasons(reasons))
}

/// A motion embedding to be clustered.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Embedding {
    pub id: String,
    pub vector: Vec<f64>,
}

/// Cluster assignment for one embedding, in input order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub id: String,
    pub cluster: usize,
}

/// Spherical k-means: k-means++ seeding on the unit sphere, cosine
/// assignments with ties to the lowest centroid index, centroids as
/// normalized member means, empty clusters reseeded from the point farthest
/// from its centroid. Runs to an assignment fixpoint or 300 iterations;
/// deterministic for a given seed.
pub fn cluster_motions(
    embeddings: &[Embedding],
    k: usize,
    seed: u64,
) -> Result<Vec<ClusterAssignment>> {
    let (assignments, _) = cluster_with_history(embeddings, k, seed)?;
    Ok(embeddings
        .iter()
        .zip(assignments)
        .map(|(e, cluster)| ClusterAssignment {
            id: e.id.clone(),
            cluster,
        })
        .collect())
}

const KMEANS_MAX_ITERATIONS: usize = 300;

/// Clustering core; also returns the mean within-cluster cosine after each
/// assignment pass (non-decreasing, used by the property tests).
pub(crate) fn cluster_with_history(
    embeddings: &[Embedding],
    k: usize,
    seed: u64,
) -> Result<(Vec<usize>, Vec<f64>)> {
    let n = embeddings.len();
    if n == 0 {
        return Err(Error::EmptyInput("no embeddings".to_string()));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "k must be in [1, {n}] (got {k})"
        )));
    }
    let dim = embeddings[0].vector.len();
    let mut points = Vec::with_capacity(n);
    for e in embeddings {
        if e.vector.len() != dim {
            return Err(Error::DimensionMismatch {
                context: format!("embedding `{}`", e.id),
                expected: dim,
                actual: e.vector.len(),
            });
        }
        if e.vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "embedding `{}` has non-finite entries",
                e.id
            )));
        }
        let v = DVector::from_column_slice(&e.vector);
        let norm = v.norm();
        if norm <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "embedding `{}` has zero norm",
                e.id
            )));
        }
        points.push(v / norm);
    }

    // k-means++ on the sphere with 1 - cosine as the weighting distance.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut center_indices = vec![rng.gen_range(0..n)];
    while center_indices.len() < k {
        let weights: Vec<f64> = points
            .iter()
            .map(|p| {
                center_indices
                    .iter()
                    .map(|&c| 1.0 - points[c].dot(p))
                    .fold(f64::INFINITY, f64::min)
                    .max(0.0)
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let next = if total <= 1e-15 {
            // All remaining points coincide with chosen centers; take the
            // lowest unchosen index.
            (0..n)
                .find(|i| !center_indices.contains(i))
                .expect("k <= n leaves an unchosen point")
        } else {
            let x = rng.gen::<f64>() * total;
            let mut cum = 0.0;
            let mut pick = n - 1;
            for (i, w) in weights.iter().enumerate() {
                cum += w;
                if cum > x {
                    pick = i;
                    break;
                }
            }
            pick
        };
        center_indices.push(next);
    }
    let mut centroids: Vec<DVector<f64>> =
        center_indices.iter().map(|&i| points[i].clone()).collect();

    let mut assignments = vec![0usize; n];
    let mut history = Vec::new();
    for _ in 0..KMEANS_MAX_ITERATIONS {
        // Assignment: highest cosine, ties to the lowest centroid index.
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut best = 0;
            let mut best_cos = centroids[0].dot(p);
            for (c, centroid) in centroids.iter().enumerate().skip(1) {
                let cos = centroid.dot(p);
                if cos > best_cos {
                    best = c;
                    best_cos = cos;
                }
            }
            if assignments[i] != best {
                assignments[i] = best;
                changed = true;
            }
        }
        history.push(
            points
                .iter()
                .zip(&assignments)
                .map(|(p, &c)| centroids[c].dot(p))
                .sum::<f64>()
                / n as f64,
        );
        if !changed && history.len() > 1 {
            break;
        }

        // Update.
        let mut sums = vec![DVector::zeros(dim); k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignments) {
            sums[c] += p;
            counts[c] += 1;
        }
        for c in 0..k {
            if counts[c] == 0 {
                // Reseed from the point farthest from its own centroid.
                let far = (0..n)
                    .min_by(|&a, &b| {
                        let ca = centroids[assignments[a]].dot(&points[a]);
                        let cb = centroids[assignments[b]].dot(&points[b]);
                        ca.partial_cmp(&cb).expect("finite cosines")
                    })
                    .expect("nonempty points");
                centroids[c] = points[far].clone();
                continue;
            }
            let norm = sums[c].norm();
            centroids[c] = if norm > 1e-12 {
                &sums[c] / norm
            } else {
                // Antipodal members cancel; fall back to the first member.
                let first = assignments.iter().position(|&a| a == c).expect("counted");
                points[first].clone()
            };
        }
    }

    Ok((assignments, history))
}

/// Parameters of the linear reward-tightening schedule.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SigmaScheduleParams {
    pub sigma_start: f64,
    pub sigma_end: f64,
    pub i0: f64,
    pub i_max: f64,
}

impl SigmaScheduleParams {
    pub fn new(sigma_start: f64, sigma_end: f64, i0: f64, i_max: f64) -> Result<Self> {
        let params = SigmaScheduleParams {
            sigma_start,
            sigma_end,
            i0,
            i_max,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_start > 0.0 && self.sigma_end > 0.0) {
            return Err(Error::InvalidParameter(
                "sigma endpoints must be positive".to_string(),
            ));
        }
        if !(self.i0 < self.i_max) {
            return Err(Error::InvalidParameter(format!(
                "sigma schedule needs i0 < i_max (got {} >= {})",
                self.i0, self.i_max
            )));
        }
        Ok(())
    }
}

/// Linear interpolation from `sigma_start` at `i0` to `sigma_end` at
/// `i_max`; iterations outside the range clamp to the endpoints. Evaluated
/// in lerp form, so the endpoints and the midpoint are exact in double
/// precision.
pub fn sigma_schedule(params: &SigmaScheduleParams, i: f64) -> f64 {
    let i = i.clamp(params.i0, params.i_max);
    let u = (i - params.i0) / (params.i_max - params.i0);
    params.sigma_start * (1.0 - u) + params.sigma_end * u
}
