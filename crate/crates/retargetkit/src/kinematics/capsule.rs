//! Capsule collision geometry.
//!
//! A capsule is the set of points within `radius` of the segment `p0..p1`.
//! Signed distance between two capsules is the segment-segment distance
//! minus both radii; negative values measure penetration depth.

use nalgebra::Vector3;

use super::model::UpAxis;
use crate::lie::Pose;

/// Segments shorter than this are treated as points in the closest-point
/// solve (the parametric direction is numerically meaningless below it).
const DEGENERATE_SEGMENT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capsule {
    pub p0: Vector3<f64>,
    pub p1: Vector3<f64>,
    pub radius: f64,
}

impl Capsule {
    pub fn new(p0: Vector3<f64>, p1: Vector3<f64>, radius: f64) -> Self {
        Capsule { p0, p1, radius }
    }

    /// The capsule with both endpoints mapped through `pose`.
    pub fn transformed(&self, pose: &Pose) -> Capsule {
        Capsule {
            p0: pose.transform_point(&self.p0),
            p1: pose.transform_point(&self.p1),
            radius: self.radius,
        }
    }

    /// Height of the lowest surface point above the ground plane
    /// (negative when the capsule penetrates the ground).
    pub fn lowest_surface_height(&self, up: UpAxis) -> f64 {
        up.height(&self.p0).min(up.height(&self.p1)) - self.radius
    }
}

/// Closest distance between segments `p1..q1` and `p2..q2`.
///
/// Standard clamped closest-point solve; handles degenerate (point-like)
/// and parallel segments.
fn segment_segment_distance(
    p1: &Vector3<f64>,
    q1: &Vector3<f64>,
    p2: &Vector3<f64>,
    q2: &Vector3<f64>,
) -> f64 {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);

    let (s, t);
    if a <= DEGENERATE_SEGMENT && e <= DEGENERATE_SEGMENT {
        s = 0.0;
        t = 0.0;
    } else if a <= DEGENERATE_SEGMENT {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= DEGENERATE_SEGMENT {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            // Parallel segments have denom = 0; any s on the overlap works,
            // s = 0 is then refined through the t projection below.
            let s0 = if denom > 0.0 {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let t0 = b * s0 + f;
            if t0 < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t0 > e {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            } else {
                t = t0 / e;
                s = s0;
            }
        }
    }

    ((p1 + s * d1) - (p2 + t * d2)).norm()
}

/// Signed distance between two capsules: positive = separated by that gap,
/// zero = touching, negative = penetrating by that depth.
pub fn capsule_distance(a: &Capsule, b: &Capsule) -> f64 {
    segment_segment_distance(&a.p0, &a.p1, &b.p0, &b.p1) - a.radius - b.radius
}
