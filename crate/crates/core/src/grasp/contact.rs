use nalgebra::Vector3;
use serde::Serialize;

use crate::hand_model::FingerName;
use crate::kinematics::FingerPose;

use super::GraspObject;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contact {
    pub finger: FingerName,
    /// 0 base, 1 and 2 middle, 3 fingertip.
    pub phalanx: usize,
    pub primitive: usize,
    /// On the object surface, hand frame (mm).
    pub point: Vector3<f64>,
    /// Unit vector from the object towards the phalanx.
    pub normal: Vector3<f64>,
    pub penetration: f64,
    /// N; zero until forces are estimated.
    pub normal_force: f64,
    /// Actuator displacement at first touch, mm.
    pub actuator_displacement: f64,
}

/// Largest penetration over the phalanx/primitive pairs selected by `filter`.
pub(crate) fn max_penetration(
    poses: &[FingerPose; 5],
    object: &GraspObject,
    filter: impl Fn(usize, usize, usize) -> bool,
) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for (f, pose) in poses.iter().enumerate() {
        for (k, seg) in pose.phalanx_segments.iter().enumerate() {
            for (i, prim) in object.primitives.iter().enumerate() {
                if !filter(f, k, i) || prim.certainly_separated(seg) {
                    continue;
                }
                worst = worst.max(prim.proximity(seg).penetration);
            }
        }
    }
    worst
}

/// Phalanx/primitive pairs whose penetration is at least `-slack`.
pub(crate) fn contacts_within(
    poses: &[FingerPose; 5],
    object: &GraspObject,
    slack: f64,
    filter: impl Fn(usize, usize) -> bool,
) -> Vec<Contact> {
    let mut out = Vec::new();
    for (f, pose) in poses.iter().enumerate() {
        for (k, seg) in pose.phalanx_segments.iter().enumerate() {
            if !filter(f, k) {
                continue;
            }
            for (i, prim) in object.primitives.iter().enumerate() {
                if prim.certainly_separated(seg) {
                    continue;
                }
                let p = prim.proximity(seg);
                if p.penetration >= -slack {
                    out.push(Contact {
                        finger: pose.finger,
                        phalanx: k,
                        primitive: i,
                        point: p.point,
                        normal: p.normal,
                        penetration: p.penetration.max(0.0),
                        normal_force: 0.0,
                        actuator_displacement: 0.0,
                    });
                }
            }
        }
    }
    out
}

/// Every overlapping (or exactly touching) phalanx/primitive pair.
pub fn detect_contacts(poses: &[FingerPose; 5], object: &GraspObject) -> Vec<Contact> {
    contacts_within(poses, object, 0.0, |_, _| true)
}

/// Number of distinct fingers among `contacts`.
pub fn fingers_in_contact(contacts: &[Contact]) -> usize {
    let mut seen = [false; 5];
    for c in contacts {
        seen[c.finger.index()] = true;
    }
    seen.iter().filter(|&&s| s).count()
}
