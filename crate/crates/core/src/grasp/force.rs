use log::warn;
use nalgebra::{Rotation3, Vector3};

use crate::error::Result;
use crate::geometry::Primitive;
use crate::hand_model::{FingerName, HandConfig};
use crate::kinematics::{finger_fk, hand_fk, FingerPose, HandState};

use super::{close_hand, ClosureOptions, Contact, GraspObject, GraspReport, PALM_NORMAL};

/// Contacts closer than this to their blocking joint axis carry no force.
pub const MIN_LEVER_MM: f64 = 1.0;
/// Grasp succeeds when it can hold this many times the object's weight.
pub const SUCCESS_WEIGHT_FACTOR: f64 = 1.5;

/// Force pad lying on the palm face: half extents in the palm plane and
/// thickness, mm.
const PAD_HALF_SIDE: f64 = 10.0;
const PAD_THICKNESS: f64 = 3.0;

/// Normal force of each contact: the blocking joint's tendon torque over the
/// lever from that joint's axis to the contact point, shared equally by the
/// contacts on one phalanx. Base-phalanx contacts are palm-fixed and carry
/// no tendon force.
pub fn contact_forces(
    config: &HandConfig,
    state: &HandState,
    poses: &[FingerPose; 5],
    contacts: &[Contact],
) -> Vec<f64> {
    contacts
        .iter()
        .map(|c| {
            if c.phalanx == 0 {
                return 0.0;
            }
            let f = c.finger.index();
            let j = c.phalanx - 1;
            let pose = &poses[f];
            let rel = c.point - pose.joint_positions[j];
            let axis = pose.joint_axis;
            let lever = (rel - axis * rel.dot(&axis)).norm();
            if lever < MIN_LEVER_MM {
                warn!(
                    "{} phalanx {} contact {lever:.3} mm from its joint axis; ignored",
                    c.finger, c.phalanx
                );
                return 0.0;
            }
            let Some(t) = config.tendon_of(c.finger) else {
                return 0.0;
            };
            let tension = state.tensions.get(t).copied().unwrap_or(0.0).max(0.0);
            let params = &config.fingers[f].joints[j];
            let sharing = contacts
                .iter()
                .filter(|o| o.finger == c.finger && o.phalanx == c.phalanx)
                .count() as f64;
            tension * params.moment_arm * params.efficiency / lever / sharing
        })
        .collect()
}

fn forces_for(report: &GraspReport, config: &HandConfig) -> Vec<f64> {
    if report.contacts.is_empty() {
        return Vec::new();
    }
    match hand_fk(config, &report.final_state) {
        Ok(poses) => contact_forces(config, &report.final_state, &poses, &report.contacts),
        Err(e) => {
            warn!("final state outside joint ranges: {e}");
            vec![0.0; report.contacts.len()]
        }
    }
}

/// Magnitude of the net contact force along the palm normal, N.
pub fn estimate_holding_force(report: &GraspReport, config: &HandConfig) -> f64 {
    let forces = forces_for(report, config);
    report
        .contacts
        .iter()
        .zip(&forces)
        .map(|(c, f)| f * c.normal.dot(&PALM_NORMAL))
        .sum::<f64>()
        .abs()
}

/// Holding force plus Coulomb friction from the contact forces lying in the
/// palm plane, N.
pub fn lift_capacity(report: &GraspReport, config: &HandConfig) -> f64 {
    let forces = forces_for(report, config);
    let lateral: f64 = report
        .contacts
        .iter()
        .zip(&forces)
        .map(|(c, f)| f * (c.normal - PALM_NORMAL * c.normal.dot(&PALM_NORMAL)).norm())
        .sum();
    estimate_holding_force(report, config) + config.friction_coefficient * lateral
}

/// Two different fingers touch with normals pointing against each other.
pub fn has_opposition(contacts: &[Contact]) -> bool {
    contacts.iter().enumerate().any(|(i, a)| {
        contacts[i + 1..]
            .iter()
            .any(|b| a.finger != b.finger && a.normal.dot(&b.normal) < 0.0)
    })
}

/// Force pad on the palm under the spot where `finger`'s tip lands when
/// every joint is at its limit.
pub fn press_obstacle(config: &HandConfig, finger: FingerName) -> Result<GraspObject> {
    let f = config.finger(finger);
    let fist = finger_fk(f, f.joints.clone().map(|j| j.limit_angle))?;
    let tip = fist.fingertip();
    let pad = Primitive::cuboid(
        Vector3::new(tip.x, tip.y, 0.5 * PAD_THICKNESS),
        Vector3::new(PAD_HALF_SIDE, PAD_HALF_SIDE, 0.5 * PAD_THICKNESS),
        Rotation3::identity(),
    );
    Ok(GraspObject::new(format!("{finger}_press_pad"), vec![pad], None))
}

/// Force the named finger exerts on its pad when the actuator reaches its
/// torque limit, N.
pub fn single_finger_press(config: &HandConfig, finger: FingerName) -> Result<f64> {
    let plate = press_obstacle(config, finger)?;
    let (report, _) = close_hand(config, Some(&plate), &ClosureOptions::default())?;
    Ok(report
        .contacts
        .iter()
        .filter(|c| c.finger == finger)
        .map(|c| c.normal_force)
        .sum())
}
