//! The canonical BRL/Pisa/IIT SoftHand layout.
//!
//! Palm, finger length, splay and thumb angles, joint count and tendon grouping
//! are the published design values. Phalanx split, joint limits, moment arms,
//! coupling `m` values, band stiffness and finger root positions are estimates
//! (see `docs/hand-spec.md`). Root positions were fitted so that the rest pose
//! reproduces the 200 mm overall length and the 215 mm thumb-to-little span.

use nalgebra::Vector3;

use super::{
    ActuatorParams, FingerConfig, FingerName, HandConfig, JointId, JointParams, ServedJoint,
    TendonRoute,
};

/// Elastic band stiffness, N/mm.
const BAND_STIFFNESS: f64 = 0.49;
/// Groove lever arm of the band about the joint, mm.
const BAND_ARM: f64 = 4.0;

pub const PHALANX_LENGTHS: [f64; 4] = [35.0, 30.0, 25.0, 25.0];
pub const PHALANX_RADIUS: f64 = 10.0;

/// Frozen output of `calibrate` against the 19.8 N holding / 5.5 N press
/// targets at 4.5 N·m. `calibration::tests` re-derives these.
pub const CALIBRATED_PULLEY_RADIUS_MM: f64 = 8.7523;
pub const CALIBRATED_EFFICIENCY: f64 = 0.17545;

fn joint(id: JointId, limit_deg: f64) -> JointParams {
    JointParams {
        joint: id,
        moment_arm: 5.0,
        coupling_m: 5.0,
        rest_angle: 0.0,
        limit_angle: limit_deg.to_radians(),
        restoring_stiffness: BAND_STIFFNESS * BAND_ARM * BAND_ARM,
        restoring_preload: 0.0,
        efficiency: 1.0,
    }
}

fn standard_joints() -> [JointParams; 3] {
    [
        joint(JointId::Mcp, 90.0),
        joint(JointId::Pip, 100.0),
        joint(JointId::Dip, 80.0),
    ]
}

fn finger(name: FingerName, root: [f64; 3], yaw_deg: f64, pitch_deg: f64, roll_deg: f64) -> FingerConfig {
    FingerConfig {
        name,
        mount_position: Vector3::from(root),
        mount_yaw: yaw_deg.to_radians(),
        mount_pitch: pitch_deg.to_radians(),
        mount_roll: roll_deg.to_radians(),
        phalanx_lengths: PHALANX_LENGTHS,
        phalanx_radius: PHALANX_RADIUS,
        joints: standard_joints(),
    }
}

fn route(id: &str, fingers: &[FingerName]) -> TendonRoute {
    TendonRoute {
        id: id.to_string(),
        served: fingers
            .iter()
            .flat_map(|&f| JointId::ALL.map(|j| ServedJoint { finger: f, joint: j }))
            .collect(),
        spring_stiffness: 2.0,
        pretension: 0.0,
    }
}

/// The published hand with the un-calibrated 10 mm pulley.
pub fn default_bpi_config() -> HandConfig {
    use FingerName::*;
    let z = -PHALANX_RADIUS;
    HandConfig {
        palm_width: 90.0,
        palm_length: 91.0,
        overall_length_rest: 200.0,
        rest_span: 215.0,
        fingers: vec![
            finger(Thumb, [38.0, 25.0, z], 32.0, 0.0, 60.0),
            finger(Index, [30.0, 82.0, z], 10.0, 0.0, 0.0),
            finger(Middle, [9.0, 85.0, z], 0.0, 0.0, 0.0),
            finger(Third, [-12.0, 82.0, z], -9.0, 0.0, 0.0),
            finger(Little, [-32.0, 74.0, z], -12.0, 0.0, 0.0),
        ],
        tendons: vec![
            route("thumb_index", &[Thumb, Index]),
            route("middle_third", &[Middle, Third]),
            route("little", &[Little]),
        ],
        actuator: ActuatorParams {
            max_torque: 4.5,
            pulley_radius: 10.0,
        },
        friction_coefficient: 0.8,
    }
}

/// [`default_bpi_config`] with the frozen force calibration applied.
pub fn calibrated_bpi_config() -> HandConfig {
    let mut c = default_bpi_config();
    c.actuator.pulley_radius = CALIBRATED_PULLEY_RADIUS_MM;
    c.set_efficiency(CALIBRATED_EFFICIENCY);
    c
}
