//! Joint coupling law and forward kinematics of the finger chains.

use nalgebra::Vector3;

use crate::error::{Result, SimError};
use crate::geometry::Capsule;
use crate::hand_model::{FingerConfig, FingerName, HandConfig, JointId, JointParams};

/// Baseline PIP/MCP speed ratio of the empirical coupling law.
pub const BASE_COUPLING_RATIO: f64 = 1.08;

/// Slack allowed when checking angles against joint limits.
const ANGLE_EPS: f64 = 1e-9;

/// `(θ2/θ1, θ3/θ2)` of the coupling law for one finger.
pub fn coupling_ratios(joints: &[JointParams; 3]) -> Result<(f64, f64)> {
    let [m1, m2, m3] = [
        joints[0].coupling_m,
        joints[1].coupling_m,
        joints[2].coupling_m,
    ];
    if !(m1 > 0.0 && m2 > 0.0 && m3 > 0.0) {
        return Err(SimError::Domain(format!(
            "coupling m values must be > 0, got ({m1}, {m2}, {m3})"
        )));
    }
    let pip = BASE_COUPLING_RATIO + ((m1 - m2) / m2).abs();
    // θ3 = (θ2/θ1 + |(m3-m2)/m3|)·θ2 with θ2/θ1 taken as its constant value.
    let dip = pip + ((m3 - m2) / m3).abs();
    Ok((pip, dip))
}

/// Angular rates of MCP, PIP and DIP per unit MCP rotation.
pub fn coupling_rates(joints: &[JointParams; 3]) -> Result<[f64; 3]> {
    let (pip, dip) = coupling_ratios(joints)?;
    Ok([1.0, pip, pip * dip])
}

/// PIP and DIP angles implied by an MCP angle. No limit clamping.
pub fn couple_angles(theta1: f64, joints: &[JointParams; 3]) -> Result<(f64, f64)> {
    if !(theta1 >= 0.0) {
        return Err(SimError::Domain(format!("theta1 must be >= 0, got {theta1}")));
    }
    let (pip, dip) = coupling_ratios(joints)?;
    let theta2 = pip * theta1;
    Ok((theta2, dip * theta2))
}

/// Point on the coupled trajectory at MCP progress `progress` (rad past rest),
/// clamped to the joint limits. The flags report which joints were clamped.
pub fn coupled_pose(finger: &FingerConfig, progress: f64) -> Result<([f64; 3], [bool; 3])> {
    let rates = coupling_rates(&finger.joints)?;
    let mut angles = [0.0; 3];
    let mut clamped = [false; 3];
    for (i, j) in finger.joints.iter().enumerate() {
        let free = j.rest_angle + rates[i] * progress.max(0.0);
        if free >= j.limit_angle {
            angles[i] = j.limit_angle;
            clamped[i] = true;
        } else {
            angles[i] = free;
        }
    }
    Ok((angles, clamped))
}

/// Finger geometry for one set of joint angles, in the hand frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerPose {
    pub finger: FingerName,
    pub joint_angles: [f64; 3],
    pub root: Vector3<f64>,
    /// MCP, PIP, DIP, fingertip.
    pub joint_positions: [Vector3<f64>; 4],
    /// base, mid1, mid2, tip.
    pub phalanx_segments: [Capsule; 4],
    /// Shared joint axis (hand frame).
    pub joint_axis: Vector3<f64>,
}

impl FingerPose {
    pub fn fingertip(&self) -> Vector3<f64> {
        self.joint_positions[3]
    }

    /// Proximal joint of phalanx `k` (1..=3) as a position.
    pub fn parent_joint_position(&self, phalanx: usize) -> Option<Vector3<f64>> {
        (phalanx >= 1).then(|| self.joint_positions[phalanx - 1])
    }
}

/// Planar chain in the finger-root frame: root, MCP, PIP, DIP, tip. Each
/// joint rotates the remainder of the chain about the root `z` axis.
pub fn planar_chain(lengths: &[f64; 4], angles: &[f64; 3]) -> [Vector3<f64>; 5] {
    let mut pts = [Vector3::zeros(); 5];
    let mut heading = 0.0;
    pts[1] = Vector3::new(lengths[0], 0.0, 0.0);
    for i in 0..3 {
        heading += angles[i];
        let dir = Vector3::new(heading.cos(), heading.sin(), 0.0);
        pts[i + 2] = pts[i + 1] + dir * lengths[i + 1];
    }
    pts
}

fn check_range(finger: &FingerConfig, angles: &[f64; 3]) -> Result<()> {
    for (j, &a) in finger.joints.iter().zip(angles) {
        if !(a >= -ANGLE_EPS && a <= j.limit_angle + ANGLE_EPS) {
            return Err(SimError::JointRange {
                finger: finger.name.to_string(),
                joint: j.joint.to_string(),
                angle_deg: a.to_degrees(),
                limit_deg: j.limit_angle.to_degrees(),
            });
        }
    }
    Ok(())
}

/// Forward kinematics of one finger in its root frame.
pub fn finger_fk_local(finger: &FingerConfig, angles: [f64; 3]) -> Result<FingerPose> {
    check_range(finger, &angles)?;
    Ok(build_pose(finger, angles, |p| p, Vector3::z()))
}

/// Forward kinematics of one finger in the hand frame.
pub fn finger_fk(finger: &FingerConfig, angles: [f64; 3]) -> Result<FingerPose> {
    check_range(finger, &angles)?;
    let rot = finger.root_rotation();
    let origin = finger.mount_position;
    Ok(build_pose(
        finger,
        angles,
        |p| origin + rot * p,
        rot * Vector3::z(),
    ))
}

fn build_pose(
    finger: &FingerConfig,
    angles: [f64; 3],
    to_frame: impl Fn(Vector3<f64>) -> Vector3<f64>,
    joint_axis: Vector3<f64>,
) -> FingerPose {
    let local = planar_chain(&finger.phalanx_lengths, &angles);
    let pts = local.map(&to_frame);
    let r = finger.phalanx_radius;
    FingerPose {
        finger: finger.name,
        joint_angles: angles,
        root: pts[0],
        joint_positions: [pts[1], pts[2], pts[3], pts[4]],
        phalanx_segments: [
            Capsule::new(pts[0], pts[1], r),
            Capsule::new(pts[1], pts[2], r),
            Capsule::new(pts[2], pts[3], r),
            Capsule::new(pts[3], pts[4], r),
        ],
        joint_axis,
    }
}

/// Actuator displacement, joint angles, contact blocks and tendon tensions.
#[derive(Debug, Clone, PartialEq)]
pub struct HandState {
    /// mm of tendon take-up at the coupling mechanism.
    pub actuator_displacement: f64,
    /// Per finger (hand order), MCP/PIP/DIP.
    pub angles: [[f64; 3]; 5],
    /// Joints held by contact.
    pub blocked: [[bool; 3]; 5],
    /// Per tendon, N.
    pub tensions: Vec<f64>,
}

impl HandState {
    pub fn rest(config: &HandConfig) -> Self {
        let mut angles = [[0.0; 3]; 5];
        for (a, f) in angles.iter_mut().zip(&config.fingers) {
            *a = [
                f.joints[0].rest_angle,
                f.joints[1].rest_angle,
                f.joints[2].rest_angle,
            ];
        }
        HandState {
            actuator_displacement: 0.0,
            angles,
            blocked: [[false; 3]; 5],
            tensions: vec![0.0; config.tendons.len()],
        }
    }

    pub fn angle(&self, finger: FingerName, joint: JointId) -> f64 {
        self.angles[finger.index()][joint.index()]
    }

    pub fn finger_angles(&self, finger: FingerName) -> [f64; 3] {
        self.angles[finger.index()]
    }

    /// Every joint at its flexion limit.
    pub fn at_limits(&self, config: &HandConfig, tol: f64) -> bool {
        config.fingers.iter().zip(&self.angles).all(|(f, a)| {
            f.joints
                .iter()
                .zip(a)
                .all(|(j, &v)| (j.limit_angle - v).abs() <= tol)
        })
    }
}

/// Forward kinematics of the whole hand.
pub fn hand_fk(config: &HandConfig, state: &HandState) -> Result<[FingerPose; 5]> {
    let poses: Vec<FingerPose> = config
        .fingers
        .iter()
        .zip(&state.angles)
        .map(|(f, a)| finger_fk(f, *a))
        .collect::<Result<_>>()?;
    Ok(poses.try_into().expect("five fingers"))
}

/// Rest-pose reference dimensions: palm base to middle fingertip, and thumb
/// tip to little fingertip.
pub fn rest_dimensions(config: &HandConfig) -> Result<(f64, f64)> {
    let poses = hand_fk(config, &HandState::rest(config))?;
    let overall = poses[FingerName::Middle.index()].fingertip().norm();
    let span = (poses[FingerName::Thumb.index()].fingertip()
        - poses[FingerName::Little.index()].fingertip())
    .norm();
    Ok((overall, span))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hand_model::default_bpi_config;

    fn joints_with_m(m: [f64; 3]) -> [JointParams; 3] {
        let mut j = default_bpi_config().finger(FingerName::Middle).joints.clone();
        for (p, v) in j.iter_mut().zip(m) {
            p.coupling_m = v;
        }
        j
    }

    #[test]
    fn coupling_zero_input() {
        let (t2, t3) = couple_angles(0.0, &joints_with_m([3.0, 7.0, 2.0])).unwrap();
        assert_eq!((t2, t3), (0.0, 0.0));
    }

    #[test]
    fn coupling_equal_m() {
        let (t2, t3) = couple_angles(10f64.to_radians(), &joints_with_m([5.0, 5.0, 5.0])).unwrap();
        assert!((t2.to_degrees() - 10.8).abs() < 1e-9);
        assert!((t3.to_degrees() - 11.664).abs() < 1e-9);
    }

    #[test]
    fn coupling_unequal_m() {
        let (t2, t3) = couple_angles(20f64.to_radians(), &joints_with_m([5.0, 4.0, 6.0])).unwrap();
        // 1.33 * 20 and (1.33 + 1/3) * 26.6
        assert!((t2.to_degrees() - 26.6).abs() < 1e-9);
        assert!((t3.to_degrees() - (1.33 + 1.0 / 3.0) * 26.6).abs() < 1e-9);
        assert!((t3.to_degrees() - 44.2447).abs() < 1e-4);
    }

    #[test]
    fn coupling_rejects_nonpositive_m() {
        assert!(matches!(
            couple_angles(0.1, &joints_with_m([5.0, 0.0, 5.0])),
            Err(SimError::Domain(_))
        ));
        assert!(matches!(
            couple_angles(0.1, &joints_with_m([-1.0, 5.0, 5.0])),
            Err(SimError::Domain(_))
        ));
    }

    #[test]
    fn straight_finger_in_root_frame() {
        let c = default_bpi_config();
        let pose = finger_fk_local(c.finger(FingerName::Middle), [0.0; 3]).unwrap();
        assert!((pose.fingertip() - Vector3::new(115.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn right_angle_mcp_in_root_frame() {
        let c = default_bpi_config();
        let pose =
            finger_fk_local(c.finger(FingerName::Middle), [90f64.to_radians(), 0.0, 0.0]).unwrap();
        assert!((pose.fingertip() - Vector3::new(35.0, 80.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn chain_matches_explicit_trig() {
        let c = default_bpi_config();
        let a = [30f64, 32.4, 35.0].map(f64::to_radians);
        let pose = finger_fk_local(c.finger(FingerName::Index), a).unwrap();
        // Independent oracle: accumulate heading by hand.
        let (h1, h2, h3) = (a[0], a[0] + a[1], a[0] + a[1] + a[2]);
        let x = 35.0 + 30.0 * h1.cos() + 25.0 * h2.cos() + 25.0 * h3.cos();
        let y = 30.0 * h1.sin() + 25.0 * h2.sin() + 25.0 * h3.sin();
        assert!((pose.fingertip().x - x).abs() < 1e-9);
        assert!((pose.fingertip().y - y).abs() < 1e-9);
        assert_eq!(pose.fingertip().z, 0.0);
    }

    #[test]
    fn angle_beyond_limit_is_range_error() {
        let c = default_bpi_config();
        let err = finger_fk(c.finger(FingerName::Index), [0.0, 0.0, 81f64.to_radians()]).unwrap_err();
        match err {
            SimError::JointRange { finger, joint, .. } => {
                assert_eq!(finger, "index");
                assert_eq!(joint, "DIP");
            }
            other => panic!("unexpected {other}"),
        }
        assert!(finger_fk(c.finger(FingerName::Index), [-0.01, 0.0, 0.0]).is_err());
    }

    #[test]
    fn hand_fk_error_names_finger() {
        let c = default_bpi_config();
        let mut s = HandState::rest(&c);
        s.angles[FingerName::Third.index()][0] = 2.0;
        let msg = hand_fk(&c, &s).unwrap_err().to_string();
        assert!(msg.contains("third"), "{msg}");
    }

    #[test]
    fn rest_dimensions_match_published_values() {
        let (overall, span) = rest_dimensions(&default_bpi_config()).unwrap();
        assert!((overall - 200.0).abs() <= 5.0, "overall {overall}");
        assert!((span - 215.0).abs() <= 5.0, "span {span}");
    }

    #[test]
    fn full_flexion_stays_within_reach() {
        let c = default_bpi_config();
        let mut s = HandState::rest(&c);
        for (a, f) in s.angles.iter_mut().zip(&c.fingers) {
            *a = [0, 1, 2].map(|i| f.joints[i].limit_angle);
        }
        for pose in hand_fk(&c, &s).unwrap() {
            assert!((pose.fingertip() - pose.root).norm() <= 115.0 + 1e-9);
        }
    }

    #[test]
    fn coupled_pose_clamps_at_limits() {
        let c = default_bpi_config();
        let f = c.finger(FingerName::Middle);
        let (a, clamped) = coupled_pose(f, 85f64.to_radians()).unwrap();
        assert_eq!(clamped, [false, false, true]);
        assert_eq!(a[2], f.joints[2].limit_angle);
        assert!((a[1] - 1.08 * 85f64.to_radians()).abs() < 1e-12);
    }
}
