//! Parametric hand description.
//!
//! Frames and units used throughout the crate:
//!
//! * Hand frame: origin at the centre of the palm base edge, `+y` along the
//!   palm towards the fingers, `+x` towards the thumb/index side, `+z` along
//!   the palm normal on the palmar side. Objects are grasped at `z > 0`.
//! * Finger root frame: `+x` along the straight finger, `+y` the flexion
//!   direction, `+z` the (shared) joint axis.
//! * Lengths in mm, forces in N, torques in N·mm, angles in radians. Degrees
//!   only appear in files and on the command line.

mod defaults;
mod spec_file;

use std::fmt;
use std::str::FromStr;

use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

pub use defaults::{calibrated_bpi_config, default_bpi_config, CALIBRATED_EFFICIENCY, CALIBRATED_PULLEY_RADIUS_MM};
pub use spec_file::{load_hand_spec, parse_hand_spec, save_hand_spec, to_spec_document};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FingerName {
    Thumb,
    Index,
    Middle,
    Third,
    Little,
}

impl FingerName {
    pub const ALL: [FingerName; 5] = [
        FingerName::Thumb,
        FingerName::Index,
        FingerName::Middle,
        FingerName::Third,
        FingerName::Little,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FingerName::Thumb => "thumb",
            FingerName::Index => "index",
            FingerName::Middle => "middle",
            FingerName::Third => "third",
            FingerName::Little => "little",
        }
    }

    /// Position in [`FingerName::ALL`], which is also the storage order of
    /// [`HandConfig::fingers`].
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for FingerName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FingerName {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "thumb" => Ok(FingerName::Thumb),
            "index" => Ok(FingerName::Index),
            "middle" => Ok(FingerName::Middle),
            "third" | "ring" => Ok(FingerName::Third),
            "little" | "pinky" => Ok(FingerName::Little),
            other => Err(SimError::validation(
                "finger",
                format!("unknown finger '{other}' (expected thumb|index|middle|third|little)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum JointId {
    Mcp,
    Pip,
    Dip,
}

impl JointId {
    pub const ALL: [JointId; 3] = [JointId::Mcp, JointId::Pip, JointId::Dip];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            JointId::Mcp => "MCP",
            JointId::Pip => "PIP",
            JointId::Dip => "DIP",
        }
    }
}

impl fmt::Display for JointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One flexion joint. Angles are measured from the straight finger.
#[derive(Debug, Clone, PartialEq)]
pub struct JointParams {
    pub joint: JointId,
    /// Tendon moment arm about this joint, mm.
    pub moment_arm: f64,
    /// Per-joint `m` value of the empirical coupling law, mm.
    pub coupling_m: f64,
    pub rest_angle: f64,
    /// Maximum flexion.
    pub limit_angle: f64,
    /// Linearised elastic-band stiffness, N·mm/rad.
    pub restoring_stiffness: f64,
    /// N·mm
    pub restoring_preload: f64,
    /// Lumped groove-bearing transmission efficiency in (0, 1].
    pub efficiency: f64,
}

impl JointParams {
    /// Restoring torque of the elastic band at `angle`.
    pub fn restoring_torque(&self, angle: f64) -> f64 {
        self.restoring_stiffness * (angle - self.rest_angle) + self.restoring_preload
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FingerConfig {
    pub name: FingerName,
    /// Finger root (proximal end of the base phalanx) in the hand frame.
    pub mount_position: Vector3<f64>,
    /// In-palm heading. Fingers measure it from the palm's long axis, positive
    /// towards the thumb side; the thumb measures it from the palm's
    /// transverse axis, positive towards the fingers.
    pub mount_yaw: f64,
    /// Tilt of the finger axis out of the palm plane towards the palmar side.
    pub mount_pitch: f64,
    /// Rotation of the flexion plane about the finger axis. Zero flexes
    /// straight out of the palm; positive turns the flexion towards the
    /// fingers (used for thumb opposition).
    pub mount_roll: f64,
    /// base, mid1, mid2, tip (mm). The base phalanx is rigid.
    pub phalanx_lengths: [f64; 4],
    /// Collision capsule radius, mm.
    pub phalanx_radius: f64,
    /// MCP, PIP, DIP.
    pub joints: [JointParams; 3],
}

impl FingerConfig {
    pub fn total_length(&self) -> f64 {
        self.phalanx_lengths.iter().sum()
    }

    pub fn joint(&self, id: JointId) -> &JointParams {
        &self.joints[id.index()]
    }

    pub fn is_thumb(&self) -> bool {
        self.name == FingerName::Thumb
    }

    /// Rotation taking finger-root coordinates into the hand frame.
    pub fn root_rotation(&self) -> Rotation3<f64> {
        let heading = if self.is_thumb() {
            std::f64::consts::FRAC_PI_2 - self.mount_yaw
        } else {
            self.mount_yaw
        };
        let in_plane = Vector3::new(heading.sin(), heading.cos(), 0.0);
        let normal = Vector3::z();
        let (sp, cp) = self.mount_pitch.sin_cos();
        let axis = in_plane * cp + normal * sp;
        let flex0 = -in_plane * sp + normal * cp;
        let (sr, cr) = self.mount_roll.sin_cos();
        let flex = flex0 * cr + flex0.cross(&axis) * sr;
        let joint_axis = axis.cross(&flex);
        Rotation3::from_matrix_unchecked(nalgebra::Matrix3::from_columns(&[axis, flex, joint_axis]))
    }
}

/// One of the tendons: which joints it crosses and its series spring.
#[derive(Debug, Clone, PartialEq)]
pub struct TendonRoute {
    pub id: String,
    pub served: Vec<ServedJoint>,
    /// Series (soft-synergy) spring, N/mm.
    pub spring_stiffness: f64,
    /// N
    pub pretension: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ServedJoint {
    pub finger: FingerName,
    pub joint: JointId,
}

impl TendonRoute {
    /// Fingers served by this tendon, in hand order, without repeats.
    pub fn fingers(&self) -> Vec<FingerName> {
        let mut out: Vec<FingerName> = self.served.iter().map(|s| s.finger).collect();
        out.sort();
        out.dedup();
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActuatorParams {
    /// N·m
    pub max_torque: f64,
    /// mm
    pub pulley_radius: f64,
}

impl ActuatorParams {
    /// Pulling force available at the tendon coupling, N.
    pub fn capacity(&self) -> f64 {
        self.max_torque * 1000.0 / self.pulley_radius
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HandConfig {
    pub palm_width: f64,
    pub palm_length: f64,
    /// Reference value checked against rest-pose kinematics.
    pub overall_length_rest: f64,
    /// Reference value checked against rest-pose kinematics.
    pub rest_span: f64,
    /// Stored in [`FingerName::ALL`] order.
    pub fingers: Vec<FingerConfig>,
    pub tendons: Vec<TendonRoute>,
    pub actuator: ActuatorParams,
    /// Coulomb coefficient of the fingertip coating; only used for lift
    /// capacity.
    pub friction_coefficient: f64,
}

impl HandConfig {
    pub fn finger(&self, name: FingerName) -> &FingerConfig {
        &self.fingers[name.index()]
    }

    pub fn finger_mut(&mut self, name: FingerName) -> &mut FingerConfig {
        &mut self.fingers[name.index()]
    }

    pub fn joint(&self, finger: FingerName, joint: JointId) -> &JointParams {
        self.finger(finger).joint(joint)
    }

    /// Index of the tendon that drives `finger`.
    pub fn tendon_of(&self, finger: FingerName) -> Option<usize> {
        self.tendons
            .iter()
            .position(|t| t.served.iter().any(|s| s.finger == finger))
    }

    /// Applies one transmission efficiency to every joint.
    pub fn set_efficiency(&mut self, efficiency: f64) {
        for finger in &mut self.fingers {
            for joint in &mut finger.joints {
                joint.efficiency = efficiency;
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("palm_width", self.palm_width)?;
        positive("palm_length", self.palm_length)?;
        positive("overall_length_rest", self.overall_length_rest)?;
        positive("rest_span", self.rest_span)?;
        if !(self.friction_coefficient.is_finite() && self.friction_coefficient >= 0.0) {
            return Err(SimError::validation(
                "friction_coefficient",
                "must be finite and >= 0",
            ));
        }

        if self.fingers.len() != 5 {
            return Err(SimError::validation(
                "fingers",
                format!("hand must have exactly 5 fingers, found {}", self.fingers.len()),
            ));
        }
        for (slot, (finger, expected)) in self.fingers.iter().zip(FingerName::ALL).enumerate() {
            if finger.name != expected {
                return Err(SimError::validation(
                    format!("fingers[{slot}].name"),
                    format!("expected {expected}, found {}", finger.name),
                ));
            }
            validate_finger(finger)?;
        }

        if self.tendons.is_empty() {
            return Err(SimError::validation("tendons", "at least one tendon is required"));
        }
        let mut owner = [[None::<usize>; 3]; 5];
        for (ti, tendon) in self.tendons.iter().enumerate() {
            let field = format!("tendons.{}", tendon.id);
            if !(tendon.spring_stiffness.is_finite() && tendon.spring_stiffness > 0.0) {
                return Err(SimError::validation(
                    format!("{field}.spring_stiffness"),
                    "must be > 0",
                ));
            }
            if !(tendon.pretension.is_finite() && tendon.pretension >= 0.0) {
                return Err(SimError::validation(format!("{field}.pretension"), "must be >= 0"));
            }
            if tendon.served.is_empty() {
                return Err(SimError::validation(
                    format!("{field}.served"),
                    "tendon serves no joints",
                ));
            }
            for s in &tendon.served {
                let slot = &mut owner[s.finger.index()][s.joint.index()];
                if let Some(prev) = slot {
                    return Err(SimError::validation(
                        format!("{field}.served"),
                        format!(
                            "{} {} is already served by tendon {}",
                            s.finger, s.joint, self.tendons[*prev].id
                        ),
                    ));
                }
                *slot = Some(ti);
            }
        }
        for name in FingerName::ALL {
            let row = owner[name.index()];
            for joint in JointId::ALL {
                if row[joint.index()].is_none() {
                    return Err(SimError::validation(
                        "tendons",
                        format!("{name} {joint} is not served by any tendon"),
                    ));
                }
            }
            if row.iter().any(|t| *t != row[0]) {
                return Err(SimError::validation(
                    "tendons",
                    format!("all joints of the {name} finger must share one tendon"),
                ));
            }
        }

        let a = &self.actuator;
        if !(a.max_torque.is_finite() && (0.75..=4.5).contains(&a.max_torque)) {
            return Err(SimError::validation(
                "actuator.max_torque_nm",
                format!("{} outside the motor range [0.75, 4.5] N·m", a.max_torque),
            ));
        }
        positive("actuator.pulley_radius_mm", a.pulley_radius)?;
        Ok(())
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(SimError::validation(field, format!("must be > 0, got {v}")))
    }
}

fn validate_finger(f: &FingerConfig) -> Result<()> {
    let base = format!("fingers.{}", f.name);
    for (i, len) in f.phalanx_lengths.iter().enumerate() {
        positive(&format!("{base}.phalanx_lengths_mm[{i}]"), *len)?;
    }
    positive(&format!("{base}.phalanx_radius_mm"), f.phalanx_radius)?;
    for v in [f.mount_yaw, f.mount_pitch, f.mount_roll] {
        if !v.is_finite() {
            return Err(SimError::validation(&base, "mount angles must be finite"));
        }
    }
    for (j, expected) in f.joints.iter().zip(JointId::ALL) {
        let field = format!("{base}.joints.{expected}");
        if j.joint != expected {
            return Err(SimError::validation(
                format!("{field}.joint"),
                "joints must be ordered MCP, PIP, DIP",
            ));
        }
        positive(&format!("{field}.moment_arm_mm"), j.moment_arm)?;
        positive(&format!("{field}.coupling_m_mm"), j.coupling_m)?;
        if !(0.0 <= j.rest_angle && j.rest_angle < j.limit_angle && j.limit_angle <= std::f64::consts::PI) {
            return Err(SimError::validation(
                format!("{field}.limit_angle_deg"),
                "require 0 <= rest_angle < limit_angle <= 180 deg",
            ));
        }
        if !(j.restoring_stiffness.is_finite() && j.restoring_stiffness >= 0.0) {
            return Err(SimError::validation(
                format!("{field}.restoring_stiffness_nmm_per_rad"),
                "must be >= 0",
            ));
        }
        if !(j.restoring_preload.is_finite() && j.restoring_preload >= 0.0) {
            return Err(SimError::validation(
                format!("{field}.restoring_preload_nmm"),
                "must be >= 0",
            ));
        }
        if !(j.efficiency > 0.0 && j.efficiency <= 1.0) {
            return Err(SimError::validation(
                format!("{field}.efficiency"),
                "must be in (0, 1]",
            ));
        }
    }
    Ok(())
}
