//! Hand-spec files: JSON documents in mm / degrees, overlaid on the built-in
//! default. See `docs/hand-spec.md` for the schema.

use std::fs;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    default_bpi_config, ActuatorParams, FingerConfig, FingerName, HandConfig, JointId,
    JointParams, ServedJoint, TendonRoute,
};
use crate::error::{Result, SimError};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HandDoc {
    palm_width_mm: f64,
    palm_length_mm: f64,
    overall_length_rest_mm: f64,
    rest_span_mm: f64,
    friction_coefficient: f64,
    actuator: ActuatorDoc,
    fingers: FingersDoc,
    tendons: Vec<TendonDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActuatorDoc {
    max_torque_nm: f64,
    pulley_radius_mm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FingersDoc {
    thumb: FingerDoc,
    index: FingerDoc,
    middle: FingerDoc,
    third: FingerDoc,
    little: FingerDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FingerDoc {
    mount_position_mm: [f64; 3],
    mount_yaw_deg: f64,
    mount_pitch_deg: f64,
    mount_roll_deg: f64,
    phalanx_lengths_mm: Vec<f64>,
    phalanx_radius_mm: f64,
    joints: Vec<JointDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointDoc {
    joint: JointId,
    moment_arm_mm: f64,
    coupling_m_mm: f64,
    rest_angle_deg: f64,
    limit_angle_deg: f64,
    restoring_stiffness_nmm_per_rad: f64,
    restoring_preload_nmm: f64,
    efficiency: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TendonDoc {
    id: String,
    served: Vec<ServedJoint>,
    spring_stiffness_n_per_mm: f64,
    pretension_n: f64,
}

/// Reads, overlays on the default and validates a hand-spec file.
pub fn load_hand_spec(path: impl AsRef<Path>) -> Result<HandConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    parse_hand_spec(&text).map_err(|e| match e {
        SimError::Parse { message, .. } => SimError::Parse {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

/// Same as [`load_hand_spec`] for in-memory text.
pub fn parse_hand_spec(text: &str) -> Result<HandConfig> {
    let overlay: Value = serde_json::from_str(text).map_err(|e| SimError::Parse {
        path: "<hand spec>".into(),
        message: e.to_string(),
    })?;
    if !overlay.is_object() {
        return Err(SimError::Parse {
            path: "<hand spec>".into(),
            message: "top level must be an object".into(),
        });
    }
    let mut doc = to_spec_document(&default_bpi_config());
    merge(&mut doc, overlay);
    let doc: HandDoc = serde_json::from_value(doc).map_err(|e| SimError::Parse {
        path: "<hand spec>".into(),
        message: e.to_string(),
    })?;
    let config = from_doc(doc)?;
    config.validate()?;
    Ok(config)
}

/// Serialises a config into the file schema.
pub fn to_spec_document(config: &HandConfig) -> Value {
    let finger_doc = |name: FingerName| {
        let f = config.finger(name);
        FingerDoc {
            mount_position_mm: f.mount_position.into(),
            mount_yaw_deg: f.mount_yaw.to_degrees(),
            mount_pitch_deg: f.mount_pitch.to_degrees(),
            mount_roll_deg: f.mount_roll.to_degrees(),
            phalanx_lengths_mm: f.phalanx_lengths.to_vec(),
            phalanx_radius_mm: f.phalanx_radius,
            joints: f
                .joints
                .iter()
                .map(|j| JointDoc {
                    joint: j.joint,
                    moment_arm_mm: j.moment_arm,
                    coupling_m_mm: j.coupling_m,
                    rest_angle_deg: j.rest_angle.to_degrees(),
                    limit_angle_deg: j.limit_angle.to_degrees(),
                    restoring_stiffness_nmm_per_rad: j.restoring_stiffness,
                    restoring_preload_nmm: j.restoring_preload,
                    efficiency: j.efficiency,
                })
                .collect(),
        }
    };
    let doc = HandDoc {
        palm_width_mm: config.palm_width,
        palm_length_mm: config.palm_length,
        overall_length_rest_mm: config.overall_length_rest,
        rest_span_mm: config.rest_span,
        friction_coefficient: config.friction_coefficient,
        actuator: ActuatorDoc {
            max_torque_nm: config.actuator.max_torque,
            pulley_radius_mm: config.actuator.pulley_radius,
        },
        fingers: FingersDoc {
            thumb: finger_doc(FingerName::Thumb),
            index: finger_doc(FingerName::Index),
            middle: finger_doc(FingerName::Middle),
            third: finger_doc(FingerName::Third),
            little: finger_doc(FingerName::Little),
        },
        tendons: config
            .tendons
            .iter()
            .map(|t| TendonDoc {
                id: t.id.clone(),
                served: t.served.clone(),
                spring_stiffness_n_per_mm: t.spring_stiffness,
                pretension_n: t.pretension,
            })
            .collect(),
    };
    serde_json::to_value(doc).expect("hand document is always serialisable")
}

/// Writes the full (not overlay) document for `config`.
pub fn save_hand_spec(config: &HandConfig, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(&to_spec_document(config))
        .expect("hand document is always serialisable");
    fs::write(path, text + "\n").map_err(|e| SimError::io(path, e))
}

/// Objects merge key by key. Arrays merge element-wise and take the
/// overlay's length; scalars are replaced.
fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (Value::Array(b), Value::Array(o)) => {
            let mut out = Vec::with_capacity(o.len());
            for (i, v) in o.into_iter().enumerate() {
                match b.get(i) {
                    Some(existing) => {
                        let mut slot = existing.clone();
                        merge(&mut slot, v);
                        out.push(slot);
                    }
                    None => out.push(v),
                }
            }
            *b = out;
        }
        (slot, v) => *slot = v,
    }
}

fn from_doc(doc: HandDoc) -> Result<HandConfig> {
    let FingersDoc {
        thumb,
        index,
        middle,
        third,
        little,
    } = doc.fingers;
    let fingers = [
        (FingerName::Thumb, thumb),
        (FingerName::Index, index),
        (FingerName::Middle, middle),
        (FingerName::Third, third),
        (FingerName::Little, little),
    ]
    .into_iter()
    .map(|(name, f)| finger_from_doc(name, f))
    .collect::<Result<Vec<_>>>()?;

    Ok(HandConfig {
        palm_width: doc.palm_width_mm,
        palm_length: doc.palm_length_mm,
        overall_length_rest: doc.overall_length_rest_mm,
        rest_span: doc.rest_span_mm,
        fingers,
        tendons: doc
            .tendons
            .into_iter()
            .map(|t| TendonRoute {
                id: t.id,
                served: t.served,
                spring_stiffness: t.spring_stiffness_n_per_mm,
                pretension: t.pretension_n,
            })
            .collect(),
        actuator: ActuatorParams {
            max_torque: doc.actuator.max_torque_nm,
            pulley_radius: doc.actuator.pulley_radius_mm,
        },
        friction_coefficient: doc.friction_coefficient,
    })
}

fn finger_from_doc(name: FingerName, f: FingerDoc) -> Result<FingerConfig> {
    let field = format!("fingers.{name}");
    if f.joints.len() != 3 {
        return Err(SimError::validation(
            format!("{field}.joints"),
            format!("finger must have exactly 3 joints, found {}", f.joints.len()),
        ));
    }
    let lengths: [f64; 4] = f.phalanx_lengths_mm.as_slice().try_into().map_err(|_| {
        SimError::validation(
            format!("{field}.phalanx_lengths_mm"),
            format!(
                "finger must have exactly 4 phalanges, found {}",
                f.phalanx_lengths_mm.len()
            ),
        )
    })?;
    let joints: Vec<JointParams> = f
        .joints
        .into_iter()
        .map(|j| JointParams {
            joint: j.joint,
            moment_arm: j.moment_arm_mm,
            coupling_m: j.coupling_m_mm,
            rest_angle: j.rest_angle_deg.to_radians(),
            limit_angle: j.limit_angle_deg.to_radians(),
            restoring_stiffness: j.restoring_stiffness_nmm_per_rad,
            restoring_preload: j.restoring_preload_nmm,
            efficiency: j.efficiency,
        })
        .collect();
    let joints: [JointParams; 3] = joints.try_into().expect("length checked above");
    Ok(FingerConfig {
        name,
        mount_position: Vector3::from(f.mount_position_mm),
        mount_yaw: f.mount_yaw_deg.to_radians(),
        mount_pitch: f.mount_pitch_deg.to_radians(),
        mount_roll: f.mount_roll_deg.to_radians(),
        phalanx_lengths: lengths,
        phalanx_radius: f.phalanx_radius_mm,
        joints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_spec_is_default() {
        let c = parse_hand_spec("{}").unwrap();
        let d = default_bpi_config();
        assert_eq!(c.fingers.len(), 5);
        assert_eq!(c.tendons.len(), 3);
        assert_eq!(c.fingers.iter().map(|f| f.joints.len()).sum::<usize>(), 15);
        assert!(configs_close(&c, &d, 1e-12));
    }

    #[test]
    fn two_joint_finger_is_rejected() {
        let text = r#"{"fingers": {"index": {"joints": [{}, {}]}}}"#;
        let err = parse_hand_spec(text).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, SimError::Validation { .. }));
        assert!(msg.contains("finger must have exactly 3 joints"), "{msg}");
        assert!(msg.contains("fingers.index.joints"), "{msg}");
    }

    #[test]
    fn single_field_override() {
        let text = r#"{"fingers": {"little": {"mount_yaw_deg": 15}}}"#;
        let c = parse_hand_spec(text).unwrap();
        let mut expected = default_bpi_config();
        expected.finger_mut(FingerName::Little).mount_yaw = 15f64.to_radians();
        assert!(configs_close(&c, &expected, 1e-12));
        assert!((c.finger(FingerName::Little).mount_yaw.to_degrees() - 15.0).abs() < 1e-12);
    }

    #[test]
    fn malformed_text_is_a_parse_error() {
        assert!(matches!(
            parse_hand_spec("{ not json"),
            Err(SimError::Parse { .. })
        ));
        assert!(matches!(parse_hand_spec("[]"), Err(SimError::Parse { .. })));
        assert!(matches!(
            parse_hand_spec(r#"{"palm_widht_mm": 3}"#),
            Err(SimError::Parse { .. })
        ));
    }

    #[test]
    fn invariant_violation_names_field() {
        let err = parse_hand_spec(r#"{"tendons": [{"spring_stiffness_n_per_mm": 0}]}"#)
            .unwrap_err()
            .to_string();
        // Only one tendon left: the other fingers are unserved.
        assert!(err.contains("spring_stiffness") || err.contains("not served"), "{err}");

        let err = parse_hand_spec(
            r#"{"fingers": {"middle": {"joints": [{"moment_arm_mm": -1}]}}}"#,
        );
        // Element-wise merge keeps length 1 -> joint count error first.
        assert!(err.is_err());

        let err = parse_hand_spec(
            r#"{"fingers": {"middle": {"joints": [{"moment_arm_mm": -1}, {}, {}]}}}"#,
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("fingers.middle.joints.MCP.moment_arm_mm"), "{err}");
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_hand_spec("/nonexistent/hand.json"),
            Err(SimError::Io { .. })
        ));
    }

    #[test]
    fn save_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("hand.json");
        let c = crate::hand_model::calibrated_bpi_config();
        save_hand_spec(&c, &path).unwrap();
        let back = load_hand_spec(&path).unwrap();
        assert!(configs_close(&c, &back, 1e-12));
    }

    pub(crate) fn configs_close(a: &HandConfig, b: &HandConfig, tol: f64) -> bool {
        let close = |x: f64, y: f64| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs()));
        let scalars_a = to_spec_document(a);
        let scalars_b = to_spec_document(b);
        values_close(&scalars_a, &scalars_b, &close)
    }

    fn values_close(a: &Value, b: &Value, close: &dyn Fn(f64, f64) -> bool) -> bool {
        match (a, b) {
            (Value::Number(x), Value::Number(y)) => close(x.as_f64().unwrap(), y.as_f64().unwrap()),
            (Value::Array(x), Value::Array(y)) => {
                x.len() == y.len() && x.iter().zip(y).all(|(p, q)| values_close(p, q, close))
            }
            (Value::Object(x), Value::Object(y)) => {
                x.len() == y.len()
                    && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| values_close(v, w, close)))
            }
            (x, y) => x == y,
        }
    }
}
