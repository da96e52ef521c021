//! Adaptive-synergy grasping: contacts, closure, forces and the bench.

mod bench;
mod builtin;
mod closure;
mod contact;
mod force;
mod object;

use nalgebra::Vector3;

use crate::error::Result;
use crate::hand_model::{FingerName, HandConfig, JointId};
use crate::kinematics::HandState;

pub use bench::{bench_csv, run_bench, BenchOptions, BenchRow, BenchTable};
pub use builtin::{
    builtin_corpus, builtin_names, builtin_object, trapezoid_block, TrapezoidDims,
    TRAPEZOID_NAME,
};
pub use closure::{
    blocked_joints, run_closure, ClosureOptions, ClosureResult, ClosureTrace, Termination,
    TraceRecord,
};
pub use contact::{detect_contacts, fingers_in_contact, Contact};
pub use force::{
    contact_forces, estimate_holding_force, has_opposition, lift_capacity, press_obstacle,
    single_finger_press, MIN_LEVER_MM, SUCCESS_WEIGHT_FACTOR,
};
pub use object::{corpus_to_json, load_corpus, load_object, parse_corpus, GraspObject};

/// Outward normal of the palm's grasping face in the hand frame.
pub const PALM_NORMAL: Vector3<f64> = Vector3::new(0.0, 0.0, 1.0);

#[derive(Debug, Clone)]
pub struct GraspReport {
    pub object: Option<String>,
    pub contacts: Vec<Contact>,
    pub fingers_in_contact: usize,
    pub blocked_joints: Vec<(FingerName, JointId)>,
    pub final_state: HandState,
    /// Net contact force along the palm normal, N.
    pub holding_force: f64,
    /// Holding force plus the friction available from lateral squeeze, N.
    pub lift_capacity: f64,
    /// Two fingers push from opposite sides.
    pub opposed: bool,
    pub success: bool,
    pub termination: Termination,
}

/// Closes the hand on `object` and scores the grasp.
pub fn close_hand(
    config: &HandConfig,
    object: Option<&GraspObject>,
    options: &ClosureOptions,
) -> Result<(GraspReport, ClosureTrace)> {
    let raw = run_closure(config, object, options)?;
    let mut contacts = raw.contacts;
    let forces = contact_forces(config, &raw.final_state, &raw.final_poses, &contacts);
    for (c, f) in contacts.iter_mut().zip(&forces) {
        c.normal_force = *f;
    }
    let mut report = GraspReport {
        object: object.map(|o| o.name.clone()),
        fingers_in_contact: fingers_in_contact(&contacts),
        contacts,
        blocked_joints: blocked_joints(&raw.final_state),
        final_state: raw.final_state,
        holding_force: 0.0,
        lift_capacity: 0.0,
        opposed: false,
        success: false,
        termination: raw.termination,
    };
    report.holding_force = estimate_holding_force(&report, config);
    report.lift_capacity = lift_capacity(&report, config);
    report.opposed = has_opposition(&report.contacts);
    let weight = object.map(GraspObject::weight).unwrap_or(0.0);
    report.success = object.is_some()
        && report.fingers_in_contact >= 2
        && report.opposed
        && report.lift_capacity >= SUCCESS_WEIGHT_FACTOR * weight;
    Ok((report, raw.trace))
}
