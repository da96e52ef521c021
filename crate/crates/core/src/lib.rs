//! Quasi-static simulator for single-actuator, tendon-driven underactuated
//! hands, with the BRL/Pisa/IIT SoftHand as the built-in layout.

pub mod calibration;
pub mod error;
pub mod geometry;
pub mod grasp;
pub mod hand_model;
pub mod kinematics;
pub mod parallel;
pub mod report;
pub mod svg;
pub mod tendon_drive;
pub mod workspace;

pub use error::{Result, SimError};
