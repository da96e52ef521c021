//! Tendon excursion, series-spring tension and joint torques.
//!
//! All tendons are knotted into one carrier, so they share the actuator
//! displacement. Each tendon pulls through its own series spring; this is the
//! only source of differential behaviour between tendons.

use crate::error::Result;
use crate::hand_model::{HandConfig, JointParams, TendonRoute};
use crate::kinematics::{coupling_rates, HandState};

/// Added to the free-motion tension law per radian of finger progress so
/// the law stays strictly increasing when every band stiffness is zero.
const PROGRESS_REGULARISATION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TendonState {
    /// mm
    pub excursion: f64,
    /// N
    pub tension: f64,
    pub slack: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorState {
    /// mm
    pub displacement: f64,
    /// N·m
    pub torque: f64,
    /// mm
    pub pulley_radius: f64,
}

impl ActuatorState {
    /// Pull at the coupling mechanism, N.
    pub fn force(&self) -> f64 {
        self.torque * 1000.0 / self.pulley_radius
    }
}

/// Geometric tendon shortening demanded by the joint angles in `state`, mm.
pub fn tendon_excursion(config: &HandConfig, route: &TendonRoute, state: &HandState) -> f64 {
    route
        .served
        .iter()
        .map(|s| {
            let j = config.joint(s.finger, s.joint);
            j.moment_arm * (state.angle(s.finger, s.joint) - j.rest_angle)
        })
        .sum()
}

/// Series-spring tension; tendons cannot push.
pub fn tendon_tension(route: &TendonRoute, actuator_displacement: f64, excursion: f64) -> f64 {
    (route.spring_stiffness * (actuator_displacement - excursion) + route.pretension).max(0.0)
}

pub fn tendon_state(route: &TendonRoute, actuator_displacement: f64, excursion: f64) -> TendonState {
    let tension = tendon_tension(route, actuator_displacement, excursion);
    TendonState {
        excursion,
        tension,
        slack: tension == 0.0,
    }
}

/// Flexing torque minus the band's restoring torque, N·mm.
pub fn joint_net_torque(joint: &JointParams, tension: f64, angle: f64) -> f64 {
    tension * joint.moment_arm * joint.efficiency - joint.restoring_torque(angle)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceBudget {
    pub feasible: bool,
    /// N, negative when infeasible.
    pub margin: f64,
    pub capacity: f64,
}

/// Can the actuator sustain `tensions` at its maximum torque?
pub fn actuator_force_budget(config: &HandConfig, tensions: &[f64]) -> ForceBudget {
    let capacity = config.actuator.capacity();
    let margin = capacity - tensions.iter().sum::<f64>();
    ForceBudget {
        feasible: margin >= 0.0,
        margin,
        capacity,
    }
}

/// Quasi-static free motion of one finger along its coupled trajectory.
///
/// The finger is described by a single progress coordinate `s` (radians of
/// MCP motion past rest). Joints not held by contact follow
/// `θ = min(limit, rest + rate·s)`; held joints keep their frozen angle. The
/// tension needed to hold the finger at `s` is the rate-weighted restoring
/// torque of the free joints over their rate-weighted effective moment arm.
/// Joints parked at a limit keep contributing their (constant) restoring
/// torque so the law is continuous in `s`.
#[derive(Debug, Clone)]
pub struct FingerTransmission<'a> {
    joints: &'a [JointParams; 3],
    rates: [f64; 3],
    frozen: [Option<f64>; 3],
}

impl<'a> FingerTransmission<'a> {
    pub fn new(joints: &'a [JointParams; 3], frozen: [Option<f64>; 3]) -> Result<Self> {
        Ok(FingerTransmission {
            joints,
            rates: coupling_rates(joints)?,
            frozen,
        })
    }

    pub fn rates(&self) -> [f64; 3] {
        self.rates
    }

    pub fn angles(&self, s: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for i in 0..3 {
            let j = &self.joints[i];
            out[i] = match self.frozen[i] {
                Some(a) => a,
                None => (j.rest_angle + self.rates[i] * s).min(j.limit_angle),
            };
        }
        out
    }

    /// Progress past which no free joint moves.
    pub fn saturation(&self) -> f64 {
        (0..3)
            .filter(|&i| self.frozen[i].is_none())
            .map(|i| {
                let j = &self.joints[i];
                (j.limit_angle - j.rest_angle) / self.rates[i]
            })
            .fold(0.0, f64::max)
    }

    pub fn is_static(&self) -> bool {
        self.frozen.iter().all(Option::is_some)
    }

    /// Tension holding the finger at progress `s`, N.
    pub fn required_tension(&self, s: f64) -> f64 {
        let angles = self.angles(s);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..3 {
            if self.frozen[i].is_some() {
                continue;
            }
            let j = &self.joints[i];
            num += self.rates[i] * j.restoring_torque(angles[i]);
            den += self.rates[i] * j.moment_arm * j.efficiency;
        }
        if den == 0.0 {
            return 0.0;
        }
        num / den + PROGRESS_REGULARISATION * s
    }

    /// Tendon shortening contributed by this finger at progress `s`, mm.
    pub fn excursion(&self, s: f64) -> f64 {
        self.angles(s)
            .iter()
            .zip(self.joints)
            .map(|(a, j)| j.moment_arm * (a - j.rest_angle))
            .sum()
    }

    /// Largest progress in `[floor, saturation]` the finger reaches under
    /// `tension`. Never below `floor`: joints do not extend back.
    pub fn progress_for_tension(&self, tension: f64, floor: f64) -> f64 {
        if self.is_static() {
            return floor;
        }
        let sat = self.saturation().max(floor);
        if self.required_tension(floor) >= tension {
            return floor;
        }
        if self.required_tension(sat) <= tension {
            return sat;
        }
        // Piecewise linear between joint-limit breakpoints.
        let mut knots: Vec<f64> = (0..3)
            .filter(|&i| self.frozen[i].is_none())
            .map(|i| (self.joints[i].limit_angle - self.joints[i].rest_angle) / self.rates[i])
            .filter(|&b| b > floor && b < sat)
            .collect();
        knots.push(sat);
        knots.sort_by(f64::total_cmp);
        let mut lo = floor;
        let mut t_lo = self.required_tension(lo);
        for hi in knots {
            let t_hi = self.required_tension(hi);
            if t_hi >= tension {
                let frac = (tension - t_lo) / (t_hi - t_lo);
                return (lo + frac * (hi - lo)).clamp(lo, hi);
            }
            lo = hi;
            t_lo = t_hi;
        }
        sat
    }
}

/// Equilibrium tension of one tendon at actuator displacement `x`, given the
/// transmissions of the fingers it drives and their progress floors.
/// Returns the tension and each finger's progress.
pub fn solve_tendon(
    route: &TendonRoute,
    fingers: &[(FingerTransmission<'_>, f64)],
    x: f64,
) -> (f64, Vec<f64>) {
    let progress_at = |t: f64| -> Vec<f64> {
        fingers
            .iter()
            .map(|(tr, floor)| tr.progress_for_tension(t, *floor))
            .collect()
    };
    let excursion_at = |s: &[f64]| -> f64 {
        fingers
            .iter()
            .zip(s)
            .map(|((tr, _), &p)| tr.excursion(p))
            .sum()
    };
    // g(T) = T - spring(x - e(T)) is strictly increasing in T.
    let residual = |t: f64| -> f64 {
        let s = progress_at(t);
        t - tendon_tension(route, x, excursion_at(&s))
    };
    let mut lo = 0.0;
    if residual(lo) >= 0.0 {
        return (0.0, progress_at(0.0));
    }
    let mut hi = (route.spring_stiffness * x + route.pretension).max(1e-9);
    while residual(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi.max(1.0) {
            break;
        }
    }
    let s = progress_at(hi);
    let tension = tendon_tension(route, x, excursion_at(&s));
    (tension, s)
}
