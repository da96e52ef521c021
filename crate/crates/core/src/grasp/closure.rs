//! Quasi-static closure of the hand around a fixed object.
//!
//! Each finger moves along its coupled trajectory, parameterised by MCP
//! progress. For a given actuator displacement every tendon is solved for the
//! tension at which its series spring balances the restoring torques of the
//! fingers it drives. Contacts are located by bisection on the actuator
//! displacement; a contact on phalanx `k` freezes joint `k-1` and every joint
//! proximal to it, since moving those would drive the phalanx into the
//! object. Distal joints keep closing.

use serde::Serialize;

use crate::error::{Result, SimError};
use crate::hand_model::{FingerName, HandConfig, JointId};
use crate::kinematics::{hand_fk, FingerPose, HandState};
use crate::tendon_drive::{solve_tendon, FingerTransmission};

use super::contact::{contacts_within, max_penetration, Contact};
use super::GraspObject;

/// Touches within this gap of the bisected instant block together.
const CONTACT_SLACK: f64 = 0.02;
/// Relative tolerance on the force-budget boundary.
const BUDGET_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureOptions {
    /// mm of actuator travel before giving up.
    pub max_displacement: f64,
    /// mm per actuator increment.
    pub step: f64,
    /// mm; width of the bracket left by contact bisection.
    pub bisection_tol: f64,
}

impl Default for ClosureOptions {
    fn default() -> Self {
        ClosureOptions {
            max_displacement: 400.0,
            step: 0.05,
            bisection_tol: 1e-3,
        }
    }
}

impl ClosureOptions {
    pub fn with_step(step: f64) -> Self {
        ClosureOptions {
            step,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(SimError::validation("step", "must be > 0"));
        }
        if !(self.max_displacement > 0.0) {
            return Err(SimError::validation("max_displacement", "must be > 0"));
        }
        if !(self.bisection_tol > 0.0) {
            return Err(SimError::validation("bisection_tol", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Nothing can move any more and the actuator reached its torque limit.
    ForceBudget,
    MaxDisplacement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub displacement: f64,
    pub state: HandState,
    pub new_contacts: Vec<Contact>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClosureTrace {
    pub records: Vec<TraceRecord>,
}

/// Raw outcome of a closure, before force estimation.
#[derive(Debug, Clone)]
pub struct ClosureResult {
    pub contacts: Vec<Contact>,
    /// Touches with the support surface.
    pub support_contacts: Vec<Contact>,
    pub final_state: HandState,
    pub final_poses: [FingerPose; 5],
    pub termination: Termination,
    pub trace: ClosureTrace,
}

#[derive(Debug, Clone)]
struct Equilibrium {
    tensions: Vec<f64>,
    progress: [f64; 5],
}

struct Closure<'a> {
    config: &'a HandConfig,
    /// Object primitives followed by the support surface, if any.
    scene: Option<GraspObject>,
    object_primitives: usize,
    tendon_fingers: Vec<Vec<usize>>,
    progress: [f64; 5],
    frozen: [[Option<f64>; 3]; 5],
    registered: Vec<(usize, usize, usize)>,
}

impl<'a> Closure<'a> {
    fn new(config: &'a HandConfig, object: Option<&'a GraspObject>) -> Result<Self> {
        let tendon_fingers: Vec<Vec<usize>> = config
            .tendons
            .iter()
            .map(|t| t.fingers().iter().map(|f| f.index()).collect())
            .collect();
        for f in FingerName::ALL {
            if config.tendon_of(f).is_none() {
                return Err(SimError::Config(format!("{f} is not driven by any tendon")));
            }
        }
        let scene = object.map(|o| {
            let mut s = o.clone();
            s.primitives.extend(o.support_primitive());
            s
        });
        Ok(Closure {
            config,
            scene,
            object_primitives: object.map_or(0, |o| o.primitives.len()),
            tendon_fingers,
            progress: [0.0; 5],
            frozen: [[None; 3]; 5],
            registered: Vec::new(),
        })
    }

    fn transmission(&self, f: usize) -> Result<FingerTransmission<'a>> {
        FingerTransmission::new(&self.config.fingers[f].joints, self.frozen[f])
    }

    fn equilibrium(&self, x: f64) -> Result<Equilibrium> {
        let mut progress = self.progress;
        let mut tensions = Vec::with_capacity(self.config.tendons.len());
        for (route, fingers) in self.config.tendons.iter().zip(&self.tendon_fingers) {
            let list = fingers
                .iter()
                .map(|&f| Ok((self.transmission(f)?, self.progress[f])))
                .collect::<Result<Vec<_>>>()?;
            let (t, s) = solve_tendon(route, &list, x);
            for (&f, p) in fingers.iter().zip(s) {
                progress[f] = p;
            }
            tensions.push(t);
        }
        Ok(Equilibrium { tensions, progress })
    }

    fn angles(&self, progress: &[f64; 5]) -> Result<[[f64; 3]; 5]> {
        let mut out = [[0.0; 3]; 5];
        for f in 0..5 {
            out[f] = self.transmission(f)?.angles(progress[f]);
        }
        Ok(out)
    }

    fn state(&self, x: f64, eq: &Equilibrium) -> Result<HandState> {
        let mut blocked = [[false; 3]; 5];
        for f in 0..5 {
            for j in 0..3 {
                blocked[f][j] = self.frozen[f][j].is_some();
            }
        }
        Ok(HandState {
            actuator_displacement: x,
            angles: self.angles(&eq.progress)?,
            blocked,
            tensions: eq.tensions.clone(),
        })
    }

    /// Can any finger still move?
    fn settled(&self) -> Result<bool> {
        for f in 0..5 {
            let tr = self.transmission(f)?;
            if !tr.is_static() && self.progress[f] < tr.saturation() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Phalanx `k` of finger `f` can still move and is not yet in contact.
    fn candidate(&self, f: usize, k: usize, prim: usize) -> bool {
        k >= 1
            && self.frozen[f][..k].iter().any(Option::is_none)
            && !self.registered.contains(&(f, k, prim))
    }

    fn penetration_at(&self, x: f64) -> Result<(f64, Equilibrium, HandState)> {
        let eq = self.equilibrium(x)?;
        let state = self.state(x, &eq)?;
        let pen = match &self.scene {
            None => f64::NEG_INFINITY,
            Some(obj) => {
                let poses = hand_fk(self.config, &state)?;
                max_penetration(&poses, obj, |f, k, i| self.candidate(f, k, i))
            }
        };
        Ok((pen, eq, state))
    }

    /// Registers touching pairs at `state` and freezes the joints they block.
    fn register(&mut self, state: &HandState, slack: f64, initial: bool) -> Result<Vec<Contact>> {
        let Some(scene) = &self.scene else {
            return Ok(Vec::new());
        };
        let poses = hand_fk(self.config, state)?;
        let found = contacts_within(&poses, scene, slack, |_, _| true);
        let mut new = Vec::new();
        for mut c in found {
            let key = (c.finger.index(), c.phalanx, c.primitive);
            if self.registered.contains(&key) {
                continue;
            }
            let movable = c.phalanx >= 1 && self.candidate(key.0, key.1, key.2);
            if !initial && !movable {
                // Static phalanx resting at a gap inside the slack.
                continue;
            }
            self.registered.push(key);
            c.actuator_displacement = state.actuator_displacement;
            new.push(c);
        }
        for c in &new {
            let f = c.finger.index();
            for j in 0..c.phalanx.min(3) {
                if self.frozen[f][j].is_none() {
                    self.frozen[f][j] = Some(state.angles[f][j]);
                }
            }
        }
        Ok(new)
    }

    /// Largest displacement in `[lo, hi]` whose tensions fit the budget.
    fn budget_boundary(&self, mut lo: f64, mut hi: f64, capacity: f64) -> Result<f64> {
        for _ in 0..200 {
            if hi - lo <= BUDGET_TOL * hi.max(1.0) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let total: f64 = self.equilibrium(mid)?.tensions.iter().sum();
            if total > capacity {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(lo)
    }

    /// Displacement at which the summed tension reaches `capacity`, given
    /// that nothing moves any more. Tensions are then affine in `x`.
    fn static_budget_point(&self, from: f64, capacity: f64, limit: f64) -> Result<f64> {
        let total = |x: f64| -> Result<f64> { Ok(self.equilibrium(x)?.tensions.iter().sum()) };
        if total(from)? >= capacity {
            return Ok(from);
        }
        if total(limit)? <= capacity {
            return Ok(limit);
        }
        self.budget_boundary(from, limit, capacity)
    }
}

/// Runs a closure. `object = None` closes the hand in free air.
pub fn run_closure(
    config: &HandConfig,
    object: Option<&GraspObject>,
    options: &ClosureOptions,
) -> Result<ClosureResult> {
    options.validate()?;
    let capacity = config.actuator.capacity().max(0.0);
    let mut run = Closure::new(config, object)?;
    let mut trace = ClosureTrace::default();
    let mut contacts: Vec<Contact> = Vec::new();

    let eq0 = run.equilibrium(0.0)?;
    let state0 = run.state(0.0, &eq0)?;
    let initial = run.register(&state0, 0.0, true)?;
    contacts.extend(initial.iter().cloned());
    let state0 = run.state(0.0, &eq0)?;
    trace.records.push(TraceRecord {
        displacement: 0.0,
        state: state0.clone(),
        new_contacts: initial,
    });

    let mut x = 0.0;
    let mut state = state0;
    let termination = loop {
        if run.settled()? {
            let xb = run.static_budget_point(x, capacity, options.max_displacement)?;
            let done = if xb >= options.max_displacement && xb > x {
                Termination::MaxDisplacement
            } else {
                Termination::ForceBudget
            };
            if xb > x {
                let eq = run.equilibrium(xb)?;
                state = run.state(xb, &eq)?;
                trace.records.push(TraceRecord {
                    displacement: xb,
                    state: state.clone(),
                    new_contacts: Vec::new(),
                });
            }
            break done;
        }
        if x >= options.max_displacement {
            break Termination::MaxDisplacement;
        }

        let mut x_new = (x + options.step).min(options.max_displacement);
        let mut budget_hit = false;
        let total: f64 = run.equilibrium(x_new)?.tensions.iter().sum();
        if total > capacity {
            x_new = run.budget_boundary(x, x_new, capacity)?;
            budget_hit = true;
        }

        let (pen, eq, new_state) = run.penetration_at(x_new)?;
        if pen > 0.0 {
            let (mut lo, mut hi) = (x, x_new);
            let mut hi_state = new_state;
            let mut hi_eq = eq;
            let mut iterations = 0;
            while hi - lo > options.bisection_tol {
                iterations += 1;
                if iterations > 200 {
                    return Err(SimError::Numerical(format!(
                        "contact bisection did not converge between {lo} and {hi} mm"
                    )));
                }
                let mid = 0.5 * (lo + hi);
                let (p, e, s) = run.penetration_at(mid)?;
                if p > 0.0 {
                    hi = mid;
                    hi_state = s;
                    hi_eq = e;
                } else {
                    lo = mid;
                }
            }
            run.progress = hi_eq.progress;
            let new = run.register(&hi_state, CONTACT_SLACK, false)?;
            if new.is_empty() {
                return Err(SimError::Numerical(format!(
                    "penetration at {hi} mm without a registrable contact"
                )));
            }
            contacts.extend(new.iter().cloned());
            x = hi;
            state = run.state(hi, &hi_eq)?;
            trace.records.push(TraceRecord {
                displacement: hi,
                state: state.clone(),
                new_contacts: new,
            });
            continue;
        }

        run.progress = eq.progress;
        x = x_new;
        state = new_state;
        trace.records.push(TraceRecord {
            displacement: x,
            state: state.clone(),
            new_contacts: Vec::new(),
        });
        if budget_hit {
            break Termination::ForceBudget;
        }
    };

    let final_poses = hand_fk(config, &state)?;
    let (contacts, support_contacts): (Vec<Contact>, Vec<Contact>) = contacts
        .into_iter()
        .partition(|c| c.primitive < run.object_primitives);
    Ok(ClosureResult {
        contacts,
        support_contacts,
        final_state: state,
        final_poses,
        termination,
        trace,
    })
}

/// Every `(finger, joint)` held by contact in `state`.
pub fn blocked_joints(state: &HandState) -> Vec<(FingerName, JointId)> {
    let mut out = Vec::new();
    for f in FingerName::ALL {
        for j in JointId::ALL {
            if state.blocked[f.index()][j.index()] {
                out.push((f, j));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Primitive;
    use crate::hand_model::default_bpi_config;
    use nalgebra::Vector3;

    #[test]
    fn rejects_bad_step() {
        let c = default_bpi_config();
        for step in [0.0, -1.0, f64::NAN] {
            let err = run_closure(&c, None, &ClosureOptions::with_step(step)).unwrap_err();
            assert!(matches!(err, SimError::Validation { .. }));
        }
    }

    #[test]
    fn free_closure_reaches_limits() {
        let c = default_bpi_config();
        let r = run_closure(&c, None, &ClosureOptions::with_step(0.5)).unwrap();
        assert!(r.contacts.is_empty());
        assert!(r.final_state.at_limits(&c, 1e-9));
        assert_eq!(r.termination, Termination::ForceBudget);
        let total: f64 = r.final_state.tensions.iter().sum();
        assert!((total - c.actuator.capacity()).abs() < 1e-6 * total);
        for w in r.trace.records.windows(2) {
            assert!(w[1].displacement > w[0].displacement);
        }
    }

    #[test]
    fn zero_torque_does_not_move() {
        let mut c = default_bpi_config();
        c.actuator.max_torque = 0.0;
        let r = run_closure(&c, None, &ClosureOptions::default()).unwrap();
        assert!(r.final_state.actuator_displacement < 1e-6);
    }

    #[test]
    fn contact_freezes_proximal_joints() {
        let c = default_bpi_config();
        // A slab above the middle finger only.
        let obj = GraspObject::new(
            "slab",
            vec![Primitive::cuboid(
                Vector3::new(9.0, 160.0, 45.0),
                Vector3::new(4.0, 40.0, 5.0),
                nalgebra::Rotation3::identity(),
            )],
            None,
        );
        let r = run_closure(&c, Some(&obj), &ClosureOptions::with_step(0.2)).unwrap();
        assert!(!r.contacts.is_empty());
        let mid = FingerName::Middle.index();
        let first = &r.contacts[0];
        assert_eq!(first.finger, FingerName::Middle);
        for j in 0..first.phalanx {
            assert!(r.final_state.blocked[mid][j]);
        }
        // Blocked angles never change after blocking.
        for j in 0..3 {
            let mut held: Option<f64> = None;
            for rec in &r.trace.records {
                if rec.state.blocked[mid][j] {
                    let a = rec.state.angles[mid][j];
                    if let Some(h) = held {
                        assert_eq!(h, a);
                    }
                    held = Some(a);
                }
            }
        }
    }
}
