use nalgebra::Vector3;
use proptest::prelude::*;

use softhand_sim::geometry::Primitive;
use softhand_sim::grasp::{close_hand, run_closure, ClosureOptions, GraspObject};
use softhand_sim::hand_model::{
    calibrated_bpi_config, default_bpi_config, FingerName, JointId, ServedJoint, TendonRoute,
};
use softhand_sim::kinematics::{hand_fk, HandState};
use softhand_sim::tendon_drive::{
    actuator_force_budget, solve_tendon, tendon_excursion, tendon_tension, FingerTransmission,
};

fn route_for(finger: FingerName, k: f64) -> TendonRoute {
    TendonRoute {
        id: format!("{finger}"),
        served: JointId::ALL
            .iter()
            .map(|&joint| ServedJoint { finger, joint })
            .collect(),
        spring_stiffness: k,
        pretension: 0.0,
    }
}

fn angles_from(fracs: &[f64]) -> HandState {
    let c = default_bpi_config();
    let mut s = HandState::rest(&c);
    for (fi, f) in c.fingers.iter().enumerate() {
        for j in 0..3 {
            let p = &f.joints[j];
            s.angles[fi][j] = p.rest_angle + fracs[3 * fi + j] * (p.limit_angle - p.rest_angle);
        }
    }
    s
}

proptest! {
    #[test]
    fn tension_is_never_negative(
        k in 0.0..50.0f64,
        pre in 0.0..20.0f64,
        x in -50.0..400.0f64,
        e in -50.0..400.0f64,
    ) {
        let mut r = route_for(FingerName::Index, k);
        r.pretension = pre;
        prop_assert!(tendon_tension(&r, x, e) >= 0.0);
    }

    #[test]
    fn excursion_grows_with_every_angle(
        a in prop::collection::vec(0.0..=1.0f64, 15),
        d in prop::collection::vec(0.0..=1.0f64, 15),
    ) {
        let c = default_bpi_config();
        let b: Vec<f64> = a.iter().zip(&d).map(|(x, y)| (x + y * (1.0 - x)).min(1.0)).collect();
        let (lo, hi) = (angles_from(&a), angles_from(&b));
        for t in &c.tendons {
            prop_assert!(tendon_excursion(&c, t, &hi) >= tendon_excursion(&c, t, &lo));
        }
    }

    /// One tendon's finger is held fast, the other's is free.
    #[test]
    fn blocked_tendon_loads_while_free_tendon_moves(x1 in 0.5..15.0f64, dx in 0.05..5.0f64) {
        let c = default_bpi_config();
        let held = c.finger(FingerName::Index);
        let free = c.finger(FingerName::Middle);
        let frozen = [0, 1, 2].map(|i| Some(held.joints[i].rest_angle));
        let held_tr = FingerTransmission::new(&held.joints, frozen).unwrap();
        let free_tr = FingerTransmission::new(&free.joints, [None; 3]).unwrap();
        let held_route = route_for(FingerName::Index, 2.0);
        let free_route = route_for(FingerName::Middle, 2.0);
        let x2 = x1 + dx;

        let (t1, _) = solve_tendon(&held_route, &[(held_tr.clone(), 0.0)], x1);
        let (t2, _) = solve_tendon(&held_route, &[(held_tr, 0.0)], x2);
        prop_assert!(t2 > t1);

        let (_, s1) = solve_tendon(&free_route, &[(free_tr.clone(), 0.0)], x1);
        let (_, s2) = solve_tendon(&free_route, &[(free_tr.clone(), s1[0])], x2);
        prop_assume!(s1[0] < free_tr.saturation());
        prop_assert!(free_tr.excursion(s2[0]) > free_tr.excursion(s1[0]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closure_on_a_sphere_is_sound(
        r in 8.0..45.0f64,
        x in -30.0..40.0f64,
        y in 60.0..160.0f64,
        step in 0.04..0.2f64,
    ) {
        let c = calibrated_bpi_config();
        let obj = GraspObject::new("ball", vec![Primitive::sphere(Vector3::new(x, y, r + 1.0), r)], Some(100.0));
        let (report, trace) = close_hand(&c, Some(&obj), &ClosureOptions::with_step(step)).unwrap();
        let cap = c.actuator.capacity();
        for w in trace.records.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            prop_assert!(b.displacement > a.displacement);
            for fi in 0..5 {
                for j in 0..3 {
                    prop_assert!(b.state.angles[fi][j] >= a.state.angles[fi][j] - 1e-12);
                    if a.state.blocked[fi][j] {
                        prop_assert!(b.state.blocked[fi][j]);
                        prop_assert_eq!(a.state.angles[fi][j], b.state.angles[fi][j]);
                    }
                }
            }
        }
        for rec in &trace.records {
            prop_assert!(rec.state.tensions.iter().all(|t| *t >= 0.0));
            prop_assert!(actuator_force_budget(&c, &rec.state.tensions).margin >= -1e-9 * cap);
        }
        prop_assert!(report.contacts.iter().all(|k| k.normal_force >= 0.0));
        prop_assert!(report.fingers_in_contact <= 5);
    }
}

#[test]
fn support_surface_stops_fingers_without_counting() {
    let c = calibrated_bpi_config();
    let table = 30.0;
    let obj = GraspObject::new(
        "pebble",
        vec![Primitive::sphere(Vector3::new(5.0, 40.0, 6.0), 5.0)],
        Some(10.0),
    )
    .on_support(table);
    let raw = run_closure(&c, Some(&obj), &ClosureOptions::default()).unwrap();
    assert!(!raw.support_contacts.is_empty());
    assert!(raw.final_state.blocked.iter().flatten().any(|b| *b));
    let poses = hand_fk(&c, &raw.final_state).unwrap();
    for p in &poses {
        for q in p.joint_positions.iter() {
            assert!(q.z <= table + 1e-2, "{q:?} passed through the support");
        }
    }
    let (report, _) = close_hand(&c, Some(&obj), &ClosureOptions::default()).unwrap();
    assert_eq!(report.contacts.len(), raw.contacts.len());
}
