//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so
//! the lines always reach the terminal.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use softhand_sim::calibration::{calibrate, trapezoid_holding_force, CalibrationTargets, PRESS_FINGER};
use softhand_sim::geometry::Primitive;
use softhand_sim::grasp::{
    bench_csv, builtin_corpus, builtin_object, close_hand, run_bench, single_finger_press,
    BenchOptions, ClosureOptions, GraspObject, GraspReport,
};
use softhand_sim::hand_model::{
    calibrated_bpi_config, default_bpi_config, FingerName, HandConfig, JointParams,
};
use softhand_sim::kinematics::{
    couple_angles, coupled_pose, coupling_rates, finger_fk_local, hand_fk, rest_dimensions,
};
use softhand_sim::tendon_drive::actuator_force_budget;
use softhand_sim::workspace::{cloud_csv, sample_workspace};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn joints_with_m(m: [f64; 3]) -> [JointParams; 3] {
    let mut j = default_bpi_config().finger(FingerName::Middle).joints.clone();
    for (p, v) in j.iter_mut().zip(m) {
        p.coupling_m = v;
    }
    j
}

fn ac1_coupling_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let m: [f64; 3] = [rng.random_range(1.0..=10.0), rng.random_range(1.0..=10.0), rng.random_range(1.0..=10.0)];
        let t1 = rng.random_range(0.0..=90f64.to_radians());
        let (t2, t3) = couple_angles(t1, &joints_with_m(m)).unwrap();
        let o2 = (1.08 + ((m[0] - m[1]) / m[1]).abs()) * t1;
        let o3 = if t1 == 0.0 { 0.0 } else { (o2 / t1 + ((m[2] - m[1]) / m[2]).abs()) * o2 };
        for (a, b) in [(t2, o2), (t3, o3)] {
            let rel = if b == 0.0 { a.abs() } else { ((a - b) / b).abs() };
            worst = worst.max(rel);
        }
    }
    outcome(worst <= 1e-9, format!("max relative error {worst:.2e}"))
}

fn ac2_rest_geometry() -> Outcome {
    let c = default_bpi_config();
    let (length, span) = rest_dimensions(&c).unwrap();
    let tip = finger_fk_local(c.finger(FingerName::Middle), [0.0; 3]).unwrap().fingertip();
    let straight = tip == Vector3::new(115.0, 0.0, 0.0)
        && c.fingers.iter().all(|f| f.phalanx_lengths.iter().sum::<f64>() == 115.0);
    outcome(
        (length - 200.0).abs() <= 5.0 && (span - 215.0).abs() <= 5.0 && straight,
        format!("length {length:.2} mm, span {span:.2} mm, straight tip {:?}", [tip.x, tip.y, tip.z]),
    )
}

/// Largest gap between a trace state and the coupling curve through it.
fn coupling_gap(config: &HandConfig, angles: &[[f64; 3]; 5]) -> f64 {
    let mut worst: f64 = 0.0;
    for (f, a) in config.fingers.iter().zip(angles) {
        let rates = coupling_rates(&f.joints).unwrap();
        let s = (0..3)
            .map(|i| (a[i] - f.joints[i].rest_angle) / rates[i])
            .fold(0.0, f64::max);
        let (expect, _) = coupled_pose(f, s).unwrap();
        for i in 0..3 {
            worst = worst.max((a[i] - expect[i]).abs());
        }
    }
    worst
}

fn ac3_free_closure() -> Outcome {
    let c = calibrated_bpi_config();
    let opts = ClosureOptions::default();
    let (report, trace) = close_hand(&c, None, &opts).unwrap();
    let at_limits = report.final_state.at_limits(&c, 1e-9);
    let worst = trace
        .records
        .iter()
        .map(|r| coupling_gap(&c, &r.state.angles))
        .fold(0.0, f64::max);
    outcome(
        at_limits && report.contacts.is_empty() && worst <= opts.bisection_tol,
        format!("all joints at limits: {at_limits}, {} records, max coupling gap {worst:.2e} rad", trace.records.len()),
    )
}

fn ac4_step_refinement() -> Outcome {
    let c = calibrated_bpi_config();
    let mut worst: f64 = 0.0;
    let mut changed = Vec::new();
    for obj in builtin_corpus() {
        let (a, _) = close_hand(&c, Some(&obj), &ClosureOptions::with_step(0.05)).unwrap();
        let (b, _) = close_hand(&c, Some(&obj), &ClosureOptions::with_step(0.025)).unwrap();
        if a.fingers_in_contact != b.fingers_in_contact {
            changed.push(obj.name.clone());
        }
        for (x, y) in a.final_state.angles.iter().flatten().zip(b.final_state.angles.iter().flatten()) {
            worst = worst.max((x - y).abs());
        }
    }
    outcome(
        changed.is_empty() && worst < 2e-3,
        format!("max angle change {worst:.2e} rad, contact counts changed on {changed:?}"),
    )
}

fn last_contact(report: &GraspReport, finger: FingerName) -> Option<f64> {
    report
        .contacts
        .iter()
        .filter(|k| k.finger == finger)
        .map(|k| k.actuator_displacement)
        .reduce(f64::max)
}

fn ac5_adaptive_signature() -> Outcome {
    let c = calibrated_bpi_config();
    let spool = builtin_object("large_spool").unwrap();
    let (r, _) = close_hand(&c, Some(&spool), &ClosureOptions::default()).unwrap();
    let flex = |f: FingerName| r.final_state.finger_angles(f).iter().sum::<f64>();
    let (little, index) = (flex(FingerName::Little), flex(FingerName::Index));
    let (tl, ti) = (last_contact(&r, FingerName::Little), last_contact(&r, FingerName::Index));
    let later = matches!((tl, ti), (Some(l), Some(i)) if l > i);
    outcome(
        little > index && later,
        format!(
            "theta sum little {:.1} deg vs index {:.1} deg; last contact little {:?} mm vs index {:?} mm",
            little.to_degrees(),
            index.to_degrees(),
            tl.map(|v| (v * 1000.0).round() / 1000.0),
            ti.map(|v| (v * 1000.0).round() / 1000.0)
        ),
    )
}

fn ac6_contact_pattern() -> Outcome {
    let c = calibrated_bpi_config();
    let count = |name: &str| {
        let o = builtin_object(name).unwrap();
        close_hand(&c, Some(&o), &ClosureOptions::default()).unwrap().0.fingers_in_contact
    };
    let round = ["large_spool", "small_spool", "cling_wrap", "detergent", "tape", "sphere60"];
    let thin = ["card3mm", "usb_stick"];
    let r: Vec<(&str, usize)> = round.iter().map(|n| (*n, count(n))).collect();
    let t: Vec<(&str, usize)> = thin.iter().map(|n| (*n, count(n))).collect();
    outcome(
        r.iter().all(|(_, k)| *k >= 4) && t.iter().all(|(_, k)| *k <= 2),
        format!("round {r:?}; thin {t:?}"),
    )
}

fn ac7_force_calibration() -> Outcome {
    let base = default_bpi_config();
    let fit = calibrate(&base, &CalibrationTargets::default()).unwrap();
    let tuned = fit.apply(&base);
    let holding = trapezoid_holding_force(&tuned).unwrap();
    let press = single_finger_press(&tuned, PRESS_FINGER).unwrap();
    let pass = fit.bracketed
        && tuned.actuator.max_torque == 4.5
        && (holding - 19.8).abs() <= 0.1 * 19.8
        && (press - 5.5).abs() <= 0.2 * 5.5;
    outcome(
        pass,
        format!(
            "pulley {:.4} mm, efficiency {:.4}: holding {holding:.3} N, little press {press:.3} N",
            fit.best.pulley_radius_mm, fit.best.efficiency
        ),
    )
}

fn ac8_bench_rate() -> Outcome {
    let c = calibrated_bpi_config();
    let table = run_bench(&c, &builtin_corpus(), &BenchOptions::default()).unwrap();
    let rate = table.success_rate();
    outcome(
        (0.7..=0.9).contains(&rate),
        format!("overall success {:.1}%", 100.0 * rate),
    )
}

/// A random object somewhere in front of the palm.
fn random_object(rng: &mut ChaCha8Rng, i: usize) -> GraspObject {
    let centre = Vector3::new(
        rng.random_range(-30.0..=40.0),
        rng.random_range(60.0..=170.0),
        0.0,
    );
    let prim = match rng.random_range(0..3) {
        0 => {
            let r = rng.random_range(5.0..=45.0);
            Primitive::sphere(centre + Vector3::new(0.0, 0.0, r + 1.0), r)
        }
        1 => {
            let r = rng.random_range(5.0..=35.0);
            let h = rng.random_range(0.0..=60.0);
            let yaw: f64 = rng.random_range(0.0..=std::f64::consts::PI);
            let d = Vector3::new(yaw.cos(), yaw.sin(), 0.0) * h;
            let c = centre + Vector3::new(0.0, 0.0, r + 1.0);
            Primitive::capsule(c - d, c + d, r)
        }
        _ => {
            let half = Vector3::new(
                rng.random_range(2.0..=60.0),
                rng.random_range(2.0..=60.0),
                rng.random_range(1.0..=40.0),
            );
            let yaw = rng.random_range(-0.5..=0.5);
            Primitive::cuboid(
                centre + Vector3::new(0.0, 0.0, half.z + 1.0),
                half,
                nalgebra::Rotation3::from_axis_angle(&Vector3::z_axis(), yaw),
            )
        }
    };
    GraspObject::new(format!("random{i}"), vec![prim], Some(100.0))
}

/// Invariant violations in one closure, if any.
fn closure_violations(c: &HandConfig, obj: &GraspObject, step: f64) -> Vec<String> {
    let (report, trace) = close_hand(c, Some(obj), &ClosureOptions::with_step(step)).unwrap();
    let mut bad = Vec::new();
    let capacity = c.actuator.capacity();
    let mut seen = 0;
    for (k, r) in trace.records.iter().enumerate() {
        if r.state.tensions.iter().any(|t| *t < 0.0) {
            bad.push(format!("negative tension at record {k}"));
        }
        if !actuator_force_budget(c, &r.state.tensions).feasible
            && r.state.tensions.iter().sum::<f64>() > capacity * (1.0 + 1e-9)
        {
            bad.push(format!("budget exceeded at record {k}"));
        }
        let poses = hand_fk(c, &r.state).unwrap();
        for (f, p) in c.fingers.iter().zip(&poses) {
            if (p.fingertip() - f.mount_position).norm() > f.total_length() + 1e-9 {
                bad.push(format!("{} beyond reach at record {k}", f.name));
            }
        }
        seen += r.new_contacts.len();
        if k == 0 {
            continue;
        }
        let prev = &trace.records[k - 1];
        if r.displacement <= prev.displacement {
            bad.push(format!("displacement not increasing at record {k}"));
        }
        for fi in 0..5 {
            for j in 0..3 {
                let (a, b) = (prev.state.angles[fi][j], r.state.angles[fi][j]);
                if b < a - 1e-12 {
                    bad.push(format!("angle decreased at record {k}"));
                }
                if prev.state.blocked[fi][j] && (!r.state.blocked[fi][j] || a != b) {
                    bad.push(format!("blocked joint moved or released at record {k}"));
                }
            }
        }
    }
    if seen != report.contacts.len() {
        bad.push(format!("trace registered {seen} contacts, report has {}", report.contacts.len()));
    }
    if report.contacts.iter().any(|k| !(k.normal_force >= 0.0)) {
        bad.push("negative contact force".into());
    }
    bad
}

fn ac9_determinism_and_invariants() -> Outcome {
    let c = calibrated_bpi_config();
    let w1 = cloud_csv(&sample_workspace(&c, 2000, 7).unwrap());
    let w2 = cloud_csv(&sample_workspace(&c, 2000, 7).unwrap());
    let opts = BenchOptions {
        trials: 2,
        ..BenchOptions::default()
    };
    let corpus: Vec<GraspObject> = builtin_corpus().into_iter().take(4).collect();
    let b1 = bench_csv(&run_bench(&c, &corpus, &opts).unwrap());
    let b2 = bench_csv(&run_bench(&c, &corpus, &opts).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut failures = Vec::new();
    for i in 0..100 {
        let obj = random_object(&mut rng, i);
        let step = rng.random_range(0.03..=0.2);
        for v in closure_violations(&c, &obj, step) {
            failures.push(format!("case {i}: {v}"));
        }
    }
    let deterministic = w1 == w2 && b1 == b2;
    outcome(
        deterministic && failures.is_empty(),
        format!(
            "byte-identical reruns: {deterministic}; 100 random closures, {} violations{}",
            failures.len(),
            failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Option<Duration>); 9] = [
        ("coupling formula oracle", ac1_coupling_oracle, Some(Duration::from_secs(1))),
        ("rest-pose geometry", ac2_rest_geometry, None),
        ("free-closure equivalence", ac3_free_closure, Some(Duration::from_secs(5))),
        ("step refinement", ac4_step_refinement, None),
        ("adaptive-synergy signature", ac5_adaptive_signature, None),
        ("contact-count pattern", ac6_contact_pattern, None),
        ("force calibration", ac7_force_calibration, None),
        ("bench success rate", ac8_bench_rate, None),
        ("determinism and invariants", ac9_determinism_and_invariants, Some(Duration::from_secs(60))),
    ];
    let mut all = true;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut o = run();
        let took = start.elapsed();
        if let Some(b) = budget {
            if took > *b {
                o.pass = false;
                o.detail.push_str(&format!("; over the {:.0} s budget", b.as_secs_f64()));
            }
        }
        all &= o.pass;
        println!(
            "AC{} {} {name}: {} [{:.2} s]",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
