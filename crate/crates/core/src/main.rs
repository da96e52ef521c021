use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use softhand_sim::calibration::{calibrate, curve_csv, CalibrationTargets};
use softhand_sim::grasp::{
    bench_csv, builtin_corpus, builtin_object, close_hand, load_corpus, load_object, run_bench,
    BenchOptions, ClosureOptions, GraspObject,
};
use softhand_sim::hand_model::{
    calibrated_bpi_config, load_hand_spec, to_spec_document, FingerName, HandConfig,
};
use softhand_sim::kinematics::{couple_angles, finger_fk, finger_fk_local, hand_fk, rest_dimensions};
use softhand_sim::report::{
    angle_table, bench_svg, finger_side_svg, grasp_svg, trace_csv, write_output, RunManifest,
};
use softhand_sim::workspace::{cloud_csv, cloud_svg, sample_workspace, workspace_stats};
use softhand_sim::{Result, SimError};

/// Quasi-static simulator for the BRL/Pisa/IIT SoftHand and similar
/// single-actuator tendon-driven hands.
#[derive(Parser)]
#[command(name = "softhand-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArg {
    /// Hand-spec JSON, overlaid on the uncalibrated default hand. Without
    /// it the calibrated default hand is used.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<HandConfig> {
        match &self.config {
            Some(p) => load_hand_spec(p),
            None => Ok(calibrated_bpi_config()),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Forward kinematics of one finger.
    Fk {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        finger: FingerName,
        #[arg(long)]
        theta1_deg: f64,
        /// Needs --theta3-deg too; otherwise both follow the coupling law.
        #[arg(long, requires = "theta3_deg")]
        theta2_deg: Option<f64>,
        #[arg(long, requires = "theta2_deg")]
        theta3_deg: Option<f64>,
        /// Directory for a side-view SVG.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo fingertip workspace.
    Workspace {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value = "out/workspace")]
        out: PathBuf,
    },
    /// Close the hand on one object.
    Grasp {
        #[command(flatten)]
        config: ConfigArg,
        /// Builtin name, object JSON file, or `none` for a free closure.
        #[arg(long)]
        object: String,
        /// Actuator increment, mm.
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        /// Actuator travel limit, mm.
        #[arg(long, default_value_t = 400.0)]
        max_displacement: f64,
        #[arg(long, default_value = "out/grasp")]
        out: PathBuf,
    },
    /// Repeated jittered grasps over an object corpus.
    Bench {
        #[command(flatten)]
        config: ConfigArg,
        /// Corpus JSON; the builtin corpus when omitted.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        /// Planar position jitter, mm.
        #[arg(long, default_value_t = 3.0)]
        jitter: f64,
        /// Yaw jitter, deg.
        #[arg(long, default_value_t = 5.0)]
        jitter_deg: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        #[arg(long, default_value = "out/bench")]
        out: PathBuf,
    },
    /// Fit pulley radius and efficiency to measured forces.
    Calibrate {
        #[command(flatten)]
        config: ConfigArg,
        /// N, on the trapezoidal calibration block.
        #[arg(long, default_value_t = 19.8)]
        target_holding_force: f64,
        /// N, little finger pressing on the palm.
        #[arg(long, default_value_t = 5.5)]
        target_finger_force: f64,
        #[arg(long, default_value = "out/calibrate")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Fk {
            config,
            finger,
            theta1_deg,
            theta2_deg,
            theta3_deg,
            out,
        } => cmd_fk(&config, finger, theta1_deg, theta2_deg.zip(theta3_deg), out.as_deref()),
        Command::Workspace {
            config,
            samples,
            seed,
            out,
        } => cmd_workspace(&config, samples, seed, &out),
        Command::Grasp {
            config,
            object,
            step,
            max_displacement,
            out,
        } => {
            let options = ClosureOptions {
                step,
                max_displacement,
                ..ClosureOptions::default()
            };
            cmd_grasp(&config, &object, &options, &out)
        }
        Command::Bench {
            config,
            corpus,
            trials,
            jitter,
            jitter_deg,
            seed,
            step,
            out,
        } => {
            let options = BenchOptions {
                trials,
                jitter_mm: jitter,
                jitter_deg,
                seed,
                closure: ClosureOptions::with_step(step),
            };
            cmd_bench(&config, corpus.as_deref(), &options, &out)
        }
        Command::Calibrate {
            config,
            target_holding_force,
            target_finger_force,
            out,
        } => {
            let targets = CalibrationTargets {
                holding_n: target_holding_force,
                press_n: target_finger_force,
            };
            cmd_calibrate(&config, &targets, &out)
        }
    }
}

fn cmd_fk(
    config: &ConfigArg,
    finger: FingerName,
    theta1_deg: f64,
    distal_deg: Option<(f64, f64)>,
    out: Option<&Path>,
) -> Result<u8> {
    let hand = config.load()?;
    let f = hand.finger(finger);
    let t1 = theta1_deg.to_radians();
    let (t2, t3) = match distal_deg {
        Some((a, b)) => (a.to_radians(), b.to_radians()),
        None => couple_angles(t1, &f.joints)?,
    };
    let angles = [t1, t2, t3];
    let local = finger_fk_local(f, angles)?;
    let world = finger_fk(f, angles)?;
    println!(
        "{finger}: theta1 {:.3} deg, theta2 {:.3} deg, theta3 {:.3} deg",
        theta1_deg,
        t2.to_degrees(),
        t3.to_degrees()
    );
    println!("point       root_x    root_y    root_z    hand_x    hand_y    hand_z");
    let names = ["MCP", "PIP", "DIP", "tip"];
    for (i, name) in names.iter().enumerate() {
        let l = local.joint_positions[i];
        let w = world.joint_positions[i];
        println!(
            "{name:<6} {:>9.3} {:>9.3} {:>9.3} {:>9.3} {:>9.3} {:>9.3}",
            l.x, l.y, l.z, w.x, w.y, w.z
        );
    }
    if let Some(dir) = out {
        let title = format!("{finger} at {theta1_deg:.1} deg MCP");
        write_output(dir, "fk_side.svg", &finger_side_svg(&local, &title))?;
        manifest(
            "fk",
            config,
            None,
            dir,
            json!({"finger": finger, "theta1_deg": theta1_deg, "theta2_deg": t2.to_degrees(), "theta3_deg": t3.to_degrees()}),
        )?;
    }
    Ok(0)
}

fn manifest(
    sub: &str,
    config: &ConfigArg,
    seed: Option<u64>,
    dir: &Path,
    parameters: serde_json::Value,
) -> Result<()> {
    RunManifest::new(sub, config.config.as_deref(), seed, dir, parameters).write(dir)?;
    Ok(())
}

fn cmd_workspace(config: &ConfigArg, samples: usize, seed: u64, out: &Path) -> Result<u8> {
    let hand = config.load()?;
    let cloud = sample_workspace(&hand, samples, seed)?;
    let stats = workspace_stats(&hand, &cloud)?;
    let (_, span) = rest_dimensions(&hand)?;
    write_output(out, "workspace.csv", &cloud_csv(&cloud))?;
    write_output(out, "workspace.svg", &cloud_svg(&hand, &cloud))?;
    let summary = json!({"rest_span_mm": span, "stats": stats});
    write_output(out, "workspace_stats.json", &(serde_json::to_string_pretty(&summary).expect("stats serialize") + "\n"))?;
    manifest("workspace", config, Some(seed), out, json!({"samples": samples, "seed": seed}))?;
    println!("{samples} samples, seed {seed}; rest thumb-little span {span:.2} mm");
    println!("finger   depth_mm  centroid_x  centroid_y  centroid_z  thumb_gap_mm");
    for f in &stats.fingers {
        let gap = stats
            .opposition
            .iter()
            .find(|o| o.finger == f.finger)
            .map(|o| format!("{:.2}", o.min_distance))
            .unwrap_or_else(|| "-".into());
        println!(
            "{:<8} {:>8.2} {:>11.2} {:>11.2} {:>11.2} {:>13}",
            f.finger.as_str(),
            f.depth,
            f.centroid.x,
            f.centroid.y,
            f.centroid.z,
            gap
        );
    }
    println!("thumb opposition overlap {:.1} mm^3", stats.opposition_overlap_mm3);
    Ok(0)
}

fn resolve_object(spec: &str) -> Result<Option<GraspObject>> {
    if spec == "none" {
        return Ok(None);
    }
    let path = Path::new(spec);
    if path.exists() {
        return load_object(path).map(Some);
    }
    builtin_object(spec).map(Some)
}

fn cmd_grasp(config: &ConfigArg, object: &str, options: &ClosureOptions, out: &Path) -> Result<u8> {
    let hand = config.load()?;
    let obj = resolve_object(object)?;
    let (report, trace) = close_hand(&hand, obj.as_ref(), options)?;
    let poses = hand_fk(&hand, &report.final_state)?;
    write_output(out, "trace.csv", &trace_csv(&hand, &trace))?;
    write_output(out, "grasp.svg", &grasp_svg(&hand, &poses, obj.as_ref(), &report))?;
    let contacts: Vec<_> = report
        .contacts
        .iter()
        .map(|c| {
            json!({
                "finger": c.finger, "phalanx": c.phalanx,
                "point_mm": [c.point.x, c.point.y, c.point.z],
                "normal": [c.normal.x, c.normal.y, c.normal.z],
                "normal_force_N": c.normal_force,
                "actuator_displacement_mm": c.actuator_displacement,
            })
        })
        .collect();
    let summary = json!({
        "object": report.object,
        "fingers_in_contact": report.fingers_in_contact,
        "holding_force_N": report.holding_force,
        "lift_capacity_N": report.lift_capacity,
        "opposed": report.opposed,
        "success": report.success,
        "termination": report.termination,
        "actuator_displacement_mm": report.final_state.actuator_displacement,
        "tensions_N": report.final_state.tensions,
        "blocked_joints": report.blocked_joints,
        "contacts": contacts,
    });
    write_output(out, "report.json", &(serde_json::to_string_pretty(&summary).expect("report serializes") + "\n"))?;
    manifest(
        "grasp",
        config,
        None,
        out,
        json!({"object": object, "step_mm": options.step, "max_displacement_mm": options.max_displacement}),
    )?;
    println!("object: {}", report.object.as_deref().unwrap_or("none"));
    println!("fingers_in_contact: {}", report.fingers_in_contact);
    println!("holding_force_N: {:.4}", report.holding_force);
    println!("lift_capacity_N: {:.4}", report.lift_capacity);
    println!("success: {}", report.success);
    print!("{}", angle_table(&report.final_state));
    Ok(0)
}

fn cmd_bench(config: &ConfigArg, corpus: Option<&Path>, options: &BenchOptions, out: &Path) -> Result<u8> {
    let hand = config.load()?;
    let objects = match corpus {
        Some(p) => load_corpus(p)?,
        None => builtin_corpus(),
    };
    let table = run_bench(&hand, &objects, options)?;
    let csv = bench_csv(&table);
    write_output(out, "bench.csv", &csv)?;
    write_output(out, "bench.svg", &bench_svg(&table))?;
    manifest(
        "bench",
        config,
        Some(options.seed),
        out,
        json!({
            "corpus": corpus, "trials": options.trials, "jitter_mm": options.jitter_mm,
            "jitter_deg": options.jitter_deg, "seed": options.seed, "step_mm": options.closure.step,
        }),
    )?;
    print!("{csv}");
    println!("overall success rate: {:.1}%", 100.0 * table.success_rate());
    Ok(0)
}

fn cmd_calibrate(config: &ConfigArg, targets: &CalibrationTargets, out: &Path) -> Result<u8> {
    targets.validate()?;
    let hand = config.load()?;
    let fit = calibrate(&hand, targets)?;
    write_output(out, "calibration_curve.csv", &curve_csv(&fit))?;
    manifest(
        "calibrate",
        config,
        None,
        out,
        json!({"target_holding_force_N": targets.holding_n, "target_finger_force_N": targets.press_n}),
    )?;
    if !fit.bracketed {
        return Err(SimError::Numerical(format!(
            "targets not bracketed by the search ranges; see {}",
            out.join("calibration_curve.csv").display()
        )));
    }
    let tuned = fit.apply(&hand);
    let doc = to_spec_document(&tuned);
    let overlay = json!({
        "actuator": {"pulley_radius_mm": fit.best.pulley_radius_mm},
        "fingers": doc["fingers"].as_object().map(|fingers| {
            fingers
                .keys()
                .map(|k| {
                    let joint = json!({"efficiency": fit.best.efficiency});
                    (k.clone(), json!({"joints": [joint.clone(), joint.clone(), joint]}))
                })
                .collect::<serde_json::Map<_, _>>()
        }),
    });
    write_output(out, "hand_overlay.json", &(serde_json::to_string_pretty(&overlay).expect("overlay serializes") + "\n"))?;
    write_output(out, "calibration.json", &(serde_json::to_string_pretty(&fit.best).expect("fit serializes") + "\n"))?;
    let b = &fit.best;
    println!("pulley_radius_mm: {:.6}", b.pulley_radius_mm);
    println!("efficiency: {:.6}", b.efficiency);
    println!(
        "holding_force_N: {:.4} (target {:.4}, {:+.2}%)",
        b.holding_n,
        targets.holding_n,
        100.0 * (b.holding_n / targets.holding_n - 1.0)
    );
    println!(
        "finger_force_N: {:.4} (target {:.4}, {:+.2}%)",
        b.press_n,
        targets.press_n,
        100.0 * (b.press_n / targets.press_n - 1.0)
    );
    Ok(0)
}
