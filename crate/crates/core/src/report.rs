//! File outputs shared by the command-line front end: run manifests, the
//! closure trace table and the SVG figures.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::Serialize;
use serde_json::Value;

use crate::error::{Result, SimError};
use crate::geometry::Primitive;
use crate::grasp::{BenchTable, ClosureTrace, GraspObject, GraspReport};
use crate::hand_model::{FingerName, HandConfig, JointId};
use crate::kinematics::{FingerPose, HandState};
use crate::svg::{Svg, FINGER_COLOURS};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Record of one command run, written next to its outputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
    pub tool_version: String,
    pub timestamp: String,
    /// Every option the command ran with.
    pub parameters: Value,
}

impl RunManifest {
    pub fn new(
        subcommand: &str,
        config: Option<&Path>,
        seed: Option<u64>,
        output_dir: &Path,
        parameters: Value,
    ) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            config: config.map(Path::to_path_buf),
            seed,
            output_dir: output_dir.to_path_buf(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            parameters,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_output(dir, MANIFEST_FILE, &(text + "\n"))
    }
}

/// Writes `contents` to `dir/name`, creating `dir` if needed.
pub fn write_output(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| SimError::io(&path, e))?;
    Ok(path)
}

/// One row per trace record: displacement, all 15 angles, tendon tensions
/// and the contacts registered at that record.
pub fn trace_csv(config: &HandConfig, trace: &ClosureTrace) -> String {
    let mut out = String::from("displacement_mm");
    for f in FingerName::ALL {
        for j in JointId::ALL {
            out.push_str(&format!(",{f}_{j}_deg"));
        }
    }
    for t in &config.tendons {
        out.push_str(&format!(",{}_tension_N", t.id));
    }
    out.push_str(",new_contacts\n");
    for r in &trace.records {
        out.push_str(&format!("{:.6}", r.displacement));
        for row in &r.state.angles {
            for a in row {
                out.push_str(&format!(",{:.6}", a.to_degrees()));
            }
        }
        for t in &r.state.tensions {
            out.push_str(&format!(",{t:.6}"));
        }
        let contacts: Vec<String> = r
            .new_contacts
            .iter()
            .map(|c| format!("{}:{}", c.finger, c.phalanx))
            .collect();
        out.push_str(&format!(",{}\n", contacts.join(" ")));
    }
    out
}

/// Orthographic view of the hand frame onto two of its axes.
#[derive(Clone, Copy)]
struct View {
    axes: (usize, usize),
    /// Page offset of the view's (0, 0).
    origin: (f64, f64),
    /// World minimum along each axis; the second axis points up the page.
    lo: (f64, f64),
    hi_v: f64,
}

impl View {
    fn map(&self, p: &Vector3<f64>) -> (f64, f64) {
        (
            self.origin.0 + p[self.axes.0] - self.lo.0,
            self.origin.1 + self.hi_v - p[self.axes.1],
        )
    }
}

fn draw_primitive(svg: &mut Svg, view: &View, prim: &Primitive, style: &str) {
    match prim {
        Primitive::Sphere { center, radius } => {
            let c = view.map(center);
            svg.circle(c.0, c.1, *radius, style);
        }
        Primitive::Capsule { p0, p1, radius } => {
            let stroke = format!("stroke:#999999;stroke-opacity:0.6;stroke-width:{:.2};stroke-linecap:round", 2.0 * radius);
            svg.line(view.map(p0), view.map(p1), &stroke);
        }
        Primitive::Box {
            center,
            half_extents,
            rotation,
        } => {
            let corners: Vec<(f64, f64)> = (0..8)
                .map(|i| {
                    let s = Vector3::new(
                        if i & 1 == 0 { -1.0 } else { 1.0 },
                        if i & 2 == 0 { -1.0 } else { 1.0 },
                        if i & 4 == 0 { -1.0 } else { 1.0 },
                    );
                    view.map(&(center + rotation * half_extents.component_mul(&s)))
                })
                .collect();
            // Outline of the projected corners.
            let hull = convex_hull(&corners);
            let mut closed = hull.clone();
            closed.push(hull[0]);
            svg.polyline(&closed, style);
        }
    }
}

/// Andrew's monotone chain.
fn convex_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

fn draw_fingers(svg: &mut Svg, view: &View, poses: &[FingerPose]) {
    for pose in poses {
        let colour = FINGER_COLOURS[pose.finger.index()];
        for seg in &pose.phalanx_segments {
            let style = format!(
                "stroke:{colour};stroke-opacity:0.35;stroke-width:{:.2};stroke-linecap:round",
                2.0 * seg.radius
            );
            svg.line(view.map(&seg.a), view.map(&seg.b), &style);
        }
        let mut chain = vec![view.map(&pose.root)];
        chain.extend(pose.joint_positions.iter().map(|p| view.map(p)));
        svg.polyline(&chain, &format!("stroke:{colour};stroke-width:1.5"));
    }
}

/// Top and side views of the final grasp with the object and contacts.
pub fn grasp_svg(
    config: &HandConfig,
    poses: &[FingerPose; 5],
    object: Option<&GraspObject>,
    report: &GraspReport,
) -> String {
    const MARGIN: f64 = 20.0;
    const TITLE: f64 = 16.0;
    let mut lo = Vector3::new(-60.0, -10.0, -25.0);
    let mut hi = Vector3::new(60.0, config.palm_length, 25.0);
    let mut grow = |p: &Vector3<f64>, r: f64| {
        lo = lo.inf(&p.add_scalar(-r));
        hi = hi.sup(&p.add_scalar(r));
    };
    for pose in poses {
        for seg in &pose.phalanx_segments {
            grow(&seg.a, seg.radius);
            grow(&seg.b, seg.radius);
        }
    }
    if let Some(o) = object {
        for p in &o.primitives {
            grow(&p.center(), p.bounding_radius());
        }
    }
    let top_w = hi.x - lo.x;
    let side_w = hi.z - lo.z;
    let h = hi.y - lo.y;
    let top = View {
        axes: (0, 1),
        origin: (MARGIN, MARGIN + TITLE),
        lo: (lo.x, lo.y),
        hi_v: hi.y,
    };
    let side = View {
        axes: (2, 1),
        origin: (2.0 * MARGIN + top_w, MARGIN + TITLE),
        lo: (lo.z, lo.y),
        hi_v: hi.y,
    };
    let mut svg = Svg::new(top_w + side_w + 3.0 * MARGIN, h + 2.0 * MARGIN + 2.0 * TITLE);
    let title = format!(
        "{}: {} fingers, holding {:.2} N, {}",
        report.object.as_deref().unwrap_or("free closure"),
        report.fingers_in_contact,
        report.holding_force,
        if report.success { "success" } else { "no grasp" }
    );
    svg.text(MARGIN, MARGIN, 11.0, &title);
    for view in [&top, &side] {
        let palm_a = view.map(&Vector3::new(
            -0.5 * config.palm_width,
            config.palm_length,
            0.0,
        ));
        let palm_b = view.map(&Vector3::new(0.5 * config.palm_width, 0.0, -20.0));
        svg.rect(
            palm_a.0.min(palm_b.0),
            palm_a.1.min(palm_b.1),
            (palm_b.0 - palm_a.0).abs(),
            (palm_b.1 - palm_a.1).abs(),
            "fill:#eeeeee;stroke:#555555",
        );
        if let Some(o) = object {
            for p in &o.primitives {
                draw_primitive(&mut svg, view, p, "fill:#cccccc;fill-opacity:0.5;stroke:#666666");
            }
        }
        draw_fingers(&mut svg, view, poses);
        for c in &report.contacts {
            let p = view.map(&c.point);
            svg.circle(p.0, p.1, 2.0, "fill:black");
        }
    }
    svg.finish()
}

/// Finger chain in its own flexion plane, root at the left.
pub fn finger_side_svg(pose_local: &FingerPose, title: &str) -> String {
    const MARGIN: f64 = 20.0;
    const SIZE: f64 = 150.0;
    let mut svg = Svg::new(SIZE + 2.0 * MARGIN, SIZE + 2.0 * MARGIN + 16.0);
    svg.text(MARGIN, MARGIN, 11.0, title);
    let view = View {
        axes: (0, 1),
        origin: (MARGIN, MARGIN + 16.0),
        lo: (-15.0, 0.0),
        hi_v: SIZE - 30.0,
    };
    draw_fingers(&mut svg, &view, std::slice::from_ref(pose_local));
    for p in &pose_local.joint_positions {
        let q = view.map(p);
        svg.circle(q.0, q.1, 2.0, "fill:black");
    }
    svg.finish()
}

/// Mean contacts and successes per object as paired bars.
pub fn bench_svg(table: &BenchTable) -> String {
    const BAR: f64 = 14.0;
    const GROUP: f64 = 2.0 * BAR + 14.0;
    const PLOT_H: f64 = 200.0;
    const LEFT: f64 = 40.0;
    const TOP: f64 = 40.0;
    let max = table
        .rows
        .iter()
        .map(|r| r.trials.max(5) as f64)
        .fold(5.0, f64::max);
    let width = LEFT + GROUP * table.rows.len() as f64 + 20.0;
    let mut svg = Svg::new(width, TOP + PLOT_H + 110.0);
    svg.text(LEFT, 16.0, 11.0, "mean finger contacts (blue) and successful trials (orange)");
    let base = TOP + PLOT_H;
    svg.line((LEFT, base), (width - 10.0, base), "stroke:black");
    svg.line((LEFT, TOP), (LEFT, base), "stroke:black");
    for tick in 0..=max as usize {
        let y = base - PLOT_H * tick as f64 / max;
        svg.line((LEFT - 4.0, y), (LEFT, y), "stroke:black");
        svg.text(LEFT - 16.0, y + 4.0, 10.0, &tick.to_string());
    }
    for (i, r) in table.rows.iter().enumerate() {
        let x = LEFT + 7.0 + GROUP * i as f64;
        let hc = PLOT_H * r.mean_contacts / max;
        let hs = PLOT_H * r.successes as f64 / max;
        svg.rect(x, base - hc, BAR, hc, "fill:#1f77b4");
        svg.rect(x + BAR, base - hs, BAR, hs, "fill:#ff7f0e");
        svg.text(x, base + 14.0, 9.0, &r.object);
    }
    svg.finish()
}

/// Final joint angles in degrees, one row per finger.
pub fn angle_table(state: &HandState) -> String {
    let mut out = String::from("finger    MCP_deg   PIP_deg   DIP_deg\n");
    for f in FingerName::ALL {
        let [a, b, c] = state.finger_angles(f).map(f64::to_degrees);
        out.push_str(&format!("{:<8} {a:>8.3} {b:>9.3} {c:>9.3}\n", f.as_str()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grasp::{builtin_object, close_hand, BenchRow, ClosureOptions};
    use crate::hand_model::calibrated_bpi_config;
    use crate::kinematics::hand_fk;

    #[test]
    fn hull_of_square_with_interior_point() {
        let h = convex_hull(&[(0.0, 0.0), (1.0, 0.0), (0.5, 0.5), (1.0, 1.0), (0.0, 1.0)]);
        assert_eq!(h.len(), 4);
        assert!(!h.contains(&(0.5, 0.5)));
    }

    #[test]
    fn trace_table_shape() {
        let c = calibrated_bpi_config();
        let obj = builtin_object("sphere60").unwrap();
        let (report, trace) = close_hand(&c, Some(&obj), &ClosureOptions::default()).unwrap();
        let csv = trace_csv(&c, &trace);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), trace.records.len() + 1);
        let cols = lines[0].split(',').count();
        assert_eq!(cols, 1 + 15 + c.tendons.len() + 1);
        assert!(lines.iter().all(|l| l.split(',').count() == cols));
        let poses = hand_fk(&c, &report.final_state).unwrap();
        let svg = grasp_svg(&c, &poses, Some(&obj), &report);
        assert!(svg.contains("sphere60"));
    }

    #[test]
    fn bench_chart_has_two_bars_per_object() {
        let t = BenchTable {
            rows: vec![
                BenchRow {
                    object: "a".into(),
                    mean_contacts: 4.0,
                    successes: 5,
                    trials: 5,
                    holding_force_n: 1.0,
                },
                BenchRow {
                    object: "b".into(),
                    mean_contacts: 1.0,
                    successes: 0,
                    trials: 5,
                    holding_force_n: 0.0,
                },
            ],
        };
        let svg = bench_svg(&t);
        assert_eq!(svg.matches("fill:#1f77b4").count(), 2);
        assert_eq!(svg.matches("fill:#ff7f0e").count(), 2);
    }

    #[test]
    fn unwritable_output_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let err = write_output(&blocker.join("sub"), "a.csv", "x").unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
