//! Monte Carlo fingertip workspaces: draw MCP angles, couple the distal
//! joints and collect the fingertips.

use std::collections::HashSet;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SimError};
use crate::hand_model::{FingerName, HandConfig};
use crate::kinematics::{coupled_pose, finger_fk};
use crate::parallel::with_pool;
use crate::svg::{Svg, FINGER_COLOURS};

/// Voxel edge used for the opposition overlap, mm.
pub const OVERLAP_VOXEL_MM: f64 = 2.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkspaceSample {
    pub finger: FingerName,
    pub sample_id: usize,
    /// MCP, PIP, DIP, rad.
    pub angles: [f64; 3],
    /// Joints held at their limit after coupling.
    pub clamped: [bool; 3],
    pub tip: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkspaceCloud {
    /// Sample-major, fingers in [`FingerName::ALL`] order within a sample.
    pub samples: Vec<WorkspaceSample>,
    pub sample_count: usize,
    /// MCP sampling interval per finger, rad.
    pub theta1_range: [(f64, f64); 5],
    pub seed: Option<u64>,
}

impl WorkspaceCloud {
    pub fn points(&self, finger: FingerName) -> Vec<Vector3<f64>> {
        self.samples
            .iter()
            .filter(|s| s.finger == finger)
            .map(|s| s.tip)
            .collect()
    }
}

fn sample_seed(seed: u64, sample: usize) -> u64 {
    seed ^ (sample as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn theta1_ranges(config: &HandConfig) -> [(f64, f64); 5] {
    FingerName::ALL.map(|f| {
        let j = &config.finger(f).joints[0];
        (j.rest_angle, j.limit_angle)
    })
}

/// Cloud for explicit MCP angles, one row of five per sample.
pub fn cloud_from_theta1(config: &HandConfig, theta1: &[[f64; 5]]) -> Result<WorkspaceCloud> {
    config.validate()?;
    let samples = theta1
        .iter()
        .enumerate()
        .map(|(id, row)| sample_row(config, id, row))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok(WorkspaceCloud {
        samples,
        sample_count: theta1.len(),
        theta1_range: theta1_ranges(config),
        seed: None,
    })
}

fn sample_row(config: &HandConfig, id: usize, row: &[f64; 5]) -> Result<Vec<WorkspaceSample>> {
    FingerName::ALL
        .iter()
        .zip(row)
        .map(|(&name, &t1)| {
            let f = config.finger(name);
            let (angles, clamped) = coupled_pose(f, t1 - f.joints[0].rest_angle)?;
            let pose = finger_fk(f, angles)?;
            Ok(WorkspaceSample {
                finger: name,
                sample_id: id,
                angles,
                clamped,
                tip: pose.fingertip(),
            })
        })
        .collect()
}

/// `n` samples with each finger's MCP angle uniform over its range. Sample
/// `i` draws from its own stream, so the cloud does not depend on how the
/// work is split across threads.
pub fn sample_workspace(config: &HandConfig, n: usize, seed: u64) -> Result<WorkspaceCloud> {
    if n == 0 {
        return Err(SimError::validation("samples", "must be >= 1"));
    }
    config.validate()?;
    let ranges = theta1_ranges(config);
    let rows: Vec<Vec<WorkspaceSample>> = with_pool(|| {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(seed, i));
                let row = ranges.map(|(lo, hi)| rng.random_range(lo..=hi));
                sample_row(config, i, &row)
            })
            .collect::<Result<_>>()
    })?;
    Ok(WorkspaceCloud {
        samples: rows.into_iter().flatten().collect(),
        sample_count: n,
        theta1_range: ranges,
        seed: Some(seed),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FingerStats {
    pub finger: FingerName,
    pub count: usize,
    pub bbox_min: Vector3<f64>,
    pub bbox_max: Vector3<f64>,
    pub centroid: Vector3<f64>,
    /// Extent along the finger's flexion direction, mm.
    pub depth: f64,
}

impl FingerStats {
    pub fn bbox_volume(&self) -> f64 {
        let d = self.bbox_max - self.bbox_min;
        d.x * d.y * d.z
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OppositionStats {
    pub finger: FingerName,
    /// Closest approach between thumb and finger fingertips, mm.
    pub min_distance: f64,
    pub centroid_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkspaceStats {
    pub fingers: Vec<FingerStats>,
    pub opposition: Vec<OppositionStats>,
    /// Volume swept by both the thumb's fingertip and another fingertip,
    /// each treated as a ball of its phalanx radius, mm³.
    pub opposition_overlap_mm3: f64,
}

impl WorkspaceStats {
    pub fn finger(&self, name: FingerName) -> &FingerStats {
        self.fingers
            .iter()
            .find(|f| f.finger == name)
            .expect("stats cover every finger")
    }
}

/// Smallest distance between any point of `a` and any point of `b`. Sweeps
/// `b` sorted by x, stopping once the x gap alone exceeds the best so far.
fn min_distance(a: &[Vector3<f64>], b: &[Vector3<f64>]) -> f64 {
    let mut sorted: Vec<&Vector3<f64>> = b.iter().collect();
    sorted.sort_by(|p, q| p.x.total_cmp(&q.x));
    let mut best = f64::INFINITY;
    for p in a {
        let start = sorted.partition_point(|q| q.x < p.x);
        for q in sorted[start..].iter() {
            if q.x - p.x >= best {
                break;
            }
            best = best.min((*q - p).norm());
        }
        for q in sorted[..start].iter().rev() {
            if p.x - q.x >= best {
                break;
            }
            best = best.min((*q - p).norm());
        }
    }
    best
}

/// Voxels whose centres lie within `radius` of some point.
fn voxels(points: &[Vector3<f64>], radius: f64) -> HashSet<[i64; 3]> {
    let h = OVERLAP_VOXEL_MM;
    let reach = (radius / h).ceil() as i64 + 1;
    let mut out = HashSet::new();
    for p in points {
        let base = (p / h).map(|v| v.floor() as i64);
        for i in -reach..=reach {
            for j in -reach..=reach {
                for k in -reach..=reach {
                    let cell = [base.x + i, base.y + j, base.z + k];
                    let centre = Vector3::from(cell.map(|c| (c as f64 + 0.5) * h));
                    if (centre - p).norm() <= radius {
                        out.insert(cell);
                    }
                }
            }
        }
    }
    out
}

pub fn workspace_stats(config: &HandConfig, cloud: &WorkspaceCloud) -> Result<WorkspaceStats> {
    if cloud.samples.is_empty() {
        return Err(SimError::Empty("workspace cloud has no samples".into()));
    }
    let mut fingers = Vec::new();
    for name in FingerName::ALL {
        let pts = cloud.points(name);
        if pts.is_empty() {
            return Err(SimError::Empty(format!("no samples for {name}")));
        }
        let mut lo = pts[0];
        let mut hi = pts[0];
        for p in &pts {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let centroid = pts.iter().sum::<Vector3<f64>>() / pts.len() as f64;
        let flex = config.finger(name).root_rotation() * Vector3::y();
        let along = pts.iter().map(|p| p.dot(&flex));
        let depth = along.clone().fold(f64::NEG_INFINITY, f64::max)
            - along.fold(f64::INFINITY, f64::min);
        fingers.push(FingerStats {
            finger: name,
            count: pts.len(),
            bbox_min: lo,
            bbox_max: hi,
            centroid,
            depth,
        });
    }
    let thumb = cloud.points(FingerName::Thumb);
    let thumb_centroid = fingers[0].centroid;
    let thumb_voxels = voxels(&thumb, config.finger(FingerName::Thumb).phalanx_radius);
    let mut others = HashSet::new();
    let mut opposition = Vec::new();
    for (name, stats) in FingerName::ALL.iter().zip(&fingers).skip(1) {
        let pts = cloud.points(*name);
        others.extend(voxels(&pts, config.finger(*name).phalanx_radius));
        opposition.push(OppositionStats {
            finger: *name,
            min_distance: min_distance(&thumb, &pts),
            centroid_distance: (stats.centroid - thumb_centroid).norm(),
        });
    }
    let shared = thumb_voxels.intersection(&others).count();
    Ok(WorkspaceStats {
        fingers,
        opposition,
        opposition_overlap_mm3: shared as f64 * OVERLAP_VOXEL_MM.powi(3),
    })
}

pub fn cloud_csv(cloud: &WorkspaceCloud) -> String {
    let mut out = String::from("finger,sample_id,theta1_deg,theta2_deg,theta3_deg,x_mm,y_mm,z_mm\n");
    for s in &cloud.samples {
        let [a, b, c] = s.angles.map(f64::to_degrees);
        out.push_str(&format!(
            "{},{},{a:.6},{b:.6},{c:.6},{:.6},{:.6},{:.6}\n",
            s.finger, s.sample_id, s.tip.x, s.tip.y, s.tip.z
        ));
    }
    out
}

/// Top view (palm plane) beside a side view (along the fingers against the
/// palm normal), 1 px per mm.
pub fn cloud_svg(config: &HandConfig, cloud: &WorkspaceCloud) -> String {
    const MARGIN: f64 = 20.0;
    let mut lo = Vector3::new(-config.palm_width, 0.0, -20.0);
    let mut hi = Vector3::new(config.palm_width, config.palm_length, 20.0);
    for s in &cloud.samples {
        lo = lo.inf(&s.tip);
        hi = hi.sup(&s.tip);
    }
    let top_w = hi.x - lo.x;
    let side_w = hi.z - lo.z;
    let h = hi.y - lo.y;
    let mut svg = Svg::new(top_w + side_w + 3.0 * MARGIN, h + 2.0 * MARGIN + 12.0);
    // Fingers point up the page in both views.
    let top = |p: &Vector3<f64>| (MARGIN + p.x - lo.x, MARGIN + 12.0 + hi.y - p.y);
    let side = |p: &Vector3<f64>| (2.0 * MARGIN + top_w + p.z - lo.z, MARGIN + 12.0 + hi.y - p.y);
    svg.text(MARGIN, MARGIN, 10.0, "top view (x, y)");
    svg.text(2.0 * MARGIN + top_w, MARGIN, 10.0, "side view (z, y)");
    let roots_x: Vec<f64> = config
        .fingers
        .iter()
        .filter(|f| !f.is_thumb())
        .map(|f| f.mount_position.x)
        .collect();
    let mid_x = roots_x.iter().sum::<f64>() / roots_x.len() as f64;
    let a = top(&Vector3::new(mid_x - 0.5 * config.palm_width, config.palm_length, 0.0));
    svg.rect(a.0, a.1, config.palm_width, config.palm_length, "fill:#eeeeee;stroke:#555555");
    let b = side(&Vector3::new(0.0, config.palm_length, -20.0));
    svg.rect(b.0, b.1, 20.0, config.palm_length, "fill:#eeeeee;stroke:#555555");
    for s in &cloud.samples {
        let colour = FINGER_COLOURS[s.finger.index()];
        let style = format!("fill:{colour};fill-opacity:0.4");
        let p = top(&s.tip);
        svg.circle(p.0, p.1, 0.8, &style);
        let q = side(&s.tip);
        svg.circle(q.0, q.1, 0.8, &style);
    }
    svg.finish()
}
