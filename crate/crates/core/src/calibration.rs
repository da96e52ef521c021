//! Fits the pulley radius and transmission efficiency so the simulated hand
//! reproduces a measured holding force and single-finger press.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SimError};
use crate::grasp::{close_hand, single_finger_press, trapezoid_block, ClosureOptions};
use crate::hand_model::{FingerName, HandConfig};
use crate::parallel::with_pool;

/// Pulley radius search interval, mm.
pub const RADIUS_RANGE_MM: (f64, f64) = (2.0, 100.0);
/// Efficiency search interval.
pub const EFFICIENCY_RANGE: (f64, f64) = (0.05, 1.0);
const SCAN_POINTS: usize = 25;
const GOLDEN_ITERS: usize = 20;

/// The finger whose press is matched.
pub const PRESS_FINGER: FingerName = FingerName::Little;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationTargets {
    pub holding_n: f64,
    pub press_n: f64,
}

impl Default for CalibrationTargets {
    fn default() -> Self {
        CalibrationTargets {
            holding_n: 19.8,
            press_n: 5.5,
        }
    }
}

impl CalibrationTargets {
    pub fn validate(&self) -> Result<()> {
        if !(self.holding_n > 0.0 && self.holding_n.is_finite()) {
            return Err(SimError::validation("target_holding_force", "must be > 0"));
        }
        if !(self.press_n > 0.0 && self.press_n.is_finite()) {
            return Err(SimError::validation("target_finger_force", "must be > 0"));
        }
        Ok(())
    }

    /// Sum of squared relative errors.
    pub fn error(&self, holding_n: f64, press_n: f64) -> f64 {
        let h = (holding_n - self.holding_n) / self.holding_n;
        let p = (press_n - self.press_n) / self.press_n;
        h * h + p * p
    }
}

/// Forces predicted for one parameter pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationPoint {
    pub pulley_radius_mm: f64,
    pub efficiency: f64,
    pub holding_n: f64,
    pub press_n: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub targets: CalibrationTargets,
    pub best: CalibrationPoint,
    /// Whether both scans straddled their targets.
    pub bracketed: bool,
    /// Every evaluated point, in evaluation order.
    pub curve: Vec<CalibrationPoint>,
}

impl Calibration {
    /// `config` with the fitted parameters applied.
    pub fn apply(&self, config: &HandConfig) -> HandConfig {
        with_params(config, self.best.pulley_radius_mm, self.best.efficiency)
    }
}

fn with_params(config: &HandConfig, radius: f64, efficiency: f64) -> HandConfig {
    let mut c = config.clone();
    c.actuator.pulley_radius = radius;
    c.set_efficiency(efficiency);
    c
}

/// Holding force on the calibration block at full actuator torque, N.
pub fn trapezoid_holding_force(config: &HandConfig) -> Result<f64> {
    let (report, _) = close_hand(config, Some(&trapezoid_block()), &ClosureOptions::default())?;
    Ok(report.holding_force)
}

pub fn evaluate(
    config: &HandConfig,
    targets: &CalibrationTargets,
    radius: f64,
    efficiency: f64,
) -> Result<CalibrationPoint> {
    let c = with_params(config, radius, efficiency);
    let holding_n = trapezoid_holding_force(&c)?;
    let press_n = single_finger_press(&c, PRESS_FINGER)?;
    Ok(CalibrationPoint {
        pulley_radius_mm: radius,
        efficiency,
        holding_n,
        press_n,
        error: targets.error(holding_n, press_n),
    })
}

/// Scans `range` geometrically, then refines around the lowest `score` by
/// golden-section search. Returns the best point and whether the scan's
/// `sign` values changed sign.
fn line_search(
    range: (f64, f64),
    curve: &mut Vec<CalibrationPoint>,
    sign: impl Fn(&CalibrationPoint) -> f64,
    eval: impl Fn(f64) -> Result<CalibrationPoint> + Sync,
) -> Result<(CalibrationPoint, bool)> {
    let score = |p: &CalibrationPoint| sign(p).powi(2);
    let (lo, hi) = (range.0.ln(), range.1.ln());
    let grid: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (SCAN_POINTS - 1) as f64)
        .collect();
    let scan: Vec<CalibrationPoint> =
        with_pool(|| grid.par_iter().map(|u| eval(u.exp())).collect::<Result<_>>())?;
    let mut best_i = 0;
    for (i, p) in scan.iter().enumerate() {
        if score(p) < score(&scan[best_i]) {
            best_i = i;
        }
    }
    let bracketed = scan.iter().any(|p| sign(p) >= 0.0) && scan.iter().any(|p| sign(p) <= 0.0);
    let mut best = scan[best_i];
    curve.extend(scan);
    let (mut a, mut b) = (grid[best_i.saturating_sub(1)], grid[(best_i + 1).min(SCAN_POINTS - 1)]);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut pc = eval(c.exp())?;
    let mut pd = eval(d.exp())?;
    curve.extend([pc, pd]);
    for _ in 0..GOLDEN_ITERS {
        if score(&pc) < score(&pd) {
            b = d;
            d = c;
            pd = pc;
            c = b - g * (b - a);
            pc = eval(c.exp())?;
            curve.push(pc);
        } else {
            a = c;
            c = d;
            pc = pd;
            d = a + g * (b - a);
            pd = eval(d.exp())?;
            curve.push(pd);
        }
    }
    for p in [pc, pd] {
        if score(&p) < score(&best) {
            best = p;
        }
    }
    Ok((best, bracketed))
}

/// Efficiency scales every contact force alike, so the radius alone sets
/// the holding-to-press ratio. The radius is fitted to the target ratio at
/// the config's current efficiency, then the efficiency to the magnitudes.
/// The input config is not modified.
pub fn calibrate(config: &HandConfig, targets: &CalibrationTargets) -> Result<Calibration> {
    targets.validate()?;
    config.validate()?;
    let efficiency = config.fingers[0].joints[0].efficiency;
    let ratio = targets.holding_n / targets.press_n;
    let mut curve = Vec::new();
    let (stage1, radius_ok) = line_search(
        RADIUS_RANGE_MM,
        &mut curve,
        |p| {
            if p.press_n > 0.0 && p.holding_n > 0.0 {
                (p.holding_n / p.press_n / ratio).ln()
            } else {
                f64::INFINITY
            }
        },
        |r| evaluate(config, targets, r, efficiency),
    )?;
    let radius = stage1.pulley_radius_mm;
    let (best, efficiency_ok) = line_search(
        EFFICIENCY_RANGE,
        &mut curve,
        |p| (p.holding_n / targets.holding_n).ln() + (p.press_n / targets.press_n).ln(),
        |e| evaluate(config, targets, radius, e),
    )?;
    Ok(Calibration {
        targets: *targets,
        best,
        bracketed: radius_ok && efficiency_ok,
        curve,
    })
}

pub fn curve_csv(calibration: &Calibration) -> String {
    let mut out = String::from("pulley_radius_mm,efficiency,holding_force_N,press_force_N,error\n");
    for p in &calibration.curve {
        out.push_str(&format!(
            "{:.6},{:.6},{:.6},{:.6},{:.6e}\n",
            p.pulley_radius_mm, p.efficiency, p.holding_n, p.press_n, p.error
        ));
    }
    out
}
