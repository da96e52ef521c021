use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SimError};
use crate::geometry::planar_jitter;
use crate::hand_model::HandConfig;
use crate::parallel::with_pool;

use super::{close_hand, ClosureOptions, GraspObject, GraspReport};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchOptions {
    pub trials: usize,
    /// mm, uniform in the palm plane.
    pub jitter_mm: f64,
    /// deg, uniform about the palm normal.
    pub jitter_deg: f64,
    pub seed: u64,
    pub closure: ClosureOptions,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            trials: 5,
            jitter_mm: 3.0,
            jitter_deg: 5.0,
            seed: 7,
            closure: ClosureOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub object: String,
    pub mean_contacts: f64,
    pub successes: usize,
    pub trials: usize,
    /// Mean over trials, N.
    pub holding_force_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
}

impl BenchTable {
    pub fn success_rate(&self) -> f64 {
        let trials: usize = self.rows.iter().map(|r| r.trials).sum();
        let ok: usize = self.rows.iter().map(|r| r.successes).sum();
        if trials == 0 {
            0.0
        } else {
            ok as f64 / trials as f64
        }
    }
}

/// Stream seed for one (object, trial) pair.
fn trial_seed(seed: u64, object: usize, trial: usize) -> u64 {
    seed ^ (object as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (trial as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
}

/// The object as presented in one trial.
pub(crate) fn jittered(object: &GraspObject, options: &BenchOptions, index: usize, trial: usize) -> GraspObject {
    if options.jitter_mm == 0.0 && options.jitter_deg == 0.0 {
        return object.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(options.seed, index, trial));
    let mut draw = |half: f64| {
        if half > 0.0 {
            rng.random_range(-half..=half)
        } else {
            0.0
        }
    };
    let dx = draw(options.jitter_mm);
    let dy = draw(options.jitter_mm);
    let yaw = draw(options.jitter_deg).to_radians();
    let iso = planar_jitter(object.centroid(), Vector3::new(dx, dy, 0.0), yaw);
    object.transformed(&iso)
}

/// Repeated closures on every object of `corpus`.
pub fn run_bench(config: &HandConfig, corpus: &[GraspObject], options: &BenchOptions) -> Result<BenchTable> {
    if corpus.is_empty() {
        return Err(SimError::Empty("bench corpus has no objects".into()));
    }
    if options.trials == 0 {
        return Err(SimError::validation("trials", "must be >= 1"));
    }
    if !(options.jitter_mm >= 0.0 && options.jitter_deg >= 0.0) {
        return Err(SimError::validation("jitter", "must be >= 0"));
    }
    let jobs: Vec<(usize, usize)> = (0..corpus.len())
        .flat_map(|o| (0..options.trials).map(move |t| (o, t)))
        .collect();
    let reports: Vec<GraspReport> = with_pool(|| {
        jobs.par_iter()
            .map(|&(o, t)| {
                let obj = jittered(&corpus[o], options, o, t);
                close_hand(config, Some(&obj), &options.closure).map(|(r, _)| r)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let rows = corpus
        .iter()
        .enumerate()
        .map(|(o, obj)| {
            let mine = &reports[o * options.trials..(o + 1) * options.trials];
            let n = mine.len() as f64;
            BenchRow {
                object: obj.name.clone(),
                mean_contacts: mine.iter().map(|r| r.fingers_in_contact as f64).sum::<f64>() / n,
                successes: mine.iter().filter(|r| r.success).count(),
                trials: options.trials,
                holding_force_n: mine.iter().map(|r| r.holding_force).sum::<f64>() / n,
            }
        })
        .collect();
    Ok(BenchTable { rows })
}

pub fn bench_csv(table: &BenchTable) -> String {
    let mut out = String::from("object,mean_contacts,successes,trials,holding_force_N\n");
    for r in &table.rows {
        out.push_str(&format!(
            "{},{:.3},{},{},{:.4}\n",
            r.object, r.mean_contacts, r.successes, r.trials, r.holding_force_n
        ));
    }
    out
}
