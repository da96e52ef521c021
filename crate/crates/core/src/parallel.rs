//! Worker-pool sizing from `SOFTHAND_SIM_THREADS`.

use log::warn;

pub const THREADS_ENV: &str = "SOFTHAND_SIM_THREADS";

/// Thread cap requested through the environment, if any.
pub fn thread_cap() -> Option<usize> {
    let raw = std::env::var(THREADS_ENV).ok()?;
    match raw.trim().parse::<usize>() {
        Ok(n) if n >= 1 => Some(n),
        _ => {
            warn!("ignoring {THREADS_ENV}={raw:?}: expected a positive integer");
            None
        }
    }
}

/// Runs `f` on a pool honouring the thread cap, or on rayon's global pool.
pub fn with_pool<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    match thread_cap().and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}
