//! Seeded trial farms. Trial `i` of a run seeded with `s` uses
//! `derive_seed(s, i)`, so results do not depend on thread count.

use rayon::prelude::*;

use crate::analysis::{latency_stats, LatencyStats};
use crate::engine::{ExecutionTrace, Simulator};
use crate::error::{invalid, Result};
use crate::schedule::ObliviousSchedule;
use crate::seed::derive_seed;

/// Runs `trials` independent executions in parallel, ordered by trial index.
pub fn run_trials(sim: &Simulator, schedule: &ObliviousSchedule, trials: u64, seed: u64) -> Result<Vec<ExecutionTrace>> {
    if trials == 0 {
        return invalid("at least one trial is required");
    }
    (0..trials)
        .into_par_iter()
        .map(|i| sim.run(schedule, derive_seed(seed, i)))
        .collect()
}

/// Pooled latency statistics of `trials` runs.
pub fn trial_latency(sim: &Simulator, schedule: &ObliviousSchedule, trials: u64, seed: u64, q: f64) -> Result<LatencyStats> {
    latency_stats(&run_trials(sim, schedule, trials, seed)?, q)
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub n: u64,
    pub horizon: u64,
    pub stats: LatencyStats,
}

/// One latency summary per `n`. `setup` maps `n` to the simulator and
/// schedule; point `k` is seeded with `derive_seed(seed, n)`.
pub fn sweep<F>(n_values: &[u64], trials: u64, seed: u64, q: f64, setup: F) -> Result<Vec<SweepPoint>>
where
    F: Fn(u64) -> Result<(Simulator, ObliviousSchedule)>,
{
    if n_values.is_empty() {
        return invalid("sweep needs at least one n");
    }
    if n_values.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("sweep n values must be strictly ascending");
    }
    n_values
        .iter()
        .map(|&n| {
            let (sim, schedule) = setup(n)?;
            let stats = trial_latency(&sim, &schedule, trials, derive_seed(seed, n), q)?;
            Ok(SweepPoint {
                n,
                horizon: sim.horizon(),
                stats,
            })
        })
        .collect()
}
