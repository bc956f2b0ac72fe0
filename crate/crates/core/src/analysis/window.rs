use rayon::prelude::*;

use crate::engine::Simulator;
use crate::error::{invalid, Result};
use crate::protocols::Protocol;
use crate::schedule::ObliviousSchedule;
use crate::seed::derive_seed;

/// `4^{−1/8}`: survival at or above this certifies `T ≤ T̃`.
pub fn window_survival_threshold() -> f64 {
    4f64.powf(-0.125)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowResult {
    pub trials: u64,
    pub survivals: u64,
    pub survival: f64,
    pub stderr: f64,
    /// Survival minus three standard errors still reaches `4^{−1/8}`.
    pub certifies: bool,
}

/// Injects a designated party `u*` at slot 0 on top of `adversary` and
/// estimates the probability it has no success in `[1, window]`.
pub fn restricted_window_experiment(
    protocol: &Protocol,
    adversary: &ObliviousSchedule,
    window: u64,
    trials: u64,
    rng_seed: u64,
) -> Result<WindowResult> {
    if trials < 100 {
        return invalid(format!("restricted-window estimate needs >= 100 trials, got {trials}"));
    }
    let survivals = if window == 0 {
        trials
    } else {
        let mut schedule = ObliviousSchedule::from_counts([(0, 1)]);
        schedule.merge(adversary);
        let sim = Simulator::new(protocol.clone(), window);
        (0..trials)
            .into_par_iter()
            .map(|i| {
                let trace = sim.run(&schedule, derive_seed(rng_seed, i))?;
                // party 0 is the first woken at slot 0
                Ok(u64::from(trace.parties[0].success_slot.is_none()))
            })
            .sum::<Result<u64>>()?
    };
    let survival = survivals as f64 / trials as f64;
    let stderr = (survival * (1.0 - survival) / trials as f64).sqrt();
    Ok(WindowResult {
        trials,
        survivals,
        survival,
        stderr,
        certifies: survival - 3.0 * stderr >= window_survival_threshold(),
    })
}
