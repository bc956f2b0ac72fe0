use crate::engine::ExecutionTrace;
use crate::error::{invalid, Result};

/// Success-density profile `Π(t₀, μ, δ)`: no successes in `I₀ = [1, t₀)`
/// and at most `μδ` in each `I_i = [t₀ + (i−1)δ, t₀ + iδ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityProfile {
    pub t0: u64,
    pub mu: f64,
    pub delta: u64,
}

impl DensityProfile {
    pub fn new(t0: u64, mu: f64, delta: u64) -> Result<Self> {
        if t0 == 0 {
            return invalid("density profile needs t0 >= 1");
        }
        if !(0.0..=1.0).contains(&mu) {
            return invalid(format!("density mu must lie in [0, 1], got {mu}"));
        }
        if delta == 0 {
            return invalid("density interval width must be positive");
        }
        Ok(Self { t0, mu, delta })
    }

    /// Half-open slot range of interval `i`.
    pub fn interval(&self, i: u64) -> (u64, u64) {
        if i == 0 {
            (1, self.t0)
        } else {
            (self.t0 + (i - 1) * self.delta, self.t0 + i * self.delta)
        }
    }

    /// Intervals whose first slot lies within `horizon` (`I₀` always counts).
    pub fn interval_count(&self, horizon: u64) -> u64 {
        if self.t0 > horizon {
            1
        } else {
            1 + (horizon - self.t0) / self.delta + 1
        }
    }
}

/// Per-interval goodness of a trace: interval `i` is good iff its success
/// count is at most `μ_i |I_i|`, where `μ₀ = 0`.
pub fn density_goodness(trace: &ExecutionTrace, profile: &DensityProfile) -> Result<Vec<bool>> {
    let profile = DensityProfile::new(profile.t0, profile.mu, profile.delta)?;
    if profile.t0 > trace.horizon + 1 {
        return invalid(format!("t0 = {} lies beyond the horizon {}", profile.t0, trace.horizon));
    }
    let count = profile.interval_count(trace.horizon);
    let mut successes = vec![0u64; count as usize];
    for s in trace.successes().filter_map(|p| p.success_slot) {
        let i = if s < profile.t0 { 0 } else { 1 + (s - profile.t0) / profile.delta };
        successes[i as usize] += 1;
    }
    Ok(successes
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let cap = if i == 0 { 0.0 } else { profile.mu * profile.delta as f64 };
            k as f64 <= cap
        })
        .collect())
}
