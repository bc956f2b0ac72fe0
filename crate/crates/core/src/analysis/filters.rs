use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::protocols::{ClockContext, Protocol};

/// Indicator on local time selecting which slots count toward filtered
/// contention and prefix sums.
#[derive(Clone)]
pub enum FilterSpec {
    All,
    /// `low_β(i) = 1{p(i) <= B_β(i)}`.
    LowBeta(f64),
    /// `low_β^{(≥m)}(i) = low_β(i) · 1{i >= m}`.
    LowBetaFrom(f64, u64),
    Custom(Arc<dyn Fn(u64) -> bool + Send + Sync>),
}

impl FilterSpec {
    pub fn custom(indicator: impl Fn(u64) -> bool + Send + Sync + 'static) -> Self {
        FilterSpec::Custom(Arc::new(indicator))
    }

    /// `ℐ(local_time)` for `protocol`. The low-probability filters need a
    /// LocalClock rule.
    pub fn indicator(&self, protocol: &Protocol, local_time: u64) -> Result<bool> {
        match self {
            FilterSpec::All => Ok(true),
            FilterSpec::LowBeta(beta) => Ok(protocol.require_local(local_time)? <= b_beta(local_time, *beta)?),
            FilterSpec::LowBetaFrom(beta, m) => {
                Ok(local_time >= *m && FilterSpec::LowBeta(*beta).indicator(protocol, local_time)?)
            }
            FilterSpec::Custom(f) => Ok(f(local_time)),
        }
    }

    /// `p^ℐ` at the given clock readings.
    pub fn filtered_prob(&self, protocol: &Protocol, ctx: ClockContext) -> Result<f64> {
        if self.indicator(protocol, ctx.local_time())? {
            Ok(protocol.prob(ctx))
        } else {
            Ok(0.0)
        }
    }
}

impl fmt::Debug for FilterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterSpec::All => f.write_str("All"),
            FilterSpec::LowBeta(b) => write!(f, "LowBeta({b})"),
            FilterSpec::LowBetaFrom(b, m) => write!(f, "LowBetaFrom({b}, {m})"),
            FilterSpec::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Low-probability threshold: 1 for `t <= 16`, else `min(1, ln^β t / t)`.
pub fn b_beta(t: u64, beta: f64) -> Result<f64> {
    if beta.is_nan() || beta < std::f64::consts::E {
        return invalid(format!("B_beta needs beta >= e, got {beta}"));
    }
    if t == 0 {
        return invalid("B_beta is defined for t >= 1");
    }
    if t <= 16 {
        return Ok(1.0);
    }
    let ln = (t as f64).ln();
    Ok((beta * ln.ln() - ln).exp().min(1.0))
}

/// `s^ℐ(k) = Σ_{i=1}^{k} p(i) ℐ(i)`.
pub fn s_prefix(protocol: &Protocol, k: u64, filter: &FilterSpec) -> Result<f64> {
    if !protocol.is_local_clock() {
        return Err(Error::NotLocalClock(protocol.to_string()));
    }
    let mut sum = 0.0;
    for i in 1..=k {
        if filter.indicator(protocol, i)? {
            sum += protocol.require_local(i)?;
        }
    }
    Ok(sum)
}

/// `N^{high_β}(k)`: slots in `[1, k]` where `p(i) > B_β(i)`.
pub fn n_high(protocol: &Protocol, k: u64, beta: f64) -> Result<u64> {
    let low = FilterSpec::LowBeta(beta);
    let mut count = 0;
    for i in 1..=k {
        if !low.indicator(protocol, i)? {
            count += 1;
        }
    }
    Ok(count)
}
