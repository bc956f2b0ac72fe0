//! Transmission-probability rules.
//!
//! A [`Protocol`] maps a party's clock readings to the probability that it
//! grabs the channel in the current slot. LocalClock rules only look at the
//! local time `t - t_u`; GlobalClock rules also read the slot index.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::elias;
use crate::error::{invalid, Error, Result};

/// Clock readings of one party in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClockContext {
    global_time: u64,
    local_time: u64,
}

impl ClockContext {
    pub fn new(global_time: u64, local_time: u64) -> Result<Self> {
        if local_time == 0 || global_time < local_time {
            return invalid(format!(
                "clock context needs 1 <= local ({local_time}) <= global ({global_time})"
            ));
        }
        Ok(Self {
            global_time,
            local_time,
        })
    }

    /// Clock readings for a party woken at `wake_slot` during slot `global_time`.
    pub fn for_party(global_time: u64, wake_slot: u64) -> Result<Self> {
        Self::new(global_time, global_time.saturating_sub(wake_slot))
    }

    pub fn global_time(&self) -> u64 {
        self.global_time
    }

    pub fn local_time(&self) -> u64 {
        self.local_time
    }
}

/// A user-supplied memoryless rule `p(t_loc)`.
#[derive(Clone)]
pub struct MemorylessRule {
    name: String,
    rule: Arc<dyn Fn(u64) -> f64 + Send + Sync>,
}

impl MemorylessRule {
    pub fn new(name: impl Into<String>, rule: impl Fn(u64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            rule: Arc::new(rule),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, local_time: u64) -> f64 {
        (self.rule)(local_time).clamp(0.0, 1.0)
    }
}

impl fmt::Debug for MemorylessRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MemorylessRule").field("name", &self.name).finish()
    }
}

/// The protocol families the simulator knows how to run.
#[derive(Debug, Clone)]
pub enum Protocol {
    /// `min(1/2, 1/t_loc)`.
    MemorylessBeb,
    /// Power-of-two plateaus tuned for expected latency.
    ExpOpt,
    /// `x / 2^x` plateaus tuned for high-probability latency.
    WhpOpt,
    /// The ω-code synchronized GlobalClock rule.
    GlobalElias,
    /// GlobalClock rule cycling the exponent over `[-2L, 2L]`, `L = ⌈log₂log₂N⌉`.
    GlobalKnownN { n: u64 },
    /// Arbitrary LocalClock memoryless rule, used for synthetic protocols.
    Custom(MemorylessRule),
}

impl Protocol {
    pub fn known_n(n: u64) -> Result<Self> {
        if n < 4 {
            return invalid(format!("known-N protocol requires N >= 4, got {n}"));
        }
        Ok(Protocol::GlobalKnownN { n })
    }

    pub fn custom(name: impl Into<String>, rule: impl Fn(u64) -> f64 + Send + Sync + 'static) -> Self {
        Protocol::Custom(MemorylessRule::new(name, rule))
    }

    pub fn prob(&self, ctx: ClockContext) -> f64 {
        match self {
            Protocol::GlobalElias => global_elias_prob(ctx.global_time, ctx.local_time),
            Protocol::GlobalKnownN { n } => known_n_prob_unchecked(ctx.global_time, ctx.local_time, *n),
            local => local.local_prob(ctx.local_time).expect("local-clock kind"),
        }
    }

    /// `p(t_loc)` for LocalClock rules; `None` for GlobalClock kinds.
    pub fn local_prob(&self, local_time: u64) -> Option<f64> {
        match self {
            Protocol::MemorylessBeb => Some(beb_prob(local_time)),
            Protocol::ExpOpt => Some(exp_opt_prob(local_time)),
            Protocol::WhpOpt => Some(whp_opt_prob(local_time)),
            Protocol::Custom(rule) => Some(rule.eval(local_time)),
            Protocol::GlobalElias | Protocol::GlobalKnownN { .. } => None,
        }
    }

    /// Like [`Protocol::local_prob`] but errors on GlobalClock kinds.
    pub fn require_local(&self, local_time: u64) -> Result<f64> {
        self.local_prob(local_time)
            .ok_or_else(|| Error::NotLocalClock(self.to_string()))
    }

    pub fn is_local_clock(&self) -> bool {
        !matches!(self, Protocol::GlobalElias | Protocol::GlobalKnownN { .. })
    }

    /// `η = p(1)`, the probability of a party's first attempt. GlobalClock
    /// rules are evaluated at global time 1.
    pub fn eta(&self) -> f64 {
        self.prob(ClockContext {
            global_time: 1,
            local_time: 1,
        })
    }

    /// Last local time sharing `p(local_time)` with `local_time`, for rules
    /// with known plateau structure.
    pub(crate) fn plateau_end(&self, local_time: u64) -> u64 {
        match self {
            Protocol::ExpOpt | Protocol::WhpOpt => {
                let x = dyadic_level(local_time);
                if x >= 60 {
                    u64::MAX
                } else {
                    10 * ((1u64 << x) - 1)
                }
            }
            Protocol::MemorylessBeb if local_time <= 2 => 2,
            _ => local_time,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Protocol::MemorylessBeb => f.write_str("beb"),
            Protocol::ExpOpt => f.write_str("exp_opt"),
            Protocol::WhpOpt => f.write_str("whp_opt"),
            Protocol::GlobalElias => f.write_str("global_elias"),
            Protocol::GlobalKnownN { n } => write!(f, "global_known_n{n}"),
            Protocol::Custom(rule) => write!(f, "custom:{}", rule.name()),
        }
    }
}

impl FromStr for Protocol {
    type Err = Error;

    /// Accepts `beb`, `exp_opt`, `whp_opt`, `global_elias` and
    /// `global_known_n<N>` (braces around `N` are tolerated).
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beb" => Ok(Protocol::MemorylessBeb),
            "exp_opt" => Ok(Protocol::ExpOpt),
            "whp_opt" => Ok(Protocol::WhpOpt),
            "global_elias" => Ok(Protocol::GlobalElias),
            other => {
                let digits = other
                    .strip_prefix("global_known_n")
                    .map(|rest| rest.trim_start_matches('{').trim_end_matches('}'))
                    .ok_or_else(|| Error::UnknownProtocol(other.to_string()))?;
                let n = digits
                    .parse()
                    .map_err(|_| Error::UnknownProtocol(other.to_string()))?;
                Protocol::known_n(n)
            }
        }
    }
}

fn ceil_log2(m: u64) -> u32 {
    if m <= 1 {
        0
    } else {
        64 - (m - 1).leading_zeros()
    }
}

/// `x = ⌈log₂⌈1 + j/10⌉⌉`.
fn dyadic_level(j: u64) -> u32 {
    ceil_log2(1 + j.div_ceil(10))
}

pub fn beb_prob(t_loc: u64) -> f64 {
    if t_loc <= 2 {
        0.5
    } else {
        1.0 / t_loc as f64
    }
}

pub fn exp_opt_prob(t_loc: u64) -> f64 {
    0.5f64.powi(dyadic_level(t_loc) as i32)
}

pub fn whp_opt_prob(t_loc: u64) -> f64 {
    let x = dyadic_level(t_loc);
    f64::from(x) * 0.5f64.powi(x as i32)
}

fn scaled_clamp(exponent: i64, t_loc: u64) -> f64 {
    // Anything above 2^1100 or below 2^-1100 is saturated in f64 anyway.
    let e = exponent.clamp(-1100, 1100) as i32;
    (2f64.powi(e) / t_loc as f64).min(0.5)
}

/// `min(1/2, 2^{a'(t)} / t_loc)`.
pub fn global_elias_prob(t: u64, t_loc: u64) -> f64 {
    scaled_clamp(elias::a_prime_of(t), t_loc)
}

/// Exponent cycle parameter `L = ⌈log₂log₂N⌉`.
pub fn known_n_cycle_half_width(n: u64) -> u64 {
    (n as f64).log2().log2().ceil().max(0.0) as u64
}

/// `k(t) = -2L + (t mod (4L+1))`.
pub fn known_n_exponent(t: u64, n: u64) -> i64 {
    let l = known_n_cycle_half_width(n);
    let period = 4 * l + 1;
    -2 * l as i64 + (t % period) as i64
}

pub fn known_n_prob(t: u64, t_loc: u64, n: u64) -> Result<f64> {
    if n < 4 {
        return invalid(format!("known-N protocol requires N >= 4, got {n}"));
    }
    Ok(known_n_prob_unchecked(t, t_loc, n))
}

fn known_n_prob_unchecked(t: u64, t_loc: u64, n: u64) -> f64 {
    scaled_clamp(known_n_exponent(t, n), t_loc)
}
