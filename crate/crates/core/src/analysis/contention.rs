use std::io::Write;

use crate::engine::{ExecutionTrace, PartyRecord};
use crate::error::{invalid, Result};
use crate::protocols::{ClockContext, Protocol};
use crate::schedule::ObliviousSchedule;

use super::filters::FilterSpec;
use super::format_float;

/// Per-slot aggregate contention; index `t - 1` holds slot `t`.
#[derive(Debug, Clone)]
pub struct ContentionSeries {
    pub static_vals: Vec<f64>,
    /// Empty when only static contention was requested.
    pub dynamic_vals: Vec<f64>,
    pub filter: FilterSpec,
}

impl ContentionSeries {
    pub fn static_at(&self, t: u64) -> f64 {
        self.static_vals[(t - 1) as usize]
    }

    pub fn dynamic_at(&self, t: u64) -> f64 {
        self.dynamic_vals[(t - 1) as usize]
    }

    /// Writes `slot,sigma_hat,sigma`; the last column is empty for static-only series.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["slot", "sigma_hat", "sigma"])?;
        for (i, &s) in self.static_vals.iter().enumerate() {
            let dynamic = self.dynamic_vals.get(i).map(|&d| format_float(d)).unwrap_or_default();
            w.write_record([(i + 1).to_string(), format_float(s), dynamic])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Accumulates `count · p^ℐ(t, t - wake)` into `acc[t-1]` for `t` in
/// `(from_slot, t_max]`, with `from_slot >= wake`.
struct Accumulator<'a> {
    protocol: &'a Protocol,
    filter: &'a FilterSpec,
    /// `p^ℐ(l)` for `l = 1..=t_max`, precomputed for LocalClock rules.
    local: Option<Vec<f64>>,
    t_max: u64,
}

impl<'a> Accumulator<'a> {
    fn new(protocol: &'a Protocol, filter: &'a FilterSpec, t_max: u64) -> Result<Self> {
        let local = if protocol.is_local_clock() {
            let mut table = Vec::with_capacity(t_max as usize);
            for l in 1..=t_max {
                table.push(if filter.indicator(protocol, l)? { protocol.require_local(l)? } else { 0.0 });
            }
            Some(table)
        } else {
            None
        };
        Ok(Self {
            protocol,
            filter,
            local,
            t_max,
        })
    }

    fn add(&self, acc: &mut [f64], wake: u64, from_slot: u64, weight: f64) -> Result<()> {
        for t in from_slot.max(wake) + 1..=self.t_max {
            let p = match &self.local {
                Some(table) => table[(t - wake - 1) as usize],
                None => self.filter.filtered_prob(self.protocol, ClockContext::new(t, t - wake)?)?,
            };
            acc[(t - 1) as usize] += weight * p;
        }
        Ok(())
    }
}

/// `σ̂^ℐ[t] = Σ_{t_u < t} p^ℐ(t, t − t_u)` for `t = 1..=t_max`; exact.
pub fn static_contention(schedule: &ObliviousSchedule, protocol: &Protocol, filter: &FilterSpec, t_max: u64) -> Result<ContentionSeries> {
    let acc = Accumulator::new(protocol, filter, t_max)?;
    let mut vals = vec![0.0; t_max as usize];
    for (wake, count) in schedule.counts_in(0, t_max) {
        acc.add(&mut vals, wake, wake, count as f64)?;
    }
    Ok(ContentionSeries {
        static_vals: vals,
        dynamic_vals: Vec::new(),
        filter: filter.clone(),
    })
}

/// Contention `σ^ℐ[t; S]` of an explicit party set at one slot; parties not
/// yet woken at `t` contribute nothing.
pub fn set_contention<'p>(
    parties: impl IntoIterator<Item = &'p PartyRecord>,
    protocol: &Protocol,
    filter: &FilterSpec,
    t: u64,
) -> Result<f64> {
    let mut sum = 0.0;
    for p in parties {
        if p.wake_slot < t {
            sum += filter.filtered_prob(protocol, ClockContext::for_party(t, p.wake_slot)?)?;
        }
    }
    Ok(sum)
}

/// The wake-up schedule implied by a trace's party list.
pub fn schedule_of(trace: &ExecutionTrace) -> ObliviousSchedule {
    ObliviousSchedule::from_wake_times(trace.parties.iter().map(|p| p.wake_slot))
}

/// Static and dynamic contention over `1..=trace.horizon`.
pub fn dynamic_contention(
    trace: &ExecutionTrace,
    protocol: &Protocol,
    filter: &FilterSpec,
    survivors_as_of: Option<u64>,
) -> Result<ContentionSeries> {
    dynamic_contention_until(trace, protocol, filter, survivors_as_of, trace.horizon)
}

/// `σ^ℐ[t; A[t|t₀]] = σ̂^ℐ[t] − σ^ℐ[t; Succ[t₀]]` for `t = 1..=t_max`.
///
/// `Succ[t₀]` holds parties that succeeded strictly before `t₀`; with no
/// `t₀` each slot uses its own `A[t]`, i.e. `t₀ = t`.
pub fn dynamic_contention_until(
    trace: &ExecutionTrace,
    protocol: &Protocol,
    filter: &FilterSpec,
    survivors_as_of: Option<u64>,
    t_max: u64,
) -> Result<ContentionSeries> {
    if let Some(t0) = survivors_as_of {
        if t0 > trace.horizon {
            return invalid(format!("t0 = {t0} lies beyond the horizon {}", trace.horizon));
        }
    }
    let mut series = static_contention(&schedule_of(trace), protocol, filter, t_max)?;
    let acc = Accumulator::new(protocol, filter, t_max)?;
    let mut loss = vec![0.0; t_max as usize];
    for p in trace.successes() {
        let s = p.success_slot.expect("filtered to successes");
        match survivors_as_of {
            // removed from every A[t|t0] once counted in Succ[t0]
            Some(t0) if s < t0 => acc.add(&mut loss, p.wake_slot, p.wake_slot, 1.0)?,
            Some(_) => {}
            // leaves A[t] from slot s + 1 on
            None => acc.add(&mut loss, p.wake_slot, s, 1.0)?,
        }
    }
    series.dynamic_vals = series
        .static_vals
        .iter()
        .zip(&loss)
        .map(|(s, l)| (s - l).max(0.0))
        .collect();
    Ok(series)
}

/// `τ(t) = Σ_{t_u < t} 1/(t − t_u)`, the natural BEB contention.
pub fn tau(schedule: &ObliviousSchedule, t: u64) -> f64 {
    schedule
        .counts_in(0, t)
        .map(|(w, c)| c as f64 / (t - w) as f64)
        .sum()
}

/// `Σ_{t ∈ [start, end]} τ(t)`.
pub fn tau_sum(schedule: &ObliviousSchedule, window: (u64, u64)) -> f64 {
    (window.0.max(1)..=window.1).map(|t| tau(schedule, t)).sum()
}
