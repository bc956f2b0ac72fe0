//! Wake-up schedules: simple generators, the adversarial constructions used to
//! stress LocalClock protocols, and the adaptive-adversary callback.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::Rng;

use crate::analysis::{b_beta, s_prefix, static_contention, FilterSpec};
use crate::engine::History;
use crate::error::{invalid, Error, Result};
use crate::protocols::Protocol;
use crate::seed;

/// Wake counts fixed before the execution starts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ObliviousSchedule {
    wake_counts: BTreeMap<u64, u64>,
    total_parties: u64,
}

impl ObliviousSchedule {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_counts(counts: impl IntoIterator<Item = (u64, u64)>) -> Self {
        let mut s = Self::empty();
        for (slot, count) in counts {
            s.add(slot, count);
        }
        s
    }

    pub fn from_wake_times(times: impl IntoIterator<Item = u64>) -> Self {
        Self::from_counts(times.into_iter().map(|t| (t, 1)))
    }

    pub fn add(&mut self, slot: u64, count: u64) {
        if count == 0 {
            return;
        }
        *self.wake_counts.entry(slot).or_insert(0) += count;
        self.total_parties += count;
    }

    pub fn merge(&mut self, other: &ObliviousSchedule) {
        for (&slot, &count) in &other.wake_counts {
            self.add(slot, count);
        }
    }

    pub fn total_parties(&self) -> u64 {
        self.total_parties
    }

    pub fn is_empty(&self) -> bool {
        self.total_parties == 0
    }

    pub fn count_at(&self, slot: u64) -> u64 {
        self.wake_counts.get(&slot).copied().unwrap_or(0)
    }

    /// `(slot, count)` pairs in increasing slot order, zero counts omitted.
    pub fn wake_counts(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.wake_counts.iter().map(|(&s, &c)| (s, c))
    }

    /// Wake counts restricted to slots in `[start, end)`.
    pub fn counts_in(&self, start: u64, end: u64) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.wake_counts.range(start..end).map(|(&s, &c)| (s, c))
    }

    pub fn last_wake_slot(&self) -> Option<u64> {
        self.wake_counts.keys().next_back().copied()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["slot", "wake_count"])?;
        for (slot, count) in self.wake_counts() {
            w.write_record([slot.to_string(), count.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut s = Self::empty();
        for row in r.records() {
            let row = row?;
            if row.len() != 2 {
                return Err(Error::Parse(format!("schedule row has {} fields, expected 2", row.len())));
            }
            let parse = |f: &str| {
                f.trim()
                    .parse::<u64>()
                    .map_err(|_| Error::Parse(format!("expected an integer, got {f:?}")))
            };
            s.add(parse(&row[0])?, parse(&row[1])?);
        }
        Ok(s)
    }
}

/// All `n` parties wake at slot 0.
pub fn synchronous(n: u64) -> ObliviousSchedule {
    ObliviousSchedule::from_counts([(0, n)])
}

/// `rate` parties at each of the slots `0..duration`.
pub fn batch_per_slot(rate: u64, duration: u64) -> ObliviousSchedule {
    ObliviousSchedule::from_counts((0..duration).map(|s| (s, rate)))
}

/// `count` wake times drawn i.i.d. uniformly from `0..range_end`.
pub fn uniform_random(count: u64, range_end: u64, rng_seed: u64) -> Result<ObliviousSchedule> {
    if range_end == 0 {
        return invalid("uniform_random needs range_end >= 1");
    }
    let mut rng = seed::rng_from_seed(rng_seed);
    Ok(ObliviousSchedule::from_wake_times(
        (0..count).map(|_| rng.random_range(0..range_end)),
    ))
}

/// Per-slot rate and duration of the simple high-contention adversary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimpleAdversaryParams {
    pub rate: u64,
    pub duration: u64,
}

impl SimpleAdversaryParams {
    /// `rate = ⌈10 ln n / η⌉`, `duration = ⌊n / ln² n⌋` (natural logs).
    pub fn new(n: u64, eta: f64) -> Result<Self> {
        if n < 16 {
            return invalid(format!("simple adversary needs n >= 16, got {n}"));
        }
        if !(eta > 0.0 && eta <= 0.5) {
            return invalid(format!("simple adversary needs 0 < eta <= 1/2, got {eta}"));
        }
        let ln = (n as f64).ln();
        Ok(Self {
            rate: (10.0 * ln / eta).ceil() as u64,
            duration: (n as f64 / (ln * ln)).floor() as u64,
        })
    }
}

/// Keeps static contention at least `10 ln n` throughout `[1, ⌊n/ln²n⌋]`.
pub fn simple_adversary(n: u64, eta: f64) -> Result<ObliviousSchedule> {
    let p = SimpleAdversaryParams::new(n, eta)?;
    Ok(batch_per_slot(p.rate, p.duration))
}

/// `T₀(n) = ⌊n / ln² n⌋`.
pub fn layered_t0(n: u64) -> u64 {
    let ln = (n as f64).ln();
    (n as f64 / (ln * ln)).floor() as u64
}

/// `T₁(n) = ⌊n (s^{low_β}(T₀) − s^{low_β}(⌊√n⌋)) / (8γ ln ln n)⌋`, floored at 0.
pub fn layered_t1(n: u64, protocol: &Protocol, beta: f64, gamma: f64) -> Result<u64> {
    let filter = FilterSpec::LowBeta(beta);
    let t0 = layered_t0(n);
    let gap = s_prefix(protocol, t0, &filter)? - s_prefix(protocol, n.isqrt(), &filter)?;
    let lnln = (n as f64).ln().ln();
    let t1 = (n as f64 * gap / (8.0 * gamma * lnln)).floor();
    Ok(if t1 > 0.0 { t1 as u64 } else { 0 })
}

/// Outcome of the layered construction.
#[derive(Debug, Clone)]
pub struct LayeredAdversaryReport {
    /// The certified schedule; `None` when every sample failed verification.
    pub schedule: Option<ObliviousSchedule>,
    pub t0: u64,
    pub t1: u64,
    pub verified: bool,
    pub resample_count: u32,
    /// `10 ln n`, the first window's contention floor.
    pub high_floor: f64,
    /// `γ ln ln n`, the second window's filtered contention floor.
    pub low_floor: f64,
}

/// Two-layer adversary: the simple adversary on `[0, T₀)` plus `⌊n/3⌋`
/// uniform wake-ups on `[0, T₁)`, resampled until both contention floors are
/// verified exactly:
///
/// * `σ̂[t] ≥ 10 ln n` for `t ∈ [1, T₀]`
/// * `σ̂^{low_β^{(≥√n)}}[t] ≥ γ ln ln n` for `t ∈ [T₀, T₁]`
pub fn layered_adversary(
    n: u64,
    protocol: &Protocol,
    beta: f64,
    gamma: f64,
    rng_seed: u64,
    max_resamples: u32,
) -> Result<LayeredAdversaryReport> {
    if !protocol.is_local_clock() {
        return Err(Error::NotLocalClock(protocol.to_string()));
    }
    if beta < 10.0 {
        return invalid(format!("layered adversary needs beta >= 10, got {beta}"));
    }
    if gamma.is_nan() || gamma <= 0.0 {
        return invalid(format!("layered adversary needs gamma > 0, got {gamma}"));
    }
    let eta = protocol.eta();
    let base = simple_adversary(n, eta)?;
    let t0 = layered_t0(n);
    let t1 = layered_t1(n, protocol, beta, gamma)?;
    let ln = (n as f64).ln();
    let high_floor = 10.0 * ln;
    let low_floor = gamma * ln.ln();
    let filter = FilterSpec::LowBetaFrom(beta, (n as f64).sqrt().ceil() as u64);

    let mut report = LayeredAdversaryReport {
        schedule: None,
        t0,
        t1,
        verified: false,
        resample_count: 0,
        high_floor,
        low_floor,
    };
    for attempt in 0..=max_resamples {
        let mut candidate = base.clone();
        if t1 > 0 {
            candidate.merge(&uniform_random(n / 3, t1, seed::derive_seed(rng_seed, u64::from(attempt)))?);
        }
        let first = static_contention(&candidate, protocol, &FilterSpec::All, t0)?;
        let first_ok = first.static_vals.iter().all(|&v| v >= high_floor);
        let second_ok = first_ok && {
            let second = static_contention(&candidate, protocol, &filter, t1.max(t0))?;
            second.static_vals[(t0.max(1) - 1) as usize..]
                .iter()
                .take((t1 + 1).saturating_sub(t0.max(1)) as usize)
                .all(|&v| v >= low_floor)
        };
        report.resample_count = attempt;
        if first_ok && second_ok {
            report.schedule = Some(candidate);
            report.verified = true;
            break;
        }
        if !first_ok {
            // The first layer is deterministic; resampling cannot repair it.
            break;
        }
    }
    Ok(report)
}

/// For each slot `t` in `window` where `p(t) > B_β(t)`, wakes `⌈4 ln n / η⌉`
/// parties at `t − 1`, so a party woken at 0 faces a crowd in every
/// high-probability slot.
pub fn high_slot_blocker(protocol: &Protocol, window: (u64, u64), n: u64, beta: f64) -> Result<ObliviousSchedule> {
    let eta = protocol.local_prob(1).ok_or_else(|| Error::NotLocalClock(protocol.to_string()))?;
    if eta.is_nan() || eta <= 0.0 {
        return invalid("high-slot blocker needs p(1) > 0");
    }
    if n < 2 {
        return invalid("high-slot blocker needs n >= 2");
    }
    let crowd = (4.0 * (n as f64).ln() / eta).ceil() as u64;
    let (start, end) = window;
    let mut s = ObliviousSchedule::empty();
    for t in start.max(1)..=end {
        if protocol.require_local(t)? > b_beta(t, beta)? {
            s.add(t - 1, crowd);
        }
    }
    Ok(s)
}

type DecideFn<'a> = Box<dyn FnMut(&History<'_>) -> u64 + 'a>;

/// Arrivals chosen online from the public history, capped by a party budget.
pub struct AdaptiveAdversary<'a> {
    decide: DecideFn<'a>,
    budget: u64,
    spent: u64,
}

impl<'a> AdaptiveAdversary<'a> {
    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn spent(&self) -> u64 {
        self.spent
    }

    pub fn exhausted(&self) -> bool {
        self.spent >= self.budget
    }

    /// Asks the callback for the wake count at `history.wake_slot`, clamped
    /// to the remaining budget.
    pub(crate) fn wakeups(&mut self, history: &History<'_>) -> u64 {
        if self.exhausted() {
            return 0;
        }
        let wanted = (self.decide)(history);
        let granted = wanted.min(self.budget - self.spent);
        self.spent += granted;
        granted
    }
}

impl std::fmt::Debug for AdaptiveAdversary<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AdaptiveAdversary")
            .field("budget", &self.budget)
            .field("spent", &self.spent)
            .finish_non_exhaustive()
    }
}

pub fn adaptive_wrap<'a>(decide: impl FnMut(&History<'_>) -> u64 + 'a, budget: u64) -> AdaptiveAdversary<'a> {
    AdaptiveAdversary {
        decide: Box::new(decide),
        budget,
        spent: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{s_prefix, static_contention};

    #[test]
    fn basic_generators() {
        assert_eq!(synchronous(1).wake_counts().collect::<Vec<_>>(), vec![(0, 1)]);
        assert_eq!(synchronous(100).total_parties(), 100);
        let b = batch_per_slot(185, 117);
        assert_eq!(b.total_parties(), 21_645);
        assert_eq!(b.last_wake_slot(), Some(116));
        assert_eq!(batch_per_slot(1, 1).wake_counts().collect::<Vec<_>>(), vec![(0, 1)]);
    }

    #[test]
    fn conservation_and_determinism() {
        let a = uniform_random(3333, 1000, 5).unwrap();
        let b = uniform_random(3333, 1000, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total_parties(), a.wake_counts().map(|(_, c)| c).sum::<u64>());
        assert!(a.wake_counts().all(|(s, _)| s < 1000));
        assert!(uniform_random(0, 10, 1).unwrap().is_empty());
        assert_ne!(a, uniform_random(3333, 1000, 6).unwrap());
    }

    #[test]
    fn simple_adversary_parameters() {
        let p = SimpleAdversaryParams::new(10_000, 0.5).unwrap();
        assert_eq!(p, SimpleAdversaryParams { rate: 185, duration: 117 });
        assert!(simple_adversary(15, 0.5).is_err());
        assert!(simple_adversary(100, 0.0).is_err());
    }

    #[test]
    fn simple_adversary_budget_holds_only_for_enormous_n() {
        // total <= n/3 reduces to (10 ln n + η) / (η ln² n) <= 1/3
        let ratio = |ln: f64, eta: f64| (10.0 * ln + eta) / (eta * ln * ln);
        assert!(ratio(60.0, 1.0) <= 1.0 / 3.0);
        assert!(ratio((1e4f64).ln(), 0.5) > 1.0 / 3.0);
        assert!(ratio(61.0, 0.5) <= 1.0 / 3.0);
    }

    #[test]
    fn simple_adversary_contention_floor() {
        let n = 10_000;
        let s = simple_adversary(n, 0.5).unwrap();
        let series = static_contention(&s, &Protocol::WhpOpt, &FilterSpec::All, 117).unwrap();
        let floor = 10.0 * (n as f64).ln();
        assert!(series.static_vals.iter().all(|&v| v >= floor));
    }

    #[test]
    fn batch_contention_at_least_rate_times_eta() {
        let (rate, duration) = (7, 30);
        let s = batch_per_slot(rate, duration);
        for p in [Protocol::MemorylessBeb, Protocol::ExpOpt, Protocol::WhpOpt] {
            let series = static_contention(&s, &p, &FilterSpec::All, duration).unwrap();
            assert!(series.static_vals.iter().all(|&v| v >= rate as f64 * p.eta()));
        }
    }

    #[test]
    fn uniform_random_expectation_matches_prefix_sum() {
        // E[σ̂[500]] = (count / range_end) · s(500)
        let (count, range_end, t) = (3333u64, 1000u64, 500u64);
        let p = Protocol::ExpOpt;
        let samples: Vec<f64> = (0..1000)
            .map(|seed| {
                let s = uniform_random(count, range_end, seed).unwrap();
                static_contention(&s, &p, &FilterSpec::All, t).unwrap().static_vals[(t - 1) as usize]
            })
            .collect();
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (samples.len() - 1) as f64;
        let se = (var / samples.len() as f64).sqrt();
        let expected = count as f64 / range_end as f64 * s_prefix(&p, t, &FilterSpec::All).unwrap();
        assert!((mean - expected).abs() <= 3.0 * se, "mean {mean} vs {expected} (se {se})");
    }

    #[test]
    fn layered_thresholds_follow_definitions() {
        let n = 4096;
        assert_eq!(layered_t0(n), 59);
        // With T₀ < ⌊√n⌋ the filtered gap is negative and the second layer vanishes.
        assert_eq!(layered_t1(n, &Protocol::WhpOpt, 10.0, 1.0).unwrap(), 0);
        let n = 1 << 14;
        let t0 = layered_t0(n);
        let f = FilterSpec::LowBeta(10.0);
        let gap = s_prefix(&Protocol::WhpOpt, t0, &f).unwrap() - s_prefix(&Protocol::WhpOpt, 128, &f).unwrap();
        let expect = (n as f64 * gap / (8.0 * (n as f64).ln().ln())).floor() as u64;
        assert_eq!(layered_t1(n, &Protocol::WhpOpt, 10.0, 1.0).unwrap(), expect);
    }

    #[test]
    fn layered_degenerates_to_simple_when_t1_is_zero() {
        let r = layered_adversary(4096, &Protocol::WhpOpt, 10.0, 1.0, 1, 100).unwrap();
        assert!(r.verified);
        assert_eq!(r.t1, 0);
        assert_eq!(r.schedule.unwrap(), simple_adversary(4096, 0.5).unwrap());
    }

    #[test]
    fn layered_verifies_at_larger_n() {
        let n = 1 << 14;
        let p = Protocol::WhpOpt;
        let r = layered_adversary(n, &p, 10.0, 1.0, 3, 100).unwrap();
        assert!(r.verified);
        assert!(r.t1 > r.t0);
        let s = r.schedule.unwrap();
        let m = (n as f64).sqrt().ceil() as u64;
        let series = static_contention(&s, &p, &FilterSpec::LowBetaFrom(10.0, m), r.t1).unwrap();
        for t in r.t0..=r.t1 {
            assert!(series.static_vals[(t - 1) as usize] >= r.low_floor);
        }
    }

    #[test]
    fn layered_rejects_global_protocols() {
        assert!(layered_adversary(4096, &Protocol::GlobalElias, 10.0, 1.0, 1, 1).is_err());
        assert!(layered_adversary(4096, &Protocol::WhpOpt, 5.0, 1.0, 1, 1).is_err());
    }

    #[test]
    fn blocker_examples() {
        // whp_opt never exceeds B_10 on this window
        let s = high_slot_blocker(&Protocol::WhpOpt, (1, 1_000_000), 1000, 10.0).unwrap();
        assert!(s.is_empty());
        // A protocol that is high exactly on multiples of 100 beyond slot 16.
        let spiky = Protocol::custom("spiky", |j| if j > 16 && j % 100 == 0 { 0.5 } else { 1.0 / (j as f64 * j as f64) });
        let s = high_slot_blocker(&spiky, (1, 1000), 1000, 3.0).unwrap();
        let crowd = (4.0 * 1000f64.ln() / spiky.eta()).ceil() as u64;
        let highs = crate::analysis::n_high(&spiky, 1000, 3.0).unwrap();
        assert_eq!(s.total_parties(), highs * crowd);
        assert!(s.wake_counts().all(|(slot, c)| (slot + 1) % 100 == 0 && c == crowd));
    }

    #[test]
    fn schedule_csv_roundtrip() {
        let s = uniform_random(50, 20, 3).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"slot,wake_count\n"));
        assert_eq!(ObliviousSchedule::read_csv(&buf[..]).unwrap(), s);
        assert!(ObliviousSchedule::read_csv("slot,wake_count\n1,x\n".as_bytes()).is_err());
    }

    #[test]
    fn adaptive_budget_clamp() {
        let mut adv = adaptive_wrap(|_| 10, 25);
        let h = History { wake_slot: 0, woken_so_far: 0, slots: &[] };
        assert_eq!(adv.wakeups(&h), 10);
        assert_eq!(adv.wakeups(&h), 10);
        assert_eq!(adv.wakeups(&h), 5);
        assert_eq!(adv.wakeups(&h), 0);
        assert!(adv.exhausted());
    }
}
