//! The slot-accurate channel simulator.
//!
//! In every slot `t >= 1` each active party transmits independently with the
//! probability its protocol assigns to `(t, t - t_u)`. A slot succeeds iff
//! exactly one party transmits; that party leaves the system. Parties woken
//! at slot `w` first transmit at `w + 1`.
//!
//! Three sampling paths produce the same law:
//!
//! * **naive**: one coin per active party per slot, each party drawing from
//!   its own ChaCha stream keyed by `(seed, party id)`;
//! * **skipping** (LocalClock rules): each party jumps straight to its next
//!   attempt, so silent slots cost nothing;
//! * **cohort** (GlobalClock rules): parties sharing a wake slot have equal
//!   probabilities, so each cohort draws a binomial transmitter count.
//!
//! Adaptive adversaries always use the naive path.

mod sampler;
mod trace;

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

pub use trace::{ExecutionTrace, History, PartyId, PartyRecord, SlotRecord};

use crate::error::{invalid, Error, Result};
use crate::protocols::{ClockContext, Protocol};
use crate::schedule::{AdaptiveAdversary, ObliviousSchedule};
use crate::seed::{stream_rng, PRNG_NAME};

pub const DEFAULT_HORIZON_CAP: u64 = 1 << 26;

/// Stream index of the shared generator used by the cohort path.
const COHORT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingMode {
    /// Skipping for LocalClock rules, cohorts for GlobalClock rules.
    #[default]
    Auto,
    Naive,
}

#[derive(Debug, Clone)]
pub struct Simulator {
    protocol: Protocol,
    horizon: u64,
    cap: u64,
    mode: SamplingMode,
}

impl Simulator {
    pub fn new(protocol: Protocol, horizon: u64) -> Self {
        Self {
            protocol,
            horizon,
            cap: DEFAULT_HORIZON_CAP,
            mode: SamplingMode::Auto,
        }
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    pub fn with_mode(mut self, mode: SamplingMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn protocol(&self) -> &Protocol {
        &self.protocol
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    fn check_horizon(&self) -> Result<()> {
        if self.horizon == 0 {
            return invalid("horizon must be at least 1");
        }
        if self.horizon > self.cap {
            return Err(Error::HorizonTooLarge {
                horizon: self.horizon,
                cap: self.cap,
            });
        }
        Ok(())
    }

    pub fn run(&self, schedule: &ObliviousSchedule, seed: u64) -> Result<ExecutionTrace> {
        self.check_horizon()?;
        match self.mode {
            SamplingMode::Naive => self.run_naive(&mut ObliviousArrivals(schedule), seed),
            SamplingMode::Auto if self.protocol.is_local_clock() => Ok(self.run_skipping(schedule, seed)),
            SamplingMode::Auto => Ok(self.run_cohorts(schedule, seed)),
        }
    }

    pub fn run_adaptive(&self, adversary: &mut AdaptiveAdversary<'_>, seed: u64) -> Result<ExecutionTrace> {
        self.check_horizon()?;
        self.run_naive(adversary, seed)
    }

    fn finish(&self, parties: Vec<PartyRecord>, slots: Vec<SlotRecord>, seed: u64) -> ExecutionTrace {
        ExecutionTrace {
            parties,
            slots,
            horizon: self.horizon,
            seed,
            prng: PRNG_NAME,
        }
    }

    fn run_naive(&self, arrivals: &mut dyn Arrivals, seed: u64) -> Result<ExecutionTrace> {
        let mut parties: Vec<PartyRecord> = Vec::new();
        let mut rngs: Vec<ChaCha8Rng> = Vec::new();
        let mut active: Vec<usize> = Vec::new();
        let mut slots = Vec::new();
        for t in 1..=self.horizon {
            let wake_slot = t - 1;
            let history = History {
                wake_slot,
                woken_so_far: parties.len() as u64,
                slots: &slots,
            };
            let woken = arrivals.wakeups(&history);
            for _ in 0..woken {
                let id = parties.len();
                parties.push(PartyRecord {
                    id: id as PartyId,
                    wake_slot,
                    success_slot: None,
                });
                rngs.push(stream_rng(seed, id as u64));
                active.push(id);
            }
            if active.is_empty() && arrivals.done_after(wake_slot) {
                break;
            }
            let mut transmitters = 0u64;
            let mut last = 0usize;
            for (pos, &u) in active.iter().enumerate() {
                let ctx = ClockContext::for_party(t, parties[u].wake_slot)?;
                if rngs[u].random::<f64>() < self.protocol.prob(ctx) {
                    transmitters += 1;
                    last = pos;
                }
            }
            let mut success_party = None;
            if transmitters == 1 {
                let u = active.swap_remove(last);
                parties[u].success_slot = Some(t);
                success_party = Some(u as PartyId);
            }
            if woken > 0 || transmitters > 0 {
                slots.push(SlotRecord {
                    slot: t,
                    wakeups: woken,
                    transmitter_count: transmitters,
                    success_party,
                });
            }
        }
        Ok(self.finish(parties, slots, seed))
    }

    fn run_skipping(&self, schedule: &ObliviousSchedule, seed: u64) -> ExecutionTrace {
        let horizon = self.horizon;
        let mut parties: Vec<PartyRecord> = Vec::new();
        let mut rngs: Vec<ChaCha8Rng> = Vec::new();
        let mut queue: BinaryHeap<Reverse<(u64, PartyId)>> = BinaryHeap::new();
        let mut slots = Vec::new();
        let mut groups = schedule.counts_in(0, horizon).peekable();
        let mut transmitters: Vec<PartyId> = Vec::new();

        loop {
            let next_activation = groups.peek().map(|&(w, _)| w + 1);
            let next_attempt = queue.peek().map(|Reverse((t, _))| *t);
            let t = match (next_activation, next_attempt) {
                (Some(a), Some(b)) => a.min(b),
                (Some(a), None) => a,
                (None, Some(b)) => b,
                (None, None) => break,
            };
            if t > horizon {
                break;
            }
            let mut woken = 0;
            if next_activation == Some(t) {
                let (wake_slot, count) = groups.next().expect("peeked");
                woken = count;
                for _ in 0..count {
                    let id = parties.len() as PartyId;
                    parties.push(PartyRecord {
                        id,
                        wake_slot,
                        success_slot: None,
                    });
                    let mut rng = stream_rng(seed, id);
                    if let Some(l) = sampler::next_attempt(&self.protocol, 0, horizon - wake_slot, &mut rng) {
                        queue.push(Reverse((wake_slot + l, id)));
                    }
                    rngs.push(rng);
                }
            }
            transmitters.clear();
            while let Some(&Reverse((slot, id))) = queue.peek() {
                if slot != t {
                    break;
                }
                queue.pop();
                transmitters.push(id);
            }
            let mut success_party = None;
            if let [winner] = transmitters[..] {
                parties[winner as usize].success_slot = Some(t);
                success_party = Some(winner);
            } else {
                for &id in &transmitters {
                    let wake_slot = parties[id as usize].wake_slot;
                    let rng = &mut rngs[id as usize];
                    if let Some(l) = sampler::next_attempt(&self.protocol, t - wake_slot, horizon - wake_slot, rng) {
                        queue.push(Reverse((wake_slot + l, id)));
                    }
                }
            }
            if woken > 0 || !transmitters.is_empty() {
                slots.push(SlotRecord {
                    slot: t,
                    wakeups: woken,
                    transmitter_count: transmitters.len() as u64,
                    success_party,
                });
            }
        }
        self.finish(parties, slots, seed)
    }

    fn run_cohorts(&self, schedule: &ObliviousSchedule, seed: u64) -> ExecutionTrace {
        struct Cohort {
            wake_slot: u64,
            members: Vec<PartyId>,
            drawn: u64,
        }
        let mut rng = stream_rng(seed, COHORT_STREAM);
        let mut parties: Vec<PartyRecord> = Vec::new();
        let mut cohorts: Vec<Cohort> = Vec::new();
        let mut slots = Vec::new();
        let mut groups = schedule.counts_in(0, self.horizon).peekable();

        for t in 1..=self.horizon {
            let mut woken = 0;
            if groups.peek().is_some_and(|&(w, _)| w + 1 == t) {
                let (wake_slot, count) = groups.next().expect("peeked");
                woken = count;
                let first = parties.len() as PartyId;
                parties.extend((first..first + count).map(|id| PartyRecord {
                    id,
                    wake_slot,
                    success_slot: None,
                }));
                cohorts.push(Cohort {
                    wake_slot,
                    members: (first..first + count).collect(),
                    drawn: 0,
                });
            }
            if cohorts.is_empty() {
                if groups.peek().is_none() {
                    break;
                }
                continue;
            }
            let mut transmitters = 0u64;
            for c in cohorts.iter_mut() {
                let p = self.protocol.prob(ClockContext::new(t, t - c.wake_slot).expect("woken before t"));
                let m = c.members.len() as u64;
                c.drawn = if p >= 1.0 {
                    m
                } else if p <= 0.0 {
                    0
                } else {
                    Binomial::new(m, p).expect("valid binomial").sample(&mut rng)
                };
                transmitters += c.drawn;
            }
            let mut success_party = None;
            if transmitters == 1 {
                let c = cohorts.iter_mut().find(|c| c.drawn == 1).expect("one transmitter");
                let idx = rng.random_range(0..c.members.len());
                let id = c.members.swap_remove(idx);
                parties[id as usize].success_slot = Some(t);
                success_party = Some(id);
                cohorts.retain(|c| !c.members.is_empty());
            }
            if woken > 0 || transmitters > 0 {
                slots.push(SlotRecord {
                    slot: t,
                    wakeups: woken,
                    transmitter_count: transmitters,
                    success_party,
                });
            }
        }
        self.finish(parties, slots, seed)
    }
}

/// Runs `protocol` against an oblivious schedule with default settings.
pub fn run(protocol: &Protocol, schedule: &ObliviousSchedule, horizon: u64, seed: u64) -> Result<ExecutionTrace> {
    Simulator::new(protocol.clone(), horizon).run(schedule, seed)
}

trait Arrivals {
    fn wakeups(&mut self, history: &History<'_>) -> u64;
    /// True when no party will ever wake at a slot after `wake_slot`.
    fn done_after(&self, wake_slot: u64) -> bool;
}

struct ObliviousArrivals<'a>(&'a ObliviousSchedule);

impl Arrivals for ObliviousArrivals<'_> {
    fn wakeups(&mut self, history: &History<'_>) -> u64 {
        self.0.count_at(history.wake_slot)
    }

    fn done_after(&self, wake_slot: u64) -> bool {
        self.0.last_wake_slot().is_none_or(|last| last <= wake_slot)
    }
}

impl Arrivals for AdaptiveAdversary<'_> {
    fn wakeups(&mut self, history: &History<'_>) -> u64 {
        AdaptiveAdversary::wakeups(self, history)
    }

    fn done_after(&self, _wake_slot: u64) -> bool {
        self.exhausted()
    }
}

/// Longest probability vector accepted by the single-slot helpers.
pub const ENUMERATION_CAP: usize = 25;

/// `Pr[exactly one transmitter] = Σ_u p_u Π_{v≠u} (1 − p_v)`.
pub fn single_slot_success_prob(probs: &[f64]) -> Result<f64> {
    validate_probs(probs)?;
    Ok((0..probs.len()).map(|u| party_term(probs, u)).sum())
}

/// `p_u Π_{v≠u} (1 − p_v)`: the chance that party `u` alone transmits.
pub fn party_success_prob(probs: &[f64], u: usize) -> Result<f64> {
    validate_probs(probs)?;
    if u >= probs.len() {
        return invalid(format!("party index {u} out of range"));
    }
    Ok(party_term(probs, u))
}

fn party_term(probs: &[f64], u: usize) -> f64 {
    probs
        .iter()
        .enumerate()
        .map(|(v, &p)| if v == u { p } else { 1.0 - p })
        .product()
}

fn validate_probs(probs: &[f64]) -> Result<()> {
    if probs.len() > ENUMERATION_CAP {
        return invalid(format!(
            "at most {ENUMERATION_CAP} probabilities supported, got {}",
            probs.len()
        ));
    }
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return invalid(format!("probability {p} outside [0, 1]"));
    }
    Ok(())
}
