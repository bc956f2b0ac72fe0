use serde::Serialize;

use crate::engine::ExecutionTrace;
use crate::error::{invalid, Result};

/// Quantile levels reported alongside the configured `q`.
pub const REPORTED_QUANTILES: [f64; 5] = [0.5, 0.75, 0.9, 0.99, 0.999];

/// Censoring fraction at or above which a pool is flagged unreliable.
pub const UNRELIABLE_CENSORING: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantile {
    pub level: f64,
    pub value: u64,
}

/// Pooled latency summary. Parties with no success by the horizon count as
/// `horizon + 1 − wake_slot` and are tallied in `censored`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyStats {
    pub traces: usize,
    pub count: u64,
    pub censored: u64,
    pub censored_fraction: f64,
    pub mean: f64,
    pub max: u64,
    /// Mean over traces of each trace's maximum latency.
    pub mean_max: f64,
    pub quantiles: Vec<Quantile>,
    pub q: f64,
    /// Empirical `L(n, q)`: the `(1 − q)`-quantile.
    pub q_threshold: u64,
    pub all_censored: bool,
    pub unreliable: bool,
}

/// Latency of every party in `trace`, censored ones at `horizon + 1 − wake`.
pub fn censored_latencies(trace: &ExecutionTrace) -> impl Iterator<Item = (u64, bool)> + '_ {
    trace.parties.iter().map(move |p| match p.latency() {
        Some(l) => (l, false),
        None => (trace.horizon + 1 - p.wake_slot, true),
    })
}

/// Nearest-rank quantile of ascending `sorted`: the smallest value with at
/// least `level` of the mass at or below it.
pub fn nearest_rank(sorted: &[u64], level: f64) -> u64 {
    let rank = ((level * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

pub fn latency_stats(traces: &[ExecutionTrace], q: f64) -> Result<LatencyStats> {
    if traces.is_empty() {
        return invalid("latency statistics need at least one trace");
    }
    if !(q > 0.0 && q < 1.0) {
        return invalid(format!("q must lie in (0, 1), got {q}"));
    }
    let mut all = Vec::new();
    let mut censored = 0u64;
    let mut max_sum = 0.0;
    for trace in traces {
        let mut trace_max = 0;
        for (l, c) in censored_latencies(trace) {
            censored += u64::from(c);
            trace_max = trace_max.max(l);
            all.push(l);
        }
        max_sum += trace_max as f64;
    }
    if all.is_empty() {
        return invalid("latency statistics need at least one party");
    }
    all.sort_unstable();
    let count = all.len() as u64;
    let censored_fraction = censored as f64 / count as f64;
    Ok(LatencyStats {
        traces: traces.len(),
        count,
        censored,
        censored_fraction,
        mean: all.iter().map(|&l| l as f64).sum::<f64>() / count as f64,
        max: *all.last().expect("non-empty"),
        mean_max: max_sum / traces.len() as f64,
        quantiles: REPORTED_QUANTILES
            .iter()
            .map(|&level| Quantile {
                level,
                value: nearest_rank(&all, level),
            })
            .collect(),
        q,
        q_threshold: nearest_rank(&all, 1.0 - q),
        all_censored: censored == count,
        unreliable: censored_fraction >= UNRELIABLE_CENSORING,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run, PartyRecord};
    use crate::protocols::Protocol;
    use crate::schedule::synchronous;
    use proptest::prelude::*;

    fn trace_of(horizon: u64, parties: &[(u64, Option<u64>)]) -> ExecutionTrace {
        ExecutionTrace {
            parties: parties
                .iter()
                .enumerate()
                .map(|(i, &(w, s))| PartyRecord {
                    id: i as u64,
                    wake_slot: w,
                    success_slot: s,
                })
                .collect(),
            slots: Vec::new(),
            horizon,
            seed: 0,
            prng: crate::seed::PRNG_NAME,
        }
    }

    #[test]
    fn single_party() {
        let s = latency_stats(&[trace_of(100, &[(3, Some(10))])], 0.1).unwrap();
        assert_eq!((s.mean, s.max, s.mean_max), (7.0, 7, 7.0));
        assert_eq!(s.censored, 0);
        assert!(!s.unreliable);
    }

    #[test]
    fn median_for_half() {
        let t = trace_of(100, &[(0, Some(1)), (0, Some(5)), (0, Some(9)), (0, Some(2)), (0, Some(30))]);
        assert_eq!(latency_stats(&[t], 0.5).unwrap().q_threshold, 5);
    }

    #[test]
    fn censoring() {
        let t = trace_of(50, &[(10, None), (0, Some(4))]);
        let s = latency_stats(&[t], 0.5).unwrap();
        assert_eq!(s.max, 41);
        assert_eq!(s.censored, 1);
        assert!(s.unreliable && !s.all_censored);
        let none = latency_stats(&[trace_of(5, &[(0, None)])], 0.5).unwrap();
        assert!(none.all_censored);
        assert!(latency_stats(&[], 0.5).is_err());
        assert!(latency_stats(&[trace_of(5, &[])], 0.5).is_err());
    }

    #[test]
    fn markov_consistency() {
        let traces: Vec<_> = (0..20)
            .map(|s| run(&Protocol::ExpOpt, &synchronous(64), 20_000, s).unwrap())
            .collect();
        let s = latency_stats(&traces, 0.5).unwrap();
        assert!(s.q_threshold as f64 <= 2.0 * s.mean);
        assert!(s.max as f64 >= s.mean && s.mean >= 1.0);
    }

    proptest! {
        #[test]
        fn quantiles_monotone(lat in proptest::collection::vec(1u64..1000, 1..60), q1 in 0.01f64..0.99, q2 in 0.01f64..0.99) {
            let parties: Vec<_> = lat.iter().map(|&l| (0, Some(l))).collect();
            let traces = [trace_of(2000, &parties)];
            let (lo, hi) = if q1 < q2 { (q1, q2) } else { (q2, q1) };
            let a = latency_stats(&traces, lo).unwrap();
            let b = latency_stats(&traces, hi).unwrap();
            prop_assert!(a.q_threshold >= b.q_threshold);
            prop_assert!(a.quantiles.windows(2).all(|w| w[0].value <= w[1].value));
        }

        #[test]
        fn censored_party_raises_estimates(lat in proptest::collection::vec(1u64..1000, 1..60), q in 0.01f64..0.99) {
            let mut parties: Vec<_> = lat.iter().map(|&l| (0, Some(l))).collect();
            let before = latency_stats(&[trace_of(2000, &parties)], q).unwrap();
            parties.push((0, None));
            let after = latency_stats(&[trace_of(2000, &parties)], q).unwrap();
            prop_assert!(after.mean >= before.mean);
            prop_assert!(after.max >= before.max);
            prop_assert!(after.q_threshold >= before.q_threshold);
        }
    }
}
