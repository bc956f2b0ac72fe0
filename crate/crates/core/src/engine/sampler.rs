//! Inverse-CDF skipping over a LocalClock rule's transmission sequence.
//!
//! Instead of flipping one coin per slot, a party draws the local time of its
//! next attempt directly. Piecewise-constant rules skip whole plateaus with a
//! geometric draw; BEB has a closed-form survival function.

use rand::Rng;

use crate::protocols::Protocol;

/// Local time of the first attempt strictly after `after`, or `None` if it
/// would fall beyond `limit`.
pub(crate) fn next_attempt<R: Rng + ?Sized>(protocol: &Protocol, after: u64, limit: u64, rng: &mut R) -> Option<u64> {
    match protocol {
        Protocol::MemorylessBeb => next_beb(after, limit, rng),
        _ => next_plateau(protocol, after, limit, rng),
    }
}

fn uniform_open_closed<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// BEB survives local times `1..=m` with probability `1/(2m)`, so given
/// survival through `l >= 1` the next attempt exceeds `m` with probability `l/m`.
fn next_beb<R: Rng + ?Sized>(after: u64, limit: u64, rng: &mut R) -> Option<u64> {
    let mut after = after;
    if after == 0 {
        if limit == 0 {
            return None;
        }
        if rng.random::<f64>() < 0.5 {
            return Some(1);
        }
        after = 1;
    }
    let m = (after as f64 / uniform_open_closed(rng)).floor() + 1.0;
    (m <= limit as f64).then_some(m as u64)
}

fn next_plateau<R: Rng + ?Sized>(protocol: &Protocol, after: u64, limit: u64, rng: &mut R) -> Option<u64> {
    let mut last = after;
    loop {
        let start = last.checked_add(1)?;
        if start > limit {
            return None;
        }
        let p = protocol.local_prob(start).expect("skipping needs a LocalClock rule");
        let end = protocol.plateau_end(start).min(limit);
        if p >= 1.0 {
            return Some(start);
        }
        if p > 0.0 {
            // failures before the first attempt: P(G >= g) = (1-p)^g
            let g = (uniform_open_closed(rng).ln() / (-p).ln_1p()).floor();
            if g < (end - start + 1) as f64 {
                return Some(start + g as u64);
            }
        }
        last = end;
    }
}
