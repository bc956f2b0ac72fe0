//! Elias ω-codes and the clock-derived synchronization sequences built on them.
//!
//! Every party under the global clock reads the little-endian bits of the
//! current slot index as an ω-coded integer `a(t)`. Because the code is
//! prefix-free, `a(t)` only depends on the low `|Code(a(t))|` bits of `t`, so
//! each value recurs with an exact power-of-two period.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// `a(t)` values whose ω-group does not fit in 64 bits are reported as this
/// sentinel. Such values always end in padding zeros, so they are even and
/// their signed counterpart is a huge positive exponent.
pub const SATURATED: u64 = u64::MAX;

/// An ordered bit sequence, most significant bit first for `Bin(N)`.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        other.0.starts_with(&self.0)
    }

    fn extend(&mut self, other: &BitString) {
        self.0.extend_from_slice(&other.0);
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("unexpected bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitString)
    }
}

fn floor_log2(n: u64) -> u64 {
    debug_assert!(n > 0);
    u64::from(63 - n.leading_zeros())
}

/// `Bin(N)`: the `1 + ⌊log₂ N⌋`-bit binary representation of `n`.
pub fn bin(n: u64) -> Result<BitString> {
    if n == 0 {
        return invalid("Bin(N) is defined for N >= 1");
    }
    let width = floor_log2(n) + 1;
    Ok(BitString((0..width).rev().map(|i| (n >> i) & 1 == 1).collect()))
}

/// The chain `N = N_1, N_2, ..., N_k = 1` with `N_i = ⌊log₂ N_{i-1}⌋`.
fn log_chain(n: u64) -> Vec<u64> {
    let mut chain = vec![n];
    let mut cur = n;
    while cur > 1 {
        cur = floor_log2(cur);
        chain.push(cur);
    }
    chain
}

/// `Code(N) = Bin(N_{k-1}) ... Bin(N_1) 0`.
pub fn encode(n: u64) -> Result<BitString> {
    if n == 0 {
        return invalid("Elias omega code is defined for N >= 1");
    }
    let chain = log_chain(n);
    let mut code = BitString::default();
    // Skip the terminal N_k = 1 and emit the rest from the inside out.
    for &group in chain[..chain.len() - 1].iter().rev() {
        code.extend(&bin(group)?);
    }
    code.0.push(false);
    Ok(code)
}

/// `|Code(N)| = 1 + Σ_{i<k} (1 + ⌊log₂ N_i⌋)`, computed without materializing the code.
pub fn code_len(n: u64) -> Result<u64> {
    if n == 0 {
        return invalid("Elias omega code is defined for N >= 1");
    }
    let chain = log_chain(n);
    Ok(1 + chain[..chain.len() - 1]
        .iter()
        .map(|&g| 1 + floor_log2(g))
        .sum::<u64>())
}

/// Decodes one ω-coded integer from a bit source that reads `false` past its end.
fn decode_with(bit: impl Fn(u64) -> bool) -> u64 {
    let mut value: u64 = 1;
    let mut pos: u64 = 0;
    loop {
        if !bit(pos) {
            return value;
        }
        // The next group is `value + 1` bits wide, led by the 1 just seen.
        if value >= 64 {
            return SATURATED;
        }
        let mut group: u64 = 0;
        for i in 0..=value {
            group = (group << 1) | u64::from(bit(pos + i));
        }
        pos += value + 1;
        value = group;
    }
}

/// Returns the unique `N` whose code is a prefix of `stream` followed by
/// infinitely many zeros. An all-zero stream decodes to 1.
///
/// Streams whose decoded value exceeds `u64` yield [`SATURATED`].
pub fn decode_prefix(stream: &[bool]) -> u64 {
    decode_with(|i| stream.get(i as usize).copied().unwrap_or(false))
}

/// `a(t)`: decodes the little-endian bit expansion of `t`.
pub fn a_of(t: u64) -> u64 {
    decode_with(|i| i < 64 && (t >> i) & 1 == 1)
}

/// `a'(t) = (-1)^{a(t) mod 2} ⌊a(t)/2⌋`; saturated `a(t)` maps to `i64::MAX`.
pub fn a_prime_of(t: u64) -> i64 {
    SyncValue::at(t).a_signed
}

/// The pair `(a(t), a'(t))` for one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyncValue {
    pub a: u64,
    pub a_signed: i64,
}

impl SyncValue {
    pub fn at(t: u64) -> Self {
        Self::from_a(a_of(t))
    }

    pub fn from_a(a: u64) -> Self {
        let a_signed = if a == SATURATED {
            i64::MAX
        } else {
            let half = (a / 2) as i64;
            if a % 2 == 1 {
                -half
            } else {
                half
            }
        };
        Self { a, a_signed }
    }
}

/// Iterated base-2 logarithm: 0 for `x <= 1`, else `1 + log*(log₂ x)`.
pub fn log_star(x: f64) -> u32 {
    let mut count = 0;
    let mut cur = x;
    while cur > 1.0 {
        cur = cur.log2();
        count += 1;
    }
    count
}

/// `ζ(x) = Π_{i=0}^{log* x} 2·max(log₂^{(i)} x, 1)`.
pub fn zeta(x: f64) -> Result<f64> {
    if x.is_nan() || x < 2.0 {
        return invalid(format!("zeta is defined for x >= 2, got {x}"));
    }
    let mut product = 1.0;
    let mut term = x;
    for _ in 0..=log_star(x) {
        product *= 2.0 * term.max(1.0);
        term = term.log2();
    }
    Ok(product)
}
