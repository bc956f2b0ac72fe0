use std::fmt;
use std::io::Write;

use crate::elias::zeta;
use crate::error::{invalid, Result};
use crate::schedule::ObliviousSchedule;

use super::contention::tau;
use super::format_float;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockClass {
    Wakeup,
    Heavy,
    Light,
    Normal,
}

impl fmt::Display for BlockClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BlockClass::Wakeup => "wakeup",
            BlockClass::Heavy => "heavy",
            BlockClass::Light => "light",
            BlockClass::Normal => "normal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    pub index: u64,
    pub start: u64,
    pub class: BlockClass,
    /// `τ` at the block's first slot.
    pub tau: f64,
}

#[derive(Debug, Clone)]
pub struct BlockReport {
    pub lambda: u64,
    pub block_width: u64,
    /// `8c log₂² n`; heavy above it, light below its reciprocal.
    pub heavy_threshold: f64,
    pub blocks: Vec<Block>,
}

impl BlockReport {
    pub fn count(&self, class: BlockClass) -> usize {
        self.blocks.iter().filter(|b| b.class == class).count()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["block_index", "start", "class", "tau"])?;
        for b in &self.blocks {
            w.write_record([b.index.to_string(), b.start.to_string(), b.class.to_string(), format_float(b.tau)])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_n(n: u64) -> Result<f64> {
    if n < 16 {
        return invalid(format!("block analysis needs n >= 16, got {n}"));
    }
    Ok((n as f64).log2().log2())
}

/// `λ = ⌈2 log₂log₂ n + log₂(8c)⌉`, the block-width parameter.
pub fn block_lambda(n: u64, c: f64) -> Result<u64> {
    Ok((2.0 * check_n(n)? + (8.0 * c).log2()).ceil() as u64)
}

/// `⌈2 log₂log₂ n + log₂(4c)⌉`, the exponent at which light blocks give an
/// isolated party a good chance. Kept separate from [`block_lambda`] since
/// the two constants differ (`4c` vs `8c`).
pub fn light_block_exponent(n: u64, c: f64) -> Result<u64> {
    Ok((2.0 * check_n(n)? + (4.0 * c).log2()).ceil() as u64)
}

/// `⌈ζ(2λ + 1)⌉` slots.
pub fn block_width(n: u64, c: f64) -> Result<u64> {
    let lambda = block_lambda(n, c)?;
    Ok(zeta((2 * lambda + 1) as f64)?.ceil() as u64)
}

/// Splits `window = [start, end]` into blocks of width `ζ(2λ+1)` and
/// classifies each by arrivals and by `τ` at its first slot.
pub fn classify_blocks(schedule: &ObliviousSchedule, n: u64, c: f64, window: (u64, u64)) -> Result<BlockReport> {
    if c.is_nan() || c < 1.0 {
        return invalid(format!("error constant c must be >= 1, got {c}"));
    }
    let (start, end) = window;
    if start == 0 || end < start {
        return invalid(format!("block window [{start}, {end}] must satisfy 1 <= start <= end"));
    }
    let lambda = block_lambda(n, c)?;
    let width = block_width(n, c)?;
    let log2n = (n as f64).log2();
    let heavy_threshold = 8.0 * c * log2n * log2n;

    let mut blocks = Vec::new();
    let mut block_start = start;
    let mut index = 0;
    while block_start <= end {
        let block_end = block_start.saturating_add(width);
        let tau_start = tau(schedule, block_start);
        let class = if schedule.counts_in(block_start, block_end).next().is_some() {
            BlockClass::Wakeup
        } else if tau_start > heavy_threshold {
            BlockClass::Heavy
        } else if tau_start < 1.0 / heavy_threshold {
            BlockClass::Light
        } else {
            BlockClass::Normal
        };
        blocks.push(Block {
            index,
            start: block_start,
            class,
            tau: tau_start,
        });
        index += 1;
        block_start = block_end;
    }
    Ok(BlockReport {
        lambda,
        block_width: width,
        heavy_threshold,
        blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::contention::tau_sum;
    use crate::schedule::{batch_per_slot, synchronous, uniform_random};

    #[test]
    fn lambda_and_width() {
        assert_eq!(block_lambda(256, 1.0).unwrap(), 9);
        assert_eq!(block_lambda(4096, 1.0).unwrap(), 11);
        assert_eq!(light_block_exponent(256, 1.0).unwrap(), 8);
        assert_eq!(block_width(256, 1.0).unwrap(), zeta(19.0).unwrap().ceil() as u64);
        assert!(block_lambda(15, 1.0).is_err());
    }

    #[test]
    fn all_arrival_blocks() {
        let width = block_width(64, 1.0).unwrap();
        let sched = batch_per_slot(1, 4 * width);
        let r = classify_blocks(&sched, 64, 1.0, (1, 3 * width)).unwrap();
        assert_eq!(r.count(BlockClass::Wakeup), r.blocks.len());
    }

    #[test]
    fn distant_synchronous_start_is_light() {
        let r = classify_blocks(&synchronous(64), 64, 1.0, (10_000_000, 10_100_000)).unwrap();
        assert!(!r.blocks.is_empty());
        assert_eq!(r.count(BlockClass::Light), r.blocks.len());
    }

    #[test]
    fn heavy_right_after_large_wakeup() {
        let n = 1 << 12;
        let r = classify_blocks(&synchronous(n), n, 1.0, (1, 200_000)).unwrap();
        assert_eq!(r.blocks[0].class, BlockClass::Heavy);
        assert!(r.count(BlockClass::Normal) > 0);
        assert_eq!(r.count(BlockClass::Wakeup), 0);
    }

    #[test]
    fn heavy_count_bounded_by_tau_sum() {
        for seed in 0..5 {
            let n = 2000;
            let sched = uniform_random(n, 50_000, seed).unwrap();
            let window = (1, 120_000);
            let r = classify_blocks(&sched, n, 1.0, window).unwrap();
            let bound = tau_sum(&sched, window) / r.heavy_threshold;
            assert!(r.count(BlockClass::Heavy) as f64 <= bound);
        }
    }

    #[test]
    fn csv_export() {
        let r = classify_blocks(&synchronous(16), 16, 1.0, (1, 10)).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("block_index,start,class,tau\n0,1,"));
    }
}
