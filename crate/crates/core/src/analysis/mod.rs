//! Exact contention recomputation, thresholds and filters, block
//! classification, density goodness, counter games and latency statistics.
//!
//! Quantities from the lower-bound side (`B_β`, filters) use natural logs;
//! block and counter-game quantities use base 2.

mod blocks;
mod contention;
mod counter_game;
mod density;
mod filters;
mod latency;
mod window;

pub use blocks::{block_lambda, block_width, classify_blocks, light_block_exponent, Block, BlockClass, BlockReport};
pub use contention::{
    dynamic_contention, dynamic_contention_until, schedule_of, set_contention, static_contention, tau, tau_sum,
    ContentionSeries,
};
pub use counter_game::{
    counter_game_bound, counter_game_run, counter_game_win_rate, fixed_option_strategy, greedy_drain_strategy,
    CounterGameBound, CounterGameConfig, WinRate,
};
pub use density::{density_goodness, DensityProfile};
pub use filters::{b_beta, n_high, s_prefix, FilterSpec};
pub use latency::{censored_latencies, latency_stats, nearest_rank, LatencyStats, Quantile, REPORTED_QUANTILES, UNRELIABLE_CENSORING};
pub use window::{restricted_window_experiment, window_survival_threshold, WindowResult};

/// Decimal form with 17 significant digits; scientific outside `[1e-5, 1e17)`.
pub fn format_float(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..17).contains(&exp) {
        format!("{:.*}", (16 - exp) as usize, x)
    } else {
        format!("{x:.16e}")
    }
}
