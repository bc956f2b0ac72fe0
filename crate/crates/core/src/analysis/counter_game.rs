use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::seed::{derive_seed, rng_from_seed};

/// Counter game with `k = counters.len() + 1` options. Options `1..k`
/// decrement their counter with probability `γ_j`; option `k` ends the game
/// with probability `c/r`.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterGameConfig {
    pub r: u64,
    pub c: f64,
    pub counters: Vec<u64>,
    pub gammas: Vec<f64>,
}

impl CounterGameConfig {
    pub fn new(r: u64, c: f64, counters: Vec<u64>, gammas: Vec<f64>) -> Result<Self> {
        let config = Self { r, c, counters, gammas };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 {
            return invalid("counter game needs r >= 1");
        }
        if !(self.c >= 0.0 && self.c <= self.r as f64) {
            return invalid(format!("counter game needs 0 <= c <= r, got c = {}", self.c));
        }
        if self.counters.len() != self.gammas.len() {
            return invalid(format!(
                "{} counters but {} gammas",
                self.counters.len(),
                self.gammas.len()
            ));
        }
        let low = self.c / self.r as f64;
        for &g in &self.gammas {
            if !(g >= low && g <= 1.0 && g > 0.0) {
                return invalid(format!("gamma {g} outside [c/r, 1] = [{low}, 1]"));
            }
        }
        Ok(())
    }

    /// Number of options `k`.
    pub fn options(&self) -> usize {
        self.counters.len() + 1
    }
}

/// Plays one game and returns the number of rounds survived, at most `r`.
/// `strategy` sees the current counters and returns an option in `1..=k`.
pub fn counter_game_run(
    config: &CounterGameConfig,
    strategy: &mut dyn FnMut(&[i64]) -> usize,
    rng_seed: u64,
) -> Result<u64> {
    config.validate()?;
    let mut rng = rng_from_seed(rng_seed);
    let mut state: Vec<i64> = config.counters.iter().map(|&n| n as i64).collect();
    let k = config.options();
    let end_prob = config.c / config.r as f64;
    for round in 0..config.r {
        let option = strategy(&state);
        if option == 0 || option > k {
            return Err(Error::InvalidOption { option, max: k });
        }
        let ended = if option == k {
            rng.random::<f64>() < end_prob
        } else {
            let j = option - 1;
            if rng.random::<f64>() < config.gammas[j] {
                state[j] -= 1;
            }
            state[j] < 0
        };
        if ended {
            return Ok(round);
        }
    }
    Ok(config.r)
}

/// Plays the lowest-index option whose counter is still positive, else option `k`.
pub fn greedy_drain_strategy(config: &CounterGameConfig) -> impl FnMut(&[i64]) -> usize {
    let k = config.options();
    move |state: &[i64]| state.iter().position(|&n| n > 0).map_or(k, |j| j + 1)
}

/// Always plays `option`.
pub fn fixed_option_strategy(option: usize) -> impl FnMut(&[i64]) -> usize {
    move |_: &[i64]| option
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterGameBound {
    /// `Σ e^{−n_i/6}`.
    pub alpha: f64,
    /// `Σ n_i/γ_i`.
    pub beta: f64,
    /// `α + e^{−c(1 − 2β/r)}`, unclamped.
    pub bound: f64,
    pub vacuous: bool,
}

/// Upper bound on the probability that any strategy survives `r` rounds.
pub fn counter_game_bound(config: &CounterGameConfig) -> CounterGameBound {
    let alpha = config.counters.iter().map(|&n| (-(n as f64) / 6.0).exp()).sum();
    let beta = config
        .counters
        .iter()
        .zip(&config.gammas)
        .map(|(&n, &g)| n as f64 / g)
        .sum::<f64>();
    let bound = alpha + (-config.c * (1.0 - 2.0 * beta / config.r as f64)).exp();
    CounterGameBound {
        alpha,
        beta,
        bound,
        vacuous: bound >= 1.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WinRate {
    pub trials: u64,
    pub wins: u64,
    pub rate: f64,
    pub stderr: f64,
}

impl WinRate {
    fn from_wins(wins: u64, trials: u64) -> Self {
        let rate = wins as f64 / trials as f64;
        Self {
            trials,
            wins,
            rate,
            stderr: (rate * (1.0 - rate) / trials as f64).sqrt(),
        }
    }
}

/// Empirical win rate of `make_strategy()` over `trials` games seeded by
/// `derive_seed(seed, i)`, run in parallel.
pub fn counter_game_win_rate<S, F>(config: &CounterGameConfig, make_strategy: F, trials: u64, seed: u64) -> Result<WinRate>
where
    F: Fn() -> S + Sync,
    S: FnMut(&[i64]) -> usize,
{
    if trials == 0 {
        return invalid("win rate needs at least one trial");
    }
    config.validate()?;
    let wins = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut strategy = make_strategy();
            counter_game_run(config, &mut strategy, derive_seed(seed, i)).map(|rounds| u64::from(rounds == config.r))
        })
        .sum::<Result<u64>>()?;
    Ok(WinRate::from_wins(wins, trials))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked() -> CounterGameConfig {
        CounterGameConfig::new(1000, 5.0, vec![10], vec![0.5]).unwrap()
    }

    #[test]
    fn worked_bound() {
        let b = counter_game_bound(&worked());
        assert!((b.alpha - (-10.0f64 / 6.0).exp()).abs() < 1e-15);
        assert!((b.alpha - 0.18888).abs() < 1e-5);
        assert_eq!(b.beta, 20.0);
        assert!((b.bound - 0.19710).abs() < 1e-5);
        assert!(!b.vacuous);
    }

    #[test]
    fn vacuous_bounds() {
        let zero_c = CounterGameConfig::new(100, 0.0, vec![30], vec![0.5]).unwrap();
        assert!(counter_game_bound(&zero_c).bound >= 1.0);
        assert!(counter_game_bound(&zero_c).vacuous);
        let heavy = CounterGameConfig::new(100, 5.0, vec![50], vec![0.5]).unwrap();
        let b = counter_game_bound(&heavy);
        assert!(b.beta >= 50.0 && b.vacuous);
    }

    #[test]
    fn validation() {
        assert!(CounterGameConfig::new(100, 5.0, vec![1], vec![0.01]).is_err());
        assert!(CounterGameConfig::new(100, 5.0, vec![1, 2], vec![0.5]).is_err());
        assert!(CounterGameConfig::new(0, 0.0, vec![], vec![]).is_err());
        assert!(CounterGameConfig::new(100, 5.0, vec![1], vec![1.5]).is_err());
    }

    #[test]
    fn greedy_drain_choices() {
        let config = CounterGameConfig::new(10, 1.0, vec![0, 0], vec![0.5, 0.5]).unwrap();
        let mut s = greedy_drain_strategy(&config);
        assert_eq!(s(&[0, 0]), 3);
        assert_eq!(s(&[1, 5]), 1);
        assert_eq!(s(&[0, 5]), 2);
    }

    #[test]
    fn zero_counter_ends_on_first_decrement() {
        let config = CounterGameConfig::new(50, 1.0, vec![0], vec![1.0]).unwrap();
        assert_eq!(counter_game_run(&config, &mut fixed_option_strategy(1), 3).unwrap(), 0);
        let config = CounterGameConfig::new(10_000, 1.0, vec![0], vec![0.1]).unwrap();
        let mut total = 0;
        for seed in 0..2000 {
            let rounds = counter_game_run(&config, &mut fixed_option_strategy(1), seed).unwrap();
            assert!(rounds < config.r);
            total += rounds;
        }
        // rounds survived is Geometric(0.1) − 1 with mean 9
        let mean = total as f64 / 2000.0;
        assert!((mean - 9.0).abs() < 1.0, "{mean}");
    }

    #[test]
    fn certain_end_each_round() {
        let config = CounterGameConfig::new(20, 20.0, vec![3], vec![1.0]).unwrap();
        for seed in 0..50 {
            assert_eq!(counter_game_run(&config, &mut fixed_option_strategy(2), seed).unwrap(), 0);
        }
    }

    #[test]
    fn out_of_range_option() {
        let config = worked();
        assert!(matches!(
            counter_game_run(&config, &mut fixed_option_strategy(3), 0),
            Err(Error::InvalidOption { option: 3, max: 2 })
        ));
        assert!(counter_game_run(&config, &mut fixed_option_strategy(0), 0).is_err());
    }

    #[test]
    fn never_exceeds_r() {
        let config = CounterGameConfig::new(30, 0.0, vec![], vec![]).unwrap();
        assert_eq!(counter_game_run(&config, &mut fixed_option_strategy(1), 0).unwrap(), 30);
    }

    #[test]
    fn worked_config_win_rate_within_bound() {
        let config = worked();
        let rate = counter_game_win_rate(&config, || greedy_drain_strategy(&config), 10_000, 17).unwrap();
        let bound = counter_game_bound(&config).bound;
        assert!(rate.rate <= bound + 3.0 * rate.stderr, "{rate:?} vs {bound}");
    }

    #[test]
    fn greedy_beats_fixed_options() {
        let config = worked();
        let greedy = counter_game_win_rate(&config, || greedy_drain_strategy(&config), 10_000, 5).unwrap();
        for option in 1..=2 {
            let fixed = counter_game_win_rate(&config, || fixed_option_strategy(option), 10_000, 5).unwrap();
            assert!(greedy.rate + 3.0 * greedy.stderr >= fixed.rate, "option {option}");
        }
    }
}
