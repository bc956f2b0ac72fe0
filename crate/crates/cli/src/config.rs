use std::fs;
use std::path::{Path, PathBuf};

use contention_core::analysis::{block_width, CounterGameConfig, DensityProfile, FilterSpec};
use contention_core::elias::zeta;
use contention_core::schedule::{self, ObliviousSchedule};
use contention_core::Protocol;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const CONFIG_VERSION: u32 = 1;

fn default_q() -> f64 {
    0.01
}

fn default_trials() -> u64 {
    1
}

fn default_c() -> f64 {
    1.0
}

fn default_resamples() -> u32 {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    /// `n` parties at slot 0.
    Synchronous,
    /// `rate` parties per slot on `[0, duration)`; defaults to
    /// `rate = ⌈log₂ n⌉`, `duration = ⌊n / rate⌋`.
    BatchPerSlot {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rate: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        duration: Option<u64>,
    },
    /// `n` parties uniform on `[0, range_end)`.
    Uniform { range_end: u64 },
    SimpleAdversary { eta: f64 },
    Layered {
        beta: f64,
        gamma: f64,
        #[serde(default = "default_resamples")]
        max_resamples: u32,
    },
    /// `slot,wake_count` rows; `n` is ignored.
    Csv { path: PathBuf },
}

impl ScheduleSpec {
    /// Materializes the schedule for `n` parties. Random layouts draw from `seed`.
    pub fn build(&self, n: u64, protocol: &Protocol, seed: u64) -> Result<ObliviousSchedule, CliError> {
        let built = match self {
            ScheduleSpec::Synchronous => Ok(schedule::synchronous(n)),
            ScheduleSpec::BatchPerSlot { rate, duration } => {
                let rate = rate.unwrap_or_else(|| ceil_log2(n).max(1));
                if rate == 0 {
                    return Err(CliError::Config("batch_per_slot rate must be positive".into()));
                }
                Ok(schedule::batch_per_slot(rate, duration.unwrap_or(n / rate)))
            }
            ScheduleSpec::Uniform { range_end } => schedule::uniform_random(n, *range_end, seed),
            ScheduleSpec::SimpleAdversary { eta } => schedule::simple_adversary(n, *eta),
            ScheduleSpec::Layered {
                beta,
                gamma,
                max_resamples,
            } => {
                let report = schedule::layered_adversary(n, protocol, *beta, *gamma, seed, *max_resamples)
                    .map_err(CliError::config)?;
                return report.schedule.ok_or_else(|| {
                    CliError::Runtime(format!("layered adversary failed verification after {max_resamples} resamples"))
                });
            }
            ScheduleSpec::Csv { path } => {
                let file = fs::File::open(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                ObliviousSchedule::read_csv(file)
            }
        };
        built.map_err(CliError::config)
    }
}

fn ceil_log2(n: u64) -> u64 {
    if n <= 1 {
        0
    } else {
        u64::from(64 - (n - 1).leading_zeros())
    }
}

/// Horizon as a function of `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum HorizonRule {
    Fixed { value: u64 },
    /// `⌈factor · n⌉`.
    Linear { factor: f64 },
    /// `⌈factor · n log₂ n⌉`.
    NLogN { factor: f64 },
    /// `⌈factor · n · ζ(2λ + 1)⌉`, the GlobalClock block scale.
    EliasBlock {
        factor: f64,
        #[serde(default = "default_c")]
        c: f64,
    },
    /// `⌈factor · n · ζ(4 log₂log₂ n)⌉`.
    EliasLogLog { factor: f64 },
}

impl HorizonRule {
    pub fn eval(&self, n: u64) -> Result<u64, CliError> {
        let nf = n as f64;
        let value = match *self {
            HorizonRule::Fixed { value } => value as f64,
            HorizonRule::Linear { factor } => factor * nf,
            HorizonRule::NLogN { factor } => factor * nf * nf.log2(),
            HorizonRule::EliasBlock { factor, c } => factor * nf * block_width(n, c).map_err(CliError::config)? as f64,
            HorizonRule::EliasLogLog { factor } => {
                factor * nf * zeta(4.0 * nf.log2().log2()).map_err(CliError::config)?
            }
        };
        if !(value >= 1.0 && value < u64::MAX as f64) {
            return Err(CliError::Config(format!("horizon rule {self:?} gives {value} at n = {n}")));
        }
        Ok(value.ceil() as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    /// Write `trial_<i>_parties.csv` and `trial_<i>_slots.csv` per trial.
    #[serde(default)]
    pub traces: bool,
    /// Write the (first trial's) schedule as `schedule.csv`.
    #[serde(default)]
    pub schedule: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub protocol: String,
    pub schedule: ScheduleSpec,
    pub n: u64,
    pub horizon: HorizonRule,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default)]
    pub outputs: Outputs,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        check_version(self.version)?;
        self.protocol()?;
        if self.trials == 0 {
            return Err(CliError::Config("trials must be at least 1".into()));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(CliError::Config(format!("q must lie in (0, 1), got {}", self.q)));
        }
        self.horizon.eval(self.n.max(1))?;
        Ok(())
    }

    pub fn protocol(&self) -> Result<Protocol, CliError> {
        self.protocol.parse().map_err(CliError::config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub version: u32,
    /// `base.n` and `base.horizon` are replaced per sweep point.
    pub base: ExperimentConfig,
    pub n_values: Vec<u64>,
    pub horizon: HorizonRule,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        check_version(self.version)?;
        self.base.validate()?;
        if self.n_values.is_empty() {
            return Err(CliError::Config("n_values must be non-empty".into()));
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Config("n_values must be strictly ascending".into()));
        }
        for &n in &self.n_values {
            self.horizon.eval(n)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSpec {
    pub id: String,
    pub r: u64,
    pub c: f64,
    pub counters: Vec<u64>,
    pub gammas: Vec<f64>,
}

impl GameSpec {
    pub fn to_config(&self) -> Result<CounterGameConfig, CliError> {
        CounterGameConfig::new(self.r, self.c, self.counters.clone(), self.gammas.clone()).map_err(CliError::config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterGameFile {
    pub version: u32,
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    pub games: Vec<GameSpec>,
}

impl CounterGameFile {
    pub fn validate(&self) -> Result<(), CliError> {
        check_version(self.version)?;
        if self.trials == 0 {
            return Err(CliError::Config("trials must be at least 1".into()));
        }
        for g in &self.games {
            g.to_config()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FilterConfig {
    All,
    LowBeta { beta: f64 },
    LowBetaFrom { beta: f64, m: u64 },
}

impl FilterConfig {
    pub fn to_spec(&self) -> FilterSpec {
        match *self {
            FilterConfig::All => FilterSpec::All,
            FilterConfig::LowBeta { beta } => FilterSpec::LowBeta(beta),
            FilterConfig::LowBetaFrom { beta, m } => FilterSpec::LowBetaFrom(beta, m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlocksConfig {
    pub n: u64,
    #[serde(default = "default_c")]
    pub c: f64,
    pub start: u64,
    pub end: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub t0: u64,
    pub mu: f64,
    pub delta: u64,
}

impl DensityConfig {
    pub fn to_profile(&self) -> Result<DensityProfile, CliError> {
        DensityProfile::new(self.t0, self.mu, self.delta).map_err(CliError::config)
    }
}

/// Recomputes contention, blocks and goodness for a saved trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub version: u32,
    pub protocol: String,
    pub parties: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slots: Option<PathBuf>,
    pub horizon: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_filter")]
    pub filter: FilterConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub survivors_as_of: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<BlocksConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityConfig>,
}

fn default_filter() -> FilterConfig {
    FilterConfig::All
}

fn check_version(v: u32) -> Result<(), CliError> {
    if v != CONFIG_VERSION {
        return Err(CliError::Config(format!("unsupported config version {v}, expected {CONFIG_VERSION}")));
    }
    Ok(())
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

pub fn emit<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("config types serialize")
}
