use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use contention_core::analysis::{
    classify_blocks, counter_game_bound, counter_game_win_rate, density_goodness, dynamic_contention,
    format_float, greedy_drain_strategy, latency_stats,
};
use contention_core::elias::{a_of, a_prime_of, code_len, encode};
use contention_core::experiment::run_trials;
use contention_core::seed::derive_seed;
use contention_core::{ExecutionTrace, Simulator};
use serde::Serialize;

use crate::config::{AnalyzeConfig, CounterGameFile, ExperimentConfig, SweepConfig};
use crate::CliError;

/// Stream index reserved for schedule randomness, apart from trial seeds.
const SCHEDULE_STREAM: u64 = u64::MAX;

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn csv_writer(dir: &Path, name: &str) -> Result<csv::Writer<BufWriter<File>>, CliError> {
    Ok(csv::Writer::from_writer(create(dir, name)?))
}

/// Saves the effective configuration (after `--seed`) as `config.json`.
fn write_resolved<T: Serialize>(out: &Path, config: &T) -> Result<(), CliError> {
    let mut w = create(out, "config.json")?;
    writeln!(w, "{}", crate::config::emit(config))
        .and_then(|_| w.flush())
        .map_err(CliError::runtime)
}

#[derive(Serialize)]
struct SimReport<'a> {
    protocol: &'a str,
    n: u64,
    parties: u64,
    horizon: u64,
    trials: u64,
    seed: u64,
    prng: &'static str,
    stats: contention_core::analysis::LatencyStats,
}

fn run_experiment(c: &ExperimentConfig, n: u64, horizon: u64, seed: u64) -> Result<(Vec<ExecutionTrace>, contention_core::ObliviousSchedule), CliError> {
    let protocol = c.protocol()?;
    let schedule = c.schedule.build(n, &protocol, derive_seed(seed, SCHEDULE_STREAM))?;
    let sim = Simulator::new(protocol, horizon);
    let traces = run_trials(&sim, &schedule, c.trials, seed).map_err(CliError::runtime)?;
    Ok((traces, schedule))
}

pub fn sim(c: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    c.validate()?;
    write_resolved(out, c)?;
    let horizon = c.horizon.eval(c.n)?;
    let (traces, schedule) = run_experiment(c, c.n, horizon, c.seed)?;
    let stats = latency_stats(&traces, c.q).map_err(CliError::runtime)?;
    if c.outputs.traces {
        for (i, t) in traces.iter().enumerate() {
            t.write_parties_csv(create(out, &format!("trial_{i}_parties.csv"))?).map_err(CliError::runtime)?;
            t.write_slots_csv(create(out, &format!("trial_{i}_slots.csv"))?).map_err(CliError::runtime)?;
        }
    }
    if c.outputs.schedule {
        schedule.write_csv(create(out, "schedule.csv")?).map_err(CliError::runtime)?;
    }
    let report = SimReport {
        protocol: &c.protocol,
        n: c.n,
        parties: schedule.total_parties(),
        horizon,
        trials: c.trials,
        seed: c.seed,
        prng: contention_core::seed::PRNG_NAME,
        stats,
    };
    let mut w = create(out, "stats.json")?;
    serde_json::to_writer_pretty(&mut w, &report).map_err(CliError::runtime)?;
    writeln!(w).and_then(|_| w.flush()).map_err(CliError::runtime)?;
    if report.stats.unreliable {
        eprintln!(
            "contention: warning: {:.2}% of latencies censored; raise the horizon",
            100.0 * report.stats.censored_fraction
        );
    }
    Ok(())
}

pub fn sweep(c: &SweepConfig, out: &Path) -> Result<(), CliError> {
    c.validate()?;
    write_resolved(out, c)?;
    let mut w = csv_writer(out, "sweep.csv")?;
    w.write_record([
        "n",
        "horizon",
        "trials",
        "mean_max_latency",
        "mean_max_latency_over_n",
        "mean_latency",
        "q_quantile",
        "censored_fraction",
        "unreliable",
    ])
    .map_err(CliError::runtime)?;
    for &n in &c.n_values {
        let horizon = c.horizon.eval(n)?;
        let (traces, _) = run_experiment(&c.base, n, horizon, derive_seed(c.base.seed, n))?;
        let s = latency_stats(&traces, c.base.q).map_err(CliError::runtime)?;
        w.write_record([
            n.to_string(),
            horizon.to_string(),
            c.base.trials.to_string(),
            format_float(s.mean_max),
            format_float(s.mean_max / n as f64),
            format_float(s.mean),
            s.q_threshold.to_string(),
            format_float(s.censored_fraction),
            s.unreliable.to_string(),
        ])
        .map_err(CliError::runtime)?;
    }
    w.flush().map_err(CliError::runtime)
}

pub fn counter_game(c: &CounterGameFile, out: &Path) -> Result<(), CliError> {
    c.validate()?;
    let mut w = csv_writer(out, "counter_game.csv")?;
    w.write_record(["config_id", "win_rate", "stderr", "bound", "vacuous", "within_bound"])
        .map_err(CliError::runtime)?;
    for (i, game) in c.games.iter().enumerate() {
        let config = game.to_config()?;
        let rate = counter_game_win_rate(&config, || greedy_drain_strategy(&config), c.trials, derive_seed(c.seed, i as u64))
            .map_err(CliError::runtime)?;
        let bound = counter_game_bound(&config);
        let within = if bound.vacuous {
            String::new()
        } else {
            (rate.rate <= bound.bound + 3.0 * rate.stderr).to_string()
        };
        w.write_record([
            game.id.clone(),
            format_float(rate.rate),
            format_float(rate.stderr),
            format_float(bound.bound),
            bound.vacuous.to_string(),
            within,
        ])
        .map_err(CliError::runtime)?;
    }
    w.flush().map_err(CliError::runtime)
}

pub fn elias(max_n: u64, max_t: u64, out: &Path) -> Result<(), CliError> {
    if max_n == 0 {
        return Err(CliError::Config("--max-n must be at least 1".into()));
    }
    let mut codes = csv_writer(out, "elias_codes.csv")?;
    codes.write_record(["N", "code", "code_len"]).map_err(CliError::runtime)?;
    for n in 1..=max_n {
        let code = encode(n).map_err(CliError::runtime)?;
        let len = code_len(n).map_err(CliError::runtime)?;
        codes
            .write_record([n.to_string(), code.to_string(), len.to_string()])
            .map_err(CliError::runtime)?;
    }
    codes.flush().map_err(CliError::runtime)?;
    let mut sync = csv_writer(out, "elias_sync.csv")?;
    sync.write_record(["t", "a", "a_prime"]).map_err(CliError::runtime)?;
    for t in 1..=max_t {
        sync.write_record([t.to_string(), a_of(t).to_string(), a_prime_of(t).to_string()])
            .map_err(CliError::runtime)?;
    }
    sync.flush().map_err(CliError::runtime)
}

pub fn analyze(c: &AnalyzeConfig, out: &Path) -> Result<(), CliError> {
    if c.version != crate::config::CONFIG_VERSION {
        return Err(CliError::Config(format!("unsupported config version {}", c.version)));
    }
    let protocol: contention_core::Protocol = c.protocol.parse().map_err(CliError::config)?;
    let open = |p: &Path| File::open(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())));
    let parties = open(&c.parties)?;
    let slots = c.slots.as_deref().map(open).transpose()?;
    let trace = ExecutionTrace::from_csv(parties, slots, c.horizon, c.seed).map_err(CliError::config)?;

    let series = dynamic_contention(&trace, &protocol, &c.filter.to_spec(), c.survivors_as_of).map_err(CliError::runtime)?;
    series.write_csv(create(out, "contention.csv")?).map_err(CliError::runtime)?;

    if let Some(b) = &c.blocks {
        let schedule = contention_core::analysis::schedule_of(&trace);
        let report = classify_blocks(&schedule, b.n, b.c, (b.start, b.end)).map_err(CliError::config)?;
        report.write_csv(create(out, "blocks.csv")?).map_err(CliError::runtime)?;
    }
    if let Some(d) = &c.density {
        let profile = d.to_profile()?;
        let good = density_goodness(&trace, &profile).map_err(CliError::config)?;
        let mut w = csv_writer(out, "goodness.csv")?;
        w.write_record(["interval", "start", "end", "good"]).map_err(CliError::runtime)?;
        for (i, g) in good.iter().enumerate() {
            let (start, end) = profile.interval(i as u64);
            w.write_record([i.to_string(), start.to_string(), end.to_string(), g.to_string()])
                .map_err(CliError::runtime)?;
        }
        w.flush().map_err(CliError::runtime)?;
    }
    Ok(())
}
