use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn contention(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_contention"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

const SIM: &str = r#"{
  "version": 1,
  "protocol": "exp_opt",
  "schedule": {"kind": "uniform", "range_end": 50},
  "n": 40,
  "horizon": {"rule": "linear", "factor": 200},
  "trials": 20,
  "seed": 3,
  "q": 0.1,
  "outputs": {"traces": true, "schedule": true}
}"#;

#[test]
fn sim_is_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "sim.json", SIM);
    let a = contention(&["sim", "--config", "sim.json", "--out", "a", "--threads", "1"], dir.path());
    let b = contention(&["sim", "--config", "sim.json", "--out", "b", "--threads", "4"], dir.path());
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert!(b.status.success());
    for file in ["stats.json", "schedule.csv", "trial_0_parties.csv", "trial_19_slots.csv", "config.json"] {
        let x = fs::read(dir.path().join("a").join(file)).unwrap();
        let y = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(x, y, "{file}");
    }
    let c = contention(&["sim", "--config", "sim.json", "--out", "c", "--seed", "4"], dir.path());
    assert!(c.status.success());
    assert_ne!(
        fs::read(dir.path().join("a/stats.json")).unwrap(),
        fs::read(dir.path().join("c/stats.json")).unwrap()
    );
}

#[test]
fn single_party_beb_stats() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "one.json",
        r#"{"version":1,"protocol":"beb","schedule":{"kind":"synchronous"},"n":1,"horizon":{"rule":"fixed","value":100000},"trials":1}"#,
    );
    let o = contention(&["sim", "--config", "one.json"], dir.path());
    assert!(o.status.success());
    let stats: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["stats"]["count"], 1);
    assert_eq!(stats["stats"]["censored"], 0);
}

#[test]
fn global_elias_sim_populates_max_latency() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "g.json",
        r#"{"version":1,"protocol":"global_elias","schedule":{"kind":"synchronous"},"n":256,"horizon":{"rule":"elias_block","factor":3.0},"trials":1000,"seed":1}"#,
    );
    let o = contention(&["sim", "--config", "g.json"], dir.path());
    assert!(o.status.success());
    let stats: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("stats.json")).unwrap()).unwrap();
    assert!(stats["stats"]["max"].as_u64().unwrap() > 0);
    assert!(stats["stats"]["censored_fraction"].as_f64().unwrap() < 0.01);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.json", &SIM.replace("\"seed\": 3", "\"seed\": 3, \"colour\": 1"));
    assert_eq!(contention(&["sim", "--config", "bad.json"], dir.path()).status.code(), Some(1));
    assert_eq!(contention(&["sim", "--config", "missing.json"], dir.path()).status.code(), Some(1));
    assert_eq!(contention(&["sim"], dir.path()).status.code(), Some(1));
    write(dir.path(), "v2.json", &SIM.replace("\"version\": 1", "\"version\": 2"));
    assert_eq!(contention(&["sim", "--config", "v2.json"], dir.path()).status.code(), Some(1));
    // a horizon beyond the simulator cap fails at run time
    write(
        dir.path(),
        "huge.json",
        r#"{"version":1,"protocol":"beb","schedule":{"kind":"synchronous"},"n":1,"horizon":{"rule":"fixed","value":1000000000000}}"#,
    );
    assert_eq!(contention(&["sim", "--config", "huge.json"], dir.path()).status.code(), Some(2));
}

#[test]
fn sweep_rows() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = format!(r#"{{"version":1,"base":{},"n_values":[16,32,64],"horizon":{{"rule":"n_log_n","factor":50}}}}"#, SIM);
    write(dir.path(), "sweep.json", &sweep);
    let o = contention(&["sweep", "--config", "sweep.json"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(
        lines[0],
        "n,horizon,trials,mean_max_latency,mean_max_latency_over_n,mean_latency,q_quantile,censored_fraction,unreliable"
    );
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("16,3200,20,"));
}

#[test]
fn counter_game_table() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "games.json",
        r#"{"version":1,"trials":2000,"seed":1,"games":[
            {"id":"worked","r":1000,"c":5,"counters":[10],"gammas":[0.5]},
            {"id":"vacuous","r":100,"c":0,"counters":[5],"gammas":[0.5]}
        ]}"#,
    );
    let o = contention(&["counter-game", "--config", "games.json"], dir.path());
    assert!(o.status.success());
    let text = fs::read_to_string(dir.path().join("counter_game.csv")).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0], ["config_id", "win_rate", "stderr", "bound", "vacuous", "within_bound"]);
    assert_eq!(rows[1][0], "worked");
    let bound: f64 = rows[1][3].parse().unwrap();
    assert!((bound - 0.19710).abs() < 1e-5);
    assert_eq!(rows[1][4], "false");
    assert_eq!(rows[1][5], "true");
    assert_eq!(rows[2][4], "true");
    assert_eq!(rows[2][5], "");
}

#[test]
fn elias_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = contention(&["elias", "--max-n", "4", "--max-t", "64"], dir.path());
    assert!(o.status.success());
    let codes = fs::read_to_string(dir.path().join("elias_codes.csv")).unwrap();
    assert_eq!(codes, "N,code,code_len\n1,0,1\n2,100,3\n3,110,3\n4,101000,6\n");
    let sync = fs::read_to_string(dir.path().join("elias_sync.csv")).unwrap();
    for line in sync.lines().skip(1) {
        let f: Vec<u64> = line.split(',').take(2).map(|x| x.parse().unwrap()).collect();
        if f[0].is_multiple_of(2) {
            assert_eq!(f[1], 1, "t = {}", f[0]);
        }
    }
    assert_eq!(contention(&["elias", "--max-n", "0"], dir.path()).status.code(), Some(1));
}

#[test]
fn analyze_saved_trace() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "sim.json", SIM);
    assert!(contention(&["sim", "--config", "sim.json", "--out", "run"], dir.path()).status.success());
    write(
        dir.path(),
        "analyze.json",
        r#"{"version":1,"protocol":"exp_opt","parties":"run/trial_0_parties.csv","slots":"run/trial_0_slots.csv",
            "horizon":8000,"survivors_as_of":100,
            "blocks":{"n":40,"start":1,"end":8000},
            "density":{"t0":60,"mu":0.5,"delta":20}}"#,
    );
    let o = contention(&["analyze", "--config", "analyze.json", "--out", "an"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let contention_csv = fs::read_to_string(dir.path().join("an/contention.csv")).unwrap();
    assert_eq!(contention_csv.lines().count(), 8001);
    for line in contention_csv.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(f[2] <= f[1] && f[2] >= 0.0);
    }
    assert!(fs::read_to_string(dir.path().join("an/blocks.csv")).unwrap().starts_with("block_index,start,class,tau\n"));
    let good = fs::read_to_string(dir.path().join("an/goodness.csv")).unwrap();
    assert!(good.starts_with("interval,start,end,good\n0,1,60,"));
}
