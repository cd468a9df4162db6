use std::path::Path;
use std::process::{Command, Output};

fn qmux(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmux"))
        .args(args)
        .env_remove("QMUX_CONFIG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// First whitespace-separated number after `prefix` on a line starting with it.
fn value_after(text: &str, prefix: &str) -> f64 {
    let line = text.lines().find(|l| l.starts_with(prefix)).unwrap_or_else(|| panic!("no `{prefix}` in {text}"));
    line[prefix.len()..].split_whitespace().next().unwrap().parse().unwrap()
}

#[test]
fn analytic_mepl_at_fifty_km() {
    let o = qmux(&["analytic", "--protocol", "mepl", "--distance-km", "50"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let rate = value_after(&out, "rate mepl:2 ");
    assert!((rate - 9.49).abs() < 0.01, "{rate}");
    assert_eq!(value_after(&out, "t_c_us "), 250.0);
}

#[test]
fn zero_distance_is_a_domain_error() {
    let o = qmux(&["analytic", "--distance-km", "0"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("distance"));
}

#[test]
fn single_qubit_mepl_violates_protocol_constraint() {
    let o = qmux(&["analytic", "--protocol", "mepl", "--n-qubits", "1"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("protocol constraint"), "{}", stderr(&o));
}

#[test]
fn usage_and_config_errors_exit_two() {
    assert_eq!(qmux(&["analytic", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(qmux(&["sweep", "--figure", "7"]).status.code(), Some(2));
    assert_eq!(qmux(&[]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "distance_km = 50\nwavelength = 1550\n").unwrap();
    let o = qmux(&["--config", bad.to_str().unwrap(), "analytic"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
    let missing = dir.path().join("missing.cfg");
    assert_eq!(qmux(&["--config", missing.to_str().unwrap(), "analytic"]).status.code(), Some(2));
}

#[test]
fn seeded_simulation_is_reproducible() {
    let args = ["simulate", "--protocol", "mbk", "--distance-km", "50", "--seed", "7"];
    let (a, b) = (qmux(&args), qmux(&args));
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(stdout(&a), stdout(&b));
    assert!(stdout(&a).starts_with("# qmux simulate, seed 7,"));
}

#[test]
fn unseeded_simulation_echoes_a_replayable_seed() {
    let args = ["simulate", "--protocol", "mepl", "--replications", "3", "--successes", "50"];
    let first = stdout(&qmux(&args));
    let seed = first.split("seed ").nth(1).unwrap().split(',').next().unwrap().to_string();
    let mut replay = args.to_vec();
    replay.extend(["--seed", &seed]);
    assert_eq!(stdout(&qmux(&replay)), first);
}

#[test]
fn simulated_bright_source_matches_closed_form() {
    let o = qmux(&["simulate", "--protocol", "mps", "--p-em", "0.1", "--distance-km", "50", "--seed", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let rate = value_after(&out, "rate ");
    assert!((rate / 20.25 - 1.0).abs() < 0.05, "{rate}");
    assert!(value_after(&out, "z ") <= 3.0);
}

#[test]
fn cutoff_of_one_lowers_the_simulated_rate() {
    let run = |cutoff: &str| {
        let o = qmux(&["simulate", "--protocol", "mepl", "--cutoff", cutoff, "--distance-km", "50", "--seed", "5"]);
        assert!(o.status.success(), "{}", stderr(&o));
        value_after(&stdout(&o), "rate ")
    };
    assert!(run("1") < run("unlimited"));
}

#[test]
fn figure_four_table_shape() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fig4.csv");
    let o = qmux(&[
        "sweep",
        "--figure",
        "4",
        "--output",
        csv.to_str().unwrap(),
        "--json",
        "--seed",
        "9",
        "--replications",
        "2",
        "--successes",
        "50",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("swap_limited_km 40"));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(lines.count(), 20);
    for suffix in ["_analytic_hz", "_mc_hz", "_stderr_hz"] {
        assert_eq!(header.iter().filter(|h| h.ends_with(suffix)).count(), 4, "{suffix}");
    }
    let schema = std::fs::read_to_string(dir.path().join("fig4.schema.csv")).unwrap();
    assert_eq!(schema.lines().count(), header.len() + 1);
    let json = std::fs::read_to_string(dir.path().join("fig4.json")).unwrap();
    assert!(json.contains("\"config_hash\""));
    assert!(json.contains("\"base_seed\": 9"));
}

#[test]
fn figure_five_stays_below_one() {
    let o = qmux(&["sweep", "--figure", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut rows = 0;
    for line in text.lines().skip(1) {
        for v in line.split(',').skip(1) {
            assert!(v.parse::<f64>().unwrap() < 1.0, "{line}");
        }
        rows += 1;
    }
    assert_eq!(rows, 20);
    assert!(stderr(&o).contains("max_n p_em 0.1"));
}

#[test]
fn crossover_of_mepl_and_bright_source() {
    let o = qmux(&["crossover", "--a", "mepl", "--b", "mps:0.1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let d = value_after(&stdout(&o), "crossover mepl:2 mps:0.1 ");
    assert!((d - 121.0).abs() < 1.0, "{d}");
    let o = qmux(&["crossover", "--a", "mbk:2", "--b", "mbk:2"]);
    assert!(stdout(&o).contains("none"));
}

fn dump(args: &[&str]) -> String {
    let mut all = vec!["--dump-config"];
    all.extend(args);
    let o = qmux(&all);
    assert!(o.status.success(), "{}", stderr(&o));
    stdout(&o)
}

#[test]
fn dumped_config_round_trips() {
    let first = dump(&["--protocol", "mps:0.1", "--distance-km", "123.4", "--t-sg-us", "33.3", "--seed", "4"]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dumped.cfg");
    std::fs::write(&path, &first).unwrap();
    assert_eq!(dump(&["--config", path.to_str().unwrap()]), first);
}

#[test]
fn flags_override_file_which_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.cfg");
    std::fs::write(&path, "# file layer\ndistance_km = 75\nn_qubits = 3\n").unwrap();
    let p = path.to_str().unwrap();
    let defaults = dump(&[]);
    assert!(defaults.contains("\ndistance_km = 50\n"));
    let file = dump(&["--config", p]);
    assert!(file.contains("\ndistance_km = 75\n") && file.contains("\nn_qubits = 3\n"));
    let flag = dump(&["--config", p, "--distance-km", "100"]);
    assert!(flag.contains("\ndistance_km = 100\n") && flag.contains("\nn_qubits = 3\n"));
}

#[test]
fn config_path_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("env.cfg");
    std::fs::write(&path, "distance_km = 80\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_qmux"))
        .args(["analytic"])
        .env("QMUX_CONFIG", &path)
        .output()
        .unwrap();
    assert_eq!(value_after(&stdout(&o), "distance_km "), 80.0);
}

#[test]
fn version_mentions_config_schema() {
    assert!(stdout(&qmux(&["--version"])).contains("config schema 1"));
}

fn check_trace(path: &Path, n_memories: u32) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("replication,time,node,event_kind,detail"));
    let mut last = (0u64, 0.0f64);
    let mut n = 0;
    for line in lines {
        let f: Vec<&str> = line.splitn(5, ',').collect();
        let (rep, t): (u64, f64) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        if rep == last.0 {
            assert!(t >= last.1, "{line}");
        }
        last = (rep, t);
        if f[3] == "memory" {
            let count = |k: &str| -> u32 {
                f[4].split_whitespace().find_map(|kv| kv.strip_prefix(k)).unwrap().parse().unwrap()
            };
            assert_eq!(count("occupied=") + count("free="), n_memories, "{line}");
        }
        n += 1;
    }
    assert!(n > 0);
}

#[test]
fn trace_and_replication_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let reps = dir.path().join("reps.csv");
    let o = qmux(&[
        "simulate",
        "--protocol",
        "mepl:3",
        "--replications",
        "2",
        "--successes",
        "3",
        "--seed",
        "1",
        "--trace",
        trace.to_str().unwrap(),
        "--output",
        reps.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    check_trace(&trace, 2);
    let reps = std::fs::read_to_string(&reps).unwrap();
    assert_eq!(reps.lines().count(), 3);
    assert!(reps.starts_with("replication,successes,sim_time_s,rate_hz"));
}

#[test]
fn thread_cap_is_accepted() {
    let o = qmux(&["--threads", "1", "analytic"]);
    assert!(o.status.success());
    assert_eq!(qmux(&["--threads", "0", "analytic"]).status.code(), Some(2));
}
