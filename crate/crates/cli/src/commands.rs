use std::collections::hash_map::RandomState;
use std::fs::File;
use std::hash::{BuildHasher, Hasher};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use qmux_core::analytic;
use qmux_core::config::EffectiveConfig;
use qmux_core::experiments::{self, Table};
use qmux_core::protocols::{self, Resolution, SimOptions};
use qmux_core::simkernel::TRACE_HEADER;
use qmux_core::{McSettings, Protocol, ProtocolConfig};

use crate::Failure;

fn fresh_seed() -> u64 {
    RandomState::new().build_hasher().finish()
}

/// `cfg` with an `auto` seed replaced by a fresh one, so that the echoed
/// config hash describes the run exactly.
fn with_seed(cfg: &EffectiveConfig) -> EffectiveConfig {
    EffectiveConfig {
        seed: Some(cfg.seed.unwrap_or_else(fresh_seed)),
        ..*cfg
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::runtime(format!("{}: {e}", path.display()))
}

pub fn analytic(cfg: &EffectiveConfig, all: bool) -> Result<(), Failure> {
    cfg.validate()?;
    let params = cfg.network_params();
    let geom = cfg.geometry()?;
    println!("# qmux analytic, config {}", cfg.hash_hex());
    println!("distance_km {}", geom.distance_km());
    println!("eta {}", params.eta(geom));
    println!("t_c_us {}", params.t_c(geom) * 1e6);
    println!("n_max_mbk {}", analytic::n_max_mbk(&params, geom));
    println!("n_max_mepl {}", analytic::n_max_mepl(&params, geom));
    let protocols = if all {
        vec![
            ProtocolConfig::mbk(cfg.protocol.n_qubits.max(1)),
            ProtocolConfig::mepl(cfg.protocol.n_qubits.max(2)),
            ProtocolConfig::mps(cfg.protocol.p_em),
        ]
    } else {
        vec![cfg.protocol]
    };
    for p in protocols {
        let r = analytic::rate(&params, geom, &p)?;
        println!(
            "rate {} {} Hz (n_eff {}, attempts {} Hz)",
            p.label(),
            r.rate,
            r.n_effective,
            r.attempt_rate
        );
    }
    if cfg.protocol.protocol == Protocol::Mps || all {
        let n = analytic::expected_local_successes(&params, geom, cfg.protocol.p_em)?;
        println!("mps_local_successes_per_t_c {n}");
    }
    Ok(())
}

pub fn simulate(
    cfg: &EffectiveConfig,
    output: Option<PathBuf>,
    trace: Option<PathBuf>,
    verbose: bool,
) -> Result<(), Failure> {
    let cfg = &with_seed(cfg);
    cfg.validate()?;
    let params = cfg.network_params();
    let geom = cfg.geometry()?;
    let settings = cfg.mc_settings(0);
    let opts = SimOptions {
        resolution: if trace.is_some() { Resolution::EveryAttempt } else { Resolution::Skip },
        trace: trace.is_some(),
        horizon: None,
    };
    let start = Instant::now();
    let r = protocols::simulate(&params, geom, &cfg.protocol, settings, opts)?;
    if verbose {
        eprintln!("simulated in {:.2} s", start.elapsed().as_secs_f64());
    }
    let expected = analytic::rate(&params, geom, &cfg.protocol)?.rate;
    let e = &r.estimate;
    println!("# qmux simulate, seed {}, config {}", settings.base_seed, cfg.hash_hex());
    println!("protocol {}", cfg.protocol.label());
    println!("distance_km {}", geom.distance_km());
    println!("replications {}", e.replications);
    println!("successes {}", e.successes);
    println!("sim_time_s {}", e.sim_time);
    match e.stderr {
        Some(se) => println!("rate {} +- {se} Hz", e.rate),
        None => println!("rate {} Hz", e.rate),
    }
    println!("analytic {expected} Hz");
    if let Some(z) = e.z_score(expected) {
        println!("z {z:.3}");
    }
    if cfg.protocol.protocol == Protocol::Mepl {
        if let (Some(stored), Some(raw)) = (r.stored_attempts_per_success(), r.attempts_per_raw_success()) {
            println!("attempts_per_raw_state {raw}");
            println!("attempts_while_stored_per_success {stored}");
        }
    }
    if let Some(path) = output {
        let t = experiments::replication_table(&r, &params, settings, cfg.hash_hex());
        write_table(&t, &path, false)?;
    }
    if let Some(path) = trace {
        let f = File::create(&path).map_err(|e| io_failure(&path, e))?;
        let mut w = BufWriter::new(f);
        let mut write = || -> std::io::Result<()> {
            writeln!(w, "replication,{TRACE_HEADER}")?;
            for (i, (run, _)) in r.runs.iter().enumerate() {
                for rec in run.trace.iter().flatten() {
                    writeln!(w, "{i},{rec}")?;
                }
            }
            w.flush()
        };
        write().map_err(|e| io_failure(&path, e))?;
    }
    Ok(())
}

pub struct SweepArgs {
    pub figure: u8,
    pub output: Option<PathBuf>,
    pub json: bool,
    pub analytic_only: bool,
    pub points: usize,
    pub range_km: (f64, f64),
    pub t_sg_values: Vec<f64>,
}

fn write_table(t: &Table, path: &Path, json: bool) -> Result<(), Failure> {
    for p in t.write(path, json)? {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

pub fn sweep(cfg: &EffectiveConfig, args: SweepArgs, verbose: bool) -> Result<(), Failure> {
    let resolved = with_seed(cfg);
    let cfg = if args.analytic_only { cfg } else { &resolved };
    let params = cfg.network_params();
    params.validate()?;
    if args.points == 0 {
        return Err(Failure::from(qmux_core::Error::InvalidParameter {
            name: "points",
            reason: "must be at least 1".into(),
        }));
    }
    let grid = experiments::log_spaced(args.range_km.0, args.range_km.1, args.points);
    let mc: Option<McSettings> = (!args.analytic_only).then(|| cfg.mc_settings(0));
    let start = Instant::now();
    let mut summary = Vec::new();
    if let Some(m) = mc {
        summary.push(format!("seed {}", m.base_seed));
    }
    let table = match args.figure {
        4 => {
            let f = experiments::fig4_rate_vs_distance(&params, &grid, mc)?;
            summary.push(format!("swap_limited_km {}", f.swap_limited_km));
            let protos = experiments::fig4_protocols();
            for (i, a) in protos.iter().enumerate() {
                for b in &protos[i + 1..] {
                    let d = analytic::crossover_distance(&params, a, b, args.range_km)?;
                    if let Some(g) = d {
                        summary.push(format!("crossover {} {} {} km", a.label(), b.label(), g.distance_km()));
                    }
                }
            }
            f.table()
        }
        5 => {
            let f = experiments::fig5_n_vs_distance(&params, &grid)?;
            for (p, (d, n)) in f.p_em.iter().zip(&f.maxima) {
                summary.push(format!("max_n p_em {p}: {n} at {d} km"));
            }
            f.table()
        }
        6 => {
            let f = experiments::fig6_rate_vs_memories(
                &params,
                cfg.distance_km,
                &args.t_sg_values,
                experiments::FIG6_BEYOND,
                mc,
            )?;
            for c in &f.curves {
                summary.push(format!("saturation t_sg {} us: n_max {}", c.t_sg_us, c.n_max));
            }
            f.table()
        }
        n => unreachable!("figure {n} rejected by the parser"),
    };
    if verbose {
        eprintln!("swept in {:.2} s", start.elapsed().as_secs_f64());
    }
    match &args.output {
        Some(path) => {
            write_table(&table, path, args.json)?;
            for line in summary {
                println!("{line}");
            }
        }
        None => {
            print!("{}", table.to_csv()?);
            for line in summary {
                eprintln!("{line}");
            }
        }
    }
    Ok(())
}

pub fn crossover(
    cfg: &EffectiveConfig,
    a: &ProtocolConfig,
    b: &ProtocolConfig,
    bracket_km: (f64, f64),
) -> Result<(), Failure> {
    let params = cfg.network_params();
    params.validate()?;
    a.validate()?;
    b.validate()?;
    match analytic::crossover_distance(&params, a, b, bracket_km)? {
        Some(g) => println!("crossover {} {} {} km", a.label(), b.label(), g.distance_km()),
        None => println!(
            "crossover {} {} none in [{}, {}] km",
            a.label(),
            b.label(),
            bracket_km.0,
            bracket_km.1
        ),
    }
    Ok(())
}
