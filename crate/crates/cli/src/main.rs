use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qmux_core::config::{EffectiveConfig, CONFIG_ENV};
use qmux_core::{Cutoff, Error, ProtocolConfig};

mod commands;

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (config schema 1)");

/// Entanglement rates for multiplexed two-node quantum links.
#[derive(Parser, Debug)]
#[command(name = "qmux", version = VERSION)]
struct Cli {
    /// Config file of `key = value` lines; every key is optional.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,

    /// Print the effective configuration as a config file and exit.
    #[arg(long, global = true)]
    dump_config: bool,

    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Report progress and timings on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Option<Command>,
}

/// Flags that override the config file, which overrides the built-in defaults.
#[derive(Args, Debug, Default)]
struct Overrides {
    #[arg(long, global = true)]
    distance_km: Option<f64>,
    /// `mbk`, `mepl`, `mps`, or a label such as `mepl:3` or `mps:0.1`.
    #[arg(long, global = true)]
    protocol: Option<String>,
    #[arg(long, global = true)]
    n_qubits: Option<u32>,
    #[arg(long, global = true)]
    p_em: Option<f64>,
    /// Attempts a stored raw state may wait, or `unlimited`.
    #[arg(long, global = true)]
    cutoff: Option<Cutoff>,
    #[arg(long, global = true)]
    distill_delay: Option<bool>,
    #[arg(long, global = true)]
    p_out: Option<f64>,
    #[arg(long, global = true)]
    p_fc: Option<f64>,
    #[arg(long, global = true)]
    alpha_db_per_km: Option<f64>,
    #[arg(long, global = true)]
    t_eg_us: Option<f64>,
    #[arg(long, global = true)]
    t_sg_us: Option<f64>,
    #[arg(long, global = true)]
    c_fiber_m_per_s: Option<f64>,
    #[arg(long, global = true)]
    replications: Option<usize>,
    #[arg(long, global = true)]
    successes: Option<u64>,
    /// Base seed; drawn at random and echoed when absent.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form rates at one parameter point.
    Analytic {
        /// Also list every protocol, not just the configured one.
        #[arg(long)]
        all: bool,
    },
    /// Monte Carlo rate at one parameter point.
    Simulate {
        /// Per-replication CSV.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Event trace CSV; resolves every attempt, so runs are slower.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Tables of rate vs distance (4), local successes vs distance (5) or
    /// rate vs qubit count (6).
    Sweep {
        #[arg(long, value_parser = clap::value_parser!(u8).range(4..=6))]
        figure: u8,
        /// CSV path; a `.schema.csv` sidecar is written next to it. Prints
        /// the CSV when absent.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Also write a `.json` copy with provenance.
        #[arg(long, requires = "output")]
        json: bool,
        /// Skip the Monte Carlo columns.
        #[arg(long)]
        analytic_only: bool,
        #[arg(long, default_value_t = qmux_core::experiments::FIG4_POINTS)]
        points: usize,
        #[arg(long, default_value_t = qmux_core::experiments::FIG4_RANGE_KM.0)]
        min_km: f64,
        #[arg(long, default_value_t = qmux_core::experiments::FIG4_RANGE_KM.1)]
        max_km: f64,
        /// Swap gate durations for figure 6, us.
        #[arg(long, value_delimiter = ',', default_values_t = qmux_core::experiments::FIG6_T_SG_US)]
        t_sg_values: Vec<f64>,
    },
    /// Distance where two protocols' closed-form rates cross.
    Crossover {
        #[arg(long)]
        a: ProtocolConfig,
        #[arg(long)]
        b: ProtocolConfig,
        #[arg(long, default_value_t = qmux_core::analytic::DEFAULT_BRACKET_KM.0)]
        lo_km: f64,
        #[arg(long, default_value_t = qmux_core::analytic::DEFAULT_BRACKET_KM.1)]
        hi_km: f64,
    },
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DOMAIN: u8 = 3;
pub const EXIT_RUNTIME: u8 = 4;

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_config() {
            EXIT_USAGE
        } else if e.is_runtime() {
            EXIT_RUNTIME
        } else {
            EXIT_DOMAIN
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl Failure {
    pub fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_RUNTIME,
            message: message.into(),
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

fn effective_config(cli: &Cli) -> Result<EffectiveConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => EffectiveConfig::load(path).map_err(|e| match e {
            // an unreadable config file is a usage problem, not a runtime one
            Error::Io(m) => Failure::usage(format!("cannot read config: {m}")),
            e => e.into(),
        })?,
        None => EffectiveConfig::default(),
    };
    let o = &cli.overrides;
    if let Some(p) = &o.protocol {
        if p.contains(':') {
            let label: ProtocolConfig = p.parse().map_err(|e: Error| Failure::usage(e.to_string()))?;
            cfg.protocol.protocol = label.protocol;
            match label.protocol {
                qmux_core::Protocol::Mps => cfg.protocol.p_em = label.p_em,
                _ => cfg.protocol.n_qubits = label.n_qubits,
            }
        } else {
            cfg.set("protocol", p).map_err(Failure::usage)?;
        }
    }
    macro_rules! apply {
        ($($field:ident => $target:expr),* $(,)?) => {
            $(if let Some(v) = o.$field { $target = v; })*
        };
    }
    apply! {
        distance_km => cfg.distance_km,
        n_qubits => cfg.protocol.n_qubits,
        p_em => cfg.protocol.p_em,
        cutoff => cfg.protocol.cutoff,
        distill_delay => cfg.protocol.distill_delay,
        p_out => cfg.p_out,
        p_fc => cfg.p_fc,
        alpha_db_per_km => cfg.alpha_db_per_km,
        t_eg_us => cfg.t_eg_us,
        t_sg_us => cfg.t_sg_us,
        c_fiber_m_per_s => cfg.c_fiber_m_per_s,
        replications => cfg.replications,
        successes => cfg.successes,
    }
    if o.seed.is_some() {
        cfg.seed = o.seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::runtime(e.to_string()))?;
    }
    let cfg = effective_config(&cli)?;
    if cli.dump_config {
        print!("{}", cfg.dump());
        return Ok(());
    }
    let verbose = cli.verbose > 0;
    match cli.command {
        None => Err(Failure::usage("no subcommand given; see --help")),
        Some(Command::Analytic { all }) => commands::analytic(&cfg, all),
        Some(Command::Simulate { output, trace }) => commands::simulate(&cfg, output, trace, verbose),
        Some(Command::Sweep {
            figure,
            output,
            json,
            analytic_only,
            points,
            min_km,
            max_km,
            t_sg_values,
        }) => commands::sweep(
            &cfg,
            commands::SweepArgs {
                figure,
                output,
                json,
                analytic_only,
                points,
                range_km: (min_km, max_km),
                t_sg_values,
            },
            verbose,
        ),
        Some(Command::Crossover { a, b, lo_km, hi_km }) => commands::crossover(&cfg, &a, &b, (lo_km, hi_km)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
