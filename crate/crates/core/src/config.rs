//! Plain-text `key = value` configuration.
//!
//! Values are kept in the file's units (km, us) so that a dumped file parses
//! back to the identical configuration; [`EffectiveConfig::network_params`]
//! converts to SI.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netparams::{LinkGeometry, NetworkParams};
use crate::protocols::{Cutoff, Protocol, ProtocolConfig};
use crate::simkernel::{McSettings, StopRule};

/// Bumped whenever a key is added, removed or changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable naming a config file to load when none is given.
pub const CONFIG_ENV: &str = "QMUX_CONFIG";

/// Recognised keys, in dump order, with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("p_out", "photon outcoupling probability"),
    ("p_fc", "frequency conversion efficiency"),
    ("alpha_db_per_km", "fiber attenuation, dB/km"),
    ("t_eg_us", "entanglement generation attempt, us"),
    ("t_sg_us", "swap gate duration, us"),
    ("c_fiber_m_per_s", "signal speed in fiber, m/s"),
    ("distance_km", "node separation, km"),
    ("protocol", "mbk | mepl | mps"),
    ("n_qubits", "qubits per node including the communication qubit"),
    ("p_em", "midpoint source emission probability (mps)"),
    ("cutoff", "attempts a stored raw state may wait, or unlimited (mepl)"),
    ("distill_delay", "wait one communication time for the distillation outcome (mepl)"),
    ("replications", "Monte Carlo replications"),
    ("successes", "successes per replication"),
    ("seed", "base seed, or auto"),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveConfig {
    pub p_out: f64,
    pub p_fc: f64,
    pub alpha_db_per_km: f64,
    pub t_eg_us: f64,
    pub t_sg_us: f64,
    pub c_fiber_m_per_s: f64,
    pub distance_km: f64,
    pub protocol: ProtocolConfig,
    pub replications: usize,
    pub successes: u64,
    /// `None` means pick one at run time and echo it.
    pub seed: Option<u64>,
}

impl Default for EffectiveConfig {
    fn default() -> Self {
        let p = NetworkParams::default();
        let mc = McSettings::default();
        let successes = match mc.stop {
            StopRule::Successes(n) => n,
            StopRule::Duration(_) => 2_000,
        };
        Self {
            p_out: p.p_out,
            p_fc: p.p_fc,
            alpha_db_per_km: p.alpha_db_per_km,
            t_eg_us: 1.0,
            t_sg_us: 200.0,
            c_fiber_m_per_s: p.c_fiber,
            distance_km: 50.0,
            protocol: ProtocolConfig::default(),
            replications: mc.replications,
            successes,
            seed: None,
        }
    }
}

fn number<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("`{value}` is not a valid value for `{key}`"))
}

fn boolean(key: &str, value: &str) -> std::result::Result<bool, String> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("`{value}` is not a boolean for `{key}`")),
    }
}

impl EffectiveConfig {
    /// Parses a config file body on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.merge_text(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies every `key = value` line of `text`, later lines winning.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(at) => &raw[..at],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config {
                    line: i + 1,
                    reason: format!("expected `key = value`, got `{line}`"),
                });
            };
            self.set(key.trim(), value.trim())
                .map_err(|reason| Error::Config { line: i + 1, reason })?;
        }
        Ok(())
    }

    /// Sets one key from its textual value. Only syntax is checked here;
    /// physical ranges are checked by [`validate`](Self::validate).
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "p_out" => self.p_out = number(key, value)?,
            "p_fc" => self.p_fc = number(key, value)?,
            "alpha_db_per_km" => self.alpha_db_per_km = number(key, value)?,
            "t_eg_us" => self.t_eg_us = number(key, value)?,
            "t_sg_us" => self.t_sg_us = number(key, value)?,
            "c_fiber_m_per_s" => self.c_fiber_m_per_s = number(key, value)?,
            "distance_km" => self.distance_km = number(key, value)?,
            "protocol" => {
                self.protocol.protocol = value.parse::<Protocol>().map_err(|e| e.to_string())?;
            }
            "n_qubits" => self.protocol.n_qubits = number(key, value)?,
            "p_em" => self.protocol.p_em = number(key, value)?,
            "cutoff" => self.protocol.cutoff = value.parse::<Cutoff>().map_err(|e| e.to_string())?,
            "distill_delay" => self.protocol.distill_delay = boolean(key, value)?,
            "replications" => self.replications = number(key, value)?,
            "successes" => self.successes = number(key, value)?,
            "seed" => {
                self.seed = if value.eq_ignore_ascii_case("auto") {
                    None
                } else {
                    Some(number(key, value)?)
                }
            }
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    pub fn network_params(&self) -> NetworkParams {
        NetworkParams {
            p_out: self.p_out,
            p_fc: self.p_fc,
            alpha_db_per_km: self.alpha_db_per_km,
            t_eg: self.t_eg_us / 1e6,
            t_sg: self.t_sg_us / 1e6,
            c_fiber: self.c_fiber_m_per_s,
        }
    }

    pub fn geometry(&self) -> Result<LinkGeometry> {
        LinkGeometry::from_km(self.distance_km)
    }

    /// Monte Carlo settings, with `seed` standing in for an `auto` seed.
    pub fn mc_settings(&self, seed: u64) -> McSettings {
        McSettings {
            replications: self.replications,
            stop: StopRule::Successes(self.successes),
            base_seed: self.seed.unwrap_or(seed),
        }
    }

    /// Physical and protocol validation.
    pub fn validate(&self) -> Result<()> {
        self.network_params().validate()?;
        self.geometry()?;
        self.protocol.validate()?;
        if self.replications == 0 {
            return Err(Error::invalid("replications", "must be at least 1"));
        }
        if self.successes == 0 {
            return Err(Error::invalid("successes", "must be at least 1"));
        }
        Ok(())
    }

    fn value_of(&self, key: &str) -> String {
        match key {
            "p_out" => self.p_out.to_string(),
            "p_fc" => self.p_fc.to_string(),
            "alpha_db_per_km" => self.alpha_db_per_km.to_string(),
            "t_eg_us" => self.t_eg_us.to_string(),
            "t_sg_us" => self.t_sg_us.to_string(),
            "c_fiber_m_per_s" => self.c_fiber_m_per_s.to_string(),
            "distance_km" => self.distance_km.to_string(),
            "protocol" => self.protocol.protocol.to_string(),
            "n_qubits" => self.protocol.n_qubits.to_string(),
            "p_em" => self.protocol.p_em.to_string(),
            "cutoff" => self.protocol.cutoff.to_string(),
            "distill_delay" => self.protocol.distill_delay.to_string(),
            "replications" => self.replications.to_string(),
            "successes" => self.successes.to_string(),
            "seed" => self.seed.map_or_else(|| "auto".to_string(), |s| s.to_string()),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// Config file text that parses back to `self`.
    pub fn dump(&self) -> String {
        let mut out = format!("# qmux config, schema {SCHEMA_VERSION}\n");
        for (key, help) in KEYS {
            let _ = writeln!(out, "# {help}\n{key} = {}", self.value_of(key));
        }
        out
    }

    /// Stable digest of the configuration, used to tag emitted tables.
    pub fn hash_hex(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.dump().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
