use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// Multiplexed Barrett-Kok: two-photon heralding at the midpoint.
    Mbk,
    /// Multiplexed extreme-photon-loss: two single-click raw states, then distillation.
    Mepl,
    /// Midpoint source: entangled-pair source at d/2, local BSMs at each node.
    Mps,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::Mbk, Protocol::Mepl, Protocol::Mps];

    pub fn as_str(&self) -> &'static str {
        match self {
            Protocol::Mbk => "mbk",
            Protocol::Mepl => "mepl",
            Protocol::Mps => "mps",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mbk" => Ok(Protocol::Mbk),
            "mepl" => Ok(Protocol::Mepl),
            "mps" => Ok(Protocol::Mps),
            other => Err(Error::invalid(
                "protocol",
                format!("unknown protocol `{other}` (expected mbk, mepl or mps)"),
            )),
        }
    }
}

/// Discard policy for the raw state stored during the second mEPL stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Cutoff {
    #[default]
    Unlimited,
    /// Maximum number of second-stage attempts while a raw state is stored.
    Attempts(u64),
}

impl fmt::Display for Cutoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cutoff::Unlimited => f.write_str("unlimited"),
            Cutoff::Attempts(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for Cutoff {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("unlimited") || s.eq_ignore_ascii_case("inf") {
            return Ok(Cutoff::Unlimited);
        }
        match s.parse::<u64>() {
            Ok(n) if n >= 1 => Ok(Cutoff::Attempts(n)),
            _ => Err(Error::invalid(
                "cutoff",
                format!("`{s}` is neither `unlimited` nor a positive integer"),
            )),
        }
    }
}

/// Protocol selector plus the knobs each protocol reads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub protocol: Protocol,
    /// Qubits per node, communication qubit included. Ignored by MPS.
    pub n_qubits: u32,
    /// Pair-emission probability of the midpoint source. MPS only.
    pub p_em: f64,
    /// mEPL only.
    pub cutoff: Cutoff,
    /// mEPL only: wait one communication time for the distillation outcome
    /// before releasing the two qubits.
    pub distill_delay: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            protocol: Protocol::Mepl,
            n_qubits: 2,
            p_em: 0.01,
            cutoff: Cutoff::Unlimited,
            distill_delay: false,
        }
    }
}

impl ProtocolConfig {
    pub fn mbk(n_qubits: u32) -> Self {
        Self {
            protocol: Protocol::Mbk,
            n_qubits,
            ..Default::default()
        }
    }

    pub fn mepl(n_qubits: u32) -> Self {
        Self {
            protocol: Protocol::Mepl,
            n_qubits,
            ..Default::default()
        }
    }

    pub fn mps(p_em: f64) -> Self {
        Self {
            protocol: Protocol::Mps,
            n_qubits: 1,
            p_em,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.protocol {
            Protocol::Mbk if self.n_qubits < 1 => Err(Error::ProtocolConstraint(
                "mbk needs at least one qubit per node".into(),
            )),
            Protocol::Mepl if self.n_qubits < 2 => Err(Error::ProtocolConstraint(format!(
                "mepl needs at least two qubits per node, got {}",
                self.n_qubits
            ))),
            Protocol::Mps if !(self.p_em.is_finite() && self.p_em > 0.0 && self.p_em <= 1.0) => {
                Err(Error::invalid(
                    "p_em",
                    format!("{} is not in (0, 1]", self.p_em),
                ))
            }
            _ => Ok(()),
        }
    }

    /// Short label such as `mepl:2` or `mps:0.1`, also accepted by [`FromStr`].
    pub fn label(&self) -> String {
        match self.protocol {
            Protocol::Mbk | Protocol::Mepl => format!("{}:{}", self.protocol, self.n_qubits),
            Protocol::Mps => format!("mps:{}", self.p_em),
        }
    }
}

impl FromStr for ProtocolConfig {
    type Err = Error;

    /// Parses `mbk`, `mbk:3`, `mepl:2`, `mps:0.1`. A bare name uses the
    /// default qubit count of 2 (or `p_em = 0.01` for MPS).
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a.trim())),
            None => (s, None),
        };
        let protocol: Protocol = name.parse()?;
        let cfg = match (protocol, arg) {
            (Protocol::Mps, Some(a)) => {
                let p_em = a
                    .parse()
                    .map_err(|_| Error::invalid("p_em", format!("`{a}` is not a number")))?;
                ProtocolConfig::mps(p_em)
            }
            (Protocol::Mps, None) => ProtocolConfig::mps(0.01),
            (p, arg) => {
                let n = match arg {
                    Some(a) => a
                        .parse()
                        .map_err(|_| Error::invalid("n_qubits", format!("`{a}` is not a count")))?,
                    None => 2,
                };
                ProtocolConfig {
                    protocol: p,
                    n_qubits: n,
                    ..Default::default()
                }
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
