//! Physical link parameters and the two quantities every model derives from
//! them: the lumped per-photon transmission efficiency and the
//! communication time between the nodes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Signal propagation speed in fiber, m/s.
pub const DEFAULT_C_FIBER: f64 = 2.0e8;

/// Hardware and channel parameters shared by both nodes.
///
/// All durations are in seconds and all speeds in m/s. The defaults are the
/// near-term NV-centre figures: 30 % outcoupling, 30 % frequency conversion,
/// 0.2 dB/km fiber, 1 us entanglement generation and a 200 us swap gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub p_out: f64,
    pub p_fc: f64,
    pub alpha_db_per_km: f64,
    pub t_eg: f64,
    pub t_sg: f64,
    pub c_fiber: f64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self {
            p_out: 0.3,
            p_fc: 0.3,
            alpha_db_per_km: 0.2,
            t_eg: 1e-6,
            t_sg: 200e-6,
            c_fiber: DEFAULT_C_FIBER,
        }
    }
}

fn check_probability(name: &'static str, p: f64) -> Result<()> {
    if p.is_finite() && p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("{p} is not in (0, 1]")))
    }
}

fn check_positive(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("{x} must be finite and > 0")))
    }
}

impl NetworkParams {
    pub fn validate(&self) -> Result<()> {
        check_probability("p_out", self.p_out)?;
        check_probability("p_fc", self.p_fc)?;
        if !(self.alpha_db_per_km.is_finite() && self.alpha_db_per_km >= 0.0) {
            return Err(Error::invalid(
                "alpha_db_per_km",
                format!("{} must be finite and >= 0", self.alpha_db_per_km),
            ));
        }
        check_positive("t_eg", self.t_eg)?;
        check_positive("t_sg", self.t_sg)?;
        check_positive("c_fiber", self.c_fiber)?;
        Ok(())
    }

    /// System transmission efficiency for one photon travelling from a node
    /// to the midpoint station: `p_out * p_fc * 10^(-alpha * d / 20)`.
    ///
    /// The `/ 20` is the loss over half the node separation.
    pub fn eta(&self, geom: LinkGeometry) -> f64 {
        self.p_out * self.p_fc * fiber_transmission(self.alpha_db_per_km, geom.distance_km() / 2.0)
    }

    /// Combined quantum and classical communication time, `d / c`.
    pub fn t_c(&self, geom: LinkGeometry) -> f64 {
        geom.distance_m() / self.c_fiber
    }

    /// Distance at which the communication time equals the swap-gate time.
    pub fn swap_limited_distance(&self) -> LinkGeometry {
        LinkGeometry {
            d: self.t_sg * self.c_fiber,
        }
    }
}

/// Fraction of light surviving `km` of fiber at `alpha_db_per_km`.
pub fn fiber_transmission(alpha_db_per_km: f64, km: f64) -> f64 {
    10f64.powf(-alpha_db_per_km * km / 10.0)
}

/// Separation of the two nodes; the midpoint station sits at `d / 2`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LinkGeometry {
    d: f64,
}

impl LinkGeometry {
    pub fn new(distance_m: f64) -> Result<Self> {
        if distance_m.is_finite() && distance_m > 0.0 {
            Ok(Self { d: distance_m })
        } else {
            Err(Error::invalid(
                "distance",
                format!("{distance_m} m must be finite and > 0"),
            ))
        }
    }

    pub fn from_km(km: f64) -> Result<Self> {
        Self::new(km * 1e3)
    }

    pub fn distance_m(&self) -> f64 {
        self.d
    }

    pub fn distance_km(&self) -> f64 {
        self.d / 1e3
    }
}
