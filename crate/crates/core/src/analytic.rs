//! Closed-form rate models.
//!
//! Every constant factor is taken at face value: 1/2 for the midpoint Bell
//! measurement, 1/8 for distillation, 1/4 for the two simultaneous local
//! measurements of the midpoint-source scheme. These functions are the
//! reference the Monte Carlo simulator is validated against.
//!
//! The swap-gate bound enters through the integer qubit clamp
//! `n_effective = min(N, ceil(t_c / t_sg))` (plus one for mEPL) and not as
//! a separate continuous `1 / t_sg` ceiling on the attempt rate.
//!
//! For reference, a non-pipelined EPL link (one raw state at a time, no
//! multiplexing) runs at `eta / (16 t_c)`; the N = 2 pipelined expression
//! used here gives `eta / (12 t_c)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netparams::{LinkGeometry, NetworkParams};
use crate::protocols::{Protocol, ProtocolConfig};

/// Slack applied before taking a ceiling so that ratios which are integers
/// up to rounding (e.g. 40 km at t_sg = 200 us) do not round up.
const CEIL_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolRate {
    pub protocol: Protocol,
    /// Heralded entangled pairs per second.
    pub rate: f64,
    /// Entanglement attempts per second, averaged over protocol phases.
    pub attempt_rate: f64,
    /// Qubits per node actually used.
    pub n_effective: u64,
}

fn ceil_ratio(num: f64, den: f64) -> u64 {
    let x = num / den;
    // float -> int casts saturate, so t_sg -> 0 yields u64::MAX
    ((x - CEIL_SLACK * x.max(1.0)).ceil() as u64).max(1)
}

fn validated(params: &NetworkParams) -> Result<()> {
    params.validate()
}

/// Largest useful qubit count for mBK: `ceil(t_c / t_sg)`, at least 1.
pub fn n_max_mbk(params: &NetworkParams, geom: LinkGeometry) -> u64 {
    ceil_ratio(params.t_c(geom), params.t_sg)
}

/// Largest useful qubit count for mEPL, one more than mBK since the first
/// raw state pins a memory during the second stage.
pub fn n_max_mepl(params: &NetworkParams, geom: LinkGeometry) -> u64 {
    n_max_mbk(params, geom).saturating_add(1)
}

/// Qubits per node the simulator and the analytic model both use for `cfg`.
pub fn effective_qubits(params: &NetworkParams, geom: LinkGeometry, cfg: &ProtocolConfig) -> u64 {
    let requested = u64::from(cfg.n_qubits);
    match cfg.protocol {
        Protocol::Mbk => requested.min(n_max_mbk(params, geom)),
        Protocol::Mepl => requested.min(n_max_mepl(params, geom)),
        Protocol::Mps => 1,
    }
}

pub fn rate_mbk(params: &NetworkParams, geom: LinkGeometry, n_qubits: u32) -> Result<ProtocolRate> {
    validated(params)?;
    ProtocolConfig::mbk(n_qubits).validate()?;
    let n_eff = u64::from(n_qubits).min(n_max_mbk(params, geom));
    let eta = params.eta(geom);
    let attempt_rate = n_eff as f64 / params.t_c(geom);
    Ok(ProtocolRate {
        protocol: Protocol::Mbk,
        rate: attempt_rate * eta * eta / 2.0,
        attempt_rate,
        n_effective: n_eff,
    })
}

/// Pipelined two-stage rate: the inverse of the mean time spent generating
/// the first raw state with `n` qubits and the second with `n - 1`, times
/// the 1/8 distillation yield.
pub fn rate_mepl(params: &NetworkParams, geom: LinkGeometry, n_qubits: u32) -> Result<ProtocolRate> {
    validated(params)?;
    ProtocolConfig::mepl(n_qubits).validate()?;
    let n_eff = u64::from(n_qubits).min(n_max_mepl(params, geom));
    let n = n_eff as f64;
    let eta = params.eta(geom);
    let t_c = params.t_c(geom);
    let pair_factor = n * (n - 1.0) / (2.0 * n - 1.0);
    Ok(ProtocolRate {
        protocol: Protocol::Mepl,
        rate: pair_factor * eta / (8.0 * t_c),
        // two raw attempts-worth of successes per pair, over the pair time
        attempt_rate: 2.0 * pair_factor / t_c,
        n_effective: n_eff,
    })
}

/// Low-n midpoint-source rate; one qubit per node, one attempt per `t_eg`.
pub fn rate_mps(params: &NetworkParams, geom: LinkGeometry, p_em: f64) -> Result<ProtocolRate> {
    validated(params)?;
    ProtocolConfig::mps(p_em).validate()?;
    let eta = params.eta(geom);
    Ok(ProtocolRate {
        protocol: Protocol::Mps,
        rate: p_em * eta * eta / (4.0 * params.t_eg),
        attempt_rate: 1.0 / params.t_eg,
        n_effective: 1,
    })
}

/// Expected successful local BSMs at one MPS node per communication time,
/// `n = p_em * eta * t_c / (2 t_eg)`.
pub fn expected_local_successes(params: &NetworkParams, geom: LinkGeometry, p_em: f64) -> Result<f64> {
    validated(params)?;
    ProtocolConfig::mps(p_em).validate()?;
    Ok(0.5 * p_em * params.eta(geom) * params.t_c(geom) / params.t_eg)
}

pub fn rate(params: &NetworkParams, geom: LinkGeometry, cfg: &ProtocolConfig) -> Result<ProtocolRate> {
    match cfg.protocol {
        Protocol::Mbk => rate_mbk(params, geom, cfg.n_qubits),
        Protocol::Mepl => rate_mepl(params, geom, cfg.n_qubits),
        Protocol::Mps => rate_mps(params, geom, cfg.p_em),
    }
}

/// Default search bracket for crossovers, km.
pub const DEFAULT_BRACKET_KM: (f64, f64) = (10.0, 300.0);

/// Relative tolerance on the crossover distance.
pub const CROSSOVER_REL_TOL: f64 = 1e-6;

const SCAN_POINTS: usize = 256;

/// Bisection for a sign change of `f` on `[lo, hi]`, stopping when the
/// bracket is narrower than `rel_tol` times its midpoint.
pub fn bisect<F>(mut f: F, lo: f64, hi: f64, rel_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = (lo, hi);
    let mut f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::NotBracketed {
            lo_km: lo / 1e3,
            hi_km: hi / 1e3,
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= rel_tol * mid.abs() {
            return Ok(mid);
        }
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Distance at which the analytic rates of `a` and `b` are equal.
///
/// The bracket is scanned on a log grid for the first sign change of
/// `ln R_a - ln R_b`, which is then refined by bisection. Returns `None`
/// when the difference keeps one sign over the whole bracket.
pub fn crossover_distance(
    params: &NetworkParams,
    a: &ProtocolConfig,
    b: &ProtocolConfig,
    bracket_km: (f64, f64),
) -> Result<Option<LinkGeometry>> {
    let (lo_km, hi_km) = bracket_km;
    let lo = LinkGeometry::from_km(lo_km)?;
    let hi = LinkGeometry::from_km(hi_km)?;
    if lo >= hi {
        return Err(Error::invalid(
            "bracket",
            format!("[{lo_km}, {hi_km}] km is empty"),
        ));
    }
    let diff = |d_m: f64| -> Result<f64> {
        let g = LinkGeometry::new(d_m)?;
        let ra = rate(params, g, a)?.rate;
        let rb = rate(params, g, b)?.rate;
        Ok(ra.ln() - rb.ln())
    };

    let ratio = (hi.distance_m() / lo.distance_m()).powf(1.0 / (SCAN_POINTS - 1) as f64);
    let mut prev_d = lo.distance_m();
    let mut prev = diff(prev_d)?;
    for i in 1..SCAN_POINTS {
        let d = if i == SCAN_POINTS - 1 {
            hi.distance_m()
        } else {
            lo.distance_m() * ratio.powi(i as i32)
        };
        let cur = diff(d)?;
        // identical curves (both zero) are not a crossing
        if prev != 0.0 && cur == 0.0 {
            return Ok(Some(LinkGeometry::new(d)?));
        }
        if prev != 0.0 && cur != 0.0 && cur.signum() != prev.signum() {
            return match bisect(diff, prev_d, d, CROSSOVER_REL_TOL) {
                Ok(root) => Ok(Some(LinkGeometry::new(root)?)),
                Err(Error::NotBracketed { .. }) => Ok(None),
                Err(e) => Err(e),
            };
        }
        prev = cur;
        prev_d = d;
    }
    Ok(None)
}
