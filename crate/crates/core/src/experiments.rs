//! Parameter sweeps behind the rate-vs-distance, local-success-vs-distance
//! and rate-vs-qubit-count tables, with CSV and JSON output.

mod figures;
mod table;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytic::{self, ProtocolRate};
use crate::error::{Error, Result};
use crate::netparams::{LinkGeometry, NetworkParams};
use crate::protocols::{self, ProtocolConfig, SimOptions, SimResult};
use crate::simkernel::{McSettings, RandomStream, RateEstimate};

pub use figures::*;
pub use table::{Cell, Column, Provenance, Table};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Axis {
    /// Points are node separations in km.
    Distance,
    /// Points are qubits per node, at a fixed separation.
    NQubits { distance_km: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: Axis,
    pub points: Vec<f64>,
    pub protocols: Vec<ProtocolConfig>,
    /// `None` for analytic-only sweeps.
    pub mc: Option<McSettings>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::invalid("points", "sweep has no points"));
        }
        if self.points.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
            return Err(Error::invalid("points", "sweep points must be strictly increasing"));
        }
        if self.protocols.is_empty() {
            return Err(Error::invalid("protocols", "sweep has no protocols"));
        }
        if let Axis::NQubits { .. } = self.axis {
            if let Some(x) = self.points.iter().find(|x| !(x.fract() == 0.0 && **x >= 1.0 && **x <= u32::MAX as f64)) {
                return Err(Error::invalid("points", format!("{x} is not a qubit count")));
            }
        }
        Ok(())
    }

    /// SHA-256 over the parameters and the spec, hex encoded.
    pub fn hash_hex(&self, params: &NetworkParams) -> String {
        let body = serde_json::to_vec(&(params, self)).expect("sweep specs serialise");
        Sha256::digest(&body).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Base seed of the Monte Carlo point in `row`, `col`.
    ///
    /// Along the qubit axis every row of a column shares its seed (common
    /// random numbers), so differences between qubit counts reflect the
    /// model rather than sampling noise.
    pub fn point_seed(&self, base_seed: u64, row: usize, col: usize) -> u64 {
        let row = match self.axis {
            Axis::Distance => row as u64,
            Axis::NQubits { .. } => 0,
        };
        RandomStream::new(base_seed, ((col as u64) << 32) | row).next_u64()
    }
}

/// One protocol at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub config: ProtocolConfig,
    pub analytic: Option<ProtocolRate>,
    /// Carries its own seed and replication count.
    pub mc: Option<RateEstimate>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub x: f64,
    pub distance_km: f64,
    pub eta: f64,
    pub t_c: f64,
    pub n_max_mbk: u64,
    pub n_max_mepl: u64,
    pub points: Vec<PointResult>,
}

impl SweepRow {
    /// Row-level error text: every failing protocol, `label: message`, joined by `; `.
    pub fn error_text(&self) -> Option<String> {
        let errs: Vec<String> = self
            .points
            .iter()
            .filter_map(|p| p.error.as_ref().map(|e| format!("{}: {e}", p.config.label())))
            .collect();
        (!errs.is_empty()).then(|| errs.join("; "))
    }
}

fn evaluate(
    params: &NetworkParams,
    geom: LinkGeometry,
    cfg: &ProtocolConfig,
    mc: Option<McSettings>,
) -> PointResult {
    let mut out = PointResult {
        config: *cfg,
        analytic: None,
        mc: None,
        error: None,
    };
    match analytic::rate(params, geom, cfg) {
        Ok(r) => out.analytic = Some(r),
        Err(e) => {
            out.error = Some(e.to_string());
            return out;
        }
    }
    if let Some(settings) = mc {
        match protocols::simulate(params, geom, cfg, settings, SimOptions::default()) {
            Ok(r) => out.mc = Some(r.estimate),
            Err(e) => out.error = Some(e.to_string()),
        }
    }
    out
}

/// Evaluates every protocol at every point. Failures are recorded per point
/// and never abort the sweep; only an invalid spec or parameter set does.
pub fn run_sweep(params: &NetworkParams, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    params.validate()?;
    spec.validate()?;
    let n_cols = spec.protocols.len();
    let geoms = spec
        .points
        .iter()
        .map(|&x| match spec.axis {
            Axis::Distance => LinkGeometry::from_km(x),
            Axis::NQubits { distance_km } => LinkGeometry::from_km(distance_km),
        })
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<PointResult> = (0..spec.points.len() * n_cols)
        .into_par_iter()
        .map(|i| {
            let (row, col) = (i / n_cols, i % n_cols);
            let mut cfg = spec.protocols[col];
            if let Axis::NQubits { .. } = spec.axis {
                cfg.n_qubits = spec.points[row] as u32;
            }
            let mc = spec.mc.map(|m| McSettings {
                base_seed: spec.point_seed(m.base_seed, row, col),
                ..m
            });
            evaluate(params, geoms[row], &cfg, mc)
        })
        .collect();
    let mut cells = cells.into_iter();
    Ok(spec
        .points
        .iter()
        .zip(&geoms)
        .map(|(&x, &g)| SweepRow {
            x,
            distance_km: g.distance_km(),
            eta: params.eta(g),
            t_c: params.t_c(g),
            n_max_mbk: analytic::n_max_mbk(params, g),
            n_max_mepl: analytic::n_max_mepl(params, g),
            points: cells.by_ref().take(n_cols).collect(),
        })
        .collect())
}

/// One row per replication of a single simulation.
pub fn replication_table(result: &SimResult, params: &NetworkParams, mc: McSettings, config_hash: String) -> Table {
    let columns = vec![
        Column::new("replication", "", "replication index, also its random stream id"),
        Column::new("successes", "", "delivered pairs"),
        Column::new("sim_time_s", "s", "simulated time"),
        Column::new("rate_hz", "Hz", "successes over simulated time"),
        Column::new("events", "", "events processed"),
        Column::new("attempts", "", "heralded attempts, or source rounds for mps"),
        Column::new("digest", "", "hash of the success timestamps"),
    ];
    let rows = result
        .runs
        .iter()
        .enumerate()
        .map(|(i, (run, stats))| {
            vec![
                Cell::Int(i as u64),
                Cell::Int(run.successes),
                Cell::Float(run.sim_time),
                Cell::Float(run.rate()),
                Cell::Int(run.events),
                Cell::Int(stats.attempts),
                Cell::Text(format!("{:016x}", run.digest)),
            ]
        })
        .collect();
    Table {
        name: "replications".into(),
        columns,
        rows,
        provenance: Provenance::new(params, Some(mc), config_hash),
    }
}

/// `n` points from `lo` to `hi` inclusive, evenly spaced in log.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| match i {
                0 => lo,
                i if i == n - 1 => hi,
                i => lo * (hi / lo).powf(i as f64 / (n - 1) as f64),
            })
            .collect(),
    }
}

/// Least-squares fit of `ln y = a + b d (+ c ln d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub intercept: f64,
    /// `b`, per km, natural-log units.
    pub slope_per_km: f64,
    /// `c`, present when the `ln d` term was fitted.
    pub log_coefficient: Option<f64>,
    pub r_squared: f64,
}

pub fn fit_log_rate(distance_km: &[f64], y: &[f64], with_log_term: bool) -> Result<ScalingFit> {
    use nalgebra::{DMatrix, DVector};

    let k = if with_log_term { 3 } else { 2 };
    if distance_km.len() != y.len() || y.len() <= k {
        return Err(Error::invalid("fit", format!("need more than {k} paired points")));
    }
    if y.iter().chain(distance_km).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::invalid("fit", "values and distances must be positive"));
    }
    let n = y.len();
    let x = DMatrix::from_fn(n, k, |i, j| match j {
        0 => 1.0,
        1 => distance_km[i],
        _ => distance_km[i].ln(),
    });
    let ly = DVector::from_iterator(n, y.iter().map(|v| v.ln()));
    let beta = x
        .clone()
        .svd(true, true)
        .solve(&ly, 1e-12)
        .map_err(|e| Error::invalid("fit", e.to_string()))?;
    let resid = &ly - &x * &beta;
    let mean = ly.mean();
    let ss_tot: f64 = ly.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res = resid.norm_squared();
    Ok(ScalingFit {
        intercept: beta[0],
        slope_per_km: beta[1],
        log_coefficient: with_log_term.then(|| beta[2]),
        r_squared: if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_endpoints_and_ratio() {
        let g = log_spaced(10.0, 200.0, 20);
        assert_eq!(g.len(), 20);
        assert_eq!(g[0], 10.0);
        assert_eq!(g[19], 200.0);
        let r = g[1] / g[0];
        for w in g.windows(2) {
            assert!((w[1] / w[0] - r).abs() < 1e-12);
        }
    }

    #[test]
    fn fit_recovers_exact_law() {
        let d = log_spaced(10.0, 200.0, 20);
        let y: Vec<f64> = d.iter().map(|x| 3.0 * (-0.05 * x).exp() / x).collect();
        let f = fit_log_rate(&d, &y, true).unwrap();
        assert!((f.slope_per_km + 0.05).abs() < 1e-10);
        assert!((f.log_coefficient.unwrap() + 1.0).abs() < 1e-9);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-9);
        assert!(f.r_squared > 1.0 - 1e-12);
        let f = fit_log_rate(&d, &y, false).unwrap();
        assert!(f.r_squared < 1.0 - 1e-6);
        assert!(fit_log_rate(&d[..2], &y[..2], false).is_err());
    }

    #[test]
    fn spec_validation() {
        let mut s = SweepSpec {
            axis: Axis::Distance,
            points: vec![10.0, 20.0],
            protocols: vec![ProtocolConfig::mepl(2)],
            mc: None,
        };
        assert!(s.validate().is_ok());
        s.points = vec![20.0, 20.0];
        assert!(s.validate().is_err());
        s.points = vec![];
        assert!(s.validate().is_err());
        s.points = vec![2.0, 2.5];
        s.axis = Axis::NQubits { distance_km: 50.0 };
        assert!(s.validate().is_err());
    }

    #[test]
    fn seeds_distinct_along_distance_shared_along_qubits() {
        let mut s = SweepSpec {
            axis: Axis::Distance,
            points: vec![1.0, 2.0],
            protocols: vec![ProtocolConfig::mepl(2); 2],
            mc: None,
        };
        let seeds = [s.point_seed(1, 0, 0), s.point_seed(1, 1, 0), s.point_seed(1, 0, 1), s.point_seed(2, 0, 0)];
        for i in 0..seeds.len() {
            for j in 0..i {
                assert_ne!(seeds[i], seeds[j]);
            }
        }
        s.axis = Axis::NQubits { distance_km: 50.0 };
        assert_eq!(s.point_seed(1, 0, 1), s.point_seed(1, 5, 1));
    }

    #[test]
    fn per_point_errors_do_not_abort() {
        let s = SweepSpec {
            axis: Axis::NQubits { distance_km: 50.0 },
            points: vec![1.0, 2.0],
            protocols: vec![ProtocolConfig::mepl(2)],
            mc: None,
        };
        let rows = run_sweep(&NetworkParams::default(), &s).unwrap();
        assert!(rows[0].error_text().unwrap().starts_with("mepl:1: "));
        assert!(rows[1].error_text().is_none());
        assert!((rows[1].points[0].analytic.unwrap().rate - 9.486832980505138).abs() < 1e-9);
    }
}
