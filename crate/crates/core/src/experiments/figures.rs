use crate::analytic;
use crate::error::Result;
use crate::netparams::{LinkGeometry, NetworkParams};
use crate::protocols::{Protocol, ProtocolConfig};
use crate::simkernel::McSettings;

use super::{fit_log_rate, log_spaced, run_sweep, Axis, Cell, Column, Provenance, ScalingFit, SweepRow, SweepSpec, Table};

pub const FIG4_RANGE_KM: (f64, f64) = (10.0, 200.0);
pub const FIG4_POINTS: usize = 20;
pub const FIG6_DISTANCE_KM: f64 = 50.0;
pub const FIG6_T_SG_US: [f64; 3] = [200.0, 50.0, 25.0];
/// Qubit counts simulated past each curve's saturation point.
pub const FIG6_BEYOND: u32 = 3;

pub fn default_distance_grid() -> Vec<f64> {
    log_spaced(FIG4_RANGE_KM.0, FIG4_RANGE_KM.1, FIG4_POINTS)
}

pub fn fig4_protocols() -> Vec<ProtocolConfig> {
    vec![
        ProtocolConfig::mbk(2),
        ProtocolConfig::mepl(2),
        ProtocolConfig::mps(0.01),
        ProtocolConfig::mps(0.1),
    ]
}

fn sweep_columns(spec: &SweepSpec) -> Vec<Column> {
    let mut cols = vec![match spec.axis {
        Axis::Distance => Column::new("distance_km", "km", "node separation"),
        Axis::NQubits { .. } => Column::new("n_qubits", "", "qubits per node"),
    }];
    cols.extend([
        Column::new("t_c_us", "us", "communication time"),
        Column::new("eta", "", "single-photon transmission to the midpoint"),
        Column::new("n_max_mbk", "", "largest useful qubit count for mbk"),
        Column::new("n_max_mepl", "", "largest useful qubit count for mepl"),
    ]);
    for p in &spec.protocols {
        let l = p.label();
        cols.extend([
            Column::new(format!("{l}_analytic_hz"), "Hz", format!("{l} closed-form rate")),
            Column::new(format!("{l}_mc_hz"), "Hz", format!("{l} Monte Carlo rate")),
            Column::new(format!("{l}_stderr_hz"), "Hz", format!("{l} Monte Carlo standard error")),
            Column::new(format!("{l}_n_eff"), "", format!("{l} qubits actually used")),
            Column::new(format!("{l}_seed"), "", format!("{l} Monte Carlo base seed")),
        ]);
    }
    cols.push(Column::new("error", "", "per-protocol failures at this point"));
    cols
}

fn sweep_cells(row: &SweepRow) -> Vec<Cell> {
    let mut cells = vec![
        Cell::Float(row.x),
        Cell::Float(row.t_c * 1e6),
        Cell::Float(row.eta),
        Cell::Int(row.n_max_mbk),
        Cell::Int(row.n_max_mepl),
    ];
    for p in &row.points {
        cells.extend([
            p.analytic.map(|a| a.rate).into(),
            p.mc.as_ref().map(|m| m.rate).into(),
            p.mc.as_ref().and_then(|m| m.stderr).into(),
            p.analytic.map(|a| a.n_effective).into(),
            p.mc.as_ref().map(|m| m.seed).into(),
        ]);
    }
    cells.push(row.error_text().map_or(Cell::Empty, Cell::Text));
    cells
}

/// Rate vs distance for the four reference protocol settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Figure4 {
    pub params: NetworkParams,
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
    /// Where `t_c = t_sg`; below it a single mbk memory is enough.
    pub swap_limited_km: f64,
}

/// A fitted scaling law next to the one the model predicts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingCheck {
    pub config: ProtocolConfig,
    pub fit: ScalingFit,
    pub expected_slope_per_km: f64,
    /// `-1` for protocols whose rate carries a `1 / t_c` factor.
    pub expected_log_coefficient: Option<f64>,
}

pub fn fig4_rate_vs_distance(params: &NetworkParams, points: &[f64], mc: Option<McSettings>) -> Result<Figure4> {
    let spec = SweepSpec {
        axis: Axis::Distance,
        points: points.to_vec(),
        protocols: fig4_protocols(),
        mc,
    };
    let rows = run_sweep(params, &spec)?;
    Ok(Figure4 {
        params: *params,
        spec,
        rows,
        swap_limited_km: params.swap_limited_distance().distance_km(),
    })
}

impl Figure4 {
    pub fn table(&self) -> Table {
        let mut prov = Provenance::new(&self.params, self.spec.mc, self.spec.hash_hex(&self.params));
        prov.notes.insert("swap_limited_km".into(), self.swap_limited_km.to_string());
        Table {
            name: "rate_vs_distance".into(),
            columns: sweep_columns(&self.spec),
            rows: self.rows.iter().map(sweep_cells).collect(),
            provenance: prov,
        }
    }

    /// Fits `ln(rate / n_eff)` against distance for each protocol, with an
    /// `ln d` term for the protocols heralded over the full link. Uses the
    /// Monte Carlo column when `mc` is set, the closed-form one otherwise.
    pub fn scaling_checks(&self, mc: bool) -> Result<Vec<ScalingCheck>> {
        let d: Vec<f64> = self.rows.iter().map(|r| r.distance_km).collect();
        let decay = self.params.alpha_db_per_km * std::f64::consts::LN_10 / 20.0;
        let mut out = Vec::new();
        for (col, cfg) in self.spec.protocols.iter().enumerate() {
            let y = self
                .rows
                .iter()
                .map(|r| {
                    let p = &r.points[col];
                    let a = p.analytic?;
                    let rate = if mc { p.mc.as_ref()?.rate } else { a.rate };
                    Some(rate / a.n_effective as f64)
                })
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| crate::Error::invalid("fit", format!("{} has missing points", cfg.label())))?;
            let (photons, log_term) = match cfg.protocol {
                Protocol::Mbk => (2.0, true),
                Protocol::Mepl => (1.0, true),
                Protocol::Mps => (2.0, false),
            };
            out.push(ScalingCheck {
                config: *cfg,
                fit: fit_log_rate(&d, &y, log_term)?,
                expected_slope_per_km: -photons * decay,
                expected_log_coefficient: log_term.then_some(-1.0),
            });
        }
        Ok(out)
    }
}

/// Expected local successes per communication time for the midpoint source.
#[derive(Debug, Clone, PartialEq)]
pub struct Figure5 {
    pub params: NetworkParams,
    pub p_em: Vec<f64>,
    pub distance_km: Vec<f64>,
    /// `n[i][j]`: distance `i`, emission probability `j`.
    pub n: Vec<Vec<f64>>,
    /// Per emission probability: `(distance_km, n)` at the maximum over a
    /// 1 km grid spanning the table's range.
    pub maxima: Vec<(f64, f64)>,
}

pub const FIG5_P_EM: [f64; 2] = [0.01, 0.1];

pub fn fig5_n_vs_distance(params: &NetworkParams, points: &[f64]) -> Result<Figure5> {
    params.validate()?;
    let n_at = |d: f64, p_em: f64| analytic::expected_local_successes(params, LinkGeometry::from_km(d)?, p_em);
    let n = points
        .iter()
        .map(|&d| FIG5_P_EM.iter().map(|&p| n_at(d, p)).collect::<Result<Vec<f64>>>())
        .collect::<Result<Vec<_>>>()?;
    let (lo, hi) = match (points.first(), points.last()) {
        (Some(&lo), Some(&hi)) => (lo.ceil() as u64, hi.floor() as u64),
        _ => return Err(crate::Error::invalid("points", "sweep has no points")),
    };
    let maxima = FIG5_P_EM
        .iter()
        .map(|&p| {
            (lo.max(1)..=hi).try_fold((f64::NAN, f64::NEG_INFINITY), |best, km| {
                let v = n_at(km as f64, p)?;
                Ok(if v > best.1 { (km as f64, v) } else { best })
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Figure5 {
        params: *params,
        p_em: FIG5_P_EM.to_vec(),
        distance_km: points.to_vec(),
        n,
        maxima,
    })
}

impl Figure5 {
    pub fn table(&self) -> Table {
        let mut columns = vec![Column::new("distance_km", "km", "node separation")];
        for p in &self.p_em {
            columns.push(Column::new(
                format!("n_p_em_{p}"),
                "",
                format!("expected local BSM successes per node per communication time, p_em = {p}"),
            ));
        }
        let rows = self
            .distance_km
            .iter()
            .zip(&self.n)
            .map(|(&d, ns)| std::iter::once(Cell::Float(d)).chain(ns.iter().map(|&v| Cell::Float(v))).collect())
            .collect();
        let body = serde_json::to_vec(&(&self.params, &self.distance_km, &self.p_em)).expect("serialisable");
        let hash = {
            use sha2::{Digest, Sha256};
            Sha256::digest(&body).iter().map(|b| format!("{b:02x}")).collect()
        };
        let mut prov = Provenance::new(&self.params, None, hash);
        for (p, (d, v)) in self.p_em.iter().zip(&self.maxima) {
            prov.notes.insert(format!("max_n_p_em_{p}"), v.to_string());
            prov.notes.insert(format!("max_n_distance_km_p_em_{p}"), d.to_string());
        }
        Table {
            name: "local_successes_vs_distance".into(),
            columns,
            rows,
            provenance: prov,
        }
    }
}

/// mEPL rate vs qubit count at one distance, for one swap-gate duration.
#[derive(Debug, Clone, PartialEq)]
pub struct Fig6Curve {
    pub t_sg_us: f64,
    /// Qubit count beyond which the rate stops growing.
    pub n_max: u64,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure6 {
    pub params: NetworkParams,
    pub distance_km: f64,
    pub mc: Option<McSettings>,
    pub curves: Vec<Fig6Curve>,
}

pub fn fig6_rate_vs_memories(
    params: &NetworkParams,
    distance_km: f64,
    t_sg_us: &[f64],
    beyond: u32,
    mc: Option<McSettings>,
) -> Result<Figure6> {
    let geom = LinkGeometry::from_km(distance_km)?;
    let mut curves = Vec::with_capacity(t_sg_us.len());
    for &t in t_sg_us {
        let p = NetworkParams {
            t_sg: t / 1e6,
            ..*params
        };
        p.validate()?;
        let n_max = analytic::n_max_mepl(&p, geom);
        let spec = SweepSpec {
            axis: Axis::NQubits { distance_km },
            points: (2..=n_max + beyond as u64).map(|n| n as f64).collect(),
            protocols: vec![ProtocolConfig::mepl(2)],
            mc,
        };
        curves.push(Fig6Curve {
            t_sg_us: t,
            n_max,
            rows: run_sweep(&p, &spec)?,
        });
    }
    Ok(Figure6 {
        params: *params,
        distance_km,
        mc,
        curves,
    })
}

impl Figure6 {
    pub fn table(&self) -> Table {
        let columns = vec![
            Column::new("t_sg_us", "us", "swap gate duration"),
            Column::new("n_qubits", "", "qubits per node"),
            Column::new("n_max_mepl", "", "saturation qubit count for this curve"),
            Column::new("saturated", "", "true once n_qubits exceeds n_max_mepl"),
            Column::new("analytic_hz", "Hz", "mepl closed-form rate"),
            Column::new("mc_hz", "Hz", "mepl Monte Carlo rate"),
            Column::new("stderr_hz", "Hz", "Monte Carlo standard error"),
            Column::new("n_eff", "", "qubits actually used"),
            Column::new("seed", "", "Monte Carlo base seed"),
            Column::new("error", "", "failure at this point"),
        ];
        let mut rows = Vec::new();
        for c in &self.curves {
            for r in &c.rows {
                let p = &r.points[0];
                rows.push(vec![
                    Cell::Float(c.t_sg_us),
                    Cell::Int(r.x as u64),
                    Cell::Int(c.n_max),
                    Cell::Text((r.x as u64 > c.n_max).to_string()),
                    p.analytic.map(|a| a.rate).into(),
                    p.mc.as_ref().map(|m| m.rate).into(),
                    p.mc.as_ref().and_then(|m| m.stderr).into(),
                    p.analytic.map(|a| a.n_effective).into(),
                    p.mc.as_ref().map(|m| m.seed).into(),
                    r.error_text().map_or(Cell::Empty, Cell::Text),
                ]);
            }
        }
        let body = serde_json::to_vec(&(&self.params, self.distance_km, &self.curves.iter().map(|c| c.t_sg_us).collect::<Vec<_>>(), &self.mc))
            .expect("serialisable");
        let hash = {
            use sha2::{Digest, Sha256};
            Sha256::digest(&body).iter().map(|b| format!("{b:02x}")).collect()
        };
        let mut prov = Provenance::new(&self.params, self.mc, hash);
        prov.notes.insert("distance_km".into(), self.distance_km.to_string());
        for c in &self.curves {
            prov.notes.insert(format!("n_max_t_sg_{}us", c.t_sg_us), c.n_max.to_string());
        }
        Table {
            name: "rate_vs_memories".into(),
            columns,
            rows,
            provenance: prov,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig4_analytic_ordering_and_dashed_line() {
        let p = NetworkParams::default();
        let f = fig4_rate_vs_distance(&p, &[50.0, 150.0], None).unwrap();
        assert!((f.swap_limited_km - 40.0).abs() < 1e-9);
        let rate = |row: usize, col: usize| f.rows[row].points[col].analytic.unwrap().rate;
        // columns: mbk:2, mepl:2, mps:0.01, mps:0.1
        assert!(rate(0, 1) > rate(0, 2) && rate(0, 1) > rate(0, 0));
        assert!(rate(1, 1) > rate(1, 3));
        let t = f.table();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.columns.iter().filter(|c| c.name.ends_with("_analytic_hz")).count(), 4);
        assert_eq!(t.columns.len(), t.rows[0].len());
    }

    #[test]
    fn fig5_linear_in_emission_probability() {
        let f = fig5_n_vs_distance(&NetworkParams::default(), &default_distance_grid()).unwrap();
        for row in &f.n {
            assert!((row[1] / row[0] - 10.0).abs() < 1e-9);
            assert!(row[1] < 1.0);
        }
        let (d, n) = f.maxima[1];
        assert_eq!(d, 43.0);
        assert!((n - 0.35946).abs() < 1e-4, "{n}");
    }

    #[test]
    fn fig6_curves_saturate_at_expected_counts() {
        let f = fig6_rate_vs_memories(&NetworkParams::default(), 50.0, &FIG6_T_SG_US, FIG6_BEYOND, None).unwrap();
        let n_max: Vec<u64> = f.curves.iter().map(|c| c.n_max).collect();
        assert_eq!(n_max, vec![3, 6, 11]);
        for c in &f.curves {
            let rates: Vec<f64> = c.rows.iter().map(|r| r.points[0].analytic.unwrap().rate).collect();
            assert!(rates.windows(2).all(|w| w[1] >= w[0]));
            let sat = (c.n_max - 2) as usize;
            assert!(rates[sat..].iter().all(|&r| r == rates[sat]));
            assert!(rates[sat - 1] < rates[sat]);
        }
        let t = f.table();
        assert_eq!(t.rows.len(), 5 + 8 + 13);
    }
}
