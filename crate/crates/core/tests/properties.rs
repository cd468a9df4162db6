use proptest::prelude::*;

use qmux_core::analytic::{self, DEFAULT_BRACKET_KM};
use qmux_core::config::EffectiveConfig;
use qmux_core::netparams::fiber_transmission;
use qmux_core::protocols::{self, Cutoff, Protocol};
use qmux_core::simkernel::EventQueue;
use qmux_core::{LinkGeometry, McSettings, NetworkParams, ProtocolConfig, Resolution, SimOptions, StopRule};

fn km(d: f64) -> LinkGeometry {
    LinkGeometry::from_km(d).unwrap()
}

fn params() -> impl Strategy<Value = NetworkParams> {
    (0.01f64..=1.0, 0.01f64..=1.0, 0.0f64..1.0, 0.1f64..10.0, 1.0f64..1000.0).prop_map(|(p_out, p_fc, alpha, t_eg_us, t_sg_us)| {
        NetworkParams {
            p_out,
            p_fc,
            alpha_db_per_km: alpha,
            t_eg: t_eg_us * 1e-6,
            t_sg: t_sg_us * 1e-6,
            ..NetworkParams::default()
        }
    })
}

fn rel_eq(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

proptest! {
    #[test]
    fn eta_strictly_decreases_with_distance(p in params(), d in 1.0f64..500.0, extra in 0.1f64..100.0) {
        prop_assume!(p.alpha_db_per_km > 1e-3);
        prop_assert!(p.eta(km(d + extra)) < p.eta(km(d)));
    }

    #[test]
    fn eta_strictly_decreases_with_attenuation(p in params(), d in 1.0f64..500.0, extra in 0.01f64..0.5) {
        let lossier = NetworkParams { alpha_db_per_km: p.alpha_db_per_km + extra, ..p };
        prop_assert!(lossier.eta(km(d)) < p.eta(km(d)));
    }

    #[test]
    fn eta_is_multiplicative_in_prefactors(p in params(), d in 1.0f64..500.0, s in 0.01f64..1.0) {
        let scaled = NetworkParams { p_out: p.p_out * s, ..p };
        prop_assert!(rel_eq(scaled.eta(km(d)), s * p.eta(km(d)), 1e-12));
        let scaled = NetworkParams { p_fc: p.p_fc * s, ..p };
        prop_assert!(rel_eq(scaled.eta(km(d)), s * p.eta(km(d)), 1e-12));
    }

    #[test]
    fn loss_composes_exponentially(p in params(), d1 in 1.0f64..300.0, d2 in 1.0f64..300.0) {
        // eta carries loss over half the separation
        let composed = p.eta(km(d1)) * fiber_transmission(p.alpha_db_per_km, d2 / 2.0);
        prop_assert!(rel_eq(composed, p.eta(km(d1 + d2)), 1e-12));
    }

    #[test]
    fn communication_time_is_linear(p in params(), d in 1.0f64..500.0, k in 1.0f64..5.0) {
        prop_assert!(rel_eq(p.t_c(km(k * d)), k * p.t_c(km(d)), 1e-12));
        prop_assert!(p.t_c(km(d + 1.0)) > p.t_c(km(d)));
    }

    #[test]
    fn rate_records_are_consistent(p in params(), d in 1.0f64..300.0, n in 2u32..20, p_em in 0.001f64..=1.0) {
        for cfg in [ProtocolConfig::mbk(n), ProtocolConfig::mepl(n), ProtocolConfig::mps(p_em)] {
            let r = analytic::rate(&p, km(d), &cfg).unwrap();
            prop_assert!(r.rate >= 0.0);
            prop_assert!(r.attempt_rate >= r.rate);
            prop_assert!(r.n_effective >= 1 && r.n_effective <= u64::from(n));
        }
    }

    #[test]
    fn mepl_rate_never_falls_with_more_qubits(p in params(), d in 1.0f64..300.0, n in 2u32..40) {
        let a = analytic::rate_mepl(&p, km(d), n).unwrap().rate;
        let b = analytic::rate_mepl(&p, km(d), n + 1).unwrap().rate;
        prop_assert!(b >= a);
    }

    #[test]
    fn mbk_scales_as_eta_squared_over_t_c(p in params(), d in 1.0f64..300.0) {
        // with one qubit there is no multiplexing cap
        let g = km(d);
        let r = analytic::rate_mbk(&p, g, 1).unwrap().rate;
        let eta = p.eta(g);
        prop_assert!(rel_eq(r, eta * eta / (2.0 * p.t_c(g)), 1e-12));
    }

    #[test]
    fn mps_is_linear_in_emission_probability(p in params(), d in 1.0f64..300.0, p_em in 0.001f64..0.1, k in 1.0f64..10.0) {
        let a = analytic::rate_mps(&p, km(d), p_em).unwrap().rate;
        let b = analytic::rate_mps(&p, km(d), p_em * k).unwrap().rate;
        prop_assert!(rel_eq(b, k * a, 1e-12));
        let n = analytic::expected_local_successes(&p, km(d), p_em).unwrap();
        prop_assert!(rel_eq(n, 0.5 * p_em * p.eta(km(d)) * p.t_c(km(d)) / p.t_eg, 1e-12));
    }

    #[test]
    fn crossover_is_symmetric(n in 2u32..6, p_em in 0.01f64..0.5) {
        let p = NetworkParams::default();
        let (a, b) = (ProtocolConfig::mepl(n), ProtocolConfig::mps(p_em));
        let ab = analytic::crossover_distance(&p, &a, &b, DEFAULT_BRACKET_KM).unwrap();
        let ba = analytic::crossover_distance(&p, &b, &a, DEFAULT_BRACKET_KM).unwrap();
        match (ab, ba) {
            (Some(x), Some(y)) => prop_assert!(rel_eq(x.distance_km(), y.distance_km(), 1e-5)),
            (None, None) => {}
            other => prop_assert!(false, "asymmetric: {other:?}"),
        }
    }

    #[test]
    fn queue_pops_in_time_order_fifo_on_ties(times in prop::collection::vec(0u8..20, 1..200)) {
        let mut q = EventQueue::new();
        for (i, t) in times.iter().enumerate() {
            q.push(f64::from(*t), i);
        }
        let mut last: Option<(f64, usize)> = None;
        while let Some(ev) = q.pop() {
            if let Some((t, i)) = last {
                prop_assert!(ev.time > t || (ev.time == t && ev.kind > i));
            }
            last = Some((ev.time, ev.kind));
        }
    }

    #[test]
    fn dumped_configs_parse_back(
        distance in 0.1f64..1000.0,
        t_sg in 0.1f64..1000.0,
        n in 1u32..64,
        p_em in 0.0001f64..=1.0,
        cutoff in prop::option::of(1u64..1_000_000),
        proto in prop::sample::select(Protocol::ALL.to_vec()),
        seed in prop::option::of(any::<u64>()),
        delay in any::<bool>(),
    ) {
        let c = EffectiveConfig {
            distance_km: distance,
            t_sg_us: t_sg,
            protocol: ProtocolConfig {
                protocol: proto,
                n_qubits: n,
                p_em,
                cutoff: cutoff.map_or(Cutoff::Unlimited, Cutoff::Attempts),
                distill_delay: delay,
            },
            seed,
            ..EffectiveConfig::default()
        };
        prop_assert_eq!(EffectiveConfig::parse(&c.dump()).unwrap(), c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn resolutions_agree_and_runs_repeat(seed in any::<u64>(), d in 20.0f64..120.0, n in 2u32..5, which in 0usize..2) {
        let p = NetworkParams::default();
        let cfg = [ProtocolConfig::mbk(n), ProtocolConfig::mepl(n)][which];
        let settings = McSettings { replications: 2, stop: StopRule::Successes(5), base_seed: seed };
        let skip = protocols::simulate(&p, km(d), &cfg, settings, SimOptions::default()).unwrap();
        let again = protocols::simulate(&p, km(d), &cfg, settings, SimOptions::default()).unwrap();
        let every = protocols::simulate(
            &p,
            km(d),
            &cfg,
            settings,
            SimOptions { resolution: Resolution::EveryAttempt, ..Default::default() },
        )
        .unwrap();
        prop_assert_eq!(&skip.estimate, &again.estimate);
        for ((a, _), (b, _)) in skip.runs.iter().zip(&every.runs) {
            prop_assert_eq!(a.digest, b.digest);
        }
    }

    #[test]
    fn traces_keep_time_order_and_memory_count(seed in any::<u64>(), n in 2u32..6, which in 0usize..3) {
        let p = NetworkParams::default();
        let g = km(60.0);
        let cfg = [ProtocolConfig::mbk(n), ProtocolConfig::mepl(n), ProtocolConfig::mps(0.1)][which];
        let settings = McSettings { replications: 1, stop: StopRule::Successes(3), base_seed: seed };
        let opts = SimOptions { resolution: Resolution::EveryAttempt, trace: true, horizon: None };
        let r = protocols::simulate(&p, g, &cfg, settings, opts).unwrap();
        let trace = r.runs[0].0.trace.as_ref().unwrap();
        prop_assert!(trace.windows(2).all(|w| w[0].time <= w[1].time));
        for rec in trace {
            let field = |k: &str| rec.detail.split_whitespace().find_map(|kv| kv.strip_prefix(k)).map(str::to_string);
            match rec.event_kind {
                "memory" => {
                    let occ: u32 = field("occupied=").unwrap().parse().unwrap();
                    let free: u32 = field("free=").unwrap().parse().unwrap();
                    prop_assert_eq!(occ + free, n - 1);
                }
                "herald" => {
                    let emitted: f64 = field("emitted_at=").unwrap().parse().unwrap();
                    prop_assert!(rel_eq(rec.time - emitted, p.t_c(g), 1e-9));
                }
                _ => {}
            }
        }
    }
}
