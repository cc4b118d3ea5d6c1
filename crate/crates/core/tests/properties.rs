use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use ma_spectrum::beamforming::{feasible_init_w, mrt};
use ma_spectrum::channel::{array_response, channel_vector, generate_scenario, phase};
use ma_spectrum::config::{PsoBeamMode, SpacingUnit};
use ma_spectrum::metrics::{check_feasible, interference_power, received_power, received_snr};
use ma_spectrum::placement::{sequential_search, SamplingGrid};
use ma_spectrum::rng::seeded_rng;
use ma_spectrum::theory::{beam_gain, spacing_gain, AngleDiffs};
use ma_spectrum::types::Path;
use ma_spectrum::{Apv, Beamformer, ComplexVec, PathSet, Point, ScenarioConfig};

fn angle() -> impl Strategy<Value = f64> {
    -PI / 2.0..PI / 2.0
}

fn point() -> impl Strategy<Value = Point> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(x, y)| Point::new(x, y))
}

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

fn apv(max_n: usize) -> impl Strategy<Value = Apv> {
    prop::collection::vec(point(), 1..=max_n).prop_map(Apv::unchecked)
}

fn paths(max_l: usize) -> impl Strategy<Value = PathSet> {
    prop::collection::vec(
        (angle(), angle(), complex()).prop_map(|(t, p, g)| Path::new(t, p, g)),
        1..=max_l,
    )
    .prop_map(|ps| PathSet::new(0, ps))
}

fn config() -> impl Strategy<Value = ScenarioConfig> {
    (
        1usize..6,
        0usize..4,
        2.0..8.0f64,
        20usize..120,
        -10.0..30.0f64,
        -100.0..-40.0f64,
        1usize..7,
        0..=i64::MAX as u64,
        any::<bool>(),
        any::<bool>(),
    )
        .prop_map(|(n, k, a, m, p, it, l, seed, metres, per_round)| ScenarioConfig {
            n_antennas: n,
            k_prs: k,
            region_size: a * 0.1,
            grid_points_per_axis: m,
            p_max: ma_spectrum::dbm_to_watts(p),
            it_threshold: ma_spectrum::dbm_to_watts(it),
            paths_per_receiver: l,
            rng_seed: seed,
            spacing_unit: if metres { SpacingUnit::Meters } else { SpacingUnit::Wavelengths },
            pso: ma_spectrum::config::PsoParams {
                beam_mode: if per_round { PsoBeamMode::PerRound } else { PsoBeamMode::PerCandidate },
                ..Default::default()
            },
            ..ScenarioConfig::default()
        })
}

proptest! {
    #[test]
    fn config_round_trips_through_toml(cfg in config()) {
        let text = cfg.to_toml_string();
        let back = ScenarioConfig::from_toml_str(&text).unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn array_response_has_unit_modulus(a in apv(8), t in angle(), p in angle()) {
        for z in array_response(&a, t, p, 0.1).iter() {
            prop_assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn channel_is_linear_in_gains(a in apv(6), ps in paths(5), c in complex()) {
        let h = channel_vector(&a, &ps, 0.1);
        let hc = channel_vector(&a, &ps.scaled(c), 0.1);
        for (x, y) in h.iter().zip(hc.iter()) {
            prop_assert!((x * c - y).norm() <= 1e-12 * (1.0 + y.norm()));
        }
    }

    #[test]
    fn translation_multiplies_by_common_phase(a in apv(6), t in angle(), p in angle(), d in point()) {
        let moved = Apv::unchecked(a.positions().iter().map(|q| Point::new(q.x + d.x, q.y + d.y)).collect());
        let r0 = array_response(&a, t, p, 0.1);
        let r1 = array_response(&moved, t, p, 0.1);
        let shift = Complex64::from_polar(1.0, phase(&d, t, p, 0.1));
        for (x, y) in r0.iter().zip(r1.iter()) {
            prop_assert!((x * shift - y).norm() < 1e-9);
        }
    }

    #[test]
    fn metrics_ignore_common_phase_and_scale_quadratically(
        w in prop::collection::vec(complex(), 3),
        h in prop::collection::vec(complex(), 3),
        psi in 0.0..(2.0 * PI),
        c in 0.0..3.0f64,
    ) {
        let w = ComplexVec::from_vec(w);
        let h = ComplexVec::from_vec(h);
        let b = Beamformer::unchecked(w.clone());
        let rotated = Beamformer::unchecked(&w * Complex64::from_polar(1.0, psi));
        let p = received_power(&b, &h).unwrap();
        prop_assert!((received_power(&rotated, &h).unwrap() - p).abs() <= 1e-12 * (1.0 + p));
        prop_assert!((interference_power(&rotated, &h).unwrap() - p).abs() <= 1e-12 * (1.0 + p));
        prop_assert!((received_power(&b.scaled(c), &h).unwrap() - c * c * p).abs() <= 1e-12 * (1.0 + p));
        prop_assert!((received_snr(&b, &h, 0.5).unwrap() - 2.0 * p).abs() <= 1e-12 * (1.0 + p));
    }

    #[test]
    fn beam_gain_is_bounded_and_coherent(a in apv(8), t in angle(), p in angle(), st in angle(), sp in angle()) {
        let n = a.len() as f64;
        let g = beam_gain(&a, t, p, (st, sp), 0.1);
        prop_assert!(g >= 0.0 && g <= n * n * (1.0 + 1e-12));
        prop_assert!((beam_gain(&a, st, sp, (st, sp), 0.1) - n * n).abs() < 1e-9);
    }

    #[test]
    fn spacing_gain_in_unit_interval(b in -2.0..2.0f64, d in 1u64..100_000, metres in any::<bool>()) {
        let unit = if metres { SpacingUnit::Meters } else { SpacingUnit::Wavelengths };
        let g = spacing_gain(b, d, unit, 0.1);
        prop_assert!((0.0..=1.0).contains(&g));
    }

    #[test]
    fn angle_differences_are_bounded(seed in any::<u64>()) {
        let cfg = ScenarioConfig::default();
        let s = generate_scenario(&cfg, &mut seeded_rng(seed, 0));
        let d = AngleDiffs::new(&s);
        for v in d.a.iter().flatten().flatten().chain(d.b.iter().flatten().flatten()) {
            prop_assert!(v.abs() <= 2.0);
        }
    }

    #[test]
    fn mrt_uses_full_power(h in prop::collection::vec(complex(), 1..6), p in 0.01..10.0f64) {
        let h = ComplexVec::from_vec(h);
        prop_assume!(h.norm() > 1e-6);
        let w = mrt(&h, p).unwrap();
        prop_assert!((w.power() - p).abs() <= 1e-12 * p);
        prop_assert!((received_power(&w, &h).unwrap() - p * h.norm_squared()).abs() <= 1e-9 * p * h.norm_squared());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sequential_search_is_monotone_and_feasible(seed in any::<u64>(), it_dbm in -95.0..-60.0f64) {
        let cfg = ScenarioConfig {
            grid_points_per_axis: 16,
            it_threshold: ma_spectrum::dbm_to_watts(it_dbm),
            ..ScenarioConfig::default()
        };
        let s = generate_scenario(&cfg, &mut seeded_rng(seed, 0));
        let grid = SamplingGrid::from_config(&cfg);
        let idx = grid.random_spaced_subset(&mut seeded_rng(seed, 1), cfg.n_antennas, cfg.min_spacing).unwrap();
        let a = grid.apv_from_indices(&idx);
        let h0 = s.sr_channel(&a, cfg.wavelength);
        let w = feasible_init_w(&h0, &s.pr_channels(&a, cfg.wavelength), &cfg);
        let out = sequential_search(&a, &w, &s, &cfg).unwrap();
        prop_assert!(out.objective_trace.windows(2).all(|p| p[1] >= p[0]));
        prop_assert!(check_feasible(&w, &out.apv, &s, &cfg).feasible());
    }
}
