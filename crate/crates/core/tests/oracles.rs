use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use ma_spectrum::ao::{ao_solve, mrt_scheme, zf_scheme};
use ma_spectrum::beamforming::{mrt, zf};
use ma_spectrum::channel::{channel_vector, generate_scenario, path_gain_variance, point_response, Scenario};
use ma_spectrum::metrics::received_power;
use ma_spectrum::placement::{feasible_points, pso_optimize, sequential_search, SamplingGrid};
use ma_spectrum::rng::seeded_rng;
use ma_spectrum::types::Path;
use ma_spectrum::{Apv, Beamformer, ComplexVec, PathSet, Point, ScenarioConfig};

#[test]
fn channel_matches_direct_summation() {
    let mut rng = seeded_rng(1, 0);
    let lambda = 0.1;
    for _ in 0..50 {
        let n = rng.random_range(1..6);
        let l = rng.random_range(1..6);
        let pts: Vec<Point> = (0..n)
            .map(|_| Point::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)))
            .collect();
        let paths: Vec<Path> = (0..l)
            .map(|_| {
                Path::new(
                    rng.random_range(-PI / 2.0..PI / 2.0),
                    rng.random_range(-PI / 2.0..PI / 2.0),
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                )
            })
            .collect();
        let h = channel_vector(&Apv::unchecked(pts.clone()), &PathSet::new(0, paths.clone()), lambda);
        for (i, p) in pts.iter().enumerate() {
            let mut re = 0.0;
            let mut im = 0.0;
            for path in &paths {
                let arg = 2.0 * PI / lambda
                    * (p.x * path.theta.sin() * path.phi.cos() + p.y * path.theta.cos());
                re += path.gain.re * arg.cos() - path.gain.im * arg.sin();
                im += path.gain.re * arg.sin() + path.gain.im * arg.cos();
            }
            assert!((h[i] - Complex64::new(re, im)).norm() < 1e-12);
        }
    }
}

#[test]
fn path_gain_variance_matches_model() {
    let cfg = ScenarioConfig::default();
    let mut sum = 0.0;
    let mut count = 0usize;
    for seed in 0..1500u64 {
        let s = generate_scenario(&cfg, &mut seeded_rng(seed, 0));
        let sets = std::iter::once(&s.sr_paths).chain(&s.pr_paths);
        for (set, d) in sets.zip(&s.distances) {
            let var = path_gain_variance(&cfg, *d);
            for p in &set.paths {
                sum += p.gain.norm_sqr() / var;
                count += 1;
            }
        }
    }
    let ratio = sum / count as f64;
    assert!((ratio - 1.0).abs() < 0.05, "normalised second moment {ratio} over {count} gains");
}

#[test]
fn mrt_beats_random_beamformers() {
    let mut rng = seeded_rng(3, 0);
    for _ in 0..20 {
        let h = ComplexVec::from_iterator(
            4,
            (0..4).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))),
        );
        let p = 0.2;
        let best = received_power(&mrt(&h, p).unwrap(), &h).unwrap();
        for _ in 0..2000 {
            let mut w = ComplexVec::from_iterator(
                4,
                (0..4).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))),
            );
            w *= Complex64::new(p.sqrt() / w.norm(), 0.0);
            assert!(received_power(&Beamformer::unchecked(w), &h).unwrap() <= best * (1.0 + 1e-12));
        }
    }
}

#[test]
fn feasible_points_match_distance_filter() {
    let grid = SamplingGrid::new(20, 0.4);
    let mut rng = seeded_rng(4, 0);
    for _ in 0..10 {
        let idx = grid.random_spaced_subset(&mut rng, 4, 0.05).unwrap();
        let apv = grid.apv_from_indices(&idx);
        for n in 0..4 {
            let got = feasible_points(&grid, &apv, n, 0.05);
            let expect: Vec<usize> = (0..grid.len())
                .filter(|&i| {
                    let p = grid.point(i);
                    (0..4).filter(|&m| m != n).all(|m| {
                        let q = apv.position(m);
                        ((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt() >= 0.05 * (1.0 - 1e-9)
                    })
                })
                .collect();
            assert_eq!(got, expect);
        }
    }
}

fn single_antenna_cfg() -> ScenarioConfig {
    ScenarioConfig {
        n_antennas: 1,
        k_prs: 0,
        grid_points_per_axis: 30,
        ..ScenarioConfig::default()
    }
}

/// `P max_p |h0(p)|^2 / sigma^2` over the grid, and the best index.
fn grid_optimum(s: &Scenario, cfg: &ScenarioConfig) -> (f64, usize) {
    let grid = SamplingGrid::from_config(cfg);
    let mut best = (f64::NEG_INFINITY, 0);
    for i in 0..grid.len() {
        let g = point_response(&grid.point(i), &s.sr_paths, cfg.wavelength).norm_sqr();
        if g > best.0 {
            best = (g, i);
        }
    }
    (cfg.p_max * best.0 / cfg.noise_power, best.1)
}

#[test]
fn single_antenna_search_finds_grid_argmax() {
    let cfg = single_antenna_cfg();
    let grid = SamplingGrid::from_config(&cfg);
    for seed in 0..10u64 {
        let s = generate_scenario(&cfg, &mut seeded_rng(seed, 0));
        let (_, best) = grid_optimum(&s, &cfg);
        let apv = grid.apv_from_indices(&[seed as usize * 7 % grid.len()]);
        let w = Beamformer::unchecked(ComplexVec::from_element(1, Complex64::new(cfg.p_max.sqrt(), 0.0)));
        let out = sequential_search(&apv, &w, &s, &cfg).unwrap();
        let got = out.apv.position(0);
        let want = grid.point(best);
        let g_got = point_response(&got, &s.sr_paths, cfg.wavelength).norm_sqr();
        let g_want = point_response(&want, &s.sr_paths, cfg.wavelength).norm_sqr();
        assert!((g_got - g_want).abs() <= 1e-12 * g_want);
    }
}

#[test]
fn single_antenna_schemes_reach_grid_optimum() {
    let cfg = single_antenna_cfg();
    for seed in 0..6u64 {
        let s = generate_scenario(&cfg, &mut seeded_rng(seed, 0));
        let (opt, _) = grid_optimum(&s, &cfg);
        let ao = ao_solve(&s, &cfg, &mut seeded_rng(seed, 1)).unwrap();
        let m = mrt_scheme(&s, &cfg, &mut seeded_rng(seed, 1)).unwrap();
        assert!((ao.snr - opt).abs() <= 1e-9 * opt, "{} vs {opt}", ao.snr);
        assert!((m.snr - opt).abs() <= 1e-9 * opt, "{} vs {opt}", m.snr);
    }
}

#[test]
fn pso_close_to_grid_optimum_for_single_antenna() {
    let mut cfg = single_antenna_cfg();
    cfg.grid_points_per_axis = 20;
    for seed in 0..4u64 {
        let s = generate_scenario(&cfg, &mut seeded_rng(seed, 0));
        let (opt, _) = grid_optimum(&s, &cfg);
        let out = pso_optimize(&s, &cfg, &mut seeded_rng(seed, 2));
        assert!(out.report.snr >= 0.99 * opt, "{} vs {opt}", out.report.snr);
    }
}

#[test]
fn mrt_scheme_collapses_with_tiny_threshold() {
    let cfg = ScenarioConfig {
        grid_points_per_axis: 20,
        it_threshold: 1e-30,
        ..ScenarioConfig::default()
    };
    let s = generate_scenario(&cfg, &mut seeded_rng(8, 0));
    let r = mrt_scheme(&s, &cfg, &mut seeded_rng(8, 1)).unwrap();
    assert_eq!(r.full_power, Some(false));
    assert!(r.feasible);
    assert!(r.snr < 1e-12);
}

#[test]
fn zf_equals_mrt_for_orthogonal_primary() {
    let h0 = ComplexVec::from_vec(vec![Complex64::new(1.0, 0.5), Complex64::new(0.0, 0.0), Complex64::new(-0.3, 0.2)]);
    let h1 = ComplexVec::from_vec(vec![Complex64::new(0.0, 0.0), Complex64::new(0.7, -0.1), Complex64::new(0.0, 0.0)]);
    let z = zf(&h0, &[h1], 0.2).unwrap();
    let m = mrt(&h0, 0.2).unwrap();
    assert!((z.beamformer.vector() - m.vector()).norm() < 1e-12);
}

#[test]
fn zf_scheme_feasible_for_any_threshold() {
    for it in [1e-20, 1e-11, 1e-3] {
        let cfg = ScenarioConfig {
            grid_points_per_axis: 16,
            it_threshold: it,
            ..ScenarioConfig::default()
        };
        let s = generate_scenario(&cfg, &mut seeded_rng(9, 0));
        let r = zf_scheme(&s, &cfg, &mut seeded_rng(9, 1)).unwrap();
        assert!(r.feasible);
    }
}
