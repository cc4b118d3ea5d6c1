//! Alternating optimisation of beamformer and antenna positions, plus the
//! MRT, ZF and fixed-layout baselines that share its building blocks.
//!
//! Every scheme returns a [`SolveReport`] carrying the final positions and
//! beamformer. Grid-based schemes start from the same seeded random spaced
//! layout when given the same random stream.

use std::time::Instant;

use rand::Rng;

use crate::beamforming::{self, feasible_init_w, sca_beamforming};
use crate::channel::Scenario;
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::metrics;
use crate::placement::{
    fpa_layout, sequential_search_with, FixedBeam, MrtBackoff, ResponseTable, SamplingGrid,
    ZeroForcing,
};
use crate::types::{Apv, SolveReport};

/// Random spaced layout on the sampling grid.
pub fn initial_layout<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    grid: &SamplingGrid,
    rng: &mut R,
) -> Result<Apv> {
    let idx = grid
        .random_spaced_subset(rng, cfg.n_antennas, cfg.min_spacing)
        .ok_or(Error::RegionTooSmall {
            n: cfg.n_antennas,
            region_size: cfg.region_size,
            spacing: cfg.min_spacing,
        })?;
    Ok(grid.apv_from_indices(&idx))
}

fn relative_gain(new: f64, old: f64) -> f64 {
    if old > 0.0 {
        (new - old) / old
    } else if new > old {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Alternates SCA beamforming (warm-started) and sequential position
/// search until the relative SNR gain drops below `ao_tol` or
/// `ao_max_outer` rounds have run. The SNR trace never decreases.
pub fn ao_solve<R: Rng + ?Sized>(
    scenario: &Scenario,
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<SolveReport> {
    let started = Instant::now();
    let grid = SamplingGrid::from_config(cfg);
    let table = ResponseTable::new(&grid, scenario, cfg.wavelength);
    let limit = cfg.it_threshold * (1.0 + cfg.eps_it);

    let mut apv = initial_layout(cfg, &grid, rng)?;
    let mut h0 = scenario.sr_channel(&apv, cfg.wavelength);
    let mut prs = scenario.pr_channels(&apv, cfg.wavelength);
    let mut w = feasible_init_w(&h0, &prs, cfg);
    let mut snr = metrics::received_snr(&w, &h0, cfg.noise_power)?;
    let mut trace = vec![snr];
    let mut rounds = 0;
    let mut stuck = false;

    while rounds < cfg.ao_max_outer.max(1) {
        rounds += 1;
        match sca_beamforming(&h0, &prs, cfg, &w) {
            Ok((w_new, _)) => w = w_new,
            // Keep the current feasible pair if the inner solver fails.
            Err(_) => break,
        }
        let search = sequential_search_with(
            &apv,
            scenario,
            cfg,
            &grid,
            &table,
            &FixedBeam { w: &w, limit },
        );
        stuck |= search.constraint_stuck;
        apv = search.apv;
        h0 = scenario.sr_channel(&apv, cfg.wavelength);
        prs = scenario.pr_channels(&apv, cfg.wavelength);
        let next = metrics::received_snr(&w, &h0, cfg.noise_power)?;
        let gain = relative_gain(next, snr);
        snr = next;
        trace.push(snr);
        if gain < cfg.ao_tol {
            break;
        }
    }

    let mut report = metrics::summarize(
        "ao",
        &apv,
        &w,
        scenario,
        cfg,
        trace,
        rounds,
        started.elapsed().as_secs_f64(),
    );
    report.constraint_stuck = stuck;
    Ok(report)
}

/// MRT baseline: the beamformer is always MRT for the current layout,
/// scaled back as little as needed to meet the interference thresholds.
/// Positions come from the sequential search on that objective.
pub fn mrt_scheme<R: Rng + ?Sized>(
    scenario: &Scenario,
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<SolveReport> {
    let started = Instant::now();
    let grid = SamplingGrid::from_config(cfg);
    let table = ResponseTable::new(&grid, scenario, cfg.wavelength);
    let apv0 = initial_layout(cfg, &grid, rng)?;
    let search = sequential_search_with(
        &apv0,
        scenario,
        cfg,
        &grid,
        &table,
        &MrtBackoff {
            p_max: cfg.p_max,
            gamma: cfg.it_threshold,
        },
    );
    let apv = search.apv;
    let h0 = scenario.sr_channel(&apv, cfg.wavelength);
    let prs = scenario.pr_channels(&apv, cfg.wavelength);
    let full = beamforming::mrt(&h0, cfg.p_max)?;
    let c = beamforming::backoff_factor(&full, &prs, cfg.it_threshold);
    let w = full.scaled(c);
    let trace = search
        .objective_trace
        .iter()
        .map(|p| p / cfg.noise_power)
        .collect();
    let mut report = metrics::summarize(
        "mrt",
        &apv,
        &w,
        scenario,
        cfg,
        trace,
        search.sweeps,
        started.elapsed().as_secs_f64(),
    );
    report.full_power = Some(c >= 1.0);
    report.constraint_stuck = search.constraint_stuck;
    Ok(report)
}

/// ZF baseline: full-power zero forcing for the current layout, positions
/// from the sequential search on the ZF received power. Requires `N > K`.
pub fn zf_scheme<R: Rng + ?Sized>(
    scenario: &Scenario,
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<SolveReport> {
    let started = Instant::now();
    if cfg.n_antennas <= scenario.k() {
        return Err(Error::InvalidConfig(format!(
            "zero forcing needs more antennas ({}) than primary receivers ({})",
            cfg.n_antennas,
            scenario.k()
        )));
    }
    let grid = SamplingGrid::from_config(cfg);
    let table = ResponseTable::new(&grid, scenario, cfg.wavelength);
    let apv0 = initial_layout(cfg, &grid, rng)?;
    let search = sequential_search_with(
        &apv0,
        scenario,
        cfg,
        &grid,
        &table,
        &ZeroForcing { p_max: cfg.p_max },
    );
    let apv = search.apv;
    let h0 = scenario.sr_channel(&apv, cfg.wavelength);
    let prs = scenario.pr_channels(&apv, cfg.wavelength);
    let w = beamforming::zf(&h0, &prs, cfg.p_max)?.beamformer;
    let trace = search
        .objective_trace
        .iter()
        .map(|p| p / cfg.noise_power)
        .collect();
    let mut report = metrics::summarize(
        "zf",
        &apv,
        &w,
        scenario,
        cfg,
        trace,
        search.sweeps,
        started.elapsed().as_secs_f64(),
    );
    report.constraint_stuck = search.constraint_stuck;
    Ok(report)
}

/// Fixed half-wavelength layout with SCA beamforming.
pub fn fpa_scheme(scenario: &Scenario, cfg: &ScenarioConfig) -> Result<SolveReport> {
    let started = Instant::now();
    let apv = fpa_layout(cfg)?;
    let h0 = scenario.sr_channel(&apv, cfg.wavelength);
    let prs = scenario.pr_channels(&apv, cfg.wavelength);
    let w0 = feasible_init_w(&h0, &prs, cfg);
    let (w, sca) = sca_beamforming(&h0, &prs, cfg, &w0)?;
    let trace = sca
        .objective
        .iter()
        .map(|p| p / cfg.noise_power)
        .collect();
    Ok(metrics::summarize(
        "fpa",
        &apv,
        &w,
        scenario,
        cfg,
        trace,
        sca.iterations,
        started.elapsed().as_secs_f64(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::generate_scenario;
    use crate::rng::seeded_rng;

    fn cfg() -> ScenarioConfig {
        ScenarioConfig {
            grid_points_per_axis: 20,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn ao_trace_monotone_and_feasible() {
        let cfg = cfg();
        for seed in 0..4 {
            let s = generate_scenario(&cfg, &mut seeded_rng(seed, 0));
            let r = ao_solve(&s, &cfg, &mut seeded_rng(seed, 1)).unwrap();
            assert!(r.feasible);
            for pair in r.objective_trace.windows(2) {
                assert!(pair[1] >= pair[0] - 1e-9 * pair[0].abs());
            }
        }
    }

    #[test]
    fn ao_infinite_tolerance_runs_one_round() {
        let cfg = ScenarioConfig {
            ao_tol: f64::INFINITY,
            ..cfg()
        };
        let s = generate_scenario(&cfg, &mut seeded_rng(5, 0));
        let r = ao_solve(&s, &cfg, &mut seeded_rng(5, 1)).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.feasible);
    }

    #[test]
    fn mrt_scheme_backs_off_under_tiny_threshold() {
        let cfg = ScenarioConfig {
            it_threshold: 1e-25,
            ..cfg()
        };
        let s = generate_scenario(&cfg, &mut seeded_rng(6, 0));
        let r = mrt_scheme(&s, &cfg, &mut seeded_rng(6, 1)).unwrap();
        assert_eq!(r.full_power, Some(false));
        assert!(r.feasible);
        assert!(r.snr < 1e-6);
    }

    #[test]
    fn zf_scheme_nulls() {
        let cfg = cfg();
        let s = generate_scenario(&cfg, &mut seeded_rng(7, 0));
        let r = zf_scheme(&s, &cfg, &mut seeded_rng(7, 1)).unwrap();
        assert!(r.feasible);
        let prs = s.pr_channels(&r.apv, cfg.wavelength);
        for (p, h) in r.interference.iter().zip(&prs) {
            assert!(p / (cfg.p_max * h.norm_squared()) < 1e-10);
        }
    }

    #[test]
    fn zf_scheme_needs_more_antennas_than_prs() {
        let cfg = ScenarioConfig {
            n_antennas: 3,
            ..cfg()
        };
        let s = generate_scenario(&cfg, &mut seeded_rng(8, 0));
        assert!(zf_scheme(&s, &cfg, &mut seeded_rng(8, 1)).is_err());
    }

    #[test]
    fn no_prs_mrt_matches_ao() {
        let cfg = ScenarioConfig {
            k_prs: 0,
            ..cfg()
        };
        let s = generate_scenario(&cfg, &mut seeded_rng(9, 0));
        let a = ao_solve(&s, &cfg, &mut seeded_rng(9, 1)).unwrap();
        let m = mrt_scheme(&s, &cfg, &mut seeded_rng(9, 1)).unwrap();
        assert_eq!(m.full_power, Some(true));
        assert!(a.feasible && m.feasible);
        // Both are local searches from the same start; they land close.
        assert!((a.snr_db - m.snr_db).abs() < 1.0, "{} vs {}", a.snr_db, m.snr_db);
    }

    #[test]
    fn fpa_scheme_feasible() {
        let cfg = cfg();
        let s = generate_scenario(&cfg, &mut seeded_rng(10, 0));
        let r = fpa_scheme(&s, &cfg).unwrap();
        assert!(r.feasible);
    }
}
