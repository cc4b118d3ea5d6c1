//! Sequential per-antenna enumeration over the sampling grid.

use num_complex::Complex64;

use super::grid::{is_spaced, ResponseTable, SamplingGrid};
use crate::beamforming;
use crate::channel::{point_response, Scenario};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::types::{Apv, Beamformer, ComplexVec};

/// Objective of one candidate layout, given the single-antenna channel of
/// every receiver at every antenna (`responses[k][m]`, k = 0 is the SR).
/// Returns `None` when the candidate violates an interference constraint.
pub trait PlacementObjective {
    fn evaluate(&self, responses: &[Vec<Complex64>]) -> Option<f64>;
}

fn inner(h: &[Complex64], w: &ComplexVec) -> Complex64 {
    h.iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Received power with a fixed beamformer; candidates whose interference
/// exceeds `limit` at any PR are infeasible.
pub struct FixedBeam<'a> {
    pub w: &'a Beamformer,
    pub limit: f64,
}

impl PlacementObjective for FixedBeam<'_> {
    fn evaluate(&self, responses: &[Vec<Complex64>]) -> Option<f64> {
        let w = self.w.vector();
        for hk in &responses[1..] {
            if inner(hk, w).norm_sqr() > self.limit {
                return None;
            }
        }
        Some(inner(&responses[0], w).norm_sqr())
    }
}

/// Received power of MRT scaled down just enough to meet every
/// interference constraint.
pub struct MrtBackoff {
    pub p_max: f64,
    pub gamma: f64,
}

impl PlacementObjective for MrtBackoff {
    fn evaluate(&self, responses: &[Vec<Complex64>]) -> Option<f64> {
        let h0 = ComplexVec::from_column_slice(&responses[0]);
        let w = beamforming::mrt(&h0, self.p_max).ok()?;
        let prs: Vec<ComplexVec> = responses[1..]
            .iter()
            .map(|r| ComplexVec::from_column_slice(r))
            .collect();
        let c = beamforming::backoff_factor(&w, &prs, self.gamma);
        Some(c * c * self.p_max * h0.norm_squared())
    }
}

/// Received power of the full-power zero-forcing beamformer.
pub struct ZeroForcing {
    pub p_max: f64,
}

impl PlacementObjective for ZeroForcing {
    fn evaluate(&self, responses: &[Vec<Complex64>]) -> Option<f64> {
        let h0 = ComplexVec::from_column_slice(&responses[0]);
        let prs: Vec<ComplexVec> = responses[1..]
            .iter()
            .map(|r| ComplexVec::from_column_slice(r))
            .collect();
        let sol = beamforming::zf(&h0, &prs, self.p_max).ok()?;
        Some(h0.dotc(sol.beamformer.vector()).norm_sqr())
    }
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub apv: Apv,
    /// Objective after the start and after every per-antenna step.
    pub objective_trace: Vec<f64>,
    pub sweeps: usize,
    /// Grid points scanned per sweep (always `N * M^2`).
    pub scanned: Vec<usize>,
    /// Candidates whose objective was evaluated per sweep.
    pub evaluated: Vec<usize>,
    /// Some step found no interference-feasible candidate and kept an
    /// infeasible incumbent.
    pub constraint_stuck: bool,
}

impl SearchOutcome {
    pub fn final_objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(f64::NEG_INFINITY)
    }
}

/// Sequential search with a fixed beamformer. The starting pair must be
/// feasible (region, spacing and interference).
pub fn sequential_search(
    apv0: &Apv,
    w: &Beamformer,
    scenario: &Scenario,
    cfg: &ScenarioConfig,
) -> Result<SearchOutcome> {
    apv0.validate(cfg.region_size, cfg.min_spacing)?;
    let limit = cfg.it_threshold * (1.0 + cfg.eps_it);
    for (k, hk) in scenario.pr_channels(apv0, cfg.wavelength).iter().enumerate() {
        let p = hk.dotc(w.vector()).norm_sqr();
        if p > limit {
            return Err(Error::InfeasibleStart(format!(
                "interference {p} at PR {k} exceeds {}",
                cfg.it_threshold
            )));
        }
    }
    let grid = SamplingGrid::from_config(cfg);
    let table = ResponseTable::new(&grid, scenario, cfg.wavelength);
    Ok(sequential_search_with(
        apv0,
        scenario,
        cfg,
        &grid,
        &table,
        &FixedBeam { w, limit },
    ))
}

/// Core enumeration loop. Keeps the incumbent on ties; among new
/// candidates with equal objective the lowest `(i, j)` wins. Repeats
/// sweeps until no antenna moves or `cfg.max_sweeps` is reached.
pub fn sequential_search_with<O: PlacementObjective + ?Sized>(
    apv0: &Apv,
    scenario: &Scenario,
    cfg: &ScenarioConfig,
    grid: &SamplingGrid,
    table: &ResponseTable,
    objective: &O,
) -> SearchOutcome {
    let n_ant = apv0.len();
    let receivers: Vec<_> = std::iter::once(&scenario.sr_paths)
        .chain(&scenario.pr_paths)
        .collect();
    let mut responses: Vec<Vec<Complex64>> = receivers
        .iter()
        .map(|ps| {
            apv0.positions()
                .iter()
                .map(|p| point_response(p, ps, cfg.wavelength))
                .collect()
        })
        .collect();
    let mut apv = apv0.clone();
    let mut current = objective.evaluate(&responses);
    let mut trace = vec![current.unwrap_or(f64::NEG_INFINITY)];
    let mut scanned = Vec::new();
    let mut evaluated = Vec::new();
    let mut stuck = false;
    let mut sweeps = 0;

    while sweeps < cfg.max_sweeps.max(1) {
        sweeps += 1;
        let mut moved = false;
        let mut n_scanned = 0usize;
        let mut n_eval = 0usize;
        for n in 0..n_ant {
            let saved: Vec<Complex64> = responses.iter().map(|r| r[n]).collect();
            let mut best = current.unwrap_or(f64::NEG_INFINITY);
            let mut best_idx = None;
            for idx in 0..grid.len() {
                n_scanned += 1;
                if !is_spaced(&grid.point(idx), &apv, n, cfg.min_spacing) {
                    continue;
                }
                for (k, row) in responses.iter_mut().enumerate() {
                    row[n] = table.get(k, idx);
                }
                n_eval += 1;
                if let Some(v) = objective.evaluate(&responses) {
                    if v > best {
                        best = v;
                        best_idx = Some(idx);
                    }
                }
            }
            match best_idx {
                Some(idx) => {
                    for (k, row) in responses.iter_mut().enumerate() {
                        row[n] = table.get(k, idx);
                    }
                    let p = grid.point(idx);
                    if p != apv.position(n) {
                        moved = true;
                    }
                    apv = apv.with_position(n, p);
                    current = Some(best);
                }
                None => {
                    for (row, v) in responses.iter_mut().zip(&saved) {
                        row[n] = *v;
                    }
                    if current.is_none() {
                        stuck = true;
                    }
                }
            }
            trace.push(current.unwrap_or(f64::NEG_INFINITY));
        }
        scanned.push(n_scanned);
        evaluated.push(n_eval);
        if !moved {
            break;
        }
    }

    SearchOutcome {
        apv,
        objective_trace: trace,
        sweeps,
        scanned,
        evaluated,
        constraint_stuck: stuck,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::generate_scenario;
    use crate::rng::seeded_rng;
    use crate::types::{Path, PathSet, Point};

    fn small_cfg() -> ScenarioConfig {
        ScenarioConfig {
            grid_points_per_axis: 20,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn fixed_point_is_kept() {
        let cfg = ScenarioConfig {
            n_antennas: 1,
            k_prs: 0,
            ..small_cfg()
        };
        let s = generate_scenario(&cfg, &mut seeded_rng(1, 0));
        let w = Beamformer::unchecked(ComplexVec::from_element(1, Complex64::new(cfg.p_max.sqrt(), 0.0)));
        let grid = SamplingGrid::from_config(&cfg);
        let start = grid.apv_from_indices(&[0]);
        let first = sequential_search(&start, &w, &s, &cfg).unwrap();
        let again = sequential_search(&first.apv, &w, &s, &cfg).unwrap();
        assert_eq!(again.apv, first.apv);
        assert_eq!(again.sweeps, 1);
    }

    #[test]
    fn trace_non_decreasing() {
        let cfg = small_cfg();
        for seed in 0..5 {
            let s = generate_scenario(&cfg, &mut seeded_rng(seed, 0));
            let grid = SamplingGrid::from_config(&cfg);
            let start = grid.apv_from_indices(&grid.greedy_spaced_subset(4, cfg.min_spacing));
            let h0 = s.sr_channel(&start, cfg.wavelength);
            let prs = s.pr_channels(&start, cfg.wavelength);
            let w = beamforming::feasible_init_w(&h0, &prs, &cfg);
            let out = sequential_search(&start, &w, &s, &cfg).unwrap();
            for pair in out.objective_trace.windows(2) {
                assert!(pair[1] >= pair[0]);
            }
            out.apv.validate(cfg.region_size, cfg.min_spacing).unwrap();
            assert!(!out.constraint_stuck);
        }
    }

    #[test]
    fn infeasible_start_rejected() {
        let cfg = ScenarioConfig {
            it_threshold: 1e-30,
            ..small_cfg()
        };
        let s = generate_scenario(&cfg, &mut seeded_rng(2, 0));
        let grid = SamplingGrid::from_config(&cfg);
        let start = grid.apv_from_indices(&grid.greedy_spaced_subset(4, cfg.min_spacing));
        let w = beamforming::mrt(&s.sr_channel(&start, cfg.wavelength), cfg.p_max).unwrap();
        assert!(matches!(
            sequential_search(&start, &w, &s, &cfg),
            Err(Error::InfeasibleStart(_))
        ));
    }

    #[test]
    fn tiny_threshold_keeps_feasible_start() {
        // With w = 0 every candidate has zero interference but also zero
        // objective; ties keep the incumbent.
        let cfg = ScenarioConfig {
            it_threshold: 1e-30,
            ..small_cfg()
        };
        let s = generate_scenario(&cfg, &mut seeded_rng(3, 0));
        let grid = SamplingGrid::from_config(&cfg);
        let start = grid.apv_from_indices(&grid.greedy_spaced_subset(4, cfg.min_spacing));
        let out = sequential_search(&start, &Beamformer::zeros(4), &s, &cfg).unwrap();
        assert_eq!(out.apv, start);
    }

    #[test]
    fn stuck_incumbent_is_flagged() {
        // One PR whose channel equals the SR's everywhere: with MRT any
        // position violates a tiny threshold.
        let cfg = ScenarioConfig {
            n_antennas: 1,
            k_prs: 1,
            it_threshold: 1e-30,
            grid_points_per_axis: 5,
            ..ScenarioConfig::default()
        };
        let path = Path::new(0.3, 0.2, Complex64::new(1e-4, 0.0));
        let s = Scenario {
            sr_paths: PathSet::new(0, vec![path]),
            pr_paths: vec![PathSet::new(1, vec![path])],
            distances: vec![50.0, 50.0],
        };
        let grid = SamplingGrid::from_config(&cfg);
        let table = ResponseTable::new(&grid, &s, cfg.wavelength);
        let start = Apv::unchecked(vec![Point::new(0.0, 0.0)]);
        let w = Beamformer::unchecked(ComplexVec::from_element(1, Complex64::new(0.1, 0.0)));
        let out = sequential_search_with(
            &start,
            &s,
            &cfg,
            &grid,
            &table,
            &FixedBeam { w: &w, limit: cfg.it_threshold },
        );
        assert!(out.constraint_stuck);
        assert_eq!(out.apv, start);
    }
}
