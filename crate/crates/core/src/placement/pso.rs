//! Particle swarm over continuous antenna coordinates.
//!
//! Each particle holds all `2N` coordinates. After every move the layout is
//! clamped to the region and repaired to restore the minimum spacing; the
//! beamformer is re-optimised with SCA either per candidate or once per
//! iteration on the swarm best (see [`PsoBeamMode`]).

use std::time::Instant;

use rand::Rng;

use super::grid::SamplingGrid;
use crate::beamforming::{feasible_init_w, sca_with_limit};
use crate::channel::Scenario;
use crate::config::{PsoBeamMode, ScenarioConfig};
use crate::metrics;
use crate::types::{in_region, spacing_ok, Apv, Beamformer, ComplexVec, Point, SolveReport};

const REPAIR_PASSES: usize = 20;

fn clamp_to_region(p: Point, half: f64) -> Point {
    Point::new(p.x.clamp(-half, half), p.y.clamp(-half, half))
}

/// Clamps every antenna into the region, then pushes conflicting antennas
/// apart by the smallest displacement along the line joining them. Any
/// antenna still in conflict is snapped to the nearest grid point that
/// respects the spacing to all earlier antennas. Returns `None` if the
/// layout cannot be repaired.
pub fn repair_layout(points: &[Point], cfg: &ScenarioConfig, grid: &SamplingGrid) -> Option<Apv> {
    let half = cfg.region_size / 2.0;
    let dmin = cfg.min_spacing;
    let mut pts: Vec<Point> = points.iter().map(|p| clamp_to_region(*p, half)).collect();
    let n = pts.len();

    for _ in 0..REPAIR_PASSES {
        let mut changed = false;
        for i in 0..n {
            for j in 0..i {
                let d = pts[i].distance(&pts[j]);
                if spacing_ok(d, dmin) {
                    continue;
                }
                let (ux, uy) = if d > 0.0 {
                    ((pts[i].x - pts[j].x) / d, (pts[i].y - pts[j].y) / d)
                } else {
                    let a = i as f64 * 2.399_963; // golden angle
                    (a.cos(), a.sin())
                };
                let target = dmin * (1.0 + 1e-9);
                pts[i] = clamp_to_region(
                    Point::new(pts[j].x + ux * target, pts[j].y + uy * target),
                    half,
                );
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    for i in 0..n {
        if (0..n).all(|j| j == i || spacing_ok(pts[i].distance(&pts[j]), dmin)) {
            continue;
        }
        // Snap to the nearest grid point clear of every other antenna.
        let here = pts[i];
        let best = grid
            .points()
            .iter()
            .filter(|q| {
                (0..n).all(|j| j == i || spacing_ok(q.distance(&pts[j]), dmin))
            })
            .min_by(|a, b| here.distance(a).total_cmp(&here.distance(b)))?;
        pts[i] = *best;
    }

    let apv = Apv::unchecked(pts);
    if apv.positions().iter().all(|p| in_region(p, cfg.region_size))
        && apv.spacing_violations(dmin).is_empty()
    {
        Some(apv)
    } else {
        None
    }
}

#[derive(Debug, Clone)]
pub struct PsoOutcome {
    pub apv: Apv,
    pub beamformer: Beamformer,
    pub report: SolveReport,
    /// Fitness evaluations performed.
    pub evaluations: usize,
}

struct Particle {
    x: Vec<f64>,
    v: Vec<f64>,
    best_x: Vec<f64>,
    best_fit: f64,
}

fn to_points(x: &[f64]) -> Vec<Point> {
    x.chunks_exact(2).map(|c| Point::new(c[0], c[1])).collect()
}

fn to_coords(apv: &Apv) -> Vec<f64> {
    apv.positions().iter().flat_map(|p| [p.x, p.y]).collect()
}

/// Beamformer update used during fitness evaluation: receives the SR
/// channel and PR channels of a candidate and returns a feasible
/// beamformer, or `None` if the candidate should be discarded.
pub type BeamUpdate<'a> = dyn Fn(&ComplexVec, &[ComplexVec]) -> Option<Beamformer> + 'a;

/// Default per-candidate update: SCA from the scaled-MRT starting point,
/// capped at `cfg.pso.sca_max_iters` subproblems.
pub fn sca_update(cfg: &ScenarioConfig) -> impl Fn(&ComplexVec, &[ComplexVec]) -> Option<Beamformer> + '_ {
    move |h0, prs| {
        let w0 = feasible_init_w(h0, prs, cfg);
        sca_with_limit(h0, prs, cfg, &w0, cfg.pso.sca_max_iters)
            .ok()
            .map(|(w, _)| w)
    }
}

pub fn pso_optimize<R: Rng + ?Sized>(
    scenario: &Scenario,
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> PsoOutcome {
    let update = sca_update(cfg);
    pso_optimize_with(&update, scenario, cfg, rng)
}

pub fn pso_optimize_with<R: Rng + ?Sized>(
    beam_update: &BeamUpdate<'_>,
    scenario: &Scenario,
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> PsoOutcome {
    let started = Instant::now();
    let n = cfg.n_antennas;
    let dims = 2 * n;
    let half = cfg.region_size / 2.0;
    let vmax = 0.2 * cfg.region_size;
    let params = &cfg.pso;
    let grid = SamplingGrid::from_config(cfg);
    let limit = cfg.it_threshold * (1.0 + cfg.eps_it);
    let mut evaluations = 0usize;

    // Incumbent beamformer used by the per-round mode.
    let mut incumbent_w: Option<Beamformer> = None;

    let evaluate = |apv: &Apv, incumbent: &Option<Beamformer>, evals: &mut usize| -> (f64, Option<Beamformer>) {
        *evals += 1;
        let h0 = scenario.sr_channel(apv, cfg.wavelength);
        let prs = scenario.pr_channels(apv, cfg.wavelength);
        let w = match (params.beam_mode, incumbent) {
            (PsoBeamMode::PerRound, Some(w)) => {
                let ok = prs.iter().all(|h| h.dotc(w.vector()).norm_sqr() <= limit);
                if !ok {
                    return (f64::NEG_INFINITY, None);
                }
                w.clone()
            }
            _ => match beam_update(&h0, &prs) {
                Some(w) => w,
                None => return (f64::NEG_INFINITY, None),
            },
        };
        (h0.dotc(w.vector()).norm_sqr(), Some(w))
    };

    // Initial swarm: particle 0 starts from a random spaced grid layout so
    // the swarm always holds a feasible design.
    let mut swarm: Vec<Particle> = Vec::with_capacity(params.swarm_size.max(1));
    let mut gbest_x: Vec<f64> = Vec::new();
    let mut gbest_fit = f64::NEG_INFINITY;
    let mut gbest_w: Option<Beamformer> = None;

    for s in 0..params.swarm_size.max(1) {
        let raw: Vec<f64> = if s == 0 {
            let idx = grid
                .random_spaced_subset(rng, n, cfg.min_spacing)
                .unwrap_or_else(|| grid.greedy_spaced_subset(n, cfg.min_spacing));
            to_coords(&grid.apv_from_indices(&idx))
        } else {
            (0..dims).map(|_| rng.random_range(-half..=half)).collect()
        };
        let v: Vec<f64> = (0..dims).map(|_| rng.random_range(-vmax..=vmax)).collect();
        let (x, fit, w) = match repair_layout(&to_points(&raw), cfg, &grid) {
            Some(apv) => {
                let (f, w) = evaluate(&apv, &incumbent_w, &mut evaluations);
                (to_coords(&apv), f, w)
            }
            None => (raw, f64::NEG_INFINITY, None),
        };
        if fit > gbest_fit {
            gbest_fit = fit;
            gbest_x = x.clone();
            gbest_w = w;
        }
        swarm.push(Particle {
            best_x: x.clone(),
            best_fit: fit,
            x,
            v,
        });
    }
    if params.beam_mode == PsoBeamMode::PerRound {
        incumbent_w = gbest_w.clone();
    }
    let mut trace = vec![gbest_fit];

    for _ in 0..params.iterations {
        for p in swarm.iter_mut() {
            for d in 0..dims {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let vel = params.inertia * p.v[d]
                    + params.cognitive * r1 * (p.best_x[d] - p.x[d])
                    + params.social * r2 * (gbest_x[d] - p.x[d]);
                p.v[d] = vel.clamp(-vmax, vmax);
                p.x[d] = (p.x[d] + p.v[d]).clamp(-half, half);
            }
            let Some(apv) = repair_layout(&to_points(&p.x), cfg, &grid) else {
                continue;
            };
            p.x = to_coords(&apv);
            let (fit, w) = evaluate(&apv, &incumbent_w, &mut evaluations);
            if fit > p.best_fit {
                p.best_fit = fit;
                p.best_x = p.x.clone();
            }
            if fit > gbest_fit {
                gbest_fit = fit;
                gbest_x = p.x.clone();
                gbest_w = w;
            }
        }
        if params.beam_mode == PsoBeamMode::PerRound {
            if let Some(w) = &gbest_w {
                let apv = Apv::unchecked(to_points(&gbest_x));
                let h0 = scenario.sr_channel(&apv, cfg.wavelength);
                let prs = scenario.pr_channels(&apv, cfg.wavelength);
                if let Ok((w_new, tr)) = sca_with_limit(&h0, &prs, cfg, w, params.sca_max_iters) {
                    if tr.final_objective() >= gbest_fit {
                        gbest_fit = tr.final_objective();
                        gbest_w = Some(w_new);
                    }
                }
            }
            incumbent_w = gbest_w.clone();
        }
        trace.push(gbest_fit);
    }

    let apv = Apv::unchecked(to_points(&gbest_x));
    let w = gbest_w.unwrap_or_else(|| Beamformer::zeros(n));
    let snr_trace = trace.iter().map(|p| p / cfg.noise_power).collect();
    let report = metrics::summarize(
        "pso",
        &apv,
        &w,
        scenario,
        cfg,
        snr_trace,
        params.iterations,
        started.elapsed().as_secs_f64(),
    );
    PsoOutcome {
        apv,
        beamformer: w,
        report,
        evaluations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::generate_scenario;
    use crate::config::PsoParams;
    use crate::rng::seeded_rng;

    fn quick_cfg() -> ScenarioConfig {
        ScenarioConfig {
            grid_points_per_axis: 20,
            pso: PsoParams {
                swarm_size: 8,
                iterations: 5,
                ..PsoParams::default()
            },
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn repair_restores_spacing() {
        let cfg = ScenarioConfig::default();
        let grid = SamplingGrid::from_config(&cfg);
        let pts = vec![Point::new(0.0, 0.0); 4];
        let apv = repair_layout(&pts, &cfg, &grid).unwrap();
        apv.validate(cfg.region_size, cfg.min_spacing).unwrap();
        let pts = vec![Point::new(5.0, 5.0), Point::new(5.0, 5.0), Point::new(-1.0, 0.0), Point::new(0.2, 0.2)];
        let apv = repair_layout(&pts, &cfg, &grid).unwrap();
        apv.validate(cfg.region_size, cfg.min_spacing).unwrap();
    }

    #[test]
    fn zero_iterations_returns_initial_best() {
        let mut cfg = quick_cfg();
        cfg.pso.iterations = 0;
        let s = generate_scenario(&cfg, &mut seeded_rng(1, 0));
        let out = pso_optimize(&s, &cfg, &mut seeded_rng(1, 2));
        assert_eq!(out.report.objective_trace.len(), 1);
        assert_eq!(out.evaluations, cfg.pso.swarm_size);
        assert!(out.report.feasible);
    }

    #[test]
    fn deterministic_and_monotone() {
        let cfg = quick_cfg();
        let s = generate_scenario(&cfg, &mut seeded_rng(2, 0));
        let a = pso_optimize(&s, &cfg, &mut seeded_rng(2, 2));
        let b = pso_optimize(&s, &cfg, &mut seeded_rng(2, 2));
        assert!(a.report.same_outcome(&b.report));
        for pair in a.report.objective_trace.windows(2) {
            assert!(pair[1] >= pair[0]);
        }
        assert!(a.report.feasible);
    }

    #[test]
    fn per_round_mode_is_feasible() {
        let mut cfg = quick_cfg();
        cfg.pso.beam_mode = PsoBeamMode::PerRound;
        let s = generate_scenario(&cfg, &mut seeded_rng(3, 0));
        let out = pso_optimize(&s, &cfg, &mut seeded_rng(3, 2));
        assert!(out.report.feasible);
        for pair in out.report.objective_trace.windows(2) {
            assert!(pair[1] >= pair[0]);
        }
    }
}
