//! Beamformers for a fixed antenna layout: maximum-ratio transmission,
//! zero forcing, and the successive convex approximation (SCA) loop whose
//! convex subproblem is solved by [`barrier`].

pub mod barrier;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::Scenario;
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::metrics;
use crate::types::{Apv, Beamformer, ComplexVec};

use barrier::{BarrierOptions, Cylinder};

/// `sqrt(P_max) h0 / ||h0||`.
pub fn mrt(h0: &ComplexVec, p_max: f64) -> Result<Beamformer> {
    let norm = h0.norm();
    if norm == 0.0 {
        return Err(Error::ZeroChannel);
    }
    Ok(Beamformer::unchecked(
        h0 * Complex64::new(p_max.sqrt() / norm, 0.0),
    ))
}

/// Interference at PR `k` (0-based) when the transmitter applies MRT on
/// layout `apv`.
pub fn mrt_interference(
    apv: &Apv,
    scenario: &Scenario,
    cfg: &ScenarioConfig,
    k: usize,
) -> Result<f64> {
    let hk = scenario.pr_channel(apv, k, cfg.wavelength)?;
    let w = mrt(&scenario.sr_channel(apv, cfg.wavelength), cfg.p_max)?;
    metrics::interference_power(&w, &hk)
}

#[derive(Debug, Clone)]
pub struct ZfSolution {
    pub beamformer: Beamformer,
    /// Numerical rank of the PR channel matrix.
    pub rank: usize,
    /// The PR channels were linearly dependent; the projection used the
    /// pseudo-inverse restricted to the numerical range.
    pub rank_deficient: bool,
}

/// Singular values below `ZF_RANK_RTOL * max(N, K) * sigma_max` are treated
/// as zero when forming the projector.
pub const ZF_RANK_RTOL: f64 = f64::EPSILON;

/// Zero-forcing beamformer: projects `h0` onto the orthogonal complement of
/// the PR channels and scales it to full power. With no PRs this is MRT.
pub fn zf(h0: &ComplexVec, pr_channels: &[ComplexVec], p_max: f64) -> Result<ZfSolution> {
    let n = h0.len();
    if h0.norm() == 0.0 {
        return Err(Error::ZeroChannel);
    }
    if pr_channels.is_empty() {
        return Ok(ZfSolution {
            beamformer: mrt(h0, p_max)?,
            rank: 0,
            rank_deficient: false,
        });
    }
    for h in pr_channels {
        if h.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: h.len(),
            });
        }
    }
    let k = pr_channels.len();
    let r = DMatrix::from_columns(pr_channels);
    let svd = r.svd(true, false);
    let u = svd.u.expect("U requested");
    let sigma_max = svd.singular_values.max();
    let threshold = ZF_RANK_RTOL * n.max(k) as f64 * sigma_max;
    let basis: Vec<DVector<Complex64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > threshold)
        .map(|(i, _)| u.column(i).into_owned())
        .collect();
    let rank = basis.len();

    let project = |v: &ComplexVec| {
        let mut out = v.clone();
        for b in &basis {
            out -= b * b.dotc(v);
        }
        out
    };
    // Second pass removes the roundoff left by the first.
    let w_hat = project(&project(h0));
    if w_hat.norm() <= 1e-10 * h0.norm() {
        return Err(Error::ZeroForcingDegenerate);
    }
    Ok(ZfSolution {
        beamformer: Beamformer::unchecked(&w_hat * Complex64::new(p_max.sqrt() / w_hat.norm(), 0.0)),
        rank,
        rank_deficient: rank < k,
    })
}

/// Largest multiple `c <= 1` of full-power MRT that satisfies every
/// interference constraint. Falls back to zero for a zero channel.
pub fn feasible_init_w(
    h0: &ComplexVec,
    pr_channels: &[ComplexVec],
    cfg: &ScenarioConfig,
) -> Beamformer {
    match mrt(h0, cfg.p_max) {
        Ok(w) => w.scaled(backoff_factor(&w, pr_channels, cfg.it_threshold)),
        Err(_) => Beamformer::zeros(h0.len()),
    }
}

/// Largest `c in [0, 1]` with `|h_k^H (c w)|^2 <= gamma` for all k.
pub fn backoff_factor(w: &Beamformer, pr_channels: &[ComplexVec], gamma: f64) -> f64 {
    pr_channels
        .iter()
        .map(|h| {
            let p = h.dotc(w.vector()).norm_sqr();
            if p > gamma {
                (gamma / p).sqrt()
            } else {
                1.0
            }
        })
        .fold(1.0, f64::min)
}

#[derive(Debug, Clone)]
pub struct P2iSolution {
    pub beamformer: Beamformer,
    /// Surrogate objective `Re{w_i^H H_0 w}` at the returned point.
    pub surrogate: f64,
    /// Certified bound on the distance to the subproblem optimum.
    pub duality_gap: f64,
    pub newton_steps: usize,
}

/// Solves one convex subproblem of the SCA loop:
///
/// maximise `Re{w_i^H h0 h0^H w}` s.t. `||w||^2 <= p_max`,
/// `|h_k^H w|^2 <= gamma` for all k.
pub fn solve_p2i(
    h0: &ComplexVec,
    pr_channels: &[ComplexVec],
    w_anchor: &Beamformer,
    p_max: f64,
    gamma: f64,
    max_newton: usize,
) -> Result<P2iSolution> {
    let n = h0.len();
    if w_anchor.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: w_anchor.len(),
        });
    }
    // Gradient direction c = H_0 w_i; objective is Re{c^H w}.
    let c = h0 * h0.dotc(w_anchor.vector());
    let c_norm = c.norm();
    if c_norm == 0.0 {
        return Ok(P2iSolution {
            beamformer: w_anchor.clone(),
            surrogate: 0.0,
            duality_gap: 0.0,
            newton_steps: 0,
        });
    }
    let surrogate = |w: &ComplexVec| c.dotc(w).re;

    // Closed form when the interference constraints are slack at the
    // ball-only optimum.
    let w_ball = &c * Complex64::new(p_max.sqrt() / c_norm, 0.0);
    if pr_channels
        .iter()
        .all(|h| h.dotc(&w_ball).norm_sqr() <= gamma)
    {
        return Ok(P2iSolution {
            surrogate: surrogate(&w_ball),
            beamformer: Beamformer::unchecked(w_ball),
            duality_gap: 0.0,
            newton_steps: 0,
        });
    }

    // Normalised real embedding: w = sqrt(P) u, g_k = h_k sqrt(P / gamma).
    let scale = p_max.sqrt();
    let c_real = embed(&c) * scale;
    let g_scale = (p_max / gamma).sqrt();
    let cylinders: Vec<Cylinder> = pr_channels
        .iter()
        .map(|h| {
            let g = h * Complex64::new(g_scale, 0.0);
            let p = embed(&g);
            let q = DVector::from_iterator(
                2 * n,
                g.iter().map(|z| -z.im).chain(g.iter().map(|z| z.re)),
            );
            Cylinder { p, q }
        })
        .collect();
    let sol = barrier::solve(
        &c_real,
        &cylinders,
        BarrierOptions {
            max_newton,
            ..BarrierOptions::default()
        },
    )?;
    let w = unembed(&sol.x) * Complex64::new(scale, 0.0);
    Ok(P2iSolution {
        surrogate: surrogate(&w),
        beamformer: Beamformer::unchecked(w),
        duality_gap: sol.duality_gap,
        newton_steps: sol.newton_steps,
    })
}

fn embed(v: &ComplexVec) -> DVector<f64> {
    DVector::from_iterator(
        2 * v.len(),
        v.iter().map(|z| z.re).chain(v.iter().map(|z| z.im)),
    )
}

fn unembed(x: &DVector<f64>) -> ComplexVec {
    let n = x.len() / 2;
    ComplexVec::from_iterator(n, (0..n).map(|i| Complex64::new(x[i], x[n + i])))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepStatus {
    /// Starting point.
    Initial,
    Accepted,
    /// The subproblem returned a point with lower true objective (only
    /// possible through solver roundoff); the loop stopped on the incumbent.
    Rejected,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ScaTrace {
    /// `|h0^H w|^2` per step.
    pub objective: Vec<f64>,
    /// Surrogate value `Re{w_i^H H_0 w_{i+1}}` per step (NaN for the start).
    pub surrogate: Vec<f64>,
    pub status: Vec<StepStatus>,
    /// Number of subproblems solved.
    pub iterations: usize,
    pub restarted: bool,
}

impl ScaTrace {
    pub fn final_objective(&self) -> f64 {
        self.objective.last().copied().unwrap_or(0.0)
    }
}

/// SCA on the beamforming subproblem with the layout fixed. `w_init` must
/// be feasible (within the configured slacks).
pub fn sca_beamforming(
    h0: &ComplexVec,
    pr_channels: &[ComplexVec],
    cfg: &ScenarioConfig,
    w_init: &Beamformer,
) -> Result<(Beamformer, ScaTrace)> {
    sca_with_limit(h0, pr_channels, cfg, w_init, cfg.sca_max_iters)
}

pub fn sca_with_limit(
    h0: &ComplexVec,
    pr_channels: &[ComplexVec],
    cfg: &ScenarioConfig,
    w_init: &Beamformer,
    max_iters: usize,
) -> Result<(Beamformer, ScaTrace)> {
    if w_init.len() != h0.len() {
        return Err(Error::DimensionMismatch {
            expected: h0.len(),
            actual: w_init.len(),
        });
    }
    if w_init.power() > cfg.p_max * (1.0 + cfg.eps_pow) {
        return Err(Error::InfeasibleStart(format!(
            "power {} above budget {}",
            w_init.power(),
            cfg.p_max
        )));
    }
    for (k, h) in pr_channels.iter().enumerate() {
        let p = metrics::interference_power(w_init, h)?;
        if p > cfg.it_threshold * (1.0 + cfg.eps_it) {
            return Err(Error::InfeasibleStart(format!(
                "interference {p} at PR {k} above threshold {}",
                cfg.it_threshold
            )));
        }
    }

    let objective = |w: &Beamformer| h0.dotc(w.vector()).norm_sqr();
    let mut trace = ScaTrace::default();
    let mut w = w_init.clone();
    if h0.dotc(w.vector()).norm() == 0.0 && h0.norm() > 0.0 {
        // Zero gradient at the anchor: restart from the scaled MRT point.
        w = feasible_init_w(h0, pr_channels, cfg);
        trace.restarted = true;
    }
    let mut current = objective(&w);
    trace.objective.push(current);
    trace.surrogate.push(f64::NAN);
    trace.status.push(StepStatus::Initial);

    for _ in 0..max_iters {
        let sol = solve_p2i(h0, pr_channels, &w, cfg.p_max, cfg.it_threshold, cfg.ipm_max_iters)?;
        trace.iterations += 1;
        let next = objective(&sol.beamformer);
        if next < current {
            trace.objective.push(current);
            trace.surrogate.push(sol.surrogate);
            trace.status.push(StepStatus::Rejected);
            break;
        }
        let improvement = if current > 0.0 {
            (next - current) / current
        } else if next > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        w = sol.beamformer;
        current = next;
        trace.objective.push(current);
        trace.surrogate.push(sol.surrogate);
        trace.status.push(StepStatus::Accepted);
        if improvement < cfg.sca_tol {
            break;
        }
    }
    Ok((w, trace))
}
