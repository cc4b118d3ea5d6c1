//! Executable versions of the interference-mitigation results for MRT:
//!
//! - the double-sum expansion of the interference caused by MRT, written
//!   in terms of angle differences between SR and PR paths;
//! - the integer-spacing search that drives `1/2 (1 + cos(2pi d b))` below a
//!   threshold for every angle difference `b` at once;
//! - the two-antenna construction along the y axis with its bound chain;
//! - the beam-gain null-steering check for a single-path SR.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{point_response, Scenario};
use crate::config::{ScenarioConfig, SpacingUnit};
use crate::error::{Error, Result};
use crate::types::{Apv, Path, Point};

/// `a[k][p][q] = sin(theta_0q) cos(phi_0q) - sin(theta_kp) cos(phi_kp)`,
/// `b[k][p][q] = cos(theta_0q) - cos(theta_kp)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleDiffs {
    pub a: Vec<Vec<Vec<f64>>>,
    pub b: Vec<Vec<Vec<f64>>>,
}

impl AngleDiffs {
    pub fn new(scenario: &Scenario) -> Self {
        let sr: Vec<(f64, f64)> = scenario.sr_paths.paths.iter().map(Path::direction).collect();
        let mut a = Vec::with_capacity(scenario.k());
        let mut b = Vec::with_capacity(scenario.k());
        for pr in &scenario.pr_paths {
            let mut ak = Vec::with_capacity(pr.len());
            let mut bk = Vec::with_capacity(pr.len());
            for path in &pr.paths {
                let (ux, uy) = path.direction();
                ak.push(sr.iter().map(|(sx, _)| sx - ux).collect());
                bk.push(sr.iter().map(|(_, sy)| sy - uy).collect());
            }
            a.push(ak);
            b.push(bk);
        }
        Self { a, b }
    }

    /// Every `b` value, flattened in `(k, p, q)` order.
    pub fn all_b(&self) -> Vec<f64> {
        self.b.iter().flatten().flatten().copied().collect()
    }
}

/// Interference at PR `k` under full-power MRT, evaluated through the
/// angle-difference double sum rather than through channel vectors.
pub fn eq7_interference(apv: &Apv, scenario: &Scenario, cfg: &ScenarioConfig, k: usize) -> Result<f64> {
    let pr = scenario.pr_paths.get(k).ok_or(Error::InvalidReceiver {
        index: k,
        count: scenario.k(),
    })?;
    let diffs = AngleDiffs::new(scenario);
    let kappa = 2.0 * PI / cfg.wavelength;
    let mut sum = Complex64::new(0.0, 0.0);
    for (p, path_k) in pr.paths.iter().enumerate() {
        for (q, path_0) in scenario.sr_paths.paths.iter().enumerate() {
            let (a, b) = (diffs.a[k][p][q], diffs.b[k][p][q]);
            let array: Complex64 = apv
                .positions()
                .iter()
                .map(|t| Complex64::from_polar(1.0, kappa * (a * t.x + b * t.y)))
                .sum();
            sum += path_k.gain.conj() * path_0.gain * array;
        }
    }
    let h0_norm_sq: f64 = apv
        .positions()
        .iter()
        .map(|t| point_response(t, &scenario.sr_paths, cfg.wavelength).norm_sqr())
        .sum();
    if h0_norm_sq == 0.0 {
        return Err(Error::ZeroChannel);
    }
    Ok(cfg.p_max / h0_norm_sq * sum.norm_sqr())
}

/// Beam gain `|sum_n exp(j 2pi/lambda (x_n a + y_n b))|^2` towards
/// `(theta, phi)` when MRT is matched to the single SR path `sr_dir`.
pub fn beam_gain(apv: &Apv, theta: f64, phi: f64, sr_dir: (f64, f64), wavelength: f64) -> f64 {
    let (a, b) = direction_diff(sr_dir, (theta, phi));
    gain_for_diff(apv.positions(), a, b, wavelength)
}

fn direction_diff(sr: (f64, f64), other: (f64, f64)) -> (f64, f64) {
    (
        sr.0.sin() * sr.1.cos() - other.0.sin() * other.1.cos(),
        sr.0.cos() - other.0.cos(),
    )
}

fn gain_for_diff(points: &[Point], a: f64, b: f64, wavelength: f64) -> f64 {
    let kappa = 2.0 * PI / wavelength;
    points
        .iter()
        .map(|t| Complex64::from_polar(1.0, kappa * (a * t.x + b * t.y)))
        .sum::<Complex64>()
        .norm_sqr()
}

/// Phase `2pi d b` (wavelength units) or `2pi/lambda d b` (metres).
fn spacing_phase(b: f64, d: u64, unit: SpacingUnit, wavelength: f64) -> f64 {
    match unit {
        SpacingUnit::Wavelengths => 2.0 * PI * d as f64 * b,
        SpacingUnit::Meters => 2.0 * PI / wavelength * d as f64 * b,
    }
}

/// Physical separation in metres for integer spacing `d`.
pub fn spacing_length(d: u64, unit: SpacingUnit, wavelength: f64) -> f64 {
    match unit {
        SpacingUnit::Wavelengths => d as f64 * wavelength,
        SpacingUnit::Meters => d as f64,
    }
}

/// `g(b, d) = 1/2 (1 + cos(phase))`, always in `[0, 1]`.
pub fn spacing_gain(b: f64, d: u64, unit: SpacingUnit, wavelength: f64) -> f64 {
    0.5 * (1.0 + spacing_phase(b, d, unit, wavelength).cos())
}

/// Smallest integer `d` in `1..=d_max` with `g(b, d) < delta` for every
/// `b`, or `None`.
pub fn lemma1_spacing_search(
    b_values: &[f64],
    delta: f64,
    d_max: u64,
    unit: SpacingUnit,
    wavelength: f64,
) -> Option<u64> {
    if b_values.is_empty() || !(delta > 0.0) {
        return None;
    }
    (1..=d_max).find(|&d| {
        b_values
            .iter()
            .all(|&b| spacing_gain(b, d, unit, wavelength) < delta)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem1Route {
    /// The integer-spacing search met the threshold `delta` for every `b`;
    /// the full bound chain applies.
    Lemma,
    /// No spacing up to `d_max` met `delta`; the smallest spacing whose
    /// exact interference meets every threshold was taken instead.
    ExactSearch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Certificate {
    pub unit: SpacingUnit,
    /// Estimated minimum of `||h0(T)||^2` over feasible layouts.
    pub h_min: f64,
    /// `P_max / h_min`.
    pub gamma: f64,
    pub delta: f64,
    pub threshold: f64,
    pub d_y: Option<u64>,
    pub route: Option<Theorem1Route>,
    /// Exact per-PR interference at the returned layout (double-sum form).
    pub exact: Vec<f64>,
    /// Triangle-inequality bound `2 gamma (sum |b_kp||b_0q| sqrt(1 + cos))^2`.
    pub triangle_bound: Vec<f64>,
    /// `4 gamma delta (sum |b_kp||b_0q|)^2`; valid only on the lemma route.
    pub delta_bound: Vec<f64>,
    /// Smallest `max_k P_k` seen during the search.
    pub best_max_interference: f64,
    /// Whether the returned layout lies inside the configured region.
    pub fits_region: bool,
}

impl Theorem1Certificate {
    /// `exact <= triangle_bound` everywhere and, on the lemma route,
    /// `triangle_bound <= delta_bound`.
    pub fn bound_chain_holds(&self) -> bool {
        let tol = 1e-9;
        let first = self
            .exact
            .iter()
            .zip(&self.triangle_bound)
            .all(|(e, t)| *e <= t * (1.0 + tol));
        let second = self.route != Some(Theorem1Route::Lemma)
            || self
                .triangle_bound
                .iter()
                .zip(&self.delta_bound)
                .all(|(t, d)| *t <= d * (1.0 + tol));
        first && second
    }
}

#[derive(Debug, Clone)]
pub struct Theorem1Outcome {
    pub apv: Option<Apv>,
    pub certificate: Theorem1Certificate,
}

/// Two-antenna layout `t1 = (0, 0)`, `t2 = (0, d)`.
pub fn two_antenna_layout(d: u64, unit: SpacingUnit, wavelength: f64) -> Apv {
    Apv::unchecked(vec![
        Point::new(0.0, 0.0),
        Point::new(0.0, spacing_length(d, unit, wavelength)),
    ])
}

struct Pairs {
    /// Per PR: list of (`beta_kp^* beta_0q`, `b`).
    terms: Vec<Vec<(Complex64, f64)>>,
}

impl Pairs {
    fn new(scenario: &Scenario) -> Self {
        let diffs = AngleDiffs::new(scenario);
        let terms = scenario
            .pr_paths
            .iter()
            .enumerate()
            .map(|(k, pr)| {
                let mut v = Vec::new();
                for (p, pk) in pr.paths.iter().enumerate() {
                    for (q, p0) in scenario.sr_paths.paths.iter().enumerate() {
                        v.push((pk.gain.conj() * p0.gain, diffs.b[k][p][q]));
                    }
                }
                v
            })
            .collect();
        Self { terms }
    }

    fn abs_sum(&self, k: usize) -> f64 {
        self.terms[k].iter().map(|(z, _)| z.norm()).sum()
    }
}

/// Runs the two-antenna construction: estimates `H_min`, derives `delta`,
/// tries the integer-spacing search and falls back to an exact scan over
/// `d = 1..=d_max`. The layout is placed without a region bound; whether it
/// fits the configured region is recorded in the certificate.
pub fn theorem1_construct<R: Rng + ?Sized>(
    scenario: &Scenario,
    cfg: &ScenarioConfig,
    d_max: u64,
    rng: &mut R,
) -> Result<Theorem1Outcome> {
    if cfg.n_antennas != 2 {
        return Err(Error::InvalidConfig(format!(
            "two-antenna construction needs n_antennas = 2, got {}",
            cfg.n_antennas
        )));
    }
    if scenario.k() == 0 {
        return Err(Error::InvalidConfig("construction needs at least one PR".into()));
    }
    let unit = cfg.spacing_unit;
    let lambda = cfg.wavelength;
    if spacing_length(1, unit, lambda) < cfg.min_spacing {
        return Err(Error::InvalidConfig(
            "unit spacing is below the minimum antenna spacing".into(),
        ));
    }
    let pairs = Pairs::new(scenario);
    let sr = &scenario.sr_paths;
    let h0_sq = |p: &Point| point_response(p, sr, lambda).norm_sqr();
    let origin_gain = h0_sq(&Point::new(0.0, 0.0));

    // H_min: over random feasible two-antenna layouts and over every
    // candidate of the y-axis family, so the estimate never exceeds
    // ||h0||^2 of a layout we might return.
    let side = if cfg.region_size.is_finite() {
        cfg.region_size
    } else {
        spacing_length(d_max, unit, lambda)
    };
    let half = side / 2.0;
    let mut h_min = f64::INFINITY;
    let mut drawn = 0;
    let mut attempts = 0;
    while drawn < cfg.h_min_samples && attempts < 100 * cfg.h_min_samples.max(1) {
        attempts += 1;
        let p1 = Point::new(rng.random_range(-half..=half), rng.random_range(-half..=half));
        let p2 = Point::new(rng.random_range(-half..=half), rng.random_range(-half..=half));
        if p1.distance(&p2) < cfg.min_spacing {
            continue;
        }
        drawn += 1;
        h_min = h_min.min(h0_sq(&p1) + h0_sq(&p2));
    }
    for d in 1..=d_max {
        let y = spacing_length(d, unit, lambda);
        h_min = h_min.min(origin_gain + h0_sq(&Point::new(0.0, y)));
    }
    if !(h_min > 0.0) {
        return Err(Error::ZeroChannel);
    }
    let gamma = cfg.p_max / h_min;
    let threshold = cfg.it_threshold;
    let delta = (0..scenario.k())
        .map(|k| threshold / (4.0 * gamma * pairs.abs_sum(k).powi(2)))
        .fold(f64::INFINITY, f64::min);

    let exact_at = |d: u64| -> Vec<f64> {
        let y = spacing_length(d, unit, lambda);
        let h = origin_gain + h0_sq(&Point::new(0.0, y));
        pairs
            .terms
            .iter()
            .map(|terms| {
                let s: Complex64 = terms
                    .iter()
                    .map(|(z, b)| z * (Complex64::new(1.0, 0.0) + Complex64::from_polar(1.0, spacing_phase(*b, d, unit, lambda))))
                    .sum();
                cfg.p_max / h * s.norm_sqr()
            })
            .collect()
    };

    let b_values: Vec<f64> = pairs.terms.iter().flatten().map(|(_, b)| *b).collect();
    let mut best_max = f64::INFINITY;
    let mut found = lemma1_spacing_search(&b_values, delta, d_max, unit, lambda)
        .map(|d| (d, Theorem1Route::Lemma));
    if found.is_none() {
        for d in 1..=d_max {
            let worst = exact_at(d).into_iter().fold(0.0, f64::max);
            best_max = best_max.min(worst);
            if worst <= threshold {
                found = Some((d, Theorem1Route::ExactSearch));
                break;
            }
        }
    }

    let Some((d, route)) = found else {
        return Ok(Theorem1Outcome {
            apv: None,
            certificate: Theorem1Certificate {
                unit,
                h_min,
                gamma,
                delta,
                threshold,
                d_y: None,
                route: None,
                exact: Vec::new(),
                triangle_bound: Vec::new(),
                delta_bound: Vec::new(),
                best_max_interference: best_max,
                fits_region: false,
            },
        });
    };

    let exact = exact_at(d);
    best_max = best_max.min(exact.iter().copied().fold(0.0, f64::max));
    let triangle_bound = pairs
        .terms
        .iter()
        .map(|terms| {
            let s: f64 = terms
                .iter()
                .map(|(z, b)| z.norm() * (1.0 + spacing_phase(*b, d, unit, lambda).cos()).max(0.0).sqrt())
                .sum();
            2.0 * gamma * s * s
        })
        .collect();
    let delta_bound = (0..scenario.k())
        .map(|k| 4.0 * gamma * delta * pairs.abs_sum(k).powi(2))
        .collect();
    let apv = two_antenna_layout(d, unit, lambda);
    let fits_region = apv.region_violations(cfg.region_size).is_empty();
    Ok(Theorem1Outcome {
        apv: Some(apv),
        certificate: Theorem1Certificate {
            unit,
            h_min,
            gamma,
            delta,
            threshold,
            d_y: Some(d),
            route: Some(route),
            exact,
            triangle_bound,
            delta_bound,
            best_max_interference: best_max,
            fits_region,
        },
    })
}

/// Prime factors of `n` with multiplicity, non-decreasing.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut f = 2;
    while f * f <= n {
        while n % f == 0 {
            out.push(f);
            n /= f;
        }
        f += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorReport {
    pub n: usize,
    pub prime_factors: Vec<u64>,
    /// Number of prime factors counted with multiplicity.
    pub i_n: usize,
    pub l_tot: usize,
    pub condition_holds: bool,
    /// Largest beam gain over the PR paths at the best layout found.
    pub max_gain: f64,
    pub starts: usize,
    /// Some coordinate of the best layout sits on the region boundary.
    pub region_binding: bool,
    /// `Some(true)` if a nulling layout was found, `Some(false)` if the
    /// search was inconclusive, `None` if it was not attempted.
    pub found: Option<bool>,
}

/// Acceptance level for a null: `G < NULL_RTOL * N^2`.
pub const NULL_RTOL: f64 = 1e-8;
const THEOREM2_STARTS: usize = 200;

/// Checks the path-count condition and, when it holds, searches for a
/// layout whose beam gain vanishes on every PR path. The y coordinates are
/// fixed at `(n - (N-1)/2) D_min` and the x coordinates are searched by
/// multi-start coordinate descent followed by Levenberg-Marquardt.
pub fn theorem2_verify<R: Rng + ?Sized>(
    n: usize,
    pr_dirs: &[(f64, f64)],
    sr_dir: (f64, f64),
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> (Option<Apv>, FactorReport) {
    let factors = prime_factors(n as u64);
    let i_n = factors.len();
    let l_tot = pr_dirs.len();
    let mut report = FactorReport {
        n,
        prime_factors: factors,
        i_n,
        l_tot,
        condition_holds: n >= 2 && l_tot <= i_n,
        max_gain: f64::NAN,
        starts: 0,
        region_binding: false,
        found: None,
    };
    if !report.condition_holds || l_tot == 0 {
        return (None, report);
    }

    let kappa = 2.0 * PI / cfg.wavelength;
    let coeffs: Vec<(f64, f64)> = pr_dirs
        .iter()
        .map(|d| {
            let (a, b) = direction_diff(sr_dir, *d);
            (kappa * a, kappa * b)
        })
        .collect();
    let ys: Vec<f64> = (0..n)
        .map(|i| (i as f64 - (n as f64 - 1.0) / 2.0) * cfg.min_spacing)
        .collect();
    let half = if cfg.region_size.is_finite() {
        cfg.region_size / 2.0
    } else {
        // Large enough for every single-path null period.
        let smallest = coeffs.iter().map(|(a, _)| a.abs()).fold(f64::INFINITY, f64::min);
        (n as f64) * PI / smallest.max(1e-12)
    };
    let target = NULL_RTOL * (n * n) as f64;
    let search = NullSearch {
        coeffs: &coeffs,
        ys: &ys,
        half,
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in 0..THEOREM2_STARTS {
        report.starts = start + 1;
        let x0: Vec<f64> = (0..n).map(|_| rng.random_range(-half..=half)).collect();
        let x = search.polish(search.coordinate_descent(x0));
        let g = search.max_gain(&x);
        if best.as_ref().is_none_or(|(b, _)| g < *b) {
            best = Some((g, x));
        }
        if g < target {
            break;
        }
    }
    let (g, x) = best.expect("at least one start");
    report.max_gain = g;
    report.region_binding = x.iter().any(|v| (v.abs() - half).abs() <= 1e-12 * half.max(1.0));
    let points: Vec<Point> = x.iter().zip(&ys).map(|(x, y)| Point::new(*x, *y)).collect();
    let apv = Apv::unchecked(points);
    let ok = g < target && apv.spacing_violations(cfg.min_spacing).is_empty();
    report.found = Some(ok);
    (ok.then_some(apv), report)
}

struct NullSearch<'a> {
    /// Per PR path: (x coefficient, y coefficient) of the phase.
    coeffs: &'a [(f64, f64)],
    ys: &'a [f64],
    half: f64,
}

impl NullSearch<'_> {
    fn sums(&self, x: &[f64]) -> Vec<Complex64> {
        self.coeffs
            .iter()
            .map(|(cx, cy)| {
                x.iter()
                    .zip(self.ys)
                    .map(|(x, y)| Complex64::from_polar(1.0, cx * x + cy * y))
                    .sum()
            })
            .collect()
    }

    fn total(&self, x: &[f64]) -> f64 {
        self.sums(x).iter().map(|s| s.norm_sqr()).sum()
    }

    fn max_gain(&self, x: &[f64]) -> f64 {
        self.sums(x).iter().map(|s| s.norm_sqr()).fold(0.0, f64::max)
    }

    /// Exact 1-D minimisation per coordinate by dense scan plus golden
    /// refinement, repeated for a fixed number of rounds.
    fn coordinate_descent(&self, mut x: Vec<f64>) -> Vec<f64> {
        const ROUNDS: usize = 30;
        const SCAN: usize = 256;
        for _ in 0..ROUNDS {
            for i in 0..x.len() {
                let f = |v: f64| {
                    let mut t = x.clone();
                    t[i] = v;
                    self.total(&t)
                };
                let step = 2.0 * self.half / SCAN as f64;
                let (mut best_v, mut best_f) = (x[i], f(x[i]));
                for s in 0..=SCAN {
                    let v = -self.half + s as f64 * step;
                    let fv = f(v);
                    if fv < best_f {
                        best_f = fv;
                        best_v = v;
                    }
                }
                // Golden-section refinement inside the bracketing cell.
                let (mut lo, mut hi) = ((best_v - step).max(-self.half), (best_v + step).min(self.half));
                let r = 0.5 * (5f64.sqrt() - 1.0);
                for _ in 0..60 {
                    let m1 = hi - r * (hi - lo);
                    let m2 = lo + r * (hi - lo);
                    if f(m1) < f(m2) {
                        hi = m2;
                    } else {
                        lo = m1;
                    }
                }
                let v = 0.5 * (lo + hi);
                x[i] = if f(v) < best_f { v } else { best_v };
            }
        }
        x
    }

    /// Levenberg-Marquardt on the real and imaginary parts of every array
    /// sum, with coordinates clamped to the region.
    fn polish(&self, mut x: Vec<f64>) -> Vec<f64> {
        let n = x.len();
        let m = self.coeffs.len();
        let mut mu = 1e-3;
        let mut cost = self.total(&x);
        for _ in 0..200 {
            // Residuals r (2m) and Jacobian J (2m x n).
            let mut r = nalgebra::DVector::<f64>::zeros(2 * m);
            let mut jac = nalgebra::DMatrix::<f64>::zeros(2 * m, n);
            for (l, (cx, cy)) in self.coeffs.iter().enumerate() {
                for i in 0..n {
                    let e = Complex64::from_polar(1.0, cx * x[i] + cy * self.ys[i]);
                    r[2 * l] += e.re;
                    r[2 * l + 1] += e.im;
                    // d/dx e^{j c x} = j c e
                    jac[(2 * l, i)] = -cx * e.im;
                    jac[(2 * l + 1, i)] = cx * e.re;
                }
            }
            let jt = jac.transpose();
            let g = &jt * &r;
            let mut h = &jt * &jac;
            for i in 0..n {
                h[(i, i)] += mu * (1.0 + h[(i, i)]);
            }
            let Some(chol) = h.cholesky() else {
                mu *= 10.0;
                continue;
            };
            let dx = -chol.solve(&g);
            let trial: Vec<f64> = x
                .iter()
                .zip(dx.iter())
                .map(|(a, d)| (a + d).clamp(-self.half, self.half))
                .collect();
            let c = self.total(&trial);
            if c < cost {
                x = trial;
                cost = c;
                mu = (mu * 0.3).max(1e-12);
            } else {
                mu *= 10.0;
                if mu > 1e12 {
                    break;
                }
            }
            if cost < 1e-24 {
                break;
            }
        }
        x
    }
}
