//! Field-response channel model and random scenario generation.
//!
//! All vectors are columns: `h_k = sum_p beta_{k,p} a(T, theta_{k,p}, phi_{k,p})`
//! with `a_n = exp(j 2pi/lambda (x_n sin(theta) cos(phi) + y_n cos(theta)))`.
//! Inner products use the conjugate transpose of the channel, i.e. the
//! received amplitude for beamformer `w` is `h^H w`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::types::{Apv, ComplexVec, Path, PathSet, Point};

/// Phase of the field response at `p` for a path with direction
/// `(theta, phi)`.
pub fn phase(p: &Point, theta: f64, phi: f64, wavelength: f64) -> f64 {
    2.0 * PI / wavelength * (p.x * theta.sin() * phi.cos() + p.y * theta.cos())
}

pub fn array_response(apv: &Apv, theta: f64, phi: f64, wavelength: f64) -> ComplexVec {
    ComplexVec::from_iterator(
        apv.len(),
        apv.positions()
            .iter()
            .map(|p| Complex64::from_polar(1.0, phase(p, theta, phi, wavelength))),
    )
}

/// Channel seen by a single antenna at `p`: `sum_p beta_p exp(j rho_p(p))`.
pub fn point_response(p: &Point, paths: &PathSet, wavelength: f64) -> Complex64 {
    paths
        .paths
        .iter()
        .map(|path| path.gain * Complex64::from_polar(1.0, phase(p, path.theta, path.phi, wavelength)))
        .sum()
}

pub fn channel_vector(apv: &Apv, paths: &PathSet, wavelength: f64) -> ComplexVec {
    ComplexVec::from_iterator(
        apv.len(),
        apv.positions()
            .iter()
            .map(|p| point_response(p, paths, wavelength)),
    )
}

/// One channel realisation: SR geometry, K PR geometries and the distances
/// used to draw their gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub sr_paths: PathSet,
    pub pr_paths: Vec<PathSet>,
    /// Distances in metres; index 0 is the SR, 1..=K the PRs.
    pub distances: Vec<f64>,
}

impl Scenario {
    pub fn k(&self) -> usize {
        self.pr_paths.len()
    }

    pub fn sr_channel(&self, apv: &Apv, wavelength: f64) -> ComplexVec {
        channel_vector(apv, &self.sr_paths, wavelength)
    }

    pub fn pr_channels(&self, apv: &Apv, wavelength: f64) -> Vec<ComplexVec> {
        self.pr_paths
            .iter()
            .map(|ps| channel_vector(apv, ps, wavelength))
            .collect()
    }

    pub fn pr_channel(&self, apv: &Apv, k: usize, wavelength: f64) -> Result<ComplexVec> {
        let ps = self.pr_paths.get(k).ok_or(Error::InvalidReceiver {
            index: k,
            count: self.pr_paths.len(),
        })?;
        Ok(channel_vector(apv, ps, wavelength))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario =
            serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        if s.distances.len() != s.pr_paths.len() + 1 {
            return Err(Error::Schema(format!(
                "expected {} distances, found {}",
                s.pr_paths.len() + 1,
                s.distances.len()
            )));
        }
        if s.sr_paths.is_empty() || s.pr_paths.iter().any(PathSet::is_empty) {
            return Err(Error::Schema("every receiver needs at least one path".into()));
        }
        Ok(s)
    }
}

/// Per-path gain variance `rho d^-alpha / L`.
pub fn path_gain_variance(cfg: &ScenarioConfig, distance: f64) -> f64 {
    cfg.ref_path_loss * distance.powf(-cfg.path_loss_exponent) / cfg.paths_per_receiver as f64
}

/// Draws a circularly-symmetric complex Gaussian with the given variance.
pub fn cscg<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

fn draw_pathset<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &ScenarioConfig,
    receiver_id: usize,
) -> (PathSet, f64) {
    let (lo, hi) = cfg.distance_range;
    let distance = if hi > lo { rng.random_range(lo..hi) } else { lo };
    let variance = path_gain_variance(cfg, distance);
    let paths = (0..cfg.paths_per_receiver)
        .map(|_| {
            let theta = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
            let phi = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
            Path::new(theta, phi, cscg(rng, variance))
        })
        .collect();
    (PathSet::new(receiver_id, paths), distance)
}

/// Draws a scenario. All paths are independent, including SR/PR paths.
pub fn generate_scenario<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Scenario {
    let (sr_paths, d0) = draw_pathset(rng, cfg, 0);
    let mut distances = vec![d0];
    let mut pr_paths = Vec::with_capacity(cfg.k_prs);
    for k in 1..=cfg.k_prs {
        let (ps, d) = draw_pathset(rng, cfg, k);
        pr_paths.push(ps);
        distances.push(d);
    }
    Scenario {
        sr_paths,
        pr_paths,
        distances,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;

    const LAMBDA: f64 = 0.1;

    #[test]
    fn origin_response_is_one() {
        let apv = Apv::unchecked(vec![Point::new(0.0, 0.0)]);
        let a = array_response(&apv, 0.3, -1.1, LAMBDA);
        assert!((a[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn half_wavelength_gives_minus_one() {
        let apv = Apv::unchecked(vec![Point::new(LAMBDA / 2.0, 0.0)]);
        let a = array_response(&apv, FRAC_PI_2, 0.0, LAMBDA);
        assert!((a[0] - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn single_unit_path_equals_array_response() {
        let apv = Apv::unchecked(vec![Point::new(0.01, 0.02), Point::new(-0.07, 0.1)]);
        let ps = PathSet::new(0, vec![Path::new(0.4, 0.9, Complex64::new(1.0, 0.0))]);
        let h = channel_vector(&apv, &ps, LAMBDA);
        let a = array_response(&apv, 0.4, 0.9, LAMBDA);
        assert!((h - a).norm() < 1e-15);
    }

    #[test]
    fn opposite_gains_cancel() {
        let apv = Apv::unchecked(vec![Point::new(0.01, 0.02), Point::new(-0.07, 0.1)]);
        let beta = Complex64::new(0.3, -0.8);
        let ps = PathSet::new(
            1,
            vec![Path::new(0.4, 0.9, beta), Path::new(0.4, 0.9, -beta)],
        );
        assert!(channel_vector(&apv, &ps, LAMBDA).norm() < 1e-15);
    }

    #[test]
    fn no_prs_when_k_is_zero() {
        let cfg = ScenarioConfig {
            k_prs: 0,
            ..ScenarioConfig::default()
        };
        let s = generate_scenario(&cfg, &mut seeded_rng(1, 0));
        assert!(s.pr_paths.is_empty());
        assert_eq!(s.distances.len(), 1);
        assert_eq!(s.sr_paths.len(), cfg.paths_per_receiver);
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = ScenarioConfig::default();
        let a = generate_scenario(&cfg, &mut seeded_rng(9, 0));
        let b = generate_scenario(&cfg, &mut seeded_rng(9, 0));
        assert_eq!(a, b);
    }

    #[test]
    fn angles_and_distances_in_range() {
        let cfg = ScenarioConfig::default();
        let s = generate_scenario(&cfg, &mut seeded_rng(3, 0));
        for ps in std::iter::once(&s.sr_paths).chain(&s.pr_paths) {
            for p in &ps.paths {
                assert!(p.theta.abs() <= FRAC_PI_2 && p.phi.abs() <= FRAC_PI_2);
            }
        }
        assert!(s.distances.iter().all(|d| (20.0..=100.0).contains(d)));
    }

    #[test]
    fn json_roundtrip_and_schema_errors() {
        let s = generate_scenario(&ScenarioConfig::default(), &mut seeded_rng(5, 0));
        let back = Scenario::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(s, back);
        assert!(Scenario::from_json("{\"sr_paths\": 3}").is_err());
        let mut bad = s.clone();
        bad.distances.pop();
        assert!(Scenario::from_json(&serde_json::to_string(&bad).unwrap()).is_err());
    }
}
