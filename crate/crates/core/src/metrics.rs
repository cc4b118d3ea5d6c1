//! Objective and constraint evaluation for a (positions, beamformer) pair.

use serde::{Deserialize, Serialize};

use crate::channel::Scenario;
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::types::{Apv, Beamformer, ComplexVec, SolveReport};

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            expected: a,
            actual: b,
        });
    }
    Ok(())
}

/// `|h^H w|^2`.
pub fn received_power(w: &Beamformer, h: &ComplexVec) -> Result<f64> {
    check_len(h.len(), w.len())?;
    Ok(h.dotc(w.vector()).norm_sqr())
}

pub fn received_snr(w: &Beamformer, h0: &ComplexVec, noise_power: f64) -> Result<f64> {
    Ok(received_power(w, h0)? / noise_power)
}

pub fn interference_power(w: &Beamformer, hk: &ComplexVec) -> Result<f64> {
    received_power(w, hk)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    /// Antenna outside the region; margin is the excess distance beyond the
    /// boundary along the worse axis.
    Region { index: usize, margin: f64 },
    /// Pair closer than `D_min`; margin is the shortfall.
    Spacing { first: usize, second: usize, margin: f64 },
    /// Power above budget; margin is the excess in watts.
    Power { margin: f64 },
    /// Interference above threshold at PR `k` (0-based); margin in watts.
    Interference { k: usize, margin: f64 },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Verdict {
    pub violations: Vec<Violation>,
    pub interference: Vec<f64>,
    pub power: f64,
}

impl Verdict {
    pub fn feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks region, spacing, power (with `eps_pow` slack) and every
/// interference constraint (with `eps_it` slack).
pub fn check_feasible(
    w: &Beamformer,
    apv: &Apv,
    scenario: &Scenario,
    cfg: &ScenarioConfig,
) -> Verdict {
    let mut violations = Vec::new();
    let half = cfg.region_size / 2.0;
    for index in apv.region_violations(cfg.region_size) {
        let p = apv.position(index);
        violations.push(Violation::Region {
            index,
            margin: p.x.abs().max(p.y.abs()) - half,
        });
    }
    for (first, second, d) in apv.spacing_violations(cfg.min_spacing) {
        violations.push(Violation::Spacing {
            first,
            second,
            margin: cfg.min_spacing - d,
        });
    }
    let power = w.power();
    if power > cfg.p_max * (1.0 + cfg.eps_pow) {
        violations.push(Violation::Power {
            margin: power - cfg.p_max,
        });
    }
    let mut interference = Vec::with_capacity(scenario.k());
    if w.len() == apv.len() {
        for (k, hk) in scenario.pr_channels(apv, cfg.wavelength).iter().enumerate() {
            let p = interference_power(w, hk).expect("lengths checked");
            if p > cfg.it_threshold * (1.0 + cfg.eps_it) {
                violations.push(Violation::Interference {
                    k,
                    margin: p - cfg.it_threshold,
                });
            }
            interference.push(p);
        }
    }
    Verdict {
        violations,
        interference,
        power,
    }
}

/// Interference at every PR for a given design.
pub fn interference_profile(
    w: &Beamformer,
    pr_channels: &[ComplexVec],
) -> Result<Vec<f64>> {
    pr_channels.iter().map(|h| interference_power(w, h)).collect()
}

/// Evaluates a final design into a [`SolveReport`].
#[allow(clippy::too_many_arguments)]
pub fn summarize(
    scheme: &str,
    apv: &Apv,
    w: &Beamformer,
    scenario: &Scenario,
    cfg: &ScenarioConfig,
    objective_trace: Vec<f64>,
    iterations: usize,
    wall_time: f64,
) -> SolveReport {
    let h0 = scenario.sr_channel(apv, cfg.wavelength);
    let snr = received_snr(w, &h0, cfg.noise_power).unwrap_or(0.0);
    let verdict = check_feasible(w, apv, scenario, cfg);
    SolveReport {
        scheme: scheme.to_string(),
        snr,
        snr_db: crate::to_db(snr),
        feasible: verdict.feasible(),
        interference: verdict.interference,
        objective_trace,
        iterations,
        wall_time,
        apv: apv.clone(),
        beamformer: w.clone(),
        full_power: None,
        constraint_stuck: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::generate_scenario;
    use crate::rng::seeded_rng;
    use crate::types::Point;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_beamformer_gives_zero_snr() {
        let h = ComplexVec::from_vec(vec![c(1.0, 2.0), c(-0.5, 0.1)]);
        assert_eq!(received_snr(&Beamformer::zeros(2), &h, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn scalar_case() {
        let h = ComplexVec::from_vec(vec![c(1.0, 0.0)]);
        let w = Beamformer::unchecked(ComplexVec::from_vec(vec![c(3f64.sqrt(), 0.0)]));
        assert!((received_snr(&w, &h, 1.0).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_gives_zero_interference() {
        let h = ComplexVec::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)]);
        let w = Beamformer::unchecked(ComplexVec::from_vec(vec![c(0.0, 1.0), c(1.0, 0.0)]));
        // h^H w = 1*i + (-i)*1 = 0
        assert!(interference_power(&w, &h).unwrap() < 1e-30);
    }

    #[test]
    fn length_mismatch_is_error() {
        let h = ComplexVec::from_vec(vec![c(1.0, 0.0)]);
        assert!(matches!(
            received_snr(&Beamformer::zeros(2), &h, 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    fn fixture() -> (Apv, Scenario, ScenarioConfig) {
        let cfg = ScenarioConfig::default();
        let s = generate_scenario(&cfg, &mut seeded_rng(11, 0));
        let apv = Apv::new(
            vec![
                Point::new(-0.1, -0.1),
                Point::new(0.1, -0.1),
                Point::new(-0.1, 0.1),
                Point::new(0.1, 0.1),
            ],
            cfg.region_size,
            cfg.min_spacing,
        )
        .unwrap();
        (apv, s, cfg)
    }

    #[test]
    fn zero_beamformer_is_feasible() {
        let (apv, s, cfg) = fixture();
        let v = check_feasible(&Beamformer::zeros(4), &apv, &s, &cfg);
        assert!(v.feasible(), "{v:?}");
    }

    #[test]
    fn colocated_antennas_flagged() {
        let (_, s, cfg) = fixture();
        let apv = Apv::unchecked(vec![Point::new(0.0, 0.0); 4]);
        let v = check_feasible(&Beamformer::zeros(4), &apv, &s, &cfg);
        let n = v
            .violations
            .iter()
            .filter(|x| matches!(x, Violation::Spacing { .. }))
            .count();
        assert_eq!(n, 6);
    }

    #[test]
    fn power_violation_margin() {
        let (apv, s, cfg) = fixture();
        let amp = (2.0 * cfg.p_max / 4.0).sqrt();
        let w = Beamformer::unchecked(ComplexVec::from_element(4, c(amp, 0.0)));
        let v = check_feasible(&w, &apv, &s, &cfg);
        let margin = v
            .violations
            .iter()
            .find_map(|x| match x {
                Violation::Power { margin } => Some(*margin),
                _ => None,
            })
            .expect("power violation");
        assert!((margin - cfg.p_max).abs() < 1e-12);
    }
}
