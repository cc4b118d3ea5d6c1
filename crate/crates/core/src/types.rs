//! Core domain types shared by every module.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column vector of complex amplitudes (channels, beamformers, responses).
pub type ComplexVec = DVector<Complex64>;

/// Relative tolerance applied when comparing a distance against the minimum
/// spacing, so grid points exactly `D_min` apart are not rejected by roundoff.
pub const SPACING_RTOL: f64 = 1e-9;
/// Relative tolerance for region membership.
pub const REGION_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// True if `distance` satisfies a minimum spacing up to [`SPACING_RTOL`].
pub fn spacing_ok(distance: f64, min_spacing: f64) -> bool {
    distance >= min_spacing * (1.0 - SPACING_RTOL)
}

/// True if `p` lies in the centred square of side `region_size`.
pub fn in_region(p: &Point, region_size: f64) -> bool {
    let half = 0.5 * region_size * (1.0 + REGION_RTOL);
    p.x.abs() <= half && p.y.abs() <= half
}

/// Antenna position set: one point per antenna in the centred square
/// region `[-A/2, A/2]^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Apv {
    positions: Vec<Point>,
}

impl Apv {
    /// Validated constructor. Use `f64::INFINITY` for an unbounded region.
    pub fn new(positions: Vec<Point>, region_size: f64, min_spacing: f64) -> Result<Self> {
        let apv = Self { positions };
        apv.validate(region_size, min_spacing)?;
        Ok(apv)
    }

    /// Builds a position set without checking region or spacing. Candidate
    /// layouts and test fixtures go through here; feasibility is then
    /// reported by [`crate::metrics::check_feasible`].
    pub fn unchecked(positions: Vec<Point>) -> Self {
        Self { positions }
    }

    pub fn validate(&self, region_size: f64, min_spacing: f64) -> Result<()> {
        if let Some(v) = self.region_violations(region_size).into_iter().next() {
            let p = self.positions[v];
            return Err(Error::OutsideRegion {
                index: v,
                x: p.x,
                y: p.y,
                region_size,
            });
        }
        if let Some((i, j, d)) = self.spacing_violations(min_spacing).into_iter().next() {
            return Err(Error::SpacingViolation {
                first: i,
                second: j,
                distance: d,
                min_spacing,
            });
        }
        Ok(())
    }

    pub fn region_violations(&self, region_size: f64) -> Vec<usize> {
        if !region_size.is_finite() {
            return Vec::new();
        }
        (0..self.positions.len())
            .filter(|&i| !in_region(&self.positions[i], region_size))
            .collect()
    }

    pub fn spacing_violations(&self, min_spacing: f64) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.positions.len() {
            for j in i + 1..self.positions.len() {
                let d = self.positions[i].distance(&self.positions[j]);
                if !spacing_ok(d, min_spacing) {
                    out.push((i, j, d));
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn position(&self, n: usize) -> Point {
        self.positions[n]
    }

    /// Copy with antenna `n` moved to `p`; no validation.
    pub fn with_position(&self, n: usize, p: Point) -> Self {
        let mut positions = self.positions.clone();
        positions[n] = p;
        Self { positions }
    }

    pub fn min_pairwise_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.positions.len() {
            for j in i + 1..self.positions.len() {
                best = best.min(self.positions[i].distance(&self.positions[j]));
            }
        }
        best
    }
}

/// One propagation path: elevation and azimuth angles of departure plus
/// complex gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub theta: f64,
    pub phi: f64,
    pub gain: Complex64,
}

impl Path {
    pub fn new(theta: f64, phi: f64, gain: Complex64) -> Self {
        Self { theta, phi, gain }
    }

    /// Direction cosines `(sin(theta) cos(phi), cos(theta))` along x and y.
    pub fn direction(&self) -> (f64, f64) {
        (self.theta.sin() * self.phi.cos(), self.theta.cos())
    }
}

/// Multipath geometry towards one receiver; id 0 is the secondary receiver,
/// 1..=K the primary receivers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSet {
    pub receiver_id: usize,
    pub paths: Vec<Path>,
}

impl PathSet {
    pub fn new(receiver_id: usize, paths: Vec<Path>) -> Self {
        Self { receiver_id, paths }
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Same geometry, every gain multiplied by `c`.
    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            receiver_id: self.receiver_id,
            paths: self
                .paths
                .iter()
                .map(|p| Path::new(p.theta, p.phi, p.gain * c))
                .collect(),
        }
    }
}

/// Transmit beamforming vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Beamformer {
    w: ComplexVec,
}

impl Beamformer {
    /// Checked constructor: `||w||^2 <= p_max (1 + eps_pow)` and all entries
    /// finite.
    pub fn new(w: ComplexVec, p_max: f64, eps_pow: f64) -> Result<Self> {
        if w.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidConfig("beamformer has non-finite entries".into()));
        }
        let power = w.norm_squared();
        if power > p_max * (1.0 + eps_pow) {
            return Err(Error::InfeasibleStart(format!(
                "beamformer power {power} exceeds budget {p_max}"
            )));
        }
        Ok(Self { w })
    }

    pub fn unchecked(w: ComplexVec) -> Self {
        Self { w }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            w: ComplexVec::zeros(n),
        }
    }

    pub fn vector(&self) -> &ComplexVec {
        &self.w
    }

    pub fn into_vector(self) -> ComplexVec {
        self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn power(&self) -> f64 {
        self.w.norm_squared()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { w: &self.w * Complex64::new(c, 0.0) }
    }
}

/// Outcome of one scheme on one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub scheme: String,
    /// Linear SNR at the secondary receiver.
    pub snr: f64,
    pub snr_db: f64,
    /// Interference power at each primary receiver, watts.
    pub interference: Vec<f64>,
    /// Linear SNR after each accepted outer step (best-so-far for PSO).
    pub objective_trace: Vec<f64>,
    pub feasible: bool,
    pub iterations: usize,
    pub wall_time: f64,
    pub apv: Apv,
    pub beamformer: Beamformer,
    /// MRT baseline: whether the final beamformer uses the full power budget.
    pub full_power: Option<bool>,
    /// A placement step could not find any interference-feasible candidate.
    pub constraint_stuck: bool,
}

impl SolveReport {
    pub fn max_interference(&self) -> f64 {
        self.interference.iter().copied().fold(0.0, f64::max)
    }

    /// Equality ignoring wall-clock time.
    pub fn same_outcome(&self, other: &SolveReport) -> bool {
        let mut a = self.clone();
        a.wall_time = 0.0;
        let mut b = other.clone();
        b.wall_time = 0.0;
        a == b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apv_rejects_outside_region() {
        let err = Apv::new(vec![Point::new(0.3, 0.0)], 0.4, 0.05).unwrap_err();
        assert!(matches!(err, Error::OutsideRegion { index: 0, .. }));
    }

    #[test]
    fn apv_rejects_close_pair() {
        let err = Apv::new(
            vec![Point::new(0.0, 0.0), Point::new(0.01, 0.0)],
            0.4,
            0.05,
        )
        .unwrap_err();
        assert!(matches!(err, Error::SpacingViolation { first: 0, second: 1, .. }));
    }

    #[test]
    fn apv_accepts_boundary_and_exact_spacing() {
        let apv = Apv::new(
            vec![Point::new(-0.2, 0.2), Point::new(-0.15, 0.2)],
            0.4,
            0.05,
        )
        .unwrap();
        assert_eq!(apv.len(), 2);
    }

    #[test]
    fn beamformer_power_budget() {
        let w = ComplexVec::from_vec(vec![Complex64::new(1.0, 1.0)]);
        assert!(Beamformer::new(w.clone(), 2.0, 0.0).is_ok());
        assert!(Beamformer::new(w, 1.9, 1e-9).is_err());
    }
}
