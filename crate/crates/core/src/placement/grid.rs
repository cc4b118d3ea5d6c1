use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::channel::{point_response, Scenario};
use crate::config::ScenarioConfig;
use crate::types::{spacing_ok, Apv, Point};

/// `M x M` sampling points `p_{i,j} = (-A/2 + iA/M, -A/2 + jA/M)` with
/// `i, j` in `1..=M`, stored row-major in `(i, j)` lexicographic order.
///
/// The index range starts at 1, so the grid touches the `+A/2` edges but not
/// the `-A/2` edges.
#[derive(Debug, Clone)]
pub struct SamplingGrid {
    m: usize,
    region_size: f64,
    points: Vec<Point>,
}

impl SamplingGrid {
    pub fn new(m: usize, region_size: f64) -> Self {
        let step = region_size / m as f64;
        let half = region_size / 2.0;
        let mut points = Vec::with_capacity(m * m);
        for i in 1..=m {
            for j in 1..=m {
                points.push(Point::new(-half + i as f64 * step, -half + j as f64 * step));
            }
        }
        Self {
            m,
            region_size,
            points,
        }
    }

    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self::new(cfg.grid_points_per_axis, cfg.region_size)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn spacing(&self) -> f64 {
        self.region_size / self.m as f64
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, idx: usize) -> Point {
        self.points[idx]
    }

    /// 1-based `(i, j)` of a flat index.
    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx / self.m + 1, idx % self.m + 1)
    }

    /// Grid point closest to `p`.
    pub fn nearest(&self, p: &Point) -> usize {
        let step = self.spacing();
        let half = self.region_size / 2.0;
        let snap = |v: f64| (((v + half) / step).round() as i64).clamp(1, self.m as i64) as usize;
        (snap(p.x) - 1) * self.m + (snap(p.y) - 1)
    }

    /// Scans the grid in order and keeps every point at least `min_spacing`
    /// from those already kept, stopping after `n`.
    pub fn greedy_spaced_subset(&self, n: usize, min_spacing: f64) -> Vec<usize> {
        self.spaced_in_order(0..self.points.len(), n, min_spacing)
    }

    /// Random spaced subset by sequential rejection over a shuffled grid.
    /// Falls back to the greedy scan if the random order gets stuck.
    pub fn random_spaced_subset<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        n: usize,
        min_spacing: f64,
    ) -> Option<Vec<usize>> {
        let mut order: Vec<usize> = (0..self.points.len()).collect();
        order.shuffle(rng);
        let picked = self.spaced_in_order(order, n, min_spacing);
        if picked.len() == n {
            return Some(picked);
        }
        let greedy = self.greedy_spaced_subset(n, min_spacing);
        (greedy.len() == n).then_some(greedy)
    }

    fn spaced_in_order(
        &self,
        order: impl IntoIterator<Item = usize>,
        n: usize,
        min_spacing: f64,
    ) -> Vec<usize> {
        let mut picked: Vec<usize> = Vec::with_capacity(n);
        for idx in order {
            if picked.len() == n {
                break;
            }
            let p = self.points[idx];
            if picked
                .iter()
                .all(|&q| spacing_ok(p.distance(&self.points[q]), min_spacing))
            {
                picked.push(idx);
            }
        }
        picked
    }

    pub fn apv_from_indices(&self, indices: &[usize]) -> Apv {
        Apv::unchecked(indices.iter().map(|&i| self.points[i]).collect())
    }
}

/// Sampling points available to antenna `n`: every grid point at least
/// `min_spacing` from all other antennas.
pub fn feasible_points(grid: &SamplingGrid, apv: &Apv, n: usize, min_spacing: f64) -> Vec<usize> {
    (0..grid.len())
        .filter(|&idx| is_spaced(&grid.point(idx), apv, n, min_spacing))
        .collect()
}

pub(crate) fn is_spaced(p: &Point, apv: &Apv, n: usize, min_spacing: f64) -> bool {
    apv.positions()
        .iter()
        .enumerate()
        .all(|(m, q)| m == n || spacing_ok(p.distance(q), min_spacing))
}

/// Single-antenna channel of every receiver at every grid point;
/// `row(0)` is the SR, `row(k)` PR k.
#[derive(Debug, Clone)]
pub struct ResponseTable {
    rows: Vec<Vec<Complex64>>,
}

impl ResponseTable {
    pub fn new(grid: &SamplingGrid, scenario: &Scenario, wavelength: f64) -> Self {
        let rows = std::iter::once(&scenario.sr_paths)
            .chain(&scenario.pr_paths)
            .map(|ps| {
                grid.points()
                    .iter()
                    .map(|p| point_response(p, ps, wavelength))
                    .collect()
            })
            .collect();
        Self { rows }
    }

    pub fn receivers(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, receiver: usize, idx: usize) -> Complex64 {
        self.rows[receiver][idx]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_layout() {
        let g = SamplingGrid::new(4, 0.4);
        assert_eq!(g.len(), 16);
        let first = g.point(0);
        assert!((first.x + 0.1).abs() < 1e-15 && (first.y + 0.1).abs() < 1e-15);
        let last = g.point(15);
        assert!((last.x - 0.2).abs() < 1e-15 && (last.y - 0.2).abs() < 1e-15);
        assert_eq!(g.ij(5), (2, 2));
        assert_eq!(g.nearest(&Point::new(0.0, 0.1)), 6);
    }

    #[test]
    fn greedy_subset_is_spaced() {
        let g = SamplingGrid::new(40, 0.4);
        let idx = g.greedy_spaced_subset(4, 0.05);
        assert_eq!(idx.len(), 4);
        let apv = g.apv_from_indices(&idx);
        assert!(apv.validate(0.4, 0.05).is_ok());
    }

    #[test]
    fn single_antenna_sees_whole_grid() {
        let g = SamplingGrid::new(10, 0.4);
        let apv = Apv::unchecked(vec![Point::new(0.0, 0.0)]);
        assert_eq!(feasible_points(&g, &apv, 0, 0.05).len(), 100);
    }

    #[test]
    fn large_spacing_excludes_disk() {
        let g = SamplingGrid::new(10, 0.4);
        let apv = Apv::unchecked(vec![Point::new(0.0, 0.0), Point::new(0.0, 0.0)]);
        let pts = feasible_points(&g, &apv, 0, 0.4);
        assert!(pts.iter().all(|&i| g.point(i).distance(&Point::new(0.0, 0.0)) >= 0.4 - 1e-12));
        // Only the (+A/2, +A/2) corner region survives: (0.2, 0.2) is 0.283 away.
        assert!(pts.is_empty());
        let pts = feasible_points(&g, &apv, 0, 0.25);
        assert!(!pts.is_empty());
        assert!(pts.iter().all(|&i| g.point(i).distance(&Point::new(0.0, 0.0)) >= 0.25 - 1e-12));
    }
}
