//! Log-barrier interior-point solver for
//!
//! ```text
//! maximize    c^T x
//! subject to  ||x||^2 <= 1
//!             (p_k^T x)^2 + (q_k^T x)^2 <= 1,   k = 1..K
//! ```
//!
//! which is the real embedding of a linear objective over the power ball
//! intersected with one disk constraint `|g_k^H w| <= 1` per primary
//! receiver. The origin is always strictly feasible, so no phase-one step
//! is needed.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Newton steps per centering problem; near the boundary at large `t` the
/// decrement stalls at roundoff level.
const MAX_CENTERING_STEPS: usize = 50;

/// One rank-two quadratic constraint `(p^T x)^2 + (q^T x)^2 <= 1`.
#[derive(Debug, Clone)]
pub struct Cylinder {
    pub p: DVector<f64>,
    pub q: DVector<f64>,
}

impl Cylinder {
    fn value(&self, x: &DVector<f64>) -> f64 {
        let a = self.p.dot(x);
        let b = self.q.dot(x);
        a * a + b * b
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BarrierOptions {
    /// Target duality gap `m / t`, in units of `||c||`.
    pub gap_tol: f64,
    pub max_newton: usize,
    pub mu: f64,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-10,
            max_newton: 400,
            mu: 20.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BarrierSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    /// Upper bound on `optimum - objective`.
    pub duality_gap: f64,
    pub newton_steps: usize,
}

struct Problem<'a> {
    c: &'a DVector<f64>,
    cyl: &'a [Cylinder],
}

impl Problem<'_> {
    /// Slacks of every constraint; `None` if any is non-positive.
    fn slacks(&self, x: &DVector<f64>) -> Option<Vec<f64>> {
        let mut s = Vec::with_capacity(self.cyl.len() + 1);
        s.push(1.0 - x.norm_squared());
        for c in self.cyl {
            s.push(1.0 - c.value(x));
        }
        if s.iter().all(|v| *v > 0.0) {
            Some(s)
        } else {
            None
        }
    }

    fn merit(&self, t: f64, x: &DVector<f64>) -> Option<f64> {
        let s = self.slacks(x)?;
        Some(-t * self.c.dot(x) - s.iter().map(|v| v.ln()).sum::<f64>())
    }

    fn grad_hess(&self, t: f64, x: &DVector<f64>, s: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let n = x.len();
        let mut g = -t * self.c;
        let mut h = DMatrix::<f64>::zeros(n, n);
        // Ball: -log(1 - x^T x)
        g += x * (2.0 / s[0]);
        for i in 0..n {
            h[(i, i)] += 2.0 / s[0];
        }
        h.ger(4.0 / (s[0] * s[0]), x, x, 1.0);
        for (cyl, &sk) in self.cyl.iter().zip(&s[1..]) {
            // Q x with Q = p p^T + q q^T
            let qx = &cyl.p * cyl.p.dot(x) + &cyl.q * cyl.q.dot(x);
            g += &qx * (2.0 / sk);
            h.ger(2.0 / sk, &cyl.p, &cyl.p, 1.0);
            h.ger(2.0 / sk, &cyl.q, &cyl.q, 1.0);
            h.ger(4.0 / (sk * sk), &qx, &qx, 1.0);
        }
        (g, h)
    }
}

pub fn solve(
    c: &DVector<f64>,
    cylinders: &[Cylinder],
    opts: BarrierOptions,
) -> Result<BarrierSolution> {
    let n = c.len();
    let scale = c.norm();
    if scale == 0.0 {
        return Ok(BarrierSolution {
            x: DVector::zeros(n),
            objective: 0.0,
            duality_gap: 0.0,
            newton_steps: 0,
        });
    }
    let c_unit = c / scale;
    let problem = Problem {
        c: &c_unit,
        cyl: cylinders,
    };
    let m = (cylinders.len() + 1) as f64;
    let mut x = DVector::<f64>::zeros(n);
    let mut t = m;
    let mut steps = 0usize;

    loop {
        // Centering by damped Newton.
        let mut inner = 0usize;
        loop {
            let s = problem.slacks(&x).expect("iterate stays strictly feasible");
            let (g, h) = problem.grad_hess(t, &x, &s);
            let chol = h
                .clone()
                .cholesky()
                .ok_or(Error::NotConverged { iterations: steps })?;
            let dx = -chol.solve(&g);
            let decrement = -g.dot(&dx);
            if decrement / 2.0 <= 1e-10 || inner >= MAX_CENTERING_STEPS {
                break;
            }
            steps += 1;
            inner += 1;
            if steps > opts.max_newton {
                return Err(Error::NotConverged { iterations: steps });
            }
            let f0 = problem.merit(t, &x).expect("feasible");
            let mut alpha = 1.0;
            loop {
                let trial = &x + &dx * alpha;
                if let Some(f) = problem.merit(t, &trial) {
                    if f <= f0 - 0.25 * alpha * decrement {
                        x = trial;
                        break;
                    }
                }
                alpha *= 0.5;
                if alpha < 1e-16 {
                    // No further progress possible at this t.
                    break;
                }
            }
            if alpha < 1e-16 {
                break;
            }
        }
        if m / t <= opts.gap_tol {
            break;
        }
        t *= opts.mu;
    }

    Ok(BarrierSolution {
        objective: c.dot(&x),
        duality_gap: scale * m / t,
        x,
        newton_steps: steps,
    })
}
