//! Method of moving asymptotes for box-constrained problems with a single
//! inequality constraint (Svanberg's scheme with the standard elastic
//! variables y, z absorbed analytically).
//!
//! Each call to [`Mma::step`] builds the separable convex subproblem around
//! the current iterate and solves its dual exactly by bisection on the one
//! Lagrange multiplier, which is orders of magnitude cheaper than a general
//! primal-dual solve and has no tuning parameters.

use crate::error::{Error, Result};

/// Initial asymptote half-width as a fraction of the box range.
pub const ASYINIT: f64 = 0.5;
/// Asymptote expansion factor after two steps in the same direction.
pub const ASYINCR: f64 = 1.2;
/// Asymptote contraction factor after an oscillation.
pub const ASYDECR: f64 = 0.7;
/// Fraction of the asymptote gap kept between bounds and asymptotes.
pub const ALBEFA: f64 = 0.1;
/// Curvature floor added to the subproblem coefficients.
pub const RAA0: f64 = 1e-5;
/// Linear penalty on the constraint slack variable y.
pub const SLACK_PENALTY_LINEAR: f64 = 1000.0;
/// Quadratic penalty on the constraint slack variable y.
pub const SLACK_PENALTY_QUADRATIC: f64 = 1.0;

/// Optimizer state carried between iterations.
#[derive(Debug, Clone)]
pub struct Mma {
    xmin: Vec<f64>,
    xmax: Vec<f64>,
    low: Vec<f64>,
    upp: Vec<f64>,
    xold1: Vec<f64>,
    xold2: Vec<f64>,
    iter: usize,
}

impl Mma {
    pub fn new(xmin: Vec<f64>, xmax: Vec<f64>) -> Result<Self> {
        if xmin.is_empty() || xmin.len() != xmax.len() {
            return Err(Error::InvalidParameter(
                "MMA bounds must be non-empty and of equal length".into(),
            ));
        }
        for (&lo, &hi) in xmin.iter().zip(&xmax) {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::InvalidParameter(format!(
                    "MMA box [{lo}, {hi}] is not a finite non-empty interval"
                )));
            }
        }
        let n = xmin.len();
        Ok(Self {
            xmin,
            xmax,
            low: vec![0.0; n],
            upp: vec![0.0; n],
            xold1: vec![0.0; n],
            xold2: vec![0.0; n],
            iter: 0,
        })
    }

    pub fn num_variables(&self) -> usize {
        self.xmin.len()
    }

    pub fn iteration(&self) -> usize {
        self.iter
    }

    /// Current moving asymptotes `(low, upp)`; meaningful after the first step.
    pub fn asymptotes(&self) -> (&[f64], &[f64]) {
        (&self.low, &self.upp)
    }

    /// One MMA iteration: returns the next design for objective gradient
    /// `df0`, constraint value `g` (feasible when `g <= 0`) and constraint
    /// gradient `dg`, with moves limited to `move_limit` per variable.
    pub fn step(
        &mut self,
        x: &[f64],
        df0: &[f64],
        g: f64,
        dg: &[f64],
        move_limit: f64,
    ) -> Result<Vec<f64>> {
        let n = self.num_variables();
        if x.len() != n || df0.len() != n || dg.len() != n {
            return Err(Error::InvalidParameter(format!(
                "MMA step arrays must have length {n}"
            )));
        }
        if !move_limit.is_finite() || move_limit <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "move limit must be positive, got {move_limit}"
            )));
        }
        if !g.is_finite() {
            return Err(Error::InvalidParameter("constraint value is not finite".into()));
        }
        for j in 0..n {
            if !x[j].is_finite() || !df0[j].is_finite() || !dg[j].is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "non-finite MMA input at variable {j}"
                )));
            }
            if x[j] < self.xmin[j] - 1e-9 || x[j] > self.xmax[j] + 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "iterate {} outside box [{}, {}] at variable {j}",
                    x[j], self.xmin[j], self.xmax[j]
                )));
            }
        }

        self.update_asymptotes(x);
        let sub = self.build_subproblem(x, df0, g, dg, move_limit);
        let (xnew, _, _) = sub.solve()?;

        self.xold2.copy_from_slice(&self.xold1);
        self.xold1.copy_from_slice(x);
        self.iter += 1;
        Ok(xnew)
    }

    fn update_asymptotes(&mut self, x: &[f64]) {
        let n = self.num_variables();
        for j in 0..n {
            let range = self.xmax[j] - self.xmin[j];
            if self.iter < 2 {
                self.low[j] = x[j] - ASYINIT * range;
                self.upp[j] = x[j] + ASYINIT * range;
            } else {
                let zzz = (x[j] - self.xold1[j]) * (self.xold1[j] - self.xold2[j]);
                let factor = if zzz > 0.0 {
                    ASYINCR
                } else if zzz < 0.0 {
                    ASYDECR
                } else {
                    1.0
                };
                self.low[j] = x[j] - factor * (self.xold1[j] - self.low[j]);
                self.upp[j] = x[j] + factor * (self.upp[j] - self.xold1[j]);
                self.low[j] = self.low[j].max(x[j] - 10.0 * range).min(x[j] - 0.01 * range);
                self.upp[j] = self.upp[j].min(x[j] + 10.0 * range).max(x[j] + 0.01 * range);
            }
        }
    }

    fn build_subproblem(
        &self,
        x: &[f64],
        df0: &[f64],
        g: f64,
        dg: &[f64],
        move_limit: f64,
    ) -> Subproblem {
        let n = self.num_variables();
        let mut sub = Subproblem {
            low: self.low.clone(),
            upp: self.upp.clone(),
            alfa: vec![0.0; n],
            beta: vec![0.0; n],
            p0: vec![0.0; n],
            q0: vec![0.0; n],
            p: vec![0.0; n],
            q: vec![0.0; n],
            b: -g,
        };
        for j in 0..n {
            sub.alfa[j] = self.xmin[j]
                .max(x[j] - move_limit)
                .max(self.low[j] + ALBEFA * (x[j] - self.low[j]));
            sub.beta[j] = self.xmax[j]
                .min(x[j] + move_limit)
                .min(self.upp[j] - ALBEFA * (self.upp[j] - x[j]));
            let ux1 = self.upp[j] - x[j];
            let xl1 = x[j] - self.low[j];
            let (ux2, xl2) = (ux1 * ux1, xl1 * xl1);
            let xmami = (self.xmax[j] - self.xmin[j]).max(1e-5);

            let (p0, q0) = (df0[j].max(0.0), (-df0[j]).max(0.0));
            let pq0 = 0.001 * (p0 + q0) + RAA0 / xmami;
            sub.p0[j] = (p0 + pq0) * ux2;
            sub.q0[j] = (q0 + pq0) * xl2;

            let (p, q) = (dg[j].max(0.0), (-dg[j]).max(0.0));
            let pq = 0.001 * (p + q) + RAA0 / xmami;
            sub.p[j] = (p + pq) * ux2;
            sub.q[j] = (q + pq) * xl2;
            sub.b += sub.p[j] / ux1 + sub.q[j] / xl1;
        }
        sub
    }
}

/// Separable convex subproblem
///   min  sum_j p0_j/(upp_j - x_j) + q0_j/(x_j - low_j) + c*y + d/2*y^2
///   s.t. sum_j p_j/(upp_j - x_j) + q_j/(x_j - low_j) - y <= b,
///        alfa <= x <= beta,  y >= 0.
struct Subproblem {
    low: Vec<f64>,
    upp: Vec<f64>,
    alfa: Vec<f64>,
    beta: Vec<f64>,
    p0: Vec<f64>,
    q0: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
    b: f64,
}

impl Subproblem {
    /// Primal minimizer of the Lagrangian for multiplier `lam`, clamped to
    /// the bounds: the stationarity condition gives a closed form.
    fn primal_x(&self, lam: f64, out: &mut [f64]) {
        for j in 0..out.len() {
            let plam = (self.p0[j] + lam * self.p[j]).sqrt();
            let qlam = (self.q0[j] + lam * self.q[j]).sqrt();
            let x = (self.low[j] * plam + self.upp[j] * qlam) / (plam + qlam);
            out[j] = x.clamp(self.alfa[j], self.beta[j]);
        }
    }

    fn slack_y(lam: f64) -> f64 {
        ((lam - SLACK_PENALTY_LINEAR) / SLACK_PENALTY_QUADRATIC).max(0.0)
    }

    /// Constraint residual g~(x) - y - b of the subproblem.
    fn gap(&self, x: &[f64], y: f64) -> f64 {
        let mut gv = -self.b - y;
        for j in 0..x.len() {
            gv += self.p[j] / (self.upp[j] - x[j]) + self.q[j] / (x[j] - self.low[j]);
        }
        gv
    }

    fn gap_at(&self, lam: f64, scratch: &mut [f64]) -> f64 {
        self.primal_x(lam, scratch);
        self.gap(scratch, Self::slack_y(lam))
    }

    /// Exact dual solve: the dual function of the single multiplier is
    /// concave with a nonincreasing derivative, so bisection converges to
    /// machine precision.
    fn solve(&self) -> Result<(Vec<f64>, f64, f64)> {
        let n = self.low.len();
        let mut x = vec![0.0; n];
        if self.gap_at(0.0, &mut x) <= 0.0 {
            self.primal_x(0.0, &mut x);
            return Ok((x, 0.0, 0.0));
        }
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        let mut grow = 0;
        while self.gap_at(hi, &mut x) > 0.0 {
            lo = hi;
            hi *= 2.0;
            grow += 1;
            if grow > 200 {
                return Err(Error::MmaSubproblem(hi));
            }
        }
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if self.gap_at(mid, &mut x) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi.max(1.0) {
                break;
            }
        }
        let lam = hi;
        self.primal_x(lam, &mut x);
        Ok((x, lam, Self::slack_y(lam)))
    }

    /// Derivative of the Lagrangian with respect to x_j at `xj`.
    /// Stationarity checks in the tests use this; the solver itself works
    /// with the closed-form primal minimizer instead.
    #[cfg(test)]
    fn dlag_dx(&self, j: usize, xj: f64, lam: f64) -> f64 {
        let plam = self.p0[j] + lam * self.p[j];
        let qlam = self.q0[j] + lam * self.q[j];
        let u = self.upp[j] - xj;
        let l = xj - self.low[j];
        plam / (u * u) - qlam / (l * l)
    }
}
