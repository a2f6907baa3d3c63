//! 1D discrete Legendre–Fenchel transform, biconjugate, and lower convex
//! hull.
//!
//! These routines back the demonstration comparing two discrete
//! approximations of a 1D convex envelope: the biconjugate (double transform)
//! restricted to slopes observed at the sample points, versus the lower
//! convex hull of the samples themselves. The hull needs only function
//! values, while the double transform also needs gradients, and at equal
//! sample budgets the hull tracks a high-resolution envelope more closely.

use crate::error::{Error, Result};

/// A function sampled at strictly increasing abscissae.
#[derive(Debug, Clone)]
pub struct Sampled1D {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
}

impl Sampled1D {
    pub fn new(xs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if xs.is_empty() || xs.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "sampled function needs matching non-empty grids, got {} abscissae and {} values",
                xs.len(),
                values.len()
            )));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "abscissae must be strictly increasing".into(),
            ));
        }
        if xs.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "sampled function must be finite".into(),
            ));
        }
        Ok(Self { xs, values })
    }

    /// Samples `f` at `n` uniform points on [0,1].
    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(
                "need at least 2 sample points".into(),
            ));
        }
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let values = xs.iter().map(|&x| f(x)).collect();
        Self::new(xs, values)
    }

    /// Piecewise-linear evaluation; queries are clamped to the sampled range.
    pub fn eval(&self, x: f64) -> f64 {
        let xs = &self.xs;
        if x <= xs[0] {
            return self.values[0];
        }
        if x >= xs[xs.len() - 1] {
            return self.values[xs.len() - 1];
        }
        let k = match xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => return self.values[i],
            Err(i) => i - 1,
        };
        let t = (x - xs[k]) / (xs[k + 1] - xs[k]);
        self.values[k] + t * (self.values[k + 1] - self.values[k])
    }
}

/// Discrete conjugate g(p) = max_i (p·x_i − v_i) evaluated at each `p` in
/// `at`. Applying it twice (swapping the roles of abscissae and slopes)
/// yields the discrete biconjugate.
pub fn conjugate_at(xs: &[f64], values: &[f64], at: &[f64]) -> Vec<f64> {
    at.iter()
        .map(|&p| {
            xs.iter()
                .zip(values)
                .map(|(&x, &v)| p * x - v)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Conjugate of a sampled function over a slope grid.
pub fn conjugate(f: &Sampled1D, slopes: &[f64]) -> Result<Vec<f64>> {
    if slopes.is_empty() {
        return Err(Error::InvalidParameter("empty slope grid".into()));
    }
    Ok(conjugate_at(&f.xs, &f.values, slopes))
}

/// Discrete biconjugate f**(x) = max_p (p·x − f*(p)) over the given slope
/// set, evaluated at `eval_xs`.
pub fn biconjugate_at(f: &Sampled1D, slopes: &[f64], eval_xs: &[f64]) -> Result<Vec<f64>> {
    let star = conjugate(f, slopes)?;
    Ok(conjugate_at(slopes, &star, eval_xs))
}

/// Discrete biconjugate evaluated back at the sample abscissae.
pub fn biconjugate(f: &Sampled1D, slopes: &[f64]) -> Result<Sampled1D> {
    let values = biconjugate_at(f, slopes, &f.xs)?;
    Sampled1D::new(f.xs.clone(), values)
}

/// Uniform slope grid of `n` points over ±1.2× the largest adjacent-sample
/// slope, wide enough that every supporting slope of the samples is interior.
pub fn default_slope_grid(f: &Sampled1D, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidParameter("slope grid needs >= 2 points".into()));
    }
    let max_slope = f
        .xs
        .windows(2)
        .zip(f.values.windows(2))
        .map(|(x, v)| ((v[1] - v[0]) / (x[1] - x[0])).abs())
        .fold(0.0f64, f64::max);
    let s = 1.2 * max_slope.max(1e-12);
    Ok((0..n)
        .map(|i| -s + 2.0 * s * i as f64 / (n - 1) as f64)
        .collect())
}

/// Slopes observed at the sample points: central differences at interior
/// points, one-sided at the ends. This is the slope budget of a double
/// transform that spends one gradient evaluation per sample.
pub fn sample_point_slopes(f: &Sampled1D) -> Result<Vec<f64>> {
    let n = f.xs.len();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "need at least 2 samples for slopes".into(),
        ));
    }
    let d = |i: usize, j: usize| (f.values[j] - f.values[i]) / (f.xs[j] - f.xs[i]);
    Ok((0..n)
        .map(|i| {
            if i == 0 {
                d(0, 1)
            } else if i == n - 1 {
                d(n - 2, n - 1)
            } else {
                d(i - 1, i + 1)
            }
        })
        .collect())
}

/// Lower convex hull of the sample points by Andrew's monotone chain,
/// returned as the hull vertices (a subset of the samples).
pub fn lower_hull_1d(f: &Sampled1D) -> Result<Sampled1D> {
    if f.xs.len() < 2 {
        return Err(Error::InvalidParameter(
            "need at least 2 points for a hull".into(),
        ));
    }
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for (&x, &v) in f.xs.iter().zip(&f.values) {
        while hull.len() >= 2 {
            let (x1, v1) = hull[hull.len() - 2];
            let (x2, v2) = hull[hull.len() - 1];
            // pop while the middle point is on or above the chord
            if (x2 - x1) * (v - v1) - (x - x1) * (v2 - v1) <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push((x, v));
    }
    let (xs, values) = hull.into_iter().unzip();
    Sampled1D::new(xs, values)
}

/// Oscillating test function with a weak quadratic bowl, used by the demo
/// subcommand: two superposed sine products plus 0.1(x−0.5)².
pub fn oscillating_bowl(x: f64) -> f64 {
    let s = |k: f64| (k * std::f64::consts::PI * x).sin() * (k * std::f64::consts::PI * x).cos();
    s(5.0) + s(3.0) + 0.1 * (x - 0.5) * (x - 0.5)
}

/// Analytic derivative of [`oscillating_bowl`].
pub fn oscillating_bowl_slope(x: f64) -> f64 {
    use std::f64::consts::PI;
    // d/dx [sin(kπx)cos(kπx)] = kπ·cos(2kπx)
    5.0 * PI * (10.0 * PI * x).cos() + 3.0 * PI * (6.0 * PI * x).cos() + 0.2 * (x - 0.5)
}
