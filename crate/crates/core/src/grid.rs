use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid of `n` nodes on `[0, y_max]`, both end points included.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub y_max: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(y_max: f64, n: usize) -> Result<Self> {
        if !(y_max > 0.0) || n < 5 {
            return Err(Error::InvalidInput(format!(
                "grid needs y_max > 0 and at least 5 nodes (got y_max = {y_max}, n = {n})"
            )));
        }
        Ok(Self { y_max, n })
    }

    /// Grid whose spacing divides `anchor` exactly, so that `anchor` is a node.
    pub fn with_node_at(anchor: f64, approx_h: f64, y_max: f64) -> Result<Self> {
        if !(anchor > 0.0 && approx_h > 0.0 && y_max > anchor) {
            return Err(Error::InvalidInput("anchor must lie inside (0, y_max)".into()));
        }
        let steps_to_anchor = (anchor / approx_h).round().max(1.0);
        let h = anchor / steps_to_anchor;
        let intervals = (y_max / h).ceil() as usize;
        Self::new(intervals as f64 * h, intervals + 1)
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.y_max / (self.n - 1) as f64
    }

    #[inline]
    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Index of the node closest to `y`.
    pub fn nearest(&self, y: f64) -> usize {
        ((y / self.h()).round().max(0.0) as usize).min(self.n - 1)
    }

    /// Same domain, spacing halved.
    pub fn refined(&self) -> Self {
        Self { y_max: self.y_max, n: 2 * (self.n - 1) + 1 }
    }
}

/// Trapezoidal rule on uniformly spaced samples.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1])),
    }
}

/// Ordinary least-squares line through `(x, y)`; returns `(slope, intercept, r_squared)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
        syy += (yi - my) * (yi - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, intercept, r2)
}

/// Observed convergence order from errors on grids `h` and `h/2`.
pub fn observed_order(coarse_err: f64, fine_err: f64) -> f64 {
    (coarse_err / fine_err).log2()
}
