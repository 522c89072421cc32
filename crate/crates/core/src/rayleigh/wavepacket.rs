//! Superposition `∫ φ(k) ṽ(k, y) e^{λ(k)t} dk` of unstable modes and its
//! Laplace-method asymptotics near the most unstable wavenumber.

use serde::{Deserialize, Serialize};

use super::DispersionCurve;
use crate::error::{Error, Result};

/// Smooth bump `exp(1 - 1/(1 - x²))`, `x = (k - center)/half_width`, equal to
/// one at the center.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub center: f64,
    pub half_width: f64,
}

impl Envelope {
    pub fn eval(&self, k: f64) -> f64 {
        let x = (k - self.center) / self.half_width;
        if x.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - x * x)).exp()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WavepacketValue {
    pub t: f64,
    /// `∫ φ² ‖ṽ‖² e^{2σt} dk`.
    pub quadrature: f64,
    /// `φ(k0)² ‖ṽ(k0)‖² √(π/(β t)) e^{2σ0 t}`.
    pub laplace: f64,
}

impl WavepacketValue {
    pub fn ratio(&self) -> f64 {
        self.quadrature / self.laplace
    }
}

/// Natural cubic spline through `(xs, ys)`.
struct Spline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    m: Vec<f64>,
}

impl Spline {
    fn new(xs: &[f64], ys: &[f64]) -> Self {
        let n = xs.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            let mut t = crate::tridiag::Tridiagonal::<f64>::new(n - 2);
            let mut rhs = vec![0.0; n - 2];
            for i in 1..n - 1 {
                let (h0, h1) = (xs[i] - xs[i - 1], xs[i + 1] - xs[i]);
                t.lower[i - 1] = h0;
                t.diag[i - 1] = 2.0 * (h0 + h1);
                t.upper[i - 1] = h1;
                rhs[i - 1] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
            }
            t.solve_in_place(&mut rhs);
            m[1..n - 1].copy_from_slice(&rhs);
        }
        Self { xs: xs.to_vec(), ys: ys.to_vec(), m }
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let i = self.xs.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

fn simpson(lo: f64, hi: f64, intervals: usize, f: impl Fn(f64) -> f64) -> f64 {
    let m = intervals + intervals % 2;
    let h = (hi - lo) / m as f64;
    let mut s = f(lo) + f(hi);
    for i in 1..m {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(lo + i as f64 * h);
    }
    s * h / 3.0
}

/// Quadrature and Laplace prediction of the packet's squared L² norm at `t`.
/// `mode_norms[i]` is `‖ṽ(ks[i])‖` for the curve's samples.
pub fn wavepacket_norm(curve: &DispersionCurve, envelope: &Envelope, mode_norms: &[f64], t: f64) -> Result<WavepacketValue> {
    let band_lo = curve.ks.first().copied().unwrap_or(0.0).max(0.0);
    let band_hi = curve.ks.last().copied().unwrap_or(0.0).min(curve.mu_pred);
    let (lo, hi) = (envelope.center - envelope.half_width, envelope.center + envelope.half_width);
    if lo < band_lo || hi > band_hi || !(lo < curve.k0 && curve.k0 < hi) {
        return Err(Error::BandViolation { lo, hi, band_lo, band_hi });
    }
    if mode_norms.len() != curve.ks.len() {
        return Err(Error::InvalidInput("mode_norms must match the curve samples".into()));
    }
    let sigma = Spline::new(&curve.ks, &curve.sigmas);
    let norms = Spline::new(&curve.ks, mode_norms);
    let quadrature = simpson(lo, hi, 8000, |k| {
        let phi = envelope.eval(k);
        let nv = norms.eval(k);
        phi * phi * nv * nv * (2.0 * (sigma.eval(k) - curve.sigma0) * t).exp()
    }) * (2.0 * curve.sigma0 * t).exp();
    let (phi0, n0) = (envelope.eval(curve.k0), norms.eval(curve.k0));
    let laplace = phi0 * phi0 * n0 * n0 * (std::f64::consts::PI / (curve.beta_curv * t)).sqrt() * (2.0 * curve.sigma0 * t).exp();
    Ok(WavepacketValue { t, quadrature, laplace })
}

/// Packet integral with `σ` replaced by the majorant `σ0 - β(k - k0)²` and
/// unit weights over `|k - k0| ≤ w`: `(quadrature, closed form)`.
pub fn gaussian_majorant_check(sigma0: f64, beta: f64, k0: f64, half_width: f64, t: f64) -> (f64, f64) {
    let quad = simpson(k0 - half_width, k0 + half_width, 8000, |k| {
        (2.0 * t * (sigma0 - beta * (k - k0) * (k - k0))).exp()
    });
    let s = (2.0 * beta * t).sqrt();
    let closed = (2.0 * sigma0 * t).exp() * (std::f64::consts::PI).sqrt() / s * libm::erf(half_width * s);
    (quad, closed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spline_reproduces_cubic_interior() {
        let xs: Vec<f64> = (0..41).map(|i| i as f64 * 0.05).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        let s = Spline::new(&xs, &ys);
        assert!((s.eval(1.013) - 1.013f64.sin()).abs() < 1e-6);
    }

    #[test]
    fn majorant_closed_form() {
        let (q, c) = gaussian_majorant_check(0.1, 0.8, 0.3, 0.1, 25.0);
        assert!((q / c - 1.0).abs() < 1e-10);
    }
}
