use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{seed_guess, solve_mode};
use crate::error::{Error, Result};
use crate::profiles::ShearProfile;

/// Growth rate `σ(k) = k Im c(k)` sampled on `k > 0`; `σ(-k) = σ(k)` by symmetry.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct DispersionCurve {
    pub ks: Vec<f64>,
    pub c_re: Vec<f64>,
    pub c_im: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub k0: f64,
    pub sigma0: f64,
    /// `-σ''(k0)`.
    pub beta_curv: f64,
    pub c0: Complex64,
    pub mu_pred: f64,
}

#[derive(Serialize)]
struct Summary {
    k0: f64,
    sigma0: f64,
    beta_curv: f64,
    mu_pred: f64,
}

impl DispersionCurve {
    /// `σ` at `k` by linear interpolation of the samples.
    pub fn sigma_at(&self, k: f64) -> f64 {
        interp(&self.ks, &self.sigmas, k)
    }

    pub fn c_at(&self, k: f64) -> Complex64 {
        Complex64::new(interp(&self.ks, &self.c_re, k), interp(&self.ks, &self.c_im, k))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("k,re_c,im_c,sigma\n");
        for i in 0..self.ks.len() {
            out.push_str(&format!(
                "{:.12e},{:.12e},{:.12e},{:.12e}\n",
                self.ks[i], self.c_re[i], self.c_im[i], self.sigmas[i]
            ));
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }

    pub fn write_summary_json(&self, path: &Path) -> Result<()> {
        let s = Summary { k0: self.k0, sigma0: self.sigma0, beta_curv: self.beta_curv, mu_pred: self.mu_pred };
        std::fs::write(path, serde_json::to_string_pretty(&s)?).map_err(|e| Error::io(path, e))
    }
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if n == 0 {
        return f64::NAN;
    }
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = xs.partition_point(|&v| v <= x) - 1;
    let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] * (1.0 - t) + ys[i + 1] * t
}

/// Vertex of the parabola through three points: `(x_v, y_v, y'')`.
pub fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> (f64, f64, f64) {
    let d01 = (y[1] - y[0]) / (x[1] - x[0]);
    let d12 = (y[2] - y[1]) / (x[2] - x[1]);
    let a = (d12 - d01) / (x[2] - x[0]);
    let b = d01 - a * (x[0] + x[1]);
    let xv = -b / (2.0 * a);
    let yv = y[1] + (xv - x[1]) * (b + a * (xv + x[1]));
    (xv, yv, 2.0 * a)
}

/// Solves at `k` from `guess`, falling back to the generic seed guess.
fn solve_with_fallback(profile: &ShearProfile, k: f64, guess: Complex64, mu: f64) -> Option<Complex64> {
    solve_mode(profile, k, guess)
        .or_else(|_| solve_mode(profile, k, seed_guess(profile, k, mu)))
        .ok()
        .map(|m| m.c)
}

/// Continuation in `k` over `n_samples` points of `[k_lo, k_hi]`, starting
/// near `μ/2` and marching both ways.
pub fn trace_dispersion(profile: &ShearProfile, mu: f64, k_lo: f64, k_hi: f64, n_samples: usize) -> Result<DispersionCurve> {
    if !(0.0 < k_lo && k_lo < k_hi && n_samples >= 3) {
        return Err(Error::InvalidInput(format!("bad k range [{k_lo}, {k_hi}] with {n_samples} samples")));
    }
    let ks: Vec<f64> = (0..n_samples).map(|i| k_lo + (k_hi - k_lo) * i as f64 / (n_samples - 1) as f64).collect();
    let start = ks
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - 0.5 * mu).abs().total_cmp(&(b.1 - 0.5 * mu).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut cs: Vec<Option<Complex64>> = vec![None; n_samples];
    let seed = seed_guess(profile, ks[start], mu);
    cs[start] = solve_with_fallback(profile, ks[start], seed, mu);

    let mut broken: Option<f64> = None;
    for dir in [1isize, -1] {
        let mut history: Vec<(f64, Complex64)> = cs[start].map(|c| vec![(ks[start], c)]).unwrap_or_default();
        let mut failures = if cs[start].is_some() { 0 } else { 1 };
        let mut i = start as isize + dir;
        while i >= 0 && (i as usize) < n_samples {
            let k = ks[i as usize];
            let guess = match history.as_slice() {
                [.., (k1, c1), (k2, c2)] => {
                    let g = c2 + (c2 - c1) * ((k - k2) / (k2 - k1));
                    Complex64::new(g.re, g.im.max(0.5 * c2.im))
                }
                [(_, c)] => *c,
                [] => seed_guess(profile, k, mu),
            };
            match solve_with_fallback(profile, k, guess, mu) {
                Some(c) => {
                    cs[i as usize] = Some(c);
                    history.push((k, c));
                    failures = 0;
                }
                None => {
                    failures += 1;
                    if failures >= 3 {
                        broken = Some(k);
                        break;
                    }
                }
            }
            i += dir;
        }
        if broken.is_some() {
            break;
        }
    }

    let mut curve = DispersionCurve { mu_pred: mu, ..Default::default() };
    for (k, c) in ks.iter().zip(&cs) {
        if let Some(c) = c {
            curve.ks.push(*k);
            curve.c_re.push(c.re);
            curve.c_im.push(c.im);
            curve.sigmas.push(k * c.im);
        }
    }
    if let Some(at_k) = broken {
        return Err(Error::ContinuationBroken { at_k, partial: Box::new(curve) });
    }
    if curve.ks.len() < 3 {
        let at_k = ks[start];
        return Err(Error::ContinuationBroken { at_k, partial: Box::new(curve) });
    }
    refine_peak(profile, &mut curve, mu)?;
    Ok(curve)
}

/// Parabolic fit over the three largest samples, then two passes with the
/// stencil narrowed to a total width of `0.02 μ`.
fn refine_peak(profile: &ShearProfile, curve: &mut DispersionCurve, mu: f64) -> Result<()> {
    let n = curve.ks.len();
    let imax = (0..n).max_by(|&a, &b| curve.sigmas[a].total_cmp(&curve.sigmas[b])).unwrap_or(0);
    let i = imax.clamp(1, n - 2);
    let (mut k0, _, _) = parabola_vertex(
        [curve.ks[i - 1], curve.ks[i], curve.ks[i + 1]],
        [curve.sigmas[i - 1], curve.sigmas[i], curve.sigmas[i + 1]],
    );
    if !k0.is_finite() {
        k0 = curve.ks[imax];
    }
    let half = 0.01 * mu;
    let mut result = (k0, curve.sigmas[imax], f64::NAN, curve.c_at(k0));
    for _ in 0..2 {
        let xs = [k0 - half, k0, k0 + half];
        let mut ys = [0.0; 3];
        let mut c_mid = Complex64::new(0.0, 0.0);
        for (slot, &k) in xs.iter().enumerate() {
            let c = solve_mode(profile, k, curve.c_at(k))?.c;
            ys[slot] = k * c.im;
            if slot == 1 {
                c_mid = c;
            }
        }
        let (kv, sv, d2) = parabola_vertex(xs, ys);
        result = (kv, sv, -d2, c_mid);
        k0 = kv;
    }
    let c0 = solve_mode(profile, result.0, result.3)?.c;
    curve.k0 = result.0;
    curve.sigma0 = result.1.max(result.0 * c0.im);
    curve.beta_curv = result.2;
    curve.c0 = c0;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_of_exact_parabola() {
        let f = |x: f64| 2.0 - 3.0 * (x - 0.4) * (x - 0.4);
        let (xv, yv, d2) = parabola_vertex([0.1, 0.3, 0.8], [f(0.1), f(0.3), f(0.8)]);
        assert!((xv - 0.4).abs() < 1e-12);
        assert!((yv - 2.0).abs() < 1e-12);
        assert!((d2 + 6.0).abs() < 1e-12);
    }
}
