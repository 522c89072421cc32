//! Linearized Euler equation around `(u_s(y), 0)` for a single wavenumber,
//! in vorticity form `∂_t ω + ik(u_s ω + u_s'' Ψ) = f`, `(k² - ∂²) Ψ = ω`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{linear_fit, GridSpec};
use crate::profiles::ShearProfile;
use crate::tridiag::{Tridiagonal, TridiagonalLu};

/// Largest `dt k max|u_s|` accepted for classical RK4 on the advective part.
pub const RK4_CFL_BOUND: f64 = 2.5;

/// Source `f(t, y) = C_w e^{λ' t} (1 + t)^{-α} g(y)` in the vorticity equation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Forcing {
    pub amplitude: f64,
    pub rate: f64,
    pub alpha: f64,
    /// Spatial shape `g` sampled on the grid.
    pub shape: Vec<Complex64>,
}

impl Forcing {
    /// `y² e^{-y}` shape, smooth and vanishing at the wall.
    pub fn standard(grid: &GridSpec, amplitude: f64, rate: f64, alpha: f64) -> Self {
        let shape = grid.nodes().into_iter().map(|y| Complex64::new(y * y * (-y).exp(), 0.0)).collect();
        Self { amplitude, rate, alpha, shape }
    }

    fn envelope(&self, t: f64) -> f64 {
        self.amplitude * (self.rate * t).exp() / (1.0 + t).powf(self.alpha)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinEulerConfig {
    pub k: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Sobolev levels recorded.
    pub levels: Vec<usize>,
    /// Fraction of the run (from the end) used for the growth fit.
    pub fit_fraction: f64,
}

impl LinEulerConfig {
    pub fn new(k: f64, dt: f64, t_end: f64) -> Self {
        Self { k, dt, t_end, levels: vec![0, 1, 2], fit_fraction: 0.3 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinEulerRun {
    pub k: f64,
    pub forcing: Option<Forcing>,
    pub levels: Vec<usize>,
    pub times: Vec<f64>,
    /// `norms[i][n]` is `‖u(t_n)‖_{levels[i]}`.
    pub norms: Vec<Vec<f64>>,
    /// Fitted exponent of the level-0 norm over the terminal window.
    pub growth_exponent: f64,
}

struct Operator {
    k: f64,
    u: Vec<f64>,
    u2: Vec<f64>,
    poisson: TridiagonalLu<f64>,
}

impl Operator {
    fn new(profile: &ShearProfile, k: f64) -> Self {
        let grid = profile.grid;
        let m = grid.n - 1;
        let h = grid.h();
        let h2 = h * h;
        // (k² - D²) on nodes 1..n-1, Ψ(0) = 0, Ψ' = -kΨ at y_max.
        let mut t = Tridiagonal::new(m);
        for i in 0..m {
            t.lower[i] = -1.0 / h2;
            t.diag[i] = 2.0 / h2 + k * k;
            t.upper[i] = -1.0 / h2;
        }
        t.lower[m - 1] = -2.0 / h2;
        t.diag[m - 1] = (2.0 + 2.0 * h * k) / h2 + k * k;
        Self { k, u: profile.u.clone(), u2: profile.u2.clone(), poisson: t.factor() }
    }

    fn streamfunction(&self, omega: &[Complex64]) -> Vec<Complex64> {
        let mut rhs = omega[1..].to_vec();
        self.poisson.solve_in_place(&mut rhs);
        let mut psi = Vec::with_capacity(omega.len());
        psi.push(Complex64::new(0.0, 0.0));
        psi.extend(rhs);
        psi
    }

    fn rhs(&self, omega: &[Complex64], forcing: Option<(&Forcing, f64)>) -> Vec<Complex64> {
        let psi = self.streamfunction(omega);
        let ik = Complex64::new(0.0, self.k);
        let mut out: Vec<Complex64> =
            (0..omega.len()).map(|j| -ik * (omega[j] * self.u[j] + psi[j] * self.u2[j])).collect();
        if let Some((f, t)) = forcing {
            let e = f.envelope(t);
            out.iter_mut().zip(&f.shape).for_each(|(o, g)| *o += g * e);
        }
        out
    }
}

/// `‖u‖²_{H^l} + ‖ω‖²_{H^l}` for the velocity `u = (Ψ', -ikΨ)` of one mode,
/// with `‖f‖²_{H^l} = Σ_{a+b ≤ l} k^{2a} ‖∂^b f‖²`; returns the square root.
pub fn sobolev_level_norm(psi: &[Complex64], omega: &[Complex64], k: f64, h: f64, level: usize) -> f64 {
    let n = psi.len();
    let d1 = |f: &[Complex64]| -> Vec<Complex64> {
        (0..n)
            .map(|j| {
                if j == 0 {
                    (f[1] - f[0]) / h
                } else if j == n - 1 {
                    (f[n - 1] - f[n - 2]) / h
                } else {
                    (f[j + 1] - f[j - 1]) / (2.0 * h)
                }
            })
            .collect()
    };
    let ik = Complex64::new(0.0, k);
    let u1 = d1(psi);
    let u2: Vec<Complex64> = psi.iter().map(|p| -ik * p).collect();
    let mut total = 0.0;
    for f in [u1, u2, omega.to_vec()] {
        let mut deriv = f;
        for b in 0..=level {
            let sq = h * deriv.iter().map(|v| v.norm_sqr()).sum::<f64>();
            // Σ_{a ≤ l - b} k^{2a}
            let weight: f64 = (0..=level - b).map(|a| k.powi(2 * a as i32)).sum();
            total += weight * sq;
            if b < level {
                deriv = d1(&deriv);
            }
        }
    }
    total.sqrt()
}

/// RK4 integration from vorticity `omega0`; `omega0` may be derived from a
/// Rayleigh mode by `ω = (k² - ∂²)ψ`.
pub fn evolve_linearized_euler(
    profile: &ShearProfile,
    config: &LinEulerConfig,
    omega0: &[Complex64],
    forcing: Option<Forcing>,
) -> Result<LinEulerRun> {
    let k = config.k;
    let umax = profile.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cfl = config.dt * k * umax;
    if cfl > RK4_CFL_BOUND {
        return Err(Error::CflViolation { cfl, bound: RK4_CFL_BOUND });
    }
    if omega0.len() != profile.grid.n {
        return Err(Error::InvalidInput("initial vorticity does not match the grid".into()));
    }
    let op = Operator::new(profile, k);
    let h = profile.grid.h();
    let steps = (config.t_end / config.dt).round() as usize;
    let dt = config.dt;
    let mut omega = omega0.to_vec();
    let mut times = Vec::with_capacity(steps + 1);
    let mut norms = vec![Vec::with_capacity(steps + 1); config.levels.len()];
    let record = |omega: &[Complex64], t: f64, times: &mut Vec<f64>, norms: &mut Vec<Vec<f64>>| {
        let psi = op.streamfunction(omega);
        times.push(t);
        for (i, &l) in config.levels.iter().enumerate() {
            norms[i].push(sobolev_level_norm(&psi, omega, k, h, l));
        }
    };
    record(&omega, 0.0, &mut times, &mut norms);
    let f = forcing.as_ref();
    for s in 0..steps {
        let t = s as f64 * dt;
        let add = |a: &[Complex64], b: &[Complex64], c: f64| -> Vec<Complex64> {
            a.iter().zip(b).map(|(x, y)| x + y * c).collect()
        };
        let k1 = op.rhs(&omega, f.map(|f| (f, t)));
        let k2 = op.rhs(&add(&omega, &k1, 0.5 * dt), f.map(|f| (f, t + 0.5 * dt)));
        let k3 = op.rhs(&add(&omega, &k2, 0.5 * dt), f.map(|f| (f, t + 0.5 * dt)));
        let k4 = op.rhs(&add(&omega, &k3, dt), f.map(|f| (f, t + dt)));
        for j in 0..omega.len() {
            omega[j] += (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (dt / 6.0);
        }
        record(&omega, t + dt, &mut times, &mut norms);
    }
    let growth_exponent = fit_terminal_exponent(&times, &norms[0], config.fit_fraction);
    Ok(LinEulerRun { k, forcing, levels: config.levels.clone(), times, norms, growth_exponent })
}

fn fit_terminal_exponent(times: &[f64], values: &[f64], fraction: f64) -> f64 {
    let n = times.len();
    let start = ((1.0 - fraction) * n as f64) as usize;
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        (start..n).filter(|&i| values[i] > 0.0).map(|i| (times[i], values[i].ln())).unzip();
    if xs.len() < 2 {
        return f64::NAN;
    }
    linear_fit(&xs, &ys).0
}

/// Vorticity `(k² - ∂²)ψ` of a sampled streamfunction (zero at the ends).
pub fn vorticity_of(psi: &[Complex64], k: f64, h: f64) -> Vec<Complex64> {
    let n = psi.len();
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    for j in 1..n - 1 {
        w[j] = psi[j] * (k * k) - (psi[j + 1] - psi[j] * 2.0 + psi[j - 1]) / (h * h);
    }
    w[n - 1] = psi[n - 1] * (k * k) - (psi[n - 2] * 2.0 - psi[n - 1] * (2.0 + 2.0 * h * k)) / (h * h);
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{build_tanh_profile, TanhProfileParams};

    #[test]
    fn zero_data_stays_zero() {
        let params = TanhProfileParams::new(1.0, 0.5).unwrap();
        let p = build_tanh_profile(params, GridSpec::new(15.0, 301).unwrap()).unwrap();
        let cfg = LinEulerConfig::new(0.3, 0.1, 2.0);
        let run = evolve_linearized_euler(&p, &cfg, &vec![Complex64::new(0.0, 0.0); 301], None).unwrap();
        assert!(run.norms.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn cfl_guard() {
        let params = TanhProfileParams::new(1.0, 0.5).unwrap();
        let p = build_tanh_profile(params, GridSpec::new(15.0, 301).unwrap()).unwrap();
        let cfg = LinEulerConfig::new(1.0, 5.0, 10.0);
        let err = evolve_linearized_euler(&p, &cfg, &vec![Complex64::new(0.0, 0.0); 301], None).unwrap_err();
        assert!(matches!(err, Error::CflViolation { .. }));
    }
}
