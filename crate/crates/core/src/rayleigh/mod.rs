//! Inviscid instability of shear flows: unstable solutions of the Rayleigh
//! equation `(u - c)(ψ'' - k²ψ) - u''ψ = 0`, the dispersion curve `σ(k)`,
//! the linearized Euler evolution at fixed wavenumber and wave-packet
//! asymptotics.

mod dispersion;
mod lineuler;
mod matrix;
mod wavepacket;

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::ode::{integrate, Tolerance};
use crate::profiles::ShearProfile;

pub use dispersion::{parabola_vertex, trace_dispersion, DispersionCurve};
pub use lineuler::{evolve_linearized_euler, sobolev_level_norm, vorticity_of, Forcing, LinEulerConfig, LinEulerRun};
pub use matrix::{collocation_residual, matrix_eigenvalue, matrix_eigenvalue_extrapolated};
pub use wavepacket::{gaussian_majorant_check, wavepacket_norm, Envelope, WavepacketValue};

pub const NEWTON_TOL: f64 = 1e-10;
pub const MAX_NEWTON: usize = 50;
/// Iterates with `Im c` at or below this are declared stable.
pub const LHP_TOL: f64 = 1e-8;
/// Newton steps landing this close to the critical layer are halved.
pub const CRITICAL_LAYER_TOL: f64 = 1e-6;

/// Converged unstable mode `ψ(y) e^{ik(x - ct)}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RayleighMode {
    pub k: f64,
    pub c: Complex64,
    /// `k Im c`.
    pub sigma: f64,
    /// `λ = -ikc`.
    pub lambda_c: Complex64,
    pub grid: GridSpec,
    /// Sampled on `grid`, `sup|ψ| = 1` with `ψ` real and positive at its peak,
    /// `ψ(0) = 0`.
    #[serde(skip)]
    pub psi: Vec<Complex64>,
    /// `|ψ(0)| / sup|ψ|` before the wall value was set to zero.
    pub residual: f64,
    pub iterations: usize,
}

impl RayleighMode {
    fn new(k: f64, c: Complex64, grid: GridSpec, psi: Vec<Complex64>, residual: f64, iterations: usize) -> Self {
        Self {
            k,
            c,
            sigma: k * c.im,
            lambda_c: Complex64::new(k * c.im, -k * c.re),
            grid,
            psi,
            residual,
            iterations,
        }
    }

    /// Discrete L² norm of `ψ`.
    pub fn l2_norm(&self) -> f64 {
        let h = self.grid.h();
        (h * self.psi.iter().map(|p| p.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// CSV with columns `y,re_psi,im_psi`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("y,re_psi,im_psi\n");
        for (j, p) in self.psi.iter().enumerate() {
            out.push_str(&format!("{:.12e},{:.12e},{:.12e}\n", self.grid.node(j), p.re, p.im));
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }
}

/// One downward shot: `ψ` on the grid plus `ψ(0)` and `∂ψ(0)/∂c`.
struct Shot {
    psi: Vec<Complex64>,
    psi0: Complex64,
    dpsi0_dc: Complex64,
    sup: f64,
}

fn shoot(profile: &ShearProfile, k: f64, c: Complex64, keep: bool) -> Shot {
    let grid = profile.grid;
    let n = grid.n;
    let k2 = k * k;
    // State: ψ, ψ', ∂_c ψ, ∂_c ψ'.
    let mut rhs = |y: f64, s: &[Complex64; 4]| {
        let [u, _, u2] = profile.eval(y);
        let inv = 1.0 / (Complex64::new(u, 0.0) - c);
        let q = inv * u2;
        [s[1], s[0] * k2 + q * s[0], s[3], s[2] * k2 + q * s[2] + q * inv * s[0]]
    };
    let zero = Complex64::new(0.0, 0.0);
    let mut state = [Complex64::new(1.0, 0.0), Complex64::new(-k, 0.0), zero, zero];
    let mut psi = if keep { vec![zero; n] } else { Vec::new() };
    if keep {
        psi[n - 1] = state[0];
    }
    let mut sup = 1.0f64;
    let mut h = grid.h();
    let tol = Tolerance::default();
    for j in (0..n - 1).rev() {
        integrate(&mut rhs, grid.node(j + 1), grid.node(j), &mut state, &mut h, tol);
        if keep {
            psi[j] = state[0];
        }
        sup = sup.max(state[0].norm());
    }
    Shot { psi, psi0: state[0], dpsi0_dc: state[2], sup }
}

fn critical_gap(profile: &ShearProfile, c: Complex64) -> f64 {
    profile.u.iter().map(|&u| (Complex64::new(u, 0.0) - c).norm()).fold(f64::INFINITY, f64::min)
}

/// Newton iteration on `c ↦ ψ(0; c)` for the solution decaying like `e^{-ky}`.
pub fn solve_mode(profile: &ShearProfile, k: f64, c_guess: Complex64) -> Result<RayleighMode> {
    if !(k > 0.0) {
        return Err(Error::InvalidInput(format!("wavenumber must be positive (got {k})")));
    }
    if !(c_guess.im > 0.0) {
        return Err(Error::InvalidInput(format!("initial guess must have Im c > 0 (got {c_guess})")));
    }
    let mut c = c_guess;
    let mut residual = f64::INFINITY;
    for it in 0..=MAX_NEWTON {
        let shot = shoot(profile, k, c, false);
        residual = shot.psi0.norm() / shot.sup;
        if residual < NEWTON_TOL {
            let mut shot = shoot(profile, k, c, true);
            let (jmax, peak) = shot
                .psi
                .iter()
                .enumerate()
                .map(|(j, p)| (j, p.norm()))
                .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
            let scale = shot.psi[jmax].conj() / (peak * peak);
            shot.psi.iter_mut().for_each(|p| *p *= scale);
            shot.psi[0] = Complex64::new(0.0, 0.0);
            return Ok(RayleighMode::new(k, c, profile.grid, shot.psi, residual, it));
        }
        if it == MAX_NEWTON {
            break;
        }
        let step = -shot.psi0 / shot.dpsi0_dc;
        if !step.is_finite() {
            break;
        }
        let mut next = c + step;
        let mut halvings = 0;
        while (next.im <= LHP_TOL || critical_gap(profile, next) < CRITICAL_LAYER_TOL) && halvings < 8 {
            next = c + step * 0.5f64.powi(halvings + 1);
            halvings += 1;
        }
        if next.im <= LHP_TOL {
            return Err(Error::LeftHalfPlane { re: next.re, im: next.im });
        }
        c = next;
    }
    Err(Error::NoConvergence { iterations: MAX_NEWTON, residual })
}

/// `u0 + 0.1 i (μ - k)/μ`, the guess suggested by the bifurcation from the
/// neutral mode `c = u0` at `k = μ`.
pub fn seed_guess(profile: &ShearProfile, k: f64, mu: f64) -> Complex64 {
    let u0 = profile.inflection.map_or(0.0, |i| i.u0);
    Complex64::new(u0, (0.1 * (mu - k) / mu).max(1e-3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{build_tanh_profile, match_navier_condition};

    fn matched() -> ShearProfile {
        let m = match_navier_condition(1.0).unwrap();
        build_tanh_profile(m.params, m.params.default_grid()).unwrap()
    }

    #[test]
    fn unstable_mode_below_band_edge() {
        let p = matched();
        let mu = 0.5;
        let k = 0.25;
        let mode = solve_mode(&p, k, seed_guess(&p, k, mu)).unwrap();
        assert!(mode.sigma > 0.0);
        assert!(mode.residual < NEWTON_TOL);
        assert_eq!(mode.lambda_c.re, mode.sigma);
        assert_eq!(mode.psi[0], Complex64::new(0.0, 0.0));
    }
}
