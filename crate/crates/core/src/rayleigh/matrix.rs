//! Finite-difference discretization of the Rayleigh equation as the pencil
//! `A ψ = c B ψ`, `A = u(D² - k²) - u''`, `B = D² - k²`, used as an
//! independent check on the shooting solver.

use num_complex::Complex64;

use super::RayleighMode;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::profiles::ShearProfile;
use crate::tridiag::Tridiagonal;

/// Rows of `D² - k²` on unknowns `j = 1..n-1`, with `ψ(0) = 0` and the decay
/// condition `ψ' = -kψ` at `y_max` folded into the last row.
fn laplacian_rows(grid: &GridSpec, k: f64) -> Tridiagonal<f64> {
    let m = grid.n - 1;
    let h = grid.h();
    let h2 = h * h;
    let mut t = Tridiagonal::new(m);
    for i in 0..m {
        t.lower[i] = 1.0 / h2;
        t.diag[i] = -2.0 / h2 - k * k;
        t.upper[i] = 1.0 / h2;
    }
    t.lower[m - 1] = 2.0 / h2;
    t.diag[m - 1] = -(2.0 + 2.0 * h * k) / h2 - k * k;
    t
}

fn apply_real(t: &Tridiagonal<f64>, x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let mut s = x[i] * t.diag[i];
            if i > 0 {
                s += x[i - 1] * t.lower[i];
            }
            if i + 1 < n {
                s += x[i + 1] * t.upper[i];
            }
            s
        })
        .collect()
}

/// Eigenvalue of the pencil closest to `c_near`, by shift-invert iteration.
pub fn matrix_eigenvalue(profile: &ShearProfile, k: f64, c_near: Complex64) -> Result<Complex64> {
    let grid = profile.grid;
    let b = laplacian_rows(&grid, k);
    let m = grid.n - 1;
    let shift = c_near + Complex64::new(1e-7, 1e-7);
    let mut op = Tridiagonal::<Complex64>::new(m);
    for i in 0..m {
        let j = i + 1;
        let w = Complex64::new(profile.u[j], 0.0) - shift;
        op.lower[i] = w * b.lower[i];
        op.diag[i] = w * b.diag[i] - profile.u2[j];
        op.upper[i] = w * b.upper[i];
    }
    let lu = op.factor();
    let mut x: Vec<Complex64> = (0..m).map(|i| Complex64::new((-k * grid.node(i + 1)).exp(), 0.0)).collect();
    let mut estimate = c_near;
    for it in 0..100 {
        let mut y = apply_real(&b, &x);
        lu.solve_in_place(&mut y);
        let num: Complex64 = x.iter().map(|v| v.norm_sqr()).sum::<f64>().into();
        let den: Complex64 = x.iter().zip(&y).map(|(a, b)| a.conj() * b).sum();
        let next = shift + num / den;
        let norm = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        x = y.into_iter().map(|v| v / norm).collect();
        if it > 2 && (next - estimate).norm() < 1e-14 * next.norm().max(1.0) {
            return Ok(next);
        }
        estimate = next;
    }
    if estimate.is_finite() {
        Ok(estimate)
    } else {
        Err(Error::NoConvergence { iterations: 100, residual: f64::NAN })
    }
}

/// Richardson extrapolation of [`matrix_eigenvalue`] from `n` and `2n - 1` nodes.
pub fn matrix_eigenvalue_extrapolated(profile: &ShearProfile, k: f64, c_near: Complex64, n: usize) -> Result<Complex64> {
    let coarse_grid = GridSpec::new(profile.grid.y_max, n)?;
    let coarse = matrix_eigenvalue(&profile.resampled(coarse_grid), k, c_near)?;
    let fine = matrix_eigenvalue(&profile.resampled(coarse_grid.refined()), k, c_near)?;
    Ok((fine * 4.0 - coarse) / 3.0)
}

/// Max over interior nodes of the 3-point Rayleigh residual of a mode,
/// relative to `sup|ψ|`.
pub fn collocation_residual(profile: &ShearProfile, mode: &RayleighMode) -> f64 {
    let h = mode.grid.h();
    let k2 = mode.k * mode.k;
    let sup = mode.psi.iter().map(|p| p.norm()).fold(0.0, f64::max);
    (1..mode.grid.n - 1)
        .map(|j| {
            let p = &mode.psi;
            let d2 = (p[j + 1] - p[j] * 2.0 + p[j - 1]) / (h * h);
            let r = (Complex64::new(profile.u[j], 0.0) - mode.c) * (d2 - p[j] * k2) - p[j] * profile.u2[j];
            r.norm()
        })
        .fold(0.0, f64::max)
        / sup
}
