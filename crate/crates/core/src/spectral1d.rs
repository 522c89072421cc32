//! Negative spectrum of `S = -∂² - K` on `[0, y_max]` with Dirichlet ends,
//! the quadratic form `Q(u) = ∫ |u'|² - K|u|²` and the test-function
//! construction showing `Q` takes negative values.
//!
//! The operator is the 3-point finite-difference matrix on interior nodes.
//! The quadratic form is evaluated on the same stencil (forward differences
//! on cells) so that `Q(u) = λ‖u‖²` holds to rounding for discrete
//! eigenvectors.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{trapezoid, GridSpec};
use crate::tridiag::Tridiagonal;

/// Eigenvalues in `(-TOL_EDGE, 0)` are treated as the essential-spectrum edge.
pub const TOL_EDGE: f64 = 1e-6;
/// Largest admissible `K(y_max)`.
pub const DECAY_LIMIT: f64 = 1e-6;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SturmLiouvilleResult {
    pub grid: GridSpec,
    /// Negative eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    pub mu: Option<f64>,
    /// Full-grid eigenvectors (zero at both ends), `h Σ u² = 1`, first
    /// nonzero entry positive. Written to CSV rather than JSON.
    #[serde(skip)]
    pub eigenfunctions: Vec<Vec<f64>>,
}

impl SturmLiouvilleResult {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string_pretty(self)?;
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }

    /// Columns `y, phi_0, phi_1, ...`.
    pub fn write_eigenfunctions_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("y");
        for i in 0..self.eigenfunctions.len() {
            out.push_str(&format!(",phi_{i}"));
        }
        out.push('\n');
        for j in 0..self.grid.n {
            out.push_str(&format!("{:.12e}", self.grid.node(j)));
            for f in &self.eigenfunctions {
                out.push_str(&format!(",{:.12e}", f[j]));
            }
            out.push('\n');
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub lambda: f64,
    pub sturm_value: f64,
}

fn check_potential(k: &[f64], grid: &GridSpec) -> Result<()> {
    if k.len() != grid.n {
        return Err(Error::InvalidInput(format!("potential has {} samples, grid has {}", k.len(), grid.n)));
    }
    let tail = k[grid.n - 1];
    if tail > DECAY_LIMIT {
        return Err(Error::PotentialNotDecayed { value: tail, limit: DECAY_LIMIT });
    }
    Ok(())
}

/// Number of eigenvalues of the interior matrix strictly below `s`.
pub fn sturm_count(k: &[f64], grid: &GridSpec, s: f64) -> usize {
    let h2 = grid.h() * grid.h();
    let off2 = 1.0 / (h2 * h2);
    let mut count = 0;
    let mut d = 1.0;
    for (i, &kj) in k.iter().enumerate().take(grid.n - 1).skip(1) {
        let a = 2.0 / h2 - kj - s;
        d = if i == 1 { a } else { a - off2 / d };
        if d == 0.0 {
            d = -f64::EPSILON * off2.sqrt();
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `index`-th eigenvalue (0-based, ascending) by bisection on the Sturm count.
fn bisect_eigenvalue(k: &[f64], grid: &GridSpec, index: usize, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 4.0 * f64::EPSILON * mid.abs().max(1e-300) {
            break;
        }
        if sturm_count(k, grid, mid) > index {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn operator_matrix(k: &[f64], grid: &GridSpec, shift: f64) -> Tridiagonal<f64> {
    let m = grid.n - 2;
    let h2 = grid.h() * grid.h();
    let mut t = Tridiagonal::new(m);
    for i in 0..m {
        t.diag[i] = 2.0 / h2 - k[i + 1] - shift;
        t.lower[i] = -1.0 / h2;
        t.upper[i] = -1.0 / h2;
    }
    t
}

/// Eigenvector for an eigenvalue located to rounding, by inverse iteration.
/// Returns `(Rayleigh quotient, normalized full-grid vector)`.
fn eigenvector(k: &[f64], grid: &GridSpec, lambda: f64) -> (f64, Vec<f64>) {
    let m = grid.n - 2;
    let shift = lambda - 1e-10 * lambda.abs().max(1.0);
    let lu = operator_matrix(k, grid, shift).factor();
    let mut x: Vec<f64> = (0..m).map(|i| 1.0 + 0.1 * ((i as f64) * 0.7).sin()).collect();
    for _ in 0..4 {
        lu.solve_in_place(&mut x);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
    }
    let mut full = Vec::with_capacity(grid.n);
    full.push(0.0);
    full.extend_from_slice(&x);
    full.push(0.0);
    let h = grid.h();
    let norm = (h * full.iter().map(|v| v * v).sum::<f64>()).sqrt();
    let sign = full.iter().find(|v| v.abs() > 1e-14).map_or(1.0, |v| v.signum());
    full.iter_mut().for_each(|v| *v *= sign / norm);
    let rq = quadratic_form_unchecked(&full, k, h) / l2_norm_sq(&full, h);
    (rq, full)
}

/// Lowest eigenvalue and eigenfunction, or `None` when the discrete spectrum
/// has nothing below `-TOL_EDGE`.
pub fn lowest_eigenvalue(k: &[f64], grid: &GridSpec) -> Result<Option<(f64, Vec<f64>)>> {
    check_potential(k, grid)?;
    if sturm_count(k, grid, -TOL_EDGE) == 0 {
        return Ok(None);
    }
    let kmax = k.iter().cloned().fold(0.0, f64::max);
    let lambda = bisect_eigenvalue(k, grid, 0, -kmax - 1.0, -TOL_EDGE);
    Ok(Some(eigenvector(k, grid, lambda)))
}

/// All eigenvalues below `-TOL_EDGE` with their eigenfunctions.
pub fn negative_spectrum(k: &[f64], grid: &GridSpec) -> Result<SturmLiouvilleResult> {
    check_potential(k, grid)?;
    let count = sturm_count(k, grid, -TOL_EDGE);
    let kmax = k.iter().cloned().fold(0.0, f64::max);
    let mut eigenvalues = Vec::with_capacity(count);
    let mut eigenfunctions = Vec::with_capacity(count);
    for index in 0..count {
        let lambda = bisect_eigenvalue(k, grid, index, -kmax - 1.0, -TOL_EDGE);
        let (rq, f) = eigenvector(k, grid, lambda);
        eigenvalues.push(rq);
        eigenfunctions.push(f);
    }
    let mu = eigenvalues.first().map(|l| (-l).sqrt());
    Ok(SturmLiouvilleResult { grid: *grid, eigenvalues, mu, eigenfunctions })
}

/// Lowest eigenvalue of the potential `k_fn`, doubling `y_max` (at fixed
/// spacing) until doubling moves it by less than `1e-6`.
pub fn lowest_eigenvalue_converged(
    k_fn: impl Fn(f64) -> f64,
    grid: GridSpec,
) -> Result<(Option<f64>, GridSpec)> {
    let sample = |g: &GridSpec| g.nodes().into_iter().map(&k_fn).collect::<Vec<_>>();
    let mut g = grid;
    let mut current = lowest_eigenvalue(&sample(&g), &g)?.map(|p| p.0);
    for _ in 0..6 {
        let wider = GridSpec { y_max: 2.0 * g.y_max, n: 2 * (g.n - 1) + 1 };
        let next = lowest_eigenvalue(&sample(&wider), &wider)?.map(|p| p.0);
        let settled = match (current, next) {
            (Some(a), Some(b)) => (a - b).abs() <= 1e-6,
            (None, None) => true,
            _ => false,
        };
        if settled {
            return Ok((current, g));
        }
        g = wider;
        current = next;
    }
    Ok((current, g))
}

fn l2_norm_sq(u: &[f64], h: f64) -> f64 {
    let sq: Vec<f64> = u.iter().map(|v| v * v).collect();
    trapezoid(&sq, h)
}

fn quadratic_form_unchecked(u: &[f64], k: &[f64], h: f64) -> f64 {
    let grad: f64 = u.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum::<f64>() / h;
    let pot: Vec<f64> = u.iter().zip(k).map(|(v, kk)| kk * v * v).collect();
    grad - trapezoid(&pot, h)
}

/// `Q(u) = ∫ |u'|² - K|u|²` with cell differences for `u'` and the
/// trapezoidal rule for the potential term.
pub fn quadratic_form(u: &[f64], k: &[f64], grid: &GridSpec) -> Result<f64> {
    if u.len() != grid.n || k.len() != grid.n {
        return Err(Error::InvalidInput("quadratic form: length mismatch".into()));
    }
    if u[0] != 0.0 {
        return Err(Error::BoundaryViolation { value: u[0] });
    }
    Ok(quadratic_form_unchecked(u, k, grid.h()))
}

/// `Q(u) / ‖u‖²`.
pub fn rayleigh_quotient(u: &[f64], k: &[f64], grid: &GridSpec) -> Result<f64> {
    Ok(quadratic_form(u, k, grid)? / l2_norm_sq(u, grid.h()))
}

/// Quintic smoothstep cutoff: `1` on `[0, 1]`, `0` from `2` on, C² in between.
pub fn cutoff(s: f64) -> f64 {
    if s <= 1.0 {
        1.0
    } else if s >= 2.0 {
        0.0
    } else {
        let x = s - 1.0;
        1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
    }
}

/// `2 sech²(y - center)`.
pub fn tanh_potential(y: f64, center: f64) -> f64 {
    let s = 1.0 / (y - center).cosh();
    2.0 * s * s
}

/// The two-branch test function: a cutoff ramp `tanh(δ-η) χ(n(1 - y/δ))`
/// below `δ` and `tanh(y-η) χ(y/n)` above.
///
/// Requires `n ≥ 2` (so the ramp reaches zero at the wall) and `n ≥ δ` (so
/// both branches agree at `δ`).
pub fn test_function_w(eta: f64, n: usize, delta: f64, grid: &GridSpec) -> Result<Vec<f64>> {
    let nf = n as f64;
    if !(eta > 0.0 && delta > 0.0) {
        return Err(Error::InvalidInput("test function needs eta > 0 and delta > 0".into()));
    }
    if n < 2 || nf < delta {
        return Err(Error::InvalidInput(format!("test function needs n >= max(2, delta) (got n = {n})")));
    }
    if grid.y_max < 2.0 * nf {
        return Err(Error::InvalidInput(format!("test function needs y_max >= 2n = {}", 2 * n)));
    }
    let v_delta = (delta - eta).tanh();
    Ok(grid
        .nodes()
        .into_iter()
        .map(|y| {
            if y <= delta {
                v_delta * cutoff(nf * (1.0 - y / delta))
            } else {
                (y - eta).tanh() * cutoff(y / nf)
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFormReport {
    /// `Q(w)` for the test-function family member.
    pub value: f64,
    /// `∂_η` of the limiting functional `∫_δ^∞ |v_η'|² - K_δ v_η²`.
    pub gradient_eta: f64,
}

/// Composite Simpson rule for the tail integrals on `[delta, delta + 40]`.
fn tail_integral(delta: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (len, m) = (40.0, 40_000usize);
    let h = len / m as f64;
    let mut s = f(delta) + f(delta + len);
    for i in 1..m {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(delta + i as f64 * h);
    }
    s * h / 3.0
}

/// Limiting functional `Q(η) = ∫_δ^∞ |v_η'|² - K_δ v_η²` with `v_η = tanh(· - η)`.
pub fn limit_functional(eta: f64, delta: f64) -> f64 {
    tail_integral(delta, |y| {
        let t = (y - eta).tanh();
        let d = 1.0 - t * t;
        d * d - tanh_potential(y, delta) * t * t
    })
}

/// `∂_η Q(η) = ∫_δ^∞ 2 v_η v_η' (K_η + K_δ)`.
pub fn limit_functional_gradient(eta: f64, delta: f64) -> f64 {
    tail_integral(delta, |y| {
        let t = (y - eta).tanh();
        2.0 * t * (1.0 - t * t) * (tanh_potential(y, eta) + tanh_potential(y, delta))
    })
}

pub fn quadratic_form_report(eta: f64, n: usize, delta: f64, grid: &GridSpec) -> Result<QuadraticFormReport> {
    let w = test_function_w(eta, n, delta, grid)?;
    let k: Vec<f64> = grid.nodes().into_iter().map(|y| tanh_potential(y, delta)).collect();
    Ok(QuadraticFormReport { value: quadratic_form(&w, &k, grid)?, gradient_eta: limit_functional_gradient(eta, delta) })
}

/// Onset `η₀ ∈ (0, δ)` of negativity of the limiting functional: `Q(η) < 0`
/// on `(η₀, δ)`. `None` when `Q` stays negative on all of `(0, δ)`.
pub fn locate_eta0(delta: f64) -> Option<f64> {
    let (mut lo, mut hi) = (1e-9, delta * (1.0 - 1e-6));
    if limit_functional(lo, delta) < 0.0 {
        return None;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if limit_functional(mid, delta) < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// `|Q(u) - ∫ φ² |(u/φ)'|²|` with `φ = tanh(· - δ)`, `δ` a grid node and
/// `u` vanishing at `0` and `δ`.
///
/// The weighted integral uses cell weights `φ_j φ_{j+1}`; `u/φ` at `δ` is
/// filled by one-sided second-order extrapolation.
pub fn factorization_residual(u: &[f64], k: &[f64], delta: f64, grid: &GridSpec) -> Result<f64> {
    let q = quadratic_form(u, k, grid)?;
    let h = grid.h();
    let jd = grid.nearest(delta);
    if (grid.node(jd) - delta).abs() > 1e-9 * h.max(delta) {
        return Err(Error::InvalidInput(format!("delta = {delta} is not a grid node")));
    }
    if u[jd] != 0.0 {
        return Err(Error::BoundaryViolation { value: u[jd] });
    }
    let phi: Vec<f64> = grid.nodes().into_iter().map(|y| (y - delta).tanh()).collect();
    let mut v: Vec<f64> = u.iter().zip(&phi).map(|(a, b)| if *b == 0.0 { 0.0 } else { a / b }).collect();
    v[jd] = one_sided_limit(&v, jd);
    let weighted: f64 = (0..grid.n - 1)
        .map(|j| {
            let dv = v[j + 1] - v[j];
            phi[j] * phi[j + 1] * dv * dv
        })
        .sum::<f64>()
        / h;
    Ok((q - weighted).abs())
}

fn one_sided_limit(v: &[f64], j: usize) -> f64 {
    let left = (j >= 2).then(|| 2.0 * v[j - 1] - v[j - 2]);
    let right = (j + 2 < v.len()).then(|| 2.0 * v[j + 1] - v[j + 2]);
    match (left, right) {
        (Some(l), Some(r)) => 0.5 * (l + r),
        (Some(l), None) => l,
        (None, Some(r)) => r,
        (None, None) => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn potential(grid: &GridSpec, depth: f64, center: f64) -> Vec<f64> {
        grid.nodes().into_iter().map(|y| 0.5 * depth * tanh_potential(y, center)).collect()
    }

    #[test]
    fn free_operator_has_no_negative_eigenvalue() {
        let g = GridSpec::new(20.0, 401).unwrap();
        let k = vec![0.0; g.n];
        assert!(lowest_eigenvalue(&k, &g).unwrap().is_none());
        assert!(negative_spectrum(&k, &g).unwrap().eigenvalues.is_empty());
    }

    #[test]
    fn undecayed_potential_is_rejected() {
        let g = GridSpec::new(5.0, 101).unwrap();
        let k = potential(&g, 2.0, 4.0);
        assert!(matches!(lowest_eigenvalue(&k, &g), Err(Error::PotentialNotDecayed { .. })));
    }

    #[test]
    fn sturm_count_matches_dense_eigendecomposition() {
        let g = GridSpec::new(30.0, 601).unwrap();
        let k = potential(&g, 8.0, 5.0);
        let m = g.n - 2;
        let h2 = g.h() * g.h();
        let a = nalgebra::DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                2.0 / h2 - k[i + 1]
            } else if i.abs_diff(j) == 1 {
                -1.0 / h2
            } else {
                0.0
            }
        });
        let eig = nalgebra::SymmetricEigen::new(a).eigenvalues;
        for s in [-5.0, -2.0, -1.0, -0.3, -1e-3, 0.5, 3.0] {
            let dense = eig.iter().filter(|&&l| l < s).count();
            assert_eq!(sturm_count(&k, &g, s), dense, "shift {s}");
        }
    }

    #[test]
    fn ground_state_has_no_interior_zero() {
        let g = GridSpec::new(30.0, 3001).unwrap();
        let k = potential(&g, 2.0, 1.0);
        let (lambda, f) = lowest_eigenvalue(&k, &g).unwrap().unwrap();
        assert!(lambda < 0.0);
        assert!(f[1..g.n - 1].iter().all(|&v| v > 0.0));
        assert_eq!(f[0], 0.0);
    }

    #[test]
    fn cutoff_is_c2() {
        let e = 1e-5;
        for s in [1.0, 2.0] {
            let d1 = |x: f64| (cutoff(x + e) - cutoff(x - e)) / (2.0 * e);
            assert!(d1(s).abs() < 1e-6);
            let d2 = (cutoff(s + e) - 2.0 * cutoff(s) + cutoff(s - e)) / (e * e);
            assert!(d2.abs() < 1e-3);
        }
    }

    #[test]
    fn test_function_needs_n_at_least_two() {
        let g = GridSpec::new(20.0, 201).unwrap();
        assert!(test_function_w(0.5, 1, 0.7, &g).is_err());
        let w = test_function_w(0.5, 2, 0.7, &g).unwrap();
        assert_eq!(w[0], 0.0);
    }
}
