//! Boundary-layer base flow: `∂_t ū = D ∂²_Y ū` on `[0, Y_max]` with the
//! Robin wall condition `½ ∂_Y ū(0) = A ū(0)` and `∂_Y ū(Y_max) = 0`.
//!
//! Crank–Nicolson in time. The wall row eliminates the ghost value
//! `ū_{-1} = ū_1 - 4hA ū_0`, which keeps second order up to the boundary.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{trapezoid, GridSpec};
use crate::profiles::ShearProfile;
use crate::tridiag::{Tridiagonal, TridiagonalLu};

pub const DEFAULT_Y_MAX: f64 = 50.0;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BaseFlowState {
    pub t: f64,
    pub grid: GridSpec,
    pub ubar: Vec<f64>,
    /// `A` in `½ ∂_Y ū(0) = A ū(0)`.
    pub robin_coef: f64,
    /// Pointwise diffusivity `D(Y)`.
    pub diffusivity: Vec<f64>,
}

impl BaseFlowState {
    pub fn new(grid: GridSpec, ubar: Vec<f64>, robin_coef: f64) -> Result<Self> {
        Self::with_diffusivity(grid, ubar, robin_coef, 1.0)
    }

    pub fn with_diffusivity(grid: GridSpec, ubar: Vec<f64>, robin_coef: f64, diffusivity: f64) -> Result<Self> {
        if ubar.len() != grid.n {
            return Err(Error::InvalidInput(format!("state has {} values, grid has {}", ubar.len(), grid.n)));
        }
        if !(diffusivity >= 0.0) {
            return Err(Error::InvalidInput("diffusivity must be nonnegative".into()));
        }
        Ok(Self { t: 0.0, grid, ubar, robin_coef, diffusivity: vec![diffusivity; grid.n] })
    }

    /// Samples `u_s` on `grid`.
    pub fn from_profile(profile: &ShearProfile, grid: GridSpec, robin_coef: f64) -> Result<Self> {
        let ubar = grid.nodes().into_iter().map(|y| profile.eval(y)[0]).collect();
        Self::new(grid, ubar, robin_coef)
    }

    /// `|½ (ū_1 - ū_{-1})/(2h) - A ū_0|` with the ghost value the scheme
    /// eliminates; zero up to rounding by construction.
    pub fn robin_residual_centered(&self) -> f64 {
        let h = self.grid.h();
        let (u0, u1) = (self.ubar[0], self.ubar[1]);
        let ghost = u1 - 4.0 * h * self.robin_coef * u0;
        (0.5 * (u1 - ghost) / (2.0 * h) - self.robin_coef * u0).abs()
    }

    /// Robin residual with a one-sided second-order derivative; `O(h²)`.
    pub fn robin_residual_one_sided(&self) -> f64 {
        let h = self.grid.h();
        let u = &self.ubar;
        let d = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
        (0.5 * d - self.robin_coef * u[0]).abs()
    }

    pub fn sup_norm(&self) -> f64 {
        self.ubar.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `Σ w_j ū_j²` with trapezoid weights; the scheme's natural energy.
    pub fn energy(&self) -> f64 {
        let sq: Vec<f64> = self.ubar.iter().map(|v| v * v).collect();
        trapezoid(&sq, self.grid.h())
    }

    /// Trapezoid integral of `ū`.
    pub fn mass(&self) -> f64 {
        trapezoid(&self.ubar, self.grid.h())
    }

    /// CSV with columns `Y,ubar`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("Y,ubar\n");
        for (j, v) in self.ubar.iter().enumerate() {
            out.push_str(&format!("{:.12e},{:.12e}\n", self.grid.node(j), v));
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }
}

/// Rows of `D ∂²` with the Robin ghost row at the wall and Neumann at `Y_max`.
pub fn robin_laplacian(grid: &GridSpec, robin_coef: f64, diffusivity: &[f64]) -> Tridiagonal<f64> {
    let n = grid.n;
    let h = grid.h();
    let h2 = h * h;
    let mut l = Tridiagonal::new(n);
    for j in 1..n - 1 {
        l.lower[j] = diffusivity[j] / h2;
        l.diag[j] = -2.0 * diffusivity[j] / h2;
        l.upper[j] = diffusivity[j] / h2;
    }
    l.diag[0] = -(2.0 + 4.0 * h * robin_coef) * diffusivity[0] / h2;
    l.upper[0] = 2.0 * diffusivity[0] / h2;
    l.lower[n - 1] = 2.0 * diffusivity[n - 1] / h2;
    l.diag[n - 1] = -2.0 * diffusivity[n - 1] / h2;
    l
}

/// Crank–Nicolson stepper with the implicit matrix factored once.
#[derive(Clone, Debug)]
pub struct CrankNicolson {
    dt: f64,
    explicit: Tridiagonal<f64>,
    implicit: TridiagonalLu<f64>,
}

impl CrankNicolson {
    pub fn new(grid: &GridSpec, robin_coef: f64, diffusivity: &[f64], dt: f64) -> Self {
        let l = robin_laplacian(grid, robin_coef, diffusivity);
        let mut explicit = l.clone();
        let mut implicit = l;
        for j in 0..grid.n {
            explicit.lower[j] *= 0.5 * dt;
            explicit.upper[j] *= 0.5 * dt;
            explicit.diag[j] = 1.0 + 0.5 * dt * explicit.diag[j];
            implicit.lower[j] *= -0.5 * dt;
            implicit.upper[j] *= -0.5 * dt;
            implicit.diag[j] = 1.0 - 0.5 * dt * implicit.diag[j];
        }
        Self { dt, explicit, implicit: implicit.factor() }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// One step; `source` (if any) is added as `dt · source` on the right.
    pub fn step(&self, u: &mut [f64], source: Option<&[f64]>) {
        let mut rhs = self.explicit.apply(u);
        if let Some(s) = source {
            rhs.iter_mut().zip(s).for_each(|(r, s)| *r += self.dt * s);
        }
        self.implicit.solve_in_place(&mut rhs);
        u.copy_from_slice(&rhs);
    }
}

pub fn step_crank_nicolson(state: &BaseFlowState, dt: f64) -> Result<BaseFlowState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("time step must be positive (got {dt})")));
    }
    let cn = CrankNicolson::new(&state.grid, state.robin_coef, &state.diffusivity, dt);
    let mut next = state.clone();
    cn.step(&mut next.ubar, None);
    next.t += dt;
    Ok(next)
}

/// Advances `state` to `t_end` in steps of at most `dt`.
pub fn evolve(state: &BaseFlowState, dt: f64, t_end: f64) -> Result<BaseFlowState> {
    let span = t_end - state.t;
    if span <= 0.0 {
        return Ok(state.clone());
    }
    let steps = (span / dt).ceil() as usize;
    let dt = span / steps as f64;
    let cn = CrankNicolson::new(&state.grid, state.robin_coef, &state.diffusivity, dt);
    let mut next = state.clone();
    for _ in 0..steps {
        cn.step(&mut next.ubar, None);
    }
    next.t = t_end;
    Ok(next)
}

/// Largest `dt` for which a Crank–Nicolson step keeps the discrete maximum
/// principle (`A ≥ 0`): the explicit half must have nonnegative coefficients.
pub fn max_principle_dt(grid: &GridSpec, robin_coef: f64, diffusivity: f64) -> f64 {
    let h = grid.h();
    h * h / (diffusivity * (1.0 + 2.0 * h * robin_coef.max(0.0)))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DriftConfig {
    pub eps: f64,
    /// Heat-time step.
    pub dt: f64,
    pub step_budget: usize,
    pub grid: GridSpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DriftSeries {
    pub eps: f64,
    /// Rescaled times `t ∈ [0, ε^{-1/32}]`.
    pub t: Vec<f64>,
    /// L² norm of `(ū(√ε t) - u_s)/ε^{1/8}`.
    pub l0: Vec<f64>,
    /// H¹ norm of the same difference.
    pub drift_norm: Vec<f64>,
    pub max_drift: f64,
}

impl DriftSeries {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("t,drift_norm\n");
        for (t, d) in self.t.iter().zip(&self.drift_norm) {
            out.push_str(&format!("{:.12e},{:.12e}\n", t, d));
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }
}

/// `(L², H¹)` norms of a grid function, derivative by centered differences.
pub fn h1_norms(f: &[f64], h: f64) -> (f64, f64) {
    let n = f.len();
    let sq: Vec<f64> = f.iter().map(|v| v * v).collect();
    let d: Vec<f64> = (0..n)
        .map(|j| {
            if j == 0 {
                (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
            } else if j == n - 1 {
                (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h)
            } else {
                (f[j + 1] - f[j - 1]) / (2.0 * h)
            }
        })
        .collect();
    let dsq: Vec<f64> = d.iter().map(|v| v * v).collect();
    let l2 = trapezoid(&sq, h);
    (l2.sqrt(), (l2 + trapezoid(&dsq, h)).sqrt())
}

/// Drift of the base flow from its initial profile over the rescaled window
/// `t ≤ ε^{-1/32}`, heat time `√ε t`.
pub fn baseflow_drift(profile: &ShearProfile, robin_coef: f64, config: &DriftConfig) -> Result<DriftSeries> {
    let eps = config.eps;
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("eps must be positive".into()));
    }
    let t_window = eps.powf(-1.0 / 32.0);
    let heat_end = eps.sqrt() * t_window;
    let steps = (heat_end / config.dt).ceil() as usize;
    if steps > config.step_budget {
        return Err(Error::WindowTooLong { steps, budget: config.step_budget });
    }
    let dt = heat_end / steps as f64;
    let mut state = BaseFlowState::from_profile(profile, config.grid, robin_coef)?;
    let initial = state.ubar.clone();
    let cn = CrankNicolson::new(&config.grid, robin_coef, &state.diffusivity, dt);
    let scale = eps.powf(-1.0 / 8.0);
    let h = config.grid.h();
    let mut series = DriftSeries { eps, t: Vec::new(), l0: Vec::new(), drift_norm: Vec::new(), max_drift: 0.0 };
    for s in 0..=steps {
        if s > 0 {
            cn.step(&mut state.ubar, None);
        }
        let diff: Vec<f64> = state.ubar.iter().zip(&initial).map(|(a, b)| (a - b) * scale).collect();
        let (l0, l1) = h1_norms(&diff, h);
        series.t.push(s as f64 * dt / eps.sqrt());
        series.l0.push(l0);
        series.drift_norm.push(l1);
        series.max_drift = series.max_drift.max(l1);
    }
    Ok(series)
}
