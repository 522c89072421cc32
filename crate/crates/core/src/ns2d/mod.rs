//! Two-dimensional incompressible Navier–Stokes (and Euler) on the strip
//! `[0, Lx) × [0, Y_max]`, periodic in `x`, in vorticity–streamfunction form.
//!
//! Conventions: `u = (∂_y ψ, -∂_x ψ)`, `ω = ∂_x u₂ - ∂_y u₁ = -Δψ`. A real
//! field is stored through its Fourier modes `m = 0..=M` only; the modes
//! `-m` are the conjugates. The mean mode is carried as the mean velocity
//! `U(y)` rather than its vorticity `-U'`.
//!
//! With `u₂ = 0` at the wall the Navier condition `½ ∂_y u₁ = A u₁` becomes
//! the Dirichlet condition `ω = -2A u₁` on the wall vorticity, imposed
//! exactly at every step by superposing a homogeneous solution.

mod energy;
mod io;

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::heat_robin::CrankNicolson;
use crate::profiles::NavierParams;
use crate::tridiag::{Tridiagonal, TridiagonalLu};

pub use energy::{EnergyLedger, LedgerRow};
pub use io::{read_snapshot, write_ledger_csv, write_slice_csv, write_snapshot};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Kinematic viscosity; `0` selects the Euler solver.
    pub nu: f64,
    /// `A` in `½ ∂_y u₁ = A u₁` at the wall.
    pub robin_coef: f64,
    pub lx: f64,
    /// Highest Fourier mode `M`.
    pub modes: usize,
    pub ny: usize,
    pub y_max: f64,
    pub dt: f64,
    /// Largest accepted `dt (max|u₁|/dx + max|u₂|/dy)`.
    pub cfl_bound: f64,
    /// Largest accepted bound on `sup|ω|`.
    pub blowup_guard: f64,
}

impl SolverConfig {
    pub fn navier_stokes(navier: NavierParams, lx: f64, modes: usize, ny: usize, y_max: f64, dt: f64) -> Self {
        Self {
            nu: navier.eps,
            robin_coef: navier.wall_coefficient(),
            lx,
            modes,
            ny,
            y_max,
            dt,
            cfl_bound: 0.5,
            blowup_guard: 1e6,
        }
    }

    /// Same grid with `ν = 0` and no wall closure.
    pub fn euler(&self) -> Self {
        Self { nu: 0.0, robin_coef: 0.0, ..self.clone() }
    }

    pub fn is_euler(&self) -> bool {
        self.nu == 0.0
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.y_max, self.ny)
    }

    /// `2π m / Lx`.
    pub fn wavenumber(&self, m: usize) -> f64 {
        2.0 * std::f64::consts::PI * m as f64 / self.lx
    }

    /// Physical `x` points used for products: the smallest 5-smooth size
    /// `≥ 3M + 1`, which removes quadratic aliasing.
    pub fn nx(&self) -> usize {
        let mut n = 3 * self.modes + 1;
        loop {
            let mut r = n;
            for p in [2, 3, 5] {
                while r.is_multiple_of(p) {
                    r /= p;
                }
            }
            if r == 1 {
                return n;
            }
            n += 1;
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.nu >= 0.0 && self.lx > 0.0 && self.dt > 0.0 && self.y_max > 0.0) || self.ny < 5 || self.modes < 1 {
            return Err(Error::InvalidInput(format!("invalid solver configuration: {self:?}")));
        }
        Ok(())
    }
}

/// Spectral-in-`x`, grid-in-`y` representation of a real 2D field.
#[derive(Clone, Debug, PartialEq)]
pub struct Field2D {
    pub t: f64,
    pub lx: f64,
    pub grid: GridSpec,
    /// Mean velocity `U(y)` (mode 0 of `u₁`).
    pub mean: Vec<f64>,
    /// `ω̂_m(y)` for `m = 1..=M` (index `m - 1`).
    pub omega: Vec<Vec<Complex64>>,
    /// `ψ̂_m(y)` for `m = 1..=M`.
    pub psi: Vec<Vec<Complex64>>,
}

impl Field2D {
    pub fn zeros(config: &SolverConfig) -> Result<Self> {
        let grid = config.grid()?;
        Ok(Self {
            t: 0.0,
            lx: config.lx,
            grid,
            mean: vec![0.0; grid.n],
            omega: vec![vec![ZERO; grid.n]; config.modes],
            psi: vec![vec![ZERO; grid.n]; config.modes],
        })
    }

    pub fn modes(&self) -> usize {
        self.omega.len()
    }

    fn k(&self, m: usize) -> f64 {
        2.0 * std::f64::consts::PI * m as f64 / self.lx
    }

    /// Vorticity coefficient for `m ∈ -M..=M`; negative modes are conjugates.
    pub fn omega_coefficient(&self, m: i64, j: usize) -> Complex64 {
        match m {
            0 => Complex64::new(-mean_derivative(&self.mean, self.grid.h(), j), 0.0),
            m if m > 0 => self.omega[m as usize - 1][j],
            m => self.omega[(-m) as usize - 1][j].conj(),
        }
    }

    /// Streamfunction coefficient for `m ∈ -M..=M`; the mean streamfunction
    /// is `∫₀^y U`.
    pub fn psi_coefficient(&self, m: i64, j: usize) -> Complex64 {
        match m {
            0 => {
                let h = self.grid.h();
                let s: f64 = (1..=j).map(|i| 0.5 * h * (self.mean[i - 1] + self.mean[i])).sum();
                Complex64::new(s, 0.0)
            }
            m if m > 0 => self.psi[m as usize - 1][j],
            m => self.psi[(-m) as usize - 1][j].conj(),
        }
    }

    /// `(û₁, û₂)` of mode `m ≥ 1` at node `j`.
    pub fn velocity(&self, m: usize, j: usize) -> (Complex64, Complex64) {
        let k = self.k(m);
        let psi = &self.psi[m - 1];
        (psi_derivative(psi, self.grid.h(), k, j), Complex64::new(0.0, -k) * psi[j])
    }

    /// Largest discrete divergence `|ik û₁ + ∂_y û₂|` over modes and interior nodes.
    pub fn max_divergence(&self) -> f64 {
        let h = self.grid.h();
        let mut worst = 0.0f64;
        for m in 1..=self.modes() {
            let k = self.k(m);
            let ik = Complex64::new(0.0, k);
            let psi = &self.psi[m - 1];
            for j in 1..self.grid.n - 1 {
                let u1 = psi_derivative(psi, h, k, j);
                let du2 = -ik * (psi[j + 1] - psi[j - 1]) / (2.0 * h);
                worst = worst.max((ik * u1 + du2).norm());
            }
        }
        worst
    }

    /// `max_m |ω̂_m(0) + 2A û₁,m(0)|`.
    pub fn wall_closure_residual(&self, robin_coef: f64) -> f64 {
        let mut modes = 0.0f64;
        for m in 1..=self.modes() {
            let (u1, _) = self.velocity(m, 0);
            modes = modes.max((self.omega[m - 1][0] + u1 * (2.0 * robin_coef)).norm());
        }
        modes
    }

    /// Physical values on `nx` equispaced points: `(u₁, u₂, ω)` indexed `[j][l]`.
    pub fn physical(&self, nx: usize) -> [Vec<Vec<f64>>; 3] {
        let plan = FftPlanner::new().plan_fft_inverse(nx);
        let h = self.grid.h();
        let rows: Vec<[Vec<f64>; 3]> = (0..self.grid.n)
            .into_par_iter()
            .map(|j| {
                let mut u1 = vec![ZERO; nx];
                let mut u2 = vec![ZERO; nx];
                let mut w = vec![ZERO; nx];
                u1[0] = Complex64::new(self.mean[j], 0.0);
                w[0] = Complex64::new(-mean_derivative(&self.mean, h, j), 0.0);
                for m in 1..=self.modes().min((nx - 1) / 2) {
                    let (a, b) = self.velocity(m, j);
                    put_mode(&mut u1, m, a);
                    put_mode(&mut u2, m, b);
                    put_mode(&mut w, m, self.omega[m - 1][j]);
                }
                for buf in [&mut u1, &mut u2, &mut w] {
                    plan.process(buf);
                }
                [re(&u1), re(&u2), re(&w)]
            })
            .collect();
        let mut out = [Vec::new(), Vec::new(), Vec::new()];
        for row in rows {
            let [a, b, c] = row;
            out[0].push(a);
            out[1].push(b);
            out[2].push(c);
        }
        out
    }

    /// Bound `Σ_m |ω̂_m|` on `sup|ω|`.
    pub fn vorticity_bound(&self) -> f64 {
        let h = self.grid.h();
        (0..self.grid.n)
            .map(|j| {
                mean_derivative(&self.mean, h, j).abs()
                    + 2.0 * self.omega.iter().map(|w| w[j].norm()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

fn re(v: &[Complex64]) -> Vec<f64> {
    v.iter().map(|z| z.re).collect()
}

fn put_mode(buf: &mut [Complex64], m: usize, value: Complex64) {
    let n = buf.len();
    buf[m] = value;
    buf[n - m] = value.conj();
}

/// `U'` at node `j`: centered inside, second-order one-sided at the ends.
fn mean_derivative(u: &[f64], h: f64, j: usize) -> f64 {
    let n = u.len();
    if j == 0 {
        (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h)
    } else if j == n - 1 {
        (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * h)
    } else {
        (u[j + 1] - u[j - 1]) / (2.0 * h)
    }
}

/// `∂_y ψ̂` at node `j`; uses `ψ(0) = 0` at the wall and the decay
/// condition `ψ' = -kψ` at the top.
fn psi_derivative(psi: &[Complex64], h: f64, k: f64, j: usize) -> Complex64 {
    let n = psi.len();
    if j == 0 {
        (psi[1] * 4.0 - psi[2]) / (2.0 * h)
    } else if j == n - 1 {
        -psi[n - 1] * k
    } else {
        (psi[j + 1] - psi[j - 1]) / (2.0 * h)
    }
}

fn complex_derivative(f: &[Complex64], h: f64, j: usize) -> Complex64 {
    let n = f.len();
    if j == 0 {
        (f[1] * 4.0 - f[0] * 3.0 - f[2]) / (2.0 * h)
    } else if j == n - 1 {
        (f[n - 1] * 3.0 - f[n - 2] * 4.0 + f[n - 3]) / (2.0 * h)
    } else {
        (f[j + 1] - f[j - 1]) / (2.0 * h)
    }
}

/// Per-mode implicit operators.
struct ModeOps {
    k: f64,
    /// `(D² - k²) ψ = -ω` on nodes `1..n-1` with the decay row at the top.
    poisson: TridiagonalLu<f64>,
    /// `I - ½ dt ν (D² - k²)` on interior nodes `1..n-2`.
    implicit: Option<TridiagonalLu<f64>>,
    /// Homogeneous response to a unit wall vorticity.
    omega_h: Vec<Complex64>,
    psi_h: Vec<Complex64>,
    u_h: f64,
}

impl ModeOps {
    fn new(k: f64, grid: &GridSpec, nu: f64, dt: f64) -> Self {
        let n = grid.n;
        let h = grid.h();
        let h2 = h * h;
        let mut p = Tridiagonal::new(n - 1);
        for i in 0..n - 1 {
            p.lower[i] = 1.0 / h2;
            p.diag[i] = -2.0 / h2 - k * k;
            p.upper[i] = 1.0 / h2;
        }
        p.lower[n - 2] = 2.0 / h2;
        p.diag[n - 2] = -(2.0 + 2.0 * h * k) / h2 - k * k;
        let poisson = p.factor();

        let mut ops = Self { k, poisson, implicit: None, omega_h: Vec::new(), psi_h: Vec::new(), u_h: 0.0 };
        if nu > 0.0 {
            let r = 0.5 * dt * nu;
            let mut a = Tridiagonal::new(n - 2);
            for i in 0..n - 2 {
                a.lower[i] = -r / h2;
                a.diag[i] = 1.0 + r * (2.0 / h2 + k * k);
                a.upper[i] = -r / h2;
            }
            let implicit = a.factor();
            let mut rhs = vec![0.0; n - 2];
            rhs[0] = r / h2;
            implicit.solve_in_place(&mut rhs);
            let mut omega_h = vec![ZERO; n];
            omega_h[0] = Complex64::new(1.0, 0.0);
            for i in 0..n - 2 {
                omega_h[i + 1] = Complex64::new(rhs[i], 0.0);
            }
            let psi_h = ops.streamfunction(&omega_h);
            ops.u_h = psi_derivative(&psi_h, h, k, 0).re;
            ops.omega_h = omega_h;
            ops.psi_h = psi_h;
            ops.implicit = Some(implicit);
        }
        ops
    }

    fn streamfunction(&self, omega: &[Complex64]) -> Vec<Complex64> {
        let n = omega.len();
        let mut rhs: Vec<Complex64> = omega[1..].iter().map(|w| -w).collect();
        self.poisson.solve_in_place(&mut rhs);
        let mut psi = Vec::with_capacity(n);
        psi.push(ZERO);
        psi.extend(rhs);
        psi
    }
}

/// Nonlinear terms of one evaluation.
struct Nonlinear {
    /// `(u·∇ω)^_m` for `m = 1..=M`.
    modes: Vec<Vec<Complex64>>,
    /// `-∂_y ⟨u₁ u₂⟩` for the mean velocity.
    mean: Vec<f64>,
    max_u1: f64,
    max_u2: f64,
}

/// Time stepper: Crank–Nicolson for viscous terms, AB2 for advection with
/// a second-order Runge–Kutta start.
pub struct Solver {
    config: SolverConfig,
    grid: GridSpec,
    nx: usize,
    ops: Vec<ModeOps>,
    mean_cn: Option<CrankNicolson>,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
    previous: Option<Nonlinear>,
    steps: usize,
}

impl Solver {
    pub fn new(config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let grid = config.grid()?;
        let ops = (1..=config.modes)
            .into_par_iter()
            .map(|m| ModeOps::new(config.wavenumber(m), &grid, config.nu, config.dt))
            .collect();
        let mean_cn = (config.nu > 0.0)
            .then(|| CrankNicolson::new(&grid, config.robin_coef, &vec![config.nu; grid.n], config.dt));
        let nx = config.nx();
        let mut planner = FftPlanner::new();
        Ok(Self {
            fft_fwd: planner.plan_fft_forward(nx),
            fft_inv: planner.plan_fft_inverse(nx),
            config,
            grid,
            nx,
            ops,
            mean_cn,
            previous: None,
            steps: 0,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    /// Builds a field from streamfunction modes `ψ̂_m` (`m = 1..=M`) and the
    /// mean velocity; vorticity follows from `ω = -Δψ` and the wall closure.
    pub fn field_from_streamfunction(&self, mean: Vec<f64>, psi: Vec<Vec<Complex64>>) -> Result<Field2D> {
        let n = self.grid.n;
        if mean.len() != n || psi.len() != self.config.modes || psi.iter().any(|p| p.len() != n) {
            return Err(Error::InvalidInput("initial data does not match the solver grid".into()));
        }
        let h = self.grid.h();
        let mut field = Field2D::zeros(&self.config)?;
        field.mean = mean;
        for (m, p) in psi.into_iter().enumerate() {
            let op = &self.ops[m];
            let k2 = op.k * op.k;
            let mut w = vec![ZERO; n];
            for j in 1..n - 1 {
                w[j] = p[j] * k2 - (p[j + 1] - p[j] * 2.0 + p[j - 1]) / (h * h);
            }
            let psi_new = op.streamfunction(&w);
            w[0] = if self.config.is_euler() {
                // -ψ''(0) by a one-sided stencil.
                -(p[1] * -5.0 + p[2] * 4.0 - p[3]) / (h * h)
            } else {
                psi_derivative(&psi_new, h, op.k, 0) * (-2.0 * self.config.robin_coef)
            };
            field.omega[m] = w;
            field.psi[m] = psi_new;
        }
        Ok(field)
    }

    /// Recomputes `ψ` from `ω` (and the wall closure) after external edits.
    pub fn sync_streamfunction(&self, field: &mut Field2D) {
        for (m, op) in self.ops.iter().enumerate() {
            field.psi[m] = op.streamfunction(&field.omega[m]);
        }
    }

    fn nonlinear(&self, field: &Field2D) -> Nonlinear {
        let n = self.grid.n;
        let h = self.grid.h();
        let big_m = self.config.modes;
        let nx = self.nx;
        // y-derivatives per mode first.
        let derivs: Vec<(Vec<Complex64>, Vec<Complex64>)> = (0..big_m)
            .into_par_iter()
            .map(|m| {
                let k = self.ops[m].k;
                let u1 = (0..n).map(|j| psi_derivative(&field.psi[m], h, k, j)).collect();
                let wy = (0..n).map(|j| complex_derivative(&field.omega[m], h, j)).collect();
                (u1, wy)
            })
            .collect();
        let mean_d1: Vec<f64> = (0..n).map(|j| mean_derivative(&field.mean, h, j)).collect();
        let mean_d2: Vec<f64> = (0..n).map(|j| mean_derivative(&mean_d1, h, j)).collect();

        let rows: Vec<(Vec<Complex64>, f64, f64, f64)> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut u1 = vec![ZERO; nx];
                let mut u2 = vec![ZERO; nx];
                let mut wx = vec![ZERO; nx];
                let mut wy = vec![ZERO; nx];
                u1[0] = Complex64::new(field.mean[j], 0.0);
                wy[0] = Complex64::new(-mean_d2[j], 0.0);
                let mut reynolds = 0.0;
                for m in 0..big_m {
                    let ik = Complex64::new(0.0, self.ops[m].k);
                    let a = derivs[m].0[j];
                    let b = -ik * field.psi[m][j];
                    reynolds += 2.0 * (a * b.conj()).re;
                    put_mode(&mut u1, m + 1, a);
                    put_mode(&mut u2, m + 1, b);
                    put_mode(&mut wx, m + 1, ik * field.omega[m][j]);
                    put_mode(&mut wy, m + 1, derivs[m].1[j]);
                }
                let mut scratch = vec![ZERO; self.fft_inv.get_inplace_scratch_len()];
                for buf in [&mut u1, &mut u2, &mut wx, &mut wy] {
                    self.fft_inv.process_with_scratch(buf, &mut scratch);
                }
                let (mut m1, mut m2) = (0.0f64, 0.0f64);
                let mut prod: Vec<Complex64> = (0..nx)
                    .map(|l| {
                        m1 = m1.max(u1[l].re.abs());
                        m2 = m2.max(u2[l].re.abs());
                        Complex64::new(u1[l].re * wx[l].re + u2[l].re * wy[l].re, 0.0)
                    })
                    .collect();
                let mut scratch = vec![ZERO; self.fft_fwd.get_inplace_scratch_len()];
                self.fft_fwd.process_with_scratch(&mut prod, &mut scratch);
                let scale = 1.0 / nx as f64;
                let modes = (1..=big_m).map(|m| prod[m] * scale).collect();
                (modes, reynolds, m1, m2)
            })
            .collect();

        let mut modes = vec![vec![ZERO; n]; big_m];
        let mut reynolds = vec![0.0; n];
        let (mut max_u1, mut max_u2) = (0.0f64, 0.0f64);
        for (j, (row, r, a, b)) in rows.into_iter().enumerate() {
            for m in 0..big_m {
                modes[m][j] = row[m];
            }
            reynolds[j] = r;
            max_u1 = max_u1.max(a);
            max_u2 = max_u2.max(b);
        }
        let mean = (0..n).map(|j| -mean_derivative(&reynolds, h, j)).collect();
        Nonlinear { modes, mean, max_u1, max_u2 }
    }

    fn check_cfl(&self, nl: &Nonlinear) -> Result<()> {
        let dx = self.config.lx / (2 * self.config.modes + 1) as f64;
        let cfl = self.config.dt * (nl.max_u1 / dx + nl.max_u2 / self.grid.h());
        if cfl > self.config.cfl_bound {
            return Err(Error::CflViolation { cfl, bound: self.config.cfl_bound });
        }
        Ok(())
    }

    /// Applies diffusion and the advective increment `-dt·adv` to every mode.
    fn advance(&self, base: &Field2D, adv_modes: &[Vec<Complex64>], adv_mean: &[f64]) -> Field2D {
        let n = self.grid.n;
        let h2 = self.grid.h() * self.grid.h();
        let dt = self.config.dt;
        let mut out = base.clone();
        out.t = base.t + dt;

        out.mean = base.mean.clone();
        match &self.mean_cn {
            Some(cn) => cn.step(&mut out.mean, Some(adv_mean)),
            None => out.mean.iter_mut().zip(adv_mean).for_each(|(u, s)| *u += dt * s),
        }

        let updated: Vec<(Vec<Complex64>, Vec<Complex64>)> = (0..self.config.modes)
            .into_par_iter()
            .map(|m| {
                let op = &self.ops[m];
                let w = &base.omega[m];
                let adv = &adv_modes[m];
                match &op.implicit {
                    None => {
                        let mut next = w.clone();
                        for j in 0..n - 1 {
                            next[j] -= adv[j] * dt;
                        }
                        next[n - 1] = ZERO;
                        let psi = op.streamfunction(&next);
                        (next, psi)
                    }
                    Some(implicit) => {
                        let r = 0.5 * dt * self.config.nu;
                        let k2 = op.k * op.k;
                        let mut rhs: Vec<Complex64> = (1..n - 1)
                            .map(|j| {
                                let lap = (w[j + 1] - w[j] * 2.0 + w[j - 1]) / h2 - w[j] * k2;
                                w[j] + lap * r - adv[j] * dt
                            })
                            .collect();
                        implicit.solve_in_place(&mut rhs);
                        let mut wp = vec![ZERO; n];
                        wp[1..n - 1].copy_from_slice(&rhs);
                        let psi_p = op.streamfunction(&wp);
                        let up = psi_derivative(&psi_p, self.grid.h(), op.k, 0);
                        let gamma = 2.0 * self.config.robin_coef;
                        let s = -up * gamma / (1.0 + gamma * op.u_h);
                        let next: Vec<Complex64> = wp.iter().zip(&op.omega_h).map(|(a, b)| a + b * s).collect();
                        let psi: Vec<Complex64> = psi_p.iter().zip(&op.psi_h).map(|(a, b)| a + b * s).collect();
                        (next, psi)
                    }
                }
            })
            .collect();
        for (m, (w, p)) in updated.into_iter().enumerate() {
            out.omega[m] = w;
            out.psi[m] = p;
        }
        out
    }

    /// Advances `field` by one time step.
    pub fn step(&mut self, field: &mut Field2D) -> Result<()> {
        let nl = self.nonlinear(field);
        self.check_cfl(&nl)?;
        let next = match self.previous.take() {
            None => {
                // Heun start: predictor with N(t_n), corrector with the average.
                let predictor = self.advance(field, &nl.modes, &nl.mean);
                let nl_pred = self.nonlinear(&predictor);
                let modes: Vec<Vec<Complex64>> = nl
                    .modes
                    .iter()
                    .zip(&nl_pred.modes)
                    .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x + y) * 0.5).collect())
                    .collect();
                let mean: Vec<f64> = nl.mean.iter().zip(&nl_pred.mean).map(|(a, b)| 0.5 * (a + b)).collect();
                self.advance(field, &modes, &mean)
            }
            Some(prev) => {
                let modes: Vec<Vec<Complex64>> = nl
                    .modes
                    .iter()
                    .zip(&prev.modes)
                    .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * 1.5 - y * 0.5).collect())
                    .collect();
                let mean: Vec<f64> = nl.mean.iter().zip(&prev.mean).map(|(a, b)| 1.5 * a - 0.5 * b).collect();
                self.advance(field, &modes, &mean)
            }
        };
        self.previous = Some(nl);
        *field = next;
        self.steps += 1;
        let sup = field.vorticity_bound();
        if !(sup <= self.config.blowup_guard) {
            return Err(Error::BlowupDetected { t: field.t, sup });
        }
        Ok(())
    }

    /// Steps until `t_end` (rounded to whole steps), calling `observe` after
    /// every step.
    pub fn run_until(&mut self, field: &mut Field2D, t_end: f64, mut observe: impl FnMut(&Field2D)) -> Result<()> {
        let steps = ((t_end - field.t) / self.config.dt).round().max(0.0) as usize;
        for _ in 0..steps {
            self.step(field)?;
            observe(field);
        }
        Ok(())
    }
}

/// Euler reference trajectory from `v0`, sampled at `output_times`.
pub fn solve_euler_reference(config: &SolverConfig, v0: &Field2D, output_times: &[f64]) -> Result<Vec<Field2D>> {
    let mut solver = Solver::new(config.euler())?;
    let mut field = v0.clone();
    let mut out = Vec::with_capacity(output_times.len());
    for &t in output_times {
        solver.run_until(&mut field, t, |_| {})?;
        out.push(field.clone());
    }
    Ok(out)
}
