//! Experiment orchestration: the inviscid-limit convergence sweep, the
//! instability growth run in the rescaled frame, the Grönwall-type envelope
//! check and report output.
//!
//! Every report writes fixed-format CSV tables plus a JSON summary, so that
//! identical configurations give byte-identical files.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{linear_fit, trapezoid, GridSpec};
use crate::heat_robin::CrankNicolson;
use crate::ns2d::{solve_euler_reference, EnergyLedger, Field2D, Solver, SolverConfig};
use crate::profiles::{build_tanh_profile, curvature_function, match_navier_condition, NavierParams, TanhProfileParams};
use crate::rayleigh::{solve_mode, trace_dispersion, RayleighMode};
use crate::spectral1d::{negative_spectrum, rayleigh_quotient};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(contents.as_bytes()))
        .map_err(|e| Error::io(path, e))
}

fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), fmt)
}

// ---------------------------------------------------------------------------
// Norms

/// Velocity `L²` distance between two fields on the same grid.
pub fn velocity_l2_distance(a: &Field2D, b: &Field2D) -> f64 {
    let n = a.grid.n;
    let mut density = vec![0.0; n];
    for (j, d) in density.iter_mut().enumerate() {
        let dm = a.mean[j] - b.mean[j];
        *d = dm * dm;
        for m in 1..=a.modes() {
            let (u1, u2) = a.velocity(m, j);
            let (v1, v2) = b.velocity(m, j);
            *d += 2.0 * ((u1 - v1).norm_sqr() + (u2 - v2).norm_sqr());
        }
    }
    (a.lx * trapezoid(&density, a.grid.h())).sqrt()
}

fn derivative(f: &[f64], h: f64, j: usize) -> f64 {
    let n = f.len();
    if j == 0 {
        (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
    } else if j == n - 1 {
        (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h)
    } else {
        (f[j + 1] - f[j - 1]) / (2.0 * h)
    }
}

fn complex_derivative(f: &[Complex64], h: f64, j: usize) -> Complex64 {
    let n = f.len();
    if j == 0 {
        (f[0] * -3.0 + f[1] * 4.0 - f[2]) / (2.0 * h)
    } else if j == n - 1 {
        (f[n - 1] * 3.0 - f[n - 2] * 4.0 + f[n - 3]) / (2.0 * h)
    } else {
        (f[j + 1] - f[j - 1]) / (2.0 * h)
    }
}

/// Discrete `Ḣ^s` seminorms, `s = 0, 1, 2`, of the velocity `field - base`
/// where `base` is a mean profile: `‖u‖`, `‖ω‖` and `‖∇ω‖`.
pub fn sobolev_seminorms(field: &Field2D, base: &[f64]) -> [f64; 3] {
    let n = field.grid.n;
    let h = field.grid.h();
    let dmean: Vec<f64> = field.mean.iter().zip(base).map(|(u, b)| u - b).collect();
    let w0: Vec<f64> = (0..n).map(|j| -derivative(&dmean, h, j)).collect();
    let mut dens = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for j in 0..n {
        let dw0 = derivative(&w0, h, j);
        dens[0][j] = dmean[j] * dmean[j];
        dens[1][j] = w0[j] * w0[j];
        dens[2][j] = dw0 * dw0;
        for m in 1..=field.modes() {
            let k = 2.0 * std::f64::consts::PI * m as f64 / field.lx;
            let (u1, u2) = field.velocity(m, j);
            let w = field.omega[m - 1][j];
            let dw = complex_derivative(&field.omega[m - 1], h, j);
            dens[0][j] += 2.0 * (u1.norm_sqr() + u2.norm_sqr());
            dens[1][j] += 2.0 * w.norm_sqr();
            dens[2][j] += 2.0 * (k * k * w.norm_sqr() + dw.norm_sqr());
        }
    }
    dens.map(|d| (field.lx * trapezoid(&d, h)).sqrt())
}

// ---------------------------------------------------------------------------
// Convergence sweep

/// Smooth initial data given by its mean velocity and streamfunction modes
/// `ψ̂_m(y)`, `m = 1, 2, ...`.
#[derive(Clone)]
pub struct InitialData {
    pub label: String,
    pub mean: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub modes: Vec<Arc<dyn Fn(f64) -> Complex64 + Send + Sync>>,
}

impl std::fmt::Debug for InitialData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InitialData").field("label", &self.label).field("modes", &self.modes.len()).finish()
    }
}

impl InitialData {
    /// `ψ = amplitude · sin x · y³ e^{-y²}`. Its tangential velocity and
    /// wall shear both vanish, so it satisfies every Navier condition.
    pub fn wall_vortex(amplitude: f64) -> Self {
        Self {
            label: format!("wall_vortex({amplitude})"),
            mean: Arc::new(|_| 0.0),
            modes: vec![Arc::new(move |y: f64| Complex64::new(0.0, -0.5 * amplitude) * y.powi(3) * (-y * y).exp())],
        }
    }

    pub fn field(&self, solver: &Solver) -> Result<Field2D> {
        let cfg = solver.config();
        let nodes = cfg.grid()?.nodes();
        let mean = nodes.iter().map(|&y| (self.mean)(y)).collect();
        let psi = (0..cfg.modes)
            .map(|m| match self.modes.get(m) {
                Some(f) => nodes.iter().map(|&y| f(y)).collect(),
                None => vec![ZERO; nodes.len()],
            })
            .collect();
        solver.field_from_streamfunction(mean, psi)
    }
}

/// Where `(a, β)` sits relative to the proven stability ranges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProvenRange {
    /// `a > 0, β < 1` or `a < 0, β ≤ ½`.
    Stable,
    /// `a = 0`.
    StableAnyBeta,
    OutsideProvenRange,
}

impl ProvenRange {
    pub fn classify(a: f64, beta_exp: f64) -> Self {
        if a == 0.0 {
            Self::StableAnyBeta
        } else if (a > 0.0 && beta_exp < 1.0) || (a < 0.0 && beta_exp <= 0.5) {
            Self::Stable
        } else {
            Self::OutsideProvenRange
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Stable => "stable",
            Self::StableAnyBeta => "stable for any beta",
            Self::OutsideProvenRange => "outside proven range",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub a: f64,
    pub beta_exp: f64,
    /// Strictly decreasing.
    pub eps_list: Vec<f64>,
    pub t_end: f64,
    /// Shared output clock for both solvers.
    pub n_outputs: usize,
    pub lx: f64,
    pub modes: usize,
    pub ny: usize,
    pub y_max: f64,
    pub dt: f64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            a: 1.0,
            beta_exp: 0.5,
            eps_list: vec![1e-2, 5e-3, 2.5e-3, 1.25e-3],
            t_end: 1.0,
            n_outputs: 10,
            lx: 2.0 * std::f64::consts::PI,
            modes: 16,
            ny: 1025,
            y_max: 4.0,
            dt: 2e-3,
        }
    }
}

impl ConvergenceConfig {
    fn solver_config(&self, eps: f64) -> Result<SolverConfig> {
        let navier = NavierParams::new(self.a, self.beta_exp, eps)?;
        Ok(SolverConfig::navier_stokes(navier, self.lx, self.modes, self.ny, self.y_max, self.dt))
    }

    fn output_times(&self) -> Vec<f64> {
        (1..=self.n_outputs).map(|i| self.t_end * i as f64 / self.n_outputs as f64).collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceRun {
    pub eps: f64,
    /// `sup_t ‖u^ε - v‖` over the output clock.
    pub error: Option<f64>,
    /// Largest relative excess in the energy ledger.
    pub ledger_excess: Option<f64>,
    pub failure: Option<String>,
    #[serde(skip)]
    pub ledger: Option<EnergyLedger>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub a: f64,
    pub beta_exp: f64,
    pub t_end: f64,
    pub initial_data: String,
    pub range: ProvenRange,
    pub runs: Vec<ConvergenceRun>,
    /// Slope of `ln error` against `ln ε` over the successful runs.
    pub rate: Option<f64>,
    pub rate_r2: Option<f64>,
}

impl ConvergenceReport {
    /// All runs succeeded and the errors strictly decrease with `ε`.
    pub fn errors_decreasing(&self) -> bool {
        let errs: Option<Vec<f64>> = self.runs.iter().map(|r| r.error).collect();
        errs.is_some_and(|e| e.iter().all(|&v| v > 0.0) && e.windows(2).all(|w| w[1] < w[0]))
    }
}

/// Runs Navier–Stokes with wall coefficient `a ε^{-β}` for each `ε` and
/// compares with one Euler reference run on a shared output clock. Solver
/// failures are recorded per run.
pub fn run_convergence(config: &ConvergenceConfig, v0: &InitialData) -> Result<ConvergenceReport> {
    if config.eps_list.is_empty() || config.eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput("eps list must be nonempty and strictly decreasing".into()));
    }
    if config.eps_list.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidInput("eps values must be positive".into()));
    }
    let times = config.output_times();
    let euler_cfg = config.solver_config(config.eps_list[0])?.euler();
    let euler_solver = Solver::new(euler_cfg.clone())?;
    let reference = solve_euler_reference(&euler_cfg, &v0.field(&euler_solver)?, &times)?;

    let runs = config
        .eps_list
        .par_iter()
        .map(|&eps| {
            let attempt = || -> Result<(f64, EnergyLedger)> {
                let cfg = config.solver_config(eps)?;
                let mut solver = Solver::new(cfg.clone())?;
                let mut field = v0.field(&solver)?;
                let mut ledger = EnergyLedger::new(&cfg, &field);
                let mut err = 0.0f64;
                for (t, v) in times.iter().zip(&reference) {
                    solver.run_until(&mut field, *t, |f| ledger.record(f))?;
                    err = err.max(velocity_l2_distance(&field, v));
                }
                Ok((err, ledger))
            };
            match attempt() {
                Ok((e, l)) => ConvergenceRun {
                    eps,
                    error: Some(e),
                    ledger_excess: Some(l.max_relative_excess()),
                    failure: None,
                    ledger: Some(l),
                },
                Err(e) => ConvergenceRun { eps, error: None, ledger_excess: None, failure: Some(e.to_string()), ledger: None },
            }
        })
        .collect::<Vec<_>>();

    let (xs, ys): (Vec<f64>, Vec<f64>) = runs
        .iter()
        .filter_map(|r| r.error.filter(|&e| e > 0.0).map(|e| (r.eps.ln(), e.ln())))
        .unzip();
    let (rate, rate_r2) = if xs.len() >= 2 {
        let (s, _, r2) = linear_fit(&xs, &ys);
        (Some(s), Some(r2))
    } else {
        (None, None)
    };
    Ok(ConvergenceReport {
        a: config.a,
        beta_exp: config.beta_exp,
        t_end: config.t_end,
        initial_data: v0.label.clone(),
        range: ProvenRange::classify(config.a, config.beta_exp),
        runs,
        rate,
        rate_r2,
    })
}

// ---------------------------------------------------------------------------
// Growth experiment

/// Unstable shear flow matched to the slip coefficient `a`, with its most
/// unstable Rayleigh mode.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrowthSetup {
    pub a: f64,
    pub params: TanhProfileParams,
    pub mu: f64,
    pub k0: f64,
    pub sigma0: f64,
    pub c0: Complex64,
}

impl GrowthSetup {
    pub fn new(a: f64) -> Result<Self> {
        let m = match_navier_condition(a)?;
        let profile = build_tanh_profile(m.params, m.params.default_grid())?;
        let k = curvature_function(&profile)?;
        let mu = negative_spectrum(&k, &profile.grid)?.mu.ok_or(Error::NoInflection)?;
        let curve = trace_dispersion(&profile, mu, 0.1 * mu, 0.98 * mu, 45)?;
        Ok(Self { a, params: m.params, mu, k0: curve.k0, sigma0: curve.sigma0, c0: curve.c0 })
    }

    /// `T` solving `ε^n e^{σ₀T} / √(1+T) = 1`.
    pub fn predicted_crossing(&self, eps: f64, n: f64) -> f64 {
        let g = |t: f64| n * eps.ln() + self.sigma0 * t - 0.5 * (1.0 + t).ln();
        let (mut lo, mut hi) = (0.0, 1.0);
        while g(hi) < 0.0 {
            hi *= 2.0;
        }
        if g(lo) >= 0.0 {
            return 0.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthConfig {
    pub eps: f64,
    /// Seed amplitude exponent: the perturbation starts at size `ε^n`.
    pub n: f64,
    /// Multiplies the seed; `0` gives the unperturbed run.
    pub seed_scale: f64,
    /// Defaults to twice the predicted crossing time.
    pub t_budget: Option<f64>,
    pub modes: usize,
    pub ny: usize,
    pub y_max: f64,
    pub dt: f64,
    pub sample_every: f64,
    /// Primary crossing threshold, as a fraction of `max|ū|`, followed by
    /// the sensitivity values.
    pub thresholds: Vec<f64>,
    /// Linear phase: perturbation `L∞` below this fraction of `max|ū|`.
    pub linear_fraction: f64,
    /// Window size `A` for `Ω_A(t)`; chosen from the initial mode if unset.
    pub window: Option<f64>,
    /// Stop once the primary threshold has been crossed and the run has
    /// continued for this many further samples.
    pub stop_after_crossing: Option<usize>,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            n: 2.0,
            seed_scale: 1.0,
            t_budget: None,
            modes: 8,
            ny: 601,
            y_max: 30.0,
            dt: 0.05,
            sample_every: 2.0,
            thresholds: vec![0.1, 0.05, 0.2],
            linear_fraction: 0.01,
            window: None,
            stop_after_crossing: Some(5),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GrowthSample {
    pub t: f64,
    pub l2: f64,
    pub linf: f64,
    pub h1: f64,
    pub h2: f64,
    /// `L²` norm over `Ω_A(t)`.
    pub window_l2: f64,
    /// Crest of the leading perturbation mode, unwrapped across periods.
    pub peak_x: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Crossing {
    pub threshold: f64,
    pub time: Option<f64>,
    /// `Ḣ²` seminorm at the crossing, rescaled frame.
    pub h2: Option<f64>,
    /// Same in the original variables, `ε^{-1/2}` times the above.
    pub h2_original: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrowthReport {
    pub a: f64,
    pub eps: f64,
    pub n: f64,
    pub seed_amplitude: f64,
    pub k0: f64,
    pub sigma0: f64,
    pub viscosity: f64,
    pub base_amplitude: f64,
    pub t_budget: f64,
    pub window: f64,
    pub samples: Vec<GrowthSample>,
    /// Fitted from `ln ‖·‖₂` over the linear phase.
    pub fitted_rate: Option<f64>,
    pub linear_window: Option<(f64, f64)>,
    /// `α` in `|x + αt| ≤ A√(1+t)`.
    pub alpha: Option<f64>,
    pub crossings: Vec<Crossing>,
    pub predicted_crossing: f64,
    #[serde(skip)]
    pub final_field: Option<Field2D>,
}

impl GrowthReport {
    pub fn rate_error(&self) -> Option<f64> {
        self.fitted_rate.map(|r| (r - self.sigma0).abs() / self.sigma0)
    }

    pub fn primary_crossing(&self) -> Option<&Crossing> {
        self.crossings.first()
    }
}

struct Perturbation {
    linf: f64,
    peak_x: f64,
    /// `∫_0^A |u - ū|² dy` per physical `x` point.
    column: Vec<f64>,
}

fn perturbation_profile(field: &Field2D, base: &[f64], nx: usize, window: f64) -> Perturbation {
    let [u1, u2, _] = field.physical(nx);
    let h = field.grid.h();
    let jmax = field.grid.nearest(window).min(field.grid.n - 1);
    let mut linf = 0.0f64;
    let mut column = vec![0.0; nx];
    for (l, c) in column.iter_mut().enumerate() {
        let dens: Vec<f64> = (0..=jmax).map(|j| (u1[j][l] - base[j]).powi(2) + u2[j][l].powi(2)).collect();
        *c = trapezoid(&dens, h);
    }
    for j in 0..field.grid.n {
        for l in 0..nx {
            linf = linf.max(((u1[j][l] - base[j]).powi(2) + u2[j][l].powi(2)).sqrt());
        }
    }
    // Crest of 2 Re(ψ̂₁ e^{ikx}) at the height where |ψ̂₁| peaks.
    let psi = &field.psi[0];
    let jpk = (0..psi.len()).fold(0, |b, j| if psi[j].norm() > psi[b].norm() { j } else { b });
    let k = 2.0 * std::f64::consts::PI / field.lx;
    let peak_x = (-psi[jpk].arg() / k).rem_euclid(field.lx);
    Perturbation { linf, peak_x, column }
}

fn periodic_distance(x: f64, c: f64, lx: f64) -> f64 {
    let d = (x - c).rem_euclid(lx);
    d.min(lx - d)
}

fn windowed_l2(column: &[f64], lx: f64, center: f64, half_width: f64) -> f64 {
    let nx = column.len();
    let dx = lx / nx as f64;
    let s: f64 = column
        .iter()
        .enumerate()
        .filter(|(l, _)| periodic_distance(*l as f64 * dx, center, lx) <= half_width)
        .map(|(_, c)| c)
        .sum();
    (s * dx).sqrt()
}

/// Rayleigh mode at `k₀` sampled on `grid` by solving on an 8× finer grid.
fn mode_on_grid(setup: &GrowthSetup, grid: &GridSpec) -> Result<RayleighMode> {
    let fine = GridSpec::new(grid.y_max, 8 * (grid.n - 1) + 1)?;
    let profile = build_tanh_profile(setup.params, fine)?;
    let mut mode = solve_mode(&profile, setup.k0, setup.c0)?;
    mode.psi = (0..grid.n).map(|j| mode.psi[8 * j]).collect();
    mode.grid = *grid;
    Ok(mode)
}

/// Instability experiment in the rescaled frame: viscosity `√ε`, wall
/// coefficient `a`, one wavelength `2π/k₀` in `x`. The perturbation is
/// measured against the concurrently evolved base flow.
pub fn run_growth(setup: &GrowthSetup, config: &GrowthConfig) -> Result<GrowthReport> {
    if !(config.eps > 0.0 && config.eps < 1.0) || !(config.n >= 0.0) {
        return Err(Error::InvalidInput(format!("need 0 < eps < 1 and n >= 0 (got {}, {})", config.eps, config.n)));
    }
    if config.thresholds.is_empty() {
        return Err(Error::InvalidInput("at least one crossing threshold is required".into()));
    }
    let nu = config.eps.sqrt();
    let lx = 2.0 * std::f64::consts::PI / setup.k0;
    let predicted = setup.predicted_crossing(config.eps, config.n);
    let t_budget = config.t_budget.unwrap_or(2.0 * predicted.max(50.0));
    let solver_cfg = SolverConfig {
        nu,
        robin_coef: setup.a,
        lx,
        modes: config.modes,
        ny: config.ny,
        y_max: config.y_max,
        dt: config.dt,
        cfl_bound: 0.5,
        blowup_guard: 1e6,
    };
    let grid = solver_cfg.grid()?;
    let nx = solver_cfg.nx();
    let mut solver = Solver::new(solver_cfg.clone())?;
    let base0: Vec<f64> = grid.nodes().iter().map(|&y| setup.params.eval(y)[0]).collect();
    let base_amplitude = base0.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    // Seed: real part of the k₀ mode, scaled so that its sup equals ε^n.
    let mode = mode_on_grid(setup, &grid)?;
    let mut psi = vec![vec![ZERO; grid.n]; config.modes];
    psi[0] = mode.psi.iter().map(|p| p * 0.5).collect();
    let unit = solver.field_from_streamfunction(base0.clone(), psi.clone())?;
    let unit_sup = perturbation_profile(&unit, &base0, nx, config.y_max).linf;
    let seed_amplitude = config.eps.powf(config.n) * config.seed_scale;
    let scale = seed_amplitude / unit_sup;
    psi[0].iter_mut().for_each(|p| *p *= scale);
    let mut field = solver.field_from_streamfunction(base0.clone(), psi)?;

    let window = match config.window {
        Some(w) => w,
        None => {
            let full = perturbation_profile(&unit, &base0, nx, config.y_max);
            let total = windowed_l2(&full.column, lx, full.peak_x, lx);
            let mut a = 0.5;
            loop {
                let p = perturbation_profile(&unit, &base0, nx, a);
                if windowed_l2(&p.column, lx, full.peak_x, a) >= 0.9f64.sqrt() * total || a >= config.y_max {
                    break a.min(config.y_max);
                }
                a += 0.5;
            }
        }
    };

    let mut base = base0;
    let base_cn = CrankNicolson::new(&grid, setup.a, &vec![nu; grid.n], config.dt);
    let mut samples = Vec::new();
    let mut columns = Vec::new();
    let mut unwrap_offset = 0.0;
    let mut last_peak: Option<f64> = None;
    let primary = config.thresholds[0] * base_amplitude;
    let mut after_crossing = 0usize;
    let mut growth_checked = false;
    let sample_stride = (config.sample_every / config.dt).round().max(1.0) as usize;
    let mut step = 0usize;
    loop {
        if step.is_multiple_of(sample_stride) {
            let p = perturbation_profile(&field, &base, nx, window);
            let [l2, h1, h2] = sobolev_seminorms(&field, &base);
            let mut x = p.peak_x;
            if let Some(prev) = last_peak {
                while x + unwrap_offset - prev > 0.5 * lx {
                    unwrap_offset -= lx;
                }
                while x + unwrap_offset - prev < -0.5 * lx {
                    unwrap_offset += lx;
                }
            }
            x += unwrap_offset;
            last_peak = Some(x);
            samples.push(GrowthSample { t: field.t, l2, linf: p.linf, h1, h2, window_l2: 0.0, peak_x: x });
            columns.push(p.column);
            if p.linf >= primary {
                after_crossing += 1;
            }
            if let Some(limit) = config.stop_after_crossing {
                if after_crossing > limit {
                    break;
                }
            }
            if !growth_checked && field.t >= 0.2 * t_budget {
                growth_checked = true;
                let first = samples[0].l2;
                if l2 < first {
                    return Err(Error::NoGrowthDetected { initial: first, later: l2 });
                }
            }
        }
        if field.t >= t_budget - 0.5 * config.dt {
            break;
        }
        solver.step(&mut field)?;
        base_cn.step(&mut base, None);
        step += 1;
    }

    // Linear phase and fitted rate.
    let lin_cap = config.linear_fraction * base_amplitude;
    let lin_end = samples.iter().position(|s| s.linf >= lin_cap).unwrap_or(samples.len());
    let linear: Vec<&GrowthSample> = samples[..lin_end].iter().filter(|s| s.l2 > 0.0).collect();
    let (fitted_rate, linear_window) = match linear.last() {
        Some(last) if linear.len() >= 3 => {
            let t_start = 0.2 * last.t;
            let (ts, ls): (Vec<f64>, Vec<f64>) = linear.iter().filter(|s| s.t >= t_start).map(|s| (s.t, s.l2.ln())).unzip();
            if ts.len() >= 3 {
                let (slope, _, _) = linear_fit(&ts, &ls);
                // ‖·‖₂ of a single mode grows like its amplitude.
                (Some(slope), Some((ts[0], *ts.last().unwrap())))
            } else {
                (None, None)
            }
        }
        _ => (None, None),
    };

    // Packet speed from the tracked peak; x moves like -αt.
    let (ts, xs): (Vec<f64>, Vec<f64>) = samples[..lin_end.max(2).min(samples.len())].iter().map(|s| (s.t, s.peak_x)).unzip();
    let alpha = (ts.len() >= 2 && seed_amplitude > 0.0).then(|| -linear_fit(&ts, &xs).0);
    let x0 = samples.first().map_or(0.0, |s| s.peak_x);
    for (s, c) in samples.iter_mut().zip(&columns) {
        let center = x0 - alpha.unwrap_or(0.0) * s.t;
        s.window_l2 = windowed_l2(c, lx, center, window * (1.0 + s.t).sqrt());
    }

    let crossings = config
        .thresholds
        .iter()
        .map(|&th| {
            let level = th * base_amplitude;
            let idx = samples.iter().position(|s| s.linf >= level);
            let (time, h2) = match idx {
                Some(0) => (Some(samples[0].t), Some(samples[0].h2)),
                Some(i) => {
                    let (a, b) = (&samples[i - 1], &samples[i]);
                    let f = ((level.ln() - a.linf.ln()) / (b.linf.ln() - a.linf.ln())).clamp(0.0, 1.0);
                    let t = a.t + f * (b.t - a.t);
                    let h2 = (a.h2.ln() + f * (b.h2.ln() - a.h2.ln())).exp();
                    (Some(t), Some(h2))
                }
                None => (None, None),
            };
            Crossing { threshold: th, time, h2, h2_original: h2.map(|v| v / config.eps.sqrt()) }
        })
        .collect();

    Ok(GrowthReport {
        a: setup.a,
        eps: config.eps,
        n: config.n,
        seed_amplitude,
        k0: setup.k0,
        sigma0: setup.sigma0,
        viscosity: nu,
        base_amplitude,
        t_budget,
        window,
        samples,
        fitted_rate,
        linear_window,
        alpha,
        crossings,
        predicted_crossing: predicted,
        final_field: Some(field),
    })
}

/// Affine fit of crossing time against `n ln(1/ε)`: `(slope, intercept, R²)`.
pub fn crossing_time_fit(reports: &[GrowthReport]) -> Option<(f64, f64, f64)> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = reports
        .iter()
        .filter_map(|r| r.primary_crossing()?.time.map(|t| (r.n * (1.0 / r.eps).ln(), t)))
        .unzip();
    (xs.len() >= 3 && xs.len() == reports.len()).then(|| linear_fit(&xs, &ys))
}

// ---------------------------------------------------------------------------
// Envelope

/// `sup_{t ≥ 0} (1+t)^α e^{-rt}`.
pub fn polynomial_exponential_sup(r: f64, alpha: f64) -> f64 {
    let s = alpha / r;
    if s <= 1.0 {
        1.0
    } else {
        s.powf(alpha) * (r - alpha).exp()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnvelopeCheck {
    pub lambda: f64,
    pub mu: f64,
    pub alpha: f64,
    pub c: f64,
    pub phi0: f64,
    pub c_prime: f64,
    pub times: Vec<f64>,
    pub phi: Vec<f64>,
    pub bound: Vec<f64>,
}

impl EnvelopeCheck {
    pub fn holds(&self) -> bool {
        self.phi.iter().zip(&self.bound).all(|(p, b)| p <= b)
    }

    /// Smallest `bound - φ` relative to the bound.
    pub fn min_margin(&self) -> f64 {
        self.phi.iter().zip(&self.bound).map(|(p, b)| (b - p) / b).fold(f64::INFINITY, f64::min)
    }
}

/// Integrates `φ' = λφ + C e^{μt}/(1+t)^α` by RK4 on `[0, t_end]` and
/// compares with `C' e^{μt}/(1+t)^α`, where
/// `C' = φ(0) S(μ-λ) + C (2^α/(μ-λ) + S((μ-λ)/2)/(α-1))` and
/// `S(r) = sup (1+t)^α e^{-rt}`.
pub fn gronwall_envelope(lambda: f64, mu: f64, alpha: f64, c: f64, phi0: f64, t_end: f64, n_samples: usize) -> Result<EnvelopeCheck> {
    if !(mu > lambda) || !(lambda >= 0.0) {
        return Err(Error::ParameterViolation(format!("need mu > lambda >= 0 (got lambda = {lambda}, mu = {mu})")));
    }
    if !(alpha > 1.0) {
        return Err(Error::ParameterViolation(format!("need alpha > 1 (got {alpha})")));
    }
    if !(c >= 0.0 && phi0 >= 0.0) || !(t_end > 0.0) || n_samples < 2 {
        return Err(Error::InvalidInput("need C >= 0, phi(0) >= 0, t_end > 0 and two samples".into()));
    }
    let r = mu - lambda;
    let c_prime = phi0 * polynomial_exponential_sup(r, alpha)
        + c * (2f64.powf(alpha) / r + polynomial_exponential_sup(0.5 * r, alpha) / (alpha - 1.0));
    let forcing = |t: f64| c * (mu * t).exp() / (1.0 + t).powf(alpha);
    let rhs = |t: f64, p: f64| lambda * p + forcing(t);
    let steps_per_sample = 200;
    let dt = t_end / ((n_samples - 1) * steps_per_sample) as f64;
    let mut phi = vec![phi0];
    let mut times = vec![0.0];
    let mut p = phi0;
    let mut t = 0.0;
    for i in 1..n_samples {
        for _ in 0..steps_per_sample {
            let k1 = rhs(t, p);
            let k2 = rhs(t + 0.5 * dt, p + 0.5 * dt * k1);
            let k3 = rhs(t + 0.5 * dt, p + 0.5 * dt * k2);
            let k4 = rhs(t + dt, p + dt * k3);
            p += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += dt;
        }
        t = t_end * i as f64 / (n_samples - 1) as f64;
        times.push(t);
        phi.push(p);
    }
    let bound = times.iter().map(|&t| c_prime * (mu * t).exp() / (1.0 + t).powf(alpha)).collect();
    Ok(EnvelopeCheck { lambda, mu, alpha, c, phi0, c_prime, times, phi, bound })
}

// ---------------------------------------------------------------------------
// Variational check of the spectral bound

/// Smallest Rayleigh quotient over random smooth test functions; it can
/// never fall below the lowest eigenvalue.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VariationalCheck {
    pub seed: u64,
    pub trials: usize,
    pub min_quotient: f64,
    pub lambda_min: Option<f64>,
}

impl VariationalCheck {
    pub fn holds(&self) -> bool {
        self.lambda_min.is_none_or(|l| self.min_quotient >= l - 1e-9 * l.abs().max(1.0))
    }
}

/// Rayleigh quotients of `Σ c_i sin(iπy/Y)` with random coefficients decaying
/// like `1/i²`.
pub fn variational_check(k: &[f64], grid: &GridSpec, lambda_min: Option<f64>, seed: u64, trials: usize) -> Result<VariationalCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = grid.nodes();
    let mut best = f64::INFINITY;
    for _ in 0..trials {
        let coeffs: Vec<f64> = (1..=24).map(|i| rng.gen_range(-1.0..1.0) / (i * i) as f64).collect();
        let u: Vec<f64> = nodes
            .iter()
            .map(|&y| {
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c * ((i + 1) as f64 * std::f64::consts::PI * y / grid.y_max).sin())
                    .sum()
            })
            .collect();
        let mut u = u;
        u[0] = 0.0;
        *u.last_mut().unwrap() = 0.0;
        best = best.min(rayleigh_quotient(&u, k, grid)?);
    }
    Ok(VariationalCheck { seed, trials, min_quotient: best, lambda_min })
}

// ---------------------------------------------------------------------------
// Report output

/// Artifacts a report can write.
pub trait Report {
    /// Base name for the files, e.g. `convergence`.
    fn name(&self) -> &'static str;
    /// CSV tables as `(suffix, contents)`.
    fn tables(&self) -> Vec<(&'static str, String)>;
    fn summary(&self) -> Result<String>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Json,
    Both,
}

/// Writes `<name>[_suffix].csv` and `<name>_summary.json` into `dir` and
/// returns the paths in a fixed order.
pub fn emit_report(report: &dyn Report, dir: &Path, format: ReportFormat) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    if format != ReportFormat::Json {
        for (suffix, body) in report.tables() {
            let file = if suffix.is_empty() {
                format!("{}.csv", report.name())
            } else {
                format!("{}_{suffix}.csv", report.name())
            };
            let path = dir.join(file);
            write_file(&path, &body)?;
            written.push(path);
        }
    }
    if format != ReportFormat::Csv {
        let path = dir.join(format!("{}_summary.json", report.name()));
        write_file(&path, &report.summary()?)?;
        written.push(path);
    }
    Ok(written)
}

impl Report for ConvergenceReport {
    fn name(&self) -> &'static str {
        "convergence"
    }

    fn tables(&self) -> Vec<(&'static str, String)> {
        let mut out = String::from("eps,error,ledger_excess,failure\n");
        for r in &self.runs {
            out.push_str(&format!(
                "{},{},{},{}\n",
                fmt(r.eps),
                fmt_opt(r.error),
                fmt_opt(r.ledger_excess),
                r.failure.as_deref().unwrap_or("").replace(',', ";")
            ));
        }
        vec![("", out)]
    }

    fn summary(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Summary<'a> {
            a: f64,
            beta_exp: f64,
            t_end: f64,
            initial_data: &'a str,
            range: &'static str,
            rate: Option<f64>,
            rate_r2: Option<f64>,
            errors_decreasing: bool,
        }
        Ok(serde_json::to_string_pretty(&Summary {
            a: self.a,
            beta_exp: self.beta_exp,
            t_end: self.t_end,
            initial_data: &self.initial_data,
            range: self.range.label(),
            rate: self.rate,
            rate_r2: self.rate_r2,
            errors_decreasing: self.errors_decreasing(),
        })?)
    }
}

impl Report for GrowthReport {
    fn name(&self) -> &'static str {
        "growth"
    }

    fn tables(&self) -> Vec<(&'static str, String)> {
        let mut series = String::from("t,l2,linf,h1,h2,window_l2,peak_x\n");
        for s in &self.samples {
            series.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                fmt(s.t),
                fmt(s.l2),
                fmt(s.linf),
                fmt(s.h1),
                fmt(s.h2),
                fmt(s.window_l2),
                fmt(s.peak_x)
            ));
        }
        let mut cross = String::from("threshold,time,h2,h2_original\n");
        for c in &self.crossings {
            cross.push_str(&format!("{},{},{},{}\n", fmt(c.threshold), fmt_opt(c.time), fmt_opt(c.h2), fmt_opt(c.h2_original)));
        }
        vec![("series", series), ("crossings", cross)]
    }

    fn summary(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Some(obj) = v.as_object_mut() {
            obj.remove("samples");
            obj.insert("rate_error".into(), serde_json::to_value(self.rate_error())?);
        }
        Ok(serde_json::to_string_pretty(&v)?)
    }
}

impl Report for EnvelopeCheck {
    fn name(&self) -> &'static str {
        "envelope"
    }

    fn tables(&self) -> Vec<(&'static str, String)> {
        let mut out = String::from("t,phi,bound\n");
        for ((t, p), b) in self.times.iter().zip(&self.phi).zip(&self.bound) {
            out.push_str(&format!("{},{},{}\n", fmt(*t), fmt(*p), fmt(*b)));
        }
        vec![("", out)]
    }

    fn summary(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Summary {
            lambda: f64,
            mu: f64,
            alpha: f64,
            c: f64,
            phi0: f64,
            c_prime: f64,
            holds: bool,
            min_margin: f64,
        }
        Ok(serde_json::to_string_pretty(&Summary {
            lambda: self.lambda,
            mu: self.mu,
            alpha: self.alpha,
            c: self.c,
            phi0: self.phi0,
            c_prime: self.c_prime,
            holds: self.holds(),
            min_margin: self.min_margin(),
        })?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_classification() {
        assert_eq!(ProvenRange::classify(1.0, 0.5), ProvenRange::Stable);
        assert_eq!(ProvenRange::classify(1.0, 1.0), ProvenRange::OutsideProvenRange);
        assert_eq!(ProvenRange::classify(0.0, 3.0), ProvenRange::StableAnyBeta);
        assert_eq!(ProvenRange::classify(-1.0, 0.5), ProvenRange::Stable);
        assert_eq!(ProvenRange::classify(-1.0, 0.75), ProvenRange::OutsideProvenRange);
    }

    #[test]
    fn sup_of_polynomial_times_exponential() {
        let (r, a) = (0.3, 2.0);
        let brute = (0..200_000).map(|i| i as f64 * 1e-3).map(|t| (1.0 + t).powf(a) * (-r * t).exp()).fold(0.0, f64::max);
        assert!((polynomial_exponential_sup(r, a) - brute).abs() < 1e-6 * brute);
        assert_eq!(polynomial_exponential_sup(5.0, 2.0), 1.0);
    }

    #[test]
    fn predicted_crossing_solves_its_equation() {
        let setup = GrowthSetup {
            a: 1.0,
            params: TanhProfileParams::new(0.5f64.atanh(), 0.875).unwrap(),
            mu: 0.5,
            k0: 0.3,
            sigma0: 0.015,
            c0: Complex64::new(0.77, 0.05),
        };
        let t = setup.predicted_crossing(1e-3, 2.0);
        let lhs = 1e-6 * (0.015 * t).exp() / (1.0 + t).sqrt();
        assert!((lhs - 1.0).abs() < 1e-9);
    }
}
