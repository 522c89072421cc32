use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use serde::Deserialize;
use toml::Table;

use slipstab::harness::{
    emit_report, gronwall_envelope, run_convergence, run_growth, variational_check, ConvergenceConfig, GrowthConfig,
    GrowthSetup, InitialData, ProvenRange, ReportFormat,
};
use slipstab::heat_robin::{baseflow_drift, BaseFlowState, CrankNicolson, DriftConfig};
use slipstab::ns2d::{write_ledger_csv, write_slice_csv, write_snapshot};
use slipstab::profiles::{
    build_tanh_profile, check_rayleigh_criterion, curvature_function, match_navier_condition, DEFAULT_DECAY_MARGIN,
    DEFAULT_NODES,
};
use slipstab::rayleigh::{solve_mode, trace_dispersion};
use slipstab::spectral1d::{negative_spectrum, tanh_potential};
use slipstab::GridSpec;

use crate::settings;

pub struct Context {
    pub out: PathBuf,
    pub seed: u64,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

/// One asserted invariant (`passed = Some(_)`) or an informational line.
pub struct Check {
    pub name: String,
    pub passed: Option<bool>,
    pub detail: String,
}

impl Check {
    fn assert(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.into(), passed: Some(passed), detail }
    }

    fn info(name: &str, detail: String) -> Self {
        Self { name: name.into(), passed: None, detail }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.passed {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "INFO",
        };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?).with_context(|| format!("writing {}", path.display()))
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ProfileSettings {
    a: f64,
    nodes: usize,
    decay_margin: f64,
}

impl Default for ProfileSettings {
    fn default() -> Self {
        Self { a: 1.0, nodes: DEFAULT_NODES, decay_margin: DEFAULT_DECAY_MARGIN }
    }
}

pub fn profile(ctx: &Context, table: Table) -> Result<Vec<Check>> {
    let s: ProfileSettings = settings::into(table)?;
    let m = match_navier_condition(s.a)?;
    let grid = GridSpec::new(m.params.delta + s.decay_margin, s.nodes)?;
    let p = build_tanh_profile(m.params, grid)?;
    p.write_csv(&ctx.path("profile.csv"))?;
    write_json(&ctx.path("profile.json"), &p.header())?;
    write_json(&ctx.path("match.json"), &m)?;
    let report = check_rayleigh_criterion(&p);
    write_json(&ctx.path("inflections.json"), &report)?;
    let residual = m.params.navier_residual(s.a);
    let x = m.params.delta.tanh();
    Ok(vec![
        Check::assert("navier residual", residual <= 1e-12, format!("{residual:.3e} (limit 1e-12)")),
        Check::assert("tanh(delta) in (0,1)", x > 0.0 && x < 1.0, format!("{x}")),
        Check::assert("admissible inflection", report.admissible, format!("{} inflection(s)", report.inflections.len())),
    ])
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SturmSettings {
    /// `matched` (curvature of the profile for `a`) or `sech2`.
    potential: String,
    a: f64,
    center: f64,
    /// Well depth `d` in `d sech²(y - center)`; `sech2` only.
    depth: f64,
    y_max: f64,
    nodes: usize,
    trials: usize,
}

impl Default for SturmSettings {
    fn default() -> Self {
        Self { potential: "matched".into(), a: 1.0, center: 5.0, depth: 2.0, y_max: 40.0, nodes: 4001, trials: 64 }
    }
}

pub fn sturm(ctx: &Context, table: Table) -> Result<Vec<Check>> {
    let s: SturmSettings = settings::into(table)?;
    let (k, grid) = match s.potential.as_str() {
        "matched" => {
            let m = match_navier_condition(s.a)?;
            let grid = GridSpec::new(m.params.delta + s.y_max, s.nodes)?;
            let p = build_tanh_profile(m.params, grid)?;
            (curvature_function(&p)?, grid)
        }
        "sech2" => {
            let grid = GridSpec::new(s.y_max, s.nodes)?;
            (grid.nodes().iter().map(|&y| 0.5 * s.depth * tanh_potential(y, s.center)).collect(), grid)
        }
        other => bail!("unknown potential `{other}` (expected matched or sech2)"),
    };
    let spec = negative_spectrum(&k, &grid)?;
    spec.write_json(&ctx.path("sturm.json"))?;
    spec.write_eigenfunctions_csv(&ctx.path("sturm_eigenfunctions.csv"))?;
    let var = variational_check(&k, &grid, spec.eigenvalues.first().copied(), ctx.seed, s.trials)?;
    write_json(&ctx.path("variational.json"), &var)?;
    Ok(vec![
        Check::info("eigenvalues", format!("{:?}", spec.eigenvalues)),
        Check::assert(
            "single negative eigenvalue",
            spec.eigenvalues.len() == 1,
            format!("{} found, mu = {:?}", spec.eigenvalues.len(), spec.mu),
        ),
        Check::assert(
            "variational bound",
            var.holds(),
            format!("min quotient {:.6} over {} trials (seed {})", var.min_quotient, var.trials, var.seed),
        ),
    ])
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DispersionSettings {
    a: f64,
    k_lo: f64,
    k_hi: f64,
    samples: usize,
}

impl Default for DispersionSettings {
    fn default() -> Self {
        Self { a: 1.0, k_lo: 0.1, k_hi: 0.98, samples: 45 }
    }
}

pub fn dispersion(ctx: &Context, table: Table) -> Result<Vec<Check>> {
    let s: DispersionSettings = settings::into(table)?;
    let m = match_navier_condition(s.a)?;
    let p = build_tanh_profile(m.params, m.params.default_grid())?;
    let spec = negative_spectrum(&curvature_function(&p)?, &p.grid)?;
    let mu = spec.mu.context("profile has no negative eigenvalue, so no instability band")?;
    let curve = trace_dispersion(&p, mu, s.k_lo * mu, s.k_hi * mu, s.samples)?;
    curve.write_csv(&ctx.path("dispersion.csv"))?;
    curve.write_summary_json(&ctx.path("dispersion_summary.json"))?;
    let mode = solve_mode(&p, curve.k0, curve.c0)?;
    mode.write_csv(&ctx.path("mode_k0.csv"))?;
    Ok(vec![
        Check::info("mu", format!("{mu:.8}")),
        Check::assert("sigma0 > 0", curve.sigma0 > 0.0, format!("{:.8}", curve.sigma0)),
        Check::assert("0 < k0 < mu", curve.k0 > 0.0 && curve.k0 < mu, format!("{:.8}", curve.k0)),
        Check::assert("beta_curv > 0", curve.beta_curv > 0.0, format!("{:.6}", curve.beta_curv)),
    ])
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct BaseflowSettings {
    a: f64,
    eps: f64,
    y_max: f64,
    nodes: usize,
    dt: f64,
    step_budget: usize,
}

impl Default for BaseflowSettings {
    fn default() -> Self {
        Self { a: 1.0, eps: 1e-2, y_max: slipstab::heat_robin::DEFAULT_Y_MAX, nodes: 2001, dt: 1e-4, step_budget: 1_000_000 }
    }
}

pub fn baseflow(ctx: &Context, table: Table) -> Result<Vec<Check>> {
    let s: BaseflowSettings = settings::into(table)?;
    if s.eps < 1e-6 {
        bail!("eps = {} is below the desk-scale floor 1e-6", s.eps);
    }
    let m = match_navier_condition(s.a)?;
    let grid = GridSpec::new(s.y_max, s.nodes)?;
    let p = build_tanh_profile(m.params, grid)?;
    let drift = baseflow_drift(&p, s.a, &DriftConfig { eps: s.eps, dt: s.dt, step_budget: s.step_budget, grid })?;
    drift.write_csv(&ctx.path("baseflow_drift.csv"))?;

    // Same window, stepped here to watch the sup norm.
    let steps = drift.t.len() - 1;
    let dt = s.eps.sqrt() * drift.t.last().copied().unwrap_or(0.0) / steps.max(1) as f64;
    let mut state = BaseFlowState::from_profile(&p, grid, s.a)?;
    let cn = CrankNicolson::new(&grid, s.a, &state.diffusivity, dt);
    let mut sup_ok = true;
    let mut worst_residual = state.robin_residual_centered();
    for _ in 0..steps {
        let before = state.sup_norm();
        cn.step(&mut state.ubar, None);
        state.t += dt;
        sup_ok &= state.sup_norm() <= before * (1.0 + 1e-14);
        worst_residual = worst_residual.max(state.robin_residual_centered());
    }
    state.write_csv(&ctx.path("baseflow.csv"))?;
    let mut checks = vec![
        Check::assert("drift at t = 0", drift.drift_norm[0] == 0.0, format!("{}", drift.drift_norm[0])),
        Check::assert("robin residual", worst_residual <= 1e-8, format!("{worst_residual:.3e} (limit 1e-8)")),
        Check::info("max drift", format!("{:.6e} over t <= {:.4}", drift.max_drift, drift.t.last().unwrap_or(&0.0))),
    ];
    if s.a >= 0.0 {
        checks.push(Check::assert("maximum principle", sup_ok, "sup norm non-increasing".into()));
    }
    Ok(checks)
}

pub fn converge(ctx: &Context, mut table: Table) -> Result<Vec<Check>> {
    let amplitude = settings::take_f64(&mut table, "amplitude", 1.0)?;
    let config: ConvergenceConfig = settings::into(table)?;
    let report = run_convergence(&config, &InitialData::wall_vortex(amplitude))?;
    emit_report(&report, &ctx.out, ReportFormat::Both)?;
    for (i, run) in report.runs.iter().enumerate() {
        if let Some(l) = &run.ledger {
            write_ledger_csv(l, &ctx.path(&format!("ledger_{i}.csv")))?;
        }
    }
    let mut checks: Vec<Check> = report
        .runs
        .iter()
        .map(|r| match (&r.error, &r.failure) {
            (Some(e), _) => Check::info("run", format!("eps {:.4e}: error {e:.6e}", r.eps)),
            (None, f) => Check::info("run", format!("eps {:.4e}: failed: {}", r.eps, f.as_deref().unwrap_or("?"))),
        })
        .collect();
    checks.push(Check::info("range", report.range.label().into()));
    if report.range == ProvenRange::OutsideProvenRange {
        checks.push(Check::info("rate", format!("{:?} (not asserted)", report.rate)));
        return Ok(checks);
    }
    checks.push(Check::assert("errors decreasing", report.errors_decreasing(), "strictly, as eps decreases".into()));
    let rate = report.rate.unwrap_or(f64::NAN);
    checks.push(Check::assert("rate", rate >= 0.4, format!("{rate:.4} (limit >= 0.4)")));
    if config.a >= 0.0 {
        let worst = report.runs.iter().filter_map(|r| r.ledger_excess).fold(0.0, f64::max);
        checks.push(Check::assert("energy ledger", worst <= 1e-3, format!("max relative excess {worst:.3e}")));
    }
    Ok(checks)
}

pub fn grow(ctx: &Context, mut table: Table) -> Result<Vec<Check>> {
    let a = settings::take_f64(&mut table, "a", 1.0)?;
    let config: GrowthConfig = settings::into(table)?;
    let setup = GrowthSetup::new(a)?;
    let report = run_growth(&setup, &config)?;
    emit_report(&report, &ctx.out, ReportFormat::Both)?;
    if let Some(f) = &report.final_field {
        write_snapshot(f, &ctx.path("growth_final.bin"))?;
        write_slice_csv(f, f.grid.nearest(1.0), 4 * config.modes + 1, &ctx.path("growth_slice.csv"))?;
    }
    let seed_err = (report.samples[0].linf - report.seed_amplitude).abs() / report.seed_amplitude.max(f64::MIN_POSITIVE);
    let mut checks = vec![
        Check::info("sigma0", format!("{:.8} at k0 = {:.6}", setup.sigma0, setup.k0)),
        Check::assert(
            "seed amplitude",
            report.seed_amplitude == 0.0 || seed_err <= 1e-12,
            format!("relative mismatch {seed_err:.3e}"),
        ),
    ];
    for c in &report.crossings {
        checks.push(Check::info(
            "crossing",
            format!("threshold {}: t = {:?}, predicted {:.2}", c.threshold, c.time, report.predicted_crossing),
        ));
    }
    if report.seed_amplitude > 0.0 {
        let detail = match (report.fitted_rate, report.rate_error()) {
            (Some(r), Some(e)) => format!("fitted {r:.6} vs sigma0 {:.6}, relative error {e:.4} (limit 0.05)", report.sigma0),
            _ => "no linear phase long enough to fit".into(),
        };
        checks.push(Check::assert("linear growth rate", report.rate_error().is_some_and(|e| e <= 0.05), detail));
    }
    Ok(checks)
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct EnvelopeSettings {
    lambda: f64,
    mu: f64,
    alpha: f64,
    c: f64,
    phi0: f64,
    t_end: f64,
    samples: usize,
}

impl Default for EnvelopeSettings {
    fn default() -> Self {
        Self { lambda: 0.0, mu: 1.0, alpha: 2.0, c: 1.0, phi0: 0.0, t_end: 20.0, samples: 201 }
    }
}

pub fn envelope(ctx: &Context, table: Table) -> Result<Vec<Check>> {
    let s: EnvelopeSettings = settings::into(table)?;
    let check = gronwall_envelope(s.lambda, s.mu, s.alpha, s.c, s.phi0, s.t_end, s.samples)?;
    emit_report(&check, &ctx.out, ReportFormat::Both)?;
    Ok(vec![Check::assert(
        "envelope",
        check.holds(),
        format!("C' = {:.6}, smallest relative margin {:.3e}", check.c_prime, check.min_margin()),
    )])
}
