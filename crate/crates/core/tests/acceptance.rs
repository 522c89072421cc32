//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line with
//! the measured numbers, then asserts.
//!
//! Run with `cargo test -p slipstab --test acceptance`.

use std::io::Write;
use std::sync::OnceLock;
use std::time::Instant;

use num_complex::Complex64;
use slipstab::grid::{linear_fit, observed_order};
use slipstab::harness::*;
use slipstab::heat_robin::{evolve, BaseFlowState};
use slipstab::ns2d::{EnergyLedger, Solver, SolverConfig};
use slipstab::profiles::*;
use slipstab::rayleigh::*;
use slipstab::spectral1d::*;
use slipstab::{Error, GridSpec};

fn verdict(name: &str, pass: bool, started: Instant, detail: String) {
    let tag = if pass { "PASS" } else { "FAIL" };
    // Through the raw handle, which the test harness does not capture.
    let line = format!("{tag} {name}: {detail} [{:.1} s]\n", started.elapsed().as_secs_f64());
    std::io::stderr().write_all(line.as_bytes()).unwrap();
    assert!(pass, "{name}: {detail}");
}

fn sci(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

struct Matched {
    profile: ShearProfile,
    mu: f64,
    curve: DispersionCurve,
}

fn matched() -> &'static Matched {
    static M: OnceLock<Matched> = OnceLock::new();
    M.get_or_init(|| {
        let m = match_navier_condition(1.0).unwrap();
        let profile = build_tanh_profile(m.params, m.params.default_grid()).unwrap();
        let k = curvature_function(&profile).unwrap();
        let mu = negative_spectrum(&k, &profile.grid).unwrap().mu.unwrap();
        let curve = trace_dispersion(&profile, mu, 0.1 * mu, 0.98 * mu, 45).unwrap();
        Matched { profile, mu, curve }
    })
}

#[test]
fn navier_matching() {
    let t = Instant::now();
    let mut worst = 0.0f64;
    let mut inside = true;
    for a in [-2.5, -1.0, 0.5, 1.0, 1.5, 3.0] {
        let m = match_navier_condition(a).unwrap();
        let [u, du, _] = m.params.eval(0.0);
        worst = worst.max((0.5 * du - a * u).abs());
        let x0 = m.params.delta.tanh();
        inside &= x0 > 0.0 && x0 < 1.0;
    }
    let zero = matches!(match_navier_condition(0.0), Err(Error::ZeroSlip));
    let secs = t.elapsed().as_secs_f64();
    verdict(
        "navier matching",
        worst <= 1e-12 && inside && zero && secs < 1.0,
        t,
        format!("max residual {worst:.2e} (limit 1e-12), 0 < tanh(delta) < 1: {inside}, a = 0 rejected: {zero}"),
    );
}

#[test]
fn sturm_liouville_spectrum() {
    let t = Instant::now();
    let m = match_navier_condition(1.0).unwrap();
    let p = build_tanh_profile(m.params, m.params.default_grid()).unwrap();
    let count = negative_spectrum(&curvature_function(&p).unwrap(), &p.grid).unwrap().eigenvalues.len();

    let lowest = |g: &GridSpec| {
        let k: Vec<f64> = g.nodes().into_iter().map(|y| tanh_potential(y, 5.0)).collect();
        lowest_eigenvalue(&k, g).unwrap().unwrap().0
    };
    let coarse = GridSpec::new(40.0, 4001).unwrap();
    let (l1, l2) = (lowest(&coarse), lowest(&coarse.refined()));
    let lambda = (4.0 * l2 - l1) / 3.0;
    verdict(
        "sturm-liouville",
        count == 1 && (-1.001..=-0.995).contains(&lambda) && t.elapsed().as_secs_f64() < 10.0,
        t,
        format!("matched profile has {count} negative eigenvalue(s); extrapolated lambda_min = {lambda:.6} (window [-1.001, -0.995])"),
    );
}

#[test]
fn rayleigh_band() {
    let t = Instant::now();
    let s = matched();
    let fracs = [0.25, 0.4, 0.55, 0.7, 0.85];
    let mut unstable = true;
    let mut worst_dc = 0.0f64;
    for f in fracs {
        let k = f * s.mu;
        let mode = solve_mode(&s.profile, k, s.curve.c_at(k)).unwrap();
        unstable &= mode.sigma > 0.0;
        let c = matrix_eigenvalue_extrapolated(&s.profile, k, mode.c, 1001).unwrap();
        worst_dc = worst_dc.max((c - mode.c).norm());
    }
    let k = 1.2 * s.mu;
    let u0 = s.profile.inflection.unwrap().u0;
    let outcomes: Vec<String> = [0.005, 0.01, 0.05, 0.1, 0.2]
        .iter()
        .map(|&im| match solve_mode(&s.profile, k, Complex64::new(u0, im)) {
            Err(Error::LeftHalfPlane { .. }) => "LeftHalfPlane".to_string(),
            Err(e) => format!("{e}"),
            Ok(m) => format!("mode with sigma {:e}", m.sigma),
        })
        .collect();
    let all_lhp = outcomes.iter().all(|o| o == "LeftHalfPlane");
    verdict(
        "rayleigh band",
        unstable && all_lhp && worst_dc <= 1e-4 && t.elapsed().as_secs_f64() < 60.0,
        t,
        format!("unstable at k/mu = {fracs:?}: {unstable}; max |dc| shooting vs matrix {worst_dc:.2e} (limit 1e-4); k = 1.2 mu: {outcomes:?}"),
    );
}

#[test]
fn dispersion_extraction() {
    let t = Instant::now();
    let s = matched();
    let c = &s.curve;
    // Continue from the last curve sample out to the band edge.
    let mut guess = c.c_at(*c.ks.last().unwrap());
    let mut edge = Vec::new();
    for f in [0.95, 0.97, 0.98, 0.99, 0.995] {
        let mode = solve_mode(&s.profile, f * s.mu, guess).unwrap();
        guess = mode.c;
        edge.push(mode.sigma);
    }
    let monotone = edge.windows(2).all(|w| w[1] < w[0]);
    let last = *edge.last().unwrap();
    verdict(
        "dispersion extraction",
        c.sigma0 > 0.0 && c.k0 > 0.0 && c.k0 < s.mu && c.beta_curv > 0.0 && monotone && last <= 1e-3,
        t,
        format!(
            "sigma0 {:.6}, k0 {:.5} (mu {:.5}), beta_curv {:.4}; sigma over k/mu 0.95..0.995 = {}",
            c.sigma0, c.k0, s.mu, c.beta_curv, sci(&edge)
        ),
    );
}

#[test]
fn linearized_euler_growth() {
    let t = Instant::now();
    let s = matched();
    let p = s.profile.resampled(GridSpec::new(s.profile.grid.y_max, 1001).unwrap());
    let k = s.curve.k0;
    let mode = solve_mode(&p, k, s.curve.c_at(k)).unwrap();
    let h = p.grid.h();
    let omega0 = vorticity_of(&mode.psi, k, h);
    let free = evolve_linearized_euler(&p, &LinEulerConfig::new(k, 0.1, 10.0 / mode.sigma), &omega0, None).unwrap();
    let err = (free.growth_exponent - mode.sigma).abs() / mode.sigma;

    let rate = s.curve.sigma0 + 0.5;
    let forcing = Forcing::standard(&p.grid, 1.0, rate, 0.25);
    let generic: Vec<Complex64> =
        p.grid.nodes().into_iter().map(|y| Complex64::new(y * (-(y - 2.0).powi(2)).exp(), 0.3 * y * (-y).exp())).collect();
    let forced = evolve_linearized_euler(&p, &LinEulerConfig::new(k, 0.05, 60.0), &generic, Some(forcing)).unwrap();
    verdict(
        "linearized euler",
        err <= 0.02 && forced.growth_exponent <= rate + 0.05,
        t,
        format!(
            "eigenmode over 10 e-folds: fitted {:.6} vs sigma {:.6} (rel err {err:.4}, limit 0.02); forced: fitted {:.4} vs bound {:.4}",
            free.growth_exponent,
            mode.sigma,
            forced.growth_exponent,
            rate + 0.05
        ),
    );
}

#[test]
fn wave_packet_laplace_ratio() {
    let t = Instant::now();
    let s = matched();
    let c = &s.curve;
    let norms: Vec<f64> = c.ks.iter().map(|&k| solve_mode(&s.profile, k, c.c_at(k)).unwrap().l2_norm()).collect();
    // Widest bump that stays inside the sampled band.
    let room = (c.k0 - c.ks[0]).min(c.ks.last().unwrap() - c.k0);
    let env = Envelope { center: c.k0, half_width: 0.99 * room };
    let ratios: Vec<f64> =
        [10.0, 20.0, 30.0, 40.0].iter().map(|&tt| wavepacket_norm(c, &env, &norms, tt).unwrap().ratio()).collect();
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    let variation = (hi - lo) / hi;
    verdict(
        "wave packet",
        variation < 0.10,
        t,
        format!("half-width {:.3}; ratio at t = 10, 20, 30, 40: {ratios:.3?}; variation {variation:.3} (limit 0.10)", env.half_width),
    );
}

fn solver_config(nu: f64, robin_coef: f64, modes: usize, ny: usize, y_max: f64, dt: f64) -> SolverConfig {
    SolverConfig { nu, robin_coef, lx: 2.0 * std::f64::consts::PI, modes, ny, y_max, dt, cfl_bound: 0.5, blowup_guard: 1e6 }
}

#[test]
fn shear_flow_follows_the_heat_equation() {
    let t = Instant::now();
    let m = match_navier_condition(1.0).unwrap();
    let (nu, a) = (0.05, 1.0);
    let cfg = solver_config(nu, a, 4, 1001, 30.0, 0.01);
    let grid = cfg.grid().unwrap();
    let mean: Vec<f64> = grid.nodes().into_iter().map(|y| m.params.eval(y)[0]).collect();
    let mut solver = Solver::new(cfg.clone()).unwrap();
    let mut f = solver.field_from_streamfunction(mean.clone(), vec![vec![Complex64::new(0.0, 0.0); cfg.ny]; cfg.modes]).unwrap();
    solver.run_until(&mut f, 1.0, |_| {}).unwrap();

    let heat = evolve(&BaseFlowState::with_diffusivity(grid, mean, a, nu).unwrap(), cfg.dt, 1.0).unwrap();
    let scale = heat.sup_norm();
    let diff = f.mean.iter().zip(&heat.ubar).fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs())) / scale;
    verdict("ns shear consistency", diff <= 1e-8, t, format!("relative sup difference at t = 1: {diff:.2e} (limit 1e-8)"));
}

#[test]
fn energy_ledger_at_default_resolution() {
    let t = Instant::now();
    let m = match_navier_condition(1.0).unwrap();
    let cfg = solver_config(0.01, 1.0, 32, 512, 30.0, 0.01);
    let mut solver = Solver::new(cfg.clone()).unwrap();
    let nodes = cfg.grid().unwrap().nodes();
    let mean: Vec<f64> = nodes.iter().map(|&y| m.params.eval(y)[0]).collect();
    let mut psi = vec![vec![Complex64::new(0.0, 0.0); cfg.ny]; cfg.modes];
    psi[0] = nodes.iter().map(|&y| Complex64::new(0.0, -0.25) * y.powi(3) * (-y * y).exp()).collect();
    psi[2] = nodes.iter().map(|&y| Complex64::new(0.05, 0.0) * y.powi(3) * (-0.5 * y * y).exp()).collect();
    let mut f = solver.field_from_streamfunction(mean, psi).unwrap();
    let mut ledger = EnergyLedger::new(&cfg, &f);
    solver.run_until(&mut f, 2.0, |g| ledger.record(g)).unwrap();
    let excess = ledger.max_relative_excess();
    verdict(
        "energy ledger",
        ledger.holds() && excess <= 1e-3,
        t,
        format!("{} steps, max relative excess {excess:.2e} (limit 1e-3)", ledger.rows.len() - 1),
    );
}

#[test]
fn vanishing_viscosity_convergence() {
    let t = Instant::now();
    let cfg = ConvergenceConfig::default();
    let r = run_convergence(&cfg, &InitialData::wall_vortex(1.0)).unwrap();
    let errors: Vec<f64> = r.runs.iter().map(|x| x.error.unwrap_or(f64::NAN)).collect();
    let rate = r.rate.unwrap_or(f64::NAN);
    verdict(
        "vanishing viscosity convergence",
        r.errors_decreasing() && rate >= 0.4,
        t,
        format!("eps {:?}: errors {}; fitted rate {rate:.3} (limit >= 0.4)", cfg.eps_list, sci(&errors)),
    );
}

fn describe(r: &Result<GrowthReport, Error>) -> String {
    match r {
        Ok(g) => format!(
            "rate {:?} vs sigma0 {:.5}, crossing {:?}",
            g.fitted_rate,
            g.sigma0,
            g.primary_crossing().and_then(|c| c.time)
        ),
        Err(e) => e.to_string(),
    }
}

#[test]
fn instability_growth_and_crossing() {
    let t = Instant::now();
    let setup = GrowthSetup::new(1.0).unwrap();
    let run = |eps: f64, n: f64| run_growth(&setup, &GrowthConfig { eps, n, ..GrowthConfig::default() });

    let primary = run(1e-3, 2.0);
    let rate_ok = primary.as_ref().ok().and_then(|r| r.rate_error()).is_some_and(|e| e <= 0.05);

    let by_n: Vec<_> = [1.0, 3.0].iter().map(|&n| run(1e-3, n)).collect();
    let reports: Vec<GrowthReport> =
        by_n.iter().chain(std::iter::once(&primary)).filter_map(|r| r.as_ref().ok().cloned()).collect();
    let fit = crossing_time_fit(&reports);
    let fit_ok = fit.is_some_and(|(_, _, r2)| r2 >= 0.95);

    let by_eps: Vec<_> = [4e-3, 2e-3].iter().map(|&eps| run(eps, 2.0)).collect();
    let h2: Vec<Option<f64>> = by_eps
        .iter()
        .chain(std::iter::once(&primary))
        .map(|r| r.as_ref().ok().and_then(|g| g.primary_crossing()).and_then(|c| c.h2))
        .collect();
    let h2_ok = h2.iter().all(Option::is_some) && h2.windows(2).all(|w| w[1] > w[0]);

    verdict(
        "instability growth",
        rate_ok && fit_ok && h2_ok,
        t,
        format!(
            "eps 1e-3 n 2: {}; n = 1: {}; n = 3: {}; affine fit {fit:?}; eps 4e-3: {}; eps 2e-3: {}; H2 at crossing {h2:?}",
            describe(&primary),
            describe(&by_n[0]),
            describe(&by_n[1]),
            describe(&by_eps[0]),
            describe(&by_eps[1]),
        ),
    );
}

#[test]
fn quadratic_form_suite() {
    let t = Instant::now();
    let delta = 1.0;
    let g = GridSpec::with_node_at(delta, 0.005, 130.0).unwrap();
    let ns = [4usize, 8, 16, 32, 64];
    let q: Vec<f64> = ns.iter().map(|&n| quadratic_form_report(delta, n, delta, &g).unwrap().value).collect();
    let inv_n: Vec<f64> = ns.iter().map(|&n| 1.0 / n as f64).collect();
    let (slope, intercept, r2) = linear_fit(&inv_n, &q);
    let to_zero = q.windows(2).all(|w| w[1].abs() < w[0].abs()) && intercept.abs() < 1e-3 && r2 > 0.99;

    let wide = 4.0;
    let gw = GridSpec::with_node_at(wide, 0.005, 40.0).unwrap();
    let (eta, n, negative) = [0.9, 0.75, 0.5]
        .iter()
        .flat_map(|&f| [4usize, 8, 16].map(move |n| (f * wide, n)))
        .map(|(eta, n)| (eta, n, quadratic_form_report(eta, n, wide, &gw).unwrap().value))
        .fold((0.0, 0, f64::INFINITY), |best, x| if x.2 < best.2 { x } else { best });

    let d = 1.5;
    let residual = |h: f64| {
        let g = GridSpec::with_node_at(d, h, 20.0).unwrap();
        let u: Vec<f64> = g
            .nodes()
            .into_iter()
            .map(|y| {
                let s = (y - 0.3) / 5.7;
                let bump = if (0.0..1.0).contains(&s) { 256.0 * (s * (1.0 - s)).powi(4) } else { 0.0 };
                (y - d).tanh() * bump
            })
            .collect();
        let k: Vec<f64> = g.nodes().into_iter().map(|y| tanh_potential(y, d)).collect();
        factorization_residual(&u, &k, d, &g).unwrap()
    };
    let order = observed_order(residual(0.02), residual(0.01));
    verdict(
        "quadratic-form suite",
        to_zero && negative < 0.0 && order >= 1.9 && t.elapsed().as_secs_f64() < 30.0,
        t,
        format!(
            "Q(w_delta^n) for n = {ns:?}: {}, 1/n slope {slope:.3}, intercept {intercept:.1e}, R2 {r2:.4}; \
             min Q(w_eta^n) = {negative:.3e} at eta {eta:.1}, n {n} (delta {wide}); factorization order {order:.3}",
            sci(&q)
        ),
    );
}
