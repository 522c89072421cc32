use std::sync::OnceLock;

use num_complex::Complex64;
use slipstab::grid::observed_order;
use slipstab::profiles::{build_tanh_profile, curvature_function, match_navier_condition, ShearProfile};
use slipstab::rayleigh::*;
use slipstab::spectral1d::negative_spectrum;
use slipstab::{Error, GridSpec};

struct Setup {
    profile: ShearProfile,
    mu: f64,
    curve: DispersionCurve,
}

fn setup() -> &'static Setup {
    static S: OnceLock<Setup> = OnceLock::new();
    S.get_or_init(|| {
        let m = match_navier_condition(1.0).unwrap();
        let profile = build_tanh_profile(m.params, m.params.default_grid()).unwrap();
        let k = curvature_function(&profile).unwrap();
        let mu = negative_spectrum(&k, &profile.grid).unwrap().mu.unwrap();
        let curve = trace_dispersion(&profile, mu, 0.1 * mu, 0.98 * mu, 45).unwrap();
        Setup { profile, mu, curve }
    })
}

fn sup(psi: &[Complex64]) -> f64 {
    psi.iter().map(|p| p.norm()).fold(0.0, f64::max)
}

#[test]
fn band_edge_of_matched_profile_is_one_half() {
    assert!((setup().mu - 0.5).abs() < 1e-4, "mu = {}", setup().mu);
}

#[test]
fn unstable_mode_inside_the_band() {
    let s = setup();
    let k = 0.5 * s.mu;
    let mode = solve_mode(&s.profile, k, seed_guess(&s.profile, k, s.mu)).unwrap();
    assert!(mode.sigma > 0.0);
    assert!(mode.k < s.mu);
    assert_eq!(mode.psi[0], Complex64::new(0.0, 0.0));
    assert!((sup(&mode.psi) - 1.0).abs() < 1e-12);
    assert_eq!(mode.lambda_c.re, mode.sigma);
    assert!((mode.lambda_c.im + k * mode.c.re).abs() < 1e-15);
}

#[test]
fn no_unstable_mode_beyond_the_band() {
    let s = setup();
    let k = 1.2 * s.mu;
    let u0 = s.profile.inflection.unwrap().u0;
    for im in [0.005, 0.01, 0.05, 0.1, 0.2] {
        let err = solve_mode(&s.profile, k, Complex64::new(u0, im)).unwrap_err();
        assert!(matches!(err, Error::LeftHalfPlane { .. } | Error::NoConvergence { .. }), "{err}");
    }
}

#[test]
fn different_guesses_reach_the_same_mode() {
    let s = setup();
    let k = 0.6 * s.mu;
    let u0 = s.profile.inflection.unwrap().u0;
    let sigmas: Vec<f64> = [(u0, 0.02), (u0 + 0.02, 0.05), (u0 - 0.02, 0.08)]
        .iter()
        .map(|&(re, im)| solve_mode(&s.profile, k, Complex64::new(re, im)).unwrap().sigma)
        .collect();
    assert!(sigmas.iter().all(|v| (v - sigmas[0]).abs() < 1e-9), "{sigmas:?}");
}

#[test]
fn shooting_agrees_with_matrix_pencil() {
    let s = setup();
    for frac in [0.3, 0.6] {
        let k = frac * s.mu;
        let mode = solve_mode(&s.profile, k, s.curve.c_at(k)).unwrap();
        let c = matrix_eigenvalue_extrapolated(&s.profile, k, mode.c, 1001).unwrap();
        assert!((c - mode.c).norm() < 1e-4, "k = {k}: {} vs {}", mode.c, c);
    }
}

#[test]
fn collocation_residual_is_second_order() {
    let s = setup();
    let k = 0.5 * s.mu;
    let res = |n: usize| {
        let p = s.profile.resampled(GridSpec::new(s.profile.grid.y_max, n).unwrap());
        let mode = solve_mode(&p, k, s.curve.c_at(k)).unwrap();
        collocation_residual(&p, &mode)
    };
    let (coarse, fine) = (res(1001), res(2001));
    assert!(observed_order(coarse, fine) >= 1.9, "{coarse} -> {fine}");
}

#[test]
fn dispersion_curve_invariants() {
    let s = setup();
    let c = &s.curve;
    assert!(c.sigmas.iter().all(|&v| v > 0.0));
    assert!(c.k0 > 0.0 && c.k0 < s.mu);
    assert!(c.sigma0 >= c.sigmas.iter().cloned().fold(0.0, f64::max) - 1e-12);
    assert!(c.beta_curv > 0.0);
    assert!((c.sigma0 - c.k0 * c.c0.im).abs() < 1e-6);
    assert!(c.ks.windows(2).all(|w| w[1] > w[0]));
    // The growth rate closes off toward the band edge.
    assert!(*c.sigmas.last().unwrap() < 0.25 * c.sigma0);
}

#[test]
fn dispersion_rejects_bad_ranges() {
    let s = setup();
    assert!(trace_dispersion(&s.profile, s.mu, 0.3, 0.2, 10).is_err());
    assert!(trace_dispersion(&s.profile, s.mu, 0.1, 0.2, 2).is_err());
}

#[test]
fn linearized_flow_keeps_zero_data_at_zero() {
    let s = setup();
    let p = s.profile.resampled(GridSpec::new(s.profile.grid.y_max, 501).unwrap());
    let run = evolve_linearized_euler(&p, &LinEulerConfig::new(0.3, 0.1, 5.0), &vec![Complex64::new(0.0, 0.0); 501], None).unwrap();
    assert!(run.norms.iter().flatten().all(|&v| v == 0.0));
}

fn coarse_mode(k: f64) -> (ShearProfile, RayleighMode) {
    let s = setup();
    let p = s.profile.resampled(GridSpec::new(s.profile.grid.y_max, 1001).unwrap());
    let mode = solve_mode(&p, k, s.curve.c_at(k)).unwrap();
    (p, mode)
}

#[test]
fn seeded_mode_grows_at_its_rate() {
    let k = setup().curve.k0;
    let (p, mode) = coarse_mode(k);
    let omega0 = vorticity_of(&mode.psi, k, p.grid.h());
    let run = evolve_linearized_euler(&p, &LinEulerConfig::new(k, 0.1, 150.0), &omega0, None).unwrap();
    let err = (run.growth_exponent - mode.sigma).abs() / mode.sigma;
    assert!(err < 0.02, "fitted {} vs sigma {}", run.growth_exponent, mode.sigma);
}

#[test]
fn forced_growth_is_bounded_by_the_faster_exponent() {
    let k = setup().curve.k0;
    let (p, mode) = coarse_mode(k);
    let rate = 0.05;
    let forcing = Forcing::standard(&p.grid, 1.0, rate, 2.0);
    let zero = vec![Complex64::new(0.0, 0.0); p.grid.n];
    let run = evolve_linearized_euler(&p, &LinEulerConfig::new(k, 0.1, 150.0), &zero, Some(forcing)).unwrap();
    assert!(run.growth_exponent <= rate.max(mode.sigma) + 0.05);
    assert!(run.norms[0].last().unwrap() > &0.0);
}

#[test]
fn packet_at_time_zero_is_the_envelope_integral() {
    let c = &setup().curve;
    let env = Envelope { center: c.k0, half_width: 0.1 };
    let v = wavepacket_norm(c, &env, &vec![1.0; c.ks.len()], 0.0).unwrap();
    let m = 200_000;
    let (lo, hw) = (c.k0 - 0.1, 0.2 / m as f64);
    let oracle: f64 = (0..m).map(|i| env.eval(lo + (i as f64 + 0.5) * hw).powi(2)).sum::<f64>() * hw;
    assert!((v.quadrature - oracle).abs() < 1e-9 * oracle);
}

#[test]
fn packet_outside_the_band_is_rejected() {
    let c = &setup().curve;
    let env = Envelope { center: c.k0, half_width: 0.4 };
    let err = wavepacket_norm(c, &env, &vec![1.0; c.ks.len()], 1.0).unwrap_err();
    assert!(matches!(err, Error::BandViolation { .. }));
}

#[test]
fn gaussian_majorant_matches_its_closed_form() {
    for t in [1.0, 10.0, 100.0] {
        let (quad, closed) = gaussian_majorant_check(0.015, 0.65, 0.29, 0.19, t);
        assert!((quad - closed).abs() < 1e-10 * closed, "t = {t}");
    }
}
