use proptest::prelude::*;
use slipstab::grid::observed_order;
use slipstab::heat_robin::*;
use slipstab::profiles::{build_tanh_profile, match_navier_condition, ShearProfile, TanhProfileParams};
use slipstab::{Error, GridSpec};

fn matched() -> ShearProfile {
    let m = match_navier_condition(1.0).unwrap();
    build_tanh_profile(m.params, m.params.default_grid()).unwrap()
}

#[test]
fn zero_data_stays_zero() {
    let g = GridSpec::new(DEFAULT_Y_MAX, 501).unwrap();
    let mut s = BaseFlowState::new(g, vec![0.0; g.n], 1.0).unwrap();
    for _ in 0..20 {
        s = step_crank_nicolson(&s, 0.1).unwrap();
    }
    assert!(s.ubar.iter().all(|&v| v == 0.0));
    assert!((s.t - 2.0).abs() < 1e-12);
}

#[test]
fn nonpositive_step_is_rejected() {
    let g = GridSpec::new(10.0, 101).unwrap();
    let s = BaseFlowState::new(g, vec![0.0; g.n], 1.0).unwrap();
    assert!(matches!(step_crank_nicolson(&s, 0.0), Err(Error::InvalidInput(_))));
}

#[test]
fn sup_norm_never_grows_for_dissipative_wall() {
    let g = GridSpec::new(DEFAULT_Y_MAX, 2001).unwrap();
    let p = matched();
    for a in [0.0, 0.5, 1.0, 4.0] {
        let dt = max_principle_dt(&g, a, 1.0);
        let cn = CrankNicolson::new(&g, a, &vec![1.0; g.n], dt);
        let mut s = BaseFlowState::from_profile(&p, g, a).unwrap();
        let mut last = s.sup_norm();
        for _ in 0..500 {
            cn.step(&mut s.ubar, None);
            let now = s.sup_norm();
            assert!(now <= last * (1.0 + 1e-14), "A = {a}: {last} -> {now}");
            last = now;
        }
    }
}

/// `e^{-κ²t} cos(κ(Y - L))` solves the heat equation with `∂_Y u(L) = 0` and
/// `½ ∂_Y u(0) = A u(0)` for `A = ½ κ tan(κL)`.
fn exact(kappa: f64, len: f64, t: f64, y: f64) -> f64 {
    (-kappa * kappa * t).exp() * (kappa * (y - len)).cos()
}

#[test]
fn converges_at_second_order_against_exact_solution() {
    let (kappa, len, t_end) = (1.0f64, 1.0, 0.5);
    let a = 0.5 * kappa * (kappa * len).tan();
    let err = |n: usize| {
        let g = GridSpec::new(len, n).unwrap();
        let u0 = g.nodes().into_iter().map(|y| exact(kappa, len, 0.0, y)).collect();
        let s = BaseFlowState::new(g, u0, a).unwrap();
        let end = evolve(&s, g.h(), t_end).unwrap();
        end.ubar.iter().enumerate().map(|(j, v)| (v - exact(kappa, len, t_end, g.node(j))).abs()).fold(0.0, f64::max)
    };
    let e = [err(41), err(81), err(161)];
    assert!(observed_order(e[0], e[1]) >= 1.9, "{e:?}");
    assert!(observed_order(e[1], e[2]) >= 1.9, "{e:?}");
}

#[test]
fn tanh_data_self_converges_at_second_order() {
    let p = matched();
    let run = |n: usize| {
        let g = GridSpec::new(20.0, n).unwrap();
        let s = BaseFlowState::from_profile(&p, g, 1.0).unwrap();
        evolve(&s, 0.5 * g.h(), 1.0).unwrap().ubar
    };
    let (c, f, ff) = (run(201), run(401), run(801));
    let e1 = (0..201).map(|j| (c[j] - f[2 * j]).abs()).fold(0.0, f64::max);
    let e2 = (0..401).map(|j| (f[j] - ff[2 * j]).abs()).fold(0.0, f64::max);
    assert!(observed_order(e1, e2) >= 1.9, "{e1} -> {e2}");
}

#[test]
fn drift_starts_at_zero_and_does_not_grow_as_eps_shrinks() {
    let p = matched();
    let grid = GridSpec::new(DEFAULT_Y_MAX, 2001).unwrap();
    let maxima: Vec<f64> = [1e-2, 5e-3, 2.5e-3]
        .iter()
        .map(|&eps| {
            let d = baseflow_drift(&p, 1.0, &DriftConfig { eps, dt: 1e-4, step_budget: 1_000_000, grid }).unwrap();
            assert_eq!(d.drift_norm[0], 0.0);
            assert_eq!(d.t[0], 0.0);
            assert!((d.t.last().unwrap() - eps.powf(-1.0 / 32.0)).abs() < 1e-9);
            d.max_drift
        })
        .collect();
    assert!(maxima.windows(2).all(|w| w[1] <= 1.05 * w[0]), "{maxima:?}");
}

#[test]
fn drift_window_respects_the_budget() {
    let p = matched();
    let grid = GridSpec::new(DEFAULT_Y_MAX, 501).unwrap();
    let cfg = DriftConfig { eps: 1e-2, dt: 1e-5, step_budget: 100, grid };
    assert!(matches!(baseflow_drift(&p, 1.0, &cfg), Err(Error::WindowTooLong { .. })));
}

#[test]
fn neumann_wall_conserves_mass() {
    let p = build_tanh_profile(TanhProfileParams::new(1.0, 0.3).unwrap(), GridSpec::new(DEFAULT_Y_MAX, 2001).unwrap()).unwrap();
    let s = BaseFlowState::from_profile(&p, p.grid, 0.0).unwrap();
    let end = evolve(&s, 0.01, 5.0).unwrap();
    let drift = (end.mass() - s.mass()).abs() / s.mass().abs();
    // Exact in exact arithmetic; 500 steps over 2001 nodes accumulate rounding.
    assert!(drift <= 1e-10, "relative mass change {drift:e}");
}

#[test]
fn wall_residual_stays_at_rounding() {
    let p = matched();
    let g = GridSpec::new(DEFAULT_Y_MAX, 2001).unwrap();
    let mut s = BaseFlowState::from_profile(&p, g, 1.0).unwrap();
    for _ in 0..50 {
        s = step_crank_nicolson(&s, 0.01).unwrap();
        assert!(s.robin_residual_centered() <= 1e-8);
    }
}

#[test]
fn linear_robin_states_are_interior_fixed_points() {
    let g = GridSpec::new(10.0, 101).unwrap();
    let a = 0.7;
    let u: Vec<f64> = g.nodes().into_iter().map(|y| 1.0 + 2.0 * a * y).collect();
    let lu = robin_laplacian(&g, a, &vec![1.0; g.n]).apply(&u);
    assert!(lu[..g.n - 1].iter().all(|v| v.abs() < 1e-10), "{:?}", &lu[..3]);
    assert!(lu[g.n - 1] < 0.0);
}

#[test]
fn snapshot_csv_has_one_row_per_node() {
    let dir = tempfile::tempdir().unwrap();
    let g = GridSpec::new(5.0, 11).unwrap();
    let s = BaseFlowState::new(g, vec![1.0; 11], 1.0).unwrap();
    let path = dir.path().join("b.csv");
    s.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.starts_with("Y,ubar\n"));
    assert_eq!(text.lines().count(), 12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn energy_is_non_increasing_for_dissipative_wall(
        coeffs in prop::collection::vec(-1.0f64..1.0, 6),
        a in 0.0f64..5.0,
        dt in 1e-3f64..1.0,
    ) {
        let g = GridSpec::new(10.0, 201).unwrap();
        let u = g.nodes().into_iter().map(|y| {
            coeffs.iter().enumerate().map(|(i, c)| c * (0.5 * i as f64 * y).cos()).sum()
        }).collect();
        let mut s = BaseFlowState::new(g, u, a).unwrap();
        let mut last = s.energy();
        for _ in 0..20 {
            s = step_crank_nicolson(&s, dt).unwrap();
            let e = s.energy();
            prop_assert!(e <= last * (1.0 + 1e-12) + 1e-300);
            last = e;
        }
    }

    #[test]
    fn robin_row_is_satisfied_for_any_coefficient(a in -3.0f64..3.0, amp in -2.0f64..2.0) {
        let g = GridSpec::new(10.0, 201).unwrap();
        let u = g.nodes().into_iter().map(|y| amp * (-(y - 1.0).powi(2)).exp()).collect();
        let s = evolve(&BaseFlowState::new(g, u, a).unwrap(), 0.01, 0.2).unwrap();
        prop_assert!(s.robin_residual_centered() <= 1e-12);
    }
}
