//! Discrete Leray energy balance
//! `‖u(t)‖² + 4νA ∫₀ᵗ ∫_wall |u|² + 4ν ∫₀ᵗ ∫ |Su|² ≤ ‖u(0)‖²`.

use serde::{Deserialize, Serialize};

use super::{mean_derivative, psi_derivative, Field2D, SolverConfig};
use crate::grid::trapezoid;

/// Instantaneous quantities of one field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRates {
    /// `∫|u|²`.
    pub kinetic: f64,
    /// `∫_wall |u|²`.
    pub wall: f64,
    /// `∫|Su|²`.
    pub strain: f64,
}

impl EnergyRates {
    pub fn of(field: &Field2D) -> Self {
        let n = field.grid.n;
        let h = field.grid.h();
        let lx = field.lx;
        let mut ke = Vec::with_capacity(n);
        let mut st = Vec::with_capacity(n);
        for j in 0..n {
            let du = mean_derivative(&field.mean, h, j);
            let mut e = field.mean[j] * field.mean[j];
            let mut s = 0.5 * du * du;
            for m in 1..=field.modes() {
                let k = field.k(m);
                let psi = &field.psi[m - 1];
                let (u1, u2) = field.velocity(m, j);
                e += 2.0 * (u1.norm_sqr() + u2.norm_sqr());
                // S11 = ik u1, S12 = (ψ'' + k²ψ)/2 with ψ'' = k²ψ - ω.
                let s11 = u1 * k;
                let s12 = psi[j] * (k * k) - field.omega[m - 1][j] * 0.5;
                s += 2.0 * (2.0 * s11.norm_sqr() + 2.0 * s12.norm_sqr());
            }
            ke.push(e);
            st.push(s);
        }
        let mut wall = field.mean[0] * field.mean[0];
        for m in 1..=field.modes() {
            wall += 2.0 * psi_derivative(&field.psi[m - 1], h, field.k(m), 0).norm_sqr();
        }
        Self { kinetic: lx * trapezoid(&ke, h), wall: lx * wall, strain: lx * trapezoid(&st, h) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub t: f64,
    pub kinetic: f64,
    /// Cumulative `4νA ∫ ∫_wall |u|²` (negative for `A < 0`).
    pub wall: f64,
    /// Cumulative `4ν ∫ ∫ |Su|²`.
    pub strain: f64,
    pub violated: bool,
}

impl LedgerRow {
    pub fn total(&self) -> f64 {
        self.kinetic + self.wall + self.strain
    }
}

/// Streaming ledger: fed one field per step, keeps only the running sums.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub nu: f64,
    pub robin_coef: f64,
    /// Relative slack on `KE(0)`.
    pub tolerance: f64,
    pub rows: Vec<LedgerRow>,
    last: EnergyRates,
}

impl EnergyLedger {
    pub const DEFAULT_TOLERANCE: f64 = 1e-3;

    pub fn new(config: &SolverConfig, initial: &Field2D) -> Self {
        let rates = EnergyRates::of(initial);
        let row = LedgerRow { t: initial.t, kinetic: rates.kinetic, wall: 0.0, strain: 0.0, violated: false };
        Self {
            nu: config.nu,
            robin_coef: config.robin_coef,
            tolerance: Self::DEFAULT_TOLERANCE,
            rows: vec![row],
            last: rates,
        }
    }

    pub fn from_trajectory(config: &SolverConfig, trajectory: &[Field2D]) -> Option<Self> {
        let (first, rest) = trajectory.split_first()?;
        let mut ledger = Self::new(config, first);
        rest.iter().for_each(|f| ledger.record(f));
        Some(ledger)
    }

    pub fn initial_energy(&self) -> f64 {
        self.rows[0].kinetic
    }

    pub fn record(&mut self, field: &Field2D) {
        let rates = EnergyRates::of(field);
        let prev = *self.rows.last().expect("ledger has an initial row");
        let dt = field.t - prev.t;
        let wall = prev.wall + 2.0 * self.nu * self.robin_coef * dt * (self.last.wall + rates.wall);
        let strain = prev.strain + 2.0 * self.nu * dt * (self.last.strain + rates.strain);
        let mut row = LedgerRow { t: field.t, kinetic: rates.kinetic, wall, strain, violated: false };
        row.violated = row.total() > self.initial_energy() * (1.0 + self.tolerance);
        self.rows.push(row);
        self.last = rates;
    }

    /// No step exceeds `KE(0)` by more than the slack.
    pub fn holds(&self) -> bool {
        self.rows.iter().all(|r| !r.violated)
    }

    /// `max_t (KE + wall + strain - KE(0)) / KE(0)`.
    pub fn max_relative_excess(&self) -> f64 {
        let e0 = self.initial_energy();
        self.rows.iter().map(|r| (r.total() - e0) / e0).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest increase of `KE + strain` between consecutive rows, relative to `KE(0)`.
    pub fn max_relative_increase_without_wall(&self) -> f64 {
        let e0 = self.initial_energy();
        self.rows
            .windows(2)
            .map(|w| ((w[1].kinetic + w[1].strain) - (w[0].kinetic + w[0].strain)) / e0)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}
