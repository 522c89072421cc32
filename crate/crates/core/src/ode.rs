//! Dormand–Prince 5(4) with step-size control, for small fixed-size complex
//! systems.

use num_complex::Complex64;

#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-14 }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[Complex64; N], terms: &[(f64, &[Complex64; N])], h: f64) -> [Complex64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += k[i] * (h * c);
        }
    }
    out
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction). `h` is the
/// initial step guess and is updated to the last accepted step. Returns the
/// number of accepted steps.
pub fn integrate<const N: usize, F>(
    f: &mut F,
    t0: f64,
    t1: f64,
    y: &mut [Complex64; N],
    h: &mut f64,
    tol: Tolerance,
) -> usize
where
    F: FnMut(f64, &[Complex64; N]) -> [Complex64; N],
{
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();
    if span == 0.0 {
        return 0;
    }
    let mut t = t0;
    let mut step = h.abs().min(span).max(1e-12 * span);
    let mut k1 = f(t, y);
    let mut accepted = 0;
    loop {
        let remaining = (t1 - t) * dir;
        if remaining <= 1e-14 * span.max(1.0) {
            break;
        }
        let last = step >= remaining;
        let hs = if last { remaining } else { step } * dir;

        let k2 = f(t + C2 * hs, &axpy(y, &[(A21, &k1)], hs));
        let k3 = f(t + C3 * hs, &axpy(y, &[(A31, &k1), (A32, &k2)], hs));
        let k4 = f(t + C4 * hs, &axpy(y, &[(A41, &k1), (A42, &k2), (A43, &k3)], hs));
        let k5 = f(t + C5 * hs, &axpy(y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], hs));
        let k6 = f(t + hs, &axpy(y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], hs));
        let y_new = axpy(y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], hs);
        let k7 = f(t + hs, &y_new);

        let mut err = 0.0f64;
        for i in 0..N {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * hs;
            let scale = tol.atol + tol.rtol * y[i].norm().max(y_new[i].norm());
            err = err.max(e.norm() / scale);
        }

        if err <= 1.0 {
            t = if last { t1 } else { t + hs };
            *y = y_new;
            k1 = k7;
            accepted += 1;
            if !last {
                *h = step;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            step *= factor;
        } else {
            step *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
        }
        if step < 1e-14 * span.max(1.0) {
            // Tolerance unattainable; accept what we have rather than loop.
            step = 1e-14 * span.max(1.0);
        }
    }
    accepted
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_and_oscillator() {
        let mut f = |_t: f64, y: &[Complex64; 2]| [y[1], -y[0]];
        let mut y = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        let mut h = 0.1;
        integrate(&mut f, 0.0, 3.0, &mut y, &mut h, Tolerance::default());
        assert!((y[0].re - 3f64.sin()).abs() < 1e-9);

        let lam = Complex64::new(-0.3, 2.0);
        let mut g = |_t: f64, y: &[Complex64; 1]| [y[0] * lam];
        let mut z = [Complex64::new(1.0, 0.0)];
        let mut h = 0.1;
        integrate(&mut g, 2.0, 0.0, &mut z, &mut h, Tolerance::default());
        let exact = (lam * -2.0).exp();
        assert!((z[0] - exact).norm() < 1e-9 * exact.norm());
    }
}
