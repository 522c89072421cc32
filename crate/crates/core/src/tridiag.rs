//! Thomas algorithm for tridiagonal systems.
//!
//! Every implicit operator in the crate (3-point Laplacians with Dirichlet,
//! Robin or decay rows) reduces to one of these solves.

use std::ops::{Div, Mul, Sub};

use num_complex::Complex64;

/// Tridiagonal matrix stored by diagonals. `lower[0]` and `upper[n-1]` are unused.
#[derive(Clone, Debug)]
pub struct Tridiagonal<T> {
    pub lower: Vec<T>,
    pub diag: Vec<T>,
    pub upper: Vec<T>,
}

pub trait Scalar:
    Copy + Mul<Output = Self> + Sub<Output = Self> + Div<Output = Self> + Default
{
}
impl Scalar for f64 {}
impl Scalar for Complex64 {}

impl<T: Scalar> Tridiagonal<T> {
    pub fn new(n: usize) -> Self {
        Self { lower: vec![T::default(); n], diag: vec![T::default(); n], upper: vec![T::default(); n] }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Matrix-vector product.
    pub fn apply(&self, x: &[T]) -> Vec<T>
    where
        T: std::ops::Add<Output = T>,
    {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s = s + self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    s = s + self.upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Solves `A x = rhs` in place. No pivoting: callers only hand in
    /// diagonally dominant or symmetric positive definite operators.
    pub fn solve_in_place<R>(&self, rhs: &mut [R])
    where
        R: Copy + Sub<Output = R> + Mul<T, Output = R> + Div<T, Output = R>,
    {
        self.factor().solve_in_place(rhs);
    }

    pub fn factor(&self) -> TridiagonalLu<T> {
        let n = self.len();
        let mut c_prime = vec![T::default(); n];
        let mut denom = vec![T::default(); n];
        denom[0] = self.diag[0];
        if n > 1 {
            c_prime[0] = self.upper[0] / denom[0];
        }
        for i in 1..n {
            denom[i] = self.diag[i] - self.lower[i] * c_prime[i - 1];
            if i + 1 < n {
                c_prime[i] = self.upper[i] / denom[i];
            }
        }
        TridiagonalLu { lower: self.lower.clone(), c_prime, denom }
    }
}

/// Pre-factored tridiagonal matrix, reused when the same operator is solved
/// against many right-hand sides (time stepping).
#[derive(Clone, Debug)]
pub struct TridiagonalLu<T> {
    lower: Vec<T>,
    c_prime: Vec<T>,
    denom: Vec<T>,
}

impl<T: Scalar> TridiagonalLu<T> {
    pub fn solve_in_place<R>(&self, rhs: &mut [R])
    where
        R: Copy + Sub<Output = R> + Mul<T, Output = R> + Div<T, Output = R>,
    {
        let n = self.denom.len();
        assert_eq!(rhs.len(), n, "tridiagonal solve: size mismatch");
        rhs[0] = rhs[0] / self.denom[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - rhs[i - 1] * self.lower[i]) / self.denom[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] = rhs[i] - rhs[i + 1] * self.c_prime[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn solve_inverts_apply(n in 3usize..40, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut m = Tridiagonal::<f64>::new(n);
            for i in 0..n {
                m.lower[i] = rng.gen_range(-1.0..1.0);
                m.upper[i] = rng.gen_range(-1.0..1.0);
                m.diag[i] = 3.0 + rng.gen_range(0.0..1.0);
            }
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut b = m.apply(&x);
            m.solve_in_place(&mut b);
            for (a, e) in b.iter().zip(&x) {
                prop_assert!((a - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn complex_system() {
        let n = 6;
        let mut m = Tridiagonal::<Complex64>::new(n);
        for i in 0..n {
            m.lower[i] = Complex64::new(-1.0, 0.3);
            m.upper[i] = Complex64::new(-1.0, -0.2);
            m.diag[i] = Complex64::new(4.0, 1.0);
        }
        let x: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0 - i as f64)).collect();
        let mut b = m.apply(&x);
        m.factor().solve_in_place(&mut b);
        for (a, e) in b.iter().zip(&x) {
            assert!((a - e).norm() < 1e-13);
        }
    }
}
