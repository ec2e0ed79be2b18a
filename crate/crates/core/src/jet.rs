//! Truncated Taylor series arithmetic (forward-mode AD of arbitrary order).
//!
//! A `Jet<N>` stores the normalized Taylor coefficients `f^{(k)}(s0) / k!`
//! for `k < N`. Propagating jets through a smooth expression yields exact
//! high-order derivatives without the cancellation that nested finite
//! differences suffer.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<const N: usize> {
    pub c: [f64; N],
}

impl<const N: usize> Jet<N> {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = v;
        Jet { c }
    }

    /// The independent variable at `s0`.
    pub fn variable(s0: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = s0;
        if N > 1 {
            c[1] = 1.0;
        }
        Jet { c }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// The `k`-th derivative.
    pub fn derivative(&self, k: usize) -> f64 {
        let mut f = 1.0;
        for i in 2..=k {
            f *= i as f64;
        }
        self.c[k] * f
    }

    pub fn recip(self) -> Self {
        Jet::constant(1.0) / self
    }

    pub fn exp(self) -> Self {
        let mut e = [0.0; N];
        e[0] = self.c[0].exp();
        for k in 1..N {
            let mut s = 0.0;
            for i in 1..=k {
                s += i as f64 * self.c[i] * e[k - i];
            }
            e[k] = s / k as f64;
        }
        Jet { c: e }
    }

    pub fn ln(self) -> Self {
        let a0 = self.c[0];
        let mut l = [0.0; N];
        l[0] = a0.ln();
        for k in 1..N {
            let mut s = 0.0;
            for i in 1..k {
                s += i as f64 * l[i] * self.c[k - i];
            }
            l[k] = (self.c[k] - s / k as f64) / a0;
        }
        Jet { c: l }
    }

    /// `self^r` for a positive base.
    pub fn powf(self, r: f64) -> Self {
        (self.ln() * r).exp()
    }
}

impl<const N: usize> Add for Jet<N> {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        for (a, b) in self.c.iter_mut().zip(o.c) {
            *a += b;
        }
        self
    }
}

impl<const N: usize> Sub for Jet<N> {
    type Output = Self;
    fn sub(mut self, o: Self) -> Self {
        for (a, b) in self.c.iter_mut().zip(o.c) {
            *a -= b;
        }
        self
    }
}

impl<const N: usize> Neg for Jet<N> {
    type Output = Self;
    fn neg(mut self) -> Self {
        for a in self.c.iter_mut() {
            *a = -*a;
        }
        self
    }
}

impl<const N: usize> Mul for Jet<N> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut c = [0.0; N];
        for k in 0..N {
            let mut s = 0.0;
            for i in 0..=k {
                s += self.c[i] * o.c[k - i];
            }
            c[k] = s;
        }
        Jet { c }
    }
}

impl<const N: usize> Div for Jet<N> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let mut c = [0.0; N];
        for k in 0..N {
            let mut s = self.c[k];
            for i in 1..=k {
                s -= o.c[i] * c[k - i];
            }
            c[k] = s / o.c[0];
        }
        Jet { c }
    }
}

impl<const N: usize> Add<f64> for Jet<N> {
    type Output = Self;
    fn add(mut self, v: f64) -> Self {
        self.c[0] += v;
        self
    }
}

impl<const N: usize> Sub<f64> for Jet<N> {
    type Output = Self;
    fn sub(mut self, v: f64) -> Self {
        self.c[0] -= v;
        self
    }
}

impl<const N: usize> Mul<f64> for Jet<N> {
    type Output = Self;
    fn mul(mut self, v: f64) -> Self {
        for a in self.c.iter_mut() {
            *a *= v;
        }
        self
    }
}

impl<const N: usize> Sub<Jet<N>> for f64 {
    type Output = Jet<N>;
    fn sub(self, j: Jet<N>) -> Jet<N> {
        -j + self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_of_known_functions() {
        let x = Jet::<8>::variable(0.7);
        // d^k/dx^k exp(2x) = 2^k exp(2x)
        let e = (x * 2.0).exp();
        for k in 0..8 {
            let want = 2f64.powi(k as i32) * (1.4f64).exp();
            assert!((e.derivative(k) - want).abs() < 1e-11 * want);
        }
        // (1/x)^{(k)} = (-1)^k k! x^{-k-1}
        let r = x.recip();
        let mut fact = 1.0;
        for k in 0..8 {
            if k > 0 {
                fact *= k as f64;
            }
            let want = (-1f64).powi(k as i32) * fact * 0.7f64.powi(-(k as i32) - 1);
            assert!((r.derivative(k) - want).abs() < 1e-10 * want.abs());
        }
        // x^{1/4}, ln
        let p = x.powf(0.25);
        let d3 = 0.25 * -0.75 * -1.75 * 0.7f64.powf(0.25 - 3.0);
        assert!((p.derivative(3) - d3).abs() < 1e-12 * d3.abs());
        let l = x.ln();
        assert!((l.derivative(2) + 1.0 / 0.49).abs() < 1e-12);
    }
}
