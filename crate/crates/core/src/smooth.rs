//! Smooth cutoff building blocks.
//!
//! Everything here is assembled from the flat mollifier `beta(s) = exp(-1/s)`.

use crate::jet::Jet;

pub fn beta(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

/// Smooth step: 0 for `s <= 0`, 1 for `s >= 1`.
pub fn tau(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let a = beta(s);
        a / (a + beta(1.0 - s))
    }
}

/// Origin cutoff: 1 on `[0, 4/5]`, 0 from `9/10` on.
pub fn upsilon0(s: f64) -> f64 {
    1.0 - tau(10.0 * (s - 0.8))
}

/// Plateau bump in one variable: 1 for `u <= 1/2`, 0 for `u >= 1`.
pub fn theta(u: f64) -> f64 {
    1.0 - tau(2.0 * u - 1.0)
}

/// Dyadic partition bump supported in `[1/4, 1]` with `sum_j omega(2^j u) = 1`.
pub fn omega(u: f64) -> f64 {
    theta(u) - theta(2.0 * u)
}

/// Smooth plateau: 1 on `[a, b]`, 0 outside `[a/2, 2b]`, logarithmic ramps.
pub fn plateau(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.5 * a || x >= 2.0 * b {
        0.0
    } else if x >= a && x <= b {
        1.0
    } else if x < a {
        tau((x / (0.5 * a)).log2())
    } else {
        1.0 - tau((x / b).log2())
    }
}

pub fn beta_jet<const N: usize>(s: Jet<N>) -> Jet<N> {
    if s.value() > 0.0 {
        (-(s.recip())).exp()
    } else {
        Jet::constant(0.0)
    }
}

pub fn tau_jet<const N: usize>(s: Jet<N>) -> Jet<N> {
    let v = s.value();
    if v <= 0.0 {
        Jet::constant(0.0)
    } else if v >= 1.0 {
        Jet::constant(1.0)
    } else {
        let a = beta_jet(s);
        a / (a + beta_jet(1.0 - s))
    }
}

pub fn upsilon0_jet<const N: usize>(s: Jet<N>) -> Jet<N> {
    1.0 - tau_jet((s - 0.8) * 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_values() {
        assert_eq!(upsilon0(0.8), 1.0);
        assert_eq!(upsilon0(0.9), 0.0);
        assert_eq!(upsilon0(0.3), 1.0);
        assert!((tau(0.5) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for i in 0..=1000 {
            let v = upsilon0(i as f64 / 1000.0);
            assert!(v <= prev && (0.0..=1.0).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn omega_partition() {
        for i in 1..200 {
            let u = 0.013 * i as f64 + 1e-3;
            let s: f64 = (-40..40).map(|j| omega(2f64.powi(j) * u)).sum();
            assert!((s - 1.0).abs() < 1e-14, "u={u}: {s}");
        }
        assert_eq!(omega(0.25), 0.0);
        assert_eq!(omega(1.0), 0.0);
    }

    #[test]
    fn jet_matches_scalar() {
        for &s in &[0.1, 0.82, 0.85, 0.89, 0.95] {
            let j = upsilon0_jet(Jet::<4>::variable(s));
            assert!((j.value() - upsilon0(s)).abs() < 1e-15);
            let h = 1e-6;
            let fd = (upsilon0(s + h) - upsilon0(s - h)) / (2.0 * h);
            assert!((j.derivative(1) - fd).abs() < 1e-5 * (1.0 + fd.abs()));
        }
    }
}
