use crate::jet::Jet;
use crate::quad::GaussRule;
use crate::riesz::RieszSpec;
use crate::smooth::{tau_jet, theta, upsilon0, upsilon0_jet};
use crate::spectral::SpectralField;
use crate::{par, Error, Result};

fn theta_jet<const N: usize>(u: Jet<N>) -> Jet<N> {
    1.0 - tau_jet(u * 2.0 - 1.0)
}

fn omega_jet<const N: usize>(u: Jet<N>) -> Jet<N> {
    theta_jet(u) - theta_jet(u * 2.0)
}

/// Dyadic ring pieces `phi_j`, `j = 1..=j_max`, of the edge-localized
/// multiplier `(1 - upsilon0(s)) (1 - s)_+^lambda`.
///
/// For `j >= 2`, `phi_j(s) = 2^{j lambda} (1-s)^lambda (1 - upsilon0(s)) omega(2^j (1-s))`.
/// The first piece collects every bump with `j <= 1`, which telescopes to
/// `1 - theta(4 (1 - s))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingSystem {
    pub lambda: f64,
    pub j_max: u32,
}

impl RingSystem {
    pub fn new(lambda: f64, j_max: u32) -> Result<Self> {
        if !(lambda > -1.0) {
            return Err(Error::invalid("lambda must exceed -1"));
        }
        if j_max < 1 {
            return Err(Error::invalid("j_max must be >= 1"));
        }
        Ok(RingSystem { lambda, j_max })
    }

    /// Interval in `s` outside which `phi_j` vanishes.
    pub fn support(&self, j: u32) -> (f64, f64) {
        if j == 1 {
            (0.8, 1.0 - 0.125)
        } else {
            (1.0 - 2f64.powi(-(j as i32)), 1.0 - 2f64.powi(-(j as i32) - 2))
        }
    }

    pub fn phi(&self, j: u32, s: f64) -> f64 {
        let u = 1.0 - s;
        if !(u > 0.0) {
            return 0.0;
        }
        let edge = 1.0 - upsilon0(s);
        if edge == 0.0 {
            return 0.0;
        }
        let bump = if j == 1 {
            1.0 - theta(4.0 * u)
        } else {
            let v = 2f64.powi(j as i32) * u;
            theta(v) - theta(2.0 * v)
        };
        if bump == 0.0 {
            return 0.0;
        }
        (2f64.powi(j as i32) * u).powf(self.lambda) * edge * bump
    }

    pub fn phi_jet<const N: usize>(&self, j: u32, s: f64) -> Jet<N> {
        let x = Jet::<N>::variable(s);
        let u = 1.0 - x;
        if !(u.value() > 0.0) {
            return Jet::constant(0.0);
        }
        let edge = 1.0 - upsilon0_jet(x);
        let bump = if j == 1 {
            1.0 - theta_jet(u * 4.0)
        } else {
            omega_jet(u * 2f64.powi(j as i32))
        };
        (u * 2f64.powi(j as i32)).powf(self.lambda) * edge * bump
    }

    /// `sup |sum_j 2^{-j lambda} phi_j - (1 - upsilon0)(1 - s)_+^lambda|` on a
    /// uniform grid of `[0, 1 - 2^{-j_max-1}]`, where the finite sum is complete.
    pub fn reconstruction_error(&self, samples: usize) -> f64 {
        let top = 1.0 - 2f64.powi(-(self.j_max as i32) - 1);
        let errs = par::map_range(samples + 1, |i| {
            let s = top * i as f64 / samples as f64;
            let sum: f64 = (1..=self.j_max)
                .map(|j| 2f64.powf(-(j as f64) * self.lambda) * self.phi(j, s))
                .sum();
            let want = (1.0 - upsilon0(s)) * (1.0 - s).powf(self.lambda);
            (sum - want).abs()
        });
        errs.into_iter().fold(0.0, f64::max)
    }

    /// `max |phi_j'|` on a uniform grid of the support.
    pub fn max_derivative(&self, j: u32, samples: usize) -> f64 {
        let (lo, hi) = self.support(j);
        let vals = par::map_range(samples + 1, |i| {
            let s = lo + (hi - lo) * i as f64 / samples as f64;
            self.phi_jet::<2>(j, s).derivative(1).abs()
        });
        vals.into_iter().fold(0.0, f64::max)
    }

    /// `max|phi_j'| / max|phi_{j-1}'|` for `j = 3..=j_max`.
    pub fn derivative_ratios(&self, samples: usize) -> Vec<(u32, f64)> {
        (3..=self.j_max)
            .map(|j| (j, self.max_derivative(j, samples) / self.max_derivative(j - 1, samples)))
            .collect()
    }
}

/// `(int_1^2 ||T_j f(., t)||_2^2 dt)^{1/2} / ||f||_2`, where `T_j` has
/// multiplier `phi_j(rho(xi / t))`. Works in either field mode.
pub fn ring_l2_ratio(c: &SpectralField, rings: &RingSystem, j: u32, spec: &RieszSpec) -> Result<f64> {
    let b = spec.rho.b();
    let (lo, hi) = rings.support(j);
    let rule = GaussRule::legendre(24);
    let parts = par::map_range(c.len(), |i| {
        let w = c.coeffs[i].norm_sqr();
        if w == 0.0 {
            return (0.0, 0.0);
        }
        let r = spec.rho.eval(&c.frequency(i));
        // phi_j(r t^{-1/b}) is nonzero for t in ((r/hi)^b, (r/lo)^b)
        let ta = (r / hi).powf(b).max(1.0);
        let tb = (r / lo).powf(b).min(2.0);
        let mut acc = 0.0;
        if tb > ta {
            let panels = 8;
            let h = (tb - ta) / panels as f64;
            for p in 0..panels {
                let a = ta + p as f64 * h;
                acc += rule.integrate(a, a + h, |t| rings.phi(j, r * t.powf(-1.0 / b)).powi(2));
            }
        }
        (w * acc, w)
    });
    let num: Vec<f64> = parts.iter().map(|p| p.0).collect();
    let den: Vec<f64> = parts.iter().map(|p| p.1).collect();
    let den = par::pairwise_sum(&den);
    if den == 0.0 {
        return Err(Error::invalid("zero field"));
    }
    Ok((par::pairwise_sum(&num) / den).sqrt())
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pieces_sum_to_the_edge_multiplier() {
        for lambda in [-0.5, 0.0, 0.5, 1.5] {
            let r = RingSystem::new(lambda, 12).unwrap();
            assert!(r.reconstruction_error(4000) < 1e-8, "lambda {lambda}");
        }
    }

    #[test]
    fn derivative_doubles_per_ring() {
        let r = RingSystem::new(0.5, 10).unwrap();
        for (j, q) in r.derivative_ratios(2000) {
            if j >= 5 {
                assert!((q - 2.0).abs() < 1e-3, "j {j} ratio {q}");
            }
        }
    }
}
