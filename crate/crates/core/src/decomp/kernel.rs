use std::f64::consts::PI;

use num_complex::Complex64;

use super::caps::CapSystem;
use super::rings::RingSystem;
use crate::distance::HomogeneousDistance;
use crate::quad::GaussRule;
use crate::smooth::theta;
use crate::special::bessel_j0;
use crate::{par, Error, Result};

/// Node budget for a single kernel evaluation.
pub const KERNEL_NODE_BUDGET: usize = 1 << 26;

/// `Phi_n(x)`: `Phi_0 = theta(|x|)`, `Phi_n(x) = Phi_0(2^{-n} x) - Phi_0(2^{1-n} x)`.
pub fn shell(n: u32, x_norm: f64) -> f64 {
    if n == 0 {
        theta(x_norm)
    } else {
        theta(2f64.powi(-(n as i32)) * x_norm) - theta(2f64.powi(1 - n as i32) * x_norm)
    }
}

/// The ring-cap kernel `K_{j,nu} = F^{-1}[phi_j(rho) chi_{j,nu}]` in `d = 2`.
#[derive(Debug, Clone)]
pub struct KernelTile {
    pub j: u32,
    pub nu: usize,
    pub rings: RingSystem,
    pub caps: CapSystem,
    pub rho: HomogeneousDistance,
    rule: GaussRule,
    mass: f64,
}

impl KernelTile {
    pub fn new(rings: RingSystem, caps: CapSystem, nu: usize, rho: HomogeneousDistance) -> Result<Self> {
        if rho.dim() != 2 || caps.d != 2 {
            return Err(Error::invalid("kernel tiles are evaluated in d = 2"));
        }
        if nu >= caps.len() {
            return Err(Error::invalid(format!("cap index {nu} out of range")));
        }
        let j = caps.j;
        let mut tile = KernelTile {
            j,
            nu,
            rings,
            caps,
            rho,
            rule: GaussRule::legendre(16),
            mass: 0.0,
        };
        tile.mass = tile.quadrature(&[0.0, 0.0], 2, 2)?.re;
        Ok(tile)
    }

    /// Unit center direction of the cap.
    pub fn direction(&self) -> &[f64] {
        &self.caps.dirs[self.nu]
    }

    /// Unit normal `e_{j,nu}` at the cap center.
    pub fn normal(&self) -> &[f64] {
        &self.caps.centers[self.nu].normal
    }

    /// `h - <h, e> e`.
    pub fn project(&self, h: &[f64]) -> Vec<f64> {
        let e = self.normal();
        let p: f64 = h.iter().zip(e).map(|(a, b)| a * b).sum();
        h.iter().zip(e).map(|(a, b)| a - p * b).collect()
    }

    /// `int |phi_j chi_nu|`, which equals `K(0)`.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    fn quadrature(&self, x: &[f64], pr_min: usize, pt_min: usize) -> Result<Complex64> {
        let j = self.j;
        let b = self.rho.b();
        let (slo, shi) = self.rings.support(j);
        let xn = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let sp = 2f64.powi(-(j as i32) - 4).min(1.0 / (8.0 * (1.0 + xn)));
        let dir = self.direction();
        let th0 = dir[1].atan2(dir[0]);
        let half = self.caps.support_radius();
        // extremes of the radial support over the cap
        let mut rmin = f64::INFINITY;
        let mut rmax = 0.0f64;
        for k in 0..=32 {
            let th = th0 - half + 2.0 * half * k as f64 / 32.0;
            let rw = self.rho.eval(&[th.cos(), th.sin()]);
            rmin = rmin.min((slo / rw).powf(b));
            rmax = rmax.max((shi / rw).powf(b));
        }
        let nr = self.rule.len();
        let pr = (((rmax - rmin) / (nr as f64 * sp)).ceil() as usize).max(pr_min);
        let pt = ((rmax * 2.0 * half / (nr as f64 * sp)).ceil() as usize).max(pt_min);
        let nodes = pr * pt * nr * nr;
        if nodes > KERNEL_NODE_BUDGET {
            return Err(Error::BudgetExceeded(format!(
                "kernel quadrature needs {nodes} nodes at |x| = {xn}"
            )));
        }
        let ht = 2.0 * half / pt as f64;
        let tnodes: Vec<(f64, f64)> = (0..pt)
            .flat_map(|p| {
                let a = th0 - half + p as f64 * ht;
                self.rule.mapped(a, a + ht).collect::<Vec<_>>()
            })
            .collect();
        let parts = par::map_slice(&tnodes, |&(th, wt)| {
            let chi = self.caps.chi_angle(self.nu, th.rem_euclid(2.0 * PI));
            if chi == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let (s, c) = th.sin_cos();
            let rw = self.rho.eval(&[c, s]);
            let lo = (slo / rw).powf(b);
            let hi = (shi / rw).powf(b);
            let proj = c * x[0] + s * x[1];
            let hr = (hi - lo) / pr as f64;
            let mut acc = Complex64::new(0.0, 0.0);
            for p in 0..pr {
                let a = lo + p as f64 * hr;
                for (r, wr) in self.rule.mapped(a, a + hr) {
                    let phi = self.rings.phi(self.j, rw * r.powf(1.0 / b));
                    if phi == 0.0 {
                        continue;
                    }
                    let ph = 2.0 * PI * r * proj;
                    acc += Complex64::new(ph.cos(), ph.sin()) * (wr * r * phi);
                }
            }
            acc * (wt * chi)
        });
        Ok(par::pairwise_sum_complex(&parts))
    }

    /// `K_{j,nu}(x)` with a two-level refinement check relative to the
    /// integrand's `L^1` mass.
    pub fn eval(&self, x: &[f64]) -> Result<Complex64> {
        if x.len() != 2 {
            return Err(Error::invalid("kernel tiles take points in R^2"));
        }
        let coarse = self.quadrature(x, 2, 2)?;
        let fine = self.quadrature(x, 4, 4)?;
        let fine = if (coarse - fine).norm() > 1e-6 * self.mass.max(f64::MIN_POSITIVE) {
            let finer = self.quadrature(x, 8, 8)?;
            if (finer - fine).norm() > 1e-6 * self.mass {
                return Err(Error::tolerance(
                    "kernel refinement",
                    format!("levels differ by {:e} at x = {x:?}", (finer - fine).norm()),
                ));
            }
            finer
        } else {
            fine
        };
        Ok(fine)
    }

    /// Shell-truncated kernel `K_{j,nu}(x) Phi_n(2^{-j} x)`.
    pub fn eval_shell(&self, n: u32, x: &[f64]) -> Result<Complex64> {
        let xn = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let s = shell(n, 2f64.powi(-(self.j as i32)) * xn);
        if s == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(self.eval(x)? * s)
    }
}

/// One row of a shell-decay tabulation.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellDecayRow {
    pub n: u32,
    pub xi_norm: f64,
    pub dist: f64,
    pub value: f64,
    pub bound: f64,
    pub ratio: f64,
}

/// `|hat{K_j^n}(xi)|` against `2^{-2n} (1 + 2^j dist(xi, cosphere))^{-2}` for
/// a radial distance in `d = 2`, via Hankel transforms with `J_0`.
pub fn multiplier_shell_decay(
    rho: &HomogeneousDistance,
    rings: &RingSystem,
    j: u32,
    n_values: &[u32],
    xi_norms: &[f64],
) -> Result<Vec<ShellDecayRow>> {
    if rho.dim() != 2 || !rho.is_radial() {
        return Err(Error::invalid("shell decay tables need a radial distance in d = 2"));
    }
    let b = rho.b();
    let (slo, shi) = rings.support(j);
    let (rlo, rhi) = (slo.powf(b), shi.powf(b));
    let rule = GaussRule::legendre(16);
    let kj = |s: f64| -> f64 {
        let panels = (((rhi - rlo) * (4.0 * s + 16.0 * 2f64.powi(j as i32))).ceil() as usize).max(4);
        let h = (rhi - rlo) / panels as f64;
        let mut acc = 0.0;
        for p in 0..panels {
            let a = rlo + p as f64 * h;
            acc += rule.integrate(a, a + h, |r| {
                rings.phi(j, rho.eval_radial(r)) * bessel_j0(2.0 * PI * r * s) * r
            });
        }
        2.0 * PI * acc
    };
    let scale = 2f64.powi(j as i32);
    let xmax = xi_norms.iter().copied().fold(0.0, f64::max);
    let mut rows = Vec::new();
    for &n in n_values {
        let (s0, s1) = if n == 0 {
            (0.0, scale)
        } else {
            (scale * 2f64.powi(n as i32 - 2), scale * 2f64.powi(n as i32))
        };
        // outer nodes resolve both oscillations, about 1/(1 + |xi|) per unit length
        let panels = (((s1 - s0) * (2.0 + 2.0 * xmax)).ceil() as usize).max(8);
        let h = (s1 - s0) / panels as f64;
        let nodes: Vec<(f64, f64)> = (0..panels)
            .flat_map(|p| {
                let a = s0 + p as f64 * h;
                rule.mapped(a, a + h).collect::<Vec<_>>()
            })
            .collect();
        let weights: Vec<f64> = par::map_slice(&nodes, |&(s, w)| {
            let sh = shell(n, s / scale);
            if sh == 0.0 {
                0.0
            } else {
                w * kj(s) * sh * s
            }
        });
        for &xn in xi_norms {
            let terms: Vec<f64> = nodes
                .iter()
                .zip(&weights)
                .map(|(&(s, _), &w)| w * bessel_j0(2.0 * PI * xn * s))
                .collect();
            let value = (2.0 * PI * par::pairwise_sum(&terms)).abs();
            let dist = (xn - 1.0).abs();
            let bound = 2f64.powi(-2 * n as i32) * (1.0 + scale * dist).powi(-2);
            rows.push(ShellDecayRow {
                n,
                xi_norm: xn,
                dist,
                value,
                bound,
                ratio: value / bound,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shells_telescope() {
        for k in 0..200 {
            let x = 0.05 * k as f64 * (1.0 + k as f64 / 10.0);
            let s: f64 = (0..40).map(|n| shell(n, x)).sum();
            assert!((s - 1.0).abs() < 1e-12, "x {x}");
        }
        assert_eq!(shell(0, 0.4), 1.0);
        assert_eq!(shell(0, 1.0), 0.0);
    }
}
