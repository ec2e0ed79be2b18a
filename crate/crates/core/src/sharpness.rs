//! Plate test functions and the exponent scan for the strong-mean
//! lower bound, with `rho = |xi|` in the plane.
//!
//! The Riesz means of a plate are computed in space: the plate is small, so
//! `R_t f_T(x) = int_P t^2 K(t(x - y)) f_T(y) dy` with the radial kernel
//! `K(s) = 2 pi int_0^1 (1 - r)^lambda J_0(2 pi r s) r dr` tabulated once.

use std::f64::consts::PI;

use crate::fit::{fit_line, LineFit};
use crate::quad::{integrate_right_singular, GaussRule};
use crate::special::bessel_j0;
use crate::spectral::weak_lp_weighted;
use crate::{par, Complex64, Error, Result};

/// `f_T(y) = 1_P(y) e^{2 pi i eps T y_d}` on the plate
/// `P = {|y'| <= eps/T, |y_d| <= eps/sqrt(T)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateFunction {
    pub d: usize,
    pub t: f64,
    pub eps: f64,
}

fn sinc_factor(xi: f64, a: f64) -> f64 {
    // int_{-a}^{a} e^{-2 pi i xi y} dy
    let z = 2.0 * PI * xi * a;
    if z.abs() < 1e-4 {
        2.0 * a * (1.0 - z * z / 6.0 + z.powi(4) / 120.0)
    } else {
        z.sin() / (PI * xi)
    }
}

impl PlateFunction {
    pub fn new(d: usize, t: f64, eps: f64) -> Result<Self> {
        if d == 0 || !(t >= 4.0) || !(eps > 0.0 && eps < 1.0) {
            return Err(Error::invalid("plate needs d >= 1, T >= 4 and eps in (0, 1)"));
        }
        Ok(PlateFunction { d, t, eps })
    }

    /// Half widths of the plate: `eps/T` across, `eps/sqrt(T)` along the last axis.
    pub fn half_widths(&self) -> (f64, f64) {
        (self.eps / self.t, self.eps / self.t.sqrt())
    }

    pub fn modulation(&self) -> f64 {
        self.eps * self.t
    }

    pub fn volume(&self) -> f64 {
        let (a, b) = self.half_widths();
        (2.0 * a).powi(self.d as i32 - 1) * 2.0 * b
    }

    pub fn eval(&self, y: &[f64]) -> Complex64 {
        let (a, b) = self.half_widths();
        let d = self.d;
        if y[..d - 1].iter().any(|v| v.abs() > a) || y[d - 1].abs() > b {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(1.0, 2.0 * PI * self.modulation() * y[d - 1])
    }

    /// Closed-form Fourier transform, a product of sinc factors.
    pub fn transform(&self, xi: &[f64]) -> Complex64 {
        let (a, b) = self.half_widths();
        let d = self.d;
        let across: f64 = xi[..d - 1].iter().map(|&v| sinc_factor(v, a)).product();
        Complex64::new(across * sinc_factor(xi[d - 1] - self.modulation(), b), 0.0)
    }

    /// `||f_T||_p = |P|^{1/p}`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        self.volume().powf(1.0 / p)
    }
}

/// Log-T slope of `||f_T||_p`.
pub fn plate_norm_slope(d: usize, p: f64) -> f64 {
    (0.5 - d as f64) / p
}

/// Predicted log-T slope of the scan quotient,
/// `d/p - 1/(2p) - d/2 - lambda - 1/(2q)`.
pub fn predicted_slope(d: usize, p: f64, q: f64, lambda: f64) -> f64 {
    let d = d as f64;
    d / p - 0.5 / p - 0.5 * d - lambda - 0.5 / q
}

/// Tabulated planar Riesz kernel `K(s)` on `[0, s_max]`.
#[derive(Debug, Clone)]
pub struct RadialKernel {
    pub lambda: f64,
    pub step: f64,
    pub values: Vec<f64>,
}

impl RadialKernel {
    pub fn direct(lambda: f64, s: f64, leg: &GaussRule, jac: &GaussRule) -> f64 {
        let panel = 0.5f64.min(1.0 / (1.0 + 2.0 * s));
        2.0 * PI * integrate_right_singular(leg, jac, lambda, 0.0, 1.0, panel, |r| bessel_j0(2.0 * PI * r * s) * r)
    }

    pub fn new(lambda: f64, s_max: f64) -> Result<Self> {
        if !(lambda > -1.0) {
            return Err(Error::invalid("riesz index must exceed -1"));
        }
        if !(s_max > 0.0 && s_max < 1e5) {
            return Err(Error::BudgetExceeded(format!("kernel table up to {s_max}")));
        }
        let step = 1.0 / 64.0;
        let n = (s_max / step).ceil() as usize + 6;
        let leg = GaussRule::legendre(20);
        let jac = GaussRule::jacobi(20, lambda, 0.0);
        let values = par::map_range(n + 1, |i| Self::direct(lambda, i as f64 * step, &leg, &jac));
        Ok(RadialKernel { lambda, step, values })
    }

    pub fn s_max(&self) -> f64 {
        (self.values.len() - 6) as f64 * self.step
    }

    /// Six-point Lagrange interpolation.
    pub fn eval(&self, s: f64) -> f64 {
        let u = s / self.step;
        let i0 = (u.floor() as isize - 2).clamp(0, self.values.len() as isize - 6) as usize;
        let mut acc = 0.0;
        for a in 0..6 {
            let mut w = 1.0;
            for b in 0..6 {
                if a != b {
                    w *= (u - (i0 + b) as f64) / (a as f64 - b as f64);
                }
            }
            acc += w * self.values[i0 + a];
        }
        acc
    }
}

fn plate_quadrature(plate: &PlateFunction, kernel: &RadialKernel, x: &[f64], t: f64, rule: &GaussRule) -> Complex64 {
    let (a, b) = plate.half_widths();
    let m = plate.modulation();
    let mut acc = Complex64::new(0.0, 0.0);
    for (y1, w1) in rule.mapped(-a, a) {
        for (y2, w2) in rule.mapped(-b, b) {
            let r = ((x[0] - y1).powi(2) + (x[1] - y2).powi(2)).sqrt();
            acc += Complex64::from_polar(w1 * w2 * kernel.eval(t * r), 2.0 * PI * m * y2);
        }
    }
    acc * t * t
}

/// `R_t^lambda f_T(x)` in the plane, by a two-level Gauss rule over the
/// plate checked to `1e-4` relative.
pub fn riesz_on_plate(plate: &PlateFunction, kernel: &RadialKernel, x: &[f64], t: f64) -> Result<Complex64> {
    let coarse = GaussRule::legendre(10);
    let fine = GaussRule::legendre(14);
    riesz_on_plate_with(plate, kernel, x, t, &coarse, &fine)
}

fn riesz_on_plate_with(
    plate: &PlateFunction,
    kernel: &RadialKernel,
    x: &[f64],
    t: f64,
    coarse: &GaussRule,
    fine: &GaussRule,
) -> Result<Complex64> {
    if plate.d != 2 || x.len() != 2 {
        return Err(Error::invalid("plate means are implemented for d = 2"));
    }
    if !(t > 0.0) {
        return Err(Error::invalid(format!("t must be positive, got {t}")));
    }
    let (a, b) = plate.half_widths();
    let reach = t * (x[0].abs() + a).hypot(x[1].abs() + b);
    if reach > kernel.s_max() {
        return Err(Error::BudgetExceeded(format!(
            "kernel table ends at {} but {reach} is needed",
            kernel.s_max()
        )));
    }
    let v0 = plate_quadrature(plate, kernel, x, t, coarse);
    let v1 = plate_quadrature(plate, kernel, x, t, fine);
    let scale = v1.norm().max(1e-3 * plate.volume() * t * t * kernel.values[0].abs());
    if (v1 - v0).norm() > 1e-4 * scale {
        return Err(Error::tolerance(
            "plate quadrature refinement",
            format!("{v0} vs {v1} at x = {x:?}, t = {t}"),
        ));
    }
    Ok(v1)
}

/// The interval `I_{x,T} = [eps T |x|/x_2 - eps sqrt(T), eps T |x|/x_2 + eps sqrt(T)]`.
pub fn tuned_interval(x: &[f64], t: f64, eps: f64) -> (f64, f64) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let c = eps * t * norm / x[x.len() - 1];
    let h = eps * t.sqrt();
    (c - h, c + h)
}

/// Midpoint samples of the upper half `{|x_1| <= eps^2 x_2, 1/2 <= x_2 <= 1}`
/// of the region, with area weights.
pub fn omega_samples(eps: f64, n1: usize, n2: usize) -> (Vec<[f64; 2]>, Vec<f64>) {
    let mut pts = Vec::with_capacity(n1 * n2);
    let mut wts = Vec::with_capacity(n1 * n2);
    let h2 = 0.5 / n2 as f64;
    for i in 0..n2 {
        let x2 = 0.5 + (i as f64 + 0.5) * h2;
        let half = eps * eps * x2;
        let h1 = 2.0 * half / n1 as f64;
        for k in 0..n1 {
            pts.push([-half + (k as f64 + 0.5) * h1, x2]);
            wts.push(h1 * h2);
        }
    }
    (pts, wts)
}

#[derive(Debug, Clone)]
pub struct ScanOptions {
    pub eps: f64,
    pub x_nodes: (usize, usize),
    /// Trapezoid nodes on each `I_{x,T}`.
    pub t_nodes: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            eps: 0.125,
            x_nodes: (8, 16),
            t_nodes: 65,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScanResult {
    pub d: usize,
    pub p: f64,
    pub q: f64,
    pub lambda: f64,
    pub ladder: Vec<f64>,
    pub quotients: Vec<f64>,
    pub fit: LineFit,
    pub predicted: f64,
}

impl ScanResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("T,Q,log2T,log2Q,fitted_slope,predicted_slope,residual\n");
        for (t, q) in self.ladder.iter().zip(&self.quotients) {
            s.push_str(&format!(
                "{t:e},{q:e},{:e},{:e},{:e},{:e},{:e}\n",
                t.log2(),
                q.log2(),
                self.fit.slope,
                self.predicted,
                self.fit.residual
            ));
        }
        s
    }
}

/// `Q(T)`: the weak-`L^{p,infty}` quasinorm over the region of
/// `(T^{-1} int_{I_{x,T}} |R_t f_T(x)|^q dt)^{1/q}`, over `||f_T||_p`.
pub fn scan_quotient(plate: &PlateFunction, kernel: &RadialKernel, p: f64, q: f64, opts: &ScanOptions) -> Result<f64> {
    let (pts, wts) = omega_samples(plate.eps, opts.x_nodes.0, opts.x_nodes.1);
    let nt = opts.t_nodes.max(2);
    let coarse = GaussRule::legendre(10);
    let fine = GaussRule::legendre(14);
    let vals = par::map_slice(&pts, |x| -> Result<f64> {
        let (lo, hi) = tuned_interval(x, plate.t, plate.eps);
        if lo < 0.0 || hi > plate.t {
            return Err(Error::invalid(format!("I_x,T = [{lo}, {hi}] leaves [0, T]")));
        }
        let h = (hi - lo) / (nt - 1) as f64;
        let mut acc = 0.0;
        for i in 0..nt {
            let t = lo + h * i as f64;
            let w = if i == 0 || i == nt - 1 { 0.5 * h } else { h };
            acc += w * riesz_on_plate_with(plate, kernel, x, t, &coarse, &fine)?.norm().powf(q);
        }
        Ok((acc / plate.t).powf(1.0 / q))
    });
    let vals = vals.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(weak_lp_weighted(&vals, &wts, p)? / plate.lp_norm(p))
}

/// Kernel table long enough for every tuned `t` of the ladder.
pub fn kernel_for_ladder(lambda: f64, ladder: &[f64], eps: f64) -> Result<RadialKernel> {
    let t_max = ladder.iter().cloned().fold(0.0, f64::max);
    let corner = (eps * eps).hypot(1.0);
    let reach = (eps * t_max * corner / 0.5 + eps * t_max.sqrt()) * (corner + eps);
    RadialKernel::new(lambda, reach * 1.01 + 1.0)
}

pub fn sharpness_scan(d: usize, p: f64, q: f64, lambda: f64, ladder: &[f64], opts: &ScanOptions) -> Result<ScanResult> {
    if d != 2 {
        return Err(Error::invalid("the sharpness scan is implemented for d = 2"));
    }
    if ladder.len() < 2 || ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("T ladder must be strictly increasing with two entries"));
    }
    if !(p >= 1.0 && q >= 1.0) {
        return Err(Error::invalid("scan needs p, q >= 1"));
    }
    let kernel = kernel_for_ladder(lambda, ladder, opts.eps)?;
    let mut quotients = Vec::with_capacity(ladder.len());
    for &t in ladder {
        let plate = PlateFunction::new(d, t, opts.eps)?;
        quotients.push(scan_quotient(&plate, &kernel, p, q, opts)?);
    }
    let lx: Vec<f64> = ladder.iter().map(|t| t.log2()).collect();
    let ly: Vec<f64> = quotients.iter().map(|v| v.log2()).collect();
    Ok(ScanResult {
        d,
        p,
        q,
        lambda,
        ladder: ladder.to_vec(),
        quotients,
        fit: fit_line(&lx, &ly),
        predicted: predicted_slope(d, p, q, lambda),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plate_transform_peak_and_zero() {
        let p = PlateFunction::new(2, 64.0, 0.125).unwrap();
        let peak = p.transform(&[0.0, p.modulation()]);
        assert!((peak.re - p.volume()).abs() < 1e-15);
        let (a, _) = p.half_widths();
        let z = p.transform(&[3.0 / (2.0 * a), p.modulation()]);
        assert!(z.norm() < 1e-15 * p.volume() * 1e3);
    }

    #[test]
    fn kernel_at_origin() {
        for lambda in [-0.5, 0.0, 0.5, 1.0] {
            let k = RadialKernel::new(lambda, 4.0).unwrap();
            let want = 2.0 * PI / ((lambda + 1.0) * (lambda + 2.0));
            assert!((k.values[0] - want).abs() < 1e-12, "lambda {lambda}");
            // interpolation between the table nodes
            let leg = GaussRule::legendre(20);
            let jac = GaussRule::jacobi(20, lambda, 0.0);
            let s = 1.2345;
            assert!((k.eval(s) - RadialKernel::direct(lambda, s, &leg, &jac)).abs() < 1e-9);
        }
    }

    #[test]
    fn predicted_slopes() {
        assert_eq!(predicted_slope(2, 1.0, 2.0, 0.5), -0.25);
        assert_eq!(predicted_slope(2, 1.0, 2.0, 0.25), 0.0);
        assert_eq!(predicted_slope(2, 1.0, 2.0, 0.0), 0.25);
        assert_eq!(plate_norm_slope(2, 1.0), -1.5);
    }
}
