//! Homogeneous distance functions and cosphere geometry.
//!
//! A distance `rho` on `R^d` satisfies `rho(t^b xi) = t rho(xi)` for `t > 0`.
//! Its unit level set `{rho = 1}` is called the cosphere.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceKind {
    Euclidean,
    BochnerRiesz,
    /// `(sum xi_i^{2m})^{1/(2m)}`.
    SmoothPowerMean(u32),
    UserSupplied,
}

impl DistanceKind {
    /// Parses `euclidean`, `bochner_riesz`, `smooth_power_mean(m)` or
    /// `smooth_power_mean:m`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "euclidean" => return Ok(DistanceKind::Euclidean),
            "bochner_riesz" => return Ok(DistanceKind::BochnerRiesz),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("smooth_power_mean") {
            let m = rest
                .trim_start_matches(['(', ':'])
                .trim_end_matches(')')
                .parse::<u32>()
                .map_err(|_| Error::invalid(format!("bad power mean order in '{s}'")))?;
            return Ok(DistanceKind::SmoothPowerMean(m));
        }
        Err(Error::invalid(format!("unknown distance kind '{s}'")))
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistanceKind::Euclidean => write!(f, "euclidean"),
            DistanceKind::BochnerRiesz => write!(f, "bochner_riesz"),
            DistanceKind::SmoothPowerMean(m) => write!(f, "smooth_power_mean({m})"),
            DistanceKind::UserSupplied => write!(f, "user_supplied"),
        }
    }
}

type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

#[derive(Clone)]
pub struct HomogeneousDistance {
    d: usize,
    b: f64,
    kind: DistanceKind,
    user: Option<(EvalFn, Option<GradFn>)>,
    even: bool,
}

impl fmt::Debug for HomogeneousDistance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HomogeneousDistance")
            .field("d", &self.d)
            .field("b", &self.b)
            .field("kind", &self.kind)
            .finish()
    }
}

/// A point on the cosphere with its outward unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct CospherePoint {
    pub point: Vec<f64>,
    pub normal: Vec<f64>,
}

pub fn make_builtin(kind: DistanceKind, d: usize) -> Result<HomogeneousDistance> {
    if d < 1 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    let b = match kind {
        DistanceKind::Euclidean => 1.0,
        DistanceKind::BochnerRiesz => 0.5,
        DistanceKind::SmoothPowerMean(m) => {
            if m < 1 {
                return Err(Error::invalid("power mean order must be >= 1"));
            }
            1.0
        }
        DistanceKind::UserSupplied => {
            return Err(Error::invalid("user supplied distances go through HomogeneousDistance::user"))
        }
    };
    Ok(HomogeneousDistance {
        d,
        b,
        kind,
        user: None,
        even: true,
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl HomogeneousDistance {
    /// Wraps a user evaluator, rejecting it unless it is `b`-homogeneous
    /// and positive on a fixed set of sample points.
    pub fn user<F>(d: usize, b: f64, even: bool, f: F, grad: Option<GradFn>) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if d < 1 || !(b > 0.0) {
            return Err(Error::invalid("need d >= 1 and b > 0"));
        }
        let rho = HomogeneousDistance {
            d,
            b,
            kind: DistanceKind::UserSupplied,
            user: Some((Arc::new(f), grad)),
            even,
        };
        let worst = rho.homogeneity_residual(&sample_points(d, 64), &[0.1, 0.5, 2.0, 7.0]);
        if !(worst <= 1e-8) {
            return Err(Error::invalid(format!(
                "user distance fails the homogeneity check (relative residual {worst:e})"
            )));
        }
        Ok(rho)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn kind(&self) -> DistanceKind {
        self.kind
    }

    /// Whether `rho(-xi) = rho(xi)`.
    pub fn is_even(&self) -> bool {
        self.even
    }

    /// Whether a value depends on `|xi|` only.
    pub fn is_radial(&self) -> bool {
        matches!(self.kind, DistanceKind::Euclidean | DistanceKind::BochnerRiesz)
    }

    pub fn eval(&self, xi: &[f64]) -> f64 {
        debug_assert_eq!(xi.len(), self.d);
        match self.kind {
            DistanceKind::Euclidean => norm(xi),
            DistanceKind::BochnerRiesz => xi.iter().map(|x| x * x).sum(),
            DistanceKind::SmoothPowerMean(m) => {
                let mx = xi.iter().fold(0.0f64, |a, x| a.max(x.abs()));
                if mx == 0.0 {
                    return 0.0;
                }
                let e = 2 * m as i32;
                let s: f64 = xi.iter().map(|x| (x / mx).powi(e)).sum();
                mx * s.powf(1.0 / e as f64)
            }
            DistanceKind::UserSupplied => (self.user.as_ref().unwrap().0)(xi),
        }
    }

    /// `rho` as a function of `|xi|` for radial distances.
    pub fn eval_radial(&self, r: f64) -> f64 {
        match self.kind {
            DistanceKind::Euclidean => r,
            DistanceKind::BochnerRiesz => r * r,
            _ => panic!("eval_radial on a non-radial distance"),
        }
    }

    pub fn gradient(&self, xi: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.d];
        match self.kind {
            DistanceKind::Euclidean => {
                let n = norm(xi);
                for (gi, x) in g.iter_mut().zip(xi) {
                    *gi = x / n;
                }
            }
            DistanceKind::BochnerRiesz => {
                for (gi, x) in g.iter_mut().zip(xi) {
                    *gi = 2.0 * x;
                }
            }
            DistanceKind::SmoothPowerMean(m) => {
                let r = self.eval(xi);
                let e = 2 * m as i32 - 1;
                for (gi, x) in g.iter_mut().zip(xi) {
                    *gi = (x / r).powi(e);
                }
            }
            DistanceKind::UserSupplied => match &self.user.as_ref().unwrap().1 {
                Some(gf) => gf(xi, &mut g),
                None => return self.gradient_fd(xi),
            },
        }
        g
    }

    /// Central-difference gradient with step `1e-6 max(1, |xi|)`.
    pub fn gradient_fd(&self, xi: &[f64]) -> Vec<f64> {
        let h = 1e-6 * norm(xi).max(1.0);
        let mut p = xi.to_vec();
        (0..self.d)
            .map(|i| {
                p[i] = xi[i] + h;
                let a = self.eval(&p);
                p[i] = xi[i] - h;
                let b = self.eval(&p);
                p[i] = xi[i];
                (a - b) / (2.0 * h)
            })
            .collect()
    }

    pub fn normal(&self, xi: &[f64]) -> Vec<f64> {
        let g = self.gradient(xi);
        let n = norm(&g);
        g.into_iter().map(|v| v / n).collect()
    }

    /// Largest relative homogeneity defect over the given samples and scales.
    pub fn homogeneity_residual(&self, points: &[Vec<f64>], scales: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for xi in points {
            let r = self.eval(xi);
            if !(r > 0.0) {
                return f64::INFINITY;
            }
            for &t in scales {
                let tb = t.powf(self.b);
                let y: Vec<f64> = xi.iter().map(|x| x * tb).collect();
                let e = (self.eval(&y) - t * r).abs() / (t * r);
                worst = worst.max(e);
            }
        }
        worst
    }

    /// Radial projection `rho(xi)^{-b} xi` onto the cosphere.
    pub fn to_cosphere(&self, xi: &[f64]) -> Result<CospherePoint> {
        if xi.len() != self.d {
            return Err(Error::invalid("dimension mismatch"));
        }
        if xi.iter().all(|&x| x == 0.0) {
            return Err(Error::invalid("cannot project the origin onto the cosphere"));
        }
        let s = self.eval(xi).powf(-self.b);
        let point: Vec<f64> = xi.iter().map(|x| x * s).collect();
        let check = (self.eval(&point) - 1.0).abs();
        if check > 1e-10 {
            return Err(Error::tolerance("to_cosphere", format!("|rho - 1| = {check:e}")));
        }
        let normal = self.normal(&point);
        Ok(CospherePoint { point, normal })
    }

    /// The cosphere point whose outward normal is `x / |x|`.
    ///
    /// Newton's method on the cosphere chart `omega -> to_cosphere(omega)`,
    /// with a finite-difference Jacobian in tangent coordinates.
    pub fn gauss_map_inverse(&self, x: &[f64]) -> Result<CospherePoint> {
        let d = self.d;
        if x.len() != d {
            return Err(Error::invalid("dimension mismatch"));
        }
        let nx = norm(x);
        if nx == 0.0 {
            return Err(Error::invalid("gauss_map_inverse needs x != 0"));
        }
        let target: Vec<f64> = x.iter().map(|v| v / nx).collect();
        if d == 1 {
            return self.to_cosphere(&target);
        }
        let tb = tangent_basis(&target);
        // residual: target-tangent components of the normal at the chart point
        let resid = |w: &[f64]| -> Result<Vec<f64>> {
            let cp = self.to_cosphere(w)?;
            Ok(tb.iter().map(|t| dot(t, &cp.normal)).collect())
        };
        let mut omega = target.clone();
        for _ in 0..50 {
            let cp = self.to_cosphere(&omega)?;
            let err: f64 = cp
                .normal
                .iter()
                .zip(&target)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if err <= 1e-12 {
                return Ok(cp);
            }
            let f0 = resid(&omega)?;
            let basis = tangent_basis(&omega);
            let h = 1e-7;
            let mut jac = DMatrix::<f64>::zeros(d - 1, d - 1);
            for (k, t) in basis.iter().enumerate() {
                let wp: Vec<f64> = omega.iter().zip(t).map(|(a, b)| a + h * b).collect();
                let wm: Vec<f64> = omega.iter().zip(t).map(|(a, b)| a - h * b).collect();
                let fp = resid(&wp)?;
                let fm = resid(&wm)?;
                for r in 0..d - 1 {
                    jac[(r, k)] = (fp[r] - fm[r]) / (2.0 * h);
                }
            }
            let rhs = DVector::from_iterator(d - 1, f0.iter().map(|v| -v));
            let step = jac
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::tolerance("gauss_map_inverse", "singular Jacobian (flat direction)"))?;
            // damp large steps
            let sn = step.norm();
            let scale = if sn > 0.5 { 0.5 / sn } else { 1.0 };
            for (k, t) in basis.iter().enumerate() {
                for (o, tv) in omega.iter_mut().zip(t) {
                    *o += scale * step[k] * tv;
                }
            }
            let on = norm(&omega);
            omega.iter_mut().for_each(|o| *o /= on);
        }
        let cp = self.to_cosphere(&omega)?;
        let err: f64 = cp
            .normal
            .iter()
            .zip(&target)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if err <= 1e-10 {
            Ok(cp)
        } else {
            Err(Error::tolerance(
                "gauss_map_inverse",
                format!("no convergence after 50 iterations (normal residual {err:e})"),
            ))
        }
    }

    /// `max |xi_i|` over the cosphere, per axis.
    ///
    /// The box `prod [-t^b e_i, t^b e_i]` then contains `{rho(xi) <= t}`.
    pub fn axis_extents(&self) -> Vec<f64> {
        match self.kind {
            DistanceKind::Euclidean | DistanceKind::BochnerRiesz | DistanceKind::SmoothPowerMean(_) => {
                vec![1.0; self.d]
            }
            DistanceKind::UserSupplied => (0..self.d)
                .map(|i| {
                    let mut best = 0.0f64;
                    for sgn in [1.0, -1.0] {
                        let mut e = vec![0.0; self.d];
                        e[i] = sgn;
                        if let Ok(cp) = self.gauss_map_inverse(&e) {
                            best = best.max(cp.point[i].abs());
                        }
                    }
                    // fallback bound from sampled directions, padded
                    for p in sample_points(self.d, 256) {
                        if let Ok(cp) = self.to_cosphere(&p) {
                            best = best.max(cp.point[i].abs());
                        }
                    }
                    best * (1.0 + 1e-9)
                })
                .collect(),
        }
    }

    /// Euclidean distance from `xi` to the cosphere (radial distances only).
    pub fn dist_to_cosphere(&self, xi: &[f64]) -> f64 {
        assert!(self.is_radial());
        (norm(xi) - 1.0).abs()
    }
}

/// An orthonormal basis of the complement of the unit vector `u`.
pub(crate) fn tangent_basis(u: &[f64]) -> Vec<Vec<f64>> {
    let d = u.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d - 1);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs()));
    for &i in &order {
        if basis.len() == d - 1 {
            break;
        }
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        let p = dot(&v, u);
        for (vk, uk) in v.iter_mut().zip(u) {
            *vk -= p * uk;
        }
        for b in &basis {
            let p = dot(&v, b);
            for (vk, bk) in v.iter_mut().zip(b) {
                *vk -= p * bk;
            }
        }
        let n = norm(&v);
        if n > 1e-8 {
            v.iter_mut().for_each(|x| *x /= n);
            basis.push(v);
        }
    }
    basis
}

/// Deterministic quasi-random nonzero points used by construction checks.
pub(crate) fn sample_points(d: usize, n: usize) -> Vec<Vec<f64>> {
    let mut state = 0x9e37_79b9_7f4a_7c15u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    (0..n)
        .map(|_| loop {
            let p: Vec<f64> = (0..d).map(|_| 3.0 * next()).collect();
            if norm(&p) > 1e-3 {
                break p;
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_examples() {
        let e = make_builtin(DistanceKind::Euclidean, 2).unwrap();
        assert!((e.eval(&[3.0, 4.0]) - 5.0).abs() < 1e-15);
        let br = make_builtin(DistanceKind::BochnerRiesz, 2).unwrap();
        assert!((br.eval(&[3.0, 4.0]) - 25.0).abs() < 1e-13);
        let s = 2f64.sqrt();
        assert!((br.eval(&[3.0 * s, 4.0 * s]) - 50.0).abs() < 1e-12);
        let pm = make_builtin(DistanceKind::SmoothPowerMean(2), 2).unwrap();
        assert!((pm.eval(&[1.0, 1.0]) - 2f64.powf(0.25)).abs() < 1e-15);
        assert!(make_builtin(DistanceKind::Euclidean, 0).is_err());
        assert!(DistanceKind::parse("taxicab").is_err());
        assert_eq!(DistanceKind::parse("smooth_power_mean(3)").unwrap(), DistanceKind::SmoothPowerMean(3));
    }

    #[test]
    fn cosphere_examples() {
        let e = make_builtin(DistanceKind::Euclidean, 2).unwrap();
        assert_eq!(e.to_cosphere(&[2.0, 0.0]).unwrap().point, vec![1.0, 0.0]);
        let br = make_builtin(DistanceKind::BochnerRiesz, 2).unwrap();
        let p = br.to_cosphere(&[0.0, 3.0]).unwrap().point;
        assert!((p[1] - 1.0).abs() < 1e-15);
        assert!(e.to_cosphere(&[0.0, 0.0]).is_err());
        let g = br.gauss_map_inverse(&[3.0, 4.0]).unwrap();
        assert!((g.point[0] - 0.6).abs() < 1e-10 && (g.point[1] - 0.8).abs() < 1e-10);
        let pm = make_builtin(DistanceKind::SmoothPowerMean(2), 2).unwrap();
        let g = pm.gauss_map_inverse(&[1.0, 2.0]).unwrap();
        let t = [1.0 / 5f64.sqrt(), 2.0 / 5f64.sqrt()];
        assert!((g.normal[0] - t[0]).abs() + (g.normal[1] - t[1]).abs() < 1e-10);
    }

    #[test]
    fn user_supplied_is_checked() {
        let ok = HomogeneousDistance::user(2, 1.0, true, |x: &[f64]| (x[0] * x[0] + 4.0 * x[1] * x[1]).sqrt(), None);
        assert!(ok.is_ok());
        let bad = HomogeneousDistance::user(2, 1.0, true, |x: &[f64]| x[0] * x[0] + x[1].abs(), None);
        assert!(bad.is_err());
        let ell = ok.unwrap();
        let ext = ell.axis_extents();
        assert!((ext[0] - 1.0).abs() < 1e-6 && (ext[1] - 0.5).abs() < 1e-6);
    }
}
