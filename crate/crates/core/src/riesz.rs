//! Riesz means and related operators.
//!
//! With `r = rho(xi) t^{-1/b}` (equivalently `rho(xi / t)`), the Riesz
//! multiplier is `(1 - r)_+^lambda`; the edge-localized variant carries the
//! extra factor `1 - upsilon0(r)`.

use num_complex::Complex64;

use crate::distance::HomogeneousDistance;
use crate::jet::Jet;
use crate::par;
use crate::quad::GaussRule;
use crate::smooth::{upsilon0, upsilon0_jet};
use crate::spectral::{cis, FieldMode, GridFunction, SpectralField, TorusGrid};
use crate::{Error, Result};

/// Index `lambda` together with the distance it is measured in.
#[derive(Debug, Clone)]
pub struct RieszSpec {
    pub lambda: f64,
    pub rho: HomogeneousDistance,
    pub p: Option<f64>,
    pub q: Option<f64>,
}

impl RieszSpec {
    pub fn new(lambda: f64, rho: HomogeneousDistance) -> Result<Self> {
        if !(lambda > -1.0) || !lambda.is_finite() {
            return Err(Error::invalid(format!("lambda must exceed -1, got {lambda}")));
        }
        Ok(RieszSpec {
            lambda,
            rho,
            p: None,
            q: None,
        })
    }

    pub fn with_exponents(mut self, p: Option<f64>, q: Option<f64>) -> Self {
        self.p = p;
        self.q = q;
        self
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    /// `rho(xi) t^{-1/b}`.
    pub fn ratio(&self, xi: &[f64], t: f64) -> f64 {
        self.rho.eval(xi) * t.powf(-1.0 / self.rho.b())
    }

    /// The `t` at which the multiplier of frequency `xi` switches off.
    pub fn kink(&self, xi: &[f64]) -> f64 {
        self.rho.eval(xi).powf(self.rho.b())
    }
}

/// `d (1/p - 1/2) - 1/2`, arranged so the endpoint values come out exact.
pub fn critical_lambda(d: usize, p: f64) -> f64 {
    let d = d as f64;
    (2.0 * d - (d + 1.0) * p) / (2.0 * p)
}

/// `(1 - r)^lambda` below the edge, 1 at the origin, 0 at and beyond the edge.
pub fn riesz_multiplier(r: f64, lambda: f64) -> f64 {
    if r == 0.0 {
        1.0
    } else if r < 1.0 - 1e-14 {
        (1.0 - r).powf(lambda)
    } else {
        0.0
    }
}

pub fn s_multiplier(r: f64, lambda: f64) -> f64 {
    let cut = 1.0 - upsilon0(r);
    if cut == 0.0 {
        0.0
    } else {
        cut * riesz_multiplier(r, lambda)
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!("t must be positive, got {t}")));
    }
    Ok(())
}

/// Flat indices of the coefficients whose frequencies lie in the box
/// `|xi_i| <= bound_i`.
fn indices_in_box(c: &SpectralField, bound: &[f64]) -> Vec<usize> {
    let h = c.spacing();
    let ranges: Vec<(i64, i64)> = c
        .half
        .iter()
        .zip(bound)
        .map(|(&l, &b)| {
            let m = ((b / h) * (1.0 + 1e-12)).floor().min(l as f64) as i64;
            (-m, m)
        })
        .collect();
    let mut out = Vec::new();
    let d = c.dim();
    let mut cur: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    if ranges.iter().any(|r| r.0 > r.1) {
        return out;
    }
    loop {
        out.push(c.index_of(&cur).expect("box inside field"));
        let mut a = d;
        loop {
            if a == 0 {
                return out;
            }
            a -= 1;
            if cur[a] < ranges[a].1 {
                cur[a] += 1;
                break;
            }
            cur[a] = ranges[a].0;
        }
    }
}

fn apply_radial_multiplier<F>(c: &SpectralField, t: f64, spec: &RieszSpec, m: F) -> Result<SpectralField>
where
    F: Fn(f64) -> f64 + Sync,
{
    check_t(t)?;
    if spec.dim() != c.dim() {
        return Err(Error::invalid("distance and field dimensions differ"));
    }
    let bound: Vec<f64> = spec.rho.axis_extents().iter().map(|e| e * t).collect();
    let idx = indices_in_box(c, &bound);
    let vals = par::map_slice(&idx, |&i| {
        let v = c.coeffs[i];
        v * m(spec.ratio(&c.frequency(i), t))
    });
    let mut out = SpectralField::zeros(c.mode, c.half.clone());
    for (i, v) in idx.into_iter().zip(vals) {
        out.coeffs[i] = v;
    }
    Ok(out)
}

/// Riesz mean of a Fourier series.
pub fn riesz_mean_torus(c: &SpectralField, t: f64, spec: &RieszSpec) -> Result<SpectralField> {
    if c.mode != FieldMode::Torus {
        return Err(Error::invalid("riesz_mean_torus needs a torus field"));
    }
    let lam = spec.lambda;
    apply_radial_multiplier(c, t, spec, |r| riesz_multiplier(r, lam))
}

/// Riesz mean of a band-limited Fourier integral.
pub fn riesz_mean_rd(c: &SpectralField, t: f64, spec: &RieszSpec) -> Result<SpectralField> {
    if !matches!(c.mode, FieldMode::Rd { .. }) {
        return Err(Error::invalid("riesz_mean_rd needs an R^d field"));
    }
    let lam = spec.lambda;
    apply_radial_multiplier(c, t, spec, |r| riesz_multiplier(r, lam))
}

/// Riesz mean in either mode.
pub fn riesz_mean(c: &SpectralField, t: f64, spec: &RieszSpec) -> Result<SpectralField> {
    let lam = spec.lambda;
    apply_radial_multiplier(c, t, spec, |r| riesz_multiplier(r, lam))
}

/// Edge-localized mean with multiplier `(1 - upsilon0(r))(1 - r)_+^lambda`.
pub fn s_mean(c: &SpectralField, t: f64, spec: &RieszSpec) -> Result<SpectralField> {
    let lam = spec.lambda;
    apply_radial_multiplier(c, t, spec, |r| s_multiplier(r, lam))
}

/// Operator families accepted by the strong-summability functionals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorFamily {
    /// Riesz means on the torus.
    TorusRiesz,
    /// Riesz means on `R^d`.
    RdRiesz,
    /// Edge-localized means.
    Edge,
}

impl OperatorFamily {
    pub fn multiplier(&self, r: f64, lambda: f64) -> f64 {
        match self {
            OperatorFamily::TorusRiesz | OperatorFamily::RdRiesz => riesz_multiplier(r, lambda),
            OperatorFamily::Edge => s_multiplier(r, lambda),
        }
    }

    pub fn apply(&self, c: &SpectralField, t: f64, spec: &RieszSpec) -> Result<SpectralField> {
        match self {
            OperatorFamily::TorusRiesz => riesz_mean_torus(c, t, spec),
            OperatorFamily::RdRiesz => riesz_mean_rd(c, t, spec),
            OperatorFamily::Edge => s_mean(c, t, spec),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "riesz_torus" | "torus" => Ok(OperatorFamily::TorusRiesz),
            "riesz_rd" | "rd" => Ok(OperatorFamily::RdRiesz),
            "s_mean" | "edge" => Ok(OperatorFamily::Edge),
            _ => Err(Error::invalid(format!("unknown operator family '{s}'"))),
        }
    }
}

const JET: usize = 16;

fn binomial_free_factorial(m: usize) -> f64 {
    (1..=m).map(|k| k as f64).product()
}

/// `u(s) = upsilon0(s) (1 - s)^lambda` composed with `s -> s^{1/n}`, as a jet.
fn u_n_jet(s: f64, n: usize, lambda: f64) -> Jet<JET> {
    let x = Jet::<JET>::variable(s);
    let r = x.powf(1.0 / n as f64);
    upsilon0_jet(r) * (1.0 - r).powf(lambda)
}

/// Subordination integrand quadrature on `[a, 0.9^n]`.
fn subordination_integral(a: f64, n: usize, m: usize, lambda: f64, refine: usize) -> f64 {
    let top = 0.9f64.powi(n as i32);
    if a >= top {
        return 0.0;
    }
    let rule = GaussRule::legendre(32);
    let integrand = |s: f64| -> f64 {
        let jet = u_n_jet(s, n, lambda);
        (s - a).powi(m as i32) * jet.derivative(m + 1)
    };
    let mid = 0.8f64.powi(n as i32);
    let mut total = 0.0;
    // graded segment [a, c] toward a
    let c = if a < mid { mid } else { top };
    let w = c - a;
    let floor = if a > 0.0 { 1e-4 * a } else { 1e-40 };
    let mut panels: Vec<(f64, f64)> = Vec::new();
    let mut hi = w;
    while hi > floor {
        let lo = 0.5 * hi;
        panels.push((a + lo, a + hi));
        hi = lo;
    }
    panels.push((a, a + hi));
    // the cutoff ramp on [mid, top] needs panels no wider than the far segment's
    let h_max = (top - mid) / 32.0;
    for (lo, hi) in panels {
        let sub = refine * ((hi - lo) / h_max).ceil().max(1.0) as usize;
        let h = (hi - lo) / sub as f64;
        for k in 0..sub {
            total += rule.integrate(lo + k as f64 * h, lo + (k + 1) as f64 * h, integrand);
        }
    }
    if c < top {
        let pan = 32 * refine;
        let h = (top - c) / pan as f64;
        for k in 0..pan {
            total += rule.integrate(c + k as f64 * h, c + (k + 1) as f64 * h, integrand);
        }
    }
    let sign = if (m + 1) % 2 == 0 { 1.0 } else { -1.0 };
    sign * total / binomial_free_factorial(m)
}

/// Max over `xi_samples` of `|u(rho(xi)) - subordination integral|`.
///
/// Derivatives of `u_N` are computed with truncated Taylor arithmetic.
pub fn subordination_residual(spec: &RieszSpec, n: usize, m: usize, xi_samples: &[Vec<f64>]) -> Result<f64> {
    if n < 1 || m < 1 {
        return Err(Error::invalid("N and M must be >= 1"));
    }
    if m + 1 >= JET {
        return Err(Error::invalid(format!("M must be below {}", JET - 1)));
    }
    if !(spec.lambda > 0.0) {
        return Err(Error::invalid("the subordination check needs lambda > 0"));
    }
    let lam = spec.lambda;
    let res = par::map_slice(xi_samples, |xi| -> Result<f64> {
        let r = spec.rho.eval(xi);
        let exact = upsilon0(r) * if r < 1.0 { (1.0 - r).powf(lam) } else { 0.0 };
        let a = r.powi(n as i32);
        let coarse = subordination_integral(a, n, m, lam, 1);
        let fine = subordination_integral(a, n, m, lam, 2);
        if (coarse - fine).abs() > 1e-8 * (1.0 + fine.abs()) {
            return Err(Error::tolerance(
                "subordination quadrature",
                format!("refinement levels differ by {:e} at rho = {r}", (coarse - fine).abs()),
            ));
        }
        Ok((exact - fine).abs())
    });
    let mut worst = 0.0f64;
    for r in res {
        worst = worst.max(r?);
    }
    Ok(worst)
}

/// Default lattice budget for the transplantation sum.
pub const TRANSPLANT_BUDGET: usize = 1 << 22;

/// Riemann sum `sum_l L^{-d} fhat(l/L) (1 - rho(l/(tL)))_+^lambda e^{2 pi i <x, l/L>}`.
pub fn transplant<F>(fhat: F, l: usize, t: f64, spec: &RieszSpec, xs: &[Vec<f64>]) -> Result<Vec<Complex64>>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    check_t(t)?;
    if l < 1 {
        return Err(Error::invalid("L must be >= 1"));
    }
    let d = spec.dim();
    let lf = l as f64;
    let half: Vec<usize> = spec
        .rho
        .axis_extents()
        .iter()
        .map(|e| (e * t * lf).floor() as usize)
        .collect();
    let count = half
        .iter()
        .try_fold(1usize, |acc, &h| acc.checked_mul(2 * h + 1))
        .unwrap_or(usize::MAX);
    if count > TRANSPLANT_BUDGET {
        return Err(Error::BudgetExceeded(format!(
            "transplantation box has {count} lattice points, budget {TRANSPLANT_BUDGET}"
        )));
    }
    let shape = SpectralField::zeros(FieldMode::Rd { period: lf }, half);
    let weight = lf.powi(-(d as i32));
    let lam = spec.lambda;
    let terms: Vec<(Vec<f64>, Complex64)> = par::map_range(shape.len(), |i| {
        let xi = shape.frequency(i);
        let m = riesz_multiplier(spec.ratio(&xi, t), lam);
        if m == 0.0 {
            (xi, Complex64::new(0.0, 0.0))
        } else {
            let v = fhat(&xi) * (m * weight);
            (xi, v)
        }
    })
    .into_iter()
    .filter(|(_, v)| *v != Complex64::new(0.0, 0.0))
    .collect();
    Ok(par::map_slice(xs, |x| {
        let parts: Vec<Complex64> = terms
            .iter()
            .map(|(xi, v)| {
                let ph: f64 = xi.iter().zip(x).map(|(a, b)| a * b).sum();
                v * cis(ph)
            })
            .collect();
        par::pairwise_sum_complex(&parts)
    }))
}

/// Fourier coefficients of the `L`-periodization `sum_k f(x + kL)`, from
/// samples on an `n^d` grid over `[0, L)^d` with `images` periods per side.
pub fn periodized_coefficients<F>(f: F, l: f64, n: usize, images: i64, half: Vec<usize>) -> Result<SpectralField>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    let d = half.len();
    let grid = TorusGrid::with_period(d, n, l, crate::spectral::DEFAULT_NODE_BUDGET)?;
    let shifts: Vec<Vec<i64>> = {
        let w = (2 * images + 1) as usize;
        (0..w.pow(d as u32))
            .map(|mut k| {
                let mut v = vec![0i64; d];
                for a in (0..d).rev() {
                    v[a] = (k % w) as i64 - images;
                    k /= w;
                }
                v
            })
            .collect()
    };
    let vals = par::map_range(grid.len(), |i| {
        let x = grid.coords(i);
        let parts: Vec<Complex64> = shifts
            .iter()
            .map(|s| {
                let y: Vec<f64> = x.iter().zip(s).map(|(a, &k)| a + k as f64 * l).collect();
                f(&y)
            })
            .collect();
        par::pairwise_sum_complex(&parts)
    });
    let g = GridFunction::new(grid, vals)?;
    crate::spectral::analyze(&g, FieldMode::Rd { period: l }, half).map(|mut c| {
        let s = l.powi(-(d as i32));
        c.coeffs.iter_mut().for_each(|v| *v *= s);
        c
    })
}

/// Pointwise `max_t |op(t)|` over a nonempty `t_grid`.
pub fn maximal_over_t<F>(op: F, t_grid: &[f64]) -> Result<GridFunction>
where
    F: Fn(f64) -> Result<GridFunction>,
{
    let (first, rest) = t_grid
        .split_first()
        .ok_or_else(|| Error::invalid("empty t grid"))?;
    let g0 = op(*first)?;
    let mut best = g0.abs();
    for &t in rest {
        let g = op(t)?;
        if g.values.len() != best.len() {
            return Err(Error::invalid("operator returned grids of different sizes"));
        }
        for (b, v) in best.iter_mut().zip(&g.values) {
            *b = b.max(v.norm());
        }
    }
    GridFunction::from_real(g0.grid, best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::{make_builtin, DistanceKind};

    #[test]
    fn critical_index_endpoints() {
        for d in 1..=12 {
            assert_eq!(critical_lambda(d, 1.0), (d as f64 - 1.0) / 2.0);
            assert_eq!(critical_lambda(d, 2.0 * d as f64 / (d as f64 + 1.0)), 0.0);
        }
    }

    #[test]
    fn multiplier_conventions() {
        assert_eq!(riesz_multiplier(0.0, -0.5), 1.0);
        assert_eq!(riesz_multiplier(1.0, -0.5), 0.0);
        assert_eq!(riesz_multiplier(1.0 - 1e-15, -0.5), 0.0);
        assert!((riesz_multiplier(0.5, 1.0) - 0.5).abs() < 1e-16);
        assert!((s_multiplier(0.95, 1.0) - 0.05).abs() < 1e-15);
        assert_eq!(s_multiplier(0.5, 1.0), 0.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        let rho = make_builtin(DistanceKind::Euclidean, 1).unwrap();
        assert!(RieszSpec::new(-1.0, rho.clone()).is_err());
        let spec = RieszSpec::new(1.0, rho).unwrap();
        let c = SpectralField::zeros(FieldMode::Torus, vec![2]);
        assert!(riesz_mean_torus(&c, 0.0, &spec).is_err());
        assert!(riesz_mean_rd(&c, 1.0, &spec).is_err());
    }

    #[test]
    fn subordination_quick() {
        let rho = make_builtin(DistanceKind::Euclidean, 1).unwrap();
        let spec = RieszSpec::new(1.0, rho).unwrap();
        let r = subordination_residual(&spec, 4, 6, &[vec![0.5], vec![0.95], vec![1e-9]]).unwrap();
        assert!(r < 1e-6, "{r}");
    }
}
