//! Gauss quadrature rules.
//!
//! Rules are computed by the Golub–Welsch eigenvalue method from the
//! three-term recurrence of the orthogonal polynomials.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::special::ln_gamma;

/// A quadrature rule on the reference interval `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Gauss–Legendre rule with `n` nodes.
    pub fn legendre(n: usize) -> Self {
        assert!(n >= 1);
        let diag = vec![0.0; n];
        let off: Vec<f64> = (1..n)
            .map(|k| {
                let k = k as f64;
                k / (4.0 * k * k - 1.0).sqrt()
            })
            .collect();
        Self::golub_welsch(&diag, &off, 2.0)
    }

    /// Gauss–Jacobi rule for the weight `(1-x)^alpha (1+x)^beta`.
    pub fn jacobi(n: usize, alpha: f64, beta: f64) -> Self {
        assert!(n >= 1 && alpha > -1.0 && beta > -1.0);
        let ab = alpha + beta;
        let diag: Vec<f64> = (0..n)
            .map(|k| {
                let k = k as f64;
                let s = 2.0 * k + ab;
                if k == 0.0 {
                    (beta - alpha) / (ab + 2.0)
                } else {
                    (beta * beta - alpha * alpha) / (s * (s + 2.0))
                }
            })
            .collect();
        let off: Vec<f64> = (1..n)
            .map(|k| {
                let k = k as f64;
                let s = 2.0 * k + ab;
                (4.0 * k * (k + alpha) * (k + beta) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0)))
                    .sqrt()
            })
            .collect();
        let mu0 = ((ab + 1.0) * 2f64.ln() + ln_gamma(alpha + 1.0) + ln_gamma(beta + 1.0)
            - ln_gamma(ab + 2.0))
        .exp();
        Self::golub_welsch(&diag, &off, mu0)
    }

    fn golub_welsch(diag: &[f64], off: &[f64], mu0: f64) -> Self {
        let n = diag.len();
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = diag[i];
        }
        for (i, &b) in off.iter().enumerate() {
            m[(i, i + 1)] = b;
            m[(i + 1, i)] = b;
        }
        let eig = SymmetricEigen::new(m);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let v0 = eig.eigenvectors[(0, i)];
                (eig.eigenvalues[i], mu0 * v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        GaussRule {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped affinely onto `[a, b]` (plain Legendre weight).
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (c + h * x, h * w))
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Composite Gauss–Legendre integral over `[a, b]` with `panels` equal panels.
pub fn composite<F: FnMut(f64) -> f64>(rule: &GaussRule, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + h * p as f64;
        total += rule.integrate(lo, lo + h, &mut f);
    }
    total
}

/// Integral of `(b - x)^alpha g(x)` over `[a, b]` for smooth `g`.
///
/// The interval is split into uniform panels of at most `max_panel` width;
/// the panel touching `b` uses a Gauss–Jacobi rule for the endpoint factor.
pub fn integrate_right_singular<F: FnMut(f64) -> f64>(
    legendre: &GaussRule,
    jacobi: &GaussRule,
    alpha: f64,
    a: f64,
    b: f64,
    max_panel: f64,
    mut g: F,
) -> f64 {
    if b <= a {
        return 0.0;
    }
    let panels = ((b - a) / max_panel).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels - 1 {
        let lo = a + h * p as f64;
        total += legendre.integrate(lo, lo + h, |x| (b - x).powf(alpha) * g(x));
    }
    // last panel [b-h, b]: x = b - h (1-u)/2, (b-x)^alpha = (h/2)^alpha (1-u)^alpha
    let lo = b - h;
    let scale = (0.5 * h).powf(alpha) * 0.5 * h;
    for (&u, &w) in jacobi.nodes.iter().zip(&jacobi.weights) {
        let x = lo + 0.5 * h * (1.0 + u);
        total += scale * w * g(x);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let r = GaussRule::legendre(6);
        // degree 11 exact
        let v = r.integrate(0.0, 2.0, |x| x.powi(11));
        assert!((v - 2f64.powi(12) / 12.0).abs() < 1e-10);
        let s: f64 = r.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_weight_moments() {
        let alpha = 0.5;
        let r = GaussRule::jacobi(8, alpha, 0.0);
        // int_{-1}^1 (1-x)^a dx = 2^{a+1}/(a+1)
        let m0: f64 = r.weights.iter().sum();
        assert!((m0 - 2f64.powf(alpha + 1.0) / (alpha + 1.0)).abs() < 1e-13);
        // int (1-x)^a x dx via substitution: 2^{a+1}/(a+1) - 2^{a+2}/(a+2)
        let m1: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| x * w).sum();
        let exact = 2f64.powf(alpha + 1.0) / (alpha + 1.0) - 2f64.powf(alpha + 2.0) / (alpha + 2.0);
        assert!((m1 - exact).abs() < 1e-13);
    }

    #[test]
    fn right_singular_integral() {
        let gl = GaussRule::legendre(16);
        let lam = -0.5;
        let gj = GaussRule::jacobi(16, lam, 0.0);
        // int_0^1 (1-x)^{-1/2} dx = 2
        let v = integrate_right_singular(&gl, &gj, lam, 0.0, 1.0, 0.1, |_| 1.0);
        assert!((v - 2.0).abs() < 1e-12, "{v}");
    }
}
