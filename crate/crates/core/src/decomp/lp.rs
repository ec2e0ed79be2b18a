use crate::distance::HomogeneousDistance;
use crate::smooth::plateau;
use crate::spectral::{synthesize, GridFunction, SpectralField, TorusGrid};
use crate::{par, Error, Result};

/// Default Peetre aperture factor; the translation radius is
/// `aperture * 2^{-k}`. This large default makes the supremum global on
/// the unit torus for every resolvable `k`.
pub const DEFAULT_APERTURE: f64 = 1024.0;

/// Plateau `[2^{-2-1/b}, 4 * 2^{1/b}]` of the Littlewood–Paley bump in `rho`.
pub fn eta_plateau(b: f64) -> (f64, f64) {
    let s = 2f64.powf(1.0 / b);
    (0.25 / s, 4.0 * s)
}

pub fn eta(rho: &HomogeneousDistance, xi: &[f64]) -> f64 {
    let (a, bb) = eta_plateau(rho.b());
    plateau(rho.eval(xi), a, bb)
}

/// `L_k f` with multiplier `eta(2^{-k} xi)`.
pub fn lp_projector(c: &SpectralField, rho: &HomogeneousDistance, k: i32) -> Result<SpectralField> {
    if rho.dim() != c.dim() {
        return Err(Error::invalid("distance and field dimensions differ"));
    }
    let s = 2f64.powi(-k);
    Ok(c.multiply(|xi| {
        let y: Vec<f64> = xi.iter().map(|v| v * s).collect();
        eta(rho, &y)
    }))
}

/// Peetre maximal function `max_{|h| <= aperture 2^{-k}} |L_k f(x + h)|`
/// over grid offsets, with wrap-around.
pub fn peetre_maximal(
    c: &SpectralField,
    rho: &HomogeneousDistance,
    k: i32,
    grid: &TorusGrid,
    aperture: f64,
) -> Result<GridFunction> {
    let h = grid.spacing();
    if h > 2f64.powi(-k - 2) {
        return Err(Error::invalid(format!(
            "grid spacing {h} does not resolve translations at scale 2^-{k}"
        )));
    }
    let lk = synthesize(&lp_projector(c, rho, k)?, grid)?;
    let abs = lk.abs();
    let radius = aperture * 2f64.powi(-k);
    let d = grid.d;
    let n = grid.n;
    // the ball covers the whole torus once it reaches the corner of a fundamental cell
    if radius >= 0.5 * grid.period * (d as f64).sqrt() {
        let m = par::max_abs(&abs);
        return GridFunction::from_real(*grid, vec![m; grid.len()]);
    }
    let rc = (radius / h).floor() as i64;
    let mut offsets: Vec<Vec<i64>> = Vec::new();
    let width = (2 * rc + 1) as usize;
    for flat in 0..width.pow(d as u32) {
        let mut f = flat;
        let mut o = vec![0i64; d];
        for a in (0..d).rev() {
            o[a] = (f % width) as i64 - rc;
            f /= width;
        }
        let r2: f64 = o.iter().map(|&v| (v as f64 * h).powi(2)).sum();
        if r2.sqrt() <= radius * (1.0 + 1e-12) {
            offsets.push(o);
        }
    }
    let vals = par::map_range(grid.len(), |i| {
        let m = grid.multi_index(i);
        let mut best = 0.0f64;
        for o in &offsets {
            let idx = m
                .iter()
                .zip(o)
                .fold(0usize, |acc, (&a, &b)| acc * n + (a as i64 + b).rem_euclid(n as i64) as usize);
            best = best.max(abs[idx]);
        }
        best
    });
    GridFunction::from_real(*grid, vals)
}

/// `(sum_k M_k f(x)^2)^{1/2}` over `k_range`.
pub fn square_function(
    c: &SpectralField,
    rho: &HomogeneousDistance,
    grid: &TorusGrid,
    k_range: std::ops::RangeInclusive<i32>,
    aperture: f64,
) -> Result<GridFunction> {
    let mut acc = vec![0.0; grid.len()];
    for k in k_range {
        let m = peetre_maximal(c, rho, k, grid, aperture)?;
        for (a, v) in acc.iter_mut().zip(&m.values) {
            *a += v.re * v.re;
        }
    }
    GridFunction::from_real(*grid, acc.into_iter().map(f64::sqrt).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::{make_builtin, DistanceKind};
    use crate::spectral::FieldMode;
    use crate::Complex64;

    #[test]
    fn plateau_character_is_fixed() {
        let rho = make_builtin(DistanceKind::Euclidean, 2).unwrap();
        let mut c = SpectralField::zeros(FieldMode::Torus, vec![8, 8]);
        let i = c.index_of(&[4, 0]).unwrap();
        c.coeffs[i] = Complex64::new(1.0, 0.0);
        let l = lp_projector(&c, &rho, 2).unwrap();
        assert_eq!(l.coeffs, c.coeffs);
        assert!(lp_projector(&c, &rho, 7).unwrap().coeffs.iter().all(|z| z.norm() == 0.0));
        let grid = TorusGrid::new(2, 32).unwrap();
        for aperture in [2.0, DEFAULT_APERTURE] {
            let m = peetre_maximal(&c, &rho, 2, &grid, aperture).unwrap();
            assert!(m.values.iter().all(|v| (v.re - 1.0).abs() < 1e-12));
        }
        assert!(peetre_maximal(&c, &rho, 4, &grid, 2.0).is_err());
    }
}
