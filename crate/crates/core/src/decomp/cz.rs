//! Calderón–Zygmund scaffolding built from the square function: level sets,
//! dyadic cube classes, Whitney cubes of the dilated level sets, the cube
//! energies `gamma` and the profile `U`.

use std::collections::BTreeMap;

use super::lp::{lp_projector, square_function};
use super::whitney::{whitney_decompose, GridMask, WhitneyCube};
use crate::distance::HomogeneousDistance;
use crate::spectral::{synthesize, SpectralField, TorusGrid};
use crate::{par, Error, Result};

#[derive(Debug, Clone)]
pub struct CzOptions {
    pub k_min: i32,
    pub k_max: i32,
    /// Peetre aperture; `None` means `d`.
    pub aperture: Option<f64>,
    /// Density threshold of the dilated level set; `None` means `10^{-d}`.
    pub dilate_threshold: Option<f64>,
}

impl CzOptions {
    pub fn new(k_min: i32, k_max: i32) -> Self {
        CzOptions {
            k_min,
            k_max,
            aperture: None,
            dilate_threshold: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LevelProfile {
    pub mu: i32,
    /// `{S f > 2^mu}`.
    pub omega: GridMask,
    pub omega_tilde: GridMask,
    /// Set when the dilated set is the whole box and the unit cube stands in
    /// for its Whitney decomposition.
    pub full_box: bool,
    pub cubes: Vec<WhitneyCube>,
    pub gamma: Vec<f64>,
    pub bad: Vec<bool>,
    /// Dyadic cubes of this class.
    pub class_size: usize,
    /// Cubes of this class not contained in a single Whitney cube.
    pub split: usize,
}

#[derive(Debug, Clone)]
pub struct CzProfile {
    pub d: usize,
    pub n: usize,
    pub p: f64,
    pub alpha: f64,
    pub levels: Vec<LevelProfile>,
    /// Dyadic cubes examined, and those classified (cubes where `S f`
    /// vanishes on half the cube carry no class).
    pub dyadic_cubes: usize,
    pub classified: usize,
    /// `U` averaged over grid cells.
    pub u: Vec<f64>,
    pub u_l1: f64,
    pub s_lp_p: f64,
}

impl CzProfile {
    pub fn ratio(&self) -> f64 {
        if self.s_lp_p == 0.0 {
            0.0
        } else {
            self.u_l1 / self.s_lp_p
        }
    }
}

/// The class `mu` with `|R cap Omega_mu| >= |R|/2 > |R cap Omega_{mu+1}|`,
/// from the values of `S f` on the cells of `R`.
pub fn classify_cube(values: &[f64]) -> Option<i32> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    let h = values.len().div_ceil(2);
    let m = v[h - 1];
    if !(m > 0.0) || !m.is_finite() {
        return None;
    }
    let mut mu = m.log2().ceil() as i32 - 1;
    // guard the rounding of log2 near powers of two
    while m > 2f64.powi(mu + 1) {
        mu += 1;
    }
    while m <= 2f64.powi(mu) {
        mu -= 1;
    }
    Some(mu)
}

fn unflatten(mut i: usize, d: usize, n: usize) -> Vec<usize> {
    let mut m = vec![0; d];
    for a in (0..d).rev() {
        m[a] = i % n;
        i /= n;
    }
    m
}

fn flatten(m: &[usize], n: usize) -> usize {
    m.iter().fold(0, |acc, &v| acc * n + v)
}

/// Periodic centered box sums with half-width `m` cells, separably.
fn box_sum(values: &[f64], d: usize, n: usize, m: usize) -> Vec<f64> {
    let mut cur = values.to_vec();
    let stride: Vec<usize> = (0..d).map(|a| n.pow((d - 1 - a) as u32)).collect();
    for &s in &stride {
        let mut next = vec![0.0; cur.len()];
        for (i, out) in next.iter_mut().enumerate() {
            let pos = (i / s) % n;
            let base = i - pos * s;
            let mut acc = 0.0;
            for o in 0..=2 * m {
                let q = (pos + n * (m + 1) + o - m) % n;
                acc += cur[base + q * s];
            }
            *out = acc;
        }
        cur = next;
    }
    cur
}

/// `{x : sup_m |B_m(x)|^{-1} |B_m(x) cap Omega| > threshold}` over centered
/// boxes of `2m+1` cells, `m in {0, 1, 2, 4, ...}`.
fn dilate(mask: &GridMask, threshold: f64) -> GridMask {
    let d = mask.d;
    let n = mask.n;
    let ind: Vec<f64> = mask.cells.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let mut best = ind.clone();
    let mut m = 1;
    while 2 * m < n {
        let vol = ((2 * m + 1) as f64).powi(d as i32);
        for (b, s) in best.iter_mut().zip(box_sum(&ind, d, n, m)) {
            *b = b.max(s / vol);
        }
        m *= 2;
    }
    GridMask {
        d,
        n,
        cells: best.into_iter().map(|v| v > threshold).collect(),
    }
}

struct Dyadic {
    k: i32,
    lo: Vec<usize>,
    side: usize,
    mu: Option<i32>,
}

/// Calderón–Zygmund profile of a torus field on the unit torus at `p`, with
/// good/bad threshold `alpha`.
pub fn cz_profile(
    c: &SpectralField,
    rho: &HomogeneousDistance,
    p: f64,
    alpha: f64,
    grid: &TorusGrid,
    opts: &CzOptions,
) -> Result<CzProfile> {
    if !(1.0..2.0).contains(&p) {
        return Err(Error::invalid("cz profile needs p in [1, 2)"));
    }
    if !(alpha > 0.0) {
        return Err(Error::invalid("alpha must be positive"));
    }
    if !grid.n.is_power_of_two() || (grid.period - 1.0).abs() > 1e-15 {
        return Err(Error::invalid("cz profile needs the unit torus with 2^m cells per axis"));
    }
    if opts.k_min < 0 || opts.k_max < opts.k_min || (1usize << opts.k_max) > grid.n {
        return Err(Error::invalid("dyadic scales must satisfy 0 <= k_min <= k_max <= log2 n"));
    }
    let d = grid.d;
    let n = grid.n;
    let aperture = opts.aperture.unwrap_or(d as f64);
    let threshold = opts.dilate_threshold.unwrap_or(10f64.powi(-(d as i32)));
    let cell = grid.cell_volume();

    let s = square_function(c, rho, grid, opts.k_min..=opts.k_max, aperture)?;
    let sv: Vec<f64> = s.values.iter().map(|v| v.re).collect();
    let s_lp_p = par::pairwise_sum(&sv.iter().map(|v| v.powf(p)).collect::<Vec<_>>()) * cell;

    // per-cell energy of L_k f, one row per k
    let mut energy: Vec<Vec<f64>> = Vec::new();
    for k in opts.k_min..=opts.k_max {
        let lk = synthesize(&lp_projector(c, rho, k)?, grid)?;
        energy.push(lk.values.iter().map(|v| v.norm_sqr() * cell).collect());
    }

    let mut dyadic = Vec::new();
    for k in opts.k_min..=opts.k_max {
        let side = n >> k;
        let per = 1usize << k;
        for flat in 0..per.pow(d as u32) {
            let lo: Vec<usize> = unflatten(flat, d, per).into_iter().map(|v| v * side).collect();
            dyadic.push(Dyadic { k, lo, side, mu: None });
        }
    }
    let classes = par::map_slice(&dyadic, |r| {
        let vals: Vec<f64> = (0..r.side.pow(d as u32))
            .map(|o| {
                let off = unflatten(o, d, r.side);
                let c: Vec<usize> = r.lo.iter().zip(off).map(|(a, b)| a + b).collect();
                sv[flatten(&c, n)]
            })
            .collect();
        classify_cube(&vals)
    });
    for (r, m) in dyadic.iter_mut().zip(classes) {
        r.mu = m;
    }
    let classified = dyadic.iter().filter(|r| r.mu.is_some()).count();

    let mut by_mu: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for (i, r) in dyadic.iter().enumerate() {
        if let Some(m) = r.mu {
            by_mu.entry(m).or_default().push(i);
        }
    }

    let mut levels = Vec::new();
    let mut u = vec![0.0; grid.len()];
    let mut u_l1 = 0.0;
    for (&mu, members) in &by_mu {
        let level = 2f64.powi(mu);
        let omega = GridMask {
            d,
            n,
            cells: sv.iter().map(|&v| v > level).collect(),
        };
        let omega_tilde = dilate(&omega, threshold);
        let full_box = omega_tilde.cells.iter().all(|&b| b);
        let cubes = if full_box {
            vec![WhitneyCube {
                lo: vec![0; d],
                side: 2 * n as i64,
                dist: 0,
            }]
        } else {
            whitney_decompose(&omega_tilde)?
        };

        // energy of the class, per cell
        let mut e = vec![0.0; grid.len()];
        for &ri in members {
            let r = &dyadic[ri];
            let row = &energy[(r.k - opts.k_min) as usize];
            for o in 0..r.side.pow(d as u32) {
                let off = unflatten(o, d, r.side);
                let c: Vec<usize> = r.lo.iter().zip(off).map(|(a, b)| a + b).collect();
                let idx = flatten(&c, n);
                e[idx] += row[idx];
            }
        }
        // owner of every cell, or usize::MAX when the cell is split
        // between half-cell cubes or lies outside the dilated set
        let mut owner = vec![usize::MAX; grid.len()];
        let mut gamma_sq = vec![0.0; cubes.len()];
        let frac = 0.5f64.powi(d as i32);
        for (wi, w) in cubes.iter().enumerate() {
            if w.side == 1 {
                let c: Vec<usize> = w.lo.iter().map(|&v| (v / 2) as usize).collect();
                gamma_sq[wi] += frac * e[flatten(&c, n)];
                continue;
            }
            let s = (w.side / 2) as usize;
            for o in 0..s.pow(d as u32) {
                let off = unflatten(o, d, s);
                let c: Vec<usize> = w.lo.iter().zip(off).map(|(&a, b)| (a / 2) as usize + b).collect();
                let idx = flatten(&c, n);
                owner[idx] = wi;
                gamma_sq[wi] += e[idx];
            }
        }
        let mut split = 0;
        for &ri in members {
            let r = &dyadic[ri];
            let wi = owner[flatten(&r.lo, n)];
            if wi == usize::MAX || !cubes[wi].contains_cell(&r.lo.iter().map(|v| v + r.side - 1).collect::<Vec<_>>()) {
                split += 1;
            }
        }
        let gamma: Vec<f64> = cubes
            .iter()
            .zip(&gamma_sq)
            .map(|(w, &g)| (g / w.volume(n)).sqrt())
            .collect();
        for (w, &g) in cubes.iter().zip(&gamma) {
            let gp = g.powf(p);
            u_l1 += w.volume(n) * gp;
            if w.side == 1 {
                let c: Vec<usize> = w.lo.iter().map(|&v| (v / 2) as usize).collect();
                u[flatten(&c, n)] += frac * gp;
            } else {
                let s = (w.side / 2) as usize;
                for o in 0..s.pow(d as u32) {
                    let off = unflatten(o, d, s);
                    let c: Vec<usize> = w.lo.iter().zip(off).map(|(&a, b)| (a / 2) as usize + b).collect();
                    u[flatten(&c, n)] += gp;
                }
            }
        }
        let bad = gamma.iter().map(|&g| g > alpha).collect();
        levels.push(LevelProfile {
            mu,
            omega,
            omega_tilde,
            full_box,
            cubes,
            gamma,
            bad,
            class_size: members.len(),
            split,
        });
    }

    Ok(CzProfile {
        d,
        n,
        p,
        alpha,
        levels,
        dyadic_cubes: dyadic.len(),
        classified,
        u,
        u_l1,
        s_lp_p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::{make_builtin, DistanceKind};
    use crate::spectral::FieldMode;

    #[test]
    fn median_rule() {
        assert_eq!(classify_cube(&[3.0, 3.0, 0.5, 0.5]), Some(1));
        assert_eq!(classify_cube(&[4.0, 4.0, 4.0, 0.0]), Some(1));
        assert_eq!(classify_cube(&[4.1, 4.1, 0.0, 0.0]), Some(2));
        assert_eq!(classify_cube(&[1.0, 0.0, 0.0, 0.0]), None);
        assert_eq!(classify_cube(&[0.3]), Some(-2));
    }

    #[test]
    fn zero_field_has_no_levels() {
        let rho = make_builtin(DistanceKind::Euclidean, 2).unwrap();
        let c = SpectralField::zeros(FieldMode::Torus, vec![4, 4]);
        let grid = TorusGrid::new(2, 16).unwrap();
        let prof = cz_profile(&c, &rho, 1.0, 1.0, &grid, &CzOptions::new(0, 2)).unwrap();
        assert!(prof.levels.is_empty());
        assert_eq!(prof.u_l1, 0.0);
        assert_eq!(prof.classified, 0);
        assert_eq!(prof.dyadic_cubes, 1 + 4 + 16);
    }

    #[test]
    fn dilate_contains_the_set() {
        let m = GridMask::from_fn(2, 16, |c| c[0] == 3 && c[1] == 5);
        let t = dilate(&m, 0.01);
        assert!(m.cells.iter().zip(&t.cells).all(|(a, b)| !a || *b));
        assert!(t.count() > m.count());
    }
}
