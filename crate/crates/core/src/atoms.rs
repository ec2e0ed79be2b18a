//! `(p, M)` atoms on the unit ball and the maximal operators
//! `M_{j,nu} a(x) = sup_t |T_{j,nu} a(x, t)|` of the ring-cap tiles.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::decomp::KernelTile;
use crate::fit::{fit_line, LineFit};
use crate::spectral::fft_nd;
use crate::special::ln_gamma;
use crate::{par, Complex64, Error, Result};

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    (h * PI.ln() - ln_gamma(h + 1.0)).exp()
}

/// Multi-indices `beta` with `|beta| <= m` in `d` variables, graded order.
pub fn multi_indices(d: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for deg in 0..=m {
        let mut cur = vec![0; d];
        fill(&mut cur, 0, deg, &mut out);
    }
    out
}

fn fill(cur: &mut Vec<usize>, axis: usize, left: usize, out: &mut Vec<Vec<usize>>) {
    if axis + 1 == cur.len() {
        cur[axis] = left;
        out.push(cur.clone());
        return;
    }
    for v in (0..=left).rev() {
        cur[axis] = v;
        fill(cur, axis + 1, left - v, out);
    }
    cur[axis] = 0;
}

fn monomial(x: &[f64], beta: &[usize]) -> f64 {
    x.iter().zip(beta).map(|(v, &b)| v.powi(b as i32)).product()
}

/// Grid samples of an atom supported in the unit ball, at midpoints of a
/// uniform grid on `[-1, 1]^d`.
#[derive(Debug, Clone)]
pub struct Atom {
    pub p: f64,
    pub m: usize,
    pub d: usize,
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    /// Cell volume of the sampling grid.
    pub cell: f64,
}

/// Samples per axis of the atom grid.
pub const ATOM_GRID: usize = 40;

impl Atom {
    /// `int a x^beta` for every `|beta| <= M`, by the grid sum.
    pub fn moments(&self) -> Vec<(Vec<usize>, f64)> {
        multi_indices(self.d, self.m)
            .into_iter()
            .map(|b| {
                let s: f64 = self.points.iter().zip(&self.values).map(|(x, v)| v * monomial(x, &b)).sum();
                let s = s * self.cell;
                (b, s)
            })
            .collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// The size budget `vol(B)^{-1/p}`.
    pub fn size_bound(&self) -> f64 {
        unit_ball_volume(self.d).powf(-1.0 / self.p)
    }

    pub fn scaled(&self, c: f64) -> Atom {
        let mut a = self.clone();
        for v in &mut a.values {
            *v *= c;
        }
        a
    }

    /// Grid transform `sum_i a(x_i) e^{-2 pi i <xi, x_i>} |cell|`.
    pub fn transform(&self, xi: &[f64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, v) in self.points.iter().zip(&self.values) {
            let ph: f64 = x.iter().zip(xi).map(|(a, b)| a * b).sum();
            acc += Complex64::from_polar(*v, -2.0 * PI * ph);
        }
        acc * self.cell
    }

    /// Normalized grid inner product with another atom on the same grid.
    pub fn correlation(&self, other: &Atom) -> f64 {
        let dot: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        let na: f64 = self.values.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nb: f64 = other.values.iter().map(|a| a * a).sum::<f64>().sqrt();
        dot / (na * nb)
    }
}

fn try_atom(p: f64, m: usize, d: usize, seed: u64) -> Option<Atom> {
    let n = ATOM_GRID;
    let h = 2.0 / n as f64;
    let mut points = Vec::new();
    for flat in 0..n.pow(d as u32) {
        let mut f = flat;
        let mut x = vec![0.0; d];
        for a in (0..d).rev() {
            x[a] = -1.0 + h * ((f % n) as f64 + 0.5);
            f /= n;
        }
        if x.iter().map(|v| v * v).sum::<f64>() < 1.0 {
            points.push(x);
        }
    }
    let weight: Vec<f64> = points
        .iter()
        .map(|x| (1.0 - x.iter().map(|v| v * v).sum::<f64>()).powi(3))
        .collect();

    // a random low-frequency trigonometric polynomial
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let terms: Vec<(Vec<f64>, f64, f64)> = (0..8)
        .map(|_| {
            let k: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.5..1.5)).collect();
            (k, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI))
        })
        .collect();
    let mut hval: Vec<f64> = points
        .iter()
        .map(|x| {
            terms
                .iter()
                .map(|(k, c, ph)| c * (2.0 * PI * x.iter().zip(k).map(|(a, b)| a * b).sum::<f64>() + ph).cos())
                .sum()
        })
        .collect();

    // weighted Gram-Schmidt on the monomials, then project them out of h;
    // a = w (h - P h) has vanishing moments since <a, x^b> = <h - P h, x^b>_w
    let inner = |u: &[f64], v: &[f64]| -> f64 { u.iter().zip(v).zip(&weight).map(|((a, b), w)| a * b * w).sum() };
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for beta in multi_indices(d, m) {
        let mut q: Vec<f64> = points.iter().map(|x| monomial(x, &beta)).collect();
        let norm0 = inner(&q, &q).sqrt();
        for _ in 0..2 {
            for e in &basis {
                let c = inner(&q, e);
                for (qi, ei) in q.iter_mut().zip(e) {
                    *qi -= c * ei;
                }
            }
        }
        let nq = inner(&q, &q).sqrt();
        if !(nq > 1e-10 * norm0) {
            return None;
        }
        for v in &mut q {
            *v /= nq;
        }
        basis.push(q);
    }
    let h0 = inner(&hval, &hval).sqrt();
    for _ in 0..2 {
        for e in &basis {
            let c = inner(&hval, e);
            for (hi, ei) in hval.iter_mut().zip(e) {
                *hi -= c * ei;
            }
        }
    }
    if !(inner(&hval, &hval).sqrt() > 1e-8 * h0) {
        return None;
    }
    let mut values: Vec<f64> = hval.iter().zip(&weight).map(|(a, w)| a * w).collect();
    let sup = values.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let scale = unit_ball_volume(d).powf(-1.0 / p) / sup;
    for v in &mut values {
        *v *= scale;
    }
    Some(Atom {
        p,
        m,
        d,
        points,
        values,
        cell: h.powi(d as i32),
    })
}

/// A `(p, M)` atom on the unit ball from a random smooth bump.
pub fn make_atom(p: f64, m: usize, d: usize, seed: u64) -> Result<Atom> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid("atoms need p in (0, 1]"));
    }
    if d == 0 || d > 3 {
        return Err(Error::invalid("atoms are sampled for d = 1, 2, 3"));
    }
    if !((m + 1) as f64 > d as f64 * (1.0 / p - 1.0)) {
        return Err(Error::invalid(format!("moment order {m} too small for p = {p} in d = {d}")));
    }
    for attempt in 0..5u64 {
        if let Some(a) = try_atom(p, m, d, seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15))) {
            return Ok(a);
        }
    }
    Err(Error::invalid("degenerate moment system after 5 reseeds"))
}

/// Discretization of the frequency tile for `atom_maximal`.
#[derive(Debug, Clone, Copy)]
pub struct TileGrid {
    /// FFT length per axis.
    pub fft_n: usize,
    /// Spatial periods are `period_factor * 2^j` along the cap normal and
    /// `period_factor * 2^{j/2}` across.
    pub period_factor: f64,
}

impl Default for TileGrid {
    fn default() -> Self {
        TileGrid {
            fft_n: 512,
            period_factor: 16.0,
        }
    }
}

/// `t_k = 2^{-4 + 8k/(n-1)}`, the window used as a proxy for `sup_{t > 0}`.
pub fn default_t_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| 2f64.powf(-4.0 + 8.0 * k as f64 / (n - 1) as f64)).collect()
}

/// `sup_t |int chi_nu(xi) phi_j(rho(xi/t)) a^(xi) e^{2 pi i <xi, x>} dxi|` at each
/// point of `x_grid`, over `t_grid`, in `d = 2`.
///
/// With `xi = t zeta` the integral is `t^2 F_t(t x)`, where `F_t` is the
/// inverse transform of the tile times `a^(t zeta)`. `F_t` is sampled by an FFT
/// after demodulating the tile to the origin and read off by six-point
/// Lagrange interpolation. Points `t x` outside the sampled box count as 0.
pub fn atom_maximal(
    atom: &Atom,
    tile: &KernelTile,
    t_grid: &[f64],
    x_grid: &[[f64; 2]],
    geom: &TileGrid,
) -> Result<Vec<f64>> {
    if atom.d != 2 {
        return Err(Error::invalid("atom maximal functions are computed in d = 2"));
    }
    if !tile.rho.is_radial() {
        return Err(Error::invalid("atom maximal functions need a radial distance"));
    }
    let nf = geom.fft_n;
    if !nf.is_power_of_two() || nf < 64 {
        return Err(Error::invalid("fft length must be a power of two >= 64"));
    }
    let j = tile.j;
    let p1 = geom.period_factor * 2f64.powi(j as i32);
    let p2 = geom.period_factor * 2f64.powf(j as f64 / 2.0);
    let (d1, d2) = (1.0 / p1, 1.0 / p2);
    let e = tile.direction().to_vec();
    let perp = [-e[1], e[0]];
    let b = tile.rho.b();
    let (slo, shi) = tile.rings.support(j);
    let rlo = tile.rho.eval_radial(1.0).powf(-b) * slo.powf(b);
    let rhi = tile.rho.eval_radial(1.0).powf(-b) * shi.powf(b);
    let ang = tile.caps.support_radius();
    let c = 0.5 * (rlo * ang.cos() + rhi);
    let half1 = 0.5 * (rhi - rlo * ang.cos());
    let half2 = rhi * ang.sin();
    let k1 = (half1 / d1).ceil() as i64 + 1;
    let k2 = (half2 / d2).ceil() as i64 + 1;
    if 2 * k1.max(k2) + 8 > nf as i64 {
        return Err(Error::BudgetExceeded(format!("tile needs {k1} x {k2} half-widths on a {nf} grid")));
    }

    // multiplier on the tile nodes, t-independent
    let mut nodes: Vec<(usize, [f64; 2], f64)> = Vec::new();
    for a in -k1..=k1 {
        for bb in -k2..=k2 {
            let u = c + a as f64 * d1;
            let v = bb as f64 * d2;
            let z = [u * e[0] + v * perp[0], u * e[1] + v * perp[1]];
            let th = z[1].atan2(z[0]).rem_euclid(2.0 * PI);
            let chi = tile.caps.chi_angle(tile.nu, th);
            if chi == 0.0 {
                continue;
            }
            let phi = tile.rings.phi(j, tile.rho.eval(&z));
            if phi == 0.0 {
                continue;
            }
            let idx = (a.rem_euclid(nf as i64) as usize) * nf + bb.rem_euclid(nf as i64) as usize;
            nodes.push((idx, z, chi * phi * d1 * d2));
        }
    }

    let rot: Vec<[f64; 2]> = x_grid
        .iter()
        .map(|x| [x[0] * e[0] + x[1] * e[1], x[0] * perp[0] + x[1] * perp[1]])
        .collect();
    let mut best = vec![0.0f64; x_grid.len()];
    let mut buf = vec![Complex64::new(0.0, 0.0); nf * nf];
    for &t in t_grid {
        for v in buf.iter_mut() {
            *v = Complex64::new(0.0, 0.0);
        }
        let vals = par::map_slice(&nodes, |(_, z, w)| atom.transform(&[t * z[0], t * z[1]]) * *w);
        for ((idx, _, _), v) in nodes.iter().zip(vals) {
            buf[*idx] = v;
        }
        fft_nd(&mut buf, 2, nf, true);
        let src = &buf;
        let row = par::map_slice(&rot, |x| t * t * interpolate(src, nf, t * x[0] / p1 * nf as f64, t * x[1] / p2 * nf as f64));
        for (bv, v) in best.iter_mut().zip(row) {
            *bv = bv.max(v);
        }
    }
    Ok(best)
}

/// `|F(u)|` from periodic samples `F(m)`, `m` in `[-n/2, n/2)`, by tensor
/// six-point Lagrange interpolation; 0 outside the central box.
fn interpolate(buf: &[Complex64], n: usize, u1: f64, u2: f64) -> f64 {
    let lim = (n / 2) as f64 - 4.0;
    if u1.abs() > lim || u2.abs() > lim {
        return 0.0;
    }
    let weights = |u: f64| -> (i64, [f64; 6]) {
        let i0 = u.floor() as i64 - 2;
        let mut w = [1.0; 6];
        for (a, wa) in w.iter_mut().enumerate() {
            for bb in 0..6 {
                if a != bb {
                    *wa *= (u - (i0 + bb as i64) as f64) / (a as f64 - bb as f64);
                }
            }
        }
        (i0, w)
    };
    let (i1, w1) = weights(u1);
    let (i2, w2) = weights(u2);
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, wa) in w1.iter().enumerate() {
        let r = (i1 + a as i64).rem_euclid(n as i64) as usize * n;
        for (bb, wb) in w2.iter().enumerate() {
            acc += buf[r + (i2 + bb as i64).rem_euclid(n as i64) as usize] * (wa * wb);
        }
    }
    acc.norm()
}

/// One-axis graded cells: uniform with width `s/16` on `|u| <= 2s`, then
/// geometric with ratio `2^{1/4}` out to `reach`. Returns midpoints and widths.
pub fn graded_axis(s: f64, reach: f64) -> Vec<(f64, f64)> {
    let mut edges = Vec::new();
    let h = s / 16.0;
    for k in 0..=32 {
        edges.push(k as f64 * h);
    }
    let mut e = 2.0 * s;
    while e < reach {
        e = (e * 2f64.powf(0.25)).min(reach);
        edges.push(e);
    }
    let mut out = Vec::new();
    for w in edges.windows(2).rev() {
        out.push((-0.5 * (w[0] + w[1]), w[1] - w[0]));
    }
    for w in edges.windows(2) {
        out.push((0.5 * (w[0] + w[1]), w[1] - w[0]));
    }
    out
}

/// The scan grid for tile scale `j`, in coordinates along and across the
/// cap direction `e`, with cell areas.
pub fn scan_grid(j: u32, e: &[f64]) -> (Vec<[f64; 2]>, Vec<f64>) {
    let s1 = 2f64.powi(j as i32);
    let s2 = 2f64.powf(j as f64 / 2.0);
    let reach = 16.0 * s1;
    let a1 = graded_axis(s1, reach);
    let a2 = graded_axis(s2, reach);
    let mut pts = Vec::with_capacity(a1.len() * a2.len());
    let mut wts = Vec::with_capacity(a1.len() * a2.len());
    for &(u, wu) in &a1 {
        for &(v, wv) in &a2 {
            pts.push([u * e[0] - v * e[1], u * e[1] + v * e[0]]);
            wts.push(wu * wv);
        }
    }
    (pts, wts)
}

/// Region of a scan point in the along/across coordinates `(x_1, x')`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomRegion {
    /// `|x_1| <= 5, |x'| <= 5`.
    Core,
    /// `|x_1| <= 5 2^{j/2}, |x'| <= 5` minus the core.
    Strip,
    /// Inside `|x_1| <= 5 2^j, |x'| <= 5 2^{j/2}`, outside the strip, `|x'| >= 2^{-j/2}|x_1|`.
    Across,
    /// As `Across` with `|x'| < 2^{-j/2}|x_1|`.
    Along,
    /// Outside the box, `|x'| >= 2^{-j/2}|x_1|`.
    FarAcross,
    FarAlong,
}

pub fn classify_point(j: u32, x1: f64, xp: f64) -> AtomRegion {
    let (a, b) = (x1.abs(), xp.abs());
    let s = 2f64.powf(j as f64 / 2.0);
    let across = b >= a / s;
    if a <= 5.0 && b <= 5.0 {
        AtomRegion::Core
    } else if a <= 5.0 * s && b <= 5.0 {
        AtomRegion::Strip
    } else if a <= 5.0 * s * s && b <= 5.0 * s {
        if across {
            AtomRegion::Across
        } else {
            AtomRegion::Along
        }
    } else if across {
        AtomRegion::FarAcross
    } else {
        AtomRegion::FarAlong
    }
}

#[derive(Debug, Clone)]
pub struct AtomScan {
    pub p: f64,
    pub m: usize,
    pub js: Vec<u32>,
    pub lp_values: Vec<f64>,
    pub fit: LineFit,
    pub predicted: f64,
}

impl AtomScan {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("j,p,M,lp_value,log2_lp,predicted_slope,fitted_slope\n");
        for (j, v) in self.js.iter().zip(&self.lp_values) {
            s.push_str(&format!(
                "{j},{},{},{v:e},{:e},{:e},{:e}\n",
                self.p,
                self.m,
                v.log2(),
                self.predicted,
                self.fit.slope
            ));
        }
        s
    }
}

/// Predicted log2-slope `(d+1)/2 (1/p - 1)`.
pub fn atom_predicted_slope(d: usize, p: f64) -> f64 {
    0.5 * (d as f64 + 1.0) * (1.0 / p - 1.0)
}

/// `||M_{j,nu} a||_p` on the graded scan grid for each `j`, and its log2-slope.
///
/// `tile_for(j)` supplies the tile; the cap should be the same direction for
/// every `j` so that the grids are comparable.
pub fn atom_scaling_scan<F>(atom: &Atom, js: &[u32], t_grid: &[f64], geom: &TileGrid, tile_for: F) -> Result<AtomScan>
where
    F: Fn(u32) -> Result<KernelTile>,
{
    if js.len() < 2 {
        return Err(Error::invalid("need two scales for a slope"));
    }
    let mut lp_values = Vec::with_capacity(js.len());
    for &j in js {
        let tile = tile_for(j)?;
        let (pts, wts) = scan_grid(j, tile.direction());
        let m = atom_maximal(atom, &tile, t_grid, &pts, geom)?;
        let s: f64 = m.iter().zip(&wts).map(|(v, w)| v.powf(atom.p) * w).sum();
        lp_values.push(s.powf(1.0 / atom.p));
    }
    let x: Vec<f64> = js.iter().map(|&j| j as f64).collect();
    let y: Vec<f64> = lp_values.iter().map(|v| v.log2()).collect();
    Ok(AtomScan {
        p: atom.p,
        m: atom.m,
        js: js.to_vec(),
        lp_values,
        fit: fit_line(&x, &y),
        predicted: atom_predicted_slope(atom.d, atom.p),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_mean_zero() {
        let a = make_atom(1.0, 0, 1, 3).unwrap();
        assert!(a.moments()[0].1.abs() < 1e-12);
        assert!(a.sup_norm() <= a.size_bound() * (1.0 + 1e-12));
    }

    #[test]
    fn index_counts() {
        assert_eq!(multi_indices(2, 2).len(), 6);
        assert_eq!(multi_indices(3, 2).len(), 10);
        assert_eq!(multi_indices(1, 4).len(), 5);
        assert!(make_atom(0.5, 1, 2, 0).is_err());
    }

    #[test]
    fn regions_partition() {
        let j = 6;
        assert_eq!(classify_point(j, 1.0, 1.0), AtomRegion::Core);
        assert_eq!(classify_point(j, 30.0, 1.0), AtomRegion::Strip);
        assert_eq!(classify_point(j, 300.0, 2.0), AtomRegion::Along);
        assert_eq!(classify_point(j, 10.0, 30.0), AtomRegion::Across);
        assert_eq!(classify_point(j, 1000.0, 1.0), AtomRegion::FarAlong);
        assert_eq!(classify_point(j, 10.0, 100.0), AtomRegion::FarAcross);
    }
}
