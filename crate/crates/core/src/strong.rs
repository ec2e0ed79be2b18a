//! `q`-strong means `G_q(x, T) = (T^{-1} int_0^T |A_t f(x) - f(x)|^q dt)^{1/q}`
//! and the density-set construction for almost convergence.

use num_complex::Complex64;

use crate::par;
use crate::riesz::{OperatorFamily, RieszSpec};
use crate::spectral::{cis, lp_norm, synthesize, weak_lp_quasinorm, GridFunction, SpectralField, TorusGrid};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrongMeanOptions {
    pub q: f64,
    /// Trapezoid nodes per cell (at least 8).
    pub nodes_per_cell: usize,
    /// Hard cap on the number of `t`-cells.
    pub max_cells: usize,
    /// Geometric breakpoints per octave added on top of the kinks.
    pub per_octave: usize,
}

impl Default for StrongMeanOptions {
    fn default() -> Self {
        StrongMeanOptions {
            q: 2.0,
            nodes_per_cell: 64,
            max_cells: 4096,
            per_octave: 8,
        }
    }
}

/// `G_q` at every point and ladder entry.
#[derive(Debug, Clone, PartialEq)]
pub struct StrongMeanProfile {
    pub points: Vec<Vec<f64>>,
    pub ladder: Vec<f64>,
    /// `values[x][k]` is `G_q(points[x], ladder[k])`.
    pub values: Vec<Vec<f64>>,
    /// Cells and nodes used for `[0, ladder[k]]`.
    pub cells: Vec<usize>,
    pub nodes: Vec<usize>,
}

impl StrongMeanProfile {
    /// CSV with columns `x_index, x_1.., T, G_q, quadrature_cells, quadrature_nodes`.
    pub fn to_csv(&self) -> String {
        let d = self.points.first().map_or(0, |p| p.len());
        let mut s = String::from("x_index");
        for a in 0..d {
            s.push_str(&format!(",x_{}", a + 1));
        }
        s.push_str(",T,G_q,quadrature_cells,quadrature_nodes\n");
        for (i, (x, row)) in self.points.iter().zip(&self.values).enumerate() {
            for (k, g) in row.iter().enumerate() {
                s.push_str(&i.to_string());
                for v in x {
                    s.push_str(&format!(",{v:e}"));
                }
                s.push_str(&format!(",{:e},{:e},{},{}\n", self.ladder[k], g, self.cells[k], self.nodes[k]));
            }
        }
        s
    }
}

/// Modes grouped by their `rho` value, which fixes their multiplier.
struct ModeGroups {
    rho: Vec<f64>,
    members: Vec<Vec<usize>>,
}

fn group_modes(c: &SpectralField, spec: &RieszSpec) -> ModeGroups {
    let mut keyed: Vec<(f64, usize)> = (0..c.len())
        .filter(|&i| c.coeffs[i] != Complex64::new(0.0, 0.0))
        .map(|i| (spec.rho.eval(&c.frequency(i)), i))
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut rho: Vec<f64> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (r, i) in keyed {
        match rho.last() {
            Some(&last) if (r - last).abs() <= 1e-13 * r.max(1.0) => members.last_mut().unwrap().push(i),
            _ => {
                rho.push(r);
                members.push(vec![i]);
            }
        }
    }
    ModeGroups { rho, members }
}

/// Quadrature nodes of the `t`-integral over `[0, T_max]`.
struct TNodes {
    t: Vec<f64>,
    w: Vec<f64>,
    /// `ends[k]`: number of nodes belonging to `[0, ladder[k]]`.
    ends: Vec<usize>,
    cells_at: Vec<usize>,
}

fn t_nodes(kinks: &[f64], ladder: &[f64], lambda: f64, opts: &StrongMeanOptions) -> Result<TNodes> {
    let tmax = *ladder.last().unwrap();
    let mut kink_pts: Vec<f64> = kinks.iter().copied().filter(|&k| k > 0.0 && k < tmax).collect();
    kink_pts.sort_by(f64::total_cmp);
    kink_pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.max(1.0));
    let mut geo: Vec<f64> = Vec::new();
    if opts.per_octave > 0 {
        let lo = kink_pts.first().copied().unwrap_or(ladder[0]).min(ladder[0]);
        let mut k = (lo.log2() * opts.per_octave as f64).floor() as i64;
        loop {
            let v = 2f64.powf(k as f64 / opts.per_octave as f64);
            if v >= tmax {
                break;
            }
            if v > 0.0 {
                geo.push(v);
            }
            k += 1;
        }
    }
    let mut pts: Vec<(f64, bool)> = kink_pts.iter().map(|&v| (v, true)).collect();
    pts.extend(ladder.iter().map(|&v| (v, false)));
    let mandatory = pts.len() + 1;
    if mandatory > opts.max_cells {
        return Err(Error::BudgetExceeded(format!(
            "{mandatory} kink and ladder cells exceed the cap of {}",
            opts.max_cells
        )));
    }
    if mandatory + geo.len() <= opts.max_cells {
        pts.extend(geo.iter().map(|&v| (v, false)));
    }
    pts.push((0.0, false));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
    // merge coincident points, keeping the kink flag
    let mut merged: Vec<(f64, bool)> = Vec::with_capacity(pts.len());
    for (v, k) in pts {
        match merged.last_mut() {
            Some(last) if (v - last.0).abs() <= 1e-12 * v.max(1.0) => last.1 |= k,
            _ => merged.push((v, k)),
        }
    }
    let graded = lambda.fract() != 0.0 && lambda < 1.0;
    let gamma = if graded { (2.0 / (1.0 + lambda)).max(1.0) } else { 1.0 };
    let n = opts.nodes_per_cell.max(8);
    let mut t = Vec::new();
    let mut w = Vec::new();
    let mut ends = Vec::with_capacity(ladder.len());
    let mut cells_at = Vec::with_capacity(ladder.len());
    let mut li = 0;
    for (ci, pair) in merged.windows(2).enumerate() {
        let (a, kink_left) = pair[0];
        let b = pair[1].0;
        let g = if kink_left { gamma } else { 1.0 };
        let pos: Vec<f64> = (0..n)
            .map(|k| a + (b - a) * (k as f64 / (n - 1) as f64).powf(g))
            .collect();
        let jitter = 2f64.powi(-22) * (b - a);
        for k in 0..n {
            let wl = if k > 0 { 0.5 * (pos[k] - pos[k - 1]) } else { 0.0 };
            let wr = if k + 1 < n { 0.5 * (pos[k + 1] - pos[k]) } else { 0.0 };
            let x = if k == 0 {
                pos[k] + jitter
            } else if k + 1 == n {
                pos[k] - jitter
            } else {
                pos[k]
            };
            t.push(x);
            w.push(wl + wr);
        }
        while li < ladder.len() && (ladder[li] - b).abs() <= 1e-12 * b.max(1.0) {
            ends.push(t.len());
            cells_at.push(ci + 1);
            li += 1;
        }
    }
    if ends.len() != ladder.len() {
        return Err(Error::invalid("ladder entries were lost while building cells"));
    }
    Ok(TNodes { t, w, ends, cells_at })
}

fn validate(q: f64, ladder: &[f64]) -> Result<()> {
    if !(q >= 1.0) || !q.is_finite() {
        return Err(Error::invalid(format!("q must lie in [1, inf), got {q}")));
    }
    if ladder.is_empty() {
        return Err(Error::invalid("empty T ladder"));
    }
    if ladder.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
        return Err(Error::invalid("T values must be positive"));
    }
    if ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("T ladder must be strictly increasing"));
    }
    Ok(())
}

/// `G_q(x, T)` for every point and every ladder entry, reusing the running
/// integral along the ladder.
pub fn strong_mean_profile(
    c: &SpectralField,
    family: OperatorFamily,
    spec: &RieszSpec,
    points: &[Vec<f64>],
    ladder: &[f64],
    opts: &StrongMeanOptions,
) -> Result<StrongMeanProfile> {
    validate(opts.q, ladder)?;
    if spec.dim() != c.dim() {
        return Err(Error::invalid("distance and field dimensions differ"));
    }
    let groups = group_modes(c, spec);
    let b = spec.rho.b();
    let kinks: Vec<f64> = groups.rho.iter().map(|r| r.powf(b)).collect();
    let nodes = t_nodes(&kinks, ladder, spec.lambda, opts)?;
    let ng = groups.rho.len();
    let budget = 1usize << 26;
    if nodes.t.len().saturating_mul(ng) > budget {
        return Err(Error::BudgetExceeded(format!(
            "{} t-nodes times {ng} mode groups exceeds {budget}",
            nodes.t.len()
        )));
    }
    // (m_g(t) - 1) for every node and group
    let lam = spec.lambda;
    let table: Vec<f64> = par::map_range(nodes.t.len(), |k| {
        let t = nodes.t[k];
        let s = t.powf(-1.0 / b);
        groups
            .rho
            .iter()
            .map(|&r| family.multiplier(r * s, lam) - 1.0)
            .collect::<Vec<f64>>()
    })
    .concat();
    let q = opts.q;
    let values = par::map_slice(points, |x| {
        let sums: Vec<Complex64> = groups
            .members
            .iter()
            .map(|mem| {
                let parts: Vec<Complex64> = mem
                    .iter()
                    .map(|&i| {
                        let xi = c.frequency(i);
                        let ph: f64 = xi.iter().zip(x).map(|(a, b)| a * b).sum();
                        c.coeffs[i] * cis(ph)
                    })
                    .collect();
                par::pairwise_sum_complex(&parts)
            })
            .collect();
        let mut out = Vec::with_capacity(ladder.len());
        let mut acc = 0.0;
        let mut start = 0;
        for (k, &end) in nodes.ends.iter().enumerate() {
            let mut seg = Vec::with_capacity(end - start);
            for node in start..end {
                let row = &table[node * ng..(node + 1) * ng];
                let mut z = Complex64::new(0.0, 0.0);
                for (m, s) in row.iter().zip(&sums) {
                    z += s * *m;
                }
                let v = if q == 2.0 { z.norm_sqr() } else { z.norm().powf(q) };
                seg.push(nodes.w[node] * v);
            }
            acc += par::pairwise_sum(&seg);
            start = end;
            let mean = acc / ladder[k];
            out.push(if q == 2.0 { mean.sqrt() } else { mean.powf(1.0 / q) });
        }
        out
    });
    Ok(StrongMeanProfile {
        points: points.to_vec(),
        ladder: ladder.to_vec(),
        values,
        cells: nodes.cells_at,
        nodes: nodes.ends,
    })
}

/// `G_q(x, T)` at a single `T`.
pub fn strong_mean(
    c: &SpectralField,
    family: OperatorFamily,
    spec: &RieszSpec,
    points: &[Vec<f64>],
    t_end: f64,
    opts: &StrongMeanOptions,
) -> Result<Vec<f64>> {
    let prof = strong_mean_profile(c, family, spec, points, &[t_end], opts)?;
    Ok(prof.values.into_iter().map(|v| v[0]).collect())
}

/// Pointwise max of `G_q(x, T)` over the ladder.
pub fn sup_strong_mean(
    c: &SpectralField,
    family: OperatorFamily,
    spec: &RieszSpec,
    points: &[Vec<f64>],
    ladder: &[f64],
    opts: &StrongMeanOptions,
) -> Result<Vec<f64>> {
    let prof = strong_mean_profile(c, family, spec, points, ladder, opts)?;
    Ok(prof
        .values
        .into_iter()
        .map(|row| row.into_iter().fold(0.0, f64::max))
        .collect())
}

/// The default ladder: dyadic from 1 to `2^10` with 4 intermediate points per octave.
pub fn default_ladder() -> Vec<f64> {
    (0..=50).map(|k| 2f64.powf(k as f64 / 5.0)).collect()
}

/// `||sup_T G_q||_{p,inf} / ||f||_p` over all nodes of `grid`.
pub fn weak_type_ratio(
    c: &SpectralField,
    family: OperatorFamily,
    spec: &RieszSpec,
    grid: &TorusGrid,
    ladder: &[f64],
    p: f64,
    opts: &StrongMeanOptions,
) -> Result<f64> {
    if !(1.0..=2.0).contains(&p) {
        return Err(Error::invalid(format!("p must lie in [1, 2], got {p}")));
    }
    let points: Vec<Vec<f64>> = (0..grid.len()).map(|i| grid.coords(i)).collect();
    let sup = sup_strong_mean(c, family, spec, &points, ladder, opts)?;
    let num = weak_lp_quasinorm(&GridFunction::from_real(*grid, sup)?, p)?;
    let f = synthesize(c, grid)?;
    let den = lp_norm(&f, p)?;
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(num / den)
}

/// One density certificate: `|E cap [0, T_{j_{m+1}}]| >= (1 - 1/m) T_{j_{m+1}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub m: usize,
    pub t_next: f64,
    pub measure: f64,
    pub required: f64,
}

/// A finite union of sample-grid intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct DensitySet {
    /// Disjoint sorted half-open intervals `[a, b)`.
    pub intervals: Vec<(f64, f64)>,
    /// `(m, j_m, T_{j_m})`.
    pub subsequence: Vec<(usize, usize, f64)>,
    pub certificates: Vec<Certificate>,
    pub t_max: f64,
    /// Max and min of `|E cap [0,T]| / T` over the upper half of the ladder.
    pub density_limsup: f64,
    pub density_liminf: f64,
}

impl DensitySet {
    pub fn measure_up_to(&self, t: f64) -> f64 {
        self.intervals
            .iter()
            .map(|&(a, b)| (b.min(t) - a).max(0.0))
            .sum()
    }
}

/// Builds the density set `E = [0, T_{j_1}] cup U_m (E_m cap [T_{j_m}, T_{j_{m+1}}])`,
/// `E_m = {g <= 1/m}`, from samples `g[i]` on `[i h, (i+1) h)`.
///
/// `j_m` is the first ladder index after `j_{m-1}` from which on every
/// ladder entry satisfies the Chebyshev condition `m^{q+1} int_0^T g^q < T`.
pub fn almost_convergence_set(g: &[f64], h: f64, q: f64, ladder: &[f64]) -> Result<DensitySet> {
    validate(q, ladder)?;
    if !(h > 0.0) {
        return Err(Error::invalid("sample step must be positive"));
    }
    if g.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::invalid("g must be nonnegative"));
    }
    let total = g.len();
    let t_max = total as f64 * h;
    let ends: Vec<usize> = ladder.iter().map(|&t| (t / h).round() as usize).collect();
    if ends[0] == 0 || *ends.last().unwrap() > total {
        return Err(Error::invalid("ladder must lie inside the sampled range"));
    }
    // running integral of g^q in sample units
    let mut prefix = vec![0.0; total + 1];
    for i in 0..total {
        prefix[i + 1] = prefix[i] + g[i].powf(q);
    }
    let condition = |m: usize, j: usize| (m as f64).powf(q + 1.0) * prefix[ends[j]] < ends[j] as f64;
    let nl = ladder.len();
    let mut sub: Vec<(usize, usize)> = Vec::new();
    let mut from = 0;
    let mut m = 1;
    loop {
        // ok_from[j]: the condition holds for all j' >= j
        let mut found = None;
        let mut tail_ok = true;
        let mut candidate = nl;
        for j in (from..nl).rev() {
            tail_ok &= condition(m, j);
            if tail_ok {
                candidate = j;
            } else {
                break;
            }
        }
        if candidate < nl {
            found = Some(candidate);
        }
        match found {
            Some(j) => {
                sub.push((m, j));
                from = j + 1;
                m += 1;
                if from >= nl {
                    break;
                }
            }
            None => break,
        }
    }
    if sub.is_empty() {
        return Err(Error::NotStronglyNull(format!(
            "no ladder entry up to T = {} has strong mean below 1",
            ladder[nl - 1]
        )));
    }
    let mut member = vec![false; total];
    let first_end = ends[sub[0].1];
    member[..first_end].iter_mut().for_each(|v| *v = true);
    for (k, &(m, j)) in sub.iter().enumerate() {
        let lo = ends[j];
        let hi = sub.get(k + 1).map_or(total, |&(_, jn)| ends[jn]);
        let thr = 1.0 / m as f64;
        for i in lo..hi {
            member[i] = g[i] <= thr;
        }
    }
    let mut count = vec![0usize; total + 1];
    for i in 0..total {
        count[i + 1] = count[i] + member[i] as usize;
    }
    let mut certificates = Vec::new();
    for w in sub.windows(2) {
        let (m, _) = w[0];
        let n_next = ends[w[1].1];
        let c = count[n_next];
        // exact integer form of c h >= (1 - 1/m) n h
        if c * m < (m - 1) * n_next {
            return Err(Error::tolerance(
                "density certificate",
                format!("m = {m}: {c} of {n_next} samples"),
            ));
        }
        certificates.push(Certificate {
            m,
            t_next: n_next as f64 * h,
            measure: c as f64 * h,
            required: (1.0 - 1.0 / m as f64) * n_next as f64 * h,
        });
    }
    let mut intervals = Vec::new();
    let mut i = 0;
    while i < total {
        if member[i] {
            let s = i;
            while i < total && member[i] {
                i += 1;
            }
            intervals.push((s as f64 * h, i as f64 * h));
        } else {
            i += 1;
        }
    }
    let tail: Vec<f64> = ends[nl / 2..]
        .iter()
        .map(|&n| count[n] as f64 / n as f64)
        .collect();
    Ok(DensitySet {
        intervals,
        subsequence: sub.iter().map(|&(m, j)| (m, j, ladder[j])).collect(),
        certificates,
        t_max,
        density_limsup: tail.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        density_liminf: tail.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_and_one() {
        let ladder: Vec<f64> = (1..=8).map(|k| 2f64.powi(k)).collect();
        let h = 1.0 / 64.0;
        let n = 256 * 64;
        let e = almost_convergence_set(&vec![0.0; n], h, 2.0, &ladder).unwrap();
        assert_eq!(e.intervals, vec![(0.0, 256.0)]);
        assert_eq!(e.density_liminf, 1.0);
        let err = almost_convergence_set(&vec![1.0; n], h, 2.0, &ladder).unwrap_err();
        assert!(matches!(err, Error::NotStronglyNull(_)));
    }
}
