//! Grids, coefficient boxes, FFT synthesis and analysis, grid norms and the
//! `SLAB` binary container.
//!
//! Index order is row-major everywhere: the last axis varies fastest.
//! A coefficient box with half-widths `L_i` stores modes `-L_i..=L_i`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::par;
use crate::{Error, Result};

/// Default cap on the number of grid nodes.
pub const DEFAULT_NODE_BUDGET: usize = 1 << 24;

/// A uniform periodic grid with `n` points per axis on `[0, period)^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusGrid {
    pub d: usize,
    pub n: usize,
    pub period: f64,
}

impl TorusGrid {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        Self::with_period(d, n, 1.0, DEFAULT_NODE_BUDGET)
    }

    pub fn with_period(d: usize, n: usize, period: f64, budget: usize) -> Result<Self> {
        if d < 1 {
            return Err(Error::invalid("grid dimension must be >= 1"));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::invalid(format!("points per axis must be a power of two >= 4, got {n}")));
        }
        if !(period > 0.0) {
            return Err(Error::invalid("grid period must be positive"));
        }
        let total = n.checked_pow(d as u32).unwrap_or(usize::MAX);
        if total > budget {
            return Err(Error::BudgetExceeded(format!("grid has {total} nodes, budget {budget}")));
        }
        Ok(TorusGrid { d, n, period })
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.d as i32)
    }

    /// Integer multi-index of a flat node index.
    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut m = vec![0; self.d];
        for a in (0..self.d).rev() {
            m[a] = idx % self.n;
            idx /= self.n;
        }
        m
    }

    pub fn flat_index(&self, m: &[usize]) -> usize {
        m.iter().fold(0, |acc, &v| acc * self.n + v)
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        let h = self.spacing();
        self.multi_index(idx).into_iter().map(|k| k as f64 * h).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldMode {
    /// Fourier coefficients at integer lattice points.
    Torus,
    /// Samples of a continuous transform at `m / period`, periodized on a box
    /// of side `period`.
    Rd { period: f64 },
}

/// A box of complex Fourier data.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub mode: FieldMode,
    pub half: Vec<usize>,
    pub coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(mode: FieldMode, half: Vec<usize>) -> Self {
        let n: usize = half.iter().map(|l| 2 * l + 1).product();
        SpectralField {
            mode,
            half,
            coeffs: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Fills the box from a function of the lattice index.
    pub fn from_fn<F: Fn(&[i64]) -> Complex64 + Sync>(mode: FieldMode, half: Vec<usize>, f: F) -> Self {
        let mut out = Self::zeros(mode, half);
        let coeffs = par::map_range(out.coeffs.len(), |i| f(&out.lattice_point(i)));
        out.coeffs = coeffs;
        out
    }

    pub fn dim(&self) -> usize {
        self.half.len()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn max_half(&self) -> usize {
        self.half.iter().copied().max().unwrap_or(0)
    }

    /// Frequency spacing: 1 on the torus, `1 / period` in `R^d` mode.
    pub fn spacing(&self) -> f64 {
        match self.mode {
            FieldMode::Torus => 1.0,
            FieldMode::Rd { period } => 1.0 / period,
        }
    }

    pub fn lattice_point(&self, mut idx: usize) -> Vec<i64> {
        let d = self.dim();
        let mut m = vec![0i64; d];
        for a in (0..d).rev() {
            let w = 2 * self.half[a] + 1;
            m[a] = (idx % w) as i64 - self.half[a] as i64;
            idx /= w;
        }
        m
    }

    pub fn index_of(&self, m: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for (a, &v) in m.iter().enumerate() {
            let l = self.half[a] as i64;
            if v < -l || v > l {
                return None;
            }
            idx = idx * (2 * self.half[a] + 1) + (v + l) as usize;
        }
        Some(idx)
    }

    pub fn frequency(&self, idx: usize) -> Vec<f64> {
        let h = self.spacing();
        self.lattice_point(idx).into_iter().map(|m| m as f64 * h).collect()
    }

    /// Node-wise product with a real multiplier evaluated at the frequency.
    pub fn multiply<F: Fn(&[f64]) -> f64 + Sync>(&self, m: F) -> Self {
        let coeffs = par::map_range(self.len(), |i| {
            let c = self.coeffs[i];
            if c == Complex64::new(0.0, 0.0) {
                c
            } else {
                c * m(&self.frequency(i))
            }
        });
        SpectralField {
            mode: self.mode,
            half: self.half.clone(),
            coeffs,
        }
    }

    /// The natural synthesis grid with `n` points per axis.
    pub fn grid(&self, n: usize) -> Result<TorusGrid> {
        let period = match self.mode {
            FieldMode::Torus => 1.0,
            FieldMode::Rd { period } => period,
        };
        TorusGrid::with_period(self.dim(), n, period, DEFAULT_NODE_BUDGET)
    }

    pub fn linear_combination(&self, a: Complex64, other: &SpectralField, b: Complex64) -> Result<Self> {
        if self.half != other.half || self.mode != other.mode {
            return Err(Error::invalid("fields have different shapes"));
        }
        Ok(SpectralField {
            mode: self.mode,
            half: self.half.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| a * x + b * y).collect(),
        })
    }
}

/// Complex samples on a [`TorusGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: TorusGrid,
    pub values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: TorusGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "grid function has {} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_real(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, values.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
    }

    pub fn abs(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }
}

fn check_resolution(n: usize, half: &[usize]) -> Result<()> {
    let l = half.iter().copied().max().unwrap_or(0);
    if n < 2 * l + 2 {
        return Err(Error::Aliasing { points: n, mode_box: l });
    }
    Ok(())
}

/// In-place unnormalized FFT along every axis of an `n^d` array.
/// `inverse` uses the `e^{+2 pi i}` kernel.
pub(crate) fn fft_nd(data: &mut [Complex64], d: usize, n: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let total = data.len();
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        if stride == 1 {
            par::for_each_chunk_mut(data, n, |_, line| fft.process(line));
            continue;
        }
        let lines = total / n;
        let block = stride * n;
        let src: &[Complex64] = data;
        let done = par::map_range(lines, |li| {
            let outer = li / stride;
            let inner = li % stride;
            let base = outer * block + inner;
            let mut line: Vec<Complex64> = (0..n).map(|k| src[base + k * stride]).collect();
            fft.process(&mut line);
            line
        });
        for (li, line) in done.into_iter().enumerate() {
            let base = (li / stride) * block + li % stride;
            for (k, v) in line.into_iter().enumerate() {
                data[base + k * stride] = v;
            }
        }
    }
}

/// `g(x) = sum_l c_l e^{2 pi i <x, xi_l>}`, scaled by the cell weight
/// `period^{-d}` in `R^d` mode.
pub fn synthesize(c: &SpectralField, grid: &TorusGrid) -> Result<GridFunction> {
    let d = c.dim();
    if grid.d != d {
        return Err(Error::invalid("grid and field dimensions differ"));
    }
    check_resolution(grid.n, &c.half)?;
    let weight = match c.mode {
        FieldMode::Torus => 1.0,
        FieldMode::Rd { period } => {
            if (grid.period - period).abs() > 1e-12 * period {
                return Err(Error::invalid("grid period must match the field period"));
            }
            period.powi(-(d as i32))
        }
    };
    let n = grid.n;
    let mut data = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (i, &v) in c.coeffs.iter().enumerate() {
        let m = c.lattice_point(i);
        let idx = m.iter().fold(0usize, |acc, &v| acc * n + v.rem_euclid(n as i64) as usize);
        data[idx] = v * weight;
    }
    fft_nd(&mut data, d, n, true);
    GridFunction::new(*grid, data)
}

/// Trapezoid-exact coefficients `N^{-d} sum_x g(x) e^{-2 pi i <x, l>}` on
/// the box `half`. In `R^d` mode the result is rescaled by `period^d`.
pub fn analyze(g: &GridFunction, mode: FieldMode, half: Vec<usize>) -> Result<SpectralField> {
    let d = g.grid.d;
    if half.len() != d {
        return Err(Error::invalid("box dimension differs from grid dimension"));
    }
    check_resolution(g.grid.n, &half)?;
    let n = g.grid.n;
    let mut data = g.values.clone();
    fft_nd(&mut data, d, n, false);
    let scale = match mode {
        FieldMode::Torus => 1.0,
        FieldMode::Rd { period } => period.powi(d as i32),
    } / g.grid.len() as f64;
    let mut out = SpectralField::zeros(mode, half);
    for i in 0..out.len() {
        let m = out.lattice_point(i);
        let idx = m.iter().fold(0usize, |acc, &v| acc * n + v.rem_euclid(n as i64) as usize);
        out.coeffs[i] = data[idx] * scale;
    }
    Ok(out)
}

/// Riemann-sum `L^p` norm; `p = f64::INFINITY` gives the max.
pub fn lp_norm(g: &GridFunction, p: f64) -> Result<f64> {
    lp_norm_values(&g.abs(), g.grid.cell_volume(), p)
}

pub fn lp_norm_values(abs: &[f64], cell: f64, p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::invalid(format!("p must be positive, got {p}")));
    }
    if p.is_infinite() {
        return Ok(par::max_abs(abs));
    }
    let terms: Vec<f64> = abs.iter().map(|v| v.powf(p)).collect();
    Ok((par::pairwise_sum(&terms) * cell).powf(1.0 / p))
}

/// Weighted `L^p` norm `(sum w |v|^p)^{1/p}`.
pub fn lp_norm_weighted(abs: &[f64], weights: &[f64], p: f64) -> Result<f64> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::invalid(format!("p must be positive and finite, got {p}")));
    }
    let terms: Vec<f64> = abs.iter().zip(weights).map(|(v, w)| w * v.powf(p)).collect();
    Ok(par::pairwise_sum(&terms).powf(1.0 / p))
}

/// Exact `sup_a a |{|g| > a}|^{1/p}` for the grid measure.
pub fn weak_lp_quasinorm(g: &GridFunction, p: f64) -> Result<f64> {
    let abs = g.abs();
    let w = vec![g.grid.cell_volume(); abs.len()];
    weak_lp_weighted(&abs, &w, p)
}

/// Weak quasinorm for a discrete measure with point masses `weights`.
pub fn weak_lp_weighted(abs: &[f64], weights: &[f64], p: f64) -> Result<f64> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::invalid(format!("p must be positive and finite, got {p}")));
    }
    if abs.len() != weights.len() {
        return Err(Error::invalid("value and weight counts differ"));
    }
    let mut order: Vec<usize> = (0..abs.len()).collect();
    order.sort_by(|&a, &b| abs[b].total_cmp(&abs[a]).then(a.cmp(&b)));
    let mut mass = 0.0;
    let mut best = 0.0f64;
    for &i in &order {
        mass += weights[i];
        best = best.max(abs[i] * mass.powf(1.0 / p));
    }
    Ok(best)
}

pub const CONTAINER_MAGIC: &[u8; 4] = b"SLAB";
pub const CONTAINER_VERSION: u32 = 1;

/// Contents of a `SLAB` container.
#[derive(Debug, Clone, PartialEq)]
pub enum Container {
    Field(SpectralField),
    Grid(GridFunction),
}

/// Layout (little-endian): magic, version `u32`, mode `u8` (0 torus field,
/// 1 `R^d` field, 2 grid function), `d` as `u8`, `d` axis lengths as `u64`,
/// one `f64` scale (field period or grid period), then `(re, im)` pairs of
/// `f64` in row-major order.
pub fn encode(c: &Container) -> Vec<u8> {
    let (mode, dims, scale, values): (u8, Vec<u64>, f64, &[Complex64]) = match c {
        Container::Field(f) => {
            let dims = f.half.iter().map(|&l| 2 * l as u64 + 1).collect();
            match f.mode {
                FieldMode::Torus => (0, dims, 1.0, &f.coeffs),
                FieldMode::Rd { period } => (1, dims, period, &f.coeffs),
            }
        }
        Container::Grid(g) => (2, vec![g.grid.n as u64; g.grid.d], g.grid.period, &g.values),
    };
    let mut out = Vec::with_capacity(18 + 8 * dims.len() + 16 * values.len());
    out.extend_from_slice(CONTAINER_MAGIC);
    out.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
    out.push(mode);
    out.push(dims.len() as u8);
    for d in &dims {
        out.extend_from_slice(&d.to_le_bytes());
    }
    out.extend_from_slice(&scale.to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::CorruptContainer(format!(
                "truncated at byte {} (needed {n} more)",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode(buf: &[u8]) -> Result<Container> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4)? != CONTAINER_MAGIC {
        return Err(Error::CorruptContainer("bad magic".into()));
    }
    let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
    if version != CONTAINER_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            expected: CONTAINER_VERSION,
        });
    }
    let mode = r.take(1)?[0];
    let d = r.take(1)?[0] as usize;
    if d == 0 {
        return Err(Error::CorruptContainer("zero dimension".into()));
    }
    let mut dims = Vec::with_capacity(d);
    for _ in 0..d {
        dims.push(r.u64()? as usize);
    }
    let scale = r.f64()?;
    let count = dims
        .iter()
        .try_fold(1usize, |a, &b| a.checked_mul(b))
        .ok_or_else(|| Error::CorruptContainer("dimension overflow".into()))?;
    if count.checked_mul(16) != Some(buf.len() - r.pos) {
        return Err(Error::CorruptContainer(format!(
            "payload has {} bytes, header implies {} values",
            buf.len() - r.pos,
            count
        )));
    }
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        let re = r.f64()?;
        let im = r.f64()?;
        values.push(Complex64::new(re, im));
    }
    match mode {
        0 | 1 => {
            let mut half = Vec::with_capacity(d);
            for &w in &dims {
                if w % 2 == 0 {
                    return Err(Error::CorruptContainer("even coefficient box width".into()));
                }
                half.push(w / 2);
            }
            let mode = if mode == 0 {
                FieldMode::Torus
            } else {
                FieldMode::Rd { period: scale }
            };
            Ok(Container::Field(SpectralField {
                mode,
                half,
                coeffs: values,
            }))
        }
        2 => {
            let n = dims[0];
            if dims.iter().any(|&v| v != n) {
                return Err(Error::CorruptContainer("grid axes differ".into()));
            }
            let grid = TorusGrid::with_period(d, n, scale, usize::MAX)
                .map_err(|e| Error::CorruptContainer(e.to_string()))?;
            Ok(Container::Grid(GridFunction { grid, values }))
        }
        m => Err(Error::CorruptContainer(format!("unknown mode byte {m}"))),
    }
}

/// `e^{2 pi i x}` helper.
pub(crate) fn cis(x: f64) -> Complex64 {
    let a = 2.0 * PI * x;
    Complex64::new(a.cos(), a.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_single_mode() {
        let g = TorusGrid::new(1, 8).unwrap();
        let f = GridFunction::from_real(g, vec![1.0; 8]).unwrap();
        let c = analyze(&f, FieldMode::Torus, vec![3]).unwrap();
        for i in 0..c.len() {
            let want = if c.lattice_point(i)[0] == 0 { 1.0 } else { 0.0 };
            assert!((c.coeffs[i] - want).norm() < 1e-15);
        }
        let g = TorusGrid::new(1, 16).unwrap();
        let vals = (0..16).map(|k| cis(3.0 * k as f64 / 16.0)).collect();
        let c = analyze(&GridFunction::new(g, vals).unwrap(), FieldMode::Torus, vec![4]).unwrap();
        assert!((c.coeffs[c.index_of(&[3]).unwrap()] - 1.0).norm() < 1e-14);
    }

    #[test]
    fn aliasing_rejected() {
        let g = TorusGrid::new(1, 8).unwrap();
        let c = SpectralField::zeros(FieldMode::Torus, vec![4]);
        assert!(matches!(synthesize(&c, &g), Err(Error::Aliasing { .. })));
        assert!(TorusGrid::new(2, 6).is_err());
    }

    #[test]
    fn norm_examples() {
        let g = TorusGrid::new(1, 4).unwrap();
        let half = GridFunction::from_real(g, vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        assert!((lp_norm(&half, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(lp_norm(&half, 0.0).is_err());
        let w = weak_lp_weighted(&[4.0, 2.0, 1.0], &[1.0; 3], 1.0).unwrap();
        assert_eq!(w, 4.0);
        assert!((weak_lp_quasinorm(&half, 2.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn container_rejects_garbage() {
        let f = SpectralField::from_fn(FieldMode::Rd { period: 8.0 }, vec![2, 1], |m| {
            Complex64::new(m[0] as f64, m[1] as f64 * 0.5)
        });
        let bytes = encode(&Container::Field(f.clone()));
        assert_eq!(decode(&bytes).unwrap(), Container::Field(f));
        assert!(matches!(decode(&bytes[..bytes.len() - 3]), Err(Error::CorruptContainer(_))));
        let mut bumped = bytes.clone();
        bumped[4] = 2;
        assert!(matches!(decode(&bumped), Err(Error::UnsupportedVersion { found: 2, .. })));
        let mut bad = bytes;
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
    }
}
