//! Dyadic Whitney decomposition of a grid open set in the closed box
//! `[0, 1]^d`, in the sup metric.
//!
//! The complement is represented by the centers of the cells outside the
//! mask. Cube coordinates are integers in half-cell units, so that every
//! distance and side length below is exact.

use std::collections::VecDeque;

use crate::{Error, Result};

/// A boolean mask on `n^d` cells (row-major), `true` meaning "in the set".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMask {
    pub d: usize,
    pub n: usize,
    pub cells: Vec<bool>,
}

impl GridMask {
    pub fn new(d: usize, n: usize, cells: Vec<bool>) -> Result<Self> {
        if !n.is_power_of_two() || n.checked_pow(d as u32) != Some(cells.len()) {
            return Err(Error::invalid("mask needs n^d cells with n a power of two"));
        }
        Ok(GridMask { d, n, cells })
    }

    pub fn from_fn<F: Fn(&[usize]) -> bool>(d: usize, n: usize, f: F) -> Self {
        let cells = (0..n.pow(d as u32)).map(|i| f(&unflatten(i, d, n))).collect();
        GridMask { d, n, cells }
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }
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

/// A dyadic cube `prod [lo_i, lo_i + side]` in half-cell units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WhitneyCube {
    pub lo: Vec<i64>,
    pub side: i64,
    /// Sup-metric distance to the complement, half-cell units.
    pub dist: i64,
}

impl WhitneyCube {
    /// Lower corner in unit-box coordinates for a mask with `n` cells per axis.
    pub fn corner(&self, n: usize) -> Vec<f64> {
        self.lo.iter().map(|&v| v as f64 / (2 * n) as f64).collect()
    }

    pub fn side_length(&self, n: usize) -> f64 {
        self.side as f64 / (2 * n) as f64
    }

    pub fn volume(&self, n: usize) -> f64 {
        self.side_length(n).powi(self.lo.len() as i32)
    }

    /// The sup-metric diameter equals the side in half-cell units.
    pub fn diam_half_units(&self) -> i64 {
        self.side
    }

    /// Whether the cube covers the cell `c`.
    pub fn contains_cell(&self, c: &[usize]) -> bool {
        self.lo
            .iter()
            .zip(c)
            .all(|(&lo, &ci)| 2 * ci as i64 >= lo && 2 * ci as i64 + 2 <= lo + self.side)
    }
}

/// Chebyshev distance (in cells) from every cell to the nearest complement cell.
fn chebyshev_transform(mask: &GridMask) -> Vec<u32> {
    let d = mask.d;
    let n = mask.n;
    let mut dist = vec![u32::MAX; mask.cells.len()];
    let mut queue = VecDeque::new();
    for (i, &m) in mask.cells.iter().enumerate() {
        if !m {
            dist[i] = 0;
            queue.push_back(i);
        }
    }
    let offsets: Vec<Vec<i64>> = (0..3usize.pow(d as u32))
        .map(|k| unflatten(k, d, 3).into_iter().map(|v| v as i64 - 1).collect())
        .filter(|o: &Vec<i64>| o.iter().any(|&v| v != 0))
        .collect();
    while let Some(i) = queue.pop_front() {
        let c = unflatten(i, d, n);
        for o in &offsets {
            let mut nb = Vec::with_capacity(d);
            let mut ok = true;
            for a in 0..d {
                let v = c[a] as i64 + o[a];
                if v < 0 || v >= n as i64 {
                    ok = false;
                    break;
                }
                nb.push(v as usize);
            }
            if !ok {
                continue;
            }
            let k = flatten(&nb, n);
            if dist[k] == u32::MAX {
                dist[k] = dist[i] + 1;
                queue.push_back(k);
            }
        }
    }
    dist
}

/// Sup-metric distance, in half-cell units, from the half-cell box
/// `prod [lo_i, lo_i + side]` to the cell center of `f`.
fn box_to_center(lo: &[i64], side: i64, f: &[usize]) -> i64 {
    lo.iter()
        .zip(f)
        .map(|(&l, &fi)| {
            let c = 2 * fi as i64 + 1;
            (l - c).max(c - (l + side)).max(0)
        })
        .max()
        .unwrap_or(0)
}

struct Ctx<'a> {
    mask: &'a GridMask,
    dist: Vec<u32>,
    out: Vec<WhitneyCube>,
}

impl Ctx<'_> {
    fn cells_of(&self, lo: &[i64], side: i64) -> Vec<usize> {
        let d = self.mask.d;
        let s = (side / 2) as usize;
        let base: Vec<usize> = lo.iter().map(|&v| (v / 2) as usize).collect();
        (0..s.pow(d as u32))
            .map(|k| {
                let off = unflatten(k, d, s);
                let c: Vec<usize> = base.iter().zip(off).map(|(b, o)| b + o).collect();
                flatten(&c, self.mask.n)
            })
            .collect()
    }

    fn half_cell_distance(&self, lo: &[i64]) -> i64 {
        let d = self.mask.d;
        let n = self.mask.n as i64;
        let c: Vec<i64> = lo.iter().map(|&v| v / 2).collect();
        let r = self.dist[flatten(&c.iter().map(|&v| v as usize).collect::<Vec<_>>(), self.mask.n)] as i64 + 1;
        let w = (2 * r + 1) as usize;
        let mut best = i64::MAX;
        for k in 0..w.pow(d as u32) {
            let off = unflatten(k, d, w);
            let mut f = Vec::with_capacity(d);
            let mut ok = true;
            for a in 0..d {
                let v = c[a] + off[a] as i64 - r;
                if v < 0 || v >= n {
                    ok = false;
                    break;
                }
                f.push(v as usize);
            }
            if ok && !self.mask.cells[flatten(&f, self.mask.n)] {
                best = best.min(box_to_center(lo, 1, &f));
            }
        }
        best
    }

    fn process(&mut self, lo: Vec<i64>, side: i64) {
        let d = self.mask.d;
        if side == 1 {
            let dist = self.half_cell_distance(&lo);
            self.out.push(WhitneyCube { lo, side, dist });
            return;
        }
        let cells = self.cells_of(&lo, side);
        let inside = cells.iter().filter(|&&c| self.mask.cells[c]).count();
        if inside == 0 {
            return;
        }
        if inside == cells.len() {
            let dmin = cells.iter().map(|&c| self.dist[c]).min().unwrap() as i64;
            let dist = 2 * dmin - 1;
            if side <= dist {
                self.out.push(WhitneyCube { lo, side, dist });
                return;
            }
        }
        let h = side / 2;
        for k in 0..(1usize << d) {
            let child: Vec<i64> = lo
                .iter()
                .enumerate()
                .map(|(a, &v)| v + if (k >> (d - 1 - a)) & 1 == 1 { h } else { 0 })
                .collect();
            self.process(child, h);
        }
    }
}

/// Disjoint dyadic cubes covering the mask with
/// `diam(W) <= dist(W, complement) <= 4 diam(W)`, down to half a cell.
pub fn whitney_decompose(mask: &GridMask) -> Result<Vec<WhitneyCube>> {
    let inside = mask.count();
    if inside == 0 {
        return Err(Error::invalid("mask is empty"));
    }
    if inside == mask.cells.len() {
        return Err(Error::invalid("mask covers the whole grid, the complement is empty"));
    }
    let mut ctx = Ctx {
        mask,
        dist: chebyshev_transform(mask),
        out: Vec::new(),
    };
    ctx.process(vec![0; mask.d], 2 * mask.n as i64);
    for w in &ctx.out {
        if !(w.side <= w.dist && w.dist <= 4 * w.side) {
            return Err(Error::tolerance(
                "whitney contract",
                format!("cube {:?} side {} has distance {}", w.lo, w.side, w.dist),
            ));
        }
    }
    Ok(ctx.out)
}

/// Sup-metric distance from a cube to the complement by exhaustive search.
pub fn bruteforce_distance(mask: &GridMask, cube: &WhitneyCube) -> i64 {
    (0..mask.cells.len())
        .filter(|&i| !mask.cells[i])
        .map(|i| box_to_center(&cube.lo, cube.side, &unflatten(i, mask.d, mask.n)))
        .min()
        .unwrap_or(i64::MAX)
}
