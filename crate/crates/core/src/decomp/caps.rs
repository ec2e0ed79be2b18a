use std::f64::consts::PI;

use crate::distance::{CospherePoint, HomogeneousDistance};
use crate::smooth::tau;
use crate::{Error, Result};

/// Largest number of caps allowed to overlap at a direction.
pub const MAX_OVERLAP: usize = 7;

/// Angular caps of aperture `delta = 2^{-j/2}` on the cosphere.
///
/// Center directions are uniform angles with spacing at most `2 delta`
/// (`d = 2`) or a golden-angle spiral (`d = 3`). Each cap carries the bump
/// `w(theta) = 1 - tau(theta / (1.5 delta))` of the angle to its center
/// direction, and `chi_nu = w_nu / sum w`.
#[derive(Debug, Clone)]
pub struct CapSystem {
    pub j: u32,
    pub d: usize,
    pub delta: f64,
    /// Unit center directions.
    pub dirs: Vec<Vec<f64>>,
    /// Centers on the cosphere with their normals.
    pub centers: Vec<CospherePoint>,
}

fn fibonacci_sphere(n: usize) -> Vec<Vec<f64>> {
    let golden = PI * (1.0 + 5f64.sqrt());
    (0..n)
        .map(|i| {
            let t = i as f64 + 0.5;
            let z = 1.0 - 2.0 * t / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let ph = golden * t;
            vec![r * ph.cos(), r * ph.sin(), z]
        })
        .collect()
}

fn angle(a: &[f64], b: &[f64]) -> f64 {
    let c: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    c.clamp(-1.0, 1.0).acos()
}

impl CapSystem {
    pub fn new(j: u32, rho: &HomogeneousDistance) -> Result<Self> {
        let d = rho.dim();
        let delta = 2f64.powf(-(j as f64) / 2.0);
        let dirs = match d {
            2 => {
                let n = (PI / delta).ceil() as usize;
                (0..n)
                    .map(|k| {
                        let th = 2.0 * PI * k as f64 / n as f64;
                        vec![th.cos(), th.sin()]
                    })
                    .collect::<Vec<_>>()
            }
            3 => {
                // 3.9 points per 2^{-j} of area keeps the covering radius near 1.35 delta
                let n = (3.9 * 2f64.powi(j as i32)).ceil() as usize;
                fibonacci_sphere(n)
            }
            _ => return Err(Error::invalid("cap systems are built for d = 2 and d = 3")),
        };
        let centers = dirs
            .iter()
            .map(|u| rho.to_cosphere(u))
            .collect::<Result<Vec<_>>>()?;
        Ok(CapSystem {
            j,
            d,
            delta,
            dirs,
            centers,
        })
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    fn bump(&self, theta: f64) -> f64 {
        1.0 - tau(theta / (1.5 * self.delta))
    }

    /// Raw bumps `w_nu` that are nonzero at the direction of `xi`.
    pub fn raw_weights(&self, xi: &[f64]) -> Vec<(usize, f64)> {
        let n: f64 = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        let u: Vec<f64> = xi.iter().map(|x| x / n).collect();
        if self.d == 2 {
            let th = u[1].atan2(u[0]).rem_euclid(2.0 * PI);
            return self.raw_weights_angle(th);
        }
        self.dirs
            .iter()
            .enumerate()
            .filter_map(|(k, c)| {
                let w = self.bump(angle(&u, c));
                (w > 0.0).then_some((k, w))
            })
            .collect()
    }

    /// `d = 2` bumps as a function of the polar angle.
    pub fn raw_weights_angle(&self, th: f64) -> Vec<(usize, f64)> {
        let n = self.len();
        let step = 2.0 * PI / n as f64;
        let k0 = (th / step).round() as i64;
        let reach = (1.5 * self.delta / step).ceil() as i64 + 1;
        let mut out = Vec::new();
        for k in (k0 - reach)..=(k0 + reach) {
            let kk = k.rem_euclid(n as i64) as usize;
            if out.iter().any(|&(v, _)| v == kk) {
                continue;
            }
            let diff = (th - kk as f64 * step).rem_euclid(2.0 * PI);
            let diff = diff.min(2.0 * PI - diff);
            let w = self.bump(diff);
            if w > 0.0 {
                out.push((kk, w));
            }
        }
        out.sort_by_key(|p| p.0);
        out
    }

    /// `(nu, chi_nu(xi))` for every cap that is nonzero at `xi`.
    pub fn weights(&self, xi: &[f64]) -> Vec<(usize, f64)> {
        normalize(self.raw_weights(xi))
    }

    pub fn weights_angle(&self, th: f64) -> Vec<(usize, f64)> {
        normalize(self.raw_weights_angle(th))
    }

    pub fn chi(&self, nu: usize, xi: &[f64]) -> f64 {
        self.weights(xi).into_iter().find(|p| p.0 == nu).map_or(0.0, |p| p.1)
    }

    pub fn chi_angle(&self, nu: usize, th: f64) -> f64 {
        self.weights_angle(th).into_iter().find(|p| p.0 == nu).map_or(0.0, |p| p.1)
    }

    /// `2^{-j(d-1)/2} #caps`.
    pub fn count_ratio(&self) -> f64 {
        self.len() as f64 * 2f64.powf(-(self.j as f64) * (self.d as f64 - 1.0) / 2.0)
    }

    /// `2^{j/2} min_{nu != nu'} |xi_nu - xi_nu'|`.
    pub fn separation_constant(&self) -> f64 {
        let pts: Vec<&Vec<f64>> = self.centers.iter().map(|c| &c.point).collect();
        let mut best = f64::INFINITY;
        for a in 0..pts.len() {
            for b in a + 1..pts.len() {
                let d2: f64 = pts[a].iter().zip(pts[b]).map(|(x, y)| (x - y) * (x - y)).sum();
                best = best.min(d2);
            }
        }
        best.sqrt() / self.delta
    }

    /// Angular half-width of a cap's support.
    pub fn support_radius(&self) -> f64 {
        1.5 * self.delta
    }
}

fn normalize(raw: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    let s: f64 = raw.iter().map(|p| p.1).sum();
    if s == 0.0 {
        return Vec::new();
    }
    raw.into_iter().map(|(k, w)| (k, w / s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::{make_builtin, DistanceKind};

    #[test]
    fn partition_of_unity_and_overlap() {
        for d in [2, 3] {
            let rho = make_builtin(DistanceKind::Euclidean, d).unwrap();
            let caps = CapSystem::new(6, &rho).unwrap();
            let dirs = crate::distance::sample_points(d, 200);
            for xi in &dirs {
                let w = caps.weights(xi);
                let s: f64 = w.iter().map(|p| p.1).sum();
                assert!((s - 1.0).abs() < 1e-12);
                assert!(w.len() <= MAX_OVERLAP);
            }
        }
    }
}
