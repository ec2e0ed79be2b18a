//! Closed-form and brute-force checks of the public pipelines.

use std::f64::consts::PI;

use summlab::distance::{make_builtin, DistanceKind};
use summlab::quad::{integrate_right_singular, GaussRule};
use summlab::riesz::{
    maximal_over_t, periodized_coefficients, riesz_mean_rd, riesz_mean_torus, s_mean, subordination_residual,
    transplant, OperatorFamily, RieszSpec,
};
use summlab::sharpness::{riesz_on_plate, PlateFunction, RadialKernel};
use summlab::spectral::{analyze, decode, encode, synthesize, Container, FieldMode, SpectralField, TorusGrid};
use summlab::strong::{almost_convergence_set, strong_mean, StrongMeanOptions};
use summlab::{Complex64, Error};

fn euclid(d: usize) -> summlab::distance::HomogeneousDistance {
    make_builtin(DistanceKind::Euclidean, d).unwrap()
}

fn single_mode(mode: FieldMode, half: Vec<usize>, at: &[i64]) -> SpectralField {
    let mut c = SpectralField::zeros(mode, half);
    let i = c.index_of(at).unwrap();
    c.coeffs[i] = Complex64::new(1.0, 0.0);
    c
}

#[test]
fn constant_mode_is_fixed() {
    let c = single_mode(FieldMode::Torus, vec![3, 3], &[0, 0]);
    for lam in [-0.5, 0.0, 2.0] {
        let spec = RieszSpec::new(lam, euclid(2)).unwrap();
        for t in [0.1, 1.0, 50.0] {
            assert_eq!(riesz_mean_torus(&c, t, &spec).unwrap(), c);
        }
    }
}

#[test]
fn one_dimensional_mode_is_halved() {
    let c = single_mode(FieldMode::Torus, vec![2], &[1]);
    let spec = RieszSpec::new(1.0, euclid(1)).unwrap();
    let out = riesz_mean_torus(&c, 2.0, &spec).unwrap();
    assert!((out.coeffs[c.index_of(&[1]).unwrap()] - Complex64::new(0.5, 0.0)).norm() < 1e-15);
}

#[test]
fn edge_mean_kills_low_modes_and_keeps_the_edge() {
    let spec = RieszSpec::new(1.0, euclid(2)).unwrap();
    let c = SpectralField::from_fn(FieldMode::Torus, vec![4, 4], |l| Complex64::new(1.0 + l[0] as f64, l[1] as f64));
    // every mode of the box has |l| <= 4 sqrt 2 < 0.8 t
    assert!(s_mean(&c, 8.0, &spec).unwrap().coeffs.iter().all(|v| v.norm() == 0.0));
    let c = single_mode(FieldMode::Torus, vec![20], &[19]);
    let spec = RieszSpec::new(1.0, euclid(1)).unwrap();
    let out = s_mean(&c, 20.0, &spec).unwrap();
    assert!((out.coeffs[c.index_of(&[19]).unwrap()].re - 0.05).abs() < 1e-14);
}

#[test]
fn index_zero_reproduces_bandlimited_integrals() {
    let spec = RieszSpec::new(0.0, euclid(2)).unwrap();
    let mode = FieldMode::Rd { period: 8.0 };
    let c = SpectralField::from_fn(mode, vec![6, 6], |l| Complex64::new((-(l[0] * l[0] + l[1] * l[1]) as f64).exp(), 0.3));
    // largest frequency is 6 sqrt 2 / 8 < 1.1
    assert_eq!(riesz_mean_rd(&c, 1.1, &spec).unwrap(), c);
}

#[test]
fn large_t_approaches_the_identity() {
    let spec = RieszSpec::new(0.5, euclid(2)).unwrap();
    let mode = FieldMode::Rd { period: 8.0 };
    let c = SpectralField::from_fn(mode, vec![8, 8], |l| Complex64::new((-((l[0] * l[0] + l[1] * l[1]) as f64) / 8.0).exp(), 0.0));
    let grid = c.grid(32).unwrap();
    let f = synthesize(&c, &grid).unwrap();
    let g = synthesize(&riesz_mean_rd(&c, 1024.0, &spec).unwrap(), &grid).unwrap();
    let err = f.values.iter().zip(&g.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err <= 1e-3, "{err}");
}

#[test]
fn maximal_function_of_a_single_mode() {
    let c = single_mode(FieldMode::Torus, vec![2], &[1]);
    let spec = RieszSpec::new(1.0, euclid(1)).unwrap();
    let grid = TorusGrid::new(1, 8).unwrap();
    let m = maximal_over_t(|t| synthesize(&riesz_mean_torus(&c, t, &spec)?, &grid), &[2.0, 4.0, 8.0]).unwrap();
    for v in &m.values {
        assert!((v.re - 0.875).abs() < 1e-14);
    }
    assert!(maximal_over_t(|t| synthesize(&riesz_mean_torus(&c, t, &spec)?, &grid), &[]).is_err());
}

#[test]
fn subordination_vanishes_beyond_the_cutoff() {
    let spec = RieszSpec::new(1.0, euclid(2)).unwrap();
    let far = vec![vec![0.95, 0.0], vec![0.0, 1.3], vec![0.7, 0.7]];
    assert!(subordination_residual(&spec, 4, 6, &far).unwrap() <= 1e-9);
    let near = vec![vec![0.5, 0.0], vec![1e-9, 0.0]];
    assert!(subordination_residual(&spec, 4, 6, &near).unwrap() <= 1e-6);
    assert!(subordination_residual(&RieszSpec::new(0.0, euclid(2)).unwrap(), 4, 6, &near).is_err());
}

fn gaussian_hat(xi: &[f64]) -> Complex64 {
    Complex64::new((-PI * xi.iter().map(|v| v * v).sum::<f64>()).exp(), 0.0)
}

#[test]
fn transplantation_converges_in_l() {
    let spec = RieszSpec::new(0.5, euclid(1)).unwrap();
    // R_1 f(0) = int_{-1}^1 (1 - |xi|)^{1/2} e^{-pi xi^2} d xi
    let leg = GaussRule::legendre(20);
    let jac = GaussRule::jacobi(20, 0.5, 0.0);
    let exact = 2.0 * integrate_right_singular(&leg, &jac, 0.5, 0.0, 1.0, 0.125, |x| (-PI * x * x).exp());
    let mut prev = f64::INFINITY;
    for l in [8, 16, 32, 64] {
        let v = transplant(gaussian_hat, l, 1.0, &spec, &[vec![0.0]]).unwrap()[0];
        let err = (v.re - exact).abs();
        assert!(err < prev, "L = {l}: {err}");
        prev = err;
    }
    assert!(prev <= 1e-4, "{prev}");
}

#[test]
fn periodization_matches_transform_samples() {
    // f(x) = e^{-pi |x|^2} is its own transform
    let l = 6.0;
    let c = periodized_coefficients(|x| gaussian_hat(x), l, 64, 2, vec![8, 8]).unwrap();
    for i in 0..c.len() {
        let xi = c.frequency(i);
        let want = gaussian_hat(&xi) * l.powi(-2);
        assert!((c.coeffs[i] - want).norm() < 1e-8, "{xi:?}");
    }
}

#[test]
fn strong_mean_of_one_mode() {
    // 1 - m(t) is 1 below t = r and r / t above when lambda = 1
    let spec = RieszSpec::new(1.0, euclid(2)).unwrap();
    let c = single_mode(FieldMode::Torus, vec![4, 4], &[3, 4]);
    let pts = vec![vec![0.1, 0.7], vec![0.5, 0.25]];
    let r = 5.0;
    for t_end in [2.0, 5.0, 17.0, 64.0] {
        let g = strong_mean(&c, OperatorFamily::TorusRiesz, &spec, &pts, t_end, &StrongMeanOptions::default()).unwrap();
        let integral = if t_end <= r { t_end } else { 2.0 * r - r * r / t_end };
        let want = (integral / t_end).sqrt();
        for v in g {
            // trapezoid cells and jittered nodes leave a few 1e-7
            assert!((v - want).abs() < 1e-6 * want, "T = {t_end}: {v} vs {want}");
        }
    }
}

#[test]
fn density_set_edge_cases() {
    let ladder: Vec<f64> = (0..=6).map(|k| 2f64.powi(k)).collect();
    let zero = vec![0.0; 64 * 64];
    let set = almost_convergence_set(&zero, 1.0 / 64.0, 2.0, &ladder).unwrap();
    assert_eq!(set.measure_up_to(64.0), 64.0);
    let one = vec![1.0; 64 * 64];
    assert!(matches!(
        almost_convergence_set(&one, 1.0 / 64.0, 2.0, &ladder),
        Err(Error::NotStronglyNull(_))
    ));
}

#[test]
fn plate_transform_matches_quadrature() {
    let plate = PlateFunction::new(2, 16.0, 0.125).unwrap();
    let (a, b) = plate.half_widths();
    let rule = GaussRule::legendre(40);
    for xi in [[0.0, 2.0], [3.0, -1.5], [40.0, 2.5], [-7.0, 11.0]] {
        let mut acc = Complex64::new(0.0, 0.0);
        for (y1, w1) in rule.mapped(-a, a) {
            for k in 0..8 {
                let lo = -b + 2.0 * b * k as f64 / 8.0;
                for (y2, w2) in rule.mapped(lo, lo + 2.0 * b / 8.0) {
                    acc += plate.eval(&[y1, y2]) * w1 * w2 * Complex64::from_polar(1.0, -2.0 * PI * (xi[0] * y1 + xi[1] * y2));
                }
            }
        }
        assert!((acc - plate.transform(&xi)).norm() < 1e-8 * plate.volume(), "{xi:?}");
    }
}

/// `int (1 - |xi|/t)_+^lambda fhat(xi) e^{2 pi i <x, xi>} d xi` in polar coordinates.
fn plate_mean_polar(plate: &PlateFunction, lambda: f64, x: &[f64], t: f64) -> Complex64 {
    let leg = GaussRule::legendre(24);
    let jac = GaussRule::jacobi(24, lambda, 0.0);
    let n_theta = 512;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..n_theta {
        let th = 2.0 * PI * k as f64 / n_theta as f64;
        let (s, c) = th.sin_cos();
        let part = |f: &dyn Fn(Complex64) -> f64| {
            integrate_right_singular(&leg, &jac, lambda, 0.0, t, t / 16.0, |r| {
                let xi = [r * c, r * s];
                let ph = 2.0 * PI * (x[0] * xi[0] + x[1] * xi[1]);
                f(plate.transform(&xi) * Complex64::from_polar(1.0, ph)) * r
            })
        };
        acc += Complex64::new(part(&|z| z.re), part(&|z| z.im));
    }
    acc * (2.0 * PI / n_theta as f64) * t.powf(-lambda)
}

#[test]
fn space_side_plate_means_match_the_frequency_side() {
    let plate = PlateFunction::new(2, 16.0, 0.125).unwrap();
    for lambda in [0.0, 0.5] {
        let kernel = RadialKernel::new(lambda, 64.0).unwrap();
        for (x, t) in [([0.3, 1.2], 2.5), ([-1.0, 2.0], 3.0), ([0.05, 0.6], 1.7)] {
            let space = riesz_on_plate(&plate, &kernel, &x, t).unwrap();
            let freq = plate_mean_polar(&plate, lambda, &x, t);
            assert!((space - freq).norm() < 1e-6 * freq.norm().max(1e-3 * plate.volume() * t * t), "{x:?} {t}: {space} vs {freq}");
        }
    }
}

#[test]
fn analysis_inverts_synthesis_and_containers_roundtrip() {
    for mode in [FieldMode::Torus, FieldMode::Rd { period: 3.0 }] {
        let c = SpectralField::from_fn(mode, vec![3, 5], |l| Complex64::new(l[0] as f64, (l[1] * l[1]) as f64 - 2.0));
        let grid = c.grid(16).unwrap();
        let g = synthesize(&c, &grid).unwrap();
        let back = analyze(&g, mode, vec![3, 5]).unwrap();
        let err = back.coeffs.iter().zip(&c.coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
        for item in [Container::Field(c.clone()), Container::Grid(g.clone())] {
            let bytes = encode(&item);
            assert_eq!(decode(&bytes).unwrap(), item);
            assert!(matches!(decode(&bytes[..bytes.len() - 1]), Err(Error::CorruptContainer(_))));
            let mut bumped = bytes.clone();
            bumped[4] += 1;
            assert!(matches!(decode(&bumped), Err(Error::UnsupportedVersion { .. })));
        }
    }
}
