use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use summlab::quad::GaussRule;
use summlab::sharpness::{predicted_slope, riesz_on_plate, tuned_interval, PlateFunction, RadialKernel};
use summlab::Complex64;

#[test]
fn transform_peak_and_zeros() {
    let plate = PlateFunction::new(2, 64.0, 0.125).unwrap();
    let m = plate.modulation();
    assert!((plate.transform(&[0.0, m]).re - plate.volume()).abs() < 1e-15);
    for k in [1.0, -2.0, 3.0] {
        let xi1 = 64.0 / (2.0 * 0.125) * k;
        assert!(plate.transform(&[xi1, m]).norm() < 1e-15 * plate.volume());
    }
}

#[test]
fn transform_matches_quadrature_at_random_frequencies() {
    let plate = PlateFunction::new(2, 32.0, 0.125).unwrap();
    let (a, b) = plate.half_widths();
    let rule = GaussRule::legendre(30);
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    for _ in 0..50 {
        let xi = [rng.gen_range(-300.0..300.0), rng.gen_range(-20.0..30.0)];
        let mut acc = Complex64::new(0.0, 0.0);
        for (y1, w1) in rule.mapped(-a, a) {
            for k in 0..8 {
                let lo = -b + b * k as f64 / 4.0;
                for (y2, w2) in rule.mapped(lo, lo + b / 4.0) {
                    let ph = -2.0 * PI * (xi[0] * y1 + xi[1] * y2);
                    acc += plate.eval(&[y1, y2]) * Complex64::from_polar(w1 * w2, ph);
                }
            }
        }
        assert!((acc - plate.transform(&xi)).norm() <= 1e-8, "{xi:?}");
    }
}

#[test]
fn tuned_t_beats_large_t() {
    let (t_big, eps, lambda) = (64.0, 0.125, 0.5);
    let plate = PlateFunction::new(2, t_big, eps).unwrap();
    let kernel = RadialKernel::new(lambda, 4.0 * eps * t_big * 1.5).unwrap();
    // points of the x_2 > 0 half of the sampling region
    for x in [[0.0, 0.75], [0.004, 0.6], [0.01, 0.9]] {
        let (lo, hi) = tuned_interval(&x, t_big, eps);
        let t = 0.5 * (lo + hi);
        let tuned = riesz_on_plate(&plate, &kernel, &x, t).unwrap().norm();
        assert!(tuned / (t.powf(0.5 - lambda) * t_big.powf(-1.5)) > 0.0);
        // the y_2 phase mismatch is a sinc of width sqrt(T) / eps, wider than
        // eps T at this T, so only a modest gap is guaranteed
        let off = riesz_on_plate(&plate, &kernel, &x, 4.0 * eps * t_big).unwrap().norm();
        assert!(tuned > off, "{x:?}: {tuned:e} vs {off:e}");
    }
    assert!(riesz_on_plate(&plate, &kernel, &[0.0, 0.75], -8.0).is_err());
}

#[test]
fn slope_formula_triples() {
    assert_eq!(predicted_slope(2, 1.0, 2.0, 0.5), -0.25);
    assert_eq!(predicted_slope(2, 1.0, 2.0, 0.25), 0.0);
    assert_eq!(predicted_slope(2, 1.0, 2.0, 0.0), 0.25);
}
