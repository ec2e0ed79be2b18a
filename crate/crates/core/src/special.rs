//! Special functions needed by the quadrature and kernel code.

use std::f64::consts::PI;

/// Natural logarithm of the Gamma function (Lanczos, g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).abs().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Gamma function for positive arguments.
pub fn gamma(x: f64) -> f64 {
    ln_gamma(x).exp()
}

/// Bessel function of the first kind of order zero.
///
/// Power series for small arguments, the Poisson integral (trapezoid rule,
/// exponentially convergent) in the middle range, Hankel expansion beyond.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x >= 8.0 && x < 32.0 {
        let n = (0.75 * x) as usize + 40;
        let mut s = 0.0;
        for i in 0..n {
            let th = std::f64::consts::FRAC_PI_2 * (i as f64 + 0.5) / n as f64;
            s += (x * th.sin()).cos();
        }
        return s / n as f64;
    }
    if x < 8.0 {
        let q = -0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            term *= q / (k * k);
            sum += term;
            if term.abs() < 1e-17 * sum.abs().max(1e-300) && k > 2.0 * x.max(1.0) {
                break;
            }
            k += 1.0;
            if k > 300.0 {
                break;
            }
        }
        sum
    } else {
        j0_asymptotic(x)
    }
}

fn j0_asymptotic(x: f64) -> f64 {
    // P and Q series of the Hankel expansion for nu = 0 (mu = 0).
    let z8 = 8.0 * x;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut k = 1usize;
    // term_k = prod_{i=1..k} (mu - (2i-1)^2) / (i * 8x)
    loop {
        let odd = (2 * k - 1) as f64;
        term *= -(odd * odd) / (k as f64 * z8);
        if k % 2 == 1 {
            q += if (k / 2) % 2 == 0 { term } else { -term };
        } else {
            p += if (k / 2) % 2 == 1 { -term } else { term };
        }
        if term.abs() < 1e-17 || k > 60 {
            break;
        }
        k += 1;
    }
    let chi = x - 0.25 * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn j0_integral(x: f64) -> f64 {
        // (1/pi) int_0^pi cos(x sin th) dth, periodic trapezoid is spectrally exact
        let n = 4 * (x as usize) + 200;
        let mut s = 0.0;
        for i in 0..n {
            let th = PI * (i as f64 + 0.5) / n as f64;
            s += (x * th.sin()).cos();
        }
        s / n as f64
    }

    #[test]
    fn j0_matches_integral_representation() {
        for &x in &[0.0, 0.3, 1.0, 2.404_825_557_695_773, 5.0, 12.0, 19.9, 20.1, 35.0, 100.0, 1234.5] {
            let a = bessel_j0(x);
            let b = j0_integral(x);
            assert!((a - b).abs() < 1e-12, "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn gamma_known_values() {
        assert!((gamma(5.0) - 24.0).abs() < 1e-10);
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-12);
        assert!((gamma(1.5) - 0.5 * PI.sqrt()).abs() < 1e-12);
    }
}
