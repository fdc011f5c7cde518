//! Special functions: Gamma, Bessel `J0` and the isotropic kernels `Y_n`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function via the Lanczos approximation (g = 7, 9 terms), with the
/// reflection formula for arguments below 1/2.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut a = LANCZOS_COEF[0];
        let t = x + LANCZOS_G + 0.5;
        for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

/// Natural log of `|Gamma(x)|` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        return gamma(x).abs().ln();
    }
    let x = x - 1.0;
    let mut a = LANCZOS_COEF[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// `m!` as a float.
pub fn factorial(m: usize) -> f64 {
    (1..=m).fold(1.0, |acc, k| acc * k as f64)
}

/// Bessel function of the first kind of order zero.
///
/// Power series below 12, Hankel asymptotic expansion above.
pub fn bessel_j0(u: f64) -> f64 {
    let u = u.abs();
    if u < 12.0 {
        let q = -0.25 * u * u;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            term *= q / (k * k);
            sum += term;
            if term.abs() < 1e-17 * sum.abs().max(1e-300) && k > 2.0 {
                break;
            }
            k += 1.0;
            if k > 200.0 {
                break;
            }
        }
        sum
    } else {
        // P and Q series in 1/u with a_k = prod_{j<=k} (2j-1)^2 / (k! 8^k).
        let mut p = 0.0;
        let mut q = 0.0;
        let mut a = 1.0;
        let mut last = f64::INFINITY;
        for k in 0..80 {
            if k > 0 {
                let odd = (2 * k - 1) as f64;
                a *= -odd * odd / (k as f64 * 8.0 * u);
            }
            if a.abs() > last {
                break;
            }
            last = a.abs();
            match k % 4 {
                0 => p += a.abs(),
                1 => q += -a.abs(),
                2 => p += -a.abs(),
                _ => q += a.abs(),
            }
            if a.abs() < 1e-17 {
                break;
            }
        }
        // J0 = sqrt(2/(pi u)) (P cos w - Q sin w), w = u - pi/4, with
        // P = sum (-1)^k a_{2k} u^{-2k}, Q = sum (-1)^k a_{2k+1} u^{-2k-1}
        // and a_k(0) = (-1)^k prod (2j-1)^2 / (k! 8^k).
        let w = u - 0.25 * PI;
        (2.0 / (PI * u)).sqrt() * (p * w.cos() - q * w.sin())
    }
}

/// The isotropic kernel `Y_n(u) = 2^{(n-2)/2} Gamma(n/2) J_{(n-2)/2}(u) u^{(2-n)/2}`.
pub fn y_n(n: usize, u: f64) -> Result<f64> {
    if u < 0.0 || u.is_nan() {
        return Err(Error::Domain(format!("Y_n requires u >= 0, got {u}")));
    }
    match n {
        1 => Ok(u.cos()),
        2 => Ok(bessel_j0(u)),
        3 => {
            if u < 1e-4 {
                let u2 = u * u;
                Ok(1.0 - u2 / 6.0 + u2 * u2 / 120.0)
            } else {
                Ok(u.sin() / u)
            }
        }
        _ => Err(Error::UnsupportedDimension(n)),
    }
}

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Surface area of the unit sphere in `R^n`.
pub fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma(n as f64 / 2.0)
}
