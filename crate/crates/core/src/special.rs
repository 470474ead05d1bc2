//! Special functions.
#![allow(clippy::excessive_precision)]

use core::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
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

/// Euler's Gamma function (Lanczos approximation, g = 7, 9 terms).
///
/// Uses the reflection formula below 1/2. Returns NaN at the poles
/// `0, -1, -2, ...`.
pub fn gamma(x: f64) -> f64 {
    if x <= 0.0 && libm::trunc(x) == x {
        return f64::NAN;
    }
    if x < 0.5 {
        return PI / (libm::sin(PI * x) * gamma(1.0 - x));
    }
    let z = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    // Split the power so large arguments do not overflow early.
    let half = libm::pow(t, 0.5 * (z + 0.5));
    libm::sqrt(2.0 * PI) * half * (half * libm::exp(-t)) * acc
}
