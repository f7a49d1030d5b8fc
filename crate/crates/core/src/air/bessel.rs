//! The modified Bessel function `I0` in log form, without overflow.

use std::f64::consts::PI;

const SERIES_LIMIT: f64 = 30.0;

/// `ln I0(z) - z`, which stays accurate where `ln I0(z)` and `z` nearly cancel.
pub(crate) fn ln_i0_scaled(z: f64) -> f64 {
    let z = z.abs();
    if z < SERIES_LIMIT {
        ln_i0_series(z) - z
    } else {
        ln_i0_scaled_asymptotic(z)
    }
}

fn ln_i0_series(z: f64) -> f64 {
    // sum_k (z^2/4)^k / (k!)^2
    let q = 0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > sum * 1e-17 {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum.ln()
}

fn ln_i0_scaled_asymptotic(z: f64) -> f64 {
    // I0(z) e^{-z} = sum_k ((2k-1)!!)^2 / (k! (8z)^k) / sqrt(2 pi z)
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=12 {
        let kk = k as f64;
        term *= (2.0 * kk - 1.0).powi(2) / (kk * 8.0 * z);
        sum += term;
    }
    -0.5 * (2.0 * PI * z).ln() + sum.ln()
}
