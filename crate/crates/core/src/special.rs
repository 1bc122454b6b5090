//! Special functions.

use std::f64::consts::{FRAC_PI_4, PI};

/// Switch point between the power series and the Hankel asymptotic
/// expansion. Below it the largest series term stays under ~3e4, above it
/// the smallest asymptotic term is below 1e-12.
const SERIES_LIMIT: f64 = 14.0;

/// Bessel function of the first kind, order zero.
///
/// Absolute error is below 1e-10 on `[0, 1e3]`.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x < SERIES_LIMIT {
        j0_series(x)
    } else {
        j0_asymptotic(x)
    }
}

fn j0_series(x: f64) -> f64 {
    // sum_k (-1)^k (x/2)^{2k} / (k!)^2
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= -q / (k * k);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) && k > q.sqrt() {
            break;
        }
        k += 1.0;
    }
    sum
}

fn j0_asymptotic(x: f64) -> f64 {
    // J0(x) = sqrt(2/(pi x)) (P cos(x - pi/4) - Q sin(x - pi/4)),
    // a_k = prod_{j=1..k} (2j-1)^2 / (j 8x); P = sum (-1)^m a_{2m}, Q = -sum (-1)^m a_{2m+1}.
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0f64;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        let next = a * odd * odd / (k as f64 * 8.0 * x);
        if next.abs() >= prev {
            break;
        }
        prev = next.abs();
        a = next;
        match k % 4 {
            1 => q -= a,
            2 => p -= a,
            3 => q += a,
            _ => p += a,
        }
        if a.abs() < 1e-17 {
            break;
        }
    }
    let phase = x - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * phase.cos() - q * phase.sin())
}
