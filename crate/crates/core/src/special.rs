//! Bessel functions of the first kind for the real orders used by the ball
//! Fourier transform.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

/// Switch from the ascending series to the Hankel expansion.
pub const SERIES_LIMIT: f64 = 12.0;

/// `J_nu(x)` for `nu >= 0` and `x >= 0`.
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    assert!(nu >= 0.0 && x >= 0.0, "bessel_j needs nu >= 0 and x >= 0");
    if x <= SERIES_LIMIT {
        ascending_series(nu, x)
    } else {
        hankel_asymptotic(nu, x)
    }
}

fn ascending_series(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * x;
    let q = -half * half;
    let mut term = half.powf(nu) / gamma(nu + 1.0);
    let mut sum = term;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * (kf + nu));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs().max(1e-300) && kf > half {
            break;
        }
    }
    sum
}

// J_nu(x) = sqrt(2/(pi x)) (P cos w - Q sin w), w = x - nu pi/2 - pi/4.
fn hankel_asymptotic(nu: f64, x: f64) -> f64 {
    let mu4 = 4.0 * nu * nu;
    let eight_x = 8.0 * x;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..40 {
        let odd = (2 * k - 1) as f64;
        term *= (mu4 - odd * odd) / (k as f64 * eight_x);
        if term.abs() > prev {
            break;
        }
        prev = term.abs();
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term == 0.0 || term.abs() < 1e-17 {
            break;
        }
    }
    let w = x - 0.5 * nu * PI - 0.25 * PI;
    (2.0 / (PI * x)).sqrt() * (p * w.cos() - q * w.sin())
}
