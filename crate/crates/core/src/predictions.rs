//! Closed-form constants and asymptotic coefficients compared against sweeps.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::fermion::binary_entropy;
use crate::grid::{Boundary, Region};
use crate::quad::{adaptive, GaussLegendre};
use crate::schrodinger::Potential;
use crate::spectral::phase_space_volume;

/// Volume of the unit ball in `R^n`, `pi^{n/2} / Γ(n/2 + 1)`.
pub fn c_ball(n: usize) -> f64 {
    PI.powf(0.5 * n as f64) / gamma(0.5 * n as f64 + 1.0)
}

/// Weight `f` multiplying the indicator of the region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Observable {
    Constant { value: f64 },
    /// `offset + slope · x`
    Linear { slope: [f64; 2], offset: f64 },
    /// `amplitude · exp(-|x - center|^2 / width^2)`
    Gaussian {
        center: [f64; 2],
        width: f64,
        amplitude: f64,
    },
}

impl Default for Observable {
    fn default() -> Self {
        Observable::Constant { value: 1.0 }
    }
}

impl Observable {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let y = [x[0], x.get(1).copied().unwrap_or(0.0)];
        match self {
            Observable::Constant { value } => *value,
            Observable::Linear { slope, offset } => offset + slope[0] * y[0] + slope[1] * y[1],
            Observable::Gaussian {
                center,
                width,
                amplitude,
            } => {
                let r2 = (y[0] - center[0]).powi(2) + (y[1] - center[1]).powi(2);
                amplitude * (-r2 / (width * width)).exp()
            }
        }
    }
}

/// Minimum number of boundary panels used for 2D coefficients.
pub const MIN_BOUNDARY_PANELS: usize = 256;
const BULK_TOLERANCE: f64 = 1e-6;

/// `C_{Ω,f} = (c_{n-1} / 2π^2) ∫_{∂Ω} (mu - V)_+^{(n-1)/2} f^2 dx̂`.
pub fn variance_coefficient(
    region: &Region,
    potential: &Potential,
    mu: f64,
    f: &Observable,
) -> Result<f64> {
    variance_coefficient_with(region, potential, mu, f, MIN_BOUNDARY_PANELS)
}

/// As [`variance_coefficient`] with an explicit panel count per boundary piece.
pub fn variance_coefficient_with(
    region: &Region,
    potential: &Potential,
    mu: f64,
    f: &Observable,
    panels: usize,
) -> Result<f64> {
    let dim = region.dim();
    potential.validate(dim)?;
    let prefactor = c_ball(dim - 1) / (2.0 * PI * PI);
    let limit = mu - BULK_TOLERANCE;
    let exponent = 0.5 * (dim as f64 - 1.0);
    let mut max_v = f64::NEG_INFINITY;
    let integral = match region.boundary() {
        Boundary::Points(points) => points
            .iter()
            .map(|&x| {
                let v = potential.eval(&[x], 1);
                max_v = max_v.max(v);
                f.eval(&[x]).powi(2)
            })
            .sum::<f64>(),
        Boundary::Curves(pieces) => {
            let gl = GaussLegendre::new(8);
            let mut total = 0.0;
            for piece in &pieces {
                for t in [0.0, 1.0] {
                    max_v = max_v.max(potential.eval(&piece.at(t).0, 2));
                }
                total += gl.composite(0.0, 1.0, panels.max(MIN_BOUNDARY_PANELS), |t| {
                    let (x, speed) = piece.at(t);
                    let v = potential.eval(&x, 2);
                    max_v = max_v.max(v);
                    (mu - v).max(0.0).powf(exponent) * f.eval(&x).powi(2) * speed
                });
            }
            total
        }
    };
    if max_v >= limit {
        return Err(Error::RegionNotInBulk { max_v, limit });
    }
    Ok(prefactor * integral)
}

/// `(2πr)^{n-1} (mu - v(r))^{(n-1)/2} / (π^2 Γ(n))`; zero on the droplet edge.
pub fn disk_variance_coefficient(n: usize, r: f64, v_of_r: f64, mu: f64) -> Result<f64> {
    if n == 0 || n > 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    if !(r > 0.0) {
        return Err(Error::invalid(format!("radius must be positive, got {r}")));
    }
    if v_of_r > mu {
        return Err(Error::OutsideBulk { r, v_of_r, mu });
    }
    let m = (n - 1) as f64;
    Ok((2.0 * PI * r).powf(m) * (mu - v_of_r).powf(0.5 * m) / (PI * PI * gamma(n as f64)))
}

/// `∫_0^1 g(λ) / (λ(1-λ)) dλ` after the substitution `λ = u^2 (3 - 2u)`.
pub fn widom_integral<G: Fn(f64) -> f64>(g: G) -> Result<f64> {
    for end in [0.0, 1.0] {
        let value = g(end);
        if !value.is_finite() || value.abs() > 1e-12 {
            return Err(Error::NonIntegrable(format!("g({end}) = {value} does not vanish")));
        }
    }
    // dλ = 6u(1-u) du, λ(1-λ) = u^2 (3-2u) (1-u)^2 (1+2u)
    let integrand = |u: f64| {
        let lambda = u * u * (3.0 - 2.0 * u);
        6.0 * g(lambda) / (u * (1.0 - u) * (3.0 - 2.0 * u) * (1.0 + 2.0 * u))
    };
    let half = |a: f64, b: f64| {
        adaptive(&integrand, a, b, 1e-12, 1e-12).map_err(|e| Error::NonIntegrable(e.to_string()))
    };
    let left = half(0.0, 0.5)?;
    let right = half(0.5, 1.0)?;
    let error = left.error + right.error;
    if error >= 1e-8 {
        return Err(Error::NonIntegrable(format!("error estimate {error:.3e}")));
    }
    Ok(left.value + right.value)
}

/// Conjectured limit `2 C_Ω ∫_0^1 g(λ) / (λ(1-λ)) dλ`.
pub fn widom_limit<G: Fn(f64) -> f64>(g: G, c_omega: f64) -> Result<f64> {
    Ok(2.0 * c_omega * widom_integral(g)?)
}

/// Limit of entropy / variance, `π^2 / 3`, the same in every dimension.
pub fn entropy_variance_target() -> f64 {
    PI * PI / 3.0
}

/// Everything a sweep is compared against for one region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub dim: usize,
    /// `c_0 .. c_3`.
    pub c_ball: [f64; 4],
    pub variance_coefficient: f64,
    pub phase_space_volume: f64,
    /// Conjectured limit for `g(λ) = λ(1-λ)`.
    pub widom_variance: f64,
    /// Conjectured limit for the binary entropy.
    pub widom_entropy: f64,
    /// Disk coefficient when the region is a centered disk in a radial potential.
    pub disk_coefficient: Option<f64>,
    pub entropy_variance_target: f64,
}

pub fn prediction_set(
    region: &Region,
    potential: &Potential,
    mu: f64,
    f: &Observable,
) -> Result<PredictionSet> {
    let dim = region.dim();
    let c = variance_coefficient(region, potential, mu, f)?;
    let disk_coefficient = match (region, potential.radial_exponent()) {
        (Region::Disk { center, radius }, Some(_)) if *center == [0.0, 0.0] => Some(
            disk_variance_coefficient(dim, *radius, potential.eval(&[*radius, 0.0], 2), mu)?,
        ),
        _ => None,
    };
    Ok(PredictionSet {
        dim,
        c_ball: [c_ball(0), c_ball(1), c_ball(2), c_ball(3)],
        variance_coefficient: c,
        phase_space_volume: phase_space_volume(potential, dim, mu)?,
        widom_variance: widom_limit(|l| l * (1.0 - l), c)?,
        widom_entropy: widom_limit(binary_entropy, c)?,
        disk_coefficient,
        entropy_variance_target: entropy_variance_target(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volumes() {
        assert!((c_ball(0) - 1.0).abs() < 1e-12);
        assert!((c_ball(1) - 2.0).abs() < 1e-12);
        assert!((c_ball(2) - PI).abs() < 1e-12);
        assert!((c_ball(3) - 4.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn duplication_identity() {
        for n in 1..=3usize {
            let lhs = c_ball(n - 1) * c_ball(n);
            let rhs = 2.0 * (2.0 * PI).powi(n as i32 - 1) / gamma(n as f64 + 1.0);
            assert!((lhs - rhs).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn one_dimensional_law() {
        let iv = Region::interval(-0.5, 0.5).unwrap();
        let one = Observable::default();
        let c2 = variance_coefficient(&iv, &Potential::Harmonic, 1.0, &one).unwrap();
        let c4 = variance_coefficient(&iv, &Potential::Power { q: 4.0 }, 1.0, &one).unwrap();
        assert!((c2 - 0.101_321_183_642_337_8).abs() < 1e-12);
        assert_eq!(c2, c4);
        let zero = Observable::Constant { value: 0.0 };
        assert_eq!(variance_coefficient(&iv, &Potential::Harmonic, 1.0, &zero).unwrap(), 0.0);
        let edge = Region::interval(-1.0, 0.2).unwrap();
        assert!(matches!(
            variance_coefficient(&edge, &Potential::Harmonic, 1.0, &one),
            Err(Error::RegionNotInBulk { .. })
        ));
    }

    #[test]
    fn disk_coefficients() {
        for r in [0.1, 0.5, 2.0] {
            assert!((disk_variance_coefficient(1, r, 0.3, 1.0).unwrap() - 1.0 / (PI * PI)).abs() < 1e-15);
        }
        assert_eq!(disk_variance_coefficient(2, 1.0, 1.0, 1.0).unwrap(), 0.0);
        assert!(matches!(
            disk_variance_coefficient(2, 1.1, 1.21, 1.0),
            Err(Error::OutsideBulk { .. })
        ));
        let closed = disk_variance_coefficient(2, 0.6, 0.36, 1.0).unwrap();
        assert!((closed - 0.96 / PI).abs() < 1e-14);
        let disk = Region::disk([0.0, 0.0], 0.6).unwrap();
        let quadrature =
            variance_coefficient(&disk, &Potential::Harmonic, 1.0, &Observable::default()).unwrap();
        assert!((quadrature - closed).abs() < 1e-9);
        for r in [0.2, 0.45, 0.8] {
            let disk = Region::disk([0.0, 0.0], r).unwrap();
            let c = variance_coefficient(&disk, &Potential::Harmonic, 1.0, &Observable::default())
                .unwrap();
            assert!((c - 2.0 * r * (1.0 - r * r).sqrt() / PI).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_quadrature_converges() {
        let regions = [
            Region::disk([0.1, -0.2], 0.5).unwrap(),
            Region::rectangle([-0.4, -0.3], [0.2, 0.5]).unwrap(),
            Region::annulus([0.0, 0.0], 0.2, 0.6).unwrap(),
        ];
        let f = Observable::Gaussian {
            center: [0.1, 0.0],
            width: 0.7,
            amplitude: 1.3,
        };
        for region in &regions {
            let a = variance_coefficient_with(region, &Potential::Power { q: 3.0 }, 1.0, &f, 256)
                .unwrap();
            let b = variance_coefficient_with(region, &Potential::Power { q: 3.0 }, 1.0, &f, 512)
                .unwrap();
            assert!((a - b).abs() < 1e-9, "{region:?}");
        }
    }

    #[test]
    fn widom_integrals() {
        let variance = widom_integral(|l| l * (1.0 - l)).unwrap();
        assert!((variance - 1.0).abs() < 1e-12);
        assert!((widom_limit(|l| l * (1.0 - l), 0.3).unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(widom_limit(|_| 0.0, 0.3).unwrap(), 0.0);
        let entropy = widom_integral(binary_entropy).unwrap();
        assert!((entropy - entropy_variance_target()).abs() < 1e-9, "{entropy}");
        assert!((entropy_variance_target() - 3.289_868_133_696_453).abs() < 1e-14);
        assert!(matches!(widom_integral(|_| 1.0), Err(Error::NonIntegrable(_))));
        // sqrt(λ(1-λ)) is integrable against 1/(λ(1-λ)) to π
        let root = widom_integral(|l: f64| (l * (1.0 - l)).sqrt()).unwrap();
        assert!((root - PI).abs() < 1e-8, "{root}");
    }

    #[test]
    fn prediction_set_for_bulk_disk() {
        let disk = Region::disk([0.0, 0.0], 0.6).unwrap();
        let set = prediction_set(&disk, &Potential::Harmonic, 1.0, &Observable::default()).unwrap();
        assert!((set.disk_coefficient.unwrap() - set.variance_coefficient).abs() < 1e-9);
        assert!((set.widom_variance - 2.0 * set.variance_coefficient).abs() < 1e-12);
        assert!((set.widom_entropy / set.widom_variance - PI * PI / 3.0).abs() < 1e-8);
        assert_eq!(set.entropy_variance_target, PI * PI / 3.0);
    }
}
