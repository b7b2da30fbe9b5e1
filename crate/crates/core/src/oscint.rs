//! Oscillatory integrals: the Fourier transform of the unit ball and
//! stationary-phase expansions for quadratic phases.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Debug;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use crate::special::bessel_j;

/// Smallest argument accepted by [`ball_ft_asymptotic`].
pub const ASYMPTOTIC_MIN: f64 = 5.0;

fn check_ball_dim(n: usize) -> Result<()> {
    if (1..=3).contains(&n) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(n))
    }
}

/// `(2π)^{-n/2} ∫_{|x|<1} e^{-i x·ξ} dx = J_{n/2}(|ξ|) / |ξ|^{n/2}`.
pub fn ball_indicator_ft(n: usize, xi_norm: f64) -> Result<f64> {
    check_ball_dim(n)?;
    if !(xi_norm >= 0.0) {
        return Err(Error::invalid(format!("|xi| must be non-negative, got {xi_norm}")));
    }
    let nu = 0.5 * n as f64;
    if xi_norm < 1e-8 {
        return Ok(2f64.powf(-nu) / gamma(nu + 1.0));
    }
    Ok(bessel_j(nu, xi_norm) / xi_norm.powf(nu))
}

/// Leading oscillatory term `2 cos(|ξ| - (n+1)π/4) / (sqrt(2π) |ξ|^{(n+1)/2})`.
pub fn ball_ft_asymptotic(n: usize, xi_norm: f64) -> Result<f64> {
    check_ball_dim(n)?;
    if !(xi_norm >= ASYMPTOTIC_MIN) {
        return Err(Error::ArgumentTooSmall {
            xi: xi_norm,
            min: ASYMPTOTIC_MIN,
        });
    }
    let phase = xi_norm - (n as f64 + 1.0) * PI / 4.0;
    Ok(2.0 * phase.cos() / ((2.0 * PI).sqrt() * xi_norm.powf(0.5 * (n as f64 + 1.0))))
}

/// Real amplitude supported in `[-R, R]^d`.
pub trait Amplitude: Send + Sync + Debug {
    fn value(&self, x: &[f64]) -> f64;
    fn support_radius(&self) -> f64;
    /// `∂_x^p ∂_y^q a(0)` when known in closed form.
    fn exact_derivative(&self, _orders: [usize; 2]) -> Option<f64> {
        None
    }
}

/// `m`-th derivative of `exp(-t^2/δ^2)` at 0.
fn gaussian_derivative(m: usize, delta: f64) -> f64 {
    if m % 2 == 1 {
        return 0.0;
    }
    let k = m / 2;
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let factorial = |j: usize| (1..=j).map(|i| i as f64).product::<f64>();
    sign * factorial(2 * k) / (factorial(k) * delta.powi(2 * k as i32))
}

/// `exp(-|x|^2/δ^2)`, cut off at `cutoff · δ`.
#[derive(Debug, Clone)]
pub struct GaussianAmplitude {
    pub delta: f64,
    pub cutoff: f64,
    pub exact: bool,
}

impl GaussianAmplitude {
    pub fn new(delta: f64) -> Self {
        Self {
            delta,
            cutoff: 6.0,
            exact: false,
        }
    }

    /// Supplies closed-form derivatives at the origin.
    pub fn with_exact_derivatives(mut self) -> Self {
        self.exact = true;
        self
    }
}

impl Amplitude for GaussianAmplitude {
    fn value(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|c| c * c).sum();
        if r2.sqrt() > self.support_radius() {
            0.0
        } else {
            (-r2 / (self.delta * self.delta)).exp()
        }
    }

    fn support_radius(&self) -> f64 {
        self.cutoff * self.delta
    }

    fn exact_derivative(&self, orders: [usize; 2]) -> Option<f64> {
        self.exact.then(|| {
            gaussian_derivative(orders[0], self.delta) * gaussian_derivative(orders[1], self.delta)
        })
    }
}

/// `x_0 exp(-|x|^2/δ^2)`, odd in the first coordinate.
#[derive(Debug, Clone)]
pub struct OddGaussianAmplitude {
    pub delta: f64,
}

impl Amplitude for OddGaussianAmplitude {
    fn value(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|c| c * c).sum();
        if r2.sqrt() > self.support_radius() {
            0.0
        } else {
            x[0] * (-r2 / (self.delta * self.delta)).exp()
        }
    }

    fn support_radius(&self) -> f64 {
        6.0 * self.delta
    }
}

/// `exp(1 - 1/(1 - t^2))` for `|t| < 1`, zero otherwise.
pub fn smooth_bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

/// Smooth bump in `|x|` supported on `inner <= |x| <= outer`; vanishes near
/// the stationary point.
#[derive(Debug, Clone)]
pub struct AnnularBump {
    pub inner: f64,
    pub outer: f64,
}

impl Amplitude for AnnularBump {
    fn value(&self, x: &[f64]) -> f64 {
        let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        let mid = 0.5 * (self.inner + self.outer);
        let half = 0.5 * (self.outer - self.inner);
        smooth_bump((r - mid) / half)
    }

    fn support_radius(&self) -> f64 {
        self.outer
    }

    fn exact_derivative(&self, _orders: [usize; 2]) -> Option<f64> {
        (self.inner > 0.0).then_some(0.0)
    }
}

/// `p(x_0) · bump(|x| / radius)` with `p(t) = Σ coeffs[k] t^k`.
#[derive(Debug, Clone)]
pub struct PolynomialBump {
    pub coeffs: Vec<f64>,
    pub radius: f64,
}

impl Amplitude for PolynomialBump {
    fn value(&self, x: &[f64]) -> f64 {
        let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        let p = self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x[0] + c);
        p * smooth_bump(r / self.radius)
    }

    fn support_radius(&self) -> f64 {
        self.radius
    }
}

/// Identically zero amplitude.
#[derive(Debug, Clone)]
pub struct ZeroAmplitude;

impl Amplitude for ZeroAmplitude {
    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn support_radius(&self) -> f64 {
        1.0
    }

    fn exact_derivative(&self, _orders: [usize; 2]) -> Option<f64> {
        Some(0.0)
    }
}

/// `∫ exp(i x·Hx / (2 hbar)) a(x) dx` with a nondegenerate symmetric `H`.
#[derive(Debug, Clone)]
pub struct StationaryPhaseProblem {
    dim: usize,
    hessian: [[f64; 2]; 2],
    amplitude: Arc<dyn Amplitude>,
    delta: f64,
    hbar: f64,
}

impl StationaryPhaseProblem {
    /// `hessian` is row-major `dim × dim`.
    pub fn new(
        dim: usize,
        hessian: &[f64],
        amplitude: Arc<dyn Amplitude>,
        delta: f64,
        hbar: f64,
    ) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if hessian.len() != dim * dim {
            return Err(Error::invalid("hessian must have dim^2 entries"));
        }
        let mut h = [[0.0; 2]; 2];
        for i in 0..dim {
            for j in 0..dim {
                h[i][j] = hessian[i * dim + j];
            }
        }
        if dim == 2 && (h[0][1] - h[1][0]).abs() > 1e-12 * (h[0][1].abs() + 1.0) {
            return Err(Error::invalid("hessian must be symmetric"));
        }
        let det = if dim == 1 {
            h[0][0]
        } else {
            h[0][0] * h[1][1] - h[0][1] * h[1][0]
        };
        if !(det.abs() >= 1e-8) {
            return Err(Error::DegeneratePhase { det: det.abs() });
        }
        if !(hbar > 0.0 && hbar <= 1.0) {
            return Err(Error::invalid(format!("hbar must lie in (0, 1], got {hbar}")));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::invalid(format!("delta must lie in (0, 1], got {delta}")));
        }
        if delta * delta < hbar * (1.0 - 1e-12) {
            return Err(Error::invalid(format!(
                "amplitude scale delta = {delta} is below sqrt(hbar) = {}",
                hbar.sqrt()
            )));
        }
        Ok(Self {
            dim,
            hessian: h,
            amplitude,
            delta,
            hbar,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn amplitude(&self) -> &dyn Amplitude {
        self.amplitude.as_ref()
    }

    fn determinant(&self) -> f64 {
        let h = &self.hessian;
        if self.dim == 1 {
            h[0][0]
        } else {
            h[0][0] * h[1][1] - h[0][1] * h[1][0]
        }
    }

    fn inverse(&self) -> [[f64; 2]; 2] {
        let h = &self.hessian;
        let det = self.determinant();
        if self.dim == 1 {
            [[1.0 / h[0][0], 0.0], [0.0, 0.0]]
        } else {
            [[h[1][1] / det, -h[0][1] / det], [-h[1][0] / det, h[0][0] / det]]
        }
    }

    /// Number of negative eigenvalues of `H`.
    pub fn morse_index(&self) -> usize {
        let h = &self.hessian;
        if self.dim == 1 {
            usize::from(h[0][0] < 0.0)
        } else {
            let det = self.determinant();
            let trace = h[0][0] + h[1][1];
            if det < 0.0 {
                1
            } else if trace < 0.0 {
                2
            } else {
                0
            }
        }
    }

    fn phase(&self, x: &[f64]) -> f64 {
        let h = &self.hessian;
        if self.dim == 1 {
            0.5 * h[0][0] * x[0] * x[0]
        } else {
            0.5 * (h[0][0] * x[0] * x[0] + 2.0 * h[0][1] * x[0] * x[1] + h[1][1] * x[1] * x[1])
        }
    }

    /// `∂_x^p ∂_y^q a(0)`, exact when available, else by 4th-order central
    /// differences at step `δ/64`.
    pub fn derivative_at_origin(&self, orders: [usize; 2]) -> f64 {
        if let Some(v) = self.amplitude.exact_derivative(orders) {
            return v;
        }
        let step = self.delta / 64.0;
        let wx = central_weights(orders[0]);
        if self.dim == 1 {
            return wx
                .iter()
                .map(|&(j, w)| w * self.amplitude.value(&[j as f64 * step]))
                .sum::<f64>()
                / step.powi(orders[0] as i32);
        }
        let wy = central_weights(orders[1]);
        let mut acc = 0.0;
        for &(i, a) in &wx {
            for &(j, b) in &wy {
                acc += a * b * self.amplitude.value(&[i as f64 * step, j as f64 * step]);
            }
        }
        acc / step.powi((orders[0] + orders[1]) as i32)
    }
}

/// Fornberg weights for the `order`-th derivative at 0 on integer nodes.
pub fn fornberg_weights(nodes: &[f64], order: usize) -> Vec<f64> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0];
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i];
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Offsets and weights of the 4th-order centered stencil for `order`.
fn central_weights(order: usize) -> Vec<(i64, f64)> {
    if order == 0 {
        return vec![(0, 1.0)];
    }
    let half = (order as i64 + 1) / 2 + 1;
    let offsets: Vec<i64> = (-half..=half).collect();
    let nodes: Vec<f64> = offsets.iter().map(|&j| j as f64).collect();
    offsets.into_iter().zip(fornberg_weights(&nodes, order)).collect()
}

/// `(2πi hbar)^{-d/2}`-normalized expansion
/// `i^{-α} |det H|^{-1/2} Σ_{k<ℓ} hbar^k ((i/2) ∇·H^{-1}∇)^k a(0) / k!`.
pub fn stationary_phase_expand(problem: &StationaryPhaseProblem, order: usize) -> Result<Complex64> {
    if !(1..=3).contains(&order) {
        return Err(Error::invalid(format!("expansion order must be 1, 2 or 3, got {order}")));
    }
    let inv = problem.inverse();
    // ∇·H^{-1}∇ as a polynomial in (∂_x, ∂_y)
    let generator: Vec<((usize, usize), f64)> = if problem.dim == 1 {
        vec![((2, 0), inv[0][0])]
    } else {
        vec![((2, 0), inv[0][0]), ((1, 1), inv[0][1] + inv[1][0]), ((0, 2), inv[1][1])]
    };
    let mut power: BTreeMap<(usize, usize), f64> = BTreeMap::from([((0, 0), 1.0)]);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut factorial = 1.0;
    for k in 0..order {
        if k > 0 {
            let mut next = BTreeMap::new();
            for (&(p, q), &c) in &power {
                for &((dp, dq), g) in &generator {
                    *next.entry((p + dp, q + dq)).or_insert(0.0) += c * g;
                }
            }
            power = next;
            factorial *= k as f64;
        }
        let applied: f64 = power
            .iter()
            .map(|(&(p, q), &c)| c * problem.derivative_at_origin([p, q]))
            .sum();
        let coefficient = Complex64::new(0.0, 0.5).powu(k as u32) * problem.hbar.powi(k as i32) / factorial;
        sum += coefficient * applied;
    }
    let morse = Complex64::new(0.0, -1.0).powu(problem.morse_index() as u32);
    Ok(morse * sum / problem.determinant().abs().sqrt())
}

/// `(2πi hbar)^{d/2}`.
pub fn normalization(dim: usize, hbar: f64) -> Complex64 {
    (Complex64::new(0.0, 2.0 * PI * hbar)).powf(0.5 * dim as f64)
}

/// Expansion scaled back to the raw integral.
pub fn integral_estimate(problem: &StationaryPhaseProblem, order: usize) -> Result<Complex64> {
    Ok(normalization(problem.dim, problem.hbar) * stationary_phase_expand(problem, order)?)
}

/// Default quadrature sample budget.
pub const DEFAULT_BUDGET: usize = 1_000_000;
const GL_ORDER: usize = 16;

/// Brute-force `∫ exp(i x·Hx/(2 hbar)) a(x) dx` by composite Gauss–Legendre
/// with at least 16 nodes per local oscillation period, doubled until two
/// successive estimates agree to `1e-9 · (2R)^d`.
pub fn brute_force_oscillatory(problem: &StationaryPhaseProblem) -> Result<Complex64> {
    brute_force_with_budget(problem, DEFAULT_BUDGET)
}

pub fn brute_force_with_budget(problem: &StationaryPhaseProblem, budget: usize) -> Result<Complex64> {
    let radius = problem.amplitude.support_radius();
    let gl = GaussLegendre::new(GL_ORDER);
    let tolerance = 1e-9 * (2.0 * radius).powi(problem.dim as i32);
    let mut axes: Vec<Vec<f64>> = (0..problem.dim)
        .map(|axis| axis_breakpoints(problem, axis, radius))
        .collect();
    let samples = |axes: &[Vec<f64>]| -> usize {
        axes.iter().map(|b| (b.len() - 1) * GL_ORDER).product()
    };
    let mut previous: Option<Complex64> = None;
    loop {
        let needed = samples(&axes);
        if needed > budget {
            return Err(Error::BudgetExceeded { needed, budget });
        }
        let current = composite(problem, &gl, &axes);
        if let Some(prev) = previous {
            if (current - prev).norm() <= tolerance {
                return Ok(current);
            }
        }
        previous = Some(current);
        axes = axes.iter().map(|b| bisect(b)).collect();
    }
}

/// Panel edges on `[-R, R]` no wider than one local period of
/// `exp(i Φ / hbar)` along `axis`, bounded over the other coordinate.
fn axis_breakpoints(problem: &StationaryPhaseProblem, axis: usize, radius: f64) -> Vec<f64> {
    let h = &problem.hessian;
    let own = h[axis][axis].abs();
    let cross = if problem.dim == 2 { h[axis][1 - axis].abs() } else { 0.0 };
    let max_width = radius / 4.0;
    let mut half = vec![0.0];
    let mut t = 0.0;
    let mut width = max_width;
    while t < radius {
        // widths shrink outward, so t + previous width bounds the panel end
        let frequency = (own * (t + width) + cross * radius) / problem.hbar;
        width = (2.0 * PI / frequency.max(1e-300)).min(max_width).min(radius - t);
        t += width;
        if radius - t < 1e-12 * radius {
            t = radius;
        }
        half.push(t);
    }
    let mut edges: Vec<f64> = half.iter().rev().map(|x| -x).collect();
    edges.extend_from_slice(&half[1..]);
    edges
}

fn bisect(edges: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * edges.len() - 1);
    for pair in edges.windows(2) {
        out.push(pair[0]);
        out.push(0.5 * (pair[0] + pair[1]));
    }
    out.push(edges[edges.len() - 1]);
    out
}

fn rule(gl: &GaussLegendre, edges: &[f64]) -> (Vec<f64>, Vec<f64>) {
    edges
        .windows(2)
        .flat_map(|pair| {
            let mid = 0.5 * (pair[0] + pair[1]);
            let half = 0.5 * (pair[1] - pair[0]);
            gl.nodes
                .iter()
                .zip(&gl.weights)
                .map(move |(&x, &w)| (mid + half * x, half * w))
        })
        .unzip()
}

fn composite(problem: &StationaryPhaseProblem, gl: &GaussLegendre, axes: &[Vec<f64>]) -> Complex64 {
    let term = |x: &[f64]| {
        let a = problem.amplitude.value(x);
        if a == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::from_polar(a, problem.phase(x) / problem.hbar)
        }
    };
    let (xs, wxs) = rule(gl, &axes[0]);
    if problem.dim == 1 {
        return xs.iter().zip(&wxs).map(|(&x, &w)| term(&[x]) * w).sum();
    }
    let (ys, wys) = rule(gl, &axes[1]);
    xs.par_iter()
        .zip(&wxs)
        .map(|(&x, &wx)| {
            let row: Complex64 = ys.iter().zip(&wys).map(|(&y, &wy)| term(&[x, y]) * wy).sum();
            row * wx
        })
        .sum()
}
