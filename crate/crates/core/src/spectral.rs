//! Eigendecomposition of assembled problems and the counting laws built on
//! the spectrum.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use statrs::function::beta::beta;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::{symmetric_eigen, DENSE_LIMIT};
use crate::predictions::c_ball;
use crate::quad::adaptive;
use crate::schrodinger::{Potential, SchrodingerProblem};

/// Identifies the problem a decomposition came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fingerprint {
    pub hbar: f64,
    pub mu: f64,
    pub grid: u64,
}

/// Eigenvectors stored either explicitly or as 1D factors.
#[derive(Debug, Clone)]
pub enum Eigenvectors {
    /// Columns of length `M^n`.
    Dense(DMatrix<f64>),
    /// Column `k` is `x[:, i] ⊗ y[:, j]` with `(i, j) = pairs[k]`.
    Separable {
        x: DMatrix<f64>,
        y: DMatrix<f64>,
        pairs: Vec<(usize, usize)>,
    },
}

/// Retained eigenpairs `λ <= cutoff`, ascending, with Euclidean-orthonormal
/// eigenvectors.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub values: Vec<f64>,
    pub vectors: Eigenvectors,
    pub cutoff: f64,
    pub fingerprint: Fingerprint,
    pub grid: Grid,
    /// Every eigenvalue of the matrix, when the dense path computed them.
    pub full_spectrum: Option<Vec<f64>>,
}

/// Solver selection for [`eigendecompose_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverPath {
    /// Tridiagonal in 1D, tensor pairs for separable 2D, dense otherwise.
    #[default]
    Auto,
    Dense,
}

/// Default margin kept above `mu`.
pub const DEFAULT_WINDOW: f64 = 0.25;

pub fn eigendecompose(problem: &SchrodingerProblem, upper_cutoff: f64) -> Result<SpectralData> {
    eigendecompose_with(problem, upper_cutoff, SolverPath::Auto)
}

pub fn eigendecompose_with(
    problem: &SchrodingerProblem,
    upper_cutoff: f64,
    path: SolverPath,
) -> Result<SpectralData> {
    if !(upper_cutoff >= problem.mu()) {
        return Err(Error::invalid(format!(
            "upper cutoff {upper_cutoff} lies below mu = {}",
            problem.mu()
        )));
    }
    let grid = problem.grid().clone();
    let fingerprint = Fingerprint {
        hbar: problem.hbar(),
        mu: problem.mu(),
        grid: grid.fingerprint(),
    };
    let separable = match path {
        SolverPath::Auto => problem.separable_factors().transpose()?,
        SolverPath::Dense => None,
    };
    let (values, vectors, full_spectrum) = if grid.dim() == 1 && path == SolverPath::Auto {
        let (values, vectors) = problem.tridiagonal()?.eigenpairs_below(upper_cutoff)?;
        (values, Eigenvectors::Dense(vectors), None)
    } else if let Some((ax, ay)) = separable {
        let bottom_x = ax.eigenvalues()?[0];
        let bottom_y = ay.eigenvalues()?[0];
        let (lx, vx) = ax.eigenpairs_below(upper_cutoff - bottom_y)?;
        let (ly, vy) = ay.eigenpairs_below(upper_cutoff - bottom_x)?;
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (i, a) in lx.iter().enumerate() {
            for (j, b) in ly.iter().enumerate() {
                if a + b <= upper_cutoff {
                    pairs.push((a + b, i, j));
                }
            }
        }
        pairs.sort_by(|p, q| p.0.total_cmp(&q.0).then((p.1, p.2).cmp(&(q.1, q.2))));
        let values = pairs.iter().map(|p| p.0).collect();
        let pairs = pairs.into_iter().map(|p| (p.1, p.2)).collect();
        (values, Eigenvectors::Separable { x: vx, y: vy, pairs }, None)
    } else {
        if grid.len() > DENSE_LIMIT {
            return Err(Error::MatrixTooLarge {
                size: grid.len(),
                max: DENSE_LIMIT,
            });
        }
        let eig = symmetric_eigen(&problem.to_dense(), true)?;
        let keep = eig.values.iter().take_while(|&&l| l <= upper_cutoff).count();
        let all = eig.vectors.expect("vectors requested");
        let vectors = all.columns(0, keep).into_owned();
        (eig.values[..keep].to_vec(), Eigenvectors::Dense(vectors), Some(eig.values))
    };
    Ok(SpectralData {
        values,
        vectors,
        cutoff: upper_cutoff,
        fingerprint,
        grid,
        full_spectrum,
    })
}

impl SpectralData {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_separable(&self) -> bool {
        matches!(self.vectors, Eigenvectors::Separable { .. })
    }

    /// Writes eigenvector `k` (Euclidean-normalized) into `out`.
    pub fn vector_into(&self, k: usize, out: &mut [f64]) {
        match &self.vectors {
            Eigenvectors::Dense(v) => out.copy_from_slice(v.column(k).as_slice()),
            Eigenvectors::Separable { x, y, pairs } => {
                let (i, j) = pairs[k];
                let m = y.nrows();
                for (a, xa) in x.column(i).iter().enumerate() {
                    for (b, yb) in y.column(j).iter().enumerate() {
                        out[a * m + b] = xa * yb;
                    }
                }
            }
        }
    }

    /// First `count` eigenvectors as columns.
    pub fn leading_vectors(&self, count: usize) -> DMatrix<f64> {
        let n = self.grid.len();
        match &self.vectors {
            Eigenvectors::Dense(v) => v.columns(0, count).into_owned(),
            Eigenvectors::Separable { .. } => {
                let mut out = DMatrix::zeros(n, count);
                for k in 0..count {
                    self.vector_into(k, out.column_mut(k).as_mut_slice());
                }
                out
            }
        }
    }

    /// `max_k ||H v_k - λ_k v_k||_2`.
    pub fn max_residual(&self, problem: &SchrodingerProblem) -> f64 {
        let n = self.grid.len();
        let mut v = vec![0.0; n];
        let mut hv = vec![0.0; n];
        let mut worst: f64 = 0.0;
        for k in 0..self.len() {
            self.vector_into(k, &mut v);
            problem.apply(&v, &mut hv);
            let r: f64 = hv
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - self.values[k] * b).powi(2))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(r);
        }
        worst
    }

    /// `max |<v_i, v_j> - δ_ij|` over retained pairs.
    pub fn orthonormality_defect(&self) -> f64 {
        let v = self.leading_vectors(self.len());
        let gram = v.transpose() * &v;
        let mut worst: f64 = 0.0;
        for i in 0..gram.nrows() {
            for j in 0..gram.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - target).abs());
            }
        }
        worst
    }
}

/// `N = #{k : λ_k <= mu}`.
pub fn fermi_count(spectral: &SpectralData, mu: f64) -> Result<usize> {
    if spectral.cutoff < mu {
        return Err(Error::CutoffTooLow {
            retained: spectral.cutoff,
            required: mu,
        });
    }
    Ok(spectral.values.iter().take_while(|&&l| l <= mu).count())
}

/// `#{k : |λ_k - lambda| <= hbar}`.
pub fn window_count(spectral: &SpectralData, lambda: f64, hbar: f64) -> Result<usize> {
    if spectral.cutoff < lambda + hbar {
        return Err(Error::CutoffTooLow {
            retained: spectral.cutoff,
            required: lambda + hbar,
        });
    }
    Ok(spectral
        .values
        .iter()
        .filter(|&&l| (l - lambda).abs() <= hbar)
        .count())
}

/// Phase-space volume `Z = ∫ (mu - V)_+^{n/2} dx`.
pub fn phase_space_volume(potential: &Potential, dim: usize, mu: f64) -> Result<f64> {
    potential.validate(dim)?;
    if mu <= potential.infimum() {
        return Ok(0.0);
    }
    if let Some(q) = potential.radial_exponent() {
        let a = mu.powf(1.0 / q);
        return Ok(match dim {
            // 2a sqrt(mu) ∫_0^1 (1 - t^q)^{1/2} dt
            1 => 2.0 * a * mu.sqrt() * beta(1.0 / q, 1.5) / q,
            // 2π ∫_0^a (mu - r^q) r dr
            _ => PI * q * mu.powf(1.0 + 2.0 / q) / (q + 2.0),
        });
    }
    match potential {
        Potential::Separable { vx, vy } => {
            let qx = vx.radial_exponent().expect("validated factor");
            let qy = vy.radial_exponent().expect("validated factor");
            let reach = mu.powf(1.0 / qx);
            // ∫ (c - |y|^q)_+ dy = 2 c b q / (q + 1) with b = c^{1/q}
            let inner = |x: f64| {
                let c = mu - x.abs().powf(qx);
                if c <= 0.0 {
                    0.0
                } else {
                    2.0 * c * c.powf(1.0 / qy) * qy / (qy + 1.0)
                }
            };
            Ok(2.0 * adaptive(inner, 0.0, reach, 1e-13, 1e-12)?.value)
        }
        Potential::Tabulated {
            half_width,
            points_per_axis,
            values,
            ..
        } => {
            // the nearest-node model is piecewise constant on the table cells
            let cell = (2.0 * half_width / *points_per_axis as f64).powi(dim as i32);
            Ok(values
                .iter()
                .map(|v| (mu - v).max(0.0).powf(0.5 * dim as f64))
                .sum::<f64>()
                * cell)
        }
        _ => unreachable!("radial kinds handled above"),
    }
}

/// `c_n Z / (2 pi hbar)^n`.
pub fn weyl_prediction(potential: &Potential, dim: usize, mu: f64, hbar: f64) -> Result<f64> {
    let z = phase_space_volume(potential, dim, mu)?;
    Ok(c_ball(dim) * z / (2.0 * PI * hbar).powi(dim as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_orthogonal, symmetric_eigenvalues};
    use crate::schrodinger::{assemble, required_points};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // 32 points per wavelength keeps the discretization shift of the top
    // levels well inside the gaps probed below
    fn harmonic_1d(hbar: f64) -> (SchrodingerProblem, SpectralData) {
        let m = required_points(1.5, &Potential::Harmonic, hbar, 1.0, 32.0);
        let g = Grid::new(1, 1.5, m).unwrap();
        let p = assemble(&g, &Potential::Harmonic, hbar, 1.0).unwrap();
        let s = eigendecompose(&p, 1.0 + DEFAULT_WINDOW).unwrap();
        (p, s)
    }

    #[test]
    fn two_by_two() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        let v = symmetric_eigenvalues(&a).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15 && (v[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn harmonic_residuals_and_orthonormality() {
        let (p, s) = harmonic_1d(0.02);
        assert!(s.values.windows(2).all(|w| w[0] <= w[1]));
        assert!(s.max_residual(&p) <= 1e-8 * p.norm_one());
        let d = s.orthonormality_defect();
        assert!(d <= 1e-10, "defect {d}");
    }

    #[test]
    fn fermi_counts() {
        let (_, s) = harmonic_1d(0.01);
        assert_eq!(fermi_count(&s, 1.0).unwrap(), 50);
        assert_eq!(fermi_count(&s, s.values[0] * 0.5).unwrap(), 0);
        assert!(matches!(fermi_count(&s, 2.0), Err(Error::CutoffTooLow { .. })));
        let counts: Vec<usize> = [0.05, 0.02, 0.01]
            .iter()
            .map(|&h| fermi_count(&harmonic_1d(h).1, 1.0).unwrap())
            .collect();
        assert!(counts.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(counts, vec![10, 25, 50]);
    }

    #[test]
    fn windows() {
        let hbar = 0.01;
        let (_, s) = harmonic_1d(hbar);
        for i in 0..40 {
            let lambda = 0.9 + 0.005 * i as f64;
            let c = window_count(&s, lambda, hbar).unwrap();
            assert!((1..=2).contains(&c), "lambda {lambda}: {c}");
        }
        // midway between levels 0.99 and 1.01, window hbar/4
        assert_eq!(window_count(&s, 1.0, hbar / 4.0).unwrap(), 0);
        assert!(window_count(&s, 1.3, hbar).is_err());
    }

    #[test]
    fn weyl_volumes() {
        assert!((phase_space_volume(&Potential::Harmonic, 1, 1.0).unwrap() - PI / 2.0).abs() < 1e-12);
        assert!((weyl_prediction(&Potential::Harmonic, 1, 1.0, 0.01).unwrap() - 50.0).abs() < 1e-10);
        assert!((phase_space_volume(&Potential::Harmonic, 2, 1.0).unwrap() - PI / 2.0).abs() < 1e-12);
        let n2 = weyl_prediction(&Potential::Harmonic, 2, 1.0, 0.05).unwrap();
        assert!((n2 - PI * (PI / 2.0) / (2.0 * PI * 0.05f64).powi(2)).abs() < 1e-9);
        // separable harmonic equals radial harmonic
        let sep = Potential::Separable {
            vx: Box::new(Potential::Harmonic),
            vy: Box::new(Potential::Harmonic),
        };
        assert!((phase_space_volume(&sep, 2, 1.0).unwrap() - PI / 2.0).abs() < 1e-10);
        // quartic in 1D against adaptive quadrature of the definition
        let z4 = phase_space_volume(&Potential::Power { q: 4.0 }, 1, 1.3).unwrap();
        let direct = adaptive(|x| (1.3 - x.powi(4)).max(0.0).sqrt(), -1.3f64.powf(0.25), 1.3f64.powf(0.25), 1e-13, 1e-12)
            .unwrap()
            .value;
        assert!((z4 - direct).abs() < 1e-9, "{z4} vs {direct}");
        for hbar in [0.1, 0.01, 0.003] {
            let n = weyl_prediction(&Potential::Harmonic, 1, 1.0, hbar).unwrap();
            let identity = n * (2.0 * PI * hbar) / (c_ball(1) * PI / 2.0);
            assert!((identity - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn separable_harmonic_degeneracy() {
        let hbar = 0.05;
        let g = Grid::new(2, 1.5, 256).unwrap();
        let p = assemble(&g, &Potential::Harmonic, hbar, 1.0).unwrap();
        let s = eigendecompose(&p, 1.0).unwrap();
        assert!(s.is_separable());
        for k in 0..5 {
            let level = 0.1 * (k + 1) as f64;
            let count = s.values.iter().filter(|&&l| (l - level).abs() < 2e-3).count();
            assert_eq!(count, k + 1, "level {level}");
        }
        assert!(s.max_residual(&p) <= 1e-8 * p.norm_one());
        assert!(s.orthonormality_defect() <= 1e-10);
    }

    #[test]
    fn separable_matches_dense() {
        let g = Grid::new(2, 1.5, 32).unwrap();
        let pot = Potential::Separable {
            vx: Box::new(Potential::Harmonic),
            vy: Box::new(Potential::Power { q: 4.0 }),
        };
        let p = assemble(&g, &pot, 0.2, 1.0).unwrap();
        let tensor = eigendecompose(&p, 1.0).unwrap();
        let dense = eigendecompose_with(&p, 1.0, SolverPath::Dense).unwrap();
        assert!(tensor.is_separable() && !dense.is_separable());
        assert_eq!(tensor.len(), dense.len());
        for (a, b) in tensor.values.iter().zip(&dense.values) {
            assert!((a - b).abs() < 1e-8);
        }
        let full = dense.full_spectrum.as_ref().unwrap();
        let trace: f64 = p.diagonal().iter().sum();
        let total: f64 = full.iter().sum();
        assert!(((trace - total) / trace).abs() < 1e-8);
        assert!(dense.max_residual(&p) <= 1e-8 * p.norm_one());
    }

    #[test]
    fn dense_path_limit() {
        let g = Grid::new(2, 2.0, 65).unwrap();
        let p = assemble(&g, &Potential::Power { q: 3.0 }, 0.3, 1.0).unwrap();
        assert!(matches!(
            eigendecompose(&p, 1.0),
            Err(Error::MatrixTooLarge { size: 4225, .. })
        ));
    }

    #[test]
    fn mixing_preserves_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = random_orthogonal(6, &mut rng);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, 2.0, 2.0, 2.0, 5.0]));
        let a = &q * d * q.transpose();
        let v = symmetric_eigenvalues(&a).unwrap();
        for (x, y) in v.iter().zip([1.0, 1.0, 2.0, 2.0, 2.0, 5.0]) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
