//! Finite-difference Schrödinger operators `-hbar^2 Δ_h + V` with Dirichlet
//! walls, potentials and droplet descriptors.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::Tridiagonal;

/// Scalar potential `V`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Potential {
    /// `|x|^2`
    Harmonic,
    /// `|x|^q`
    Power { q: f64 },
    /// `vx(x_0) + vy(x_1)`; each factor is harmonic or power.
    Separable { vx: Box<Potential>, vy: Box<Potential> },
    /// Values at the nodes of a cell-centered grid on `(-L, L)^dim`, looked up
    /// at the nearest node.
    Tabulated {
        dim: usize,
        half_width: f64,
        points_per_axis: usize,
        values: Vec<f64>,
    },
}

impl Potential {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Potential::Harmonic => Ok(()),
            Potential::Power { q } if *q > 0.0 && q.is_finite() => Ok(()),
            Potential::Power { q } => Err(Error::invalid(format!("power exponent must be positive, got {q}"))),
            Potential::Separable { vx, vy } => {
                if dim != 2 {
                    return Err(Error::invalid("separable potentials require dim = 2"));
                }
                for factor in [vx, vy] {
                    match factor.as_ref() {
                        Potential::Harmonic | Potential::Power { .. } => factor.validate(1)?,
                        other => {
                            return Err(Error::invalid(format!(
                                "separable factor must be harmonic or power, got {other:?}"
                            )))
                        }
                    }
                }
                Ok(())
            }
            Potential::Tabulated {
                dim: tdim,
                half_width,
                points_per_axis,
                values,
            } => {
                if *tdim != dim {
                    return Err(Error::invalid("tabulated potential dimension mismatch"));
                }
                if !(*half_width > 0.0) || *points_per_axis < 2 {
                    return Err(Error::invalid("tabulated potential has a degenerate grid"));
                }
                if values.len() != points_per_axis.pow(dim as u32) {
                    return Err(Error::invalid(format!(
                        "tabulated potential needs {} values, got {}",
                        points_per_axis.pow(dim as u32),
                        values.len()
                    )));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("tabulated potential has non-finite values"));
                }
                Ok(())
            }
        }
    }

    /// `V(x)`; only the first `dim` coordinates are read.
    pub fn eval(&self, x: &[f64], dim: usize) -> f64 {
        let radius = || if dim == 1 { x[0].abs() } else { x[0].hypot(x[1]) };
        match self {
            Potential::Harmonic => x[..dim].iter().map(|c| c * c).sum(),
            Potential::Power { q } => radius().powf(*q),
            Potential::Separable { vx, vy } => vx.eval(&x[..1], 1) + vy.eval(&x[1..2], 1),
            Potential::Tabulated {
                half_width,
                points_per_axis,
                values,
                ..
            } => {
                let m = *points_per_axis;
                let h = 2.0 * half_width / m as f64;
                let nearest = |c: f64| (((c + half_width) / h).floor().max(0.0) as usize).min(m - 1);
                match dim {
                    1 => values[nearest(x[0])],
                    _ => values[nearest(x[0]) * m + nearest(x[1])],
                }
            }
        }
    }

    /// Exact infimum of `V` over the plane (or line), or the table minimum.
    pub fn infimum(&self) -> f64 {
        match self {
            Potential::Harmonic | Potential::Power { .. } => 0.0,
            Potential::Separable { vx, vy } => vx.infimum() + vy.infimum(),
            Potential::Tabulated { values, .. } => {
                values.iter().copied().fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// 1D factors when `V(x) = v0(x_0) + v1(x_1)` in two dimensions.
    pub fn separable_factors(&self, dim: usize) -> Option<(Potential, Potential)> {
        if dim != 2 {
            return None;
        }
        match self {
            Potential::Harmonic => Some((Potential::Harmonic, Potential::Harmonic)),
            Potential::Power { q } if *q == 2.0 => Some((Potential::Harmonic, Potential::Harmonic)),
            Potential::Separable { vx, vy } => Some((vx.as_ref().clone(), vy.as_ref().clone())),
            _ => None,
        }
    }

    /// Exponent `q` of a radial potential `|x|^q`.
    pub fn radial_exponent(&self) -> Option<f64> {
        match self {
            Potential::Harmonic => Some(2.0),
            Potential::Power { q } => Some(*q),
            _ => None,
        }
    }
}

/// Accuracy contract for the discretization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssembleOptions {
    /// Required `V - mu` on the wall cells.
    pub wall_margin: f64,
    /// Minimum grid points per shortest de Broglie wavelength.
    pub points_per_wavelength: f64,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        Self {
            wall_margin: 0.5,
            points_per_wavelength: 8.0,
        }
    }
}

/// Resolution and truncation numbers of an assembled problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub spacing: f64,
    pub hbar: f64,
    /// `2 pi hbar / (h sqrt(mu - min V))`, infinite for an empty kinetic range.
    pub points_per_wavelength: f64,
    /// `min V(wall cells) - mu`.
    pub wall_margin: f64,
    pub min_potential: f64,
}

/// Largest spacing allowed by the resolution rule.
pub fn max_spacing(hbar: f64, mu: f64, min_potential: f64, points_per_wavelength: f64) -> f64 {
    let kinetic = (mu - min_potential).max(0.0).sqrt();
    2.0 * PI * hbar / (points_per_wavelength * kinetic + 1e-300)
}

/// Smallest `points_per_axis` meeting the resolution rule on `(-L, L)`.
pub fn required_points(
    half_width: f64,
    potential: &Potential,
    hbar: f64,
    mu: f64,
    points_per_wavelength: f64,
) -> usize {
    let h = max_spacing(hbar, mu, potential.infimum(), points_per_wavelength);
    ((2.0 * half_width / h).ceil() as usize).max(2)
}

/// Discretized `H = -hbar^2 Δ_h + diag(V)` on a cell-centered grid.
#[derive(Debug, Clone)]
pub struct SchrodingerProblem {
    grid: Grid,
    potential: Potential,
    hbar: f64,
    mu: f64,
    potential_values: Vec<f64>,
    diagnostics: Diagnostics,
}

/// Assemble with the default accuracy contract.
pub fn assemble(grid: &Grid, potential: &Potential, hbar: f64, mu: f64) -> Result<SchrodingerProblem> {
    assemble_with(grid, potential, hbar, mu, AssembleOptions::default())
}

pub fn assemble_with(
    grid: &Grid,
    potential: &Potential,
    hbar: f64,
    mu: f64,
    options: AssembleOptions,
) -> Result<SchrodingerProblem> {
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(Error::invalid(format!("hbar must be positive, got {hbar}")));
    }
    if !mu.is_finite() {
        return Err(Error::invalid("mu must be finite"));
    }
    potential.validate(grid.dim())?;
    let dim = grid.dim();
    let potential_values: Vec<f64> = grid.nodes().map(|x| potential.eval(&x, dim)).collect();
    let min_potential = potential_values.iter().copied().fold(f64::INFINITY, f64::min);
    if min_potential >= mu {
        return Err(Error::EmptyDroplet {
            min_v: min_potential,
            mu,
        });
    }
    let h = grid.spacing();
    let max_h = max_spacing(hbar, mu, min_potential, options.points_per_wavelength);
    if h > max_h {
        return Err(Error::ResolutionTooCoarse {
            h,
            max_h,
            hbar,
            points_per_wavelength: options.points_per_wavelength,
        });
    }
    let wall_min = grid
        .wall_indices()
        .into_iter()
        .map(|k| potential_values[k])
        .fold(f64::INFINITY, f64::min);
    if wall_min < mu + options.wall_margin {
        return Err(Error::BoxTooSmall {
            wall_min,
            required: mu + options.wall_margin,
        });
    }
    let diagnostics = Diagnostics {
        spacing: h,
        hbar,
        points_per_wavelength: 2.0 * PI * hbar / (h * (mu - min_potential).sqrt()),
        wall_margin: wall_min - mu,
        min_potential,
    };
    Ok(SchrodingerProblem {
        grid: grid.clone(),
        potential: potential.clone(),
        hbar,
        mu,
        potential_values,
        diagnostics,
    })
}

impl SchrodingerProblem {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    /// `V` at every node.
    pub fn potential_values(&self) -> &[f64] {
        &self.potential_values
    }

    /// Off-diagonal entry `-hbar^2 / h^2` between axis neighbours.
    pub fn coupling(&self) -> f64 {
        -(self.hbar / self.grid.spacing()).powi(2)
    }

    /// Diagonal entries `2 n hbar^2 / h^2 + V(x_i)`.
    pub fn diagonal(&self) -> Vec<f64> {
        let kinetic = -2.0 * self.grid.dim() as f64 * self.coupling();
        self.potential_values.iter().map(|v| kinetic + v).collect()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The 1D operator as a tridiagonal matrix.
    pub fn tridiagonal(&self) -> Result<Tridiagonal> {
        if self.grid.dim() != 1 {
            return Err(Error::invalid("tridiagonal form exists only in 1D"));
        }
        Tridiagonal::new(self.diagonal(), vec![self.coupling(); self.len() - 1])
    }

    /// 1D operators `-hbar^2 d^2 + v_axis` whose Kronecker sum is `H`, when
    /// the potential separates.
    pub fn separable_factors(&self) -> Option<Result<(Tridiagonal, Tridiagonal)>> {
        let (vx, vy) = self.potential.separable_factors(self.grid.dim())?;
        let t = self.coupling();
        let axis_operator = |v: &Potential| {
            let diag = self.grid.axis().iter().map(|&x| -2.0 * t + v.eval(&[x], 1)).collect();
            Tridiagonal::new(diag, vec![t; self.grid.points_per_axis() - 1])
        };
        Some(axis_operator(&vx).and_then(|a| Ok((a, axis_operator(&vy)?))))
    }

    /// Dense matrix; intended for problems of at most a few thousand nodes.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut a = DMatrix::zeros(n, n);
        for (k, d) in self.diagonal().into_iter().enumerate() {
            a[(k, k)] = d;
        }
        let t = self.coupling();
        for (i, j) in self.neighbour_pairs() {
            a[(i, j)] = t;
            a[(j, i)] = t;
        }
        a
    }

    /// Unordered axis-neighbour pairs `(i, j)` with `i < j`.
    fn neighbour_pairs(&self) -> Vec<(usize, usize)> {
        let m = self.grid.points_per_axis();
        match self.grid.dim() {
            1 => (0..m - 1).map(|i| (i, i + 1)).collect(),
            _ => {
                let mut pairs = Vec::with_capacity(2 * m * m);
                for i in 0..m {
                    for j in 0..m {
                        let k = i * m + j;
                        if j + 1 < m {
                            pairs.push((k, k + 1));
                        }
                        if i + 1 < m {
                            pairs.push((k, k + m));
                        }
                    }
                }
                pairs
            }
        }
    }

    /// `out = H x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let m = self.grid.points_per_axis();
        let t = self.coupling();
        let kinetic = -2.0 * self.grid.dim() as f64 * t;
        for k in 0..self.len() {
            let mut acc = (kinetic + self.potential_values[k]) * x[k];
            match self.grid.dim() {
                1 => {
                    if k > 0 {
                        acc += t * x[k - 1];
                    }
                    if k + 1 < m {
                        acc += t * x[k + 1];
                    }
                }
                _ => {
                    let (i, j) = (k / m, k % m);
                    if j > 0 {
                        acc += t * x[k - 1];
                    }
                    if j + 1 < m {
                        acc += t * x[k + 1];
                    }
                    if i > 0 {
                        acc += t * x[k - m];
                    }
                    if i + 1 < m {
                        acc += t * x[k + m];
                    }
                }
            }
            out[k] = acc;
        }
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        let t = self.coupling().abs();
        let kinetic = 2.0 * self.grid.dim() as f64 * t;
        self.potential_values
            .iter()
            .map(|v| (kinetic + v).abs() + 2.0 * self.grid.dim() as f64 * t)
            .fold(0.0, f64::max)
    }
}

/// Classically allowed region `{V < mu}`.
#[derive(Debug, Clone, PartialEq)]
pub enum Droplet {
    Interval { a: f64, b: f64 },
    Disk { radius: f64 },
    /// No closed form; described only by the sublevel set itself.
    Sublevel { min_potential: f64 },
}

pub fn droplet_descriptor(potential: &Potential, dim: usize, mu: f64) -> Result<Droplet> {
    potential.validate(dim)?;
    let min_v = potential.infimum();
    if min_v >= mu {
        return Err(Error::EmptyDroplet { min_v, mu });
    }
    Ok(match (potential.radial_exponent(), dim) {
        (Some(q), 1) => {
            let a = mu.powf(1.0 / q);
            Droplet::Interval { a: -a, b: a }
        }
        (Some(q), _) => Droplet::Disk {
            radius: mu.powf(1.0 / q),
        },
        (None, _) => Droplet::Sublevel { min_potential: min_v },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::symmetric_eigenvalues;

    #[test]
    fn stencil_entries() {
        let g = Grid::new(1, 6.0, 512).unwrap();
        let p = assemble(&g, &Potential::Harmonic, 1.0, 1.0).unwrap();
        let h = g.spacing();
        let t = p.tridiagonal().unwrap();
        for (i, d) in t.diag.iter().enumerate() {
            let x = g.axis()[i];
            assert!((d - (2.0 / (h * h) + x * x)).abs() < 1e-9);
        }
        assert!(t.off.iter().all(|&o| o == -1.0 / (h * h)));
        let wall = (6.0 - h / 2.0).powi(2);
        assert!((p.diagnostics().wall_margin - (wall - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn resolution_rule() {
        let harmonic = Potential::Harmonic;
        let accepted = Grid::new(1, 1.5, 512).unwrap();
        assert!(assemble(&accepted, &harmonic, 0.01, 1.0).is_ok());
        let coarse = Grid::new(1, 1.5, 256).unwrap();
        match assemble(&coarse, &harmonic, 0.01, 1.0) {
            Err(Error::ResolutionTooCoarse { h, max_h, .. }) => {
                assert_eq!(h, 3.0 / 256.0);
                assert!((max_h - 2.0 * PI * 0.01 / 8.0).abs() < 1e-6);
            }
            other => panic!("{other:?}"),
        }
        let m = required_points(1.5, &harmonic, 0.01, 1.0, 8.0);
        assert_eq!(m, 382);
        assert!(assemble(&Grid::new(1, 1.5, m).unwrap(), &harmonic, 0.01, 1.0).is_ok());
    }

    #[test]
    fn wall_rule() {
        let g = Grid::new(1, 1.1, 200).unwrap();
        assert!(matches!(
            assemble(&g, &Potential::Harmonic, 0.05, 1.0),
            Err(Error::BoxTooSmall { .. })
        ));
        let g = Grid::new(1, 1.0, 20).unwrap();
        assert!(matches!(
            assemble(&g, &Potential::Harmonic, 0.5, -1.0),
            Err(Error::EmptyDroplet { .. })
        ));
    }

    #[test]
    fn dense_apply_and_norm_agree() {
        let g = Grid::new(2, 1.6, 16).unwrap();
        let p = assemble(&g, &Potential::Power { q: 3.0 }, 0.3, 1.0).unwrap();
        let a = p.to_dense();
        assert_eq!(a, a.transpose());
        let x: Vec<f64> = (0..p.len()).map(|k| ((k * 7 % 13) as f64).sin()).collect();
        let mut y = vec![0.0; p.len()];
        p.apply(&x, &mut y);
        let dense = &a * nalgebra::DVector::from_column_slice(&x);
        for k in 0..p.len() {
            assert!((dense[k] - y[k]).abs() < 1e-9);
        }
        let norm = (0..p.len())
            .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        // interior columns have four neighbours; the bound is attained off the walls
        assert!(p.norm_one() >= norm - 1e-9);
    }

    #[test]
    fn spectrum_bounded_below_by_min_potential() {
        let g = Grid::new(2, 1.5, 24).unwrap();
        let p = assemble(&g, &Potential::Power { q: 1.5 }, 0.2, 1.0).unwrap();
        let values = symmetric_eigenvalues(&p.to_dense()).unwrap();
        assert!(values[0] >= p.diagnostics().min_potential - 1e-8);
    }

    #[test]
    fn second_order_convergence() {
        // Richardson reference from the two finest grids.
        let levels = |m: usize| {
            let g = Grid::new(1, 4.0, m).unwrap();
            let p = assemble(&g, &Potential::Power { q: 4.0 }, 0.5, 1.0).unwrap();
            let mut v = p.tridiagonal().unwrap().eigenvalues().unwrap();
            v.truncate(10);
            v
        };
        let ms = [100, 200, 400, 800, 1600];
        let spectra: Vec<Vec<f64>> = ms.iter().map(|&m| levels(m)).collect();
        let fine = &spectra[4];
        let finer = &spectra[3];
        let reference: Vec<f64> = (0..10).map(|k| (4.0 * fine[k] - finer[k]) / 3.0).collect();
        let errors: Vec<f64> = spectra[..3]
            .iter()
            .map(|s| (0..10).map(|k| (s[k] - reference[k]).abs()).fold(0.0, f64::max))
            .collect();
        let hs: Vec<f64> = ms[..3].iter().map(|&m| 8.0 / m as f64).collect();
        let slope = (errors[2].ln() - errors[0].ln()) / (hs[2].ln() - hs[0].ln());
        assert!((slope - 2.0).abs() < 0.3, "slope {slope}");
    }

    #[test]
    fn harmonic_levels() {
        let hbar = 0.05;
        let g = Grid::new(1, 3.0, 2048).unwrap();
        let p = assemble(&g, &Potential::Harmonic, hbar, 1.0).unwrap();
        let v = p.tridiagonal().unwrap().eigenvalues().unwrap();
        for (k, value) in v.iter().take(10).enumerate() {
            let exact = hbar * (2 * k + 1) as f64;
            assert!(((value - exact) / exact).abs() < 1e-3, "k={k}");
        }
    }

    #[test]
    fn droplets() {
        assert_eq!(
            droplet_descriptor(&Potential::Harmonic, 1, 1.0).unwrap(),
            Droplet::Interval { a: -1.0, b: 1.0 }
        );
        assert_eq!(
            droplet_descriptor(&Potential::Power { q: 4.0 }, 1, 1.0).unwrap(),
            Droplet::Interval { a: -1.0, b: 1.0 }
        );
        assert_eq!(
            droplet_descriptor(&Potential::Harmonic, 2, 1.0).unwrap(),
            Droplet::Disk { radius: 1.0 }
        );
        assert!(matches!(
            droplet_descriptor(&Potential::Harmonic, 1, 0.0),
            Err(Error::EmptyDroplet { .. })
        ));
    }

    #[test]
    fn tabulated_nearest_node() {
        let g = Grid::new(1, 1.0, 4).unwrap();
        let tab = Potential::Tabulated {
            dim: 1,
            half_width: 1.0,
            points_per_axis: 4,
            values: vec![3.0, 0.0, 0.5, 3.0],
        };
        for (k, expected) in [3.0, 0.0, 0.5, 3.0].into_iter().enumerate() {
            assert_eq!(tab.eval(&[g.axis()[k]], 1), expected);
        }
        assert_eq!(tab.eval(&[-0.01], 1), 0.0);
        assert_eq!(tab.eval(&[5.0], 1), 3.0);
        assert!(Potential::Separable {
            vx: Box::new(Potential::Harmonic),
            vy: Box::new(Potential::Harmonic)
        }
        .validate(1)
        .is_err());
    }

    #[test]
    fn separable_factors_sum_to_operator() {
        let g = Grid::new(2, 1.5, 14).unwrap();
        let pot = Potential::Separable {
            vx: Box::new(Potential::Harmonic),
            vy: Box::new(Potential::Power { q: 4.0 }),
        };
        let p = assemble(&g, &pot, 0.3, 1.0).unwrap();
        let (a, b) = p.separable_factors().unwrap().unwrap();
        let d = p.diagonal();
        for i in 0..14 {
            for j in 0..14 {
                assert!((a.diag[i] + b.diag[j] - d[i * 14 + j]).abs() < 1e-12);
            }
        }
    }
}
