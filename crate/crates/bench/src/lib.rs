//! Fixtures shared by the benchmarks.

use fbl_core::fermion::{fermi_projector, FermiProjector};
use fbl_core::grid::Grid;
use fbl_core::schrodinger::{assemble, required_points, Potential, SchrodingerProblem};
use fbl_core::spectral::eigendecompose;

/// 1D harmonic well on `(-1.5, 1.5)` with `mu = 1` at the coarsest grid
/// allowed for `hbar`.
pub fn harmonic_problem(hbar: f64) -> SchrodingerProblem {
    let potential = Potential::Harmonic;
    let points = required_points(1.5, &potential, hbar, 1.0, 8.0);
    let grid = Grid::new(1, 1.5, points).expect("valid grid");
    assemble(&grid, &potential, hbar, 1.0).expect("resolved problem")
}

pub fn harmonic_projector(hbar: f64) -> FermiProjector {
    let problem = harmonic_problem(hbar);
    let spectral = eigendecompose(&problem, 1.0).expect("spectrum");
    fermi_projector(&spectral, 1.0).expect("occupied states")
}
