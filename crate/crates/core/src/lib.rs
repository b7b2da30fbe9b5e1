//! Numerical core for free-fermion fluctuation and entanglement experiments
//! on finite-difference Schrödinger operators.

pub mod error;
pub mod fermion;
pub mod grid;
pub mod linalg;
pub mod oscint;
pub mod predictions;
pub mod quad;
pub mod sampling;
pub mod schrodinger;
pub mod special;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};

/// Crate version recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use fermion::{
    commutator_report, counting_law, cross_covariance, entropy_sandwich, fermi_projector,
    gaussianity_report, laplace_transform, observable_variance, restricted_spectrum,
    spectral_functional, CommutatorReport, CountingLaw, EntropySandwich, FermiProjector,
    GaussianityReport, RestrictedSpectrum, SpectralFunction,
};
pub use grid::{region_mask, Grid, Mask, Region, RegionMask};
pub use oscint::{
    ball_ft_asymptotic, ball_indicator_ft, brute_force_oscillatory, integral_estimate,
    stationary_phase_expand, Amplitude, StationaryPhaseProblem,
};
pub use predictions::{prediction_set, variance_coefficient, Observable, PredictionSet};
pub use sampling::{sample, SampleBatch};
pub use schrodinger::{assemble, assemble_with, AssembleOptions, Potential, SchrodingerProblem};
pub use spectral::{eigendecompose, SpectralData};
pub use stats::{linear_fit, log_slope_fit, LineFit};
