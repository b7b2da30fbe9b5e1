//! Fermi projector, restricted spectrum and the functionals of the ground
//! state: number variance, Schatten norms of `[Π, 1_Ω]`, entanglement
//! entropy, the exact counting law and the Laplace transform.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::grid::Mask;
use crate::linalg::symmetric_eigenvalues;
use crate::spectral::{fermi_count, SpectralData};

/// Values outside `[0, 1]` by less than this are clamped silently.
pub const CLAMP_WINDOW: f64 = 1e-9;
/// Values outside `[0, 1]` by more than this are rejected.
pub const HARD_LIMIT: f64 = 1e-6;
/// Largest parameter count accepted by [`counting_law`].
pub const MAX_BERNOULLI: usize = 20_000;

/// Binary entropy `-λ log λ - (1-λ) log(1-λ)` with `0 log 0 = 0`.
pub fn binary_entropy(lambda: f64) -> f64 {
    let term = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.ln() };
    term(lambda) + term(1.0 - lambda)
}

/// Orthonormal factor `U` of the Fermi projector, `Π = U Uᵀ / h^n`.
#[derive(Debug, Clone)]
pub struct FermiProjector {
    factor: DMatrix<f64>,
    pub hbar: f64,
    pub mu: f64,
    pub grid_fingerprint: u64,
    pub weight: f64,
}

pub fn fermi_projector(spectral: &SpectralData, mu: f64) -> Result<FermiProjector> {
    let n = fermi_count(spectral, mu)?;
    if n == 0 {
        return Err(Error::EmptyOccupation { mu });
    }
    Ok(FermiProjector {
        factor: spectral.leading_vectors(n),
        hbar: spectral.fingerprint.hbar,
        mu,
        grid_fingerprint: spectral.fingerprint.grid,
        weight: spectral.grid.weight(),
    })
}

impl FermiProjector {
    /// Wraps a factor with orthonormal columns.
    pub fn from_factor(factor: DMatrix<f64>, weight: f64) -> Result<Self> {
        if factor.ncols() == 0 {
            return Err(Error::EmptyOccupation { mu: f64::NAN });
        }
        let p = FermiProjector {
            factor,
            hbar: f64::NAN,
            mu: f64::NAN,
            grid_fingerprint: 0,
            weight,
        };
        let defect = p.orthonormality_defect();
        if defect > 1e-8 {
            return Err(Error::NotAProjection { defect });
        }
        Ok(p)
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    /// Particle number `N`.
    pub fn rank(&self) -> usize {
        self.factor.ncols()
    }

    pub fn nodes(&self) -> usize {
        self.factor.nrows()
    }

    /// `h^n Π(x_i, x_i) = Σ_k U_ik^2`.
    pub fn kernel_diagonal(&self) -> Vec<f64> {
        self.factor.row_iter().map(|r| r.norm_squared()).collect()
    }

    /// `max |UᵀU - I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let gram = self.factor.tr_mul(&self.factor);
        let mut worst: f64 = 0.0;
        for ((i, j), v) in gram.iter().enumerate().map(|(k, v)| ((k % gram.nrows(), k / gram.nrows()), v)) {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - target).abs());
        }
        worst
    }

    /// Rows of `U` at the given nodes.
    fn rows(&self, indices: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(indices.len(), self.rank(), |r, c| self.factor[(indices[r], c)])
    }

    /// `Uᵀ diag(1_S) U`.
    pub fn gram(&self, mask: &Mask) -> DMatrix<f64> {
        let rows = self.rows(mask.indices());
        rows.tr_mul(&rows)
    }

    /// `Uᵀ diag(w) U`.
    pub fn weighted_gram(&self, weights: &[f64]) -> DMatrix<f64> {
        let scaled = DMatrix::from_fn(self.nodes(), self.rank(), |r, c| weights[r] * self.factor[(r, c)]);
        self.factor.tr_mul(&scaled)
    }
}

/// Eigenvalues of `1_Ω Π 1_Ω` on the occupied space, descending, in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedSpectrum {
    pub sigma: Vec<f64>,
    /// Trace of the Gram matrix before diagonalization.
    pub trace: f64,
    pub hbar: f64,
    pub region_fingerprint: u64,
}

impl RestrictedSpectrum {
    /// Validates and clamps raw eigenvalues.
    pub fn from_values(mut values: Vec<f64>, hbar: f64) -> Result<Self> {
        for v in &mut values {
            if !(*v >= -HARD_LIMIT && *v <= 1.0 + HARD_LIMIT) {
                return Err(Error::SpectrumOutOfRange { value: *v });
            }
            *v = v.clamp(0.0, 1.0);
        }
        values.sort_by(|a, b| b.total_cmp(a));
        let trace = values.iter().sum();
        Ok(RestrictedSpectrum {
            sigma: values,
            trace,
            hbar,
            region_fingerprint: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }
}

fn mask_fingerprint(mask: &Mask) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &k in mask.indices() {
        for b in (k as u64).to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// Restricted spectrum from the smaller of the `N × N` Gram matrix and the
/// `|Ω| × |Ω|` kernel block; both share the nonzero spectrum.
pub fn restricted_spectrum(proj: &FermiProjector, mask: &Mask) -> Result<RestrictedSpectrum> {
    let n = proj.rank();
    if let Some(&last) = mask.indices().last() {
        if last >= proj.nodes() {
            return Err(Error::invalid(format!("mask index {last} outside the grid")));
        }
    }
    let rows = proj.rows(mask.indices());
    let (matrix, pad) = if mask.len() < n {
        (&rows * rows.transpose(), n - mask.len())
    } else {
        (rows.tr_mul(&rows), 0)
    };
    let trace = matrix.trace();
    let mut values = if matrix.nrows() == 0 {
        Vec::new()
    } else {
        symmetric_eigenvalues(&matrix)?
    };
    values.extend(std::iter::repeat_n(0.0, pad));
    let mut spectrum = RestrictedSpectrum::from_values(values, proj.hbar)?;
    spectrum.trace = trace;
    spectrum.region_fingerprint = mask_fingerprint(mask);
    Ok(spectrum)
}

/// Functionals of `[Π, 1_Ω]` read off the restricted spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommutatorReport {
    /// `Σ σ(1-σ)`
    pub variance: f64,
    /// `||[Π, 1_Ω]||_2^2 = 2 Σ σ(1-σ)`
    pub j2_squared: f64,
    /// `||[Π, 1_Ω]||_1 = 2 Σ sqrt(σ(1-σ))`
    pub j1: f64,
    /// `Σ s(σ)`
    pub entropy: f64,
}

pub fn commutator_report(sigma: &RestrictedSpectrum) -> CommutatorReport {
    let mut variance = 0.0;
    let mut root = 0.0;
    let mut entropy = 0.0;
    for &s in &sigma.sigma {
        let tau = s * (1.0 - s);
        variance += tau;
        root += tau.sqrt();
        entropy += binary_entropy(s);
    }
    CommutatorReport {
        variance,
        j2_squared: 2.0 * variance,
        j1: 2.0 * root,
        entropy,
    }
}

/// Comparison of the nonzero spectra of `PQP` and `-[P, Q]^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralLinkReport {
    /// `{λ(1-λ)}` over the eigenvalues of `PQP`, each twice, descending,
    /// truncated to the dimension.
    pub mapped: Vec<f64>,
    /// Eigenvalues of `-[P, Q]^2`, descending.
    pub commutator: Vec<f64>,
    pub max_mismatch: f64,
    /// `tr(-[P, Q]^2)`
    pub commutator_trace: f64,
    /// `2 tr(PQP - (PQP)^2)`
    pub mapped_trace: f64,
}

impl SpectralLinkReport {
    pub fn matches(&self, tol: f64) -> bool {
        self.max_mismatch <= tol && (self.commutator_trace - self.mapped_trace).abs() <= tol
    }
}

/// Largest dimension accepted by [`spectral_link_check`].
pub const SPECTRAL_LINK_MAX_DIM: usize = 64;

pub fn projection_defect(p: &DMatrix<f64>) -> f64 {
    let asym = (p - p.transpose()).abs().max();
    let idem = (p * p - p).abs().max();
    asym.max(idem)
}

pub fn spectral_link_check(p: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<SpectralLinkReport> {
    let dim = p.nrows();
    if dim == 0 || dim > SPECTRAL_LINK_MAX_DIM || q.shape() != p.shape() || !p.is_square() {
        return Err(Error::invalid(format!(
            "spectral link check needs equal square matrices of size 1..={SPECTRAL_LINK_MAX_DIM}"
        )));
    }
    for m in [p, q] {
        let defect = projection_defect(m);
        if defect > 1e-10 {
            return Err(Error::NotAProjection { defect });
        }
    }
    let pqp = p * q * p;
    let pqp = 0.5 * (&pqp + pqp.transpose());
    let commutator = p * q - q * p;
    let minus_square = commutator.tr_mul(&commutator);
    let mut mapped: Vec<f64> = symmetric_eigenvalues(&pqp)?
        .into_iter()
        .flat_map(|l| {
            let v = (l * (1.0 - l)).max(0.0);
            [v, v]
        })
        .collect();
    mapped.sort_by(|a, b| b.total_cmp(a));
    mapped.truncate(dim);
    let mut spectrum = symmetric_eigenvalues(&minus_square)?;
    spectrum.reverse();
    let max_mismatch = mapped
        .iter()
        .zip(&spectrum)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let mapped_trace = 2.0 * (pqp.trace() - (&pqp * &pqp).trace());
    Ok(SpectralLinkReport {
        mapped,
        commutator: spectrum,
        max_mismatch,
        commutator_trace: minus_square.trace(),
        mapped_trace,
    })
}

/// Lower bound, entropy and upper bound of the entropy sandwich.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropySandwich {
    /// `||[Π, 1_Ω]||_2^2`
    pub lower: f64,
    pub entropy: f64,
    /// `2 ||[Π, 1_Ω]||_2^2 log(||[Π, 1_Ω]||_1 / ||[Π, 1_Ω]||_2^2)`
    pub upper: f64,
}

impl EntropySandwich {
    pub fn holds(&self, slack: f64) -> bool {
        self.lower <= self.entropy + slack && self.entropy <= self.upper + slack
    }
}

pub fn entropy_sandwich(sigma: &RestrictedSpectrum) -> Result<EntropySandwich> {
    let r = commutator_report(sigma);
    if r.j2_squared == 0.0 {
        return Err(Error::DegenerateSpectrum { entropy: r.entropy });
    }
    Ok(EntropySandwich {
        lower: r.j2_squared,
        entropy: r.entropy,
        upper: 2.0 * r.j2_squared * (r.j1 / r.j2_squared).ln(),
    })
}

/// Law of `X(Ω) = Σ Bernoulli(σ_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountingLaw {
    pub pmf: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    pub kappa3: f64,
    pub kappa4: f64,
}

pub fn counting_law(sigma: &RestrictedSpectrum) -> Result<CountingLaw> {
    let n = sigma.len();
    if n > MAX_BERNOULLI {
        return Err(Error::TooManyParameters {
            count: n,
            max: MAX_BERNOULLI,
        });
    }
    let mut pmf = vec![0.0; n + 1];
    pmf[0] = 1.0;
    for (t, &s) in sigma.sigma.iter().enumerate() {
        for k in (1..=t + 1).rev() {
            pmf[k] = pmf[k] * (1.0 - s) + pmf[k - 1] * s;
        }
        pmf[0] *= 1.0 - s;
    }
    for p in &mut pmf {
        *p = p.max(0.0);
    }
    let (mut mean, mut variance, mut kappa3, mut kappa4) = (0.0, 0.0, 0.0, 0.0);
    for &s in &sigma.sigma {
        let tau = s * (1.0 - s);
        mean += s;
        variance += tau;
        kappa3 += tau * (1.0 - 2.0 * s);
        kappa4 += tau * (1.0 - 6.0 * tau);
    }
    Ok(CountingLaw {
        pmf,
        mean,
        variance,
        kappa3,
        kappa4,
    })
}

impl CountingLaw {
    /// `(mean, variance, κ3, κ4)` computed from the pmf.
    pub fn pmf_cumulants(&self) -> [f64; 4] {
        let mean: f64 = self.pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        let central = |order: i32| -> f64 {
            self.pmf
                .iter()
                .enumerate()
                .map(|(k, p)| (k as f64 - mean).powi(order) * p)
                .sum()
        };
        let m2 = central(2);
        [mean, m2, central(3), central(4) - 3.0 * m2 * m2]
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let top = (x.floor() as usize).min(self.pmf.len() - 1);
        self.pmf[..=top].iter().sum::<f64>().min(1.0)
    }
}

/// Shape diagnostics of a counting law against its Gaussian limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianityReport {
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// `sup_k |F(k + 1/2) - Φ((k + 1/2 - mean)/sd)|`
    pub ks_half_integer: f64,
}

pub fn gaussianity_report(law: &CountingLaw) -> Result<GaussianityReport> {
    if !(law.variance > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let sd = law.variance.sqrt();
    let normal = Normal::new(law.mean, sd).map_err(|e| Error::invalid(e.to_string()))?;
    let mut cumulative = 0.0;
    let mut ks: f64 = 0.0;
    for (k, p) in law.pmf.iter().enumerate() {
        cumulative += p;
        let x = k as f64 + 0.5;
        ks = ks.max((cumulative.min(1.0) - normal.cdf(x)).abs());
    }
    // below the support the law's CDF is 0
    ks = ks.max(normal.cdf(-0.5));
    Ok(GaussianityReport {
        skewness: law.kappa3 / law.variance.powf(1.5),
        excess_kurtosis: law.kappa4 / (law.variance * law.variance),
        ks_half_integer: ks,
    })
}

/// `log det(I + Uᵀ diag(e^w - 1) U) = log E[exp(Σ_j w(x_j))]`.
pub fn laplace_transform(proj: &FermiProjector, weights: &[f64]) -> Result<f64> {
    if weights.len() != proj.nodes() {
        return Err(Error::invalid(format!(
            "expected {} weights, got {}",
            proj.nodes(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::invalid("weights must be finite"));
    }
    let shifted: Vec<f64> = weights.iter().map(|w| w.exp_m1()).collect();
    let mut a = proj.weighted_gram(&shifted);
    for i in 0..a.nrows() {
        a[(i, i)] += 1.0;
    }
    let lu = a.lu();
    let mut sign: f64 = lu.p().determinant();
    let mut log_abs = 0.0;
    let u = lu.u();
    for i in 0..u.nrows() {
        let d = u[(i, i)];
        if d == 0.0 {
            return Err(Error::SingularDeterminant { sign: 0.0 });
        }
        sign *= d.signum();
        log_abs += d.abs().ln();
    }
    if sign < 0.0 {
        return Err(Error::SingularDeterminant { sign });
    }
    Ok(log_abs)
}

/// `Cov(X(A), X(B)) = tr(G_{A∩B}) - tr(G_A G_B)`.
pub fn cross_covariance(proj: &FermiProjector, a: &Mask, b: &Mask) -> Result<f64> {
    for m in [a, b] {
        if m.indices().last().is_some_and(|&k| k >= proj.nodes()) {
            return Err(Error::invalid("mask index outside the grid"));
        }
    }
    let diag = proj.kernel_diagonal();
    let overlap: f64 = a.intersection(b).indices().iter().map(|&k| diag[k]).sum();
    let n = proj.rank();
    let rows_a = proj.rows(a.indices());
    let rows_b = proj.rows(b.indices());
    let cross = if n * (a.len() + b.len()) <= a.len() * b.len() {
        let ga = rows_a.tr_mul(&rows_a);
        let gb = rows_b.tr_mul(&rows_b);
        ga.component_mul(&gb).sum()
    } else {
        (&rows_a * rows_b.transpose()).norm_squared()
    };
    Ok(overlap - cross)
}

/// `Var(Σ_j g(x_j)) = tr(Uᵀ D_{g^2} U) - ||Uᵀ D_g U||_F^2`.
pub fn observable_variance(proj: &FermiProjector, g: &[f64]) -> Result<f64> {
    if g.len() != proj.nodes() {
        return Err(Error::invalid("observable length does not match the grid"));
    }
    let diag = proj.kernel_diagonal();
    let first: f64 = g.iter().zip(&diag).map(|(v, d)| v * v * d).sum();
    Ok(first - proj.weighted_gram(g).norm_squared())
}

/// Test functions `g` for [`spectral_functional`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpectralFunction {
    /// `λ(1-λ)`
    Variance,
    /// binary entropy
    Entropy,
    /// `log(λ^α + (1-λ)^α) / (1 - α)`
    Renyi { alpha: f64 },
    /// `Σ_k coeffs[k] λ^k`
    Poly { coeffs: Vec<f64> },
}

impl SpectralFunction {
    pub fn eval(&self, lambda: f64) -> f64 {
        match self {
            SpectralFunction::Variance => lambda * (1.0 - lambda),
            SpectralFunction::Entropy => binary_entropy(lambda),
            SpectralFunction::Renyi { alpha } => {
                if (*alpha - 1.0).abs() < 1e-12 {
                    binary_entropy(lambda)
                } else {
                    (lambda.powf(*alpha) + (1.0 - lambda).powf(*alpha)).ln() / (1.0 - alpha)
                }
            }
            SpectralFunction::Poly { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * lambda + c),
        }
    }

    pub fn name(&self) -> String {
        match self {
            SpectralFunction::Variance => "variance".into(),
            SpectralFunction::Entropy => "entropy".into(),
            SpectralFunction::Renyi { alpha } => format!("renyi({alpha})"),
            SpectralFunction::Poly { coeffs } => format!("poly({coeffs:?})"),
        }
    }
}

/// `Σ g(σ_n)`.
pub fn spectral_functional<G: Fn(f64) -> f64>(sigma: &RestrictedSpectrum, g: G) -> f64 {
    sigma.sigma.iter().map(|&s| g(s.clamp(0.0, 1.0))).sum()
}
