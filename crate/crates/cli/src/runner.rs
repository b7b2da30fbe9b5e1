//! Evaluates the cells of an experiment and assembles the report.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use fbl_core::fermion::{
    commutator_report, counting_law, cross_covariance, entropy_sandwich, fermi_projector,
    gaussianity_report, observable_variance, restricted_spectrum, spectral_functional,
    FermiProjector, RestrictedSpectrum, SpectralFunction,
};
use fbl_core::grid::{boundary_collision_volume, region_mask, Grid, Mask, Region};
use fbl_core::linalg::{symmetric_eigenvalues, DENSE_LIMIT};
use fbl_core::oscint::{
    ball_ft_asymptotic, ball_indicator_ft, brute_force_oscillatory, integral_estimate, Amplitude,
    AnnularBump, GaussianAmplitude, OddGaussianAmplitude, StationaryPhaseProblem,
};
use fbl_core::predictions::{variance_coefficient, widom_integral, entropy_variance_target, Observable};
use fbl_core::sampling::{empirical_joint, one_point_chi_square, sample};
use fbl_core::schrodinger::{assemble_with, AssembleOptions, SchrodingerProblem};
use fbl_core::spectral::{eigendecompose, weyl_prediction};
use fbl_core::stats::{linear_fit, log_slope_fit, LineFit};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{
    AmplitudeKind, CollisionSpec, Experiment, ExperimentConfig, ExperimentKind, OscintSpec,
    ProblemSpec,
};
use crate::error::{FblError, Result};

/// Fixed-schema numeric table; one row per successful cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

/// A cell (or a shared prediction) that raised a numerical error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellFailure {
    /// Position in the config's parameter list; `None` for shared stages.
    pub cell: Option<usize>,
    pub parameter: Option<f64>,
    pub stage: String,
    pub error: String,
}

/// One polyline of the plot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub table: Table,
    pub fits: BTreeMap<String, LineFit>,
    pub ratios: BTreeMap<String, f64>,
    pub failures: Vec<CellFailure>,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Only recorded on request so that outputs stay byte-reproducible.
    pub wall_time_seconds: Option<f64>,
}

impl SweepResult {
    fn empty(kind: ExperimentKind, seed: u64, header: &[&str]) -> Self {
        Self {
            kind,
            seed,
            table: Table::new(header),
            fits: BTreeMap::new(),
            ratios: BTreeMap::new(),
            failures: Vec::new(),
            x_label: "log(1/hbar)".into(),
            y_label: String::new(),
            series: Vec::new(),
            wall_time_seconds: None,
        }
    }

    pub fn is_success(&self) -> bool {
        self.failures.is_empty()
    }

    fn fail(&mut self, cell: Option<usize>, parameter: Option<f64>, stage: &str, error: impl ToString) {
        self.failures.push(CellFailure {
            cell,
            parameter,
            stage: stage.into(),
            error: error.to_string(),
        });
    }

    /// Collects per-cell rows in config order, recording failures.
    fn gather(&mut self, parameters: &[f64], rows: Vec<fbl_core::Result<Vec<f64>>>) {
        for (i, (p, row)) in parameters.iter().zip(rows).enumerate() {
            match row {
                Ok(r) => self.table.rows.push(r),
                Err(e) => self.fail(Some(i), Some(*p), "cell", e),
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub timing: bool,
}

/// Occupied ground state of one cell.
pub struct GroundState {
    pub problem: SchrodingerProblem,
    pub projector: FermiProjector,
}

pub fn assemble_cell(spec: &ProblemSpec, hbar: f64) -> fbl_core::Result<SchrodingerProblem> {
    let grid = Grid::new(spec.dim, spec.half_width, spec.points_for(hbar))?;
    assemble_with(
        &grid,
        &spec.potential,
        hbar,
        spec.mu,
        AssembleOptions {
            wall_margin: spec.wall_margin,
            points_per_wavelength: spec.points_per_wavelength,
        },
    )
}

pub fn ground_state(spec: &ProblemSpec, hbar: f64) -> fbl_core::Result<GroundState> {
    let problem = assemble_cell(spec, hbar)?;
    let spectral = eigendecompose(&problem, spec.mu)?;
    let projector = fermi_projector(&spectral, spec.mu)?;
    Ok(GroundState { problem, projector })
}

/// Number of eigenvalues below `mu`, without eigenvectors.
pub fn occupied_count(problem: &SchrodingerProblem) -> fbl_core::Result<usize> {
    let mu = problem.mu();
    if problem.grid().dim() == 1 {
        let values = problem.tridiagonal()?.eigenvalues()?;
        return Ok(values.iter().filter(|&&l| l < mu).count());
    }
    if let Some(factors) = problem.separable_factors() {
        let (ax, ay) = factors?;
        let lx = ax.eigenvalues()?;
        let ly = ay.eigenvalues()?;
        return Ok(lx
            .iter()
            .map(|a| ly.iter().filter(|&&b| a + b < mu).count())
            .sum());
    }
    if problem.len() > DENSE_LIMIT {
        return Err(fbl_core::Error::MatrixTooLarge {
            size: problem.len(),
            max: DENSE_LIMIT,
        });
    }
    let values = symmetric_eigenvalues(&problem.to_dense())?;
    Ok(values.iter().filter(|&&l| l < mu).count())
}

fn mask_of(problem: &SchrodingerProblem, region: &Region) -> fbl_core::Result<Mask> {
    Ok(region_mask(problem.grid(), region)?.mask)
}

fn restricted(state: &GroundState, region: &Region) -> fbl_core::Result<RestrictedSpectrum> {
    restricted_spectrum(&state.projector, &mask_of(&state.problem, region)?)
}

/// `(2 pi hbar)^{n-1}`.
fn boundary_scale(dim: usize, hbar: f64) -> f64 {
    (2.0 * PI * hbar).powi(dim as i32 - 1)
}

pub fn run(experiment: &Experiment, options: RunOptions) -> Result<SweepResult> {
    let config = &experiment.config;
    config.validate()?;
    let seed = options.seed.unwrap_or(config.seed);
    let start = Instant::now();
    let mut result = match config.kind {
        ExperimentKind::VarianceSweep
        | ExperimentKind::EntropySweep
        | ExperimentKind::J1Sweep
        | ExperimentKind::Widom
        | ExperimentKind::Clt => spectral_sweep(config, seed)?,
        ExperimentKind::Covariance => covariance_sweep(config, seed)?,
        ExperimentKind::Weyl => weyl_sweep(config, seed)?,
        ExperimentKind::Sample => sample_run(config, seed)?,
        ExperimentKind::Oscint => oscint_run(config, seed)?,
        ExperimentKind::Collision => collision_run(config, seed)?,
    };
    if options.timing {
        result.wall_time_seconds = Some(start.elapsed().as_secs_f64());
    }
    Ok(result)
}

fn problem_of(config: &ExperimentConfig) -> Result<&ProblemSpec> {
    config
        .problem
        .as_ref()
        .ok_or_else(|| FblError::config("missing problem"))
}

fn region_of(config: &ExperimentConfig) -> Result<&Region> {
    config
        .region
        .as_ref()
        .ok_or_else(|| FblError::config("missing region"))
}

/// Data series and its fitted line over `log(1/hbar)`.
fn fit_series(result: &mut SweepResult, name: &str, column: &str) -> Option<LineFit> {
    let hbar = result.table.column("hbar")?;
    let y = result.table.column(column)?;
    let points: Vec<(f64, f64)> = hbar.iter().copied().zip(y.iter().copied()).collect();
    let mut plotted: Vec<(f64, f64)> = points.iter().map(|(h, v)| ((1.0 / h).ln(), *v)).collect();
    plotted.sort_by(|a, b| a.0.total_cmp(&b.0));
    result.series.push(Series {
        name: name.into(),
        points: plotted.clone(),
    });
    let fit = log_slope_fit(&points).ok()?;
    if let (Some(first), Some(last)) = (plotted.first(), plotted.last()) {
        result.series.push(Series {
            name: format!("{name} fit"),
            points: [first.0, last.0]
                .iter()
                .map(|&x| (x, fit.slope * x + fit.intercept))
                .collect(),
        });
    }
    result.fits.insert(name.into(), fit);
    Some(fit)
}

fn finest_value(table: &Table, column: &str) -> Option<f64> {
    let hbar = table.column("hbar")?;
    let y = table.column(column)?;
    hbar.iter()
        .zip(y)
        .min_by(|a, b| a.0.total_cmp(b.0))
        .map(|(_, v)| v)
}

fn spectral_sweep(config: &ExperimentConfig, seed: u64) -> Result<SweepResult> {
    let spec = problem_of(config)?;
    let region = region_of(config)?;
    let dim = spec.dim;
    let kind = config.kind;
    let header: &[&str] = match kind {
        ExperimentKind::VarianceSweep => &["hbar", "N", "variance", "j2_sq", "j1", "entropy", "normalized", "prediction_C"],
        ExperimentKind::EntropySweep => &["hbar", "N", "variance", "entropy", "lower", "upper", "entropy_over_variance", "normalized"],
        ExperimentKind::J1Sweep => &["hbar", "N", "j1", "j2_sq", "normalized"],
        ExperimentKind::Widom => &["hbar", "N", "functional", "normalized", "c_omega", "widom_limit"],
        _ => &["hbar", "N", "mean", "variance", "skewness", "excess_kurtosis", "ks_half_integer"],
    };
    let mut result = SweepResult::empty(kind, seed, header);
    let unit = Observable::default();
    let weight = match kind {
        ExperimentKind::VarianceSweep => &config.observable,
        _ => &unit,
    };
    let coefficient = match variance_coefficient(region, &spec.potential, spec.mu, weight) {
        Ok(c) => c,
        Err(e) => {
            result.fail(None, None, "prediction", e);
            f64::NAN
        }
    };
    let function = config.function.clone().unwrap_or(SpectralFunction::Variance);
    let g_integral = if kind == ExperimentKind::Widom {
        match widom_integral(|l| function.eval(l)) {
            Ok(v) => v,
            Err(e) => {
                result.fail(None, None, "prediction", e);
                f64::NAN
            }
        }
    } else {
        f64::NAN
    };
    let rows: Vec<fbl_core::Result<Vec<f64>>> = config
        .hbar
        .par_iter()
        .map(|&hbar| {
            let state = ground_state(spec, hbar)?;
            let sigma = restricted(&state, region)?;
            let n = state.projector.rank() as f64;
            let report = commutator_report(&sigma);
            let scale = boundary_scale(dim, hbar);
            Ok(match kind {
                ExperimentKind::VarianceSweep => {
                    let variance = match &config.observable {
                        Observable::Constant { value } => value * value * report.variance,
                        f => {
                            let mask = mask_of(&state.problem, region)?;
                            let grid = state.problem.grid();
                            let g: Vec<f64> = (0..grid.len())
                                .map(|k| if mask.contains(k) { f.eval(&grid.node(k)) } else { 0.0 })
                                .collect();
                            observable_variance(&state.projector, &g)?
                        }
                    };
                    vec![hbar, n, variance, report.j2_squared, report.j1, report.entropy, variance * scale, coefficient]
                }
                ExperimentKind::EntropySweep => {
                    let sandwich = entropy_sandwich(&sigma)?;
                    vec![
                        hbar,
                        n,
                        report.variance,
                        report.entropy,
                        sandwich.lower,
                        sandwich.upper,
                        report.entropy / report.variance,
                        report.entropy * scale,
                    ]
                }
                ExperimentKind::J1Sweep => {
                    let log = (1.0 / hbar).ln();
                    vec![hbar, n, report.j1, report.j2_squared, report.j1 * hbar.powi(dim as i32 - 1) / (log * log)]
                }
                ExperimentKind::Widom => {
                    let value = spectral_functional(&sigma, |l| function.eval(l));
                    vec![hbar, n, value, value * scale, coefficient, 2.0 * coefficient * g_integral]
                }
                _ => {
                    let law = counting_law(&sigma)?;
                    let shape = gaussianity_report(&law)?;
                    vec![hbar, n, law.mean, law.variance, shape.skewness, shape.excess_kurtosis, shape.ks_half_integer]
                }
            })
        })
        .collect();
    result.gather(&config.hbar, rows);
    match kind {
        ExperimentKind::VarianceSweep => {
            result.y_label = "variance (2 pi hbar)^(n-1)".into();
            if let Some(fit) = fit_series(&mut result, "normalized variance", "normalized") {
                result.ratios.insert("slope_over_prediction".into(), fit.slope / coefficient);
            }
            result.ratios.insert("prediction_C".into(), coefficient);
        }
        ExperimentKind::EntropySweep => {
            result.y_label = "entropy (2 pi hbar)^(n-1)".into();
            let target = entropy_variance_target();
            if let Some(fit) = fit_series(&mut result, "normalized entropy", "normalized") {
                result
                    .ratios
                    .insert("slope_over_target".into(), fit.slope / (target * coefficient));
            }
            if let Some(r) = finest_value(&result.table, "entropy_over_variance") {
                result.ratios.insert("entropy_over_variance_finest".into(), r);
            }
            let violations = result
                .table
                .rows
                .iter()
                .filter(|r| !(r[4] <= r[3] + 1e-10 && r[3] <= r[5] + 1e-10))
                .count();
            result.ratios.insert("sandwich_violations".into(), violations as f64);
            result.ratios.insert("entropy_variance_target".into(), target);
        }
        ExperimentKind::J1Sweep => {
            result.y_label = "j1 hbar^(n-1) / log^2(1/hbar)".into();
            let _ = fit_series(&mut result, "normalized j1", "normalized");
            result.fits.clear();
            result.series.retain(|s| !s.name.ends_with("fit"));
            let violations = result.table.rows.iter().filter(|r| r[2] < r[3]).count();
            result.ratios.insert("j1_below_j2_sq".into(), violations as f64);
        }
        ExperimentKind::Widom => {
            result.y_label = format!("sum g(sigma) (2 pi hbar)^(n-1), g = {}", function.name());
            if let Some(fit) = fit_series(&mut result, "normalized functional", "normalized") {
                result
                    .ratios
                    .insert("slope_over_c_omega".into(), fit.slope / (coefficient * g_integral));
                result
                    .ratios
                    .insert("slope_over_widom_limit".into(), fit.slope / (2.0 * coefficient * g_integral));
            }
            result.ratios.insert("c_omega".into(), coefficient);
            result.ratios.insert("g_integral".into(), g_integral);
        }
        _ => {
            result.y_label = "skewness, excess kurtosis".into();
            let hbar = result.table.column("hbar").unwrap_or_default();
            for (name, column) in [("skewness", "skewness"), ("excess kurtosis", "excess_kurtosis")] {
                let y = result.table.column(column).unwrap_or_default();
                let mut points: Vec<(f64, f64)> =
                    hbar.iter().zip(y).map(|(h, v)| ((1.0 / h).ln(), v)).collect();
                points.sort_by(|a, b| a.0.total_cmp(&b.0));
                result.series.push(Series { name: name.into(), points });
            }
        }
    }
    Ok(result)
}

fn covariance_sweep(config: &ExperimentConfig, seed: u64) -> Result<SweepResult> {
    let spec = problem_of(config)?;
    let first = region_of(config)?;
    let second = config
        .second_region
        .as_ref()
        .ok_or_else(|| FblError::config("missing second_region"))?;
    let mut result = SweepResult::empty(config.kind, seed, &["hbar", "N", "covariance", "normalized"]);
    let rows = config
        .hbar
        .par_iter()
        .map(|&hbar| {
            let state = ground_state(spec, hbar)?;
            let a = mask_of(&state.problem, first)?;
            let b = mask_of(&state.problem, second)?;
            let cov = cross_covariance(&state.projector, &a, &b)?;
            let normalized = cov.abs() * boundary_scale(spec.dim, hbar) / (1.0 / hbar).ln();
            Ok(vec![hbar, state.projector.rank() as f64, cov, normalized])
        })
        .collect();
    result.gather(&config.hbar, rows);
    result.y_label = "|cov| (2 pi hbar)^(n-1) / log(1/hbar)".into();
    let _ = fit_series(&mut result, "normalized covariance", "normalized");
    result.fits.clear();
    result.series.retain(|s| !s.name.ends_with("fit"));
    if let Some(series) = result.series.first() {
        if let (Some(coarse), Some(fine)) = (series.points.first(), series.points.last()) {
            result.ratios.insert("finest_over_coarsest".into(), fine.1 / coarse.1);
        }
    }
    Ok(result)
}

fn weyl_sweep(config: &ExperimentConfig, seed: u64) -> Result<SweepResult> {
    let spec = problem_of(config)?;
    let mut result = SweepResult::empty(config.kind, seed, &["hbar", "N", "predicted", "ratio"]);
    let rows = config
        .hbar
        .par_iter()
        .map(|&hbar| {
            let problem = assemble_cell(spec, hbar)?;
            let n = occupied_count(&problem)? as f64;
            let predicted = weyl_prediction(&spec.potential, spec.dim, spec.mu, hbar)?;
            Ok(vec![hbar, n, predicted, n / predicted])
        })
        .collect();
    result.gather(&config.hbar, rows);
    result.y_label = "N / N_weyl".into();
    let _ = fit_series(&mut result, "count ratio", "ratio");
    result.fits.clear();
    result.series.retain(|s| !s.name.ends_with("fit"));
    if let Some(r) = finest_value(&result.table, "ratio") {
        result.ratios.insert("ratio_finest".into(), r);
    }
    Ok(result)
}

fn sample_run(config: &ExperimentConfig, seed: u64) -> Result<SweepResult> {
    let spec = problem_of(config)?;
    let sampling = config
        .sample
        .as_ref()
        .ok_or_else(|| FblError::config("missing sample"))?;
    let mut result = SweepResult::empty(config.kind, seed, &[]);
    result.x_label = "node".into();
    result.y_label = "occupation probability".into();
    let state = match ground_state(spec, sampling.hbar) {
        Ok(s) => s,
        Err(e) => {
            result.fail(Some(0), Some(sampling.hbar), "ground state", e);
            return Ok(result);
        }
    };
    let batch = match sample(&state.projector, sampling.count, seed) {
        Ok(b) => b,
        Err(e) => {
            result.fail(Some(0), Some(sampling.hbar), "sampler", e);
            return Ok(result);
        }
    };
    let n = state.projector.rank();
    result.table.header = (1..=n).map(|i| format!("node_{i}")).collect();
    result.table.rows = batch
        .configurations
        .iter()
        .map(|c| c.iter().map(|&k| k as f64).collect())
        .collect();
    let diagonal = state.projector.kernel_diagonal();
    match one_point_chi_square(&batch, &diagonal) {
        Ok(test) => {
            result.ratios.insert("chi_square_statistic".into(), test.statistic);
            result.ratios.insert("chi_square_dof".into(), test.dof as f64);
            result.ratios.insert("chi_square_p_value".into(), test.p_value);
        }
        Err(e) => result.fail(None, None, "chi-square", e),
    }
    if let Some(region) = &config.region {
        let stats = mask_of(&state.problem, region).and_then(|mask| {
            let sigma = restricted_spectrum(&state.projector, &mask)?;
            let joint = empirical_joint(&batch, std::slice::from_ref(&mask))?;
            Ok((commutator_report(&sigma).variance, sigma.trace, joint))
        });
        match stats {
            Ok((variance, mean, joint)) => {
                result.ratios.insert("predicted_mean".into(), mean);
                result.ratios.insert("empirical_mean".into(), joint.means[0]);
                result.ratios.insert("predicted_variance".into(), variance);
                result.ratios.insert("empirical_variance".into(), joint.covariance[(0, 0)]);
                result
                    .ratios
                    .insert("variance_std_error".into(), joint.covariance_std_errors[(0, 0)]);
            }
            Err(e) => result.fail(None, None, "region statistics", e),
        }
    }
    let frequencies = batch.node_frequencies(diagonal.len());
    let grid = state.problem.grid();
    let position = |k: usize| if grid.dim() == 1 { grid.node(k)[0] } else { k as f64 };
    result.series.push(Series {
        name: "empirical".into(),
        points: frequencies
            .iter()
            .enumerate()
            .map(|(k, &f)| (position(k), f as f64 / sampling.count as f64))
            .collect(),
    });
    result.series.push(Series {
        name: "kernel diagonal".into(),
        points: diagonal.iter().enumerate().map(|(k, &d)| (position(k), d)).collect(),
    });
    Ok(result)
}

fn oscint_problem(
    hessian: &[f64],
    amplitude: Arc<dyn Amplitude>,
    delta: f64,
    hbar: f64,
) -> fbl_core::Result<StationaryPhaseProblem> {
    let dim = if hessian.len() == 4 { 2 } else { 1 };
    StationaryPhaseProblem::new(dim, hessian, amplitude, delta, hbar)
}

fn log_fit(points: &[(f64, f64)]) -> Option<LineFit> {
    let usable: Vec<&(f64, f64)> = points.iter().filter(|p| p.1 > 0.0 && p.1.is_finite()).collect();
    if usable.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = usable.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|p| p.1.ln()).collect();
    linear_fit(&xs, &ys).ok()
}

/// Largest `|residual|` and its abscissa in each of `windows` equal pieces.
pub fn residual_envelope(xs: &[f64], residuals: &[f64], windows: usize) -> Vec<(f64, f64)> {
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    let width = (hi - lo) / windows as f64;
    let mut best = vec![(f64::NAN, 0.0f64); windows];
    for (&x, &r) in xs.iter().zip(residuals) {
        let w = (((x - lo) / width) as usize).min(windows - 1);
        if r.abs() >= best[w].1 {
            best[w] = (x, r.abs());
        }
    }
    best.into_iter().filter(|p| p.0.is_finite()).collect()
}

fn oscint_run(config: &ExperimentConfig, seed: u64) -> Result<SweepResult> {
    let spec = config
        .oscint
        .as_ref()
        .ok_or_else(|| FblError::config("missing oscint"))?;
    match spec {
        OscintSpec::StationaryPhase {
            hessian,
            delta_exponent,
            amplitude,
            exact_derivatives,
        } => {
            let mut result = SweepResult::empty(
                config.kind,
                seed,
                &["hbar", "delta", "ratio", "oracle_re", "oracle_im", "remainder_1", "remainder_2", "remainder_3"],
            );
            let rows = config
                .hbar
                .par_iter()
                .map(|&hbar| {
                    let delta = hbar.powf(*delta_exponent);
                    let amp: Arc<dyn Amplitude> = match amplitude {
                        AmplitudeKind::Gaussian if *exact_derivatives => {
                            Arc::new(GaussianAmplitude::new(delta).with_exact_derivatives())
                        }
                        AmplitudeKind::Gaussian => Arc::new(GaussianAmplitude::new(delta)),
                        AmplitudeKind::OddGaussian => Arc::new(OddGaussianAmplitude { delta }),
                    };
                    let problem = oscint_problem(hessian, amp, delta, hbar)?;
                    let oracle = brute_force_oscillatory(&problem)?;
                    let scale = hbar.powf(0.5 * problem.dim() as f64);
                    let mut row = vec![hbar, delta, hbar / (delta * delta), oracle.re, oracle.im];
                    for order in 1..=3 {
                        row.push((oracle - integral_estimate(&problem, order)?).norm() / scale);
                    }
                    Ok(row)
                })
                .collect();
            result.gather(&config.hbar, rows);
            result.x_label = "log(hbar/delta^2)".into();
            result.y_label = "log remainder".into();
            let ratio = result.table.column("ratio").unwrap_or_default();
            for order in 1..=3 {
                let rem = result.table.column(&format!("remainder_{order}")).unwrap_or_default();
                let mut points: Vec<(f64, f64)> = ratio.iter().copied().zip(rem).collect();
                points.sort_by(|a, b| a.0.total_cmp(&b.0));
                if let Some(fit) = log_fit(&points) {
                    result.ratios.insert(format!("remainder_slope_{order}"), fit.slope);
                }
                result.series.push(Series {
                    name: format!("order {order}"),
                    points: points
                        .iter()
                        .filter(|p| p.1 > 0.0)
                        .map(|p| (p.0.ln(), p.1.ln()))
                        .collect(),
                });
            }
            Ok(result)
        }
        OscintSpec::NonStationary { hessian, inner, outer } => {
            let mut result = SweepResult::empty(config.kind, seed, &["hbar", "integral_re", "integral_im", "magnitude"]);
            let bump: Arc<dyn Amplitude> = Arc::new(AnnularBump {
                inner: *inner,
                outer: *outer,
            });
            let rows = config
                .hbar
                .par_iter()
                .map(|&hbar| {
                    let problem = oscint_problem(hessian, bump.clone(), 1.0, hbar)?;
                    let value = brute_force_oscillatory(&problem)?;
                    let magnitude = value.norm() / hbar.powf(0.5 * problem.dim() as f64);
                    Ok(vec![hbar, value.re, value.im, magnitude])
                })
                .collect();
            result.gather(&config.hbar, rows);
            result.x_label = "log(hbar)".into();
            result.y_label = "log |I| hbar^(-d/2)".into();
            let hbar = result.table.column("hbar").unwrap_or_default();
            let magnitude = result.table.column("magnitude").unwrap_or_default();
            let mut points: Vec<(f64, f64)> = hbar.into_iter().zip(magnitude).collect();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            if let Some(fit) = log_fit(&points) {
                result.ratios.insert("decay_slope".into(), fit.slope);
            }
            result.series.push(Series {
                name: "magnitude".into(),
                points: points
                    .iter()
                    .filter(|p| p.1 > 0.0)
                    .map(|p| (p.0.ln(), p.1.ln()))
                    .collect(),
            });
            Ok(result)
        }
        OscintSpec::Bessel {
            n,
            xi_min,
            xi_max,
            points,
            windows,
        } => {
            let mut result = SweepResult::empty(config.kind, seed, &["xi", "exact", "asymptotic", "residual"]);
            let xs: Vec<f64> = (0..*points)
                .map(|i| xi_min + (xi_max - xi_min) * i as f64 / (*points - 1) as f64)
                .collect();
            let rows: Vec<fbl_core::Result<Vec<f64>>> = xs
                .par_iter()
                .map(|&xi| {
                    let exact = ball_indicator_ft(*n, xi)?;
                    let asymptotic = ball_ft_asymptotic(*n, xi)?;
                    Ok(vec![xi, exact, asymptotic, exact - asymptotic])
                })
                .collect();
            result.gather(&xs, rows);
            result.x_label = "xi".into();
            result.y_label = "ball transform".into();
            let xi = result.table.column("xi").unwrap_or_default();
            let residual = result.table.column("residual").unwrap_or_default();
            let max_residual = residual.iter().fold(0.0f64, |m, r| m.max(r.abs()));
            result.ratios.insert("max_residual".into(), max_residual);
            result
                .ratios
                .insert("expected_residual_slope".into(), -(*n as f64 + 3.0) / 2.0);
            // below rounding the residual has no power law to fit
            if max_residual > 1e-12 && !xi.is_empty() {
                let envelope = residual_envelope(&xi, &residual, *windows);
                if let Some(fit) = log_fit(&envelope) {
                    result.ratios.insert("residual_slope".into(), fit.slope);
                }
            }
            for (name, column) in [("exact", "exact"), ("asymptotic", "asymptotic")] {
                let y = result.table.column(column).unwrap_or_default();
                result.series.push(Series {
                    name: name.into(),
                    points: xi.iter().copied().zip(y).collect(),
                });
            }
            Ok(result)
        }
    }
}

fn collision_run(config: &ExperimentConfig, seed: u64) -> Result<SweepResult> {
    let spec: &CollisionSpec = config
        .collision
        .as_ref()
        .ok_or_else(|| FblError::config("missing collision"))?;
    let region = region_of(config)?;
    let mut result = SweepResult::empty(config.kind, seed, &["radius", "value", "std_error", "normalized"]);
    let grid = Grid::new(spec.dim, spec.half_width, spec.points_per_axis)
        .map_err(|e| FblError::config(e.to_string()))?;
    let boundary = region.boundary_measure();
    let rows = spec
        .radii
        .par_iter()
        .map(|&r| {
            let v = boundary_collision_volume(&grid, region, r, spec.budget, seed)?;
            Ok(vec![r, v.value, v.std_error, v.value / (boundary * r.powi(spec.dim as i32 + 1))])
        })
        .collect();
    result.gather(&spec.radii, rows);
    result.x_label = "log radius".into();
    result.y_label = "log collision volume".into();
    let radius = result.table.column("radius").unwrap_or_default();
    let value = result.table.column("value").unwrap_or_default();
    let mut points: Vec<(f64, f64)> = radius.into_iter().zip(value).collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(fit) = log_fit(&points) {
        result.ratios.insert("scaling_exponent".into(), fit.slope);
    }
    result.ratios.insert("expected_exponent".into(), spec.dim as f64 + 1.0);
    result.series.push(Series {
        name: "collision volume".into(),
        points: points
            .iter()
            .filter(|p| p.1 > 0.0)
            .map(|p| (p.0.ln(), p.1.ln()))
            .collect(),
    });
    Ok(result)
}
