//! Experiment configuration, parsed from TOML.

use std::path::PathBuf;

use fbl_core::grid::Region;
use fbl_core::predictions::Observable;
use fbl_core::schrodinger::{required_points, Potential};
use fbl_core::fermion::SpectralFunction;
use serde::{Deserialize, Serialize};

use crate::error::{FblError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    VarianceSweep,
    EntropySweep,
    J1Sweep,
    Widom,
    Clt,
    Covariance,
    Sample,
    Weyl,
    Oscint,
    Collision,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::VarianceSweep => "variance-sweep",
            ExperimentKind::EntropySweep => "entropy-sweep",
            ExperimentKind::J1Sweep => "j1-sweep",
            ExperimentKind::Widom => "widom",
            ExperimentKind::Clt => "clt",
            ExperimentKind::Covariance => "covariance",
            ExperimentKind::Sample => "sample",
            ExperimentKind::Weyl => "weyl",
            ExperimentKind::Oscint => "oscint",
            ExperimentKind::Collision => "collision",
        }
    }

    /// Kinds that fit `y = A log(1/hbar) + B` and so need four cells.
    pub fn fits_log_slope(self) -> bool {
        matches!(
            self,
            ExperimentKind::VarianceSweep | ExperimentKind::EntropySweep | ExperimentKind::Widom
        )
    }

    /// Kinds whose cells are ground states of a Schrödinger problem.
    pub fn needs_problem(self) -> bool {
        !matches!(self, ExperimentKind::Oscint | ExperimentKind::Collision)
    }
}

fn default_points_per_wavelength() -> f64 {
    8.0
}

fn default_wall_margin() -> f64 {
    0.5
}

/// Box, potential and Fermi level shared by every cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub dim: usize,
    pub half_width: f64,
    pub mu: f64,
    pub potential: Potential,
    #[serde(default = "default_points_per_wavelength")]
    pub points_per_wavelength: f64,
    #[serde(default = "default_wall_margin")]
    pub wall_margin: f64,
    /// Fixed resolution; by default each cell takes the coarsest grid
    /// meeting the resolution rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points_per_axis: Option<usize>,
}

impl ProblemSpec {
    pub fn points_for(&self, hbar: f64) -> usize {
        self.points_per_axis.unwrap_or_else(|| {
            required_points(
                self.half_width,
                &self.potential,
                hbar,
                self.mu,
                self.points_per_wavelength,
            )
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSpec {
    pub count: usize,
    pub hbar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmplitudeKind {
    #[default]
    Gaussian,
    OddGaussian,
}

fn default_delta_exponent() -> f64 {
    0.4
}

fn default_hessian() -> Vec<f64> {
    vec![1.0]
}

fn default_windows() -> usize {
    18
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OscintSpec {
    /// Remainder of the truncated expansion with `delta = hbar^exponent`.
    StationaryPhase {
        #[serde(default = "default_hessian")]
        hessian: Vec<f64>,
        #[serde(default = "default_delta_exponent")]
        delta_exponent: f64,
        #[serde(default)]
        amplitude: AmplitudeKind,
        #[serde(default)]
        exact_derivatives: bool,
    },
    /// Amplitude on an annulus avoiding the stationary point.
    NonStationary {
        #[serde(default = "default_hessian")]
        hessian: Vec<f64>,
        inner: f64,
        outer: f64,
    },
    /// Ball Fourier transform against its leading asymptotic.
    Bessel {
        n: usize,
        xi_min: f64,
        xi_max: f64,
        points: usize,
        #[serde(default = "default_windows")]
        windows: usize,
    },
}

fn default_collision_budget() -> usize {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollisionSpec {
    pub dim: usize,
    pub half_width: f64,
    pub points_per_axis: usize,
    pub radii: Vec<f64>,
    #[serde(default = "default_collision_budget")]
    pub budget: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hbar: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Region>,
    /// Second region of a covariance experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_region: Option<Region>,
    #[serde(default)]
    pub observable: Observable,
    /// `g` of a Widom experiment; `λ(1-λ)` by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<SpectralFunction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oscint: Option<OscintSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collision: Option<CollisionSpec>,
}

/// A configuration together with the exact text it was read from.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub source: String,
}

impl Experiment {
    pub fn from_toml(source: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(source)?;
        config.validate()?;
        Ok(Self {
            config,
            source: source.to_owned(),
        })
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| FblError::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Serializes a programmatically built config so it can be echoed.
    pub fn from_config(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let source = toml::to_string(&config).map_err(|e| FblError::config(e.to_string()))?;
        Ok(Self { config, source })
    }
}

fn check_hbar_list(hbar: &[f64], need_fit: bool) -> Result<()> {
    if hbar.is_empty() {
        return Err(FblError::config("hbar list is empty"));
    }
    if hbar.iter().any(|h| !(*h > 0.0 && *h <= 1.0)) {
        return Err(FblError::config("every hbar must lie in (0, 1]"));
    }
    let mut sorted = hbar.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(FblError::config("hbar values must be distinct"));
    }
    if need_fit && hbar.len() < 4 {
        return Err(FblError::config(format!(
            "a log-slope fit needs at least 4 hbar values, got {}",
            hbar.len()
        )));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let kind = self.kind;
        let missing = |what: &str| FblError::config(format!("{} requires `{what}`", kind.name()));
        if kind.needs_problem() {
            let problem = self.problem.as_ref().ok_or_else(|| missing("problem"))?;
            if !(1..=2).contains(&problem.dim) {
                return Err(FblError::config(format!("dimension {} is not supported", problem.dim)));
            }
            problem
                .potential
                .validate(problem.dim)
                .map_err(|e| FblError::config(e.to_string()))?;
            if !(problem.half_width > 0.0) {
                return Err(FblError::config("half_width must be positive"));
            }
            if !(problem.points_per_wavelength > 0.0) {
                return Err(FblError::config("points_per_wavelength must be positive"));
            }
            for region in [&self.region, &self.second_region].into_iter().flatten() {
                region.validate().map_err(|e| FblError::config(e.to_string()))?;
                if region.dim() != problem.dim {
                    return Err(FblError::config("region dimension differs from the problem"));
                }
            }
        }
        match kind {
            ExperimentKind::Sample => {
                let spec = self.sample.as_ref().ok_or_else(|| missing("sample"))?;
                if spec.count == 0 {
                    return Err(FblError::config("sample count must be positive"));
                }
                check_hbar_list(&[spec.hbar], false)?;
            }
            ExperimentKind::Oscint => {
                let spec = self.oscint.as_ref().ok_or_else(|| missing("oscint"))?;
                match spec {
                    OscintSpec::Bessel {
                        n,
                        xi_min,
                        xi_max,
                        points,
                        windows,
                    } => {
                        if !(1..=3).contains(n) {
                            return Err(FblError::config(format!("ball dimension {n} is not supported")));
                        }
                        if !(*xi_min >= 5.0 && xi_max > xi_min) || *points < 2 || *windows < 2 {
                            return Err(FblError::config("bessel range needs 5 <= xi_min < xi_max, points >= 2, windows >= 2"));
                        }
                    }
                    OscintSpec::StationaryPhase { hessian, delta_exponent, .. } => {
                        check_hessian(hessian)?;
                        if !(*delta_exponent > 0.0 && *delta_exponent <= 0.5) {
                            return Err(FblError::config("delta_exponent must lie in (0, 1/2]"));
                        }
                        check_hbar_list(&self.hbar, false)?;
                    }
                    OscintSpec::NonStationary { hessian, inner, outer } => {
                        check_hessian(hessian)?;
                        if !(*inner > 0.0 && outer > inner) {
                            return Err(FblError::config("annulus needs 0 < inner < outer"));
                        }
                        check_hbar_list(&self.hbar, false)?;
                    }
                }
            }
            ExperimentKind::Collision => {
                let spec = self.collision.as_ref().ok_or_else(|| missing("collision"))?;
                let region = self.region.as_ref().ok_or_else(|| missing("region"))?;
                region.validate().map_err(|e| FblError::config(e.to_string()))?;
                if region.dim() != spec.dim {
                    return Err(FblError::config("region dimension differs from the grid"));
                }
                if spec.radii.is_empty() || spec.radii.iter().any(|r| !(*r > 0.0)) {
                    return Err(FblError::config("radii must be a non-empty list of positive values"));
                }
                if spec.dim == 2 && spec.budget < 10_000 {
                    return Err(FblError::config("2D collision budget must be at least 1e4"));
                }
            }
            ExperimentKind::Weyl => check_hbar_list(&self.hbar, false)?,
            ExperimentKind::Covariance => {
                check_hbar_list(&self.hbar, false)?;
                self.region.as_ref().ok_or_else(|| missing("region"))?;
                self.second_region.as_ref().ok_or_else(|| missing("second_region"))?;
            }
            _ => {
                check_hbar_list(&self.hbar, kind.fits_log_slope())?;
                self.region.as_ref().ok_or_else(|| missing("region"))?;
            }
        }
        if let Some(problem) = &self.problem {
            if let Some(fixed) = problem.points_per_axis {
                let hbars: Vec<f64> = match (&self.sample, kind) {
                    (Some(s), ExperimentKind::Sample) => vec![s.hbar],
                    _ => self.hbar.clone(),
                };
                for h in hbars {
                    let needed = required_points(
                        problem.half_width,
                        &problem.potential,
                        h,
                        problem.mu,
                        problem.points_per_wavelength,
                    );
                    if fixed < needed {
                        return Err(FblError::config(format!(
                            "points_per_axis = {fixed} is below the {needed} required at hbar = {h}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_hessian(hessian: &[f64]) -> Result<()> {
    if hessian.len() == 1 || hessian.len() == 4 {
        Ok(())
    } else {
        Err(FblError::config("hessian must have 1 or 4 entries"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HARMONIC: &str = r#"
kind = "variance-sweep"
seed = 7
hbar = [0.01, 0.005, 0.0025, 0.00125]
region = { kind = "interval", a = -0.5, b = 0.5 }

[problem]
dim = 1
half_width = 1.5
mu = 1.0
potential = { kind = "harmonic" }
"#;

    #[test]
    fn parses_sweep() {
        let e = Experiment::from_toml(HARMONIC).unwrap();
        assert_eq!(e.config.kind, ExperimentKind::VarianceSweep);
        assert_eq!(e.config.seed, 7);
        assert_eq!(e.config.observable, Observable::Constant { value: 1.0 });
        let p = e.config.problem.as_ref().unwrap();
        assert_eq!(p.points_per_wavelength, 8.0);
        assert_eq!(e.source, HARMONIC);
    }

    #[test]
    fn rejects_short_sweeps_and_duplicates() {
        let short = HARMONIC.replace("0.01, 0.005, 0.0025, 0.00125", "0.01, 0.005, 0.0025");
        assert!(matches!(Experiment::from_toml(&short), Err(FblError::Config(_))));
        let dup = HARMONIC.replace("0.00125", "0.0025");
        assert!(matches!(Experiment::from_toml(&dup), Err(FblError::Config(_))));
    }

    #[test]
    fn rejects_unknown_keys_and_kinds() {
        let typo = HARMONIC.replace("seed = 7", "sede = 7");
        assert!(matches!(Experiment::from_toml(&typo), Err(FblError::Parse(_))));
        let kind = HARMONIC.replace("variance-sweep", "variance");
        assert!(Experiment::from_toml(&kind).is_err());
    }

    #[test]
    fn rejects_coarse_fixed_grid() {
        let coarse = HARMONIC.replace("potential = { kind = \"harmonic\" }", "potential = { kind = \"harmonic\" }\npoints_per_axis = 100");
        assert!(matches!(Experiment::from_toml(&coarse), Err(FblError::Config(_))));
    }

    #[test]
    fn built_configs_round_trip() {
        let e = Experiment::from_toml(HARMONIC).unwrap();
        let rebuilt = Experiment::from_config(e.config.clone()).unwrap();
        let again = Experiment::from_toml(&rebuilt.source).unwrap();
        assert_eq!(again.config, e.config);
    }

    #[test]
    fn oscint_modes_parse() {
        let text = r#"
kind = "oscint"
hbar = [0.015625, 0.0078125]

[oscint]
mode = "stationary-phase"
exact_derivatives = true
"#;
        let e = Experiment::from_toml(text).unwrap();
        assert!(matches!(
            e.config.oscint,
            Some(OscintSpec::StationaryPhase { exact_derivatives: true, .. })
        ));
    }
}
