use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fbl::config::{AmplitudeKind, ExperimentConfig, ExperimentKind, OscintSpec, ProblemSpec, SampleSpec};
use fbl::shorthand::{parse_potential, parse_region};
use fbl::{emit, parse_formats, run, Experiment, FblError, RunOptions};
use fbl_core::predictions::Observable;

#[derive(Parser)]
#[command(name = "fbl", version, about = "Free-fermion fluctuation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Overrides the seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory; defaults to the config's `output`, then `fbl-out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads; all cores by default.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[arg(long, global = true, default_value = "csv,json,svg")]
    formats: String,

    /// Record wall time in the manifest (breaks byte-reproducibility).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML file.
    Run { config: PathBuf },

    /// Count eigenvalues below mu against the phase-space prediction.
    Weyl {
        #[arg(long, default_value_t = 1)]
        dim: usize,
        /// `harmonic`, `power:q` or `separable:qx,qy`.
        #[arg(long, default_value = "harmonic")]
        potential: String,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value_t = 1.5)]
        half_width: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        hbar: Vec<f64>,
        #[arg(long, default_value_t = 16.0)]
        points_per_wavelength: f64,
    },

    /// Draw configurations of the ground-state point process.
    Sample {
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value = "harmonic")]
        potential: String,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value_t = 1.5)]
        half_width: f64,
        #[arg(long)]
        hbar: f64,
        #[arg(long, default_value_t = 10_000)]
        count: usize,
        /// e.g. `interval:-0.5,0.5` or `disk:0,0,0.6`.
        #[arg(long)]
        region: Option<String>,
        #[arg(long, default_value_t = 8.0)]
        points_per_wavelength: f64,
    },

    /// Oscillatory-integral checks.
    Oscint {
        /// `stationary-phase`, `non-stationary` or `bessel`.
        #[arg(long, default_value = "stationary-phase")]
        mode: String,
        #[arg(long, value_delimiter = ',')]
        hbar: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        hessian: Vec<f64>,
        #[arg(long, default_value_t = 0.4)]
        delta_exponent: f64,
        #[arg(long)]
        exact_derivatives: bool,
        #[arg(long, default_value_t = 0.5)]
        inner: f64,
        #[arg(long, default_value_t = 1.5)]
        outer: f64,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 10.0)]
        xi_min: f64,
        #[arg(long, default_value_t = 100.0)]
        xi_max: f64,
        #[arg(long, default_value_t = 9001)]
        points: usize,
    },
}

fn problem(dim: usize, potential: &str, mu: f64, half_width: f64, ppw: f64) -> Result<ProblemSpec, FblError> {
    Ok(ProblemSpec {
        dim,
        half_width,
        mu,
        potential: parse_potential(potential)?,
        points_per_wavelength: ppw,
        wall_margin: 0.5,
        points_per_axis: None,
    })
}

fn bare(kind: ExperimentKind) -> ExperimentConfig {
    ExperimentConfig {
        kind,
        seed: 0,
        output: None,
        hbar: Vec::new(),
        region: None,
        second_region: None,
        observable: Observable::default(),
        function: None,
        problem: None,
        sample: None,
        oscint: None,
        collision: None,
    }
}

fn experiment(command: Command) -> Result<Experiment, FblError> {
    let config = match command {
        Command::Run { config } => return Experiment::from_path(&config),
        Command::Weyl {
            dim,
            potential,
            mu,
            half_width,
            hbar,
            points_per_wavelength,
        } => ExperimentConfig {
            hbar,
            problem: Some(problem(dim, &potential, mu, half_width, points_per_wavelength)?),
            ..bare(ExperimentKind::Weyl)
        },
        Command::Sample {
            dim,
            potential,
            mu,
            half_width,
            hbar,
            count,
            region,
            points_per_wavelength,
        } => ExperimentConfig {
            region: region.as_deref().map(parse_region).transpose()?,
            problem: Some(problem(dim, &potential, mu, half_width, points_per_wavelength)?),
            sample: Some(SampleSpec { count, hbar }),
            ..bare(ExperimentKind::Sample)
        },
        Command::Oscint {
            mode,
            hbar,
            hessian,
            delta_exponent,
            exact_derivatives,
            inner,
            outer,
            n,
            xi_min,
            xi_max,
            points,
        } => {
            let spec = match mode.as_str() {
                "stationary-phase" => OscintSpec::StationaryPhase {
                    hessian,
                    delta_exponent,
                    amplitude: AmplitudeKind::Gaussian,
                    exact_derivatives,
                },
                "non-stationary" => OscintSpec::NonStationary { hessian, inner, outer },
                "bessel" => OscintSpec::Bessel {
                    n,
                    xi_min,
                    xi_max,
                    points,
                    windows: 18,
                },
                other => return Err(FblError::config(format!("unknown oscint mode `{other}`"))),
            };
            ExperimentConfig {
                hbar,
                oscint: Some(spec),
                ..bare(ExperimentKind::Oscint)
            }
        }
    };
    Experiment::from_config(config)
}

fn execute(cli: Cli) -> Result<bool, FblError> {
    let common = cli.common;
    if let Some(threads) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| FblError::config(e.to_string()))?;
    }
    let formats = parse_formats(&common.formats)?;
    let experiment = experiment(cli.command)?;
    let result = run(
        &experiment,
        RunOptions {
            seed: common.seed,
            timing: common.timing,
        },
    )?;
    let dir = common
        .out
        .or_else(|| experiment.config.output.clone())
        .unwrap_or_else(|| PathBuf::from("fbl-out"));
    let written = emit(&experiment, &result, &dir, &formats)?;
    println!("{}: {} rows", result.kind.name(), result.table.rows.len());
    for (name, fit) in &result.fits {
        println!(
            "  fit {name}: slope {:.6} ± {:.2e}, intercept {:.6}, R² {:.5}",
            fit.slope, fit.slope_std_error, fit.intercept, fit.r_squared
        );
    }
    for (name, value) in &result.ratios {
        println!("  {name} = {value:.6}");
    }
    for failure in &result.failures {
        eprintln!(
            "  failed {} (cell {:?}, parameter {:?}): {}",
            failure.stage, failure.cell, failure.parameter, failure.error
        );
    }
    for path in written {
        println!("  wrote {}", path.display());
    }
    Ok(result.is_success())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
