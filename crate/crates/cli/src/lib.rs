//! Config-driven sweeps over `hbar` for free-fermion ground states, with
//! log-slope fits and CSV/JSON/SVG output.

pub mod config;
pub mod emit;
pub mod error;
pub mod runner;
pub mod shorthand;

pub use config::{Experiment, ExperimentConfig, ExperimentKind, OscintSpec, ProblemSpec};
pub use emit::{emit, parse_formats, Format};
pub use error::{FblError, Result};
pub use runner::{run, RunOptions, SweepResult};
