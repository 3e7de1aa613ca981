//! Native runtime, file formats and experiment harness around
//! [`taosched_core`].

pub mod config;
pub mod error;
pub mod formats;
pub mod kernels;
pub mod native;
pub mod scenario;

pub use error::{BenchError, Result};
pub use native::{run_native, NativeConfig, NativeOutcome};
pub use scenario::{ablate_molding, emit_plots, run_scenario, Backend, DagSpec, Scenario, ScenarioResult};
