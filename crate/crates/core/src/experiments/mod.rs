//! Monte Carlo experiments, analytic benchmarks, configuration and CSV output.

pub mod config;
pub mod harness;
pub mod output;
pub mod theory;

pub use config::{Estimator, ExperimentConfig};
pub use harness::{graph_stats, GraphStats, RunResult, Simulation, TheoryConstants};
pub use output::{emit_csv, read_csv, write_csv, Curve};
pub use theory::{corollary_holds, ideal_mse, local_mse, theorem1_constant};
