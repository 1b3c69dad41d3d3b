//! The full recovery experiment with default settings: confusion matrices,
//! winners and recovered profile parameters.
//!
//! Pass a run count to shorten it, e.g. `cargo run --release --example
//! model_recovery -- 2`.

use value_profiles::cli::recovery_summary;
use value_profiles::{run_recovery, ExperimentConfig, ModelHyperParams, TaskConfig};

fn main() -> value_profiles::Result<()> {
    let runs = std::env::args()
        .nth(1)
        .map_or(Ok(5), |a| a.parse())
        .map_err(|e| value_profiles::Error::Config(format!("run count: {e}")))?;
    let experiment = ExperimentConfig {
        runs_per_generator: runs,
        ..ExperimentConfig::default()
    };
    let out = run_recovery(&experiment, &TaskConfig::default(), ModelHyperParams::default())?;
    print!("{}", recovery_summary(&out));
    Ok(())
}
