//! Profile dynamics of fitted models: fits the M3 model to one M3 run,
//! re-simulates the fitted M1/M2/M3 agents in closed loop, and writes the
//! panel CSVs and SVGs to a directory (default `mechanism_out`).

use std::path::PathBuf;

use value_profiles::analysis::{mechanism_report, AnalysisConfig};
use value_profiles::cli::{analysis_summary, analyze_artifacts};
use value_profiles::recovery::generate_run;
use value_profiles::{
    cross_validate, AgentSpec, ExperimentConfig, GenerativeModel, ModelHyperParams, ModelKind, TaskConfig,
};

fn main() -> value_profiles::Result<()> {
    let out_dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "mechanism_out".into()));
    let task = TaskConfig::default();
    let model = GenerativeModel::new(&task, ModelHyperParams::default())?;
    let experiment = ExperimentConfig::default();
    let data = generate_run(&AgentSpec::default_for(ModelKind::M3), 0, &experiment, &task, &model)?.data;

    let specs = ModelKind::FITTED
        .iter()
        .map(|&k| {
            let fit = cross_validate(k, &data.behavior, &model)?;
            AgentSpec::from_params(k, &fit.folds[0].best_params)
        })
        .collect::<value_profiles::Result<Vec<_>>>()?;

    let report = mechanism_report(&specs, &task, &model, experiment.base_seed, &AnalysisConfig::default())?;
    print!("{}", analysis_summary(&report));
    for path in analyze_artifacts(&report)?.write_to(&out_dir)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
