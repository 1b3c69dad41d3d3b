//! Blind cross-validated fitting of M1, M2 and M3 to one generated run.

use value_profiles::recovery::generate_run;
use value_profiles::{
    cross_validate, AgentSpec, ExperimentConfig, GenerativeModel, ModelHyperParams, ModelKind, TaskConfig,
};

fn main() -> value_profiles::Result<()> {
    let task = TaskConfig::default();
    let model = GenerativeModel::new(&task, ModelHyperParams::default())?;
    let generator = AgentSpec::default_for(ModelKind::M3);
    let data = generate_run(&generator, 0, &ExperimentConfig::default(), &task, &model)?.data;
    println!("generated {} trials from {generator:?}\n", data.behavior.len());

    for kind in ModelKind::FITTED {
        let fit = cross_validate(kind, &data.behavior, &model)?;
        println!(
            "{kind}: mean held-out LL {:.2} ± {:.2}, AIC {:.2}, BIC {:.2}",
            fit.mean_test_ll, fit.se_test_ll, fit.aic, fit.bic
        );
        let names = AgentSpec::param_names(kind);
        for f in &fit.folds {
            let params: Vec<String> = names
                .iter()
                .zip(&f.best_params)
                .map(|(n, v)| format!("{n}={v:.3}"))
                .collect();
            println!(
                "  fold {} (test {:>3}..{:<3}) train {:>8.2} test {:>7.2}  {}",
                f.fold,
                f.test_trials.0,
                f.test_trials.1,
                f.train_ll,
                f.test_ll,
                params.join(" ")
            );
        }
        println!();
    }
    Ok(())
}
