//! Closed-loop simulation of every generator with default parameters:
//! choice accuracy, hint seeking by context, and mean action likelihood.

use value_profiles::simulation::simulate;
use value_profiles::{Action, AgentSpec, Context, GenerativeModel, ModelHyperParams, ModelKind, TaskConfig};

fn main() -> value_profiles::Result<()> {
    let task = TaskConfig {
        seed: 11,
        ..TaskConfig::default()
    };
    let model = GenerativeModel::new(&task, ModelHyperParams::default())?;
    println!("agent      correct arm  hint|volatile  hint|stable  mean ln p(action)");
    for kind in [
        ModelKind::M1,
        ModelKind::M2,
        ModelKind::M3,
        ModelKind::EpsGreedy,
        ModelKind::SoftmaxQ,
    ] {
        let spec = AgentSpec::default_for(kind);
        let run = simulate(&spec.controller()?, &task, &model, 99, "demo", kind.label())?;
        let recs = &run.records;
        let pulls: Vec<_> = recs.iter().filter(|r| r.action.arm().is_some()).collect();
        let correct = pulls
            .iter()
            .filter(|r| r.action.arm() == Some(r.truth.better_arm))
            .count() as f64
            / pulls.len().max(1) as f64;
        let hint_rate = |c: Context| {
            let rows: Vec<_> = recs.iter().filter(|r| r.truth.context == c).collect();
            rows.iter().filter(|r| r.action == Action::Hint).count() as f64 / rows.len() as f64
        };
        let ll = recs.iter().map(|r| r.action_loglik).sum::<f64>() / recs.len() as f64;
        println!(
            "{:<9}  {correct:>11.3}  {:>13.3}  {:>11.3}  {ll:>17.3}",
            kind.label(),
            hint_rate(Context::Volatile),
            hint_rate(Context::Stable)
        );
    }
    Ok(())
}
