//! Closed-loop simulation: an agent acting in the bandit environment.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agents::Controller;
use crate::env::{Action, EnvState, Environment, Observation, TaskConfig};
use crate::error::{Error, Result};
use crate::model::GenerativeModel;
use crate::policy::{action_loglik, sample_action};

/// Everything logged for one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub run_id: String,
    pub trial: usize,
    pub truth: EnvState,
    pub action: Action,
    pub obs: Observation,
    /// Pre-action predictive belief that the context is volatile.
    pub q_ctx_volatile: Option<f64>,
    /// Pre-action predictive belief that the left arm is better.
    pub q_arm_left: Option<f64>,
    pub weights: Option<Vec<f64>>,
    pub gamma_eff: Option<f64>,
    pub xi_hint_eff: Option<f64>,
    pub action_loglik: f64,
    pub loglik_floored: bool,
}

/// An action/observation sequence with nothing that identifies its source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Behavior {
    pub trials: Vec<(Action, Observation)>,
}

impl Behavior {
    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    /// Every echo matches its action and modality rules hold.
    pub fn is_consistent(&self) -> bool {
        self.trials.iter().all(|(a, o)| o.is_consistent_with(*a))
    }
}

/// A generated run: behavior plus ground truth and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunData {
    pub behavior: Behavior,
    pub truth: Vec<EnvState>,
    pub generator: String,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SimulatedRun {
    pub data: RunData,
    pub records: Vec<TrialRecord>,
}

/// Runs `controller` for the full task. The environment draws from
/// `task.seed`; action sampling draws from `agent_seed`.
pub fn simulate(
    controller: &Controller,
    task: &TaskConfig,
    model: &GenerativeModel,
    agent_seed: u64,
    run_id: &str,
    generator: &str,
) -> Result<SimulatedRun> {
    let mut env = Environment::new(task.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(agent_seed);
    let mut state = controller.initial_state(model);
    let mut trials = Vec::with_capacity(task.n_trials);
    let mut truth = Vec::with_capacity(task.n_trials);
    let mut records = Vec::with_capacity(task.n_trials);

    while let Some(env_state) = env.state() {
        let decision = controller
            .decide(&state, model)
            .map_err(|e| run_error(run_id, env_state.trial_index, e))?;
        let action = sample_action(&decision.posterior, &mut rng);
        let ll = action_loglik(&decision.posterior, action);
        let obs = env.step(action)?;
        records.push(TrialRecord {
            run_id: run_id.to_string(),
            trial: env_state.trial_index,
            truth: env_state,
            action,
            obs,
            q_ctx_volatile: decision.context_pred.map(|c| c[0]),
            q_arm_left: decision.arm_pred.map(|a| a[0]),
            weights: decision.weights.clone(),
            gamma_eff: decision.gamma_eff,
            xi_hint_eff: decision.xi_eff.map(|x| x[Action::Hint.index()]),
            action_loglik: ll.value,
            loglik_floored: ll.floored,
        });
        state = controller
            .step(&state, action, &obs, model)
            .map_err(|e| run_error(run_id, env_state.trial_index, e))?;
        trials.push((action, obs));
        truth.push(env_state);
    }

    Ok(SimulatedRun {
        data: RunData {
            behavior: Behavior { trials },
            truth,
            generator: generator.to_string(),
            seed: task.seed,
        },
        records,
    })
}

fn run_error(run_id: &str, trial: usize, e: Error) -> Error {
    Error::Run {
        run_id: format!("{run_id} (trial {trial})"),
        source: Box::new(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{AgentSpec, ModelKind};
    use crate::model::ModelHyperParams;

    #[test]
    fn simulation_is_reproducible_and_consistent() {
        let task = TaskConfig {
            seed: 11,
            ..TaskConfig::default()
        };
        let model = GenerativeModel::new(&task, ModelHyperParams::default()).unwrap();
        for kind in [ModelKind::M1, ModelKind::M3, ModelKind::EpsGreedy] {
            let c = AgentSpec::default_for(kind).controller().unwrap();
            let a = simulate(&c, &task, &model, 5, "r", kind.label()).unwrap();
            let b = simulate(&c, &task, &model, 5, "r", kind.label()).unwrap();
            assert_eq!(a.data, b.data);
            assert_eq!(a.records.len(), 400);
            assert!(a.data.behavior.is_consistent());
        }
    }

    #[test]
    fn m3_records_carry_weights_that_sum_to_one() {
        let task = TaskConfig::default();
        let model = GenerativeModel::new(&task, ModelHyperParams::default()).unwrap();
        let c = AgentSpec::default_for(ModelKind::M3).controller().unwrap();
        let run = simulate(&c, &task, &model, 1, "r", "M3").unwrap();
        for r in &run.records {
            let w = r.weights.as_ref().unwrap();
            assert!((w[0] + w[1] - 1.0).abs() < 1e-12);
        }
    }
}
