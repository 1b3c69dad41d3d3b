//! The model-recovery experiment: every generator produces several runs,
//! every run is fitted blind by M1, M2 and M3, and the fits are pooled into
//! confusion matrices and a parameter-recovery table.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{AgentSpec, ModelKind, M3_BASE_XI};
use crate::env::TaskConfig;
use crate::error::{Error, Result};
use crate::fitting::{FitResult, Fitter};
use crate::math;
use crate::model::{GenerativeModel, ModelHyperParams};
use crate::simulation::{simulate, RunData, SimulatedRun};

/// Agent sub-stream offset from the run seed; the environment uses the run seed itself.
pub const AGENT_STREAM_OFFSET: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub generators: Vec<AgentSpec>,
    pub runs_per_generator: usize,
    pub base_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            generators: [
                ModelKind::M1,
                ModelKind::M2,
                ModelKind::M3,
                ModelKind::EpsGreedy,
                ModelKind::SoftmaxQ,
            ]
            .into_iter()
            .map(AgentSpec::default_for)
            .collect(),
            runs_per_generator: 5,
            base_seed: 2024,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs_per_generator == 0 {
            return Err(Error::Config("runs_per_generator must be at least 1".into()));
        }
        if self.generators.is_empty() {
            return Err(Error::Config("at least one generator is required".into()));
        }
        let mut kinds: Vec<ModelKind> = self.generators.iter().map(AgentSpec::kind).collect();
        kinds.sort();
        kinds.dedup();
        if kinds.len() != self.generators.len() {
            return Err(Error::Config("generator kinds must be distinct".into()));
        }
        self.generators.iter().try_for_each(AgentSpec::validate)
    }

    /// Seeds for run `run_index`: `(environment, agent)`.
    pub fn run_seeds(&self, run_index: usize) -> (u64, u64) {
        let run_seed = self.base_seed.wrapping_add(run_index as u64);
        (run_seed, run_seed.wrapping_add(AGENT_STREAM_OFFSET))
    }
}

/// Simulates run `run_index` of `generator`.
pub fn generate_run(
    generator: &AgentSpec,
    run_index: usize,
    experiment: &ExperimentConfig,
    task: &TaskConfig,
    model: &GenerativeModel,
) -> Result<SimulatedRun> {
    let (env_seed, agent_seed) = experiment.run_seeds(run_index);
    let task = TaskConfig {
        seed: env_seed,
        ..task.clone()
    };
    let label = generator.kind().label();
    simulate(
        &generator.controller()?,
        &task,
        model,
        agent_seed,
        &run_id(label, run_index),
        label,
    )
}

pub fn run_id(generator: &str, run_index: usize) -> String {
    format!("{generator}_run{run_index}")
}

/// One generated run and its three fits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunOutcome {
    pub generator: AgentSpec,
    pub run_index: usize,
    pub data: RunData,
    pub fits: Vec<FitResult>,
}

impl RunOutcome {
    pub fn run_id(&self) -> String {
        run_id(self.generator.kind().label(), self.run_index)
    }

    pub fn fit(&self, kind: ModelKind) -> Option<&FitResult> {
        self.fits.iter().find(|f| f.kind == kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub mean: f64,
    pub se: f64,
}

/// Generator × fitted-model summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub metric: String,
    pub generators: Vec<String>,
    pub models: Vec<ModelKind>,
    pub cells: Vec<Vec<Cell>>,
    pub lower_is_better: bool,
    /// Winning column per row.
    pub winners: Vec<usize>,
    /// Set when the winning value is shared with another column.
    pub ties: Vec<bool>,
}

impl ConfusionMatrix {
    pub fn from_cells(
        metric: &str,
        generators: Vec<String>,
        models: Vec<ModelKind>,
        cells: Vec<Vec<Cell>>,
        lower_is_better: bool,
    ) -> Self {
        let mut winners = Vec::with_capacity(cells.len());
        let mut ties = Vec::with_capacity(cells.len());
        for row in &cells {
            let mut best = 0;
            for (j, c) in row.iter().enumerate().skip(1) {
                let better = if lower_is_better {
                    c.mean < row[best].mean
                } else {
                    c.mean > row[best].mean
                };
                if better {
                    best = j;
                }
            }
            let tie = row
                .iter()
                .enumerate()
                .any(|(j, c)| j != best && c.mean == row[best].mean);
            winners.push(best);
            ties.push(tie);
        }
        ConfusionMatrix {
            metric: metric.to_string(),
            generators,
            models,
            cells,
            lower_is_better,
            winners,
            ties,
        }
    }

    pub fn cell(&self, generator: &str, model: ModelKind) -> Option<Cell> {
        let i = self.generators.iter().position(|g| g == generator)?;
        let j = self.models.iter().position(|&m| m == model)?;
        Some(self.cells[i][j])
    }

    pub fn winner(&self, generator: &str) -> Option<ModelKind> {
        let i = self.generators.iter().position(|g| g == generator)?;
        Some(self.models[self.winners[i]])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinnerRow {
    pub generator: String,
    pub winner: ModelKind,
    pub runner_up: Option<ModelKind>,
    /// Distance from the winner to the runner-up, positive when the winner is better.
    pub delta: Option<f64>,
    pub tie: bool,
}

/// Per-generator winner with its margin over the runner-up.
pub fn summarize_winners(matrix: &ConfusionMatrix) -> Vec<WinnerRow> {
    matrix
        .cells
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let w = matrix.winners[i];
            let mut runner: Option<usize> = None;
            for j in (0..row.len()).filter(|&j| j != w) {
                let better = match runner {
                    None => true,
                    Some(r) if matrix.lower_is_better => row[j].mean < row[r].mean,
                    Some(r) => row[j].mean > row[r].mean,
                };
                if better {
                    runner = Some(j);
                }
            }
            let delta = runner.map(|r| (row[r].mean - row[w].mean).abs());
            WinnerRow {
                generator: matrix.generators[i].clone(),
                winner: matrix.models[w],
                runner_up: runner.map(|r| matrix.models[r]),
                delta,
                tie: matrix.ties[i],
            }
        })
        .collect()
}

/// One fold of an M3 fit to M3-generated data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRecoveryRow {
    pub run_index: usize,
    pub fold: usize,
    pub gamma0: f64,
    pub gamma1: f64,
    pub hint_scale: f64,
    pub arm_scale: f64,
    pub xi_hint_profile0: f64,
    pub xi_hint_profile1: f64,
}

impl ParamRecoveryRow {
    pub fn hint_ratio(&self) -> f64 {
        self.xi_hint_profile0 / self.xi_hint_profile1
    }

    pub fn params(&self) -> [f64; 4] {
        [self.gamma0, self.gamma1, self.hint_scale, self.arm_scale]
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecoveryOutput {
    pub runs: Vec<RunOutcome>,
    pub aic: ConfusionMatrix,
    pub test_ll: ConfusionMatrix,
    pub bic: ConfusionMatrix,
    pub param_recovery: Vec<ParamRecoveryRow>,
}

impl RecoveryOutput {
    pub fn run(&self, generator: ModelKind, run_index: usize) -> Option<&RunOutcome> {
        self.runs
            .iter()
            .find(|r| r.generator.kind() == generator && r.run_index == run_index)
    }
}

/// Runs the whole experiment. Jobs run in parallel; aggregation follows
/// generator and run order, so results do not depend on scheduling.
pub fn run_recovery(
    experiment: &ExperimentConfig,
    task: &TaskConfig,
    hyper: ModelHyperParams,
) -> Result<RecoveryOutput> {
    experiment.validate()?;
    task.validate()?;
    let model = GenerativeModel::new(task, hyper)?;

    let jobs: Vec<(AgentSpec, usize)> = experiment
        .generators
        .iter()
        .flat_map(|g| (0..experiment.runs_per_generator).map(move |r| (*g, r)))
        .collect();

    let runs: Vec<RunOutcome> = jobs
        .par_iter()
        .map(|&(generator, run_index)| {
            let wrap = |e: Error| Error::Run {
                run_id: run_id(generator.kind().label(), run_index),
                source: Box::new(e),
            };
            let sim = generate_run(&generator, run_index, experiment, task, &model).map_err(wrap)?;
            let fitter = Fitter::new(&model, &sim.data.behavior).map_err(wrap)?;
            let fits = ModelKind::FITTED
                .iter()
                .map(|&k| fitter.cross_validate(k))
                .collect::<Result<Vec<_>>>()
                .map_err(wrap)?;
            Ok(RunOutcome {
                generator,
                run_index,
                data: sim.data,
                fits,
            })
        })
        .collect::<Result<_>>()?;

    let generators: Vec<String> = experiment
        .generators
        .iter()
        .map(|g| g.kind().label().to_string())
        .collect();
    let matrix = |metric: &str, value: fn(&FitResult) -> f64, lower: bool| {
        let cells = experiment
            .generators
            .iter()
            .map(|g| {
                ModelKind::FITTED
                    .iter()
                    .map(|&k| {
                        let vals: Vec<f64> = runs
                            .iter()
                            .filter(|r| r.generator.kind() == g.kind())
                            .map(|r| value(r.fit(k).expect("every run is fitted by every model")))
                            .collect();
                        let (mean, se) = math::mean_se(&vals);
                        Cell {
                            mean,
                            se: se.unwrap_or(0.0),
                        }
                    })
                    .collect()
            })
            .collect();
        ConfusionMatrix::from_cells(metric, generators.clone(), ModelKind::FITTED.to_vec(), cells, lower)
    };
    let aic = matrix("aic", |f| f.aic, true);
    let test_ll = matrix("test_ll", |f| f.mean_test_ll, false);
    let bic = matrix("bic", |f| f.bic, true);

    let param_recovery = runs
        .iter()
        .filter(|r| r.generator.kind() == ModelKind::M3)
        .flat_map(|r| {
            let fit = r.fit(ModelKind::M3).expect("M3 fit present");
            fit.folds.iter().map(move |f| {
                let p = &f.best_params;
                ParamRecoveryRow {
                    run_index: r.run_index,
                    fold: f.fold,
                    gamma0: p[0],
                    gamma1: p[1],
                    hint_scale: p[2],
                    arm_scale: p[3],
                    xi_hint_profile0: M3_BASE_XI[0][1] * p[2],
                    xi_hint_profile1: M3_BASE_XI[1][1] * p[2],
                }
            })
        })
        .collect();

    Ok(RecoveryOutput {
        runs,
        aic,
        test_ll,
        bic,
        param_recovery,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(mean: f64) -> Cell {
        Cell { mean, se: 0.0 }
    }

    #[test]
    fn winners_and_deltas() {
        let m = ConfusionMatrix::from_cells(
            "aic",
            vec!["M3".into()],
            ModelKind::FITTED.to_vec(),
            vec![vec![cell(180.7), cell(161.7), cell(72.8)]],
            true,
        );
        let w = summarize_winners(&m);
        assert_eq!(w[0].winner, ModelKind::M3);
        assert_eq!(w[0].runner_up, Some(ModelKind::M2));
        assert!((w[0].delta.unwrap() - 88.9).abs() < 1e-9);
        assert!(!w[0].tie);
    }

    #[test]
    fn ties_go_to_lower_index() {
        let m = ConfusionMatrix::from_cells(
            "aic",
            vec!["x".into()],
            ModelKind::FITTED.to_vec(),
            vec![vec![cell(10.0), cell(10.0), cell(30.0)]],
            true,
        );
        assert_eq!(m.winner("x"), Some(ModelKind::M1));
        assert!(m.ties[0]);
    }

    #[test]
    fn log_likelihood_matrix_maximizes() {
        let m = ConfusionMatrix::from_cells(
            "test_ll",
            vec!["x".into()],
            ModelKind::FITTED.to_vec(),
            vec![vec![cell(-3.1), cell(-6.6), cell(-22.4)]],
            false,
        );
        assert_eq!(m.winner("x"), Some(ModelKind::M1));
    }

    #[test]
    fn seeds_differ_across_runs_and_streams() {
        let e = ExperimentConfig::default();
        let (a0, b0) = e.run_seeds(0);
        let (a1, _) = e.run_seeds(1);
        assert_ne!(a0, a1);
        assert_ne!(a0, b0);
    }

    #[test]
    fn duplicate_generators_rejected() {
        let e = ExperimentConfig {
            generators: vec![AgentSpec::M1 { gamma: 1.0 }, AgentSpec::M1 { gamma: 2.0 }],
            ..Default::default()
        };
        assert!(e.validate().is_err());
    }
}
