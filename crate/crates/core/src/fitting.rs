//! Likelihood of observed action sequences, grid search, and
//! within-run cross-validation.
//!
//! The belief trajectory of a Bayesian agent depends only on the fixed
//! world model and the observed data, never on the control parameters.
//! [`Fitter`] therefore filters the sequence once and scores every grid
//! candidate against the cached per-trial inputs. [`sequence_loglik`]
//! is the plain full-replay path; the two agree exactly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{AgentSpec, ModelKind, TrialInputs};
use crate::beliefs::{predict, update, FactorizedBeliefs};
use crate::error::{Error, Result};
use crate::math;
use crate::model::GenerativeModel;
use crate::policy::action_loglik;
use crate::simulation::Behavior;

pub const N_FOLDS: usize = 5;

pub const M1_COARSE: [f64; 8] = [0.5, 1.0, 1.5, 2.5, 4.0, 8.0, 12.0, 16.0];
pub const M1_FINE_POINTS: usize = 7;
pub const M2_GAMMA_COARSE: [f64; 6] = [0.5, 1.0, 1.5, 2.5, 4.0, 8.0];
pub const M2_KAPPA_COARSE: [f64; 7] = [0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0];
pub const M2_FINE_POINTS: usize = 6;
pub const M3_GAMMA_GRID: [f64; 3] = [1.0, 2.5, 5.0];
pub const M3_HINT_GRID: [f64; 4] = [0.5, 1.0, 2.0, 4.0];
pub const M3_ARM_GRID: [f64; 3] = [0.5, 1.0, 2.0];

/// Masked log-likelihood plus the trials where the probability floor was hit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceLogLik {
    pub total: f64,
    pub floored_trials: Vec<usize>,
}

/// Full replay: at each trial take the agent's posterior, score the recorded
/// action if the trial is masked in, then advance the agent's state with the
/// recorded action and observation. Replay always covers every trial.
pub fn sequence_loglik(
    spec: &AgentSpec,
    behavior: &Behavior,
    model: &GenerativeModel,
    mask: &[bool],
) -> Result<SequenceLogLik> {
    check_mask(behavior, mask)?;
    let controller = spec.controller()?;
    let mut state = controller.initial_state(model);
    let mut out = SequenceLogLik {
        total: 0.0,
        floored_trials: Vec::new(),
    };
    for (t, (action, obs)) in behavior.trials.iter().enumerate() {
        if mask[t] {
            let decision = controller.decide(&state, model)?;
            let ll = action_loglik(&decision.posterior, *action);
            out.total += ll.value;
            if ll.floored {
                out.floored_trials.push(t);
            }
        }
        state = match controller.step(&state, *action, obs, model) {
            Err(Error::DegenerateEvidence) => degenerate_fallback(&state, *action, model),
            other => other?,
        };
    }
    Ok(out)
}

fn degenerate_fallback(
    state: &crate::agents::AgentState,
    action: crate::env::Action,
    model: &GenerativeModel,
) -> crate::agents::AgentState {
    // keep the predictive prior when the observation is impossible under the model
    let beliefs = state.beliefs().expect("only belief updates can be degenerate");
    crate::agents::AgentState::Bayesian {
        beliefs: predict(beliefs, action, model),
        last_action: Some(action),
    }
}

fn check_mask(behavior: &Behavior, mask: &[bool]) -> Result<()> {
    if mask.len() != behavior.len() {
        return Err(Error::Shape {
            expected: behavior.len(),
            got: mask.len(),
        });
    }
    Ok(())
}

/// Cached belief trajectory for one behavior sequence.
#[derive(Debug, Clone)]
pub struct Fitter<'a> {
    model: &'a GenerativeModel,
    behavior: &'a Behavior,
    inputs: Vec<TrialInputs>,
    /// Trials whose observation had zero likelihood under the model.
    pub degenerate_trials: Vec<usize>,
}

/// One evaluated grid candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub params: Vec<f64>,
    pub train_ll: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: AgentSpec,
    pub best_ll: f64,
    pub trace: Vec<Candidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    /// Half-open range of held-out trials.
    pub test_trials: (usize, usize),
    pub best_params: Vec<f64>,
    pub train_ll: f64,
    pub test_ll: f64,
    pub floored_test_trials: Vec<usize>,
    pub search_trace: Vec<Candidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub kind: ModelKind,
    pub n_params: usize,
    pub folds: Vec<FoldResult>,
    pub mean_test_ll: f64,
    pub se_test_ll: f64,
    pub aic: f64,
    pub bic: f64,
}

/// `2p - 2 LL`.
pub fn aic(n_params: usize, ll: f64) -> f64 {
    2.0 * n_params as f64 - 2.0 * ll
}

/// `p ln n - 2 LL`.
pub fn bic(n_params: usize, n: usize, ll: f64) -> f64 {
    n_params as f64 * (n as f64).ln() - 2.0 * ll
}

/// Test mask for fold `fold` of `n_folds` consecutive blocks.
pub fn fold_mask(n_trials: usize, n_folds: usize, fold: usize) -> Result<Vec<bool>> {
    if n_folds == 0 || !n_trials.is_multiple_of(n_folds) {
        return Err(Error::Config(format!(
            "{n_trials} trials cannot be split into {n_folds} equal folds"
        )));
    }
    let len = n_trials / n_folds;
    Ok((0..n_trials).map(|t| t / len == fold).collect())
}

/// Lexicographic comparison of parameter tuples.
fn tuple_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// Highest log-likelihood; exact ties go to the smallest tuple.
fn best_of(cands: &[Candidate]) -> &Candidate {
    let mut best = &cands[0];
    for c in &cands[1..] {
        if c.train_ll > best.train_ll || (c.train_ll == best.train_ll && tuple_less(&c.params, &best.params)) {
            best = c;
        }
    }
    best
}

/// Closed interval spanned by the coarse neighbors of `grid[i]`.
fn neighbor_interval(grid: &[f64], i: usize) -> (f64, f64) {
    let lo = grid[i.saturating_sub(1)];
    let hi = grid[(i + 1).min(grid.len() - 1)];
    (lo, hi)
}

fn index_of(grid: &[f64], x: f64) -> usize {
    grid.iter()
        .position(|&g| g == x)
        .expect("coarse winner lies on the coarse grid")
}

impl<'a> Fitter<'a> {
    /// Filters `behavior` once under `model`.
    pub fn new(model: &'a GenerativeModel, behavior: &'a Behavior) -> Result<Self> {
        if !behavior.is_consistent() {
            return Err(Error::Contract("observations are inconsistent with actions".into()));
        }
        let mut inputs = Vec::with_capacity(behavior.len());
        let mut degenerate_trials = Vec::new();
        let mut beliefs = FactorizedBeliefs::prior(model);
        for (t, (action, obs)) in behavior.trials.iter().enumerate() {
            inputs.push(TrialInputs::compute(&beliefs, model));
            let prior = predict(&beliefs, *action, model);
            beliefs = match update(&prior, obs, model) {
                Ok(b) => b,
                Err(Error::DegenerateEvidence) => {
                    degenerate_trials.push(t);
                    prior
                }
                Err(e) => return Err(e),
            };
        }
        Ok(Fitter {
            model,
            behavior,
            inputs,
            degenerate_trials,
        })
    }

    pub fn n_trials(&self) -> usize {
        self.behavior.len()
    }

    pub fn inputs(&self) -> &[TrialInputs] {
        &self.inputs
    }

    /// Per-trial action log-likelihoods for a Bayesian spec.
    pub fn trial_logliks(&self, spec: &AgentSpec) -> Result<Vec<f64>> {
        if !spec.kind().is_bayesian() {
            return Err(Error::Contract(format!("{} is not a belief-based model", spec.kind())));
        }
        let controller = spec.controller()?;
        self.inputs
            .iter()
            .zip(&self.behavior.trials)
            .map(|(inp, (action, _))| {
                let d = controller.decide_from_inputs(inp, self.model)?;
                Ok(action_loglik(&d.posterior, *action).value)
            })
            .collect()
    }

    /// Masked log-likelihood via the cached trajectory.
    pub fn loglik(&self, spec: &AgentSpec, mask: &[bool]) -> Result<f64> {
        check_mask(self.behavior, mask)?;
        let lls = self.trial_logliks(spec)?;
        Ok(lls.iter().zip(mask).filter(|(_, &m)| m).map(|(ll, _)| ll).sum())
    }

    fn evaluate_all(&self, kind: ModelKind, points: &[Vec<f64>], mask: &[bool]) -> Result<Vec<Candidate>> {
        points
            .par_iter()
            .map(|p| {
                let spec = AgentSpec::from_params(kind, p)?;
                Ok(Candidate {
                    params: p.clone(),
                    train_ll: self.loglik(&spec, mask)?,
                })
            })
            .collect()
    }

    /// Grid search maximizing the masked log-likelihood.
    pub fn grid_search(&self, kind: ModelKind, train_mask: &[bool]) -> Result<GridResult> {
        check_mask(self.behavior, train_mask)?;
        let trace = match kind {
            ModelKind::M1 => {
                let coarse: Vec<Vec<f64>> = M1_COARSE.iter().map(|&g| vec![g]).collect();
                let mut trace = self.evaluate_all(kind, &coarse, train_mask)?;
                let i = index_of(&M1_COARSE, best_of(&trace).params[0]);
                let (lo, hi) = neighbor_interval(&M1_COARSE, i);
                let fine: Vec<Vec<f64>> = math::linspace(lo, hi, M1_FINE_POINTS)
                    .into_iter()
                    .map(|g| vec![g])
                    .collect();
                trace.extend(self.evaluate_all(kind, &fine, train_mask)?);
                trace
            }
            ModelKind::M2 => {
                let coarse: Vec<Vec<f64>> = M2_GAMMA_COARSE
                    .iter()
                    .flat_map(|&g| M2_KAPPA_COARSE.iter().map(move |&k| vec![g, k]))
                    .collect();
                let mut trace = self.evaluate_all(kind, &coarse, train_mask)?;
                let best = best_of(&trace).params.clone();
                let (glo, ghi) = neighbor_interval(&M2_GAMMA_COARSE, index_of(&M2_GAMMA_COARSE, best[0]));
                let (klo, khi) = neighbor_interval(&M2_KAPPA_COARSE, index_of(&M2_KAPPA_COARSE, best[1]));
                let kappas = math::linspace(klo, khi, M2_FINE_POINTS);
                let fine: Vec<Vec<f64>> = math::linspace(glo, ghi, M2_FINE_POINTS)
                    .into_iter()
                    .flat_map(|g| kappas.iter().map(move |&k| vec![g, k]))
                    .collect();
                trace.extend(self.evaluate_all(kind, &fine, train_mask)?);
                trace
            }
            ModelKind::M3 => {
                let mut points = Vec::with_capacity(108);
                for &g0 in &M3_GAMMA_GRID {
                    for &g1 in &M3_GAMMA_GRID {
                        for &h in &M3_HINT_GRID {
                            for &a in &M3_ARM_GRID {
                                points.push(vec![g0, g1, h, a]);
                            }
                        }
                    }
                }
                self.evaluate_all(kind, &points, train_mask)?
            }
            other => {
                return Err(Error::Contract(format!("no search space is defined for {other}")));
            }
        };
        let best = best_of(&trace);
        Ok(GridResult {
            best: AgentSpec::from_params(kind, &best.params)?,
            best_ll: best.train_ll,
            trace: trace.clone(),
        })
    }

    /// Within-run cross-validation over consecutive folds.
    pub fn cross_validate(&self, kind: ModelKind) -> Result<FitResult> {
        let n = self.n_trials();
        let fold_len = n / N_FOLDS;
        let mut folds = Vec::with_capacity(N_FOLDS);
        for fold in 0..N_FOLDS {
            let test = fold_mask(n, N_FOLDS, fold)?;
            let train: Vec<bool> = test.iter().map(|m| !m).collect();
            let grid = self.grid_search(kind, &train)?;
            let lls = self.trial_logliks(&grid.best)?;
            let test_ll = lls.iter().zip(&test).filter(|(_, &m)| m).map(|(ll, _)| ll).sum();
            let floored_test_trials = (0..n)
                .filter(|&t| test[t] && lls[t] <= crate::policy::LOGLIK_FLOOR.ln())
                .collect();
            folds.push(FoldResult {
                fold,
                test_trials: (fold * fold_len, (fold + 1) * fold_len),
                best_params: grid.best.params(),
                train_ll: grid.best_ll,
                test_ll,
                floored_test_trials,
                search_trace: grid.trace,
            });
        }
        let test_lls: Vec<f64> = folds.iter().map(|f| f.test_ll).collect();
        let (mean, se) = math::mean_se(&test_lls);
        let p = kind.n_params();
        Ok(FitResult {
            kind,
            n_params: p,
            folds,
            mean_test_ll: mean,
            se_test_ll: se.unwrap_or(0.0),
            aic: aic(p, mean),
            bic: bic(p, fold_len, mean),
        })
    }
}

/// Grid search on a behavior sequence.
pub fn grid_search(
    kind: ModelKind,
    behavior: &Behavior,
    model: &GenerativeModel,
    train_mask: &[bool],
) -> Result<GridResult> {
    Fitter::new(model, behavior)?.grid_search(kind, train_mask)
}

/// Cross-validated fit of `kind`. Only the label-free behavior is visible here.
pub fn cross_validate(kind: ModelKind, behavior: &Behavior, model: &GenerativeModel) -> Result<FitResult> {
    if !behavior.len().is_multiple_of(N_FOLDS) || behavior.is_empty() {
        return Err(Error::Config(format!(
            "{} trials cannot be split into {N_FOLDS} equal folds",
            behavior.len()
        )));
    }
    Fitter::new(model, behavior)?.cross_validate(kind)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn information_criteria_hand_values() {
        assert_eq!(aic(1, -3.1), 8.2);
        assert_eq!(aic(4, -32.0), 72.0);
        assert!((bic(2, 80, -10.0) - (2.0 * 80f64.ln() + 20.0)).abs() < 1e-12);
    }

    #[test]
    fn folds_are_consecutive_blocks() {
        let m = fold_mask(400, 5, 0).unwrap();
        assert!(m[..80].iter().all(|&x| x) && m[80..].iter().all(|&x| !x));
        let m = fold_mask(400, 5, 4).unwrap();
        assert!(m[320..].iter().all(|&x| x) && m[..320].iter().all(|&x| !x));
        assert!(fold_mask(401, 5, 0).is_err());
    }

    #[test]
    fn tie_goes_to_smaller_tuple() {
        let c = vec![
            Candidate {
                params: vec![2.0, 1.0],
                train_ll: -1.0,
            },
            Candidate {
                params: vec![1.0, 3.0],
                train_ll: -1.0,
            },
            Candidate {
                params: vec![1.0, 2.0],
                train_ll: -1.0,
            },
        ];
        assert_eq!(best_of(&c).params, vec![1.0, 2.0]);
    }

    #[test]
    fn neighbor_interval_clamps() {
        assert_eq!(neighbor_interval(&M1_COARSE, 0), (0.5, 1.0));
        assert_eq!(neighbor_interval(&M1_COARSE, 3), (1.5, 4.0));
        assert_eq!(neighbor_interval(&M1_COARSE, 7), (12.0, 16.0));
    }
}
