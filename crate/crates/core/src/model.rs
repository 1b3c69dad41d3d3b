//! The agents' shared world model.
//!
//! Hidden state factors are `context` (volatile, stable), `better_arm`
//! (left, right) and `choice` (the last executed action). Joint states are
//! indexed `context * 8 + arm * 4 + choice`.

use serde::{Deserialize, Serialize};

use crate::env::{Action, TaskConfig};
use crate::error::{Error, Result};

pub const N_CONTEXT: usize = 2;
pub const N_ARM: usize = 2;
pub const N_CHOICE: usize = 4;
pub const N_JOINT: usize = N_CONTEXT * N_ARM * N_CHOICE;
pub const N_HINT_OBS: usize = 3;
pub const N_REWARD_OBS: usize = 3;
pub const N_CHOICE_OBS: usize = 4;
pub const N_POLICIES: usize = 4;

const STOCHASTIC_TOL: f64 = 1e-10;

#[inline]
pub fn joint_index(context: usize, arm: usize, choice: usize) -> usize {
    context * (N_ARM * N_CHOICE) + arm * N_CHOICE + choice
}

/// Inverse of [`joint_index`]: `(context, arm, choice)`.
#[inline]
pub fn split_joint(s: usize) -> (usize, usize, usize) {
    (s / (N_ARM * N_CHOICE), (s / N_CHOICE) % N_ARM, s % N_CHOICE)
}

/// Transition hyper-parameters that the task description does not fix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelHyperParams {
    /// Per-trial probability that the better arm switches.
    pub arm_switch_prob: f64,
    /// Per-trial probability that the context persists.
    pub context_stay_prob: f64,
}

impl Default for ModelHyperParams {
    fn default() -> Self {
        ModelHyperParams {
            arm_switch_prob: 0.05,
            context_stay_prob: 0.98,
        }
    }
}

/// Likelihood of one modality: `probs[o][s] = p(o | s)`.
pub type Likelihood<const O: usize> = [[f64; N_JOINT]; O];

/// Column-stochastic transition: `matrix[to][from]`.
pub type Transition<const S: usize> = [[f64; S]; S];

#[derive(Debug, Clone, PartialEq)]
pub struct GenerativeModel {
    pub a_hint: Likelihood<N_HINT_OBS>,
    pub a_reward: Likelihood<N_REWARD_OBS>,
    pub a_choice: Likelihood<N_CHOICE_OBS>,
    pub b_context: Transition<N_CONTEXT>,
    pub b_arm: Transition<N_ARM>,
    /// Indexed by action, then `[to][from]`.
    pub b_choice: [Transition<N_CHOICE>; N_POLICIES],
    pub d_context: [f64; N_CONTEXT],
    pub d_arm: [f64; N_ARM],
    pub d_choice: [f64; N_CHOICE],
    /// Depth-one policies; policy `i` executes `policies[i]`.
    pub policies: [Action; N_POLICIES],
    pub hyper: ModelHyperParams,
    /// Entropy of each modality's outcome distribution per joint state,
    /// summed over modalities.
    pub(crate) ambiguity: [f64; N_JOINT],
}

impl GenerativeModel {
    pub fn new(task: &TaskConfig, hyper: ModelHyperParams) -> Result<Self> {
        task.validate()?;
        for (name, p) in [
            ("arm_switch_prob", hyper.arm_switch_prob),
            ("context_stay_prob", hyper.context_stay_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} = {p} is not a probability")));
            }
        }

        let mut a_hint = [[0.0; N_JOINT]; N_HINT_OBS];
        let mut a_reward = [[0.0; N_JOINT]; N_REWARD_OBS];
        let mut a_choice = [[0.0; N_JOINT]; N_CHOICE_OBS];
        for s in 0..N_JOINT {
            let (ctx, arm, choice) = split_joint(s);
            let action = Action::ALL[choice];

            // hint: informative only after a hint request, same in both contexts
            if action == Action::Hint {
                let acc = task.hint_accuracy;
                a_hint[1][s] = if arm == 0 { acc } else { 1.0 - acc };
                a_hint[2][s] = if arm == 1 { acc } else { 1.0 - acc };
            } else {
                a_hint[0][s] = 1.0;
            }

            match action.arm() {
                Some(chosen) => {
                    let pair = if ctx == 0 {
                        task.p_reward_volatile
                    } else {
                        task.p_reward_stable
                    };
                    let win = pair.win_prob(chosen.index() == arm);
                    a_reward[1][s] = 1.0 - win;
                    a_reward[2][s] = win;
                }
                None => a_reward[0][s] = 1.0,
            }

            a_choice[choice][s] = 1.0;
        }

        let stay = hyper.context_stay_prob;
        let b_context = [[stay, 1.0 - stay], [1.0 - stay, stay]];
        let sw = hyper.arm_switch_prob;
        let b_arm = [[1.0 - sw, sw], [sw, 1.0 - sw]];
        let mut b_choice = [[[0.0; N_CHOICE]; N_CHOICE]; N_POLICIES];
        for (a, slice) in b_choice.iter_mut().enumerate() {
            slice[a] = [1.0; N_CHOICE];
        }

        let mut model = GenerativeModel {
            a_hint,
            a_reward,
            a_choice,
            b_context,
            b_arm,
            b_choice,
            d_context: [0.5, 0.5],
            d_arm: [0.5, 0.5],
            d_choice: [1.0, 0.0, 0.0, 0.0],
            policies: Action::ALL,
            hyper,
            ambiguity: [0.0; N_JOINT],
        };
        for s in 0..N_JOINT {
            model.ambiguity[s] = column_entropy(&model.a_hint, s)
                + column_entropy(&model.a_reward, s)
                + column_entropy(&model.a_choice, s);
        }
        model.check()?;
        Ok(model)
    }

    /// Verifies normalization of every likelihood column, transition column and prior.
    pub fn check(&self) -> Result<()> {
        fn likelihood_ok<const O: usize>(a: &Likelihood<O>) -> bool {
            (0..N_JOINT).all(|s| {
                let col: f64 = (0..O).map(|o| a[o][s]).sum();
                (col - 1.0).abs() <= STOCHASTIC_TOL && (0..O).all(|o| a[o][s] >= 0.0)
            })
        }
        fn transition_ok<const S: usize>(b: &Transition<S>) -> bool {
            (0..S).all(|from| {
                let col: f64 = (0..S).map(|to| b[to][from]).sum();
                (col - 1.0).abs() <= STOCHASTIC_TOL
            })
        }
        fn prior_ok(d: &[f64]) -> bool {
            crate::math::is_simplex(d, STOCHASTIC_TOL)
        }
        let ok = likelihood_ok(&self.a_hint)
            && likelihood_ok(&self.a_reward)
            && likelihood_ok(&self.a_choice)
            && transition_ok(&self.b_context)
            && transition_ok(&self.b_arm)
            && self.b_choice.iter().all(transition_ok)
            && prior_ok(&self.d_context)
            && prior_ok(&self.d_arm)
            && prior_ok(&self.d_choice);
        if ok {
            Ok(())
        } else {
            Err(Error::Numerical("generative model arrays are not normalized".into()))
        }
    }

    /// `p(o | s)` over the three modalities jointly.
    #[inline]
    pub fn obs_likelihood(&self, hint: usize, reward: usize, choice: usize, s: usize) -> f64 {
        self.a_hint[hint][s] * self.a_reward[reward][s] * self.a_choice[choice][s]
    }
}

fn column_entropy<const O: usize>(a: &Likelihood<O>, s: usize) -> f64 {
    let col: Vec<f64> = (0..O).map(|o| a[o][s]).collect();
    crate::math::entropy(&col)
}
