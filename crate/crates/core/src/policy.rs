//! Expected free energy, the policy posterior, and action likelihoods.
//!
//! Policies are single actions. For each one the predicted state is pushed
//! through every outcome modality:
//!
//! ```text
//! risk(π)      = KL( q(o_r | π) || softmax(C) )
//! cost(π)      = -E_q(o_r|π) ln softmax(C) = risk(π) + H[q(o_r | π)]
//! info_gain(π) = Σ_m H[q(o_m | π)] - E_q(s|π) H[A_m(· | s)]
//! G(π)         = cost(π) - info_gain(π)
//! p(π)         ∝ exp(-γ G(π) + ξ(π))
//! ```
//!
//! `o_r` is the reward modality, the only one with non-flat preferences.
//! Written as risk plus ambiguity, `G` is the same quantity up to a
//! policy-independent constant.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::beliefs::{predict, FactorizedBeliefs};
use crate::env::Action;
use crate::error::{Error, Result};
use crate::math;
use crate::model::{GenerativeModel, Likelihood, N_JOINT, N_POLICIES, N_REWARD_OBS};

/// Floor applied to the probability of an observed action.
pub const LOGLIK_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyTerms {
    pub risk: [f64; N_POLICIES],
    pub expected_cost: [f64; N_POLICIES],
    pub info_gain: [f64; N_POLICIES],
}

impl FreeEnergyTerms {
    pub fn g(&self) -> [f64; N_POLICIES] {
        std::array::from_fn(|i| self.expected_cost[i] - self.info_gain[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyEvaluation {
    pub g: [f64; N_POLICIES],
    pub risk: [f64; N_POLICIES],
    pub expected_cost: [f64; N_POLICIES],
    pub info_gain: [f64; N_POLICIES],
    pub posterior: [f64; N_POLICIES],
}

fn predicted_outcomes<const O: usize>(a: &Likelihood<O>, q: &[f64; N_JOINT]) -> [f64; O] {
    std::array::from_fn(|o| a[o].iter().zip(q).map(|(p, s)| p * s).sum())
}

/// Risk and information gain for every policy.
pub fn expected_free_energy(
    beliefs: &FactorizedBeliefs,
    model: &GenerativeModel,
    c_eff: &[f64; N_REWARD_OBS],
) -> FreeEnergyTerms {
    let log_pref = math::log_softmax(c_eff);
    let mut terms = FreeEnergyTerms {
        risk: [0.0; N_POLICIES],
        expected_cost: [0.0; N_POLICIES],
        info_gain: [0.0; N_POLICIES],
    };
    for (i, &action) in model.policies.iter().enumerate() {
        let q = predict(beliefs, action, model).joint();
        let hint = predicted_outcomes(&model.a_hint, &q);
        let reward = predicted_outcomes(&model.a_reward, &q);
        let choice = predicted_outcomes(&model.a_choice, &q);
        let outcome_entropy = math::entropy(&hint) + math::entropy(&reward) + math::entropy(&choice);
        let expected_ambiguity: f64 = q.iter().zip(&model.ambiguity).map(|(p, h)| p * h).sum();
        // clamp rounding noise; the term is a mutual information
        terms.info_gain[i] = (outcome_entropy - expected_ambiguity).max(0.0);
        let reward_entropy = math::entropy(&reward);
        terms.risk[i] = math::kl_to_log(&reward, &log_pref).max(0.0);
        terms.expected_cost[i] = terms.risk[i] + reward_entropy;
    }
    terms
}

/// `softmax(-γ G + ξ)`, max-stabilized.
pub fn policy_posterior(g: &[f64; N_POLICIES], xi: &[f64; N_POLICIES], gamma: f64) -> Result<[f64; N_POLICIES]> {
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical(format!("non-finite expected free energy {g:?}")));
    }
    if gamma.is_nan() || gamma <= 0.0 || gamma.is_infinite() {
        return Err(Error::Numerical(format!("precision must be positive, got {gamma}")));
    }
    let logits: [f64; N_POLICIES] = std::array::from_fn(|i| -gamma * g[i] + xi[i]);
    let p = math::softmax(&logits);
    Ok([p[0], p[1], p[2], p[3]])
}

/// Full evaluation for one trial given effective control parameters.
pub fn evaluate(
    beliefs: &FactorizedBeliefs,
    model: &GenerativeModel,
    c_eff: &[f64; N_REWARD_OBS],
    xi_eff: &[f64; N_POLICIES],
    gamma_eff: f64,
) -> Result<PolicyEvaluation> {
    let terms = expected_free_energy(beliefs, model, c_eff);
    let g = terms.g();
    let posterior = policy_posterior(&g, xi_eff, gamma_eff)?;
    Ok(PolicyEvaluation {
        g,
        risk: terms.risk,
        expected_cost: terms.expected_cost,
        info_gain: terms.info_gain,
        posterior,
    })
}

/// Categorical draw from the policy posterior.
pub fn sample_action<R: Rng + ?Sized>(posterior: &[f64; N_POLICIES], rng: &mut R) -> Action {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in posterior.iter().enumerate() {
        acc += p;
        if u < acc {
            return Action::ALL[i];
        }
    }
    // u landed in rounding slack at the top; take the last action with mass
    let last = posterior.iter().rposition(|&p| p > 0.0).unwrap_or(N_POLICIES - 1);
    Action::ALL[last]
}

/// Log-probability of an observed action, floored at `ln(1e-12)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionLogLik {
    pub value: f64,
    /// Set when the floor was applied.
    pub floored: bool,
}

pub fn action_loglik(posterior: &[f64; N_POLICIES], action: Action) -> ActionLogLik {
    let p = posterior[action.index()];
    if p >= LOGLIK_FLOOR {
        ActionLogLik {
            value: p.ln(),
            floored: false,
        }
    } else {
        ActionLogLik {
            value: LOGLIK_FLOOR.ln(),
            floored: true,
        }
    }
}
