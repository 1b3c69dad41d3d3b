//! The five behavioral models.
//!
//! * `M1`: fixed preferences, flat policy prior, static precision.
//! * `M2`: precision divided by `1 + κ H(q_arm)`.
//! * `M3`: two value profiles mixed by the context belief.
//! * `EpsGreedy` and `SoftmaxQ`: delta-rule action values over the four actions.
//!
//! The Bayesian models share one filtering path; only the mapping from
//! beliefs to `(ξ, γ)` differs between them.

use serde::{Deserialize, Serialize};

use crate::beliefs::{filter_step, FactorizedBeliefs};
use crate::env::{Action, Observation};
use crate::error::{Error, Result};
use crate::math;
use crate::model::{GenerativeModel, N_CONTEXT, N_POLICIES, N_REWARD_OBS};
use crate::policy::{expected_free_energy, policy_posterior};
use crate::profiles::{mix, profile_weights, AssignmentMatrix, ValueProfile};

/// Outcome preferences `[null, loss, win]` shared by every Bayesian model.
pub const PREFERENCES: [f64; N_REWARD_OBS] = [0.0, -5.0, 5.0];

/// Unscaled policy-prior logits of the volatile (0) and stable (1) profiles.
pub const M3_BASE_XI: [[f64; N_POLICIES]; 2] = [[0.0, 3.0, 0.0, 0.0], [0.0, 0.5, 0.0, 0.0]];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    M1,
    M2,
    M3,
    EpsGreedy,
    SoftmaxQ,
}

impl ModelKind {
    pub const FITTED: [ModelKind; 3] = [ModelKind::M1, ModelKind::M2, ModelKind::M3];

    pub fn label(self) -> &'static str {
        match self {
            ModelKind::M1 => "M1",
            ModelKind::M2 => "M2",
            ModelKind::M3 => "M3",
            ModelKind::EpsGreedy => "EpsGreedy",
            ModelKind::SoftmaxQ => "SoftmaxQ",
        }
    }

    /// Free parameters counted by the information criteria.
    pub fn n_params(self) -> usize {
        match self {
            ModelKind::M1 => 1,
            ModelKind::M2 => 2,
            ModelKind::M3 => 4,
            ModelKind::EpsGreedy | ModelKind::SoftmaxQ => 2,
        }
    }

    pub fn is_bayesian(self) -> bool {
        matches!(self, ModelKind::M1 | ModelKind::M2 | ModelKind::M3)
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum AgentSpec {
    M1 {
        gamma: f64,
    },
    M2 {
        gamma_base: f64,
        kappa: f64,
    },
    M3 {
        gamma0: f64,
        gamma1: f64,
        hint_scale: f64,
        arm_scale: f64,
    },
    EpsGreedy {
        epsilon: f64,
        alpha: f64,
    },
    SoftmaxQ {
        beta: f64,
        alpha: f64,
    },
}

impl AgentSpec {
    pub fn default_for(kind: ModelKind) -> AgentSpec {
        match kind {
            ModelKind::M1 => AgentSpec::M1 { gamma: 2.5 },
            ModelKind::M2 => AgentSpec::M2 {
                gamma_base: 2.5,
                kappa: 1.0,
            },
            ModelKind::M3 => AgentSpec::M3 {
                gamma0: 2.0,
                gamma1: 4.0,
                hint_scale: 1.0,
                arm_scale: 1.0,
            },
            ModelKind::EpsGreedy => AgentSpec::EpsGreedy {
                epsilon: 0.1,
                alpha: 0.1,
            },
            ModelKind::SoftmaxQ => AgentSpec::SoftmaxQ { beta: 1.0, alpha: 0.1 },
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            AgentSpec::M1 { .. } => ModelKind::M1,
            AgentSpec::M2 { .. } => ModelKind::M2,
            AgentSpec::M3 { .. } => ModelKind::M3,
            AgentSpec::EpsGreedy { .. } => ModelKind::EpsGreedy,
            AgentSpec::SoftmaxQ { .. } => ModelKind::SoftmaxQ,
        }
    }

    /// Parameter values in declaration order.
    pub fn params(&self) -> Vec<f64> {
        match *self {
            AgentSpec::M1 { gamma } => vec![gamma],
            AgentSpec::M2 { gamma_base, kappa } => vec![gamma_base, kappa],
            AgentSpec::M3 {
                gamma0,
                gamma1,
                hint_scale,
                arm_scale,
            } => vec![gamma0, gamma1, hint_scale, arm_scale],
            AgentSpec::EpsGreedy { epsilon, alpha } => vec![epsilon, alpha],
            AgentSpec::SoftmaxQ { beta, alpha } => vec![beta, alpha],
        }
    }

    pub fn param_names(kind: ModelKind) -> &'static [&'static str] {
        match kind {
            ModelKind::M1 => &["gamma"],
            ModelKind::M2 => &["gamma_base", "kappa"],
            ModelKind::M3 => &["gamma0", "gamma1", "hint_scale", "arm_scale"],
            ModelKind::EpsGreedy => &["epsilon", "alpha"],
            ModelKind::SoftmaxQ => &["beta", "alpha"],
        }
    }

    /// Rebuilds a spec from a parameter tuple.
    pub fn from_params(kind: ModelKind, p: &[f64]) -> Result<AgentSpec> {
        let expected = AgentSpec::param_names(kind).len();
        if p.len() != expected {
            return Err(Error::Shape { expected, got: p.len() });
        }
        let spec = match kind {
            ModelKind::M1 => AgentSpec::M1 { gamma: p[0] },
            ModelKind::M2 => AgentSpec::M2 {
                gamma_base: p[0],
                kappa: p[1],
            },
            ModelKind::M3 => AgentSpec::M3 {
                gamma0: p[0],
                gamma1: p[1],
                hint_scale: p[2],
                arm_scale: p[3],
            },
            ModelKind::EpsGreedy => AgentSpec::EpsGreedy {
                epsilon: p[0],
                alpha: p[1],
            },
            ModelKind::SoftmaxQ => AgentSpec::SoftmaxQ {
                beta: p[0],
                alpha: p[1],
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {x}")))
            }
        };
        let learning_rate = |x: f64| {
            if x > 0.0 && x <= 1.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("alpha must lie in (0, 1], got {x}")))
            }
        };
        match *self {
            AgentSpec::M1 { gamma } => positive("gamma", gamma),
            AgentSpec::M2 { gamma_base, kappa } => {
                positive("gamma_base", gamma_base)?;
                if kappa >= 0.0 && kappa.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Config(format!("kappa must be non-negative, got {kappa}")))
                }
            }
            AgentSpec::M3 {
                gamma0,
                gamma1,
                hint_scale,
                arm_scale,
            } => {
                positive("gamma0", gamma0)?;
                positive("gamma1", gamma1)?;
                positive("hint_scale", hint_scale)?;
                positive("arm_scale", arm_scale)
            }
            AgentSpec::EpsGreedy { epsilon, alpha } => {
                if !(0.0..=1.0).contains(&epsilon) {
                    return Err(Error::Config(format!("epsilon must lie in [0, 1], got {epsilon}")));
                }
                learning_rate(alpha)
            }
            AgentSpec::SoftmaxQ { beta, alpha } => {
                positive("beta", beta)?;
                learning_rate(alpha)
            }
        }
    }

    pub fn controller(&self) -> Result<Controller> {
        self.validate()?;
        Ok(match *self {
            AgentSpec::M1 { gamma } => Controller::Static {
                c: PREFERENCES,
                xi: [0.0; N_POLICIES],
                gamma,
            },
            AgentSpec::M2 { gamma_base, kappa } => Controller::EntropyCoupled {
                c: PREFERENCES,
                gamma_base,
                kappa,
            },
            AgentSpec::M3 {
                gamma0,
                gamma1,
                hint_scale,
                arm_scale,
            } => {
                let scaled =
                    |base: [f64; N_POLICIES]| [base[0], base[1] * hint_scale, base[2] * arm_scale, base[3] * arm_scale];
                Controller::Profiles {
                    profiles: vec![
                        ValueProfile::new(PREFERENCES, scaled(M3_BASE_XI[0]), gamma0)?,
                        ValueProfile::new(PREFERENCES, scaled(M3_BASE_XI[1]), gamma1)?,
                    ],
                    z: AssignmentMatrix::identity(N_CONTEXT),
                }
            }
            AgentSpec::EpsGreedy { epsilon, alpha } => Controller::EpsGreedy { epsilon, alpha },
            AgentSpec::SoftmaxQ { beta, alpha } => Controller::SoftmaxQ { beta, alpha },
        })
    }
}

/// Executable form of an agent: how beliefs or values become a policy.
#[derive(Debug, Clone, PartialEq)]
pub enum Controller {
    Static {
        c: [f64; N_REWARD_OBS],
        xi: [f64; N_POLICIES],
        gamma: f64,
    },
    EntropyCoupled {
        c: [f64; N_REWARD_OBS],
        gamma_base: f64,
        kappa: f64,
    },
    Profiles {
        profiles: Vec<ValueProfile>,
        z: AssignmentMatrix,
    },
    EpsGreedy {
        epsilon: f64,
        alpha: f64,
    },
    SoftmaxQ {
        beta: f64,
        alpha: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AgentState {
    Bayesian {
        beliefs: FactorizedBeliefs,
        last_action: Option<Action>,
    },
    Values {
        q: [f64; N_POLICIES],
        last_action: Option<Action>,
    },
}

impl AgentState {
    pub fn beliefs(&self) -> Option<&FactorizedBeliefs> {
        match self {
            AgentState::Bayesian { beliefs, .. } => Some(beliefs),
            AgentState::Values { .. } => None,
        }
    }

    pub fn q_values(&self) -> Option<&[f64; N_POLICIES]> {
        match self {
            AgentState::Values { q, .. } => Some(q),
            AgentState::Bayesian { .. } => None,
        }
    }
}

/// Everything a Bayesian controller needs from the beliefs at one trial.
/// Independent of the controller's parameters when preferences are
/// [`PREFERENCES`], which lets fitting reuse it across candidates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialInputs {
    /// Posterior after the previous trial.
    pub beliefs: FactorizedBeliefs,
    /// Expected free energy under [`PREFERENCES`].
    pub g: [f64; N_POLICIES],
    /// Predictive context belief for this trial (after the context transition).
    pub context_pred: [f64; N_CONTEXT],
    /// Predictive better-arm belief for this trial.
    pub arm_pred: [f64; 2],
}

impl TrialInputs {
    pub fn compute(beliefs: &FactorizedBeliefs, model: &GenerativeModel) -> Self {
        // context and arm transitions are action-independent
        let pred = crate::beliefs::predict(beliefs, Action::Start, model);
        TrialInputs {
            beliefs: *beliefs,
            g: expected_free_energy(beliefs, model, &PREFERENCES).g(),
            context_pred: pred.context,
            arm_pred: pred.arm,
        }
    }
}

/// Policy posterior plus the effective control parameters that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub posterior: [f64; N_POLICIES],
    pub gamma_eff: Option<f64>,
    pub xi_eff: Option<[f64; N_POLICIES]>,
    pub weights: Option<Vec<f64>>,
    pub context_pred: Option<[f64; N_CONTEXT]>,
    pub arm_pred: Option<[f64; 2]>,
}

impl Controller {
    pub fn is_bayesian(&self) -> bool {
        !matches!(self, Controller::EpsGreedy { .. } | Controller::SoftmaxQ { .. })
    }

    pub fn initial_state(&self, model: &GenerativeModel) -> AgentState {
        if self.is_bayesian() {
            AgentState::Bayesian {
                beliefs: FactorizedBeliefs::prior(model),
                last_action: None,
            }
        } else {
            AgentState::Values {
                q: [0.0; N_POLICIES],
                last_action: None,
            }
        }
    }

    pub fn decide(&self, state: &AgentState, model: &GenerativeModel) -> Result<Decision> {
        match (self, state) {
            (Controller::EpsGreedy { epsilon, .. }, AgentState::Values { q, .. }) => {
                Ok(value_decision(eps_greedy_posterior(q, *epsilon)))
            }
            (Controller::SoftmaxQ { beta, .. }, AgentState::Values { q, .. }) => {
                let logits: [f64; N_POLICIES] = std::array::from_fn(|i| beta * q[i]);
                let p = math::softmax(&logits);
                Ok(value_decision([p[0], p[1], p[2], p[3]]))
            }
            (c, AgentState::Bayesian { beliefs, .. }) if c.is_bayesian() => {
                self.decide_from_inputs(&TrialInputs::compute(beliefs, model), model)
            }
            _ => Err(Error::Contract("agent state does not match the controller kind".into())),
        }
    }

    /// Bayesian decision from precomputed trial inputs.
    pub fn decide_from_inputs(&self, inputs: &TrialInputs, model: &GenerativeModel) -> Result<Decision> {
        let g_for = |c: &[f64; N_REWARD_OBS]| {
            if *c == PREFERENCES {
                inputs.g
            } else {
                expected_free_energy(&inputs.beliefs, model, c).g()
            }
        };
        let (g, xi, gamma, weights) = match self {
            Controller::Static { c, xi, gamma } => (g_for(c), *xi, *gamma, None),
            Controller::EntropyCoupled { c, gamma_base, kappa } => {
                let h = math::entropy(&inputs.arm_pred);
                (g_for(c), [0.0; N_POLICIES], gamma_base / (1.0 + kappa * h), None)
            }
            Controller::Profiles { profiles, z } => {
                let w = profile_weights(&inputs.context_pred, z)?;
                let eff = mix(profiles, &w)?;
                (g_for(&eff.c_eff), eff.xi_eff, eff.gamma_eff, Some(w))
            }
            _ => return Err(Error::Contract("value-learning controller has no belief inputs".into())),
        };
        let centered = math::mean_center(&xi);
        let posterior = policy_posterior(&g, &[centered[0], centered[1], centered[2], centered[3]], gamma)?;
        Ok(Decision {
            posterior,
            gamma_eff: Some(gamma),
            xi_eff: Some(xi),
            weights,
            context_pred: Some(inputs.context_pred),
            arm_pred: Some(inputs.arm_pred),
        })
    }

    /// State after executing `action` and receiving `obs`.
    pub fn step(
        &self,
        state: &AgentState,
        action: Action,
        obs: &Observation,
        model: &GenerativeModel,
    ) -> Result<AgentState> {
        match (self, state) {
            (
                Controller::EpsGreedy { alpha, .. } | Controller::SoftmaxQ { alpha, .. },
                AgentState::Values { q, .. },
            ) => {
                let mut q = *q;
                let i = action.index();
                q[i] += alpha * (obs.reward.scalar() - q[i]);
                Ok(AgentState::Values {
                    q,
                    last_action: Some(action),
                })
            }
            (c, AgentState::Bayesian { beliefs, .. }) if c.is_bayesian() => Ok(AgentState::Bayesian {
                beliefs: filter_step(beliefs, action, obs, model)?,
                last_action: Some(action),
            }),
            _ => Err(Error::Contract("agent state does not match the controller kind".into())),
        }
    }
}

fn value_decision(posterior: [f64; N_POLICIES]) -> Decision {
    Decision {
        posterior,
        gamma_eff: None,
        xi_eff: None,
        weights: None,
        context_pred: None,
        arm_pred: None,
    }
}

/// Greedy action gets `1 - ε + ε/4`; ties go to the lowest action index.
fn eps_greedy_posterior(q: &[f64; N_POLICIES], epsilon: f64) -> [f64; N_POLICIES] {
    let mut best = 0;
    for i in 1..N_POLICIES {
        if q[i] > q[best] {
            best = i;
        }
    }
    let base = epsilon / N_POLICIES as f64;
    let mut p = [base; N_POLICIES];
    p[best] += 1.0 - epsilon;
    p
}

/// Policy posterior of `spec` in `state`.
pub fn agent_policy_posterior(spec: &AgentSpec, state: &AgentState, model: &GenerativeModel) -> Result<Decision> {
    spec.controller()?.decide(state, model)
}

pub fn agent_step(
    spec: &AgentSpec,
    state: &AgentState,
    action: Action,
    obs: &Observation,
    model: &GenerativeModel,
) -> Result<AgentState> {
    spec.controller()?.step(state, action, obs, model)
}
