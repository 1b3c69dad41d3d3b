//! Two-armed bandit with latent volatility contexts.
//!
//! Contexts alternate in fixed blocks. Inside a volatile block the better
//! arm flips on a fixed period (micro-reversals); inside a stable block it is
//! drawn once and held. Each step emits three observation modalities: a hint
//! cue, a reward outcome and an echo of the executed action.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four actions, in policy order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Start,
    Hint,
    Left,
    Right,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Start, Action::Hint, Action::Left, Action::Right];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Start => "start",
            Action::Hint => "hint",
            Action::Left => "left",
            Action::Right => "right",
        }
    }

    /// The arm pulled by this action, if any.
    pub fn arm(self) -> Option<Arm> {
        match self {
            Action::Left => Some(Arm::Left),
            Action::Right => Some(Arm::Right),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Context {
    Volatile,
    Stable,
}

impl Context {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Context::Volatile => "volatile",
            Context::Stable => "stable",
        }
    }

    pub fn other(self) -> Context {
        match self {
            Context::Volatile => Context::Stable,
            Context::Stable => Context::Volatile,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Left,
    Right,
}

impl Arm {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Arm::Left => "left",
            Arm::Right => "right",
        }
    }

    pub fn other(self) -> Arm {
        match self {
            Arm::Left => Arm::Right,
            Arm::Right => Arm::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HintObs {
    Null,
    HintLeft,
    HintRight,
}

impl HintObs {
    pub const ALL: [HintObs; 3] = [HintObs::Null, HintObs::HintLeft, HintObs::HintRight];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            HintObs::Null => "null",
            HintObs::HintLeft => "hint_left",
            HintObs::HintRight => "hint_right",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardObs {
    Null,
    Loss,
    Win,
}

impl RewardObs {
    pub const ALL: [RewardObs; 3] = [RewardObs::Null, RewardObs::Loss, RewardObs::Win];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            RewardObs::Null => "null",
            RewardObs::Loss => "loss",
            RewardObs::Win => "win",
        }
    }

    /// Scalar reward used by the value-learning baselines.
    pub fn scalar(self) -> f64 {
        match self {
            RewardObs::Null => 0.0,
            RewardObs::Loss => -1.0,
            RewardObs::Win => 1.0,
        }
    }
}

/// One trial's outcome across the three modalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub hint: HintObs,
    pub reward: RewardObs,
    /// Always the executed action.
    pub choice: Action,
}

impl Observation {
    /// Checks the modality coupling rules against the action that produced it.
    pub fn is_consistent_with(&self, action: Action) -> bool {
        self.choice == action
            && ((self.reward == RewardObs::Null) == action.arm().is_none())
            && ((self.hint == HintObs::Null) == (action != Action::Hint))
    }
}

/// Win probabilities for the better and worse arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardPair {
    pub good: f64,
    pub bad: f64,
}

impl RewardPair {
    pub fn win_prob(&self, chose_better: bool) -> f64 {
        if chose_better {
            self.good
        } else {
            self.bad
        }
    }
}

/// Task parameters. Defaults reproduce the reference protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskConfig {
    pub n_trials: usize,
    /// Trials per context regime.
    pub context_block_len: usize,
    pub volatile_arm_switch_period: usize,
    pub p_reward_volatile: RewardPair,
    pub p_reward_stable: RewardPair,
    pub hint_accuracy: f64,
    /// Regime of block 0; blocks alternate from there.
    pub first_context: Context,
    pub seed: u64,
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig {
            n_trials: 400,
            context_block_len: 40,
            volatile_arm_switch_period: 10,
            p_reward_volatile: RewardPair { good: 0.70, bad: 0.30 },
            p_reward_stable: RewardPair { good: 0.90, bad: 0.10 },
            hint_accuracy: 0.85,
            first_context: Context::Volatile,
            seed: 0,
        }
    }
}

impl TaskConfig {
    /// A single volatile block with no context reversals.
    pub fn pure_volatile(n_trials: usize, seed: u64) -> Self {
        TaskConfig {
            n_trials,
            context_block_len: n_trials,
            first_context: Context::Volatile,
            seed,
            ..TaskConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {p} is not a probability")))
            }
        };
        prob("p_reward_volatile.good", self.p_reward_volatile.good)?;
        prob("p_reward_volatile.bad", self.p_reward_volatile.bad)?;
        prob("p_reward_stable.good", self.p_reward_stable.good)?;
        prob("p_reward_stable.bad", self.p_reward_stable.bad)?;
        prob("hint_accuracy", self.hint_accuracy)?;
        for (name, pair) in [
            ("p_reward_volatile", self.p_reward_volatile),
            ("p_reward_stable", self.p_reward_stable),
        ] {
            if pair.good <= pair.bad {
                return Err(Error::Config(format!(
                    "{name}: good ({}) must exceed bad ({})",
                    pair.good, pair.bad
                )));
            }
        }
        if self.n_trials == 0 || self.context_block_len == 0 || self.volatile_arm_switch_period == 0 {
            return Err(Error::Config(
                "n_trials, context_block_len and volatile_arm_switch_period must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Non-fatal configuration remarks.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.context_block_len > 0 && !self.n_trials.is_multiple_of(self.context_block_len) {
            out.push(format!(
                "n_trials ({}) is not a multiple of context_block_len ({}); last block is truncated",
                self.n_trials, self.context_block_len
            ));
        }
        out
    }

    pub fn rewards(&self, context: Context) -> RewardPair {
        match context {
            Context::Volatile => self.p_reward_volatile,
            Context::Stable => self.p_reward_stable,
        }
    }

    /// Context at a trial; independent of actions and of the seed.
    pub fn context_at(&self, trial: usize) -> Context {
        if (trial / self.context_block_len).is_multiple_of(2) {
            self.first_context
        } else {
            self.first_context.other()
        }
    }
}

/// Ground-truth latent state at one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvState {
    pub trial_index: usize,
    pub context: Context,
    pub better_arm: Arm,
}

/// Seeded environment. The full latent schedule is drawn at construction,
/// so outcomes depend only on the seed and the action sequence.
#[derive(Debug, Clone)]
pub struct Environment {
    config: TaskConfig,
    schedule: Vec<EnvState>,
    trial: usize,
    rng: ChaCha8Rng,
}

impl Environment {
    pub fn new(config: TaskConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut schedule = Vec::with_capacity(config.n_trials);
        let mut block_arm = Arm::Left;
        for t in 0..config.n_trials {
            let context = config.context_at(t);
            let offset = t % config.context_block_len;
            if offset == 0 {
                block_arm = if rng.gen_bool(0.5) { Arm::Left } else { Arm::Right };
            }
            let better_arm = match context {
                Context::Stable => block_arm,
                Context::Volatile => {
                    if (offset / config.volatile_arm_switch_period).is_multiple_of(2) {
                        block_arm
                    } else {
                        block_arm.other()
                    }
                }
            };
            schedule.push(EnvState {
                trial_index: t,
                context,
                better_arm,
            });
        }
        Ok(Environment {
            config,
            schedule,
            trial: 0,
            rng,
        })
    }

    pub fn config(&self) -> &TaskConfig {
        &self.config
    }

    /// Latent state of the upcoming trial, or `None` once exhausted.
    pub fn state(&self) -> Option<EnvState> {
        self.schedule.get(self.trial).copied()
    }

    pub fn schedule(&self) -> &[EnvState] {
        &self.schedule
    }

    pub fn trial_index(&self) -> usize {
        self.trial
    }

    pub fn is_done(&self) -> bool {
        self.trial >= self.config.n_trials
    }

    pub fn step(&mut self, action: Action) -> Result<Observation> {
        let state = self.state().ok_or(Error::SequenceExhausted(self.config.n_trials))?;
        let hint = if action == Action::Hint {
            let truthful = self.rng.gen_bool(self.config.hint_accuracy);
            let cue = if truthful {
                state.better_arm
            } else {
                state.better_arm.other()
            };
            match cue {
                Arm::Left => HintObs::HintLeft,
                Arm::Right => HintObs::HintRight,
            }
        } else {
            HintObs::Null
        };
        let reward = match action.arm() {
            Some(arm) => {
                let p = self.config.rewards(state.context).win_prob(arm == state.better_arm);
                if self.rng.gen_bool(p) {
                    RewardObs::Win
                } else {
                    RewardObs::Loss
                }
            }
            None => RewardObs::Null,
        };
        self.trial += 1;
        Ok(Observation {
            hint,
            reward,
            choice: action,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env() -> Environment {
        Environment::new(TaskConfig::default()).unwrap()
    }

    #[test]
    fn schedule_starts_volatile_and_flips_at_block_boundary() {
        let e = env();
        assert_eq!(e.schedule()[0].context, Context::Volatile);
        assert_eq!(e.schedule()[39].context, Context::Volatile);
        assert_eq!(e.schedule()[40].context, Context::Stable);
        assert_eq!(e.schedule()[80].context, Context::Volatile);
    }

    #[test]
    fn volatile_arm_flips_every_period() {
        let e = env();
        let s = e.schedule();
        assert!(s[0..10].iter().all(|x| x.better_arm == s[0].better_arm));
        assert!(s[10..20].iter().all(|x| x.better_arm == s[0].better_arm.other()));
        assert_eq!(s[20].better_arm, s[0].better_arm);
    }

    #[test]
    fn stable_arm_constant_within_block() {
        let e = env();
        let s = e.schedule();
        assert!(s[40..80].iter().all(|x| x.better_arm == s[40].better_arm));
    }

    #[test]
    fn start_yields_null_outcomes() {
        let mut e = env();
        let o = e.step(Action::Start).unwrap();
        assert_eq!(
            o,
            Observation {
                hint: HintObs::Null,
                reward: RewardObs::Null,
                choice: Action::Start
            }
        );
    }

    #[test]
    fn stepping_past_the_end_fails() {
        let mut e = Environment::new(TaskConfig {
            n_trials: 2,
            context_block_len: 2,
            ..TaskConfig::default()
        })
        .unwrap();
        e.step(Action::Left).unwrap();
        e.step(Action::Left).unwrap();
        assert!(matches!(e.step(Action::Left), Err(Error::SequenceExhausted(2))));
    }

    #[test]
    fn rejects_bad_probabilities() {
        let c = TaskConfig {
            hint_accuracy: 1.5,
            ..TaskConfig::default()
        };
        assert!(matches!(Environment::new(c), Err(Error::Config(_))));
        let c = TaskConfig {
            p_reward_stable: RewardPair { good: 0.1, bad: 0.9 },
            ..TaskConfig::default()
        };
        assert!(Environment::new(c).is_err());
    }

    #[test]
    fn uneven_blocks_warn_but_construct() {
        let c = TaskConfig {
            n_trials: 100,
            ..TaskConfig::default()
        };
        assert_eq!(c.warnings().len(), 1);
        assert!(Environment::new(c).is_ok());
    }

    #[test]
    fn observations_respect_modality_rules() {
        let mut e = env();
        for t in 0..400 {
            let a = Action::ALL[t % 4];
            let o = e.step(a).unwrap();
            assert!(o.is_consistent_with(a));
        }
    }
}
