//! Mechanism analyses on closed-loop simulations of fitted models:
//! reversal-aligned profile weights and precision, context-conditional
//! precision and hint rates, and profile stability under micro-reversals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{AgentSpec, Controller, ModelKind};
use crate::env::{Action, Context, TaskConfig};
use crate::error::{Error, Result};
use crate::math;
use crate::model::GenerativeModel;
use crate::recovery::{run_id, AGENT_STREAM_OFFSET};
use crate::simulation::{simulate, TrialRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReversalDirection {
    VolToStable,
    StableToVol,
}

impl ReversalDirection {
    pub fn matches(self, from: Context, to: Context) -> bool {
        match self {
            ReversalDirection::VolToStable => from == Context::Volatile && to == Context::Stable,
            ReversalDirection::StableToVol => from == Context::Stable && to == Context::Volatile,
        }
    }
}

/// Mean and standard error over events; `se` is absent for a single event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub se: Option<f64>,
    pub n: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let (mean, se) = math::mean_se(values);
        Stat {
            mean,
            se,
            n: values.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignedStat {
    /// Trials relative to the first trial of the new context.
    pub offset: i64,
    pub value: Stat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignedWeights {
    pub offset: i64,
    pub w0: Stat,
    pub w1: Stat,
}

/// Trial indices (within a run) where the true context changes.
pub fn reversal_onsets(run: &[TrialRecord], direction: Option<ReversalDirection>) -> Vec<usize> {
    (1..run.len())
        .filter(|&t| {
            let (from, to) = (run[t - 1].truth.context, run[t].truth.context);
            from != to && direction.is_none_or(|d| d.matches(from, to))
        })
        .collect()
}

/// Per-offset samples of `value` around every matching reversal in every run.
fn aligned_samples<F>(
    runs: &[Vec<TrialRecord>],
    direction: Option<ReversalDirection>,
    window: (usize, usize),
    value: F,
) -> Result<Vec<(i64, Vec<f64>)>>
where
    F: Fn(&TrialRecord) -> Result<f64>,
{
    let (pre, post) = (window.0 as i64, window.1 as i64);
    let mut buckets: Vec<(i64, Vec<f64>)> = (-pre..=post).map(|o| (o, Vec::new())).collect();
    let mut events = 0;
    for run in runs {
        for onset in reversal_onsets(run, direction) {
            events += 1;
            for (offset, values) in buckets.iter_mut() {
                let t = onset as i64 + *offset;
                if t >= 0 && (t as usize) < run.len() {
                    values.push(value(&run[t as usize])?);
                }
            }
        }
    }
    if events == 0 {
        return Err(Error::NoReversals);
    }
    buckets.retain(|(_, v)| !v.is_empty());
    Ok(buckets)
}

fn profile_weights(record: &TrialRecord) -> Result<[f64; 2]> {
    match record.weights.as_deref() {
        Some([w0, w1]) => Ok([*w0, *w1]),
        Some(w) => Err(Error::Contract(format!(
            "expected two profile weights, record {} trial {} has {}",
            record.run_id,
            record.trial,
            w.len()
        ))),
        None => Err(Error::Contract(format!(
            "record {} trial {} carries no profile weights; only profile models can be aligned",
            record.run_id, record.trial
        ))),
    }
}

/// Profile weights averaged over reversal events, for offsets `-pre..=post`.
pub fn align_to_reversals(
    runs: &[Vec<TrialRecord>],
    direction: ReversalDirection,
    window: (usize, usize),
) -> Result<Vec<AlignedWeights>> {
    let w0 = aligned_samples(runs, Some(direction), window, |r| Ok(profile_weights(r)?[0]))?;
    let w1 = aligned_samples(runs, Some(direction), window, |r| Ok(profile_weights(r)?[1]))?;
    Ok(w0
        .into_iter()
        .zip(w1)
        .map(|((offset, a), (_, b))| AlignedWeights {
            offset,
            w0: Stat::of(&a),
            w1: Stat::of(&b),
        })
        .collect())
}

/// Effective precision averaged over reversals of both directions.
pub fn reversal_aligned_gamma(runs: &[Vec<TrialRecord>], window: (usize, usize)) -> Result<Vec<AlignedStat>> {
    let samples = aligned_samples(runs, None, window, |r| {
        r.gamma_eff.ok_or_else(|| {
            Error::Contract(format!(
                "record {} trial {} has no effective precision",
                r.run_id, r.trial
            ))
        })
    })?;
    Ok(samples
        .into_iter()
        .map(|(offset, v)| AlignedStat {
            offset,
            value: Stat::of(&v),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContextStats {
    pub context: Context,
    pub n_trials: usize,
    /// Absent for agents without a precision parameter.
    pub mean_gamma: Option<f64>,
    pub hint_rate: f64,
}

/// Mean precision and hint rate per true context; contexts without trials are omitted.
pub fn context_conditional_stats(records: &[TrialRecord]) -> Vec<ContextStats> {
    [Context::Volatile, Context::Stable]
        .into_iter()
        .filter_map(|context| {
            let rows: Vec<&TrialRecord> = records.iter().filter(|r| r.truth.context == context).collect();
            if rows.is_empty() {
                return None;
            }
            let gammas: Option<Vec<f64>> = rows.iter().map(|r| r.gamma_eff).collect();
            let hints = rows.iter().filter(|r| r.action == Action::Hint).count();
            Some(ContextStats {
                context,
                n_trials: rows.len(),
                mean_gamma: gammas.map(|g| g.iter().sum::<f64>() / g.len() as f64),
                hint_rate: hints as f64 / rows.len() as f64,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityPoint {
    pub trial: usize,
    pub w0: Stat,
    pub w1: Stat,
    /// The better arm flipped on this trial.
    pub is_micro_reversal: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityResult {
    pub points: Vec<StabilityPoint>,
    /// Both profiles are the same, so the weights cannot affect behavior.
    pub profiles_identical: bool,
    pub sims: Vec<Vec<TrialRecord>>,
}

impl StabilityResult {
    /// Fraction of trials from `from_trial` on where mean w0 exceeds mean w1.
    pub fn dominance_fraction(&self, from_trial: usize) -> f64 {
        let tail: Vec<&StabilityPoint> = self.points.iter().filter(|p| p.trial >= from_trial).collect();
        if tail.is_empty() {
            return f64::NAN;
        }
        tail.iter().filter(|p| p.w0.mean > p.w1.mean).count() as f64 / tail.len() as f64
    }
}

/// Runs `n_sims` fresh simulations of an M3 spec in a single volatile block.
/// Simulation `i` uses environment seed `base_seed + i`.
pub fn profile_stability(
    spec: &AgentSpec,
    n_sims: usize,
    n_trials: usize,
    model: &GenerativeModel,
    base_seed: u64,
) -> Result<StabilityResult> {
    if spec.kind() != ModelKind::M3 {
        return Err(Error::Contract(format!(
            "profile stability needs a profile model, got {}",
            spec.kind()
        )));
    }
    profile_stability_of(&spec.controller()?, n_sims, n_trials, model, base_seed)
}

/// As [`profile_stability`] for any profile controller.
pub fn profile_stability_of(
    controller: &Controller,
    n_sims: usize,
    n_trials: usize,
    model: &GenerativeModel,
    base_seed: u64,
) -> Result<StabilityResult> {
    let Controller::Profiles { profiles, .. } = controller else {
        return Err(Error::Contract("profile stability needs a profile controller".into()));
    };
    if n_sims == 0 || n_trials == 0 {
        return Err(Error::Config(
            "stability analysis needs at least one simulation and one trial".into(),
        ));
    }
    let profiles_identical = profiles.windows(2).all(|p| p[0] == p[1]);
    let sims: Vec<Vec<TrialRecord>> = (0..n_sims)
        .into_par_iter()
        .map(|i| {
            let seed = base_seed.wrapping_add(i as u64);
            let task = TaskConfig::pure_volatile(n_trials, seed);
            simulate(
                controller,
                &task,
                model,
                seed.wrapping_add(AGENT_STREAM_OFFSET),
                &run_id("stability", i),
                "profiles",
            )
            .map(|s| s.records)
        })
        .collect::<Result<_>>()?;

    let mut points = Vec::with_capacity(n_trials);
    for t in 0..n_trials {
        let mut w0 = Vec::with_capacity(n_sims);
        let mut w1 = Vec::with_capacity(n_sims);
        for sim in &sims {
            let [a, b] = profile_weights(&sim[t])?;
            w0.push(a);
            w1.push(b);
        }
        let flipped = t > 0 && sims[0][t].truth.better_arm != sims[0][t - 1].truth.better_arm;
        points.push(StabilityPoint {
            trial: t,
            w0: Stat::of(&w0),
            w1: Stat::of(&w1),
            is_micro_reversal: flipped,
        });
    }
    Ok(StabilityResult {
        points,
        profiles_identical,
        sims,
    })
}

/// Mean difference in |Δw0| between the trial right after a micro-reversal
/// and every other trial, with a cluster bootstrap over simulations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicroReversalTest {
    pub mean_diff: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_event: usize,
    pub n_baseline: usize,
    pub n_boot: usize,
}

impl MicroReversalTest {
    pub fn ci_contains_zero(&self) -> bool {
        self.ci_low <= 0.0 && 0.0 <= self.ci_high
    }
}

/// `|w0[t] - w0[t-1]|` split by whether `t - 1` is a micro-reversal trial.
/// The flip at `t - 1` is first reflected in the belief used at `t`.
fn split_weight_changes(sim: &[TrialRecord]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut event = Vec::new();
    let mut baseline = Vec::new();
    for t in 2..sim.len() {
        let d = (profile_weights(&sim[t])?[0] - profile_weights(&sim[t - 1])?[0]).abs();
        let flipped = sim[t - 1].truth.better_arm != sim[t - 2].truth.better_arm;
        if flipped {
            event.push(d);
        } else {
            baseline.push(d);
        }
    }
    Ok((event, baseline))
}

fn pooled_diff(groups: &[(Vec<f64>, Vec<f64>)], pick: impl Iterator<Item = usize>) -> Option<f64> {
    let (mut se, mut ne, mut sb, mut nb) = (0.0, 0usize, 0.0, 0usize);
    for i in pick {
        se += groups[i].0.iter().sum::<f64>();
        ne += groups[i].0.len();
        sb += groups[i].1.iter().sum::<f64>();
        nb += groups[i].1.len();
    }
    (ne > 0 && nb > 0).then(|| se / ne as f64 - sb / nb as f64)
}

pub fn micro_reversal_test(sims: &[Vec<TrialRecord>], n_boot: usize, seed: u64) -> Result<MicroReversalTest> {
    let groups: Vec<(Vec<f64>, Vec<f64>)> = sims.iter().map(|s| split_weight_changes(s)).collect::<Result<_>>()?;
    let mean_diff = pooled_diff(&groups, 0..groups.len()).ok_or(Error::NoReversals)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut boot: Vec<f64> = (0..n_boot)
        .filter_map(|_| {
            let pick: Vec<usize> = (0..groups.len()).map(|_| rng.gen_range(0..groups.len())).collect();
            pooled_diff(&groups, pick.into_iter())
        })
        .collect();
    if boot.is_empty() {
        return Err(Error::Numerical("bootstrap produced no valid resamples".into()));
    }
    boot.sort_by(f64::total_cmp);
    let quantile = |q: f64| boot[((q * (boot.len() - 1) as f64).round() as usize).min(boot.len() - 1)];
    Ok(MicroReversalTest {
        mean_diff,
        ci_low: quantile(0.025),
        ci_high: quantile(0.975),
        n_event: groups.iter().map(|g| g.0.len()).sum(),
        n_baseline: groups.iter().map(|g| g.1.len()).sum(),
        n_boot,
    })
}

/// Settings for the mechanism report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Generator whose fits supply the parameters.
    pub source_generator: ModelKind,
    pub source_run: usize,
    pub source_fold: usize,
    /// Closed-loop runs per fitted model, seeded like the experiment runs.
    pub n_runs: usize,
    pub weight_window: (usize, usize),
    pub gamma_window: (usize, usize),
    pub stability_sims: usize,
    pub stability_trials: usize,
    pub stability_burn_in: usize,
    pub bootstrap_samples: usize,
    pub seed: u64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            source_generator: ModelKind::M3,
            source_run: 0,
            source_fold: 0,
            n_runs: 5,
            weight_window: (10, 40),
            gamma_window: (20, 20),
            stability_sims: 10,
            stability_trials: 200,
            stability_burn_in: 50,
            bootstrap_samples: 2000,
            seed: 7,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_runs == 0 || self.stability_sims == 0 || self.stability_trials == 0 || self.bootstrap_samples == 0 {
            return Err(Error::Config(
                "n_runs, stability_sims, stability_trials and bootstrap_samples must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSims {
    pub spec: AgentSpec,
    pub runs: Vec<Vec<TrialRecord>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MechanismReport {
    pub models: Vec<ModelSims>,
    /// Profile weights around volatile-to-stable reversals.
    pub weights_vol_to_stable: Vec<AlignedWeights>,
    pub weights_stable_to_vol: Vec<AlignedWeights>,
    pub gamma_aligned: Vec<(ModelKind, Vec<AlignedStat>)>,
    pub context_stats: Vec<(ModelKind, Vec<ContextStats>)>,
    pub stability: StabilityResult,
    pub micro_reversal: MicroReversalTest,
}

impl MechanismReport {
    pub fn context_stats(&self, kind: ModelKind) -> Option<&[ContextStats]> {
        self.context_stats
            .iter()
            .find(|(k, _)| *k == kind)
            .map(|(_, s)| s.as_slice())
    }

    /// Hint rate in volatile minus hint rate in stable contexts.
    pub fn hint_rate_gap(&self, kind: ModelKind) -> Option<f64> {
        let stats = self.context_stats(kind)?;
        let rate = |c| stats.iter().find(|s| s.context == c).map(|s| s.hint_rate);
        Some(rate(Context::Volatile)? - rate(Context::Stable)?)
    }

    /// First offset at or after the reversal where mean w0 drops below 0.5.
    pub fn w0_crossing_after_vol_to_stable(&self) -> Option<i64> {
        self.weights_vol_to_stable
            .iter()
            .find(|p| p.offset >= 0 && p.w0.mean < 0.5)
            .map(|p| p.offset)
    }
}

/// Re-simulates fitted M1/M2/M3 specs in closed loop and runs every analysis.
/// Run `i` of each model uses environment seed `base_seed + i`.
pub fn mechanism_report(
    fitted: &[AgentSpec],
    task: &TaskConfig,
    model: &GenerativeModel,
    base_seed: u64,
    config: &AnalysisConfig,
) -> Result<MechanismReport> {
    config.validate()?;
    let m3 = *fitted
        .iter()
        .find(|s| s.kind() == ModelKind::M3)
        .ok_or_else(|| Error::Contract("mechanism report needs a fitted M3 spec".into()))?;

    let models: Vec<ModelSims> = fitted
        .iter()
        .map(|spec| {
            let controller = spec.controller()?;
            let runs = (0..config.n_runs)
                .into_par_iter()
                .map(|i| {
                    let seed = base_seed.wrapping_add(i as u64);
                    let task = TaskConfig { seed, ..task.clone() };
                    let label = spec.kind().label();
                    simulate(
                        &controller,
                        &task,
                        model,
                        seed.wrapping_add(AGENT_STREAM_OFFSET),
                        &run_id(&format!("fitted_{label}"), i),
                        label,
                    )
                    .map(|s| s.records)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ModelSims { spec: *spec, runs })
        })
        .collect::<Result<_>>()?;

    let m3_runs = &models
        .iter()
        .find(|m| m.spec.kind() == ModelKind::M3)
        .expect("M3 spec is present")
        .runs;
    let weights_vol_to_stable = align_to_reversals(m3_runs, ReversalDirection::VolToStable, config.weight_window)?;
    let weights_stable_to_vol = align_to_reversals(m3_runs, ReversalDirection::StableToVol, config.weight_window)?;
    let gamma_aligned = models
        .iter()
        .map(|m| Ok((m.spec.kind(), reversal_aligned_gamma(&m.runs, config.gamma_window)?)))
        .collect::<Result<_>>()?;
    let context_stats = models
        .iter()
        .map(|m| {
            let all: Vec<TrialRecord> = m.runs.iter().flatten().cloned().collect();
            (m.spec.kind(), context_conditional_stats(&all))
        })
        .collect();
    let stability = profile_stability(&m3, config.stability_sims, config.stability_trials, model, config.seed)?;
    let micro_reversal = micro_reversal_test(&stability.sims, config.bootstrap_samples, config.seed)?;
    Ok(MechanismReport {
        models,
        weights_vol_to_stable,
        weights_stable_to_vol,
        gamma_aligned,
        context_stats,
        stability,
        micro_reversal,
    })
}
