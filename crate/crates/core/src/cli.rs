//! Configuration loading and the `simulate`, `recover` and `analyze`
//! commands behind the `vprof` binary. Every command computes its results
//! in memory before the first file is written.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{AgentSpec, ModelKind};
use crate::analysis::{mechanism_report, AnalysisConfig, MechanismReport};
use crate::env::{Context, TaskConfig};
use crate::error::{Error, Result};
use crate::fitting::FitResult;
use crate::model::{GenerativeModel, ModelHyperParams};
use crate::recovery::{
    generate_run, run_recovery, summarize_winners, ConfusionMatrix, ExperimentConfig, RecoveryOutput,
};
use crate::simulation::TrialRecord;
use crate::svg::{BarChart, LinePlot, Series};

/// The shipped configuration, with every default filled in.
pub const DEFAULT_CONFIG: &str = include_str!("../config/default.toml");

pub const CONFIG_COPY: &str = "config.toml";
pub const FITS_DIR: &str = "fits";

pub const TRIAL_LOG_HEADER: [&str; 15] = [
    "run_id",
    "trial",
    "true_context",
    "true_better_arm",
    "action",
    "obs_hint",
    "obs_reward",
    "obs_choice",
    "q_ctx_volatile",
    "q_arm_left",
    "w0",
    "w1",
    "gamma_eff",
    "xi_hint_eff",
    "action_loglik",
];

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// `seed` is replaced per run by the experiment's seed rule.
    pub task: TaskConfig,
    pub model: ModelHyperParams,
    pub experiment: ExperimentConfig,
    pub analysis: AnalysisConfig,
}

impl Config {
    pub fn parse(text: &str, path: &Path) -> Result<Config> {
        let config: Config = toml::from_str(text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<(Config, String)> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok((Config::parse(&text, path)?, text))
    }

    pub fn validate(&self) -> Result<()> {
        self.task.validate()?;
        self.experiment.validate()?;
        self.analysis.validate()?;
        GenerativeModel::new(&self.task, self.model)?;
        Ok(())
    }

    pub fn model(&self) -> Result<GenerativeModel> {
        GenerativeModel::new(&self.task, self.model)
    }
}

/// `%g`-style formatting with six significant digits.
pub fn fmt_g(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}"))
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_g).unwrap_or_default()
}

/// A set of output files assembled in memory.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Artifacts {
    pub fn add(&mut self, rel: impl Into<PathBuf>, bytes: impl Into<Vec<u8>>) {
        self.files.push((rel.into(), bytes.into()));
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.files.iter().map(|(p, _)| p.as_path())
    }

    pub fn get(&self, rel: &str) -> Option<&[u8]> {
        self.files
            .iter()
            .find(|(p, _)| p == Path::new(rel))
            .map(|(_, b)| b.as_slice())
    }

    pub fn write_to(&self, out_dir: &Path) -> Result<Vec<PathBuf>> {
        let mut written = Vec::with_capacity(self.files.len());
        for (rel, bytes) in &self.files {
            let path = out_dir.join(rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Numerical(format!("csv encoding failed: {e}"));
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.into_inner()
        .map_err(|e| Error::Numerical(format!("csv encoding failed: {e}")))
}

pub fn trial_log_csv(records: &[TrialRecord]) -> Result<Vec<u8>> {
    csv_bytes(
        &TRIAL_LOG_HEADER,
        records.iter().map(|r| {
            let w = |i: usize| r.weights.as_ref().map(|w| w[i]);
            vec![
                r.run_id.clone(),
                r.trial.to_string(),
                r.truth.context.name().into(),
                r.truth.better_arm.name().into(),
                r.action.name().into(),
                r.obs.hint.name().into(),
                r.obs.reward.name().into(),
                r.obs.choice.name().into(),
                opt(r.q_ctx_volatile),
                opt(r.q_arm_left),
                opt(w(0)),
                opt(w(1)),
                opt(r.gamma_eff),
                opt(r.xi_hint_eff),
                fmt_g(r.action_loglik),
            ]
        }),
    )
}

/// One trial log per generator run.
pub fn simulate_artifacts(config: &Config) -> Result<Artifacts> {
    let model = config.model()?;
    let jobs: Vec<(AgentSpec, usize)> = config
        .experiment
        .generators
        .iter()
        .flat_map(|g| (0..config.experiment.runs_per_generator).map(move |r| (*g, r)))
        .collect();
    let logs = jobs
        .par_iter()
        .map(|(g, r)| {
            let sim = generate_run(g, *r, &config.experiment, &config.task, &model)?;
            let id = sim.records.first().map(|t| t.run_id.clone()).unwrap_or_default();
            Ok((format!("{id}.csv"), trial_log_csv(&sim.records)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Artifacts::default();
    for (name, bytes) in logs {
        out.add(name, bytes);
    }
    Ok(out)
}

pub fn cmd_simulate(config_path: &Path, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let (config, _) = Config::load(config_path)?;
    simulate_artifacts(&config)?.write_to(out_dir)
}

/// Fits of one generated run, as stored under `fits/`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFits {
    pub run_id: String,
    pub generator: AgentSpec,
    pub run_index: usize,
    pub env_seed: u64,
    pub fits: Vec<FitResult>,
}

impl RunFits {
    pub fn fit(&self, kind: ModelKind) -> Option<&FitResult> {
        self.fits.iter().find(|f| f.kind == kind)
    }
}

pub fn confusion_csv(m: &ConfusionMatrix) -> Result<Vec<u8>> {
    let mut header: Vec<String> = vec!["generator".into()];
    for k in &m.models {
        header.push(format!("{k}_mean"));
        header.push(format!("{k}_se"));
    }
    header.extend(["winner".into(), "tie".into()]);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    csv_bytes(
        &header,
        m.generators.iter().enumerate().map(|(i, g)| {
            let mut row = vec![g.clone()];
            for c in &m.cells[i] {
                row.push(fmt_g(c.mean));
                row.push(fmt_g(c.se));
            }
            row.push(m.models[m.winners[i]].label().into());
            row.push(m.ties[i].to_string());
            row
        }),
    )
}

fn matrix_text(m: &ConfusionMatrix, title: &str) -> String {
    let mut rows: Vec<Vec<String>> = vec![std::iter::once("generator".to_string())
        .chain(m.models.iter().map(|k| k.label().to_string()))
        .collect()];
    for (i, g) in m.generators.iter().enumerate() {
        let mut row = vec![g.clone()];
        for (j, c) in m.cells[i].iter().enumerate() {
            let star = if m.winners[i] == j { "*" } else { "" };
            row.push(format!("{} ± {}{star}", fmt_g(c.mean), fmt_g(c.se)));
        }
        rows.push(row);
    }
    let mut out = format!("{title}\n");
    out.push_str(&aligned(&rows));
    out
}

fn aligned(rows: &[Vec<String>]) -> String {
    let n = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..n)
        .map(|j| {
            rows.iter()
                .filter_map(|r| r.get(j))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for r in rows {
        let cells: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(j, s)| format!("{s:<w$}", w = widths[j]))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

pub fn recovery_summary(out: &RecoveryOutput) -> String {
    let mut s = String::new();
    s.push_str(&matrix_text(
        &out.aic,
        "AIC (mean ± se across runs; * marks the row winner)",
    ));
    s.push('\n');
    s.push_str(&matrix_text(
        &out.test_ll,
        "Held-out log-likelihood per fold (mean ± se; * marks the row winner)",
    ));
    s.push('\n');
    s.push_str(&matrix_text(&out.bic, "BIC (mean ± se; * marks the row winner)"));
    s.push('\n');
    let mut rows = vec![vec![
        "generator".into(),
        "winner".into(),
        "runner-up".into(),
        "delta AIC".into(),
    ]];
    for w in summarize_winners(&out.aic) {
        rows.push(vec![
            w.generator,
            format!("{}{}", w.winner, if w.tie { " (tie)" } else { "" }),
            w.runner_up.map(|k| k.label().to_string()).unwrap_or_default(),
            opt(w.delta),
        ]);
    }
    s.push_str("Winners by AIC\n");
    s.push_str(&aligned(&rows));
    s.push('\n');
    let mut rows = vec![[
        "run",
        "fold",
        "gamma0",
        "gamma1",
        "hint_scale",
        "arm_scale",
        "xi_hint_0",
        "xi_hint_1",
    ]
    .iter()
    .map(|x| x.to_string())
    .collect::<Vec<_>>()];
    for r in &out.param_recovery {
        rows.push(vec![
            r.run_index.to_string(),
            r.fold.to_string(),
            fmt_g(r.gamma0),
            fmt_g(r.gamma1),
            fmt_g(r.hint_scale),
            fmt_g(r.arm_scale),
            fmt_g(r.xi_hint_profile0),
            fmt_g(r.xi_hint_profile1),
        ]);
    }
    s.push_str("Recovered M3 parameters on M3 data\n");
    s.push_str(&aligned(&rows));
    s
}

pub fn recover_artifacts(out: &RecoveryOutput, config: &Config, config_text: &str) -> Result<Artifacts> {
    let mut a = Artifacts::default();
    a.add("aic_confusion.csv", confusion_csv(&out.aic)?);
    a.add("ll_confusion.csv", confusion_csv(&out.test_ll)?);
    a.add("bic_confusion.csv", confusion_csv(&out.bic)?);
    a.add(
        "param_recovery.csv",
        csv_bytes(
            &[
                "run",
                "fold",
                "gamma0",
                "gamma1",
                "hint_scale",
                "arm_scale",
                "xi_hint_profile0",
                "xi_hint_profile1",
                "hint_ratio",
            ],
            out.param_recovery.iter().map(|r| {
                vec![
                    r.run_index.to_string(),
                    r.fold.to_string(),
                    fmt_g(r.gamma0),
                    fmt_g(r.gamma1),
                    fmt_g(r.hint_scale),
                    fmt_g(r.arm_scale),
                    fmt_g(r.xi_hint_profile0),
                    fmt_g(r.xi_hint_profile1),
                    fmt_g(r.hint_ratio()),
                ]
            }),
        )?,
    );
    for run in &out.runs {
        let fits = RunFits {
            run_id: run.run_id(),
            generator: run.generator,
            run_index: run.run_index,
            env_seed: config.experiment.run_seeds(run.run_index).0,
            fits: run.fits.clone(),
        };
        let json =
            serde_json::to_vec_pretty(&fits).map_err(|e| Error::Numerical(format!("json encoding failed: {e}")))?;
        a.add(Path::new(FITS_DIR).join(format!("{}.json", fits.run_id)), json);
    }
    a.add("summary.txt", recovery_summary(out));
    a.add(CONFIG_COPY, config_text);
    Ok(a)
}

pub fn cmd_recover(config_path: &Path, out_dir: &Path) -> Result<RecoveryOutput> {
    let (config, text) = Config::load(config_path)?;
    for w in config.task.warnings() {
        eprintln!("warning: {w}");
    }
    let out = run_recovery(&config.experiment, &config.task, config.model)?;
    recover_artifacts(&out, &config, &text)?.write_to(out_dir)?;
    Ok(out)
}

/// Loads the configuration copy and run fits written by `recover`.
pub fn load_fit_dir(fit_dir: &Path) -> Result<(Config, RunFits)> {
    let config_path = fit_dir.join(CONFIG_COPY);
    if !config_path.exists() {
        return Err(Error::Io {
            path: config_path.display().to_string(),
            source: std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "not a recovery output directory (run `vprof recover` first)",
            ),
        });
    }
    let (config, _) = Config::load(&config_path)?;
    let a = &config.analysis;
    let id = crate::recovery::run_id(a.source_generator.label(), a.source_run);
    let path = fit_dir.join(FITS_DIR).join(format!("{id}.json"));
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let fits: RunFits = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Ok((config, fits))
}

/// Fitted specs of M1, M2 and M3 for the configured fold.
pub fn fitted_specs(fits: &RunFits, fold: usize) -> Result<Vec<AgentSpec>> {
    ModelKind::FITTED
        .iter()
        .map(|&k| {
            let fit = fits
                .fit(k)
                .ok_or_else(|| Error::Contract(format!("{} has no {k} fit", fits.run_id)))?;
            let f = fit
                .folds
                .get(fold)
                .ok_or_else(|| Error::Contract(format!("{} {k} fit has no fold {fold}", fits.run_id)))?;
            AgentSpec::from_params(k, &f.best_params)
        })
        .collect()
}

pub fn analyze(fit_dir: &Path) -> Result<(Config, MechanismReport)> {
    let (config, fits) = load_fit_dir(fit_dir)?;
    let specs = fitted_specs(&fits, config.analysis.source_fold)?;
    let model = config.model()?;
    let report = mechanism_report(
        &specs,
        &config.task,
        &model,
        config.experiment.base_seed,
        &config.analysis,
    )?;
    Ok((config, report))
}

fn weights_csv(points: &[crate::analysis::AlignedWeights]) -> Result<Vec<u8>> {
    csv_bytes(
        &["offset", "mean_w0", "se_w0", "mean_w1", "se_w1", "n_events"],
        points.iter().map(|p| {
            vec![
                p.offset.to_string(),
                fmt_g(p.w0.mean),
                opt(p.w0.se),
                fmt_g(p.w1.mean),
                opt(p.w1.se),
                p.w0.n.to_string(),
            ]
        }),
    )
}

fn weights_plot(points: &[crate::analysis::AlignedWeights], title: &str) -> String {
    let series = |label: &str, f: fn(&crate::analysis::AlignedWeights) -> crate::analysis::Stat| Series {
        label: label.into(),
        points: points.iter().map(|p| (p.offset as f64, f(p).mean)).collect(),
        band: Some(points.iter().map(|p| f(p).se.unwrap_or(0.0)).collect()),
    };
    LinePlot {
        title: title.into(),
        x_label: "trials from reversal".into(),
        y_label: "profile weight".into(),
        series: vec![series("w0 (volatile)", |p| p.w0), series("w1 (stable)", |p| p.w1)],
        markers: vec![0.0],
        y_range: Some((0.0, 1.0)),
    }
    .render()
}

fn context_table<F>(report: &MechanismReport, value: F) -> Vec<(ModelKind, Context, Option<f64>, usize)>
where
    F: Fn(&crate::analysis::ContextStats) -> Option<f64>,
{
    report
        .context_stats
        .iter()
        .flat_map(|(k, stats)| {
            stats
                .iter()
                .map(|s| (*k, s.context, value(s), s.n_trials))
                .collect::<Vec<_>>()
        })
        .collect()
}

fn context_bars(
    report: &MechanismReport,
    title: &str,
    y_label: &str,
    value: fn(&crate::analysis::ContextStats) -> Option<f64>,
) -> String {
    let contexts = [Context::Volatile, Context::Stable];
    BarChart {
        title: title.into(),
        y_label: y_label.into(),
        groups: contexts.iter().map(|c| c.name().to_string()).collect(),
        bars: report
            .context_stats
            .iter()
            .map(|(k, stats)| {
                let vals = contexts
                    .iter()
                    .map(|c| stats.iter().find(|s| s.context == *c).and_then(value).unwrap_or(0.0))
                    .collect();
                (k.label().to_string(), vals)
            })
            .collect(),
    }
    .render()
}

pub fn analyze_artifacts(report: &MechanismReport) -> Result<Artifacts> {
    let mut a = Artifacts::default();
    a.add(
        "fitted_params.csv",
        csv_bytes(
            &["model", "params"],
            report.models.iter().map(|m| {
                let names = AgentSpec::param_names(m.spec.kind());
                let p: Vec<String> = names
                    .iter()
                    .zip(m.spec.params())
                    .map(|(n, v)| format!("{n}={}", fmt_g(v)))
                    .collect();
                vec![m.spec.kind().label().to_string(), p.join(";")]
            }),
        )?,
    );

    a.add(
        "panel_a_weights_vol_to_stable.csv",
        weights_csv(&report.weights_vol_to_stable)?,
    );
    a.add(
        "panel_a.svg",
        weights_plot(
            &report.weights_vol_to_stable,
            "Profile weights around volatile to stable reversals",
        ),
    );
    a.add(
        "panel_b_weights_stable_to_vol.csv",
        weights_csv(&report.weights_stable_to_vol)?,
    );
    a.add(
        "panel_b.svg",
        weights_plot(
            &report.weights_stable_to_vol,
            "Profile weights around stable to volatile reversals",
        ),
    );

    a.add(
        "panel_c_gamma_aligned.csv",
        csv_bytes(
            &["model", "offset", "mean_gamma", "se_gamma", "n_events"],
            report.gamma_aligned.iter().flat_map(|(k, pts)| {
                pts.iter().map(move |p| {
                    vec![
                        k.label().to_string(),
                        p.offset.to_string(),
                        fmt_g(p.value.mean),
                        opt(p.value.se),
                        p.value.n.to_string(),
                    ]
                })
            }),
        )?,
    );
    a.add(
        "panel_c.svg",
        LinePlot {
            title: "Effective precision around context reversals".into(),
            x_label: "trials from reversal".into(),
            y_label: "gamma".into(),
            series: report
                .gamma_aligned
                .iter()
                .map(|(k, pts)| Series {
                    label: k.label().into(),
                    points: pts.iter().map(|p| (p.offset as f64, p.value.mean)).collect(),
                    band: Some(pts.iter().map(|p| p.value.se.unwrap_or(0.0)).collect()),
                })
                .collect(),
            markers: vec![0.0],
            y_range: None,
        }
        .render(),
    );

    a.add(
        "panel_d_context_gamma.csv",
        csv_bytes(
            &["model", "context", "mean_gamma", "n_trials"],
            context_table(report, |s| s.mean_gamma)
                .into_iter()
                .map(|(k, c, v, n)| vec![k.label().into(), c.name().into(), opt(v), n.to_string()]),
        )?,
    );
    a.add(
        "panel_d.svg",
        context_bars(report, "Mean effective precision by true context", "gamma", |s| {
            s.mean_gamma
        }),
    );
    a.add(
        "panel_e_context_hint_rate.csv",
        csv_bytes(
            &["model", "context", "hint_rate", "n_trials"],
            context_table(report, |s| Some(s.hint_rate))
                .into_iter()
                .map(|(k, c, v, n)| vec![k.label().into(), c.name().into(), opt(v), n.to_string()]),
        )?,
    );
    a.add(
        "panel_e.svg",
        context_bars(report, "Hint rate by true context", "hint rate", |s| Some(s.hint_rate)),
    );

    let st = &report.stability;
    a.add(
        "panel_f_profile_stability.csv",
        csv_bytes(
            &["trial", "mean_w0", "mean_w1", "is_micro_reversal"],
            st.points.iter().map(|p| {
                vec![
                    p.trial.to_string(),
                    fmt_g(p.w0.mean),
                    fmt_g(p.w1.mean),
                    u8::from(p.is_micro_reversal).to_string(),
                ]
            }),
        )?,
    );
    let series = |label: &str, f: fn(&crate::analysis::StabilityPoint) -> crate::analysis::Stat| Series {
        label: label.into(),
        points: st.points.iter().map(|p| (p.trial as f64, f(p).mean)).collect(),
        band: Some(st.points.iter().map(|p| f(p).se.unwrap_or(0.0)).collect()),
    };
    a.add(
        "panel_f.svg",
        LinePlot {
            title: "Profile weights in a purely volatile task".into(),
            x_label: "trial".into(),
            y_label: "profile weight".into(),
            series: vec![series("w0 (volatile)", |p| p.w0), series("w1 (stable)", |p| p.w1)],
            markers: st
                .points
                .iter()
                .filter(|p| p.is_micro_reversal)
                .map(|p| p.trial as f64)
                .collect(),
            y_range: Some((0.0, 1.0)),
        }
        .render(),
    );

    let m = &report.micro_reversal;
    a.add(
        "micro_reversal_test.csv",
        csv_bytes(
            &[
                "mean_diff",
                "ci_low",
                "ci_high",
                "n_event",
                "n_baseline",
                "n_boot",
                "ci_contains_zero",
            ],
            [vec![
                fmt_g(m.mean_diff),
                fmt_g(m.ci_low),
                fmt_g(m.ci_high),
                m.n_event.to_string(),
                m.n_baseline.to_string(),
                m.n_boot.to_string(),
                m.ci_contains_zero().to_string(),
            ]],
        )?,
    );
    a.add("analysis_summary.txt", analysis_summary(report));
    Ok(a)
}

pub fn analysis_summary(report: &MechanismReport) -> String {
    let mut rows = vec![vec![
        "model".to_string(),
        "params".into(),
        "gamma vol".into(),
        "gamma stable".into(),
        "hint vol".into(),
        "hint stable".into(),
    ]];
    for m in &report.models {
        let k = m.spec.kind();
        let stats = report.context_stats(k).unwrap_or(&[]);
        let get = |c: Context| stats.iter().find(|s| s.context == c);
        rows.push(vec![
            k.label().into(),
            m.spec.params().iter().map(|v| fmt_g(*v)).collect::<Vec<_>>().join(" "),
            opt(get(Context::Volatile).and_then(|s| s.mean_gamma)),
            opt(get(Context::Stable).and_then(|s| s.mean_gamma)),
            opt(get(Context::Volatile).map(|s| s.hint_rate)),
            opt(get(Context::Stable).map(|s| s.hint_rate)),
        ]);
    }
    let mut s = String::from("Fitted models in closed loop\n");
    s.push_str(&aligned(&rows));
    s.push('\n');
    let crossing = report
        .w0_crossing_after_vol_to_stable()
        .map_or("never".to_string(), |o| format!("+{o}"));
    s.push_str(&format!(
        "w0 first below 0.5 after volatile to stable reversal: {crossing}\n"
    ));
    let st = &report.stability;
    s.push_str(&format!(
        "pure volatile: mean w0 > mean w1 on {} of trials from 50{}\n",
        fmt_g(st.dominance_fraction(50)),
        if st.profiles_identical {
            " (profiles identical)"
        } else {
            ""
        }
    ));
    let m = &report.micro_reversal;
    s.push_str(&format!(
        "micro-reversal |dw0| difference {} (95% CI {} to {}, {} boot)\n",
        fmt_g(m.mean_diff),
        fmt_g(m.ci_low),
        fmt_g(m.ci_high),
        m.n_boot
    ));
    s
}

pub fn cmd_analyze(fit_dir: &Path, out_dir: &Path) -> Result<MechanismReport> {
    let (_, report) = analyze(fit_dir)?;
    analyze_artifacts(&report)?.write_to(out_dir)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_format() {
        assert_eq!(fmt_g(0.0), "0");
        assert_eq!(fmt_g(72.8), "72.8");
        assert_eq!(fmt_g(1.0 / 3.0), "0.333333");
        assert_eq!(fmt_g(-123456.7), "-123457");
        assert_eq!(fmt_g(1234567.0), "1.23457e+06");
        assert_eq!(fmt_g(0.0001234567), "0.000123457");
        assert_eq!(fmt_g(0.00001234567), "1.23457e-05");
        assert_eq!(fmt_g(999999.5), "1e+06");
        assert_eq!(fmt_g(2.5), "2.5");
        assert_eq!(fmt_g(f64::NAN), "nan");
    }

    #[test]
    fn shipped_config_is_the_default() {
        let c = Config::parse(DEFAULT_CONFIG, Path::new("default.toml")).unwrap();
        assert_eq!(c, Config::default());
    }

    #[test]
    fn empty_config_is_default() {
        assert_eq!(Config::parse("", Path::new("x")).unwrap(), Config::default());
    }

    #[test]
    fn unknown_key_and_bad_value_are_config_errors() {
        let e = Config::parse("[task]\nn_trial = 3\n", Path::new("x.toml")).unwrap_err();
        assert!(e.is_config());
        let e = Config::parse("[task]\nhint_accuracy = 1.5\n", Path::new("x.toml")).unwrap_err();
        assert!(e.is_config());
        let e = Config::parse("[task\n", Path::new("x.toml")).unwrap_err();
        assert!(e.is_config());
        assert!(e.to_string().contains("line 1"));
    }

    #[test]
    fn generators_parse_from_tables() {
        let c = Config::parse(
            "[experiment]\nruns_per_generator = 2\n[[experiment.generators]]\nkind = \"M1\"\ngamma = 4.0\n",
            Path::new("x"),
        )
        .unwrap();
        assert_eq!(c.experiment.generators, vec![AgentSpec::M1 { gamma: 4.0 }]);
    }

    #[test]
    fn aligned_text_pads_columns() {
        let t = aligned(&[vec!["a".into(), "bb".into()], vec!["ccc".into(), "d".into()]]);
        assert_eq!(t, "a    bb\nccc  d\n");
    }
}
