//! Value profiles, the context-to-profile assignment, and belief-weighted mixing.
//!
//! A profile bundles outcome-preference logits, policy-prior logits and a
//! policy precision. Profile weights pool the context belief through the
//! assignment matrix; effective parameters are the weight-averaged logits
//! and precision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::model::{N_POLICIES, N_REWARD_OBS};

const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueProfile {
    /// Reward-modality preference logits `[null, loss, win]`, mean-centered.
    pub c_logits: [f64; N_REWARD_OBS],
    /// Policy-prior logits in policy order. Kept as given; the softmax gauge
    /// is fixed by centering at the point of use.
    pub xi_logits: [f64; N_POLICIES],
    pub gamma: f64,
}

impl ValueProfile {
    pub fn new(c_logits: [f64; N_REWARD_OBS], xi_logits: [f64; N_POLICIES], gamma: f64) -> Result<Self> {
        if gamma.is_nan() || gamma <= 0.0 || gamma.is_infinite() {
            return Err(Error::Config(format!(
                "profile precision must be positive, got {gamma}"
            )));
        }
        if c_logits.iter().chain(&xi_logits).any(|x| !x.is_finite()) {
            return Err(Error::Config("profile logits must be finite".into()));
        }
        let centered = math::mean_center(&c_logits);
        Ok(ValueProfile {
            c_logits: [centered[0], centered[1], centered[2]],
            xi_logits,
            gamma,
        })
    }

    pub fn xi_centered(&self) -> [f64; N_POLICIES] {
        center4(&self.xi_logits)
    }
}

fn center4(v: &[f64; N_POLICIES]) -> [f64; N_POLICIES] {
    let c = math::mean_center(v);
    [c[0], c[1], c[2], c[3]]
}

/// Row-stochastic map from context states to profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentMatrix {
    rows: Vec<Vec<f64>>,
}

impl AssignmentMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.first().map(Vec::len).unwrap_or(0);
        if rows.is_empty() || k == 0 {
            return Err(Error::Config("assignment matrix must be non-empty".into()));
        }
        for row in &rows {
            if row.len() != k {
                return Err(Error::Shape {
                    expected: k,
                    got: row.len(),
                });
            }
            if !math::is_simplex(row, SIMPLEX_TOL) || row.iter().any(|&x| x > 1.0 + SIMPLEX_TOL) {
                return Err(Error::Config(format!("assignment row {row:?} is not on the simplex")));
            }
        }
        Ok(AssignmentMatrix { rows })
    }

    /// Hard one-to-one assignment of `n` context states to `n` profiles.
    pub fn identity(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        AssignmentMatrix { rows }
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn n_profiles(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// Trial-wise control parameters after mixing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParams {
    pub c_eff: [f64; N_REWARD_OBS],
    pub xi_eff: [f64; N_POLICIES],
    pub gamma_eff: f64,
    pub weights: Vec<f64>,
}

impl EffectiveParams {
    pub fn xi_centered(&self) -> [f64; N_POLICIES] {
        center4(&self.xi_eff)
    }
}

/// `w(k) = Σ_s q(s) Z[s, k]`.
pub fn profile_weights(q_context: &[f64], z: &AssignmentMatrix) -> Result<Vec<f64>> {
    if q_context.len() != z.n_states() {
        return Err(Error::Shape {
            expected: z.n_states(),
            got: q_context.len(),
        });
    }
    let mut w = vec![0.0; z.n_profiles()];
    for (q, row) in q_context.iter().zip(z.rows()) {
        for (wk, zk) in w.iter_mut().zip(row) {
            *wk += q * zk;
        }
    }
    Ok(w)
}

/// Linear mixture of profile logits and precisions, written as
/// `x_0 + Σ_k w_k (x_k - x_0)` so identical profiles reproduce their
/// parameters exactly.
pub fn mix(profiles: &[ValueProfile], weights: &[f64]) -> Result<EffectiveParams> {
    let Some(anchor) = profiles.first() else {
        return Err(Error::Config("at least one profile is required".into()));
    };
    if profiles.len() != weights.len() {
        return Err(Error::Shape {
            expected: profiles.len(),
            got: weights.len(),
        });
    }
    if !math::is_simplex(weights, SIMPLEX_TOL) {
        return Err(Error::Contract(format!(
            "profile weights {weights:?} are not a distribution"
        )));
    }
    let mut out = EffectiveParams {
        c_eff: anchor.c_logits,
        xi_eff: anchor.xi_logits,
        gamma_eff: anchor.gamma,
        weights: weights.to_vec(),
    };
    for (p, &w) in profiles.iter().zip(weights).skip(1) {
        for ((e, c), a) in out.c_eff.iter_mut().zip(&p.c_logits).zip(&anchor.c_logits) {
            *e += w * (c - a);
        }
        for ((e, x), a) in out.xi_eff.iter_mut().zip(&p.xi_logits).zip(&anchor.xi_logits) {
            *e += w * (x - a);
        }
        out.gamma_eff += w * (p.gamma - anchor.gamma);
    }
    Ok(out)
}
