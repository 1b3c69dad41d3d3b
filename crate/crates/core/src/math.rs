//! Small numerical helpers over categorical distributions.

/// Probabilities below this are treated as zero inside `x ln x` terms.
const TINY: f64 = 1e-300;

/// Numerically stable softmax (max-subtracted).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// `ln Σ exp(x)` with max subtraction.
pub fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + logits.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// Log-softmax, i.e. `x - logsumexp(x)`.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(logits);
    logits.iter().map(|&x| x - lse).collect()
}

/// Shannon entropy in nats.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > TINY).map(|&x| x * x.ln()).sum::<f64>()
}

/// KL(p || q) in nats, with `q` given as log-probabilities.
pub fn kl_to_log(p: &[f64], log_q: &[f64]) -> f64 {
    p.iter()
        .zip(log_q)
        .filter(|(&x, _)| x > TINY)
        .map(|(&x, &lq)| x * (x.ln() - lq))
        .sum()
}

/// Subtract the arithmetic mean from every entry.
pub fn mean_center(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| x - mean).collect()
}

/// Normalize in place; returns the pre-normalization total.
pub fn normalize(v: &mut [f64]) -> f64 {
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.iter_mut().for_each(|x| *x /= total);
    }
    total
}

/// True if `p` is a distribution within `tol`.
pub fn is_simplex(p: &[f64], tol: f64) -> bool {
    p.iter().all(|&x| x >= -tol && x.is_finite()) && (p.iter().sum::<f64>() - 1.0).abs() <= tol
}

/// Sample mean and standard error (sd / sqrt n, sample sd with n-1).
/// The SE is `None` for fewer than two values.
pub fn mean_se(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, None);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (mean, Some(var.sqrt() / (n as f64).sqrt()))
}

/// Inclusive linear spacing of `n` points.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}
