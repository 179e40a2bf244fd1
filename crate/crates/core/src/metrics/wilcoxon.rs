//! Wilcoxon signed-rank test for paired samples.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

/// Largest effective sample size that uses the exact null distribution.
pub const EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    pub n_effective: usize,
    /// min(W+, W-).
    pub w: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    /// Two-sided.
    pub p_value: f64,
    /// Standardized statistic with tie and continuity corrections.
    pub z: f64,
    pub method: WilcoxonMethod,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no paired samples")]
    Empty,
    #[error("insufficient data: {n_effective} non-zero differences")]
    InsufficientData { n_effective: usize },
    #[error("non-finite sample value")]
    NonFinite,
}

/// Average ranks of |d| with the sign of each non-zero difference.
pub fn signed_ranks(diffs: &[f64]) -> Vec<(f64, bool)> {
    let mut nz: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    nz.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let mut out = Vec::with_capacity(nz.len());
    let mut i = 0;
    while i < nz.len() {
        let mut j = i;
        while j + 1 < nz.len() && nz[j + 1].abs() == nz[i].abs() {
            j += 1;
        }
        let rank = (i + j + 2) as f64 / 2.0;
        out.extend(nz[i..=j].iter().map(|d| (rank, *d > 0.0)));
        i = j + 1;
    }
    out
}

pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult, StatsError> {
    wilcoxon_impl(a, b, None)
}

/// As [`wilcoxon_signed_rank`] but with the inference method forced.
pub fn wilcoxon_with_method(a: &[f64], b: &[f64], method: WilcoxonMethod) -> Result<WilcoxonResult, StatsError> {
    wilcoxon_impl(a, b, Some(method))
}

fn wilcoxon_impl(a: &[f64], b: &[f64], forced: Option<WilcoxonMethod>) -> Result<WilcoxonResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(StatsError::Empty);
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let ranks = signed_ranks(&diffs);
    let n = ranks.len();
    let method = forced.unwrap_or(if n <= EXACT_MAX_N {
        WilcoxonMethod::Exact
    } else {
        WilcoxonMethod::NormalApprox
    });
    if n == 0 || (method == WilcoxonMethod::Exact && n < 3) {
        return Err(StatsError::InsufficientData { n_effective: n });
    }

    let w_plus: f64 = ranks.iter().filter(|r| r.1).map(|r| r.0).fold(0.0, |a, r| a + r);
    let w_minus: f64 = ranks.iter().filter(|r| !r.1).map(|r| r.0).fold(0.0, |a, r| a + r);
    let w = w_plus.min(w_minus);
    let z = normal_z(&ranks, w);
    let p_value = match method {
        WilcoxonMethod::Exact => exact_p(&ranks, w),
        WilcoxonMethod::NormalApprox => erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0),
    };
    Ok(WilcoxonResult {
        n_effective: n,
        w,
        w_plus,
        w_minus,
        p_value,
        z,
        method,
    })
}

fn normal_z(ranks: &[(f64, bool)], w: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    // Tie groups share a rank value.
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < ranks.len() {
        let j = ranks[i..].iter().take_while(|r| r.0 == ranks[i].0).count();
        let t = j as f64;
        tie_term += t * t * t - t;
        i += j;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    let mut d = w - mean;
    if d != 0.0 {
        d -= 0.5 * d.signum();
    }
    d / var.sqrt()
}

/// P(min(W+, W-) <= w) under the null, counting sign assignments over the
/// observed rank multiset.
fn exact_p(ranks: &[(f64, bool)], w: f64) -> f64 {
    // Average ranks are multiples of 1/2, so doubled ranks are integers.
    let doubled: Vec<usize> = ranks.iter().map(|r| (r.0 * 2.0).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let w2 = (w * 2.0).round() as usize;
    let tail: f64 = counts
        .iter()
        .enumerate()
        .filter(|(s, _)| *s <= w2 || *s >= total - w2)
        .map(|(_, c)| c)
        .sum();
    let all = 2f64.powi(ranks.len() as i32);
    (tail / all).min(1.0)
}
