//! Signed-rank reference values by direct enumeration of sign patterns.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub struct Enumerated {
    pub w_plus: f64,
    pub w_minus: f64,
    pub p_value: f64,
}

/// Mid-ranks of `|d|` computed pairwise, zeros dropped.
fn mid_ranks(diffs: &[f64]) -> Vec<(f64, bool)> {
    let nz: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    nz.iter()
        .map(|d| {
            let below = nz.iter().filter(|e| e.abs() < d.abs()).count() as f64;
            let equal = nz.iter().filter(|e| e.abs() == d.abs()).count() as f64;
            (below + (equal + 1.0) / 2.0, *d > 0.0)
        })
        .collect()
}

/// Two-sided p = P(min(W+, W-) <= observed) over all 2^n sign patterns.
/// Walks the patterns in Gray-code order so each step flips one sign.
pub fn enumerate(a: &[f64], b: &[f64]) -> Enumerated {
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let ranks = mid_ranks(&diffs);
    let n = ranks.len();
    let total: f64 = ranks.iter().map(|r| r.0).sum();
    let w_plus: f64 = ranks.iter().filter(|r| r.1).map(|r| r.0).sum();
    let w_minus = total - w_plus;
    let observed = w_plus.min(w_minus);

    let mut plus = 0.0;
    let mut signs = vec![false; n];
    let mut hits = 0u64;
    let patterns = 1u64 << n;
    for g in 0..patterns {
        if g > 0 {
            let bit = g.trailing_zeros() as usize;
            signs[bit] = !signs[bit];
            plus += if signs[bit] { ranks[bit].0 } else { -ranks[bit].0 };
        }
        if plus.min(total - plus) <= observed + 1e-9 {
            hits += 1;
        }
    }
    Enumerated {
        w_plus,
        w_minus,
        p_value: hits as f64 / patterns as f64,
    }
}

/// Paired fixture of integer-valued samples; a small value range makes ties
/// and zero differences common.
pub fn integer_fixture(rng: &mut ChaCha8Rng, n: usize, spread: i32) -> (Vec<f64>, Vec<f64>) {
    let a: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..=spread))).collect();
    let shift = rng.random_range(-1..=2);
    let b: Vec<f64> = (0..n)
        .map(|_| f64::from(rng.random_range(0..=spread) + shift))
        .collect();
    (a, b)
}

/// Continuous fixture with no ties.
pub fn continuous_fixture(rng: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<f64>) {
    let shift = rng.random_range(-0.5..0.8);
    let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
    let b: Vec<f64> = a.iter().map(|x| x - shift + rng.random_range(-2.0..2.0)).collect();
    (a, b)
}
