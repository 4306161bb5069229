#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use sharesynth::schema::{Dataset, Schema};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v)
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Pearson statistic of observed counts against expected probabilities.
pub fn chi_square(counts: &[usize], probs: &[f64]) -> f64 {
    let total: usize = counts.iter().sum();
    counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let e = p * total as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum()
}

/// Upper `alpha` quantile of the chi-square distribution.
pub fn chi_square_critical(df: usize, alpha: f64) -> f64 {
    ChiSquared::new(df as f64).unwrap().inverse_cdf(1.0 - alpha)
}

pub fn uniform_chi_square_ok(counts: &[usize], alpha: f64) -> (bool, f64, f64) {
    let k = counts.len();
    let stat = chi_square(counts, &vec![1.0 / k as f64; k]);
    let crit = chi_square_critical(k - 1, alpha);
    (stat < crit, stat, crit)
}

/// Kolmogorov-Smirnov distance to the standard normal and the asymptotic
/// critical value at `alpha`.
pub fn ks_standard_normal(samples: &[f64], alpha: f64) -> (f64, f64) {
    let norm = Normal::new(0.0, 1.0).unwrap();
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = norm.cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let crit = (-(alpha / 2.0).ln() / 2.0).sqrt() / n.sqrt();
    (d, crit)
}

/// `n` rows with every attribute leaning toward a shared latent value.
pub fn correlated_data(n: usize, cards: &[usize], seed: u64) -> Dataset {
    let mut r = rng(seed);
    let schema = Schema::from_cardinalities(cards).unwrap();
    let rows = (0..n)
        .map(|_| {
            let z = r.random_range(0..16u32);
            cards.iter().map(|&c| if r.random_bool(0.6) { z % c as u32 } else { r.random_range(0..c as u32) }).collect()
        })
        .collect();
    Dataset::new(schema, rows).unwrap()
}

/// Brute-force L1 distance between normalized marginals, averaged.
pub fn brute_force_delta(a: &Dataset, b: &Dataset, queries: &[Vec<usize>]) -> f64 {
    let mut total = 0.0;
    for q in queries {
        let mut cells = std::collections::BTreeMap::<Vec<u32>, (f64, f64)>::new();
        for row in &a.rows {
            cells.entry(q.iter().map(|&i| row[i]).collect()).or_default().0 += 1.0 / a.rows.len() as f64;
        }
        for row in &b.rows {
            cells.entry(q.iter().map(|&i| row[i]).collect()).or_default().1 += 1.0 / b.rows.len() as f64;
        }
        total += cells.values().map(|(x, y)| (x - y).abs()).sum::<f64>();
    }
    total / queries.len() as f64
}

/// Rows drawn independently and uniformly per attribute.
pub fn uniform_baseline(schema: &Schema, n: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let cards = schema.cardinalities();
    let rows = (0..n).map(|_| cards.iter().map(|&c| r.random_range(0..c as u32)).collect()).collect();
    Dataset::new(schema.clone(), rows).unwrap()
}

pub fn toy_paths() -> (std::path::PathBuf, std::path::PathBuf) {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    (dir.join("toy.csv"), dir.join("toy_domain.json"))
}
