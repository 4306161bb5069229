use rand::Rng;
use serde::Serialize;

use crate::dp::NoisyMeasurement;
use crate::error::{Error, Result};
use crate::schema::{Dataset, Query, Schema};

/// Largest full domain the explicit joint distribution is built for.
pub const MAX_DOMAIN: usize = 1_000_000;

/// Probability of every cell of the full domain, row-major over the schema's
/// attributes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JointDistribution {
    pub schema: Schema,
    pub probs: Vec<f64>,
}

impl JointDistribution {
    pub fn uniform(schema: &Schema) -> Result<JointDistribution> {
        let size = domain_size(schema)?;
        Ok(JointDistribution { schema: schema.clone(), probs: vec![1.0 / size as f64; size] })
    }

    pub fn from_probs(schema: &Schema, probs: Vec<f64>) -> Result<JointDistribution> {
        if probs.len() != domain_size(schema)? {
            return Err(Error::Argument("probability vector does not match the domain".into()));
        }
        let d = JointDistribution { schema: schema.clone(), probs };
        d.check_normalized()?;
        Ok(d)
    }

    pub fn check_normalized(&self) -> Result<()> {
        if self.probs.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(Error::Contract("distribution has a negative or non-finite cell".into()));
        }
        let total: f64 = self.probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Contract(format!("distribution sums to {total}, not 1")));
        }
        Ok(())
    }

    /// Marginal probabilities of `q`.
    pub fn marginal(&self, q: &Query) -> Vec<f64> {
        let mut out = vec![0.0; q.cells(&self.schema)];
        for (x, &c) in projection(&self.schema, q).iter().enumerate() {
            out[c] += self.probs[x];
        }
        out
    }

    /// Expected counts of `q` over `n` records.
    pub fn answer(&self, q: &Query, n: usize) -> Vec<f64> {
        self.marginal(q).into_iter().map(|p| p * n as f64).collect()
    }
}

fn domain_size(schema: &Schema) -> Result<usize> {
    match schema.domain_size() {
        Some(s) if s <= MAX_DOMAIN => Ok(s),
        _ => Err(Error::Resource(format!("full domain exceeds {MAX_DOMAIN} cells"))),
    }
}

/// Query cell of every full-domain cell.
fn projection(schema: &Schema, q: &Query) -> Vec<usize> {
    let cards = schema.cardinalities();
    let size: usize = cards.iter().product();
    // Stride of each attribute inside the query's own row-major layout.
    let mut stride = vec![0usize; cards.len()];
    let mut acc = 1;
    for &a in q.attrs.iter().rev() {
        stride[a] = acc;
        acc *= cards[a];
    }
    let mut digits = vec![0usize; cards.len()];
    let mut cell = 0usize;
    let mut out = Vec::with_capacity(size);
    for _ in 0..size {
        out.push(cell);
        for a in (0..cards.len()).rev() {
            digits[a] += 1;
            cell += stride[a];
            if digits[a] < cards[a] {
                break;
            }
            cell -= stride[a] * cards[a];
            digits[a] = 0;
        }
    }
    out
}

/// Multiplicative-weights step toward one noisy measurement of `n` records.
pub fn mw_update(dist: &JointDistribution, m: &NoisyMeasurement, n: usize) -> Result<JointDistribution> {
    dist.check_normalized()?;
    if m.query.attrs.iter().any(|&a| a >= dist.schema.len()) {
        return Err(Error::Argument("measurement query is outside the schema".into()));
    }
    if m.values.len() != m.query.cells(&dist.schema) {
        return Err(Error::Argument("measurement has the wrong number of cells".into()));
    }
    if n == 0 {
        return Err(Error::Argument("record count must be positive".into()));
    }
    let current = dist.answer(&m.query, n);
    let factor: Vec<f64> = m.values.iter().zip(&current).map(|(&y, &c)| ((y - c) / (2.0 * n as f64)).exp()).collect();
    let proj = projection(&dist.schema, &m.query);
    let mut probs: Vec<f64> = dist.probs.iter().zip(&proj).map(|(&p, &c)| p * factor[c]).collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    Ok(JointDistribution { schema: dist.schema.clone(), probs })
}

/// `n_out` records drawn independently from `dist`.
pub fn sample_synthetic<R: Rng + ?Sized>(dist: &JointDistribution, n_out: usize, rng: &mut R) -> Result<Dataset> {
    dist.check_normalized()?;
    let mut cdf = Vec::with_capacity(dist.probs.len());
    let mut acc = 0.0;
    for &p in &dist.probs {
        acc += p;
        cdf.push(acc);
    }
    let last_nonzero = dist.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    let cards = dist.schema.cardinalities();
    let rows = (0..n_out)
        .map(|_| {
            let u: f64 = rng.random::<f64>() * acc;
            let cell = cdf.partition_point(|&c| c <= u).min(last_nonzero);
            decode_cell(cell, &cards)
        })
        .collect();
    Ok(Dataset { schema: dist.schema.clone(), rows })
}

fn decode_cell(mut cell: usize, cards: &[usize]) -> Vec<u32> {
    let mut row = vec![0u32; cards.len()];
    for a in (0..cards.len()).rev() {
        row[a] = (cell % cards[a]) as u32;
        cell /= cards[a];
    }
    row
}
