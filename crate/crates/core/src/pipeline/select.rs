use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::backend::Backend;
use crate::dp::{pi_rc, NoiseKind};
use crate::error::{Error, Result};
use crate::primitives::{sec_max, sec_softmax_unnorm};
use crate::ring::{enc, ONE};
use crate::schema::Schema;
use crate::workload::Workload;

use super::PrivacyBudget;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Aim,
    Mwem,
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algo::Aim => "aim",
            Algo::Mwem => "mwem",
        })
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Algo> {
        match s {
            "aim" => Ok(Algo::Aim),
            "mwem" => Ok(Algo::Mwem),
            other => Err(Error::Config(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// Public inputs of the selection score.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelectScoreParams {
    pub algo: Algo,
    /// Expected L1 mass of the measurement noise per query (AIM only).
    pub bias: Vec<f64>,
    pub weights: Vec<f64>,
    /// Largest query weight, the score's sensitivity (AIM only).
    pub sensitivity: f64,
    pub epsilon_select: f64,
}

impl SelectScoreParams {
    pub fn aim(workload: &Workload, schema: &Schema, budget: &PrivacyBudget, noise: NoiseKind) -> SelectScoreParams {
        let scale = budget.noise_scale(noise);
        let per_cell = if noise.is_gaussian() { (2.0 / std::f64::consts::PI).sqrt() * scale } else { scale };
        SelectScoreParams {
            algo: Algo::Aim,
            bias: workload.queries.iter().map(|q| per_cell * q.cells(schema) as f64).collect(),
            weights: workload.weights.clone(),
            sensitivity: workload.weights.iter().cloned().fold(0.0, f64::max),
            epsilon_select: budget.epsilon_select(),
        }
    }

    pub fn mwem(workload: &Workload, budget: &PrivacyBudget) -> SelectScoreParams {
        SelectScoreParams {
            algo: Algo::Mwem,
            bias: vec![0.0; workload.len()],
            weights: vec![1.0; workload.len()],
            sensitivity: 1.0,
            epsilon_select: budget.epsilon_select(),
        }
    }

    pub fn new(algo: Algo, workload: &Workload, schema: &Schema, budget: &PrivacyBudget, noise: NoiseKind) -> Self {
        match algo {
            Algo::Aim => SelectScoreParams::aim(workload, schema, budget, noise),
            Algo::Mwem => SelectScoreParams::mwem(workload, budget),
        }
    }

    fn validate(&self, n_queries: usize) -> Result<()> {
        if self.bias.len() != n_queries || self.weights.len() != n_queries {
            return Err(Error::Argument("score parameters do not match the workload".into()));
        }
        if !(self.sensitivity > 0.0 && self.epsilon_select > 0.0) {
            return Err(Error::Argument("score sensitivity and epsilon must be positive".into()));
        }
        Ok(())
    }
}

/// `Σ |diff_i|` of a fixed-point vector.
pub fn sec_l1_norm<B: Backend>(b: &mut B, diff: &B::Vector) -> B::Vector {
    let n = b.len(diff);
    sec_l1_norms(b, diff, &[n])
}

/// One L1 norm per consecutive segment of `diff`.
pub fn sec_l1_norms<B: Backend>(b: &mut B, diff: &B::Vector, lens: &[usize]) -> B::Vector {
    let n = b.len(diff);
    let neg = b.ltz(diff);
    let sign = b.sub(&b.constant(&vec![1; n]), &b.scale(&neg, 2));
    let abs = b.mul(&sign, diff);
    b.segment_sum(&abs, lens)
}

/// Scores of every query: the L1 error between the shared answer and party
/// 1's synthetic answer, debiased and weighted for AIM.
pub fn select_scores<B: Backend>(
    b: &mut B,
    answers: &[B::Vector],
    synthetic: &[Vec<f64>],
    params: &SelectScoreParams,
) -> Result<B::Vector> {
    params.validate(answers.len())?;
    if synthetic.len() != answers.len() {
        return Err(Error::Argument("one synthetic answer per query required".into()));
    }
    let mut diffs = Vec::with_capacity(answers.len());
    let mut lens = Vec::with_capacity(answers.len());
    for (a, s) in answers.iter().zip(synthetic) {
        if b.len(a) != s.len() {
            return Err(Error::Argument("synthetic answer has the wrong number of cells".into()));
        }
        let neg: Vec<u64> = s.iter().map(|&x| enc(x).wrapping_neg()).collect();
        diffs.push(b.add_public(&b.scale(a, ONE), &neg));
        lens.push(s.len());
    }
    let all = b.concat(&diffs.iter().collect::<Vec<_>>());
    let l1 = sec_l1_norms(b, &all, &lens);
    Ok(match params.algo {
        Algo::Mwem => l1,
        Algo::Aim => {
            let bias: Vec<u64> = params.bias.iter().map(|&x| enc(x).wrapping_neg()).collect();
            let w: Vec<u64> = params.weights.iter().map(|&x| enc(x)).collect();
            let centered = b.add_public(&l1, &bias);
            b.fx_mul_public(&centered, &w)
        }
    })
}

/// Exponential-mechanism selection weights from scores.
pub fn selection_weights<B: Backend>(b: &mut B, scores: &B::Vector, params: &SelectScoreParams) -> Result<B::Vector> {
    let n = b.len(scores);
    let top = sec_max(b, scores)?;
    let shifted = b.sub(scores, &b.broadcast(&top, n));
    let coef = enc(0.5 * params.epsilon_select / params.sensitivity);
    let x = b.fx_mul_public(&shifted, &vec![coef; n]);
    Ok(sec_softmax_unnorm(b, &x))
}

/// Picks a query and reveals its 0-based index to party 1.
pub fn select<B: Backend>(
    b: &mut B,
    answers: &[B::Vector],
    synthetic: &[Vec<f64>],
    params: &SelectScoreParams,
) -> Result<usize> {
    let scores = select_scores(b, answers, synthetic, params)?;
    let weights = selection_weights(b, &scores, params)?;
    let s = pi_rc(b, &weights)?;
    let idx = b.reveal(&s)[0] as usize;
    if !(1..=answers.len()).contains(&idx) {
        return Err(Error::Integrity(format!("selected index {idx} is out of range")));
    }
    Ok(idx - 1)
}

pub fn select_aim<B: Backend>(
    b: &mut B,
    answers: &[B::Vector],
    synthetic: &[Vec<f64>],
    params: &SelectScoreParams,
) -> Result<usize> {
    if params.algo != Algo::Aim {
        return Err(Error::Argument("AIM selection needs AIM score parameters".into()));
    }
    select(b, answers, synthetic, params)
}

pub fn select_mwem<B: Backend>(
    b: &mut B,
    answers: &[B::Vector],
    synthetic: &[Vec<f64>],
    params: &SelectScoreParams,
) -> Result<usize> {
    if params.algo != Algo::Mwem {
        return Err(Error::Argument("MWEM selection needs MWEM score parameters".into()));
    }
    select(b, answers, synthetic, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::Plain;
    use crate::ring::decode_raw;
    use crate::rss::Engine;
    use crate::schema::Query;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn mwem_params(n: usize, eps: f64) -> SelectScoreParams {
        SelectScoreParams {
            algo: Algo::Mwem,
            bias: vec![0.0; n],
            weights: vec![1.0; n],
            sensitivity: 1.0,
            epsilon_select: eps,
        }
    }

    #[test]
    fn l1_examples() {
        let mut e = Engine::new(1);
        let x = e.input(&[0, 0, 0]);
        let n = sec_l1_norm(&mut e, &x);
        assert_eq!(e.reveal(&n), vec![0]);
        let x = e.input(&[enc(-2.0), enc(3.0)]);
        let n = sec_l1_norm(&mut e, &x);
        assert_eq!(decode_raw(e.reveal(&n)[0]), 5.0);
    }

    #[test]
    fn l1_matches_plaintext() {
        let mut r = ChaCha12Rng::seed_from_u64(2);
        let mut e = Engine::new(2);
        for _ in 0..20 {
            let v: Vec<f64> = (0..17).map(|_| r.random_range(-500.0..500.0)).collect();
            let x = e.input(&v.iter().map(|&a| enc(a)).collect::<Vec<_>>());
            let l1 = sec_l1_norm(&mut e, &x);
            let got = decode_raw(e.reveal(&l1)[0]);
            let want: f64 = v.iter().map(|a| a.abs()).sum();
            assert!((got - want).abs() <= 17.0 * 2f64.powi(-15), "{got} vs {want}");
        }
    }

    #[test]
    fn mwem_dominant_query() {
        // One query off by 10 in L1, the rest exact: P = e^10 / (e^10 + 3).
        let mut p = Plain::new(3);
        let answers: Vec<Vec<u64>> = (0..4).map(|_| vec![10, 0]).collect();
        let mut synth = vec![vec![10.0, 0.0]; 4];
        synth[2] = vec![0.0, 0.0];
        let params = mwem_params(4, 2.0);
        let draws = 10_000;
        let hits = (0..draws).filter(|_| select(&mut p, &answers, &synth, &params).unwrap() == 2).count();
        let prob = 10f64.exp() / (10f64.exp() + 3.0);
        let sd = (prob * (1.0 - prob) / draws as f64).sqrt();
        let freq = hits as f64 / draws as f64;
        assert!((freq - prob).abs() <= 3.0 * sd + 1e-4, "{freq} vs {prob}");
    }

    #[test]
    fn equal_scores_are_uniform() {
        let mut p = Plain::new(4);
        let answers: Vec<Vec<u64>> = (0..4).map(|_| vec![3, 4]).collect();
        let synth = vec![vec![3.0, 4.0]; 4];
        let params = mwem_params(4, 1.0);
        let mut counts = [0usize; 4];
        for _ in 0..4000 {
            counts[select(&mut p, &answers, &synth, &params).unwrap()] += 1;
        }
        let chi: f64 = counts.iter().map(|&c| (c as f64 - 1000.0).powi(2) / 1000.0).sum();
        assert!(chi < 11.34, "{counts:?}");
    }

    #[test]
    fn aim_scores_are_debiased_and_weighted() {
        let s = Schema::from_cardinalities(&[2, 2]).unwrap();
        let w = Workload::new(vec![Query { attrs: vec![0] }, Query { attrs: vec![1] }], vec![1.0, 2.0]).unwrap();
        let budget = PrivacyBudget::new(1.0, 1e-9, 5).unwrap();
        let params = SelectScoreParams::aim(&w, &s, &budget, NoiseKind::LaplaceSign);
        assert_eq!(params.sensitivity, 2.0);
        assert!((params.bias[0] - 20.0).abs() < 1e-12);
        let mut p = Plain::new(5);
        let answers = vec![vec![100, 0], vec![50, 50]];
        let synth = vec![vec![0.0, 0.0], vec![50.0, 50.0]];
        let sc = select_scores(&mut p, &answers, &synth, &params).unwrap();
        assert_eq!(decode_raw(sc[0]), 80.0);
        assert_eq!(decode_raw(sc[1]), -40.0);
    }

    #[test]
    fn mpc_and_plain_select_identically() {
        let mut r = ChaCha12Rng::seed_from_u64(6);
        for seed in 0..10 {
            let answers: Vec<Vec<u64>> = (0..5).map(|_| (0..4).map(|_| r.random_range(0..50)).collect()).collect();
            let synth: Vec<Vec<f64>> = (0..5).map(|_| (0..4).map(|_| r.random_range(0.0..50.0)).collect()).collect();
            let params = mwem_params(5, 0.3);
            let mut p = Plain::new(seed);
            let mut e = Engine::new(seed);
            let shared: Vec<_> = answers.iter().map(|a| e.input(a)).collect();
            assert_eq!(
                select(&mut p, &answers, &synth, &params).unwrap(),
                select(&mut e, &shared, &synth, &params).unwrap()
            );
        }
    }
}
