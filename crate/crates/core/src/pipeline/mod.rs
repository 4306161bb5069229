//! The select-measure-generate loop: workload answers are computed once
//! under secret sharing, then each round privately selects a badly
//! approximated query, releases its noisy answer to party 1, and refits the
//! model. Only party 1's model and the released measurements reach the
//! generator.

mod budget;
mod generate;
mod select;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

pub use budget::{BudgetLedger, LedgerEntry, PrivacyBudget, Step, MAX_ROUNDS};
pub use generate::{mw_update, sample_synthetic, JointDistribution, MAX_DOMAIN};
pub use select::{
    sec_l1_norm, sec_l1_norms, select, select_aim, select_mwem, select_scores, selection_weights, Algo,
    SelectScoreParams,
};

use crate::backend::{Backend, Plain};
use crate::dp::{pi_measure, NoiseKind, NoiseSpec, NoisyMeasurement};
use crate::error::{Error, Result};
use crate::marginals::{local_compute, pi_comp, plaintext_answers};
use crate::partition::{recombine, HolderData, PartitionPlan};
use crate::rss::{Engine, TranscriptSummary};
use crate::schema::{Dataset, Schema};
use crate::seeds;
use crate::workload::Workload;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Mpc,
    Cdp,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Mpc => "mpc",
            BackendKind::Cdp => "cdp",
        })
    }
}

impl FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<BackendKind> {
        match s {
            "mpc" => Ok(BackendKind::Mpc),
            "cdp" => Ok(BackendKind::Cdp),
            other => Err(Error::Config(format!("unknown backend {other:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CapsConfig {
    pub workload: Workload,
    pub budget: PrivacyBudget,
    pub algo: Algo,
    pub noise: NoiseKind,
    pub backend: BackendKind,
    pub seed: u64,
    /// Keep the per-message log of the secure run, not just its totals.
    pub record_messages: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RoundLog {
    pub round: usize,
    pub query_index: usize,
    pub selected_query: Vec<String>,
    pub epsilon_select: f64,
    pub epsilon_measure: f64,
    pub sigma: f64,
    pub measurement: NoisyMeasurement,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunLog {
    pub backend: BackendKind,
    pub algo: Algo,
    pub noise: NoiseKind,
    pub seed: u64,
    pub rounds: Vec<RoundLog>,
    pub budget_ledger: BudgetLedger,
    /// Absent for the plaintext backend.
    pub transcript_summary: Option<TranscriptSummary>,
}

impl RunLog {
    pub fn selected(&self) -> Vec<usize> {
        self.rounds.iter().map(|r| r.query_index).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run log serializes")
    }
}

/// Runs the whole pipeline on partitioned data and returns `n` synthetic
/// records plus the run log.
pub fn run_caps(
    schema: &Schema,
    plan: &PartitionPlan,
    holders: &[HolderData],
    config: &CapsConfig,
) -> Result<(Dataset, RunLog)> {
    check_config(schema, plan, holders, config)?;
    let n = plan.n_rows;
    let q = &config.workload;
    let (model, rounds, ledger, transcript) = match config.backend {
        BackendKind::Mpc => {
            let mut engine = Engine::with_recording(config.seed, config.record_messages);
            let qstar = plan.qstar(q);
            let share_data = qstar.iter().any(|&j| j);
            let mut shares = Vec::with_capacity(holders.len());
            for (i, h) in holders.iter().enumerate() {
                let mut rng = seeds::holder_stream(config.seed, i);
                shares.push(local_compute(&mut engine, h, schema, q, &qstar, share_data, &mut rng)?);
            }
            let comp = pi_comp(&mut engine, &shares, schema, n, q, &qstar)?;
            let (model, rounds, ledger) = rounds_loop(&mut engine, &comp.answers, schema, n, config)?;
            (model, rounds, ledger, Some(engine.transcript().summary().clone()))
        }
        BackendKind::Cdp => {
            let data = recombine(schema, plan, holders)?;
            let mut plain = Plain::new(config.seed);
            let answers: Vec<Vec<u64>> = plaintext_answers(&data, q).iter().map(|t| plain.input(&t.counts)).collect();
            let (model, rounds, ledger) = rounds_loop(&mut plain, &answers, schema, n, config)?;
            (model, rounds, ledger, None)
        }
    };
    let synthetic = sample_model(&model, n, config.seed)?;
    let log = RunLog {
        backend: config.backend,
        algo: config.algo,
        noise: config.noise,
        seed: config.seed,
        rounds,
        budget_ledger: ledger,
        transcript_summary: transcript,
    };
    Ok((synthetic, log))
}

fn check_config(schema: &Schema, plan: &PartitionPlan, holders: &[HolderData], config: &CapsConfig) -> Result<()> {
    schema.validate()?;
    if plan.n_attrs != schema.len() || plan.holders.len() != holders.len() {
        return Err(Error::Config("partition plan does not match the schema or holders".into()));
    }
    if plan.n_rows == 0 {
        return Err(Error::Config("dataset has no rows".into()));
    }
    if config.workload.queries.iter().any(|q| q.attrs.iter().any(|&a| a >= schema.len())) {
        return Err(Error::Config("workload names an attribute outside the schema".into()));
    }
    JointDistribution::uniform(schema).map(|_| ())
}

/// One generate step: a multiplicative-weights pass over every measurement
/// released so far.
fn refit(mut model: JointDistribution, measurements: &[NoisyMeasurement], n: usize) -> Result<JointDistribution> {
    for m in measurements {
        model = mw_update(&model, m, n)?;
    }
    Ok(model)
}

fn sample_model(model: &JointDistribution, n: usize, seed: u64) -> Result<Dataset> {
    let mut rng = seeds::stream(seed, seeds::STREAM_SAMPLING);
    sample_synthetic(model, n, &mut rng)
}

/// Rebuilds the synthetic output of a run from its released measurements
/// alone, in round order.
pub fn synthesize(schema: &Schema, n: usize, measurements: &[NoisyMeasurement], seed: u64) -> Result<Dataset> {
    let mut model = JointDistribution::uniform(schema)?;
    for t in 0..measurements.len() {
        model = refit(model, &measurements[..=t], n)?;
    }
    sample_model(&model, n, seed)
}

type LoopOutput = (JointDistribution, Vec<RoundLog>, BudgetLedger);

fn rounds_loop<B: Backend>(
    b: &mut B,
    answers: &[B::Vector],
    schema: &Schema,
    n: usize,
    config: &CapsConfig,
) -> Result<LoopOutput> {
    let budget = &config.budget;
    let workload = &config.workload;
    let params = SelectScoreParams::new(config.algo, workload, schema, budget, config.noise);
    let noise = NoiseSpec::new(config.noise, budget.noise_scale(config.noise))?;
    let mut ledger = budget.ledger();
    let mut model = JointDistribution::uniform(schema)?;
    let mut measurements = Vec::with_capacity(budget.rounds);
    let mut logs = Vec::with_capacity(budget.rounds);
    for round in 0..budget.rounds {
        let synthetic: Vec<Vec<f64>> = workload.queries.iter().map(|q| model.answer(q, n)).collect();
        let idx = select(b, answers, &synthetic, &params)?;
        ledger.charge(round, Step::Select, budget.step_share())?;
        let query = &workload.queries[idx];
        let m = pi_measure(b, &answers[idx], query, noise, round);
        ledger.charge(round, Step::Measure, budget.step_share())?;
        measurements.push(m.clone());
        model = refit(model, &measurements, n)?;
        logs.push(RoundLog {
            round,
            query_index: idx,
            selected_query: query.names(schema),
            epsilon_select: budget.epsilon_select(),
            epsilon_measure: budget.epsilon_measure(),
            sigma: noise.scale,
            measurement: m,
        });
    }
    Ok((model, logs, ledger))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{partition, PartitionMode};
    use crate::schema::Query;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn data(n: usize, cards: &[usize], seed: u64) -> Dataset {
        let mut r = ChaCha12Rng::seed_from_u64(seed);
        let s = Schema::from_cardinalities(cards).unwrap();
        let rows = (0..n)
            .map(|_| {
                let a = r.random_range(0..cards[0] as u32);
                cards
                    .iter()
                    .map(|&c| if r.random_bool(0.6) { a % c as u32 } else { r.random_range(0..c as u32) })
                    .collect()
            })
            .collect();
        Dataset::new(s, rows).unwrap()
    }

    fn config(workload: Workload, backend: BackendKind, rounds: usize, seed: u64) -> CapsConfig {
        CapsConfig {
            workload,
            budget: PrivacyBudget::new(1.0, 1e-9, rounds).unwrap(),
            algo: Algo::Aim,
            noise: NoiseKind::GaussianIrwinHall,
            backend,
            seed,
            record_messages: false,
        }
    }

    #[test]
    fn single_query_is_always_selected() {
        let d = data(50, &[2, 3], 1);
        let (plan, hs) = partition(&d, &PartitionMode::Central, 1).unwrap();
        let w = Workload::unweighted(vec![Query { attrs: vec![0, 1] }]).unwrap();
        let (out, log) = run_caps(&d.schema, &plan, &hs, &config(w, BackendKind::Mpc, 1, 1)).unwrap();
        assert_eq!(log.selected(), vec![0]);
        assert_eq!(out.n_rows(), 50);
        assert!(log.budget_ledger.balanced());
    }

    #[test]
    fn backends_agree() {
        let d = data(200, &[3, 2, 4], 2);
        let (plan, hs) = partition(&d, &PartitionMode::Vertical(2), 2).unwrap();
        let w = Workload::all_2way(&d.schema).unwrap();
        let (a, la) = run_caps(&d.schema, &plan, &hs, &config(w.clone(), BackendKind::Mpc, 3, 5)).unwrap();
        let (b, lb) = run_caps(&d.schema, &plan, &hs, &config(w, BackendKind::Cdp, 3, 5)).unwrap();
        assert_eq!(la.selected(), lb.selected());
        for (x, y) in la.rounds.iter().zip(&lb.rounds) {
            for (u, v) in x.measurement.values.iter().zip(&y.measurement.values) {
                assert!((u - v).abs() <= 2f64.powi(-9));
            }
        }
        assert_eq!(a, b);
        assert!(la.transcript_summary.is_some() && lb.transcript_summary.is_none());
    }

    #[test]
    fn output_follows_from_measurements_alone() {
        let d = data(120, &[2, 3, 2], 4);
        let (plan, hs) = partition(&d, &PartitionMode::Central, 4).unwrap();
        let w = Workload::all_2way(&d.schema).unwrap();
        let (out, log) = run_caps(&d.schema, &plan, &hs, &config(w, BackendKind::Mpc, 4, 8)).unwrap();
        let ms: Vec<_> = log.rounds.iter().map(|r| r.measurement.clone()).collect();
        assert_eq!(synthesize(&d.schema, 120, &ms, 8).unwrap(), out);
    }

    #[test]
    fn runs_are_deterministic() {
        let d = data(80, &[2, 2, 3], 3);
        let (plan, hs) = partition(&d, &PartitionMode::Horizontal(2), 3).unwrap();
        let w = Workload::all_2way(&d.schema).unwrap();
        let cfg = config(w, BackendKind::Mpc, 2, 9);
        let (a, la) = run_caps(&d.schema, &plan, &hs, &cfg).unwrap();
        let (b, lb) = run_caps(&d.schema, &plan, &hs, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(la.to_json(), lb.to_json());
    }
}
