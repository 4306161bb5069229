//! Scaling sweep of the secure workload-answer computation.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::marginals::{local_compute, pi_comp};
use crate::partition::{HolderData, Holding, PartitionKind, PartitionPlan};
use crate::rss::Engine;
use crate::schema::{Query, Schema};
use crate::seeds;
use crate::workload::Workload;

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub ns: Vec<usize>,
    pub holders: Vec<usize>,
    pub qstar: Vec<usize>,
    pub omega: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> BenchConfig {
        BenchConfig { ns: vec![250, 500, 1000], holders: vec![2], qstar: vec![1, 3], omega: 5, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub holders: usize,
    pub qstar: usize,
    pub omega: usize,
    pub eq: u64,
    pub expected_eq: u64,
    pub mul: u64,
    pub expected_mul: u64,
    pub join_assign: u64,
    pub rounds: u64,
    pub messages: u64,
    pub bytes: u64,
    pub runtime_ms: f64,
}

/// One secure run over `n` uniform rows split column-wise across `holders`,
/// with a workload of `qstar` attribute pairs that each span two holders.
pub fn bench_point(n: usize, holders: usize, qstar: usize, omega: usize, seed: u64) -> Result<BenchRow> {
    if n == 0 || holders < 2 || qstar == 0 || omega < 2 {
        return Err(Error::Config("bench needs n >= 1, at least 2 holders, |Q*| >= 1 and omega >= 2".into()));
    }
    let d = (2 * qstar).max(holders);
    let schema = Schema::from_cardinalities(&vec![omega; d])?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ n as u64);
    let rows: Vec<Vec<u32>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(0..omega as u32)).collect()).collect();
    let holdings: Vec<Holding> = (0..holders)
        .map(|h| Holding { rows: (0..n).collect(), attrs: (0..d).filter(|a| a % holders == h).collect() })
        .collect();
    let data: Vec<HolderData> = holdings
        .iter()
        .map(|h| HolderData {
            holding: h.clone(),
            values: rows.iter().map(|r| h.attrs.iter().map(|&a| r[a]).collect()).collect(),
        })
        .collect();
    let plan = PartitionPlan { kind: PartitionKind::Vertical, n_rows: n, n_attrs: d, holders: holdings };
    let workload = Workload::unweighted((0..qstar).map(|k| Query { attrs: vec![2 * k, 2 * k + 1] }).collect())?;
    let flags = plan.qstar(&workload);
    debug_assert!(flags.iter().all(|&f| f));

    let mut engine = Engine::with_recording(seed, false);
    let shares = data
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let mut r = seeds::holder_stream(seed, i);
            local_compute(&mut engine, h, &schema, &workload, &flags, true, &mut r)
        })
        .collect::<Result<Vec<_>>>()?;
    let before = engine.transcript().summary().clone();
    let start = Instant::now();
    pi_comp(&mut engine, &shares, &schema, n, &workload, &flags)?;
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    let after = engine.transcript().summary();
    let cells = (omega * omega) as u64;
    Ok(BenchRow {
        n,
        holders,
        qstar,
        omega,
        eq: after.counters.eq - before.counters.eq,
        expected_eq: 2 * n as u64 * cells * qstar as u64,
        mul: after.counters.mul - before.counters.mul,
        expected_mul: n as u64 * cells * qstar as u64,
        join_assign: after.counters.join_assign - before.counters.join_assign,
        rounds: after.rounds - before.rounds,
        messages: after.messages - before.messages,
        bytes: after.bytes - before.bytes,
        runtime_ms,
    })
}

pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for &h in &cfg.holders {
        for &q in &cfg.qstar {
            for &n in &cfg.ns {
                rows.push(bench_point(n, h, q, cfg.omega, cfg.seed)?);
            }
        }
    }
    Ok(rows)
}

pub fn to_csv(rows: &[BenchRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io { path: "<bench csv>".into(), source: std::io::Error::other(e) })?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io { path: "<bench csv>".into(), source: e.into_error() })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Least-squares line through `(x, y)`: slope, intercept and R².
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    (slope, intercept, r2)
}
