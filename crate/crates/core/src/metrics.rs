//! Workload error between a real and a synthetic dataset.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rss::TranscriptSummary;
use crate::schema::{Dataset, MarginalTable};
use crate::workload::Workload;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QueryError {
    pub attrs: Vec<String>,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    pub workload_error: f64,
    pub per_query: Vec<QueryError>,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub runtime_ms: Option<u128>,
    pub transcript: Option<TranscriptSummary>,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Mean over the workload of the L1 distance between the two datasets'
/// frequency-normalized marginals.
pub fn workload_error(real: &Dataset, synth: &Dataset, workload: &Workload) -> Result<MetricsReport> {
    if real.schema != synth.schema {
        return Err(Error::Metric("datasets have different schemas".into()));
    }
    if real.rows.is_empty() || synth.rows.is_empty() {
        return Err(Error::Metric("workload error of an empty dataset".into()));
    }
    let per_query: Vec<QueryError> = workload
        .queries
        .iter()
        .map(|q| {
            let a = MarginalTable::count(real, q);
            let b = MarginalTable::count(synth, q);
            let (na, nb) = (real.n_rows() as f64, synth.n_rows() as f64);
            let error = a.counts.iter().zip(&b.counts).map(|(&x, &y)| (x as f64 / na - y as f64 / nb).abs()).sum();
            QueryError { attrs: q.names(&real.schema), error }
        })
        .collect();
    let workload_error = per_query.iter().map(|e| e.error).sum::<f64>() / per_query.len() as f64;
    Ok(MetricsReport {
        workload_error,
        per_query,
        config: serde_json::Value::Null,
        seed: None,
        runtime_ms: None,
        transcript: None,
    })
}
