//! Weighted query workloads.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{Query, Schema};

#[derive(Clone, Debug, PartialEq)]
pub struct Workload {
    pub queries: Vec<Query>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct WorkloadFile {
    queries: Vec<QueryEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct QueryEntry {
    attrs: Vec<String>,
    #[serde(default = "unit_weight")]
    weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

impl Workload {
    pub fn new(queries: Vec<Query>, weights: Vec<f64>) -> Result<Workload> {
        if queries.is_empty() {
            return Err(Error::Config("workload has no queries".into()));
        }
        if queries.len() != weights.len() {
            return Err(Error::Config("one weight per query required".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::Config(format!("query weight {w} is not positive")));
        }
        Ok(Workload { queries, weights })
    }

    pub fn unweighted(queries: Vec<Query>) -> Result<Workload> {
        let n = queries.len();
        Workload::new(queries, vec![1.0; n])
    }

    /// Every singleton and every pair, ordered by arity then attribute index.
    pub fn all_2way(schema: &Schema) -> Result<Workload> {
        let d = schema.len();
        let mut queries: Vec<Query> = (0..d).map(|a| Query { attrs: vec![a] }).collect();
        for a in 0..d {
            for b in a + 1..d {
                queries.push(Query { attrs: vec![a, b] });
            }
        }
        Workload::unweighted(queries)
    }

    /// Reads `{"queries": [{"attrs": ["age", "sex"], "weight": 1.0}, ...]}`.
    pub fn from_file(path: &Path, schema: &Schema) -> Result<Workload> {
        let text =
            std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        Workload::from_json(&text, schema)
    }

    pub fn from_json(text: &str, schema: &Schema) -> Result<Workload> {
        let file: WorkloadFile = serde_json::from_str(text)?;
        let mut queries = Vec::new();
        let mut weights = Vec::new();
        for entry in file.queries {
            let idx = entry
                .attrs
                .iter()
                .map(|name| {
                    schema
                        .index_of(name)
                        .ok_or_else(|| Error::Config(format!("workload names unknown attribute {name:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            queries.push(Query::new(idx, schema).map_err(|e| Error::Config(e.to_string()))?);
            weights.push(entry.weight);
        }
        Workload::new(queries, weights)
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }
}
