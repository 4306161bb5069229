//! Splitting a dataset across data holders.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{Dataset, Query, Schema};
use crate::workload::Workload;

/// Rows and attributes one holder owns. Both lists are sorted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Holding {
    pub rows: Vec<usize>,
    pub attrs: Vec<usize>,
}

impl Holding {
    pub fn owns_all(&self, q: &Query) -> bool {
        q.attrs.iter().all(|a| self.attrs.binary_search(a).is_ok())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionKind {
    Central,
    Horizontal,
    Vertical,
    Mixed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PartitionPlan {
    pub kind: PartitionKind,
    pub n_rows: usize,
    pub n_attrs: usize,
    pub holders: Vec<Holding>,
}

/// A holder's own cells: `values[k][t]` is row `holding.rows[k]`, attribute
/// `holding.attrs[t]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HolderData {
    pub holding: Holding,
    pub values: Vec<Vec<u32>>,
}

/// Explicit tiling: each holder owns the half-open row range `rows` of the
/// named attributes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixedSpec {
    pub holders: Vec<MixedHolder>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixedHolder {
    pub rows: [usize; 2],
    pub attrs: Vec<String>,
}

impl MixedSpec {
    pub fn from_file(path: &Path) -> Result<MixedSpec> {
        let text =
            std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PartitionMode {
    Central,
    Horizontal(usize),
    Vertical(usize),
    Mixed(MixedSpec),
}

/// `central`, `horizontal:N` or `vertical:N`. Mixed tilings come from a file
/// and are built with [`PartitionMode::Mixed`].
impl FromStr for PartitionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<PartitionMode> {
        let count = |v: &str| {
            v.parse::<usize>().map_err(|_| Error::Config(format!("partition holder count {v:?} is not an integer")))
        };
        match s.split_once(':') {
            None if s == "central" => Ok(PartitionMode::Central),
            Some(("horizontal", n)) => Ok(PartitionMode::Horizontal(count(n)?)),
            Some(("vertical", n)) => Ok(PartitionMode::Vertical(count(n)?)),
            Some(("mixed", path)) => MixedSpec::from_file(Path::new(path)).map(PartitionMode::Mixed),
            _ => Err(Error::Config(format!("unknown partition mode {s:?}"))),
        }
    }
}

impl fmt::Display for PartitionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartitionMode::Central => write!(f, "central"),
            PartitionMode::Horizontal(n) => write!(f, "horizontal:{n}"),
            PartitionMode::Vertical(n) => write!(f, "vertical:{n}"),
            PartitionMode::Mixed(s) => write!(f, "mixed({} holders)", s.holders.len()),
        }
    }
}

/// Splits `items` into `parts` contiguous chunks; earlier chunks get the
/// remainder.
fn even_chunks(items: &[usize], parts: usize) -> Vec<Vec<usize>> {
    let base = items.len() / parts;
    let extra = items.len() % parts;
    let mut out = Vec::with_capacity(parts);
    let mut at = 0;
    for i in 0..parts {
        let size = base + usize::from(i < extra);
        let mut chunk = items[at..at + size].to_vec();
        chunk.sort_unstable();
        out.push(chunk);
        at += size;
    }
    out
}

pub fn partition(data: &Dataset, mode: &PartitionMode, seed: u64) -> Result<(PartitionPlan, Vec<HolderData>)> {
    let n = data.n_rows();
    let d = data.schema.len();
    let all_rows: Vec<usize> = (0..n).collect();
    let all_attrs: Vec<usize> = (0..d).collect();
    let mut rng = crate::seeds::stream(seed, crate::seeds::STREAM_PARTITION);
    let (kind, holdings) = match mode {
        PartitionMode::Central => (PartitionKind::Central, vec![Holding { rows: all_rows, attrs: all_attrs }]),
        PartitionMode::Horizontal(k) => {
            let k = *k;
            if k < 2 || k > n {
                return Err(Error::Config(format!("horizontal partition needs 2 <= N <= n = {n}, got {k}")));
            }
            let mut rows = all_rows;
            rows.shuffle(&mut rng);
            let hs = even_chunks(&rows, k).into_iter().map(|rows| Holding { rows, attrs: all_attrs.clone() }).collect();
            (PartitionKind::Horizontal, hs)
        }
        PartitionMode::Vertical(k) => {
            let k = *k;
            if k < 2 || k > d {
                return Err(Error::Config(format!("vertical partition needs 2 <= N <= d = {d}, got {k}")));
            }
            let mut attrs = all_attrs;
            attrs.shuffle(&mut rng);
            let hs =
                even_chunks(&attrs, k).into_iter().map(|attrs| Holding { rows: all_rows.clone(), attrs }).collect();
            (PartitionKind::Vertical, hs)
        }
        PartitionMode::Mixed(spec) => (PartitionKind::Mixed, mixed_holdings(data, spec)?),
    };
    let plan = PartitionPlan { kind, n_rows: n, n_attrs: d, holders: holdings };
    plan.check_coverage()?;
    let holders = plan
        .holders
        .iter()
        .map(|h| HolderData {
            holding: h.clone(),
            values: h.rows.iter().map(|&r| h.attrs.iter().map(|&a| data.rows[r][a]).collect()).collect(),
        })
        .collect();
    Ok((plan, holders))
}

fn mixed_holdings(data: &Dataset, spec: &MixedSpec) -> Result<Vec<Holding>> {
    if spec.holders.len() < 2 {
        return Err(Error::Config("mixed partition needs at least 2 holders".into()));
    }
    spec.holders
        .iter()
        .map(|h| {
            let [lo, hi] = h.rows;
            if lo > hi || hi > data.n_rows() {
                return Err(Error::Config(format!("row range [{lo}, {hi}) outside 0..{}", data.n_rows())));
            }
            let mut attrs = h
                .attrs
                .iter()
                .map(|name| {
                    data.schema
                        .index_of(name)
                        .ok_or_else(|| Error::Config(format!("tiling names unknown attribute {name:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            attrs.sort_unstable();
            attrs.dedup();
            Ok(Holding { rows: (lo..hi).collect(), attrs })
        })
        .collect()
}

impl PartitionPlan {
    /// Every cell of the `n x d` matrix must be owned by some holder.
    pub fn check_coverage(&self) -> Result<()> {
        let mut covered = vec![false; self.n_rows * self.n_attrs];
        for h in &self.holders {
            for &r in &h.rows {
                for &a in &h.attrs {
                    covered[r * self.n_attrs + a] = true;
                }
            }
        }
        match covered.iter().position(|c| !c) {
            Some(i) => Err(Error::Coverage(format!(
                "row {}, attribute {} is held by no data holder",
                i / self.n_attrs,
                i % self.n_attrs
            ))),
            None => Ok(()),
        }
    }

    /// A query is answered locally when the holders owning all of its
    /// attributes hold disjoint row sets that together cover every row.
    /// Everything else is computed jointly from the shared data.
    pub fn is_local(&self, q: &Query) -> bool {
        let mut seen = vec![false; self.n_rows];
        let mut total = 0;
        for h in self.holders.iter().filter(|h| h.owns_all(q)) {
            for &r in &h.rows {
                if std::mem::replace(&mut seen[r], true) {
                    return false;
                }
                total += 1;
            }
        }
        total == self.n_rows
    }

    /// Q* membership per workload query.
    pub fn qstar(&self, workload: &Workload) -> Vec<bool> {
        workload.queries.iter().map(|q| !self.is_local(q)).collect()
    }
}

/// Reassembles the full dataset from the holders' cells. Where holdings
/// overlap the first holder's value is kept, matching the secure join.
pub fn recombine(schema: &Schema, plan: &PartitionPlan, holders: &[HolderData]) -> Result<Dataset> {
    plan.check_coverage()?;
    let mut m = vec![vec![u32::MAX; plan.n_attrs]; plan.n_rows];
    for h in holders {
        for (k, &r) in h.holding.rows.iter().enumerate() {
            for (t, &a) in h.holding.attrs.iter().enumerate() {
                if m[r][a] == u32::MAX {
                    m[r][a] = h.values[k][t];
                }
            }
        }
    }
    Dataset::new(schema.clone(), m)
}
