//! Workload answers over distributed data: holders' local partial counts,
//! their secret-shared aggregation, joining of shared holder data, and secure
//! counting for queries that span holders.

use rand::Rng;

use crate::backend::Backend;
use crate::error::{Error, Result};
use crate::partition::{HolderData, Holding};
use crate::rss::{Engine, SharedVec};
use crate::schema::{MarginalTable, Query, Schema};
use crate::workload::Workload;

/// Cell budget for secure counting of a single query.
pub const DEFAULT_CELL_BUDGET: usize = 100_000;

/// A holder's shared data columns, one per owned attribute, in row order of
/// `holding.rows`.
#[derive(Clone, Debug)]
pub struct SharedData {
    pub holding: Holding,
    pub columns: Vec<SharedVec>,
}

/// Everything one holder contributes to the computation.
#[derive(Clone, Debug)]
pub struct HolderShares {
    pub partials: Vec<SharedVec>,
    pub data: Option<SharedData>,
}

/// Shared `n x d` dataset, stored by column.
#[derive(Clone, Debug)]
pub struct JoinedData {
    pub n_rows: usize,
    pub columns: Vec<SharedVec>,
}

#[derive(Clone, Debug)]
pub struct CompOutput {
    pub answers: Vec<SharedVec>,
    /// Share additions spent aggregating partial answers.
    pub additions: u64,
}

fn check_holder(holder: &HolderData, schema: &Schema) -> Result<()> {
    let h = &holder.holding;
    if holder.values.len() != h.rows.len() {
        return Err(Error::Ingestion("holder data rows do not match its holding".into()));
    }
    for (k, row) in holder.values.iter().enumerate() {
        if row.len() != h.attrs.len() {
            return Err(Error::Ingestion(format!("holder row {k} is ragged")));
        }
        for (&v, &a) in row.iter().zip(&h.attrs) {
            let card = schema
                .attrs
                .get(a)
                .ok_or_else(|| Error::Ingestion(format!("holder owns unknown attribute {a}")))?
                .cardinality;
            if v as usize >= card {
                return Err(Error::Ingestion(format!(
                    "holder row {k}, attribute {:?}: value {v} outside domain",
                    schema.attrs[a].name
                )));
            }
        }
    }
    Ok(())
}

/// Counts `q` over the holder's own rows when it owns every attribute of `q`.
pub fn local_counts(holder: &HolderData, schema: &Schema, q: &Query) -> Option<Vec<u64>> {
    let h = &holder.holding;
    if !h.owns_all(q) {
        return None;
    }
    let cols: Vec<usize> = q.attrs.iter().map(|a| h.attrs.binary_search(a).expect("owned")).collect();
    let dims = q.dims(schema);
    let mut counts = vec![0u64; q.cells(schema)];
    for row in &holder.values {
        let cell = cols.iter().zip(&dims).fold(0, |acc, (&c, &w)| acc * w + row[c] as usize);
        counts[cell] += 1;
    }
    Some(counts)
}

/// Shares the holder's local answers (zeros where it cannot answer a query,
/// and for every Q* query) and, when `share_data`, its raw cells.
pub fn local_compute<R: Rng + ?Sized>(
    engine: &mut Engine,
    holder: &HolderData,
    schema: &Schema,
    workload: &Workload,
    qstar: &[bool],
    share_data: bool,
    rng: &mut R,
) -> Result<HolderShares> {
    check_holder(holder, schema)?;
    let mut partials = Vec::with_capacity(workload.len());
    for (q, &joint) in workload.queries.iter().zip(qstar) {
        let counts = match local_counts(holder, schema, q) {
            Some(c) if !joint => c,
            _ => vec![0; q.cells(schema)],
        };
        partials.push(engine.share_input(rng, &counts));
    }
    let data = share_data.then(|| {
        let h = &holder.holding;
        let columns = (0..h.attrs.len())
            .map(|t| {
                let col: Vec<u64> = holder.values.iter().map(|row| row[t] as u64).collect();
                engine.share_input(rng, &col)
            })
            .collect();
        SharedData { holding: h.clone(), columns }
    });
    Ok(HolderShares { partials, data })
}

/// Sums the holders' shared partial answers and adds the securely counted
/// answers of Q* queries.
pub fn pi_comp(
    engine: &mut Engine,
    holders: &[HolderShares],
    schema: &Schema,
    n_rows: usize,
    workload: &Workload,
    qstar: &[bool],
) -> Result<CompOutput> {
    if holders.is_empty() {
        return Err(Error::Orchestration("no data holders".into()));
    }
    if let Some(i) = holders.iter().position(|h| h.partials.len() != workload.len()) {
        return Err(Error::Orchestration(format!("holder {i} sent the wrong number of partial answers")));
    }
    let mut additions = 0u64;
    let mut answers = Vec::with_capacity(workload.len());
    for (qi, q) in workload.queries.iter().enumerate() {
        let mut acc = holders[0].partials[qi].clone();
        if acc.len() != q.cells(schema) {
            return Err(Error::Orchestration(format!("partial answer for query {qi} has the wrong size")));
        }
        for h in &holders[1..] {
            acc = acc.add(&h.partials[qi]);
            additions += acc.len() as u64;
        }
        answers.push(acc);
    }
    if qstar.iter().any(|&j| j) {
        let datas: Vec<&SharedData> = holders
            .iter()
            .map(|h| {
                h.data.as_ref().ok_or_else(|| Error::Orchestration("Q* is non-empty but shared data is missing".into()))
            })
            .collect::<Result<_>>()?;
        let joined = pi_join(engine, &datas, schema, n_rows)?;
        for (qi, q) in workload.queries.iter().enumerate() {
            if qstar[qi] {
                let counts = secure_count(engine, &joined, schema, q, DEFAULT_CELL_BUDGET)?;
                answers[qi] = answers[qi].add(&counts);
            }
        }
    }
    Ok(CompOutput { answers, additions })
}

/// Places every holder's shared cells into one shared matrix. Cells owned by
/// several holders take the first holder's shares.
pub fn pi_join(engine: &mut Engine, datas: &[&SharedData], schema: &Schema, n_rows: usize) -> Result<JoinedData> {
    let d = schema.len();
    let mut columns: Vec<SharedVec> = (0..d).map(|_| SharedVec::zeros(n_rows)).collect();
    let mut filled = vec![vec![false; n_rows]; d];
    let mut assigned = 0u64;
    for data in datas {
        let h = &data.holding;
        for (t, &a) in h.attrs.iter().enumerate() {
            let (dst, src): (Vec<usize>, Vec<usize>) =
                h.rows.iter().enumerate().filter(|(_, &r)| !filled[a][r]).map(|(k, &r)| (r, k)).unzip();
            for &r in &dst {
                filled[a][r] = true;
            }
            columns[a].scatter(&dst, &data.columns[t].gather(&src));
            assigned += dst.len() as u64;
        }
    }
    for (a, col) in filled.iter().enumerate() {
        if let Some(r) = col.iter().position(|f| !f) {
            return Err(Error::Coverage(format!(
                "row {r}, attribute {:?} was shared by no holder",
                schema.attrs[a].name
            )));
        }
    }
    engine.record_join(assigned);
    Ok(JoinedData { n_rows, columns })
}

/// Secure contingency table of `q` over joined data: for every row and cell,
/// one equality test per member attribute and the product of the results.
fn secure_count(
    engine: &mut Engine,
    joined: &JoinedData,
    schema: &Schema,
    q: &Query,
    cell_budget: usize,
) -> Result<SharedVec> {
    let cells = q.cells(schema);
    if cells > cell_budget {
        return Err(Error::Resource(format!("query {:?} has {cells} cells, budget is {cell_budget}", q.attrs)));
    }
    let n = joined.n_rows;
    let rows: Vec<usize> = (0..cells).flat_map(|_| 0..n).collect();
    let digits: Vec<Vec<usize>> = (0..cells).map(|c| q.digits(schema, c)).collect();
    let mut acc: Option<SharedVec> = None;
    for (t, &a) in q.attrs.iter().enumerate() {
        let xs = joined.columns[a].gather(&rows);
        let cs: Vec<u64> = digits.iter().flat_map(|dg| std::iter::repeat_n(dg[t] as u64, n)).collect();
        let beta = value_bits(schema.attrs[a].cardinality - 1);
        let hit = engine.eq_public(&xs, &cs, beta);
        acc = Some(match acc {
            None => hit,
            Some(prev) => engine.mul(&prev, &hit),
        });
    }
    let hits = acc.expect("query has attributes");
    Ok(hits.segment_sum(&vec![n; cells]))
}

/// Bits needed for values up to `max`, at least 1.
pub(crate) fn value_bits(max: usize) -> u32 {
    (usize::BITS - max.leading_zeros()).max(1)
}

/// Secure `p`-way marginal from joined data, `p >= 2`.
pub fn p_way_marginal(
    engine: &mut Engine,
    joined: &JoinedData,
    schema: &Schema,
    q: &Query,
    cell_budget: usize,
) -> Result<SharedVec> {
    if q.arity() < 2 {
        return Err(Error::Argument("p-way marginals need p >= 2".into()));
    }
    secure_count(engine, joined, schema, q, cell_budget)
}

/// Plaintext reference answers for a whole workload.
pub fn plaintext_answers(data: &crate::schema::Dataset, workload: &Workload) -> Vec<MarginalTable> {
    workload.queries.iter().map(|q| MarginalTable::count(data, q)).collect()
}
