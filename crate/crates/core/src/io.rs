//! CSV datasets, domain files and discretization of continuous columns.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::schema::{AttrDomain, Dataset, Schema};

/// Bins used when a continuous column comes without edges.
pub const DEFAULT_BINS: usize = 8;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.display().to_string(), source }
}

/// Reads `{"attrs": [{"name": ..., "cardinality": ..., "bins": [...], "labels": [...]}]}`.
pub fn load_domain(path: &Path) -> Result<Schema> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_domain(&text)
}

pub fn parse_domain(text: &str) -> Result<Schema> {
    let schema: Schema = serde_json::from_str(text).map_err(|e| Error::Ingestion(format!("domain file: {e}")))?;
    schema.validate()?;
    if schema.is_empty() {
        return Err(Error::Ingestion("domain file lists no attributes".into()));
    }
    Ok(schema)
}

pub fn save_domain(path: &Path, schema: &Schema) -> Result<()> {
    let text = serde_json::to_string_pretty(schema)?;
    std::fs::write(path, text + "\n").map_err(io_err(path))
}

pub fn load_dataset(csv_path: &Path, domain_path: &Path) -> Result<Dataset> {
    let schema = load_domain(domain_path)?;
    load_csv(csv_path, &schema)
}

/// Reads a headed CSV whose columns are the schema's attributes in any
/// order. Cells are category indices or labels; columns of binned
/// attributes hold raw values.
pub fn load_csv(path: &Path, schema: &Schema) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    read_csv(file, schema).map_err(|e| match e {
        Error::Ingestion(msg) => Error::Ingestion(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn read_csv<R: std::io::Read>(reader: R, schema: &Schema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::Ingestion(e.to_string()))?.clone();
    let mut column_of = vec![usize::MAX; schema.len()];
    for (c, name) in header.iter().enumerate() {
        let a = schema
            .index_of(name.trim())
            .ok_or_else(|| Error::Ingestion(format!("column {name:?} is not in the domain")))?;
        if column_of[a] != usize::MAX {
            return Err(Error::Ingestion(format!("column {name:?} appears twice")));
        }
        column_of[a] = c;
    }
    if let Some(a) = column_of.iter().position(|&c| c == usize::MAX) {
        return Err(Error::Ingestion(format!("attribute {:?} has no column", schema.attrs[a].name)));
    }
    let labels: Vec<Option<HashMap<&str, u32>>> = schema
        .attrs
        .iter()
        .map(|a| a.labels.as_ref().map(|ls| ls.iter().enumerate().map(|(i, l)| (l.as_str(), i as u32)).collect()))
        .collect();
    let mut rows = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Ingestion(format!("row {r}: {e}")))?;
        if record.len() != header.len() {
            return Err(Error::Ingestion(format!("row {r} has {} cells, header has {}", record.len(), header.len())));
        }
        let row = schema
            .attrs
            .iter()
            .enumerate()
            .map(|(a, dom)| parse_cell(record[column_of[a]].trim(), dom, labels[a].as_ref(), r))
            .collect::<Result<Vec<u32>>>()?;
        rows.push(row);
    }
    Dataset::new(schema.clone(), rows)
}

fn parse_cell(cell: &str, dom: &AttrDomain, labels: Option<&HashMap<&str, u32>>, row: usize) -> Result<u32> {
    let bad = |what: String| Error::Ingestion(format!("row {row}, column {:?}: {what}", dom.name));
    if let Some(edges) = &dom.bins {
        let x: f64 = cell.parse().map_err(|_| bad(format!("{cell:?} is not a number")))?;
        if !x.is_finite() {
            return Err(bad(format!("{cell:?} is not finite")));
        }
        return Ok(bin_of(x, edges));
    }
    if let Some(&i) = labels.and_then(|m| m.get(cell)) {
        return Ok(i);
    }
    match cell.parse::<u32>() {
        Ok(i) if (i as usize) < dom.cardinality => Ok(i),
        Ok(i) => Err(bad(format!("index {i} outside domain of size {}", dom.cardinality))),
        Err(_) if labels.is_some() => Err(bad(format!("unknown label {cell:?}"))),
        Err(_) => Err(bad(format!("{cell:?} is not a category index"))),
    }
}

/// Writes labels where the domain has them, the lower bin edge for binned
/// attributes, and indices otherwise.
pub fn save_dataset(path: &Path, data: &Dataset) -> Result<()> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    write_csv(file, data).map_err(|e| match e {
        Error::Ingestion(msg) => Error::Ingestion(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_csv<W: std::io::Write>(writer: W, data: &Dataset) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(writer);
    let to_err = |e: csv::Error| Error::Ingestion(e.to_string());
    w.write_record(data.schema.attrs.iter().map(|a| a.name.as_str())).map_err(to_err)?;
    for row in &data.rows {
        let cells = row.iter().zip(&data.schema.attrs).map(|(&v, a)| match (&a.labels, &a.bins) {
            (Some(ls), _) => ls[v as usize].clone(),
            (None, Some(edges)) => edges[v as usize].to_string(),
            (None, None) => v.to_string(),
        });
        w.write_record(cells).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::Ingestion(e.to_string()))
}

/// Bin index of `x` among half-open bins `[e_i, e_{i+1})`; values outside
/// the edges clamp to the first or last bin.
fn bin_of(x: f64, edges: &[f64]) -> u32 {
    let bins = edges.len() - 1;
    let i = edges.partition_point(|&e| e <= x);
    i.clamp(1, bins) as u32 - 1
}

/// Discretizes a raw column. Without edges, [`DEFAULT_BINS`] equal-width bins
/// span the column's range. Returns the indices and the edges used.
pub fn discretize(raw: &[f64], edges: Option<&[f64]>) -> Result<(Vec<u32>, Vec<f64>)> {
    if let Some(i) = raw.iter().position(|x| !x.is_finite()) {
        return Err(Error::Ingestion(format!("value {} at position {i} is not finite", raw[i])));
    }
    let edges = match edges {
        Some(e) => {
            if e.len() < 2 || e.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
                return Err(Error::Ingestion("bin edges must be strictly increasing".into()));
            }
            e.to_vec()
        }
        None => equal_width(raw, DEFAULT_BINS)?,
    };
    Ok((raw.iter().map(|&x| bin_of(x, &edges)).collect(), edges))
}

fn equal_width(raw: &[f64], bins: usize) -> Result<Vec<f64>> {
    if raw.is_empty() {
        return Err(Error::Ingestion("cannot derive bins from an empty column".into()));
    }
    let lo = raw.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    Ok((0..=bins).map(|i| lo + width * i as f64).collect())
}
