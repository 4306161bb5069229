//! Attribute domains, datasets, marginal queries and contingency tables.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Finite domain of one attribute.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttrDomain {
    pub name: String,
    pub cardinality: usize,
    /// Bin edges for a discretized continuous attribute; `cardinality + 1`
    /// strictly increasing values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<Vec<f64>>,
    /// Category labels accepted in CSV input in place of indices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl AttrDomain {
    pub fn new(name: impl Into<String>, cardinality: usize) -> AttrDomain {
        AttrDomain { name: name.into(), cardinality, bins: None, labels: None }
    }

    fn validate(&self) -> Result<()> {
        if self.cardinality < 2 {
            return Err(Error::Ingestion(format!(
                "attribute {:?} needs at least 2 categories, has {}",
                self.name, self.cardinality
            )));
        }
        if let Some(edges) = &self.bins {
            if edges.len() != self.cardinality + 1 {
                return Err(Error::Ingestion(format!(
                    "attribute {:?}: {} bin edges for {} categories",
                    self.name,
                    edges.len(),
                    self.cardinality
                )));
            }
            if edges.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
                return Err(Error::Ingestion(format!(
                    "attribute {:?}: bin edges must be strictly increasing",
                    self.name
                )));
            }
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.cardinality {
                return Err(Error::Ingestion(format!(
                    "attribute {:?}: {} labels for {} categories",
                    self.name,
                    labels.len(),
                    self.cardinality
                )));
            }
        }
        Ok(())
    }
}

/// Ordered attribute list; the full domain is the product of the attribute
/// domains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub attrs: Vec<AttrDomain>,
}

impl Schema {
    pub fn new(attrs: Vec<AttrDomain>) -> Result<Schema> {
        let schema = Schema { attrs };
        schema.validate()?;
        Ok(schema)
    }

    /// Schema with anonymous attributes `a0, a1, ...`.
    pub fn from_cardinalities(cards: &[usize]) -> Result<Schema> {
        Schema::new(cards.iter().enumerate().map(|(i, &c)| AttrDomain::new(format!("a{i}"), c)).collect())
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for a in &self.attrs {
            a.validate()?;
            if !seen.insert(a.name.as_str()) {
                return Err(Error::Ingestion(format!("duplicate attribute name {:?}", a.name)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.attrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attrs.is_empty()
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.attrs.iter().map(|a| a.cardinality).collect()
    }

    /// `|Ω|`, or `None` if it overflows.
    pub fn domain_size(&self) -> Option<usize> {
        self.attrs.iter().try_fold(1usize, |acc, a| acc.checked_mul(a.cardinality))
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attrs.iter().position(|a| a.name == name)
    }
}

/// `n x d` matrix of category indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub schema: Schema,
    pub rows: Vec<Vec<u32>>,
}

impl Dataset {
    pub fn new(schema: Schema, rows: Vec<Vec<u32>>) -> Result<Dataset> {
        let d = Dataset { schema, rows };
        d.validate()?;
        Ok(d)
    }

    pub fn empty(schema: Schema) -> Dataset {
        Dataset { schema, rows: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        let cards = self.schema.cardinalities();
        for (r, row) in self.rows.iter().enumerate() {
            if row.len() != cards.len() {
                return Err(Error::Ingestion(format!(
                    "row {r} has {} values, schema has {} attributes",
                    row.len(),
                    cards.len()
                )));
            }
            for (c, (&v, &card)) in row.iter().zip(&cards).enumerate() {
                if v as usize >= card {
                    return Err(Error::Ingestion(format!(
                        "row {r}, column {:?}: value {v} outside domain of size {card}",
                        self.schema.attrs[c].name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }
}

/// A marginal query: a sorted set of attribute indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Query {
    pub attrs: Vec<usize>,
}

impl Query {
    pub fn new(mut attrs: Vec<usize>, schema: &Schema) -> Result<Query> {
        attrs.sort_unstable();
        if attrs.is_empty() {
            return Err(Error::Argument("query needs at least one attribute".into()));
        }
        if attrs.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Argument(format!("query {attrs:?} repeats an attribute")));
        }
        if let Some(&a) = attrs.iter().find(|&&a| a >= schema.len()) {
            return Err(Error::Argument(format!("attribute index {a} outside schema")));
        }
        Ok(Query { attrs })
    }

    pub fn arity(&self) -> usize {
        self.attrs.len()
    }

    /// Domain sizes of the member attributes, in query order.
    pub fn dims(&self, schema: &Schema) -> Vec<usize> {
        self.attrs.iter().map(|&a| schema.attrs[a].cardinality).collect()
    }

    /// `ω_q`.
    pub fn cells(&self, schema: &Schema) -> usize {
        self.dims(schema).iter().product()
    }

    /// Row-major cell of a full record: for two attributes `j * ω_2 + k`.
    pub fn cell_of(&self, schema: &Schema, row: &[u32]) -> usize {
        self.attrs.iter().fold(0, |acc, &a| acc * schema.attrs[a].cardinality + row[a] as usize)
    }

    /// Per-attribute values of a flat cell index, in query order.
    pub fn digits(&self, schema: &Schema, mut cell: usize) -> Vec<usize> {
        let dims = self.dims(schema);
        let mut out = vec![0; dims.len()];
        for t in (0..dims.len()).rev() {
            out[t] = cell % dims[t];
            cell /= dims[t];
        }
        out
    }

    pub fn names(&self, schema: &Schema) -> Vec<String> {
        self.attrs.iter().map(|&a| schema.attrs[a].name.clone()).collect()
    }
}

/// Counts of a query over the cells of its domain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MarginalTable {
    pub query: Query,
    pub counts: Vec<u64>,
}

impl MarginalTable {
    /// Plaintext contingency table.
    pub fn count(data: &Dataset, query: &Query) -> MarginalTable {
        let mut counts = vec![0u64; query.cells(&data.schema)];
        for row in &data.rows {
            counts[query.cell_of(&data.schema, row)] += 1;
        }
        MarginalTable { query: query.clone(), counts }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_validation() {
        assert!(Schema::from_cardinalities(&[2, 1]).is_err());
        let dup = Schema::new(vec![AttrDomain::new("x", 2), AttrDomain::new("x", 3)]);
        assert!(dup.is_err());
        let mut a = AttrDomain::new("x", 2);
        a.bins = Some(vec![0.0, 1.0, 1.0]);
        assert!(Schema::new(vec![a]).is_err());
        assert_eq!(Schema::from_cardinalities(&[2, 3, 4]).unwrap().domain_size(), Some(24));
    }

    #[test]
    fn dataset_validation_names_the_cell() {
        let s = Schema::from_cardinalities(&[2, 2]).unwrap();
        let err = Dataset::new(s, vec![vec![0, 1], vec![1, 2]]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 1") && msg.contains("a1"), "{msg}");
    }

    #[test]
    fn query_flattening() {
        let s = Schema::from_cardinalities(&[2, 3, 4]).unwrap();
        let q = Query::new(vec![2, 0], &s).unwrap();
        assert_eq!(q.attrs, vec![0, 2]);
        assert_eq!(q.cells(&s), 8);
        assert_eq!(q.cell_of(&s, &[1, 0, 3]), 4 + 3);
        assert_eq!(q.digits(&s, 7), vec![1, 3]);
        assert!(Query::new(vec![1, 1], &s).is_err());
        assert!(Query::new(vec![3], &s).is_err());
    }

    #[test]
    fn counts_sum_to_rows() {
        let s = Schema::from_cardinalities(&[2, 2]).unwrap();
        let d = Dataset::new(s.clone(), vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]).unwrap();
        let t = MarginalTable::count(&d, &Query::new(vec![0, 1], &s).unwrap());
        assert_eq!(t.counts, vec![1, 1, 1, 1]);
    }
}
