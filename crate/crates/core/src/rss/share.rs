//! Replicated shares and party-local linear algebra on shared vectors.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ring::RingElem;

/// Party identifier, 1-based as in the protocol descriptions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct PartyId(u8);

impl PartyId {
    pub const ALL: [PartyId; 3] = [PartyId(1), PartyId(2), PartyId(3)];

    pub fn new(index: u8) -> Result<PartyId> {
        if (1..=3).contains(&index) {
            Ok(PartyId(index))
        } else {
            Err(Error::Argument(format!("party index {index} not in 1..=3")))
        }
    }

    pub(crate) fn from_slot(slot: usize) -> PartyId {
        PartyId(slot as u8 + 1)
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub(crate) fn slot(self) -> usize {
        self.0 as usize - 1
    }
}

/// What one party holds of a single secret: components `x_i` and `x_{i+1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SharePair {
    pub first: RingElem,
    pub second: RingElem,
}

/// The three parties' pairs for one secret, indexed by party slot.
pub type ReplicatedShare = [SharePair; 3];

/// Splits `secret` into uniformly random components and hands party `i` the
/// pair `(x_i, x_{i+1})`.
pub fn share<R: Rng + ?Sized>(secret: RingElem, rng: &mut R) -> ReplicatedShare {
    let x0 = RingElem(rng.random());
    let x1 = RingElem(rng.random());
    let x2 = secret - x0 - x1;
    pairs_from_components([x0, x1, x2])
}

fn pairs_from_components(x: [RingElem; 3]) -> ReplicatedShare {
    [
        SharePair { first: x[0], second: x[1] },
        SharePair { first: x[1], second: x[2] },
        SharePair { first: x[2], second: x[0] },
    ]
}

/// Sums the components after checking that every replicated copy agrees.
pub fn reconstruct(shares: &ReplicatedShare) -> Result<RingElem> {
    for p in 0..3 {
        let next = (p + 1) % 3;
        if shares[p].second != shares[next].first {
            return Err(Error::Integrity(format!(
                "component {} held by parties {} and {} disagrees",
                next + 1,
                p + 1,
                next + 1
            )));
        }
    }
    Ok(shares[0].first + shares[1].first + shares[2].first)
}

/// One party's slice of a shared vector.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub(crate) struct View {
    pub first: Vec<u64>,
    pub second: Vec<u64>,
}

impl View {
    fn zeros(n: usize) -> View {
        View { first: vec![0; n], second: vec![0; n] }
    }

    fn map(&self, f: impl Fn(&[u64]) -> Vec<u64>) -> View {
        View { first: f(&self.first), second: f(&self.second) }
    }

    fn zip(&self, other: &View, f: impl Fn(u64, u64) -> u64) -> View {
        let z = |a: &[u64], b: &[u64]| a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect();
        View { first: z(&self.first, &other.first), second: z(&self.second, &other.second) }
    }
}

/// A vector of replicated shares, stored party-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharedVec {
    pub(crate) views: [View; 3],
}

impl SharedVec {
    pub(crate) fn from_views(views: [View; 3]) -> SharedVec {
        debug_assert!(views.iter().all(|v| v.first.len() == views[0].first.len()));
        SharedVec { views }
    }

    pub fn zeros(n: usize) -> SharedVec {
        SharedVec::from_views([View::zeros(n), View::zeros(n), View::zeros(n)])
    }

    /// Shares of public values: component `x_1` carries the constant.
    pub fn public(values: &[u64]) -> SharedVec {
        let n = values.len();
        let mut s = SharedVec::zeros(n);
        s.views[0].first = values.to_vec();
        s.views[2].second = values.to_vec();
        s
    }

    pub fn from_shares(shares: &[ReplicatedShare]) -> SharedVec {
        let mut s = SharedVec::zeros(shares.len());
        for (i, sh) in shares.iter().enumerate() {
            for p in 0..3 {
                s.views[p].first[i] = sh[p].first.0;
                s.views[p].second[i] = sh[p].second.0;
            }
        }
        s
    }

    /// Shares `values` with `rng` acting as the dealer.
    pub fn share_values<R: Rng + ?Sized>(values: &[u64], rng: &mut R) -> SharedVec {
        let shares: Vec<_> = values.iter().map(|&v| share(RingElem(v), rng)).collect();
        SharedVec::from_shares(&shares)
    }

    pub fn len(&self) -> usize {
        self.views[0].first.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn element(&self, i: usize) -> ReplicatedShare {
        std::array::from_fn(|p| SharePair {
            first: RingElem(self.views[p].first[i]),
            second: RingElem(self.views[p].second[i]),
        })
    }

    /// Everything `party` holds.
    pub fn party_view(&self, party: PartyId) -> Vec<SharePair> {
        let v = &self.views[party.slot()];
        v.first.iter().zip(&v.second).map(|(&a, &b)| SharePair { first: RingElem(a), second: RingElem(b) }).collect()
    }

    /// Offline reconstruction of every element, with the consistency check.
    pub fn reconstruct(&self) -> Result<Vec<u64>> {
        (0..self.len()).map(|i| reconstruct(&self.element(i)).map(|r| r.0)).collect()
    }

    /// Simulator-only plaintext peek for debug assertions.
    #[cfg(debug_assertions)]
    pub(crate) fn peek(&self) -> Vec<u64> {
        (0..self.len())
            .map(|i| self.views[0].first[i].wrapping_add(self.views[1].first[i]).wrapping_add(self.views[2].first[i]))
            .collect()
    }

    fn map(&self, f: impl Fn(&[u64]) -> Vec<u64>) -> SharedVec {
        SharedVec::from_views(std::array::from_fn(|p| self.views[p].map(&f)))
    }

    fn zip(&self, other: &SharedVec, f: impl Fn(u64, u64) -> u64 + Copy) -> SharedVec {
        assert_eq!(self.len(), other.len(), "shared vector length mismatch");
        SharedVec::from_views(std::array::from_fn(|p| self.views[p].zip(&other.views[p], f)))
    }

    /// `self += c * other` without allocating.
    pub(crate) fn add_scaled_assign(&mut self, other: &SharedVec, c: u64) {
        assert_eq!(self.len(), other.len(), "shared vector length mismatch");
        for (v, o) in self.views.iter_mut().zip(&other.views) {
            for (x, &y) in v.first.iter_mut().zip(&o.first).chain(v.second.iter_mut().zip(&o.second)) {
                *x = x.wrapping_add(y.wrapping_mul(c));
            }
        }
    }

    /// Linear combination of three vectors with per-element public
    /// coefficients `f(i) = (ka, kb, kc)`, in one pass.
    pub(crate) fn combine3(
        a: &SharedVec,
        b: &SharedVec,
        c: &SharedVec,
        f: impl Fn(usize) -> (u64, u64, u64),
    ) -> SharedVec {
        let n = a.len();
        assert!(b.len() == n && c.len() == n, "shared vector length mismatch");
        let lin = |x: &[u64], y: &[u64], z: &[u64]| -> Vec<u64> {
            (0..n)
                .map(|i| {
                    let (ka, kb, kc) = f(i);
                    x[i].wrapping_mul(ka).wrapping_add(y[i].wrapping_mul(kb)).wrapping_add(z[i].wrapping_mul(kc))
                })
                .collect()
        };
        SharedVec::from_views(std::array::from_fn(|p| {
            let (x, y, z) = (&a.views[p], &b.views[p], &c.views[p]);
            View { first: lin(&x.first, &y.first, &z.first), second: lin(&x.second, &y.second, &z.second) }
        }))
    }

    pub fn add(&self, other: &SharedVec) -> SharedVec {
        self.zip(other, u64::wrapping_add)
    }

    pub fn sub(&self, other: &SharedVec) -> SharedVec {
        self.zip(other, u64::wrapping_sub)
    }

    pub fn add_public(&self, c: &[u64]) -> SharedVec {
        assert_eq!(self.len(), c.len(), "constant length mismatch");
        let mut s = self.clone();
        for (x, &k) in s.views[0].first.iter_mut().zip(c) {
            *x = x.wrapping_add(k);
        }
        for (x, &k) in s.views[2].second.iter_mut().zip(c) {
            *x = x.wrapping_add(k);
        }
        s
    }

    pub fn add_scalar(&self, c: u64) -> SharedVec {
        self.add_public(&vec![c; self.len()])
    }

    /// Elementwise product with public coefficients.
    pub fn mul_public(&self, c: &[u64]) -> SharedVec {
        assert_eq!(self.len(), c.len(), "coefficient length mismatch");
        self.map(|v| v.iter().zip(c).map(|(&x, &k)| x.wrapping_mul(k)).collect())
    }

    pub fn scale(&self, c: u64) -> SharedVec {
        self.map(|v| v.iter().map(|&x| x.wrapping_mul(c)).collect())
    }

    pub fn concat(parts: &[&SharedVec]) -> SharedVec {
        SharedVec::from_views(std::array::from_fn(|p| View {
            first: parts.iter().flat_map(|s| s.views[p].first.iter().copied()).collect(),
            second: parts.iter().flat_map(|s| s.views[p].second.iter().copied()).collect(),
        }))
    }

    pub fn slice(&self, start: usize, len: usize) -> SharedVec {
        self.map(|v| v[start..start + len].to_vec())
    }

    pub fn gather(&self, idx: &[usize]) -> SharedVec {
        self.map(|v| idx.iter().map(|&i| v[i]).collect())
    }

    /// Sums consecutive runs of the given lengths.
    pub fn segment_sum(&self, lens: &[usize]) -> SharedVec {
        debug_assert_eq!(lens.iter().sum::<usize>(), self.len());
        self.map(|v| segment_sum(v, lens))
    }

    pub fn prefix_sum(&self) -> SharedVec {
        self.map(|v| {
            v.iter()
                .scan(0u64, |acc, &x| {
                    *acc = acc.wrapping_add(x);
                    Some(*acc)
                })
                .collect()
        })
    }

    /// `Σ c_i x_i + constant` as a single shared element.
    pub fn dot_public(&self, coeffs: &[u64], constant: u64) -> SharedVec {
        self.mul_public(coeffs).segment_sum(&[self.len()]).add_scalar(constant)
    }

    /// Writes `src` into positions `idx` of `self`.
    pub(crate) fn scatter(&mut self, idx: &[usize], src: &SharedVec) {
        for p in 0..3 {
            for (k, &i) in idx.iter().enumerate() {
                self.views[p].first[i] = src.views[p].first[k];
                self.views[p].second[i] = src.views[p].second[k];
            }
        }
    }
}

pub(crate) fn segment_sum(v: &[u64], lens: &[usize]) -> Vec<u64> {
    let mut out = Vec::with_capacity(lens.len());
    let mut at = 0;
    for &l in lens {
        out.push(v[at..at + l].iter().fold(0u64, |a, &x| a.wrapping_add(x)));
        at += l;
    }
    out
}
