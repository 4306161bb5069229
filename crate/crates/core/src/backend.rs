//! The operation set every protocol is written against.
//!
//! [`crate::rss::Engine`] executes it as a three-party computation and
//! [`Plain`] evaluates the same fixed-point program in the clear, drawing its
//! DP randomness from the same pairwise streams. Running one generic
//! protocol on both is what makes the centralized oracle comparable bit for
//! bit.

#[cfg(any(test, feature = "test-hooks"))]
use std::collections::VecDeque;

use crate::ring::{self, FRAC_BITS};
use crate::rss::prg::{BitStream, PairKeys, Purpose};
use crate::rss::Counters;

pub trait Backend {
    type Vector: Clone + std::fmt::Debug;

    fn label(&self) -> &'static str;
    fn len(&self, v: &Self::Vector) -> usize;

    /// Secret input of known values through a dealer.
    fn input(&mut self, values: &[u64]) -> Self::Vector;
    /// Public constants in shared form.
    fn constant(&self, values: &[u64]) -> Self::Vector;

    fn add(&self, a: &Self::Vector, b: &Self::Vector) -> Self::Vector;
    fn sub(&self, a: &Self::Vector, b: &Self::Vector) -> Self::Vector;
    fn add_public(&self, a: &Self::Vector, c: &[u64]) -> Self::Vector;
    fn mul_public(&self, a: &Self::Vector, c: &[u64]) -> Self::Vector;
    fn scale(&self, a: &Self::Vector, c: u64) -> Self::Vector;
    fn concat(&self, parts: &[&Self::Vector]) -> Self::Vector;
    fn slice(&self, a: &Self::Vector, start: usize, len: usize) -> Self::Vector;
    fn gather(&self, a: &Self::Vector, idx: &[usize]) -> Self::Vector;
    fn segment_sum(&self, a: &Self::Vector, lens: &[usize]) -> Self::Vector;
    fn prefix_sum(&self, a: &Self::Vector) -> Self::Vector;

    /// Elementwise ring product.
    fn mul(&mut self, a: &Self::Vector, b: &Self::Vector) -> Self::Vector;
    /// Exact arithmetic right shift by `k` bits of the signed reading.
    fn trunc(&mut self, a: &Self::Vector, k: u32) -> Self::Vector;
    /// 1 where the signed reading is negative, else 0.
    fn ltz(&mut self, a: &Self::Vector) -> Self::Vector;
    /// 1 where `a[i] == c[i]`. Requires `a[i] < 2^beta`.
    fn eq_public(&mut self, a: &Self::Vector, c: &[u64], beta: u32) -> Self::Vector;
    /// Bits `0..nbits` of each element, least significant first. Requires
    /// `a[i] < 2^nbits`.
    fn bits(&mut self, a: &Self::Vector, nbits: u32) -> Vec<Self::Vector>;
    /// Fresh uniform bits from the DP randomness streams.
    fn dp_bits(&mut self, n: usize) -> Self::Vector;
    /// Reveals to party 1 only.
    fn reveal(&mut self, a: &Self::Vector) -> Vec<u64>;
    /// Opens to every party.
    fn open(&mut self, a: &Self::Vector) -> Vec<u64>;

    fn counters(&self) -> Counters;

    #[cfg(any(test, feature = "test-hooks"))]
    fn hooks(&mut self) -> &mut Hooks;

    /// Fixed-point product: ring product then truncation by `f`.
    fn fx_mul(&mut self, a: &Self::Vector, b: &Self::Vector) -> Self::Vector {
        let p = self.mul(a, b);
        self.trunc(&p, FRAC_BITS)
    }

    /// Fixed-point product with public fixed-point coefficients.
    fn fx_mul_public(&mut self, a: &Self::Vector, c: &[u64]) -> Self::Vector {
        let p = self.mul_public(a, c);
        self.trunc(&p, FRAC_BITS)
    }

    /// Runs `f` once per entry of `lens` on independent batches. The engine
    /// schedules them in the same communication rounds.
    fn side_by_side<F>(&mut self, lens: &[usize], mut f: F) -> Vec<Self::Vector>
    where
        Self: Sized,
        F: FnMut(&mut Self, usize) -> Self::Vector,
    {
        lens.iter().map(|&n| f(self, n)).collect()
    }

    fn broadcast(&self, a: &Self::Vector, n: usize) -> Self::Vector {
        self.gather(a, &vec![0; n])
    }
}

/// Injected randomness for tests. A non-empty queue replaces the
/// corresponding draws, which are then dealt as fresh secret inputs.
#[cfg(any(test, feature = "test-hooks"))]
#[derive(Clone, Debug, Default)]
pub struct Hooks {
    uniforms: VecDeque<u64>,
    bits: VecDeque<u64>,
    noise: VecDeque<u64>,
}

#[cfg(any(test, feature = "test-hooks"))]
impl Hooks {
    /// Uniform draws in fixed point, consumed by [`rand_uniform01`].
    pub fn inject_uniforms(&mut self, values: &[f64]) {
        self.uniforms.extend(values.iter().map(|&u| ring::enc(u)));
    }

    /// Bits consumed by [`rand_bits`].
    pub fn inject_bits(&mut self, values: &[u64]) {
        assert!(values.iter().all(|&b| b <= 1), "injected bits must be 0 or 1");
        self.bits.extend(values);
    }

    /// Unit-scale noise consumed by the measure step instead of a sampler.
    pub fn inject_noise(&mut self, values: &[f64]) {
        self.noise.extend(values.iter().map(|&g| ring::enc(g)));
    }

    pub(crate) fn take_noise(&mut self, n: usize) -> Option<Vec<u64>> {
        take(&mut self.noise, n)
    }
}

#[cfg(any(test, feature = "test-hooks"))]
fn take(queue: &mut VecDeque<u64>, n: usize) -> Option<Vec<u64>> {
    if queue.is_empty() {
        return None;
    }
    assert!(queue.len() >= n, "hook queue holds {} values, {} requested", queue.len(), n);
    Some(queue.drain(..n).collect())
}

/// `n` shared uniform bits.
pub fn rand_bits<B: Backend>(b: &mut B, n: usize) -> B::Vector {
    #[cfg(any(test, feature = "test-hooks"))]
    if let Some(v) = take(&mut b.hooks().bits, n) {
        return b.input(&v);
    }
    b.dp_bits(n)
}

/// `n` shared fixed-point values uniform on `{k 2^-f : 0 <= k < 2^f}`, each
/// assembled from `f` random bits.
pub fn rand_uniform01<B: Backend>(b: &mut B, n: usize) -> B::Vector {
    #[cfg(any(test, feature = "test-hooks"))]
    if let Some(v) = take(&mut b.hooks().uniforms, n) {
        return b.input(&v);
    }
    let f = FRAC_BITS as usize;
    let bits = rand_bits(b, n * f);
    combine_bits(b, &bits, n, f)
}

/// Bit-major layout: entry `j * n + i` is bit `j` of element `i`.
fn combine_bits<B: Backend>(b: &mut B, bits: &B::Vector, n: usize, nbits: usize) -> B::Vector {
    let mut acc = b.constant(&vec![0; n]);
    for j in 0..nbits {
        let bj = b.slice(bits, j * n, n);
        acc = b.add(&acc, &b.scale(&bj, 1 << j));
    }
    acc
}

/// Plaintext evaluation of the backend operations on raw words.
pub struct Plain {
    dp: [BitStream; 3],
    counters: Counters,
    #[cfg(any(test, feature = "test-hooks"))]
    hooks: Hooks,
}

impl Plain {
    pub fn new(seed: u64) -> Plain {
        let keys = PairKeys::derive(seed);
        Plain {
            dp: std::array::from_fn(|j| keys.bits(j, Purpose::Dp)),
            counters: Counters::default(),
            #[cfg(any(test, feature = "test-hooks"))]
            hooks: Hooks::default(),
        }
    }
}

fn zip(a: &[u64], b: &[u64], f: impl Fn(u64, u64) -> u64) -> Vec<u64> {
    assert_eq!(a.len(), b.len(), "vector length mismatch");
    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
}

impl Backend for Plain {
    type Vector = Vec<u64>;

    fn label(&self) -> &'static str {
        "cdp"
    }

    fn len(&self, v: &Vec<u64>) -> usize {
        v.len()
    }

    fn input(&mut self, values: &[u64]) -> Vec<u64> {
        self.counters.input += values.len() as u64;
        values.to_vec()
    }

    fn constant(&self, values: &[u64]) -> Vec<u64> {
        values.to_vec()
    }

    fn add(&self, a: &Vec<u64>, b: &Vec<u64>) -> Vec<u64> {
        zip(a, b, u64::wrapping_add)
    }

    fn sub(&self, a: &Vec<u64>, b: &Vec<u64>) -> Vec<u64> {
        zip(a, b, u64::wrapping_sub)
    }

    fn add_public(&self, a: &Vec<u64>, c: &[u64]) -> Vec<u64> {
        zip(a, c, u64::wrapping_add)
    }

    fn mul_public(&self, a: &Vec<u64>, c: &[u64]) -> Vec<u64> {
        zip(a, c, u64::wrapping_mul)
    }

    fn scale(&self, a: &Vec<u64>, c: u64) -> Vec<u64> {
        a.iter().map(|&x| x.wrapping_mul(c)).collect()
    }

    fn concat(&self, parts: &[&Vec<u64>]) -> Vec<u64> {
        parts.iter().flat_map(|p| p.iter().copied()).collect()
    }

    fn slice(&self, a: &Vec<u64>, start: usize, len: usize) -> Vec<u64> {
        a[start..start + len].to_vec()
    }

    fn gather(&self, a: &Vec<u64>, idx: &[usize]) -> Vec<u64> {
        idx.iter().map(|&i| a[i]).collect()
    }

    fn segment_sum(&self, a: &Vec<u64>, lens: &[usize]) -> Vec<u64> {
        crate::rss::share::segment_sum(a, lens)
    }

    fn prefix_sum(&self, a: &Vec<u64>) -> Vec<u64> {
        a.iter()
            .scan(0u64, |s, &x| {
                *s = s.wrapping_add(x);
                Some(*s)
            })
            .collect()
    }

    fn mul(&mut self, a: &Vec<u64>, b: &Vec<u64>) -> Vec<u64> {
        self.counters.mul += a.len() as u64;
        zip(a, b, u64::wrapping_mul)
    }

    fn trunc(&mut self, a: &Vec<u64>, k: u32) -> Vec<u64> {
        self.counters.trunc += a.len() as u64;
        a.iter().map(|&x| ring::ashr(x, k)).collect()
    }

    fn ltz(&mut self, a: &Vec<u64>) -> Vec<u64> {
        self.counters.cmp += a.len() as u64;
        a.iter().map(|&x| ((x as i64) < 0) as u64).collect()
    }

    fn eq_public(&mut self, a: &Vec<u64>, c: &[u64], beta: u32) -> Vec<u64> {
        debug_assert!(a.iter().all(|&x| beta >= 64 || x >> beta == 0), "eq input out of range");
        self.counters.eq += a.len() as u64;
        zip(a, c, |x, k| (x == k) as u64)
    }

    fn bits(&mut self, a: &Vec<u64>, nbits: u32) -> Vec<Vec<u64>> {
        debug_assert!(a.iter().all(|&x| x >> nbits == 0), "decomposition input out of range");
        (0..nbits).map(|j| a.iter().map(|&x| (x >> j) & 1).collect()).collect()
    }

    fn dp_bits(&mut self, n: usize) -> Vec<u64> {
        self.counters.rand_bit += n as u64;
        let [s0, s1, s2] = &mut self.dp;
        let (b0, b1, b2) = (s0.take(n), s1.take(n), s2.take(n));
        (0..n).map(|i| b0[i] ^ b1[i] ^ b2[i]).collect()
    }

    fn reveal(&mut self, a: &Vec<u64>) -> Vec<u64> {
        self.counters.reveal += a.len() as u64;
        a.clone()
    }

    fn open(&mut self, a: &Vec<u64>) -> Vec<u64> {
        self.counters.open += a.len() as u64;
        a.clone()
    }

    fn counters(&self) -> Counters {
        self.counters
    }

    #[cfg(any(test, feature = "test-hooks"))]
    fn hooks(&mut self) -> &mut Hooks {
        &mut self.hooks
    }
}
