//! Three-party replicated secret sharing over Z_2^64, driven by an
//! in-process round scheduler.
//!
//! Party `p` (slot `p`, 0-based) holds components `(x_p, x_{p+1})`. It sends
//! to slot `p - 1` and receives from slot `p + 1`. With a fixed seed the
//! whole execution is deterministic.

pub(crate) mod network;
pub(crate) mod prg;
pub mod share;

use rand::Rng;
use rand_chacha::ChaCha12Rng;

pub use network::{Counters, MessageRecord, PartyTraffic, Transcript, TranscriptSummary};
pub use share::{reconstruct, share, PartyId, ReplicatedShare, SharePair, SharedVec};

use crate::backend::Backend;
#[cfg(any(test, feature = "test-hooks"))]
use crate::backend::Hooks;
use network::Network;
use prg::{BitStream, PairKeys, Purpose, WordStream};
use share::View;

const BATCH: usize = 2048;

fn next(p: usize) -> usize {
    (p + 1) % 3
}

fn prev(p: usize) -> usize {
    (p + 2) % 3
}

/// Private PRG state of one party: the streams it shares with its successor
/// (`k_{p,p+1}`) and with its predecessor (`k_{p-1,p}`).
struct Party {
    zero_next: WordStream,
    zero_prev: WordStream,
    rand_next: WordStream,
    rand_prev: WordStream,
    mask_next: BitStream,
    mask_prev: BitStream,
    dp_next: BitStream,
    dp_prev: BitStream,
}

impl Party {
    fn new(keys: &PairKeys, p: usize) -> Party {
        Party {
            zero_next: keys.words(p, Purpose::Zero),
            zero_prev: keys.words(prev(p), Purpose::Zero),
            rand_next: keys.words(p, Purpose::Random),
            rand_prev: keys.words(prev(p), Purpose::Random),
            mask_next: keys.bits(p, Purpose::Mask),
            mask_prev: keys.bits(prev(p), Purpose::Mask),
            dp_next: keys.bits(p, Purpose::Dp),
            dp_prev: keys.bits(prev(p), Purpose::Dp),
        }
    }
}

#[derive(Clone, Copy)]
enum BitSource {
    Mask,
    Dp,
}

/// The three simulated parties and the channels between them.
pub struct Engine {
    parties: [Party; 3],
    net: Network,
    dealer: ChaCha12Rng,
    #[cfg(any(test, feature = "test-hooks"))]
    hooks: Hooks,
}

impl Engine {
    pub fn new(seed: u64) -> Engine {
        Engine::with_recording(seed, true)
    }

    /// `keep_records = false` keeps only aggregate counts, for long
    /// statistical runs.
    pub fn with_recording(seed: u64, keep_records: bool) -> Engine {
        let keys = PairKeys::derive(seed);
        Engine {
            parties: std::array::from_fn(|p| Party::new(&keys, p)),
            net: Network::new(keep_records),
            dealer: crate::seeds::stream(seed, crate::seeds::STREAM_DEALER),
            #[cfg(any(test, feature = "test-hooks"))]
            hooks: Hooks::default(),
        }
    }

    pub fn transcript(&self) -> &Transcript {
        &self.net.transcript
    }

    fn count(&mut self) -> &mut Counters {
        self.net.transcript.counters_mut()
    }

    pub(crate) fn record_join(&mut self, assignments: u64) {
        self.count().join_assign += assignments;
    }

    /// Shares values supplied by an external holder using its own randomness.
    pub fn share_input<R: Rng + ?Sized>(&mut self, rng: &mut R, values: &[u64]) -> SharedVec {
        self.count().input += values.len() as u64;
        SharedVec::share_values(values, rng)
    }

    /// `Σ coeffs[i] x[i] + constant`, computed locally.
    pub fn linear(&self, coeffs: &[u64], x: &SharedVec, constant: u64) -> SharedVec {
        x.dot_public(coeffs, constant)
    }

    /// Shared uniform bit from the DP streams.
    pub fn rand_bit(&mut self) -> SharedVec {
        crate::backend::rand_bits(self, 1)
    }

    pub fn rand_uniform01(&mut self) -> SharedVec {
        crate::backend::rand_uniform01(self, 1)
    }

    /// Resharing multiplication: one ring element per party per product.
    fn mul_gate(&mut self, x: &SharedVec, y: &SharedVec) -> SharedVec {
        assert_eq!(x.len(), y.len(), "mul operands differ in length");
        self.reshare(x.len(), |p, i| {
            let (a, b) = (&x.views[p], &y.views[p]);
            let (a1, a2, b1, b2) = (a.first[i], a.second[i], b.first[i], b.second[i]);
            a1.wrapping_mul(b1).wrapping_add(a1.wrapping_mul(b2)).wrapping_add(a2.wrapping_mul(b1))
        })
    }

    /// Opens to all parties; every party checks it reconstructs the same value.
    fn open_all(&mut self, x: &SharedVec) -> Vec<u64> {
        self.net.begin_round();
        for p in 0..3 {
            self.net.send(p, prev(p), x.views[p].second.clone());
        }
        let mut out = Vec::new();
        for p in 0..3 {
            let third = self.net.recv(next(p), p);
            let v = &x.views[p];
            let vals: Vec<u64> =
                (0..x.len()).map(|i| v.first[i].wrapping_add(v.second[i]).wrapping_add(third[i])).collect();
            if p == 0 {
                out = vals;
            } else {
                assert_eq!(out, vals, "parties disagree on an opened value");
            }
        }
        self.count().open += x.len() as u64;
        out
    }

    fn reveal_first(&mut self, x: &SharedVec) -> Vec<u64> {
        self.net.begin_round();
        self.net.send(1, 0, x.views[1].second.clone());
        let third = self.net.recv(1, 0);
        let v = &x.views[0];
        self.count().reveal += x.len() as u64;
        (0..x.len()).map(|i| v.first[i].wrapping_add(v.second[i]).wrapping_add(third[i])).collect()
    }

    /// Non-interactive sharing of a uniformly random ring element.
    fn rand_share(&mut self, n: usize) -> SharedVec {
        let views = std::array::from_fn(|p| {
            let party = &mut self.parties[p];
            View { first: party.rand_prev.take(n), second: party.rand_next.take(n) }
        });
        SharedVec::from_views(views)
    }

    /// `n` shared random bits `b0 ^ b1 ^ b2`, where `b_j` comes from the
    /// stream party `j` shares with its predecessor. Party 0 knows `b0` and
    /// `b1` and reshares their XOR; one more resharing multiplies that by
    /// `b2`, which parties 1 and 2 hold.
    fn shared_bits(&mut self, n: usize, source: BitSource) -> SharedVec {
        let mut own: [Vec<u64>; 3] = Default::default();
        let mut succ: [Vec<u64>; 3] = Default::default();
        for p in 0..3 {
            let party = &mut self.parties[p];
            (own[p], succ[p]) = match source {
                BitSource::Mask => (party.mask_prev.take(n), party.mask_next.take(n)),
                BitSource::Dp => (party.dp_prev.take(n), party.dp_next.take(n)),
            };
        }
        let t = self.reshare(n, |p, i| match p {
            0 => {
                let (x, y) = (own[0][i], succ[0][i]);
                x + y - 2 * x * y
            }
            _ => 0,
        });
        let b2 = |p: usize, i: usize| match p {
            1 => succ[1][i],
            2 => own[2][i],
            _ => 0,
        };
        let prod = self.reshare(n, |p, i| match p {
            1 => t.views[1].first[i].wrapping_mul(b2(1, i)),
            2 => t.views[2].first[i].wrapping_add(t.views[2].second[i]).wrapping_mul(b2(2, i)),
            _ => 0,
        });
        // t + b2 - 2 t b2; b2 is component 2, held by party 2 first and party 1 second.
        let views = std::array::from_fn(|p| {
            let (tv, pv) = (&t.views[p], &prod.views[p]);
            let lin = |x: &[u64], y: &[u64], extra: bool| -> Vec<u64> {
                (0..n)
                    .map(|i| {
                        let add = if extra { b2(p, i) } else { 0 };
                        x[i].wrapping_sub(y[i].wrapping_mul(2)).wrapping_add(add)
                    })
                    .collect()
            };
            View { first: lin(&tv.first, &pv.first, p == 2), second: lin(&tv.second, &pv.second, p == 1) }
        });
        SharedVec::from_views(views)
    }

    /// One resharing round: party `p` holds the additive term `local(p, i)`,
    /// masks it with a zero sharing and sends it to its predecessor.
    fn reshare(&mut self, n: usize, local: impl Fn(usize, usize) -> u64) -> SharedVec {
        self.net.begin_round();
        let mut firsts: [Vec<u64>; 3] = Default::default();
        for (p, first) in firsts.iter_mut().enumerate() {
            let party = &mut self.parties[p];
            let z: Vec<u64> = (0..n)
                .map(|i| {
                    let zero = party.zero_next.next_word().wrapping_sub(party.zero_prev.next_word());
                    local(p, i).wrapping_add(zero)
                })
                .collect();
            self.net.send(p, prev(p), z.clone());
            *first = z;
        }
        let views = std::array::from_fn(|p| {
            let second = self.net.recv(next(p), p);
            View { first: std::mem::take(&mut firsts[p]), second }
        });
        self.count().mul_gates += n as u64;
        SharedVec::from_views(views)
    }

    fn mask_bits(&mut self, n: usize, nbits: usize) -> Vec<SharedVec> {
        self.count().mask_bit += (n * nbits) as u64;
        let all = self.shared_bits(n * nbits, BitSource::Mask);
        (0..nbits).map(|j| all.slice(j * n, n)).collect()
    }

    /// Bitwise subtraction `c - r` on the low `r_bits.len()` bits, with `c`
    /// public and `r` given as shared bits. Returns the difference bits (if
    /// asked) and the borrow into every position listed in `taps`.
    fn borrow_chain(
        &mut self,
        c: &[u64],
        r_bits: &[SharedVec],
        want_bits: bool,
        taps: &[usize],
    ) -> (Vec<SharedVec>, Vec<SharedVec>) {
        let n = c.len();
        let nbits = r_bits.len();
        let last = taps.iter().copied().max().unwrap_or(0).max(if want_bits { nbits } else { 0 });
        let mut borrow = SharedVec::zeros(n);
        let mut bits = Vec::new();
        let mut tapped = vec![None; taps.len()];
        for j in 0..=nbits {
            for (slot, &t) in tapped.iter_mut().zip(taps) {
                if t == j {
                    *slot = Some(borrow.clone());
                }
            }
            if j == nbits || j >= last {
                break;
            }
            let cj = |i: usize| (c[i] >> j) & 1;
            let r = &r_bits[j];
            let prod = if j == 0 { SharedVec::zeros(n) } else { self.mul_gate(r, &borrow) };
            if want_bits {
                // (r xor borrow) xor c_j
                let t = SharedVec::combine3(r, &borrow, &prod, |i| {
                    let f = 1u64.wrapping_sub(2 * cj(i));
                    (f, f, f.wrapping_mul(2).wrapping_neg())
                });
                let cbits: Vec<u64> = (0..n).map(cj).collect();
                bits.push(t.add_public(&cbits));
            }
            // c_j = 0: r + borrow - r*borrow; c_j = 1: r*borrow
            borrow = SharedVec::combine3(r, &borrow, &prod, |i| {
                let nc = 1 - cj(i);
                (nc, nc, (2 * cj(i)).wrapping_sub(1))
            });
        }
        let tapped = tapped.into_iter().map(|t| t.expect("tap within chain")).collect();
        (bits, tapped)
    }

    /// Runs `f` on element batches of at most [`BATCH`] so bit-level
    /// intermediates stay small. Batches are independent and share rounds.
    fn batched(
        &mut self,
        x: &SharedVec,
        c: Option<&[u64]>,
        f: impl Fn(&mut Engine, &SharedVec, Option<&[u64]>) -> Vec<SharedVec>,
    ) -> Vec<SharedVec> {
        let n = x.len();
        if n <= BATCH {
            return f(self, x, c);
        }
        let start = self.net.round();
        let mut end = start;
        let mut parts: Vec<Vec<SharedVec>> = Vec::new();
        for lo in (0..n).step_by(BATCH) {
            let len = BATCH.min(n - lo);
            self.net.set_round(start);
            parts.push(f(self, &x.slice(lo, len), c.map(|c| &c[lo..lo + len])));
            end = end.max(self.net.round());
        }
        self.net.set_round(end);
        (0..parts[0].len()).map(|j| SharedVec::concat(&parts.iter().map(|p| &p[j]).collect::<Vec<_>>())).collect()
    }

    /// Exact `floor(x / 2^k)` on the signed reading, for `1 <= k <= 63`.
    fn shift_gadget(&mut self, x: &SharedVec, k: u32) -> SharedVec {
        assert!((1..=63).contains(&k));
        let n = x.len();
        let rb = self.mask_bits(n, 64);
        let mut r = SharedVec::zeros(n);
        let mut r_hi = SharedVec::zeros(n);
        for (j, bit) in rb.iter().enumerate() {
            r.add_scaled_assign(bit, 1u64 << j);
            if j as u32 >= k {
                r_hi.add_scaled_assign(bit, 1u64 << (j as u32 - k));
            }
        }
        let y = x.add_scalar(1 << 63);
        let c = self.open_all(&y.add(&r));
        let (_, b) = self.borrow_chain(&c, &rb, false, &[k as usize, 64]);
        let c_hi: Vec<u64> = c.iter().map(|&w| w >> k).collect();
        let carry = 1u64 << (64 - k);
        SharedVec::public(&c_hi)
            .sub(&r_hi)
            .sub(&b[0])
            .add(&b[1].scale(carry))
            .add_scalar((1u64 << (63 - k)).wrapping_neg())
    }

    fn decompose(&mut self, x: &SharedVec, nbits: u32) -> Vec<SharedVec> {
        assert!((1..=62).contains(&nbits));
        #[cfg(debug_assertions)]
        debug_assert!(x.peek().iter().all(|&v| v >> nbits == 0), "decomposition input out of range");
        let n = x.len();
        let rb = self.mask_bits(n, nbits as usize);
        let mut r = self.rand_share(n).scale(1 << nbits);
        for (j, bit) in rb.iter().enumerate() {
            r.add_scaled_assign(bit, 1 << j);
        }
        let c = self.open_all(&x.add(&r));
        self.borrow_chain(&c, &rb, true, &[]).0
    }

    fn equal_public(&mut self, x: &SharedVec, cs: &[u64], beta: u32) -> SharedVec {
        #[cfg(debug_assertions)]
        debug_assert!(x.peek().iter().all(|&v| v >> beta == 0), "equality input outside [0, 2^{beta})");
        let n = x.len();
        let cbits = cs.iter().map(|&c| 64 - c.leading_zeros()).max().unwrap_or(0);
        let l = beta.max(cbits) + 1;
        let rb = self.mask_bits(n, l as usize);
        let mut r = self.rand_share(n).scale(1u64 << l);
        for (j, bit) in rb.iter().enumerate() {
            r.add_scaled_assign(bit, 1 << j);
        }
        let z = x.sub(&SharedVec::public(cs));
        let c = self.open_all(&z.add(&r));
        // Bit j of z is zero iff c_j equals r_j.
        let mut layer: Vec<SharedVec> = rb
            .iter()
            .enumerate()
            .map(|(j, bit)| {
                let cj: Vec<u64> = c.iter().map(|&w| (w >> j) & 1).collect();
                let flip: Vec<u64> = cj.iter().map(|&b| (2 * b).wrapping_sub(1)).collect();
                let base: Vec<u64> = cj.iter().map(|&b| 1 - b).collect();
                bit.mul_public(&flip).add_public(&base)
            })
            .collect();
        while layer.len() > 1 {
            let half = layer.len() / 2;
            let left: Vec<&SharedVec> = layer[..half].iter().collect();
            let right: Vec<&SharedVec> = layer[half..2 * half].iter().collect();
            let prod = self.mul_gate(&SharedVec::concat(&left), &SharedVec::concat(&right));
            let mut next_layer: Vec<SharedVec> = (0..half).map(|i| prod.slice(i * n, n)).collect();
            if layer.len() % 2 == 1 {
                next_layer.push(layer.pop().expect("odd leftover"));
            }
            layer = next_layer;
        }
        layer.pop().unwrap_or_else(|| SharedVec::public(&vec![1; n]))
    }
}

impl Backend for Engine {
    type Vector = SharedVec;

    fn label(&self) -> &'static str {
        "mpc"
    }

    fn len(&self, v: &SharedVec) -> usize {
        v.len()
    }

    fn input(&mut self, values: &[u64]) -> SharedVec {
        self.count().input += values.len() as u64;
        SharedVec::share_values(values, &mut self.dealer)
    }

    fn constant(&self, values: &[u64]) -> SharedVec {
        SharedVec::public(values)
    }

    fn add(&self, a: &SharedVec, b: &SharedVec) -> SharedVec {
        a.add(b)
    }

    fn sub(&self, a: &SharedVec, b: &SharedVec) -> SharedVec {
        a.sub(b)
    }

    fn add_public(&self, a: &SharedVec, c: &[u64]) -> SharedVec {
        a.add_public(c)
    }

    fn mul_public(&self, a: &SharedVec, c: &[u64]) -> SharedVec {
        a.mul_public(c)
    }

    fn scale(&self, a: &SharedVec, c: u64) -> SharedVec {
        a.scale(c)
    }

    fn concat(&self, parts: &[&SharedVec]) -> SharedVec {
        SharedVec::concat(parts)
    }

    fn slice(&self, a: &SharedVec, start: usize, len: usize) -> SharedVec {
        a.slice(start, len)
    }

    fn gather(&self, a: &SharedVec, idx: &[usize]) -> SharedVec {
        a.gather(idx)
    }

    fn segment_sum(&self, a: &SharedVec, lens: &[usize]) -> SharedVec {
        a.segment_sum(lens)
    }

    fn prefix_sum(&self, a: &SharedVec) -> SharedVec {
        a.prefix_sum()
    }

    fn mul(&mut self, a: &SharedVec, b: &SharedVec) -> SharedVec {
        self.count().mul += a.len() as u64;
        self.mul_gate(a, b)
    }

    fn trunc(&mut self, a: &SharedVec, k: u32) -> SharedVec {
        self.count().trunc += a.len() as u64;
        self.batched(a, None, |e, x, _| vec![e.shift_gadget(x, k)]).remove(0)
    }

    fn ltz(&mut self, a: &SharedVec) -> SharedVec {
        self.count().cmp += a.len() as u64;
        // floor((x + 2^63) / 2^63) - 1 is -1 for negative x and 0 otherwise.
        self.batched(a, None, |e, x, _| vec![e.shift_gadget(x, 63)]).remove(0).scale(u64::MAX)
    }

    fn eq_public(&mut self, a: &SharedVec, c: &[u64], beta: u32) -> SharedVec {
        assert!(beta <= 32, "equality range 2^{beta} exceeds 2^32");
        self.count().eq += a.len() as u64;
        self.batched(a, Some(c), |e, x, c| vec![e.equal_public(x, c.expect("constants"), beta)]).remove(0)
    }

    fn bits(&mut self, a: &SharedVec, nbits: u32) -> Vec<SharedVec> {
        self.batched(a, None, |e, x, _| e.decompose(x, nbits))
    }

    fn side_by_side<F>(&mut self, lens: &[usize], mut f: F) -> Vec<SharedVec>
    where
        F: FnMut(&mut Engine, usize) -> SharedVec,
    {
        let start = self.net.round();
        let mut end = start;
        let out = lens
            .iter()
            .map(|&n| {
                self.net.set_round(start);
                let v = f(self, n);
                end = end.max(self.net.round());
                v
            })
            .collect();
        self.net.set_round(end);
        out
    }

    fn dp_bits(&mut self, n: usize) -> SharedVec {
        self.count().rand_bit += n as u64;
        self.shared_bits(n, BitSource::Dp)
    }

    fn reveal(&mut self, a: &SharedVec) -> Vec<u64> {
        self.reveal_first(a)
    }

    fn open(&mut self, a: &SharedVec) -> Vec<u64> {
        self.open_all(a)
    }

    fn counters(&self) -> Counters {
        *self.net.transcript.counters()
    }

    #[cfg(any(test, feature = "test-hooks"))]
    fn hooks(&mut self) -> &mut Hooks {
        &mut self.hooks
    }
}

impl Drop for Engine {
    fn drop(&mut self) {
        debug_assert!(self.net.idle() || std::thread::panicking(), "undelivered messages");
    }
}

/// All three parties' pairs for each element, as the engine sees them.
pub fn party_pairs(x: &SharedVec) -> Vec<ReplicatedShare> {
    (0..x.len()).map(|i| x.element(i)).collect()
}
