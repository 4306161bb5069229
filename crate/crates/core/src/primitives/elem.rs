//! Fixed-point EXP, LN, SQRT, SIN and COS.
//!
//! Each function clamps to its domain, reduces the argument with shared bit
//! decompositions, and evaluates a short minimax-style polynomial by Horner's
//! rule. On the stated domains the absolute error stays below 2^-10.

use std::f64::consts::{LN_2, LOG2_E, PI};

use crate::backend::Backend;
use crate::ring::{enc, FRAC_BITS, ONE};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElemFn {
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
}

/// 2^g on [0, 1].
const EXP2: [f64; 7] = [
    1.0000000025868894,
    0.69314692869303,
    0.24023050204500027,
    0.0554804263257664,
    0.009684580452330798,
    0.0012387821479114072,
    0.00021877504769106824,
];

/// ln(1 + t) on [0, 1].
const LN1P: [f64; 8] = [
    2.215976490638205e-07,
    0.9999702432977421,
    -0.4993339489819938,
    0.32751171370201626,
    -0.22396689942996445,
    0.13198966239981852,
    -0.053267477733800944,
    0.010243828631255142,
];

/// sqrt(1 + t) on [0, 1].
const SQRT1P: [f64; 6] = [
    1.0000014438298064,
    0.4998899788988215,
    -0.12360611750564113,
    0.05573518145103922,
    -0.022775151860033982,
    0.004969328126611094,
];

/// sin(pi w / 2) / w as a polynomial in u = w^2, w in [0, 1].
const SIN_Q: [f64; 5] =
    [1.5707963200653583, -0.6459637604384901, 0.07968992260042565, -0.004674150668906109, 0.00015167511781291238];

/// cos(pi w / 2) as a polynomial in u = w^2.
const COS_Q: [f64; 5] =
    [0.9999999532476114, -1.2336982076549126, 0.2536507095538855, -0.020810571376258247, 0.0008581625433720182];

const F: u32 = FRAC_BITS;

pub fn sec_elem<B: Backend>(b: &mut B, func: ElemFn, x: &B::Vector) -> B::Vector {
    match func {
        ElemFn::Exp => exp(b, x),
        ElemFn::Ln => ln(b, x),
        ElemFn::Sqrt => sqrt(b, x),
        ElemFn::Sin | ElemFn::Cos => {
            let theta = clamp(b, x, 0, enc(2.0 * PI));
            let n = b.len(x);
            let v = b.fx_mul_public(&theta, &vec![enc(0.5 / PI); n]);
            let (s, c) = sincos_turns(b, &v);
            if func == ElemFn::Sin {
                s
            } else {
                c
            }
        }
    }
}

/// Clamps signed fixed-point values into `[lo, hi]` (raw words).
fn clamp<B: Backend>(b: &mut B, x: &B::Vector, lo: u64, hi: u64) -> B::Vector {
    let n = b.len(x);
    let below = b.sub(x, &b.constant(&vec![lo; n]));
    let above = b.sub(&b.constant(&vec![hi; n]), x);
    let signs = b.ltz(&b.concat(&[&below, &above]));
    let to_lo = b.sub(&b.constant(&vec![lo; n]), x);
    let coeffs = b.concat(&[&to_lo, &above]);
    let moves = b.mul(&signs, &coeffs);
    let lo_move = b.slice(&moves, 0, n);
    let hi_move = b.slice(&moves, n, n);
    b.add(&b.add(x, &lo_move), &hi_move)
}

/// Horner evaluation; `coeffs[k]` is the per-element coefficient of `x^k`.
fn horner<B: Backend>(b: &mut B, x: &B::Vector, coeffs: &[Vec<u64>]) -> B::Vector {
    let deg = coeffs.len() - 1;
    let mut acc = b.fx_mul_public(x, &coeffs[deg]);
    acc = b.add_public(&acc, &coeffs[deg - 1]);
    for k in (0..deg - 1).rev() {
        acc = b.fx_mul(&acc, x);
        acc = b.add_public(&acc, &coeffs[k]);
    }
    acc
}

fn poly<B: Backend>(b: &mut B, x: &B::Vector, coeffs: &[f64]) -> B::Vector {
    let n = b.len(x);
    let c: Vec<Vec<u64>> = coeffs.iter().map(|&c| vec![enc(c); n]).collect();
    horner(b, x, &c)
}

/// One-hot encoding of the most significant set bit, from a bit
/// decomposition (least significant first). All zero for a zero input.
fn one_hot_msb<B: Backend>(b: &mut B, bits: &[B::Vector]) -> Vec<B::Vector> {
    let top = bits.len() - 1;
    let mut prefix = vec![bits[top].clone(); bits.len()];
    for j in (0..top).rev() {
        let both = b.mul(&prefix[j + 1], &bits[j]);
        prefix[j] = b.sub(&b.add(&prefix[j + 1], &bits[j]), &both);
    }
    (0..bits.len()).map(|j| if j == top { prefix[j].clone() } else { b.sub(&prefix[j], &prefix[j + 1]) }).collect()
}

fn weighted_sum<B: Backend>(b: &B, vs: &[B::Vector], weights: impl Fn(usize) -> u64) -> B::Vector {
    let n = b.len(&vs[0]);
    let mut acc = b.constant(&vec![0; n]);
    for (j, v) in vs.iter().enumerate() {
        acc = b.add(&acc, &b.scale(v, weights(j)));
    }
    acc
}

fn exp<B: Backend>(b: &mut B, x: &B::Vector) -> B::Vector {
    let n = b.len(x);
    let x = clamp(b, x, enc(-16.0), 0);
    // 2^y with y = x log2 e, split as y = i + g with integer i <= 0.
    let y = b.fx_mul_public(&x, &vec![enc(LOG2_E); n]);
    let i = b.trunc(&y, F);
    let g = b.sub(&y, &b.scale(&i, ONE));
    let mut acc = poly(b, &g, &EXP2);
    let m = b.scale(&i, u64::MAX);
    let bits = b.bits(&m, 5);
    for (j, d) in bits.iter().enumerate() {
        let step = enc(2f64.powi(-(1 << j))).wrapping_sub(ONE);
        let factor = b.add_public(&b.scale(d, step), &vec![ONE; n]);
        acc = b.fx_mul(&acc, &factor);
    }
    acc
}

fn ln<B: Backend>(b: &mut B, x: &B::Vector) -> B::Vector {
    let n = b.len(x);
    let x = clamp(b, x, 1, 2 * ONE - 1);
    let bits = b.bits(&x, F + 1);
    let onehot = one_hot_msb(b, &bits);
    // x = m 2^(j - f) for the msb position j, with m in [1, 2).
    let shift = weighted_sum(b, &onehot, |j| 1 << (F as usize - j));
    let m = b.mul(&x, &shift);
    let t = b.add_public(&m, &vec![ONE.wrapping_neg(); n]);
    let p = poly(b, &t, &LN1P);
    let e = weighted_sum(b, &onehot, |j| enc((j as f64 - F as f64) * LN_2));
    b.add(&p, &e)
}

fn sqrt<B: Backend>(b: &mut B, x: &B::Vector) -> B::Vector {
    const W: u32 = 22;
    let n = b.len(x);
    let x = clamp(b, x, 0, (1 << W) - 1);
    let bits = b.bits(&x, W);
    let onehot = one_hot_msb(b, &bits);
    let shift = weighted_sum(b, &onehot, |j| 1 << (W as usize - 1 - j));
    let wide = b.mul(&x, &shift);
    let m = b.trunc(&wide, W - 1 - F);
    let t = b.add_public(&m, &vec![ONE.wrapping_neg(); n]);
    let p = poly(b, &t, &SQRT1P);
    let scale = weighted_sum(b, &onehot, |j| enc(2f64.powf((j as f64 - F as f64) / 2.0)));
    b.fx_mul(&p, &scale)
}

/// Sine and cosine of `2 pi v` for fixed-point `v` in `[0, 1]`.
pub fn sincos_turns<B: Backend>(b: &mut B, v: &B::Vector) -> (B::Vector, B::Vector) {
    let n = b.len(v);
    let f = F as usize;
    let bits = b.bits(v, F + 1);
    let q1 = bits[f - 1].clone();
    let q0 = bits[f - 2].clone();
    let w = weighted_sum(b, &bits[..f - 2], |j| 1 << (j + 2));
    let u = b.fx_mul(&w, &w);
    let uu = b.concat(&[&u, &u]);
    let coeffs: Vec<Vec<u64>> = SIN_Q
        .iter()
        .zip(&COS_Q)
        .map(|(&s, &c)| {
            let mut col = vec![enc(s); n];
            col.extend(std::iter::repeat_n(enc(c), n));
            col
        })
        .collect();
    let both = horner(b, &uu, &coeffs);
    let sin_w = b.slice(&both, 0, n);
    let cos_q = b.slice(&both, n, n);
    let sin_q = b.fx_mul(&w, &sin_w);
    // Rotate by quarter turns: q0 swaps sin/cos with a sign, q1 negates both.
    let zero = b.constant(&vec![0; n]);
    let neg_sin = b.sub(&zero, &sin_q);
    let d_sin = b.sub(&cos_q, &sin_q);
    let d_cos = b.sub(&neg_sin, &cos_q);
    let q0q0 = b.concat(&[&q0, &q0]);
    let rot = b.mul(&q0q0, &b.concat(&[&d_sin, &d_cos]));
    let a = b.add(&sin_q, &b.slice(&rot, 0, n));
    let c = b.add(&cos_q, &b.slice(&rot, n, n));
    let sign = b.add_public(&b.scale(&q1, 2u64.wrapping_neg()), &vec![1; n]);
    let ab = b.concat(&[&a, &c]);
    let signed = b.mul(&b.concat(&[&sign, &sign]), &ab);
    (b.slice(&signed, 0, n), b.slice(&signed, n, n))
}
