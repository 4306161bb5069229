//! Differential-privacy randomizers evaluated inside the secure computation:
//! weighted random selection and the noise generators behind the measure
//! step.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::backend::{rand_bits, rand_uniform01, Backend};
use crate::error::{Error, Result};
use crate::marginals::value_bits;
use crate::primitives::{one_minus, sec_elem, sincos_turns, ElemFn};
use crate::ring::{decode_raw, enc, ONE};
use crate::schema::Query;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    GaussianIrwinHall,
    GaussianBoxMuller,
    LaplaceSign,
    LaplaceInverseCdf,
}

impl NoiseKind {
    pub fn is_gaussian(self) -> bool {
        matches!(self, NoiseKind::GaussianIrwinHall | NoiseKind::GaussianBoxMuller)
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::GaussianIrwinHall => "gaussian-irwin-hall",
            NoiseKind::GaussianBoxMuller => "gaussian-box-muller",
            NoiseKind::LaplaceSign => "laplace-sign",
            NoiseKind::LaplaceInverseCdf => "laplace-inverse-cdf",
        })
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    /// Accepts the full names and the short forms `ih`, `bm`, `lap`.
    fn from_str(s: &str) -> Result<NoiseKind> {
        Ok(match s {
            "ih" | "gaussian-irwin-hall" => NoiseKind::GaussianIrwinHall,
            "bm" | "gaussian-box-muller" => NoiseKind::GaussianBoxMuller,
            "lap" | "laplace-sign" => NoiseKind::LaplaceSign,
            "laplace-inverse-cdf" => NoiseKind::LaplaceInverseCdf,
            other => return Err(Error::Config(format!("unknown noise kind {other:?}"))),
        })
    }
}

/// Noise family plus the public scale: `σ` for Gaussian, `b` for Laplace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub scale: f64,
}

impl NoiseSpec {
    /// A zero scale is allowed and makes the measurement exact.
    pub fn new(kind: NoiseKind, scale: f64) -> Result<NoiseSpec> {
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(Error::Config(format!("noise scale {scale} must be finite and non-negative")));
        }
        Ok(NoiseSpec { kind, scale })
    }
}

/// A noisy marginal released to party 1.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoisyMeasurement {
    pub query: Query,
    pub values: Vec<f64>,
    pub noise: NoiseSpec,
    pub round: usize,
}

/// Weighted random index, 1-based, drawn with probability proportional to
/// the (fixed-point, non-negative) weights. Every step runs regardless of
/// the outcome so the message pattern depends on `len` alone.
pub fn pi_rc<B: Backend>(b: &mut B, weights: &B::Vector) -> Result<B::Vector> {
    let n = b.len(weights);
    if n == 0 {
        return Err(Error::Argument("random selection over no candidates".into()));
    }
    let p = b.prefix_sum(weights);
    let total = b.slice(&p, n - 1, 1);
    let zero = b.eq_public(&total, &[0], 32);
    if b.open(&zero)[0] == 1 {
        return Err(Error::Degenerate("all selection weights are zero".into()));
    }
    let r = rand_uniform01(b, 1);
    let t = b.fx_mul(&total, &r);
    let t = b.broadcast(&t, n);
    let d = b.sub(&t, &p);
    let gt = b.ltz(&d);
    let k = b.segment_sum(&gt, &[n]);
    let k_zero = b.eq_public(&k, &[0], value_bits(n));
    let km1 = b.add_public(&k, &[1u64.wrapping_neg()]);
    let masked = b.mul(&km1, &one_minus(b, &k_zero));
    let nn = b.constant(&[n as u64]);
    Ok(b.sub(&nn, &masked))
}

/// Approximately standard normal samples: twelve uniforms summed, minus 6.
pub fn gaussian_irwin_hall<B: Backend>(b: &mut B, len: usize) -> B::Vector {
    let u = rand_uniform01(b, 12 * len);
    let s = b.segment_sum(&u, &vec![12; len]);
    b.add_public(&s, &vec![(6 * ONE).wrapping_neg(); len])
}

/// Standard normal samples from pairs of uniforms. An odd length drops the
/// second coordinate of the last pair.
pub fn gaussian_box_muller<B: Backend>(b: &mut B, len: usize) -> B::Vector {
    let pairs = len.div_ceil(2);
    let u = rand_uniform01(b, pairs);
    let v = rand_uniform01(b, pairs);
    let ln_u = sec_elem(b, ElemFn::Ln, &u);
    let r = sec_elem(b, ElemFn::Sqrt, &b.scale(&ln_u, 2u64.wrapping_neg()));
    let (sin, cos) = sincos_turns(b, &v);
    let rr = b.concat(&[&r, &r]);
    let z = b.fx_mul(&rr, &b.concat(&[&cos, &sin]));
    let idx: Vec<usize> = (0..len).map(|i| (i % 2) * pairs + i / 2).collect();
    b.gather(&z, &idx)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LaplaceVariant {
    /// `c · ln(l)` with a random sign `c`.
    Sign,
    /// `-sgn(u) · ln(1 - 2|u|)` with `u` uniform on `[-1/2, 1/2)`.
    InverseCdf,
}

/// Unit-scale Laplace samples.
pub fn laplace_noise<B: Backend>(b: &mut B, len: usize, variant: LaplaceVariant) -> B::Vector {
    match variant {
        LaplaceVariant::Sign => {
            let l = rand_uniform01(b, len);
            let bit = rand_bits(b, len);
            let ln_l = sec_elem(b, ElemFn::Ln, &l);
            let c = b.add_public(&b.scale(&bit, 2), &vec![1u64.wrapping_neg(); len]);
            b.mul(&ln_l, &c)
        }
        LaplaceVariant::InverseCdf => {
            let u = rand_uniform01(b, len);
            let u = b.add_public(&u, &vec![(ONE / 2).wrapping_neg(); len]);
            let neg = b.ltz(&u);
            let s = b.sub(&b.constant(&vec![1; len]), &b.scale(&neg, 2));
            let abs = b.mul(&s, &u);
            let arg = b.add_public(&b.scale(&abs, 2u64.wrapping_neg()), &vec![ONE; len]);
            let ln = sec_elem(b, ElemFn::Ln, &arg);
            let g = b.mul(&s, &ln);
            b.scale(&g, 1u64.wrapping_neg())
        }
    }
}

/// Unit-scale noise of the requested family.
/// Larger draws are split into batches of this size to bound memory.
pub const NOISE_BATCH: usize = 16384;

pub fn unit_noise<B: Backend>(b: &mut B, kind: NoiseKind, len: usize) -> B::Vector {
    if len > NOISE_BATCH {
        let lens: Vec<usize> = (0..len).step_by(NOISE_BATCH).map(|lo| NOISE_BATCH.min(len - lo)).collect();
        let parts = b.side_by_side(&lens, |b, n| unit_noise(b, kind, n));
        return b.concat(&parts.iter().collect::<Vec<_>>());
    }
    match kind {
        NoiseKind::GaussianIrwinHall => gaussian_irwin_hall(b, len),
        NoiseKind::GaussianBoxMuller => gaussian_box_muller(b, len),
        NoiseKind::LaplaceSign => laplace_noise(b, len, LaplaceVariant::Sign),
        NoiseKind::LaplaceInverseCdf => laplace_noise(b, len, LaplaceVariant::InverseCdf),
    }
}

/// Adds scaled noise to a shared integer answer and reveals the result to
/// party 1.
pub fn pi_measure<B: Backend>(
    b: &mut B,
    answer: &B::Vector,
    query: &Query,
    noise: NoiseSpec,
    round: usize,
) -> NoisyMeasurement {
    let len = b.len(answer);
    let gamma = injected_noise(b, len).unwrap_or_else(|| unit_noise(b, noise.kind, len));
    let scaled = b.fx_mul_public(&gamma, &vec![enc(noise.scale); len]);
    let noisy = b.add(&b.scale(answer, ONE), &scaled);
    let values = b.reveal(&noisy).into_iter().map(decode_raw).collect();
    NoisyMeasurement { query: query.clone(), values, noise, round }
}

#[cfg(any(test, feature = "test-hooks"))]
fn injected_noise<B: Backend>(b: &mut B, len: usize) -> Option<B::Vector> {
    let v = b.hooks().take_noise(len)?;
    Some(b.input(&v))
}

#[cfg(not(any(test, feature = "test-hooks")))]
fn injected_noise<B: Backend>(_b: &mut B, _len: usize) -> Option<B::Vector> {
    None
}
