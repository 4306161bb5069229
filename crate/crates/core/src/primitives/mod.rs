//! Secure equality, comparison, max, sum and elementary functions, written
//! once against [`Backend`].

mod elem;

pub use elem::{sec_elem, sincos_turns, ElemFn};

use crate::backend::Backend;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpMode {
    Lt,
    Gt,
    Gte,
}

/// 1 where `x[i] == c[i]`, for integer inputs in `[0, 2^beta)`, `beta <= 32`.
pub fn sec_eq<B: Backend>(b: &mut B, x: &B::Vector, c: &[u64], beta: u32) -> Result<B::Vector> {
    if beta > 32 {
        return Err(Error::Contract(format!("equality range 2^{beta} exceeds 2^32")));
    }
    if b.len(x) != c.len() {
        return Err(Error::Argument("equality constants do not match input length".into()));
    }
    Ok(b.eq_public(x, c, beta))
}

/// Elementwise comparison of signed fixed-point values.
pub fn sec_cmp<B: Backend>(b: &mut B, x: &B::Vector, y: &B::Vector, mode: CmpMode) -> B::Vector {
    match mode {
        CmpMode::Lt => {
            let d = b.sub(x, y);
            b.ltz(&d)
        }
        CmpMode::Gt => {
            let d = b.sub(y, x);
            b.ltz(&d)
        }
        CmpMode::Gte => {
            let d = b.sub(x, y);
            let lt = b.ltz(&d);
            one_minus(b, &lt)
        }
    }
}

pub(crate) fn one_minus<B: Backend>(b: &B, x: &B::Vector) -> B::Vector {
    let n = b.len(x);
    b.sub(&b.constant(&vec![1; n]), x)
}

/// Tournament maximum; uses exactly `len - 1` comparisons.
pub fn sec_max<B: Backend>(b: &mut B, xs: &B::Vector) -> Result<B::Vector> {
    let n = b.len(xs);
    if n == 0 {
        return Err(Error::Argument("maximum of an empty vector".into()));
    }
    let mut cur = xs.clone();
    let mut len = n;
    while len > 1 {
        let half = len / 2;
        let left = b.slice(&cur, 0, half);
        let right = b.slice(&cur, half, half);
        let gt = sec_cmp(b, &left, &right, CmpMode::Gt);
        let diff = b.sub(&left, &right);
        let pick = b.mul(&gt, &diff);
        let winners = b.add(&right, &pick);
        cur = if len % 2 == 1 {
            let rest = b.slice(&cur, 2 * half, 1);
            b.concat(&[&winners, &rest])
        } else {
            winners
        };
        len = half + len % 2;
    }
    Ok(cur)
}

/// Local sum of all elements; an empty vector sums to 0.
pub fn sec_sum<B: Backend>(b: &B, xs: &B::Vector) -> B::Vector {
    b.segment_sum(xs, &[b.len(xs)])
}

/// Elementwise EXP of already max-subtracted scores. The weights are left
/// unnormalized: random selection only needs them up to a common factor.
pub fn sec_softmax_unnorm<B: Backend>(b: &mut B, errs: &B::Vector) -> B::Vector {
    sec_elem(b, ElemFn::Exp, errs)
}
