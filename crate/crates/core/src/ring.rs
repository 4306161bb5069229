//! Arithmetic in Z_2^64 with a signed fixed-point reading.
//!
//! Every operation wraps. A word `w` is read as the real number
//! `(w as i64) / 2^FRAC_BITS`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fractional bits of the fixed-point encoding.
pub const FRAC_BITS: u32 = 16;

/// `2^FRAC_BITS` as a ring word, i.e. the encoding of 1.0.
pub const ONE: u64 = 1 << FRAC_BITS;

/// Largest magnitude accepted by [`encode`] is strictly below this.
pub const MAX_ABS: f64 = (1u64 << (63 - FRAC_BITS)) as f64;

/// Element of Z_2^64.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RingElem(pub u64);

impl RingElem {
    pub const ZERO: RingElem = RingElem(0);

    pub fn word(self) -> u64 {
        self.0
    }

    pub fn signed(self) -> i64 {
        self.0 as i64
    }
}

impl fmt::Debug for RingElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RingElem({})", self.0)
    }
}

impl Add for RingElem {
    type Output = RingElem;
    fn add(self, rhs: RingElem) -> RingElem {
        RingElem(self.0.wrapping_add(rhs.0))
    }
}

impl Sub for RingElem {
    type Output = RingElem;
    fn sub(self, rhs: RingElem) -> RingElem {
        RingElem(self.0.wrapping_sub(rhs.0))
    }
}

impl Mul for RingElem {
    type Output = RingElem;
    fn mul(self, rhs: RingElem) -> RingElem {
        RingElem(self.0.wrapping_mul(rhs.0))
    }
}

impl Neg for RingElem {
    type Output = RingElem;
    fn neg(self) -> RingElem {
        RingElem(self.0.wrapping_neg())
    }
}

impl AddAssign for RingElem {
    fn add_assign(&mut self, rhs: RingElem) {
        *self = *self + rhs;
    }
}

impl SubAssign for RingElem {
    fn sub_assign(&mut self, rhs: RingElem) {
        *self = *self - rhs;
    }
}

impl From<u64> for RingElem {
    fn from(w: u64) -> Self {
        RingElem(w)
    }
}

/// Ring element carrying a fixed-point value with [`FRAC_BITS`] fractional bits.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FxValue {
    pub raw: RingElem,
}

impl FxValue {
    pub const fn from_raw(raw: u64) -> FxValue {
        FxValue { raw: RingElem(raw) }
    }

    pub fn to_f64(self) -> f64 {
        decode(self)
    }
}

impl Add for FxValue {
    type Output = FxValue;
    fn add(self, rhs: FxValue) -> FxValue {
        FxValue { raw: self.raw + rhs.raw }
    }
}

impl Sub for FxValue {
    type Output = FxValue;
    fn sub(self, rhs: FxValue) -> FxValue {
        FxValue { raw: self.raw - rhs.raw }
    }
}

impl Neg for FxValue {
    type Output = FxValue;
    fn neg(self) -> FxValue {
        FxValue { raw: -self.raw }
    }
}

/// Encodes `r` as `round(r * 2^f) mod 2^64`, rounding half away from zero.
pub fn encode(r: f64) -> Result<FxValue> {
    encode_scaled(r, FRAC_BITS)
}

/// Encodes with an arbitrary number of fractional bits, e.g. `2f` for the
/// double-width value a product carries before truncation.
pub fn encode_scaled(r: f64, frac_bits: u32) -> Result<FxValue> {
    let limit = 2f64.powi(63 - frac_bits as i32);
    if !r.is_finite() || r.abs() >= limit {
        return Err(Error::Range(format!("{r} is outside the fixed-point range (|r| < 2^{})", 63 - frac_bits)));
    }
    let scaled = (r * 2f64.powi(frac_bits as i32)).round();
    Ok(FxValue::from_raw(scaled as i64 as u64))
}

/// Encodes a value already known to be in range; used for compile-time style
/// protocol constants.
pub(crate) fn enc(r: f64) -> u64 {
    encode(r).expect("protocol constant in range").raw.0
}

pub fn decode(v: FxValue) -> f64 {
    decode_raw(v.raw.0)
}

pub fn decode_raw(raw: u64) -> f64 {
    raw as i64 as f64 / ONE as f64
}

/// Full-width signed product shifted right by `f` (floor). Products that do
/// not fit in 64 signed bits wrap.
pub fn fx_mul_trunc(a: FxValue, b: FxValue) -> FxValue {
    FxValue::from_raw(fx_mul_raw(a.raw.0, b.raw.0))
}

pub(crate) fn fx_mul_raw(a: u64, b: u64) -> u64 {
    let wide = (a as i64 as i128) * (b as i64 as i128);
    (wide >> FRAC_BITS) as u64
}

/// Arithmetic right shift of the signed reading of `x`.
pub(crate) fn ashr(x: u64, k: u32) -> u64 {
    ((x as i64) >> k) as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn encode_examples() {
        assert_eq!(encode(0.0).unwrap().raw.0, 0);
        assert_eq!(encode(1.0).unwrap().raw.0, 1 << 16);
        assert_eq!(encode(-1.5).unwrap().raw.0, 0u64.wrapping_sub(3 << 15));
    }

    #[test]
    fn decode_examples() {
        assert_eq!(decode(FxValue::from_raw(1 << 16)), 1.0);
        assert_eq!(decode(FxValue::from_raw(0)), 0.0);
        assert_eq!(decode(FxValue::from_raw(0u64.wrapping_sub(1 << 15))), -0.5);
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        let half_ulp = 0.5 / ONE as f64;
        assert_eq!(encode(half_ulp).unwrap().raw.0, 1);
        assert_eq!(encode(-half_ulp).unwrap().raw.0, u64::MAX);
    }

    #[test]
    fn out_of_range_is_rejected() {
        assert!(encode(MAX_ABS).is_err());
        assert!(encode(-MAX_ABS).is_err());
        assert!(encode(f64::NAN).is_err());
        assert!(encode(MAX_ABS - 1.0).is_ok());
    }

    #[test]
    fn mul_examples() {
        let two = encode(2.0).unwrap();
        let three = encode(3.0).unwrap();
        assert_eq!(decode(fx_mul_trunc(two, three)), 6.0);
        assert_eq!(fx_mul_trunc(encode(123.4).unwrap(), FxValue::default()).raw.0, 0);
        let p = decode(fx_mul_trunc(encode(0.1).unwrap(), encode(0.2).unwrap()));
        assert!((p - 0.02).abs() <= 2f64.powi(-(FRAC_BITS as i32) + 1));
    }

    #[test]
    fn negative_products_floor() {
        let a = encode(-1.0).unwrap();
        let b = FxValue::from_raw(1);
        // -2^-16 is exact; floor keeps it.
        assert_eq!(fx_mul_trunc(a, b).raw.0, u64::MAX);
    }

    #[test]
    fn double_width_encoding() {
        let six = encode_scaled(6.0, 2 * FRAC_BITS).unwrap();
        assert_eq!(ashr(six.raw.0, FRAC_BITS), encode(6.0).unwrap().raw.0);
    }

    fn representable() -> impl Strategy<Value = f64> {
        -20000.0f64..20000.0
    }

    proptest! {
        #[test]
        fn mul_error_bound(a in representable(), b in representable()) {
            let (ea, eb) = (encode(a).unwrap(), encode(b).unwrap());
            let exact = decode(ea) * decode(eb);
            let got = decode(fx_mul_trunc(ea, eb));
            prop_assert!((got - exact).abs() <= 2f64.powi(-(FRAC_BITS as i32) + 1));
        }

        #[test]
        fn addition_is_ring_addition(a in representable(), b in representable()) {
            let (ea, eb) = (encode(a).unwrap(), encode(b).unwrap());
            prop_assert_eq!(decode(ea + eb), decode(ea) + decode(eb));
        }

        #[test]
        fn grid_round_trip(k in -(1i64 << 46)..(1i64 << 46)) {
            let r = k as f64 / ONE as f64;
            prop_assert_eq!(decode(encode(r).unwrap()), r);
        }

        #[test]
        fn ring_ops_wrap(a: u64, b: u64) {
            let (x, y) = (RingElem(a), RingElem(b));
            prop_assert_eq!((x + y).0, a.wrapping_add(b));
            prop_assert_eq!((x - y).0, a.wrapping_sub(b));
            prop_assert_eq!((x * y).0, a.wrapping_mul(b));
            prop_assert_eq!((x + y) - y, x);
        }
    }
}
