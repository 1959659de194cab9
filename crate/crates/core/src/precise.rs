//! Arbitrary-precision binary fixed-point reals.
//!
//! Only what the decoders need: integer scaling, addition, multiplication,
//! square roots and conversion back to `f64`. A value is stored as a big
//! integer mantissa with an implicit scale of `2^-bits`.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

/// Minimum precision accepted by the decoders.
pub const MIN_PRECISION: u32 = 53;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fixed {
    mant: BigInt,
    bits: u32,
}

impl Fixed {
    pub fn zero(bits: u32) -> Self {
        Self { mant: BigInt::zero(), bits }
    }

    pub fn from_int(v: i64, bits: u32) -> Self {
        Self { mant: BigInt::from(v) << bits, bits }
    }

    /// `num / 2^shift`, exact as long as `shift <= bits`.
    pub fn from_ratio_pow2(num: i64, shift: u32, bits: u32) -> Self {
        let m = BigInt::from(num);
        let mant = if shift <= bits { m << (bits - shift) } else { m >> (shift - bits) };
        Self { mant, bits }
    }

    pub fn precision(&self) -> u32 {
        self.bits
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mant
    }

    /// Floor square root. Panics on negative input.
    pub fn sqrt(&self) -> Self {
        assert!(!self.mant.is_negative(), "square root of a negative value");
        let wide: BigInt = &self.mant << self.bits;
        Self { mant: wide.sqrt(), bits: self.bits }
    }

    pub fn mul_int(&self, k: i64) -> Self {
        Self { mant: &self.mant * k, bits: self.bits }
    }

    pub fn half(&self) -> Self {
        Self { mant: &self.mant >> 1u32, bits: self.bits }
    }

    pub fn abs(&self) -> Self {
        Self { mant: self.mant.abs(), bits: self.bits }
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    /// Division rounding toward negative infinity at this precision.
    pub fn div(&self, rhs: &Fixed) -> Fixed {
        assert_eq!(self.bits, rhs.bits);
        assert!(!rhs.mant.is_zero(), "division by zero");
        let num: BigInt = &self.mant << self.bits;
        Fixed { mant: num.div_floor(&rhs.mant), bits: self.bits }
    }

    /// Conversion to `f64`, within one ulp.
    pub fn to_f64(&self) -> f64 {
        let len = self.mant.bits();
        if len <= 64 {
            let m = self.mant.to_f64().unwrap_or(f64::NAN);
            return m * (-(self.bits as f64)).exp2();
        }
        let drop = len - 64;
        let top = (&self.mant >> drop).to_f64().unwrap_or(f64::NAN);
        top * (drop as f64 - self.bits as f64).exp2()
    }

    /// `|self| <= 2^-k`
    pub fn abs_le_pow2_neg(&self, k: u32) -> bool {
        if k > self.bits {
            return self.mant.is_zero();
        }
        self.mant.abs() <= BigInt::from(1) << (self.bits - k)
    }
}

impl Add for &Fixed {
    type Output = Fixed;
    fn add(self, rhs: &Fixed) -> Fixed {
        assert_eq!(self.bits, rhs.bits);
        Fixed { mant: &self.mant + &rhs.mant, bits: self.bits }
    }
}

impl Sub for &Fixed {
    type Output = Fixed;
    fn sub(self, rhs: &Fixed) -> Fixed {
        assert_eq!(self.bits, rhs.bits);
        Fixed { mant: &self.mant - &rhs.mant, bits: self.bits }
    }
}

impl Mul for &Fixed {
    type Output = Fixed;
    fn mul(self, rhs: &Fixed) -> Fixed {
        assert_eq!(self.bits, rhs.bits);
        Fixed { mant: (&self.mant * &rhs.mant) >> self.bits, bits: self.bits }
    }
}

impl Neg for &Fixed {
    type Output = Fixed;
    fn neg(self) -> Fixed {
        Fixed { mant: -&self.mant, bits: self.bits }
    }
}

impl PartialOrd for Fixed {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        (self.bits == other.bits).then(|| self.mant.cmp(&other.mant))
    }
}

/// The irrational constants of the ring basis at a given working precision.
///
/// Values are computed with `GUARD_BITS` extra bits and rounded down, so each
/// is within a few ulps of the true value at `bits`.
#[derive(Clone, Debug)]
pub struct RingConstants {
    pub z1: Fixed,
    pub z2: Fixed,
    pub z1z2: Fixed,
    bits: u32,
}

const GUARD_BITS: u32 = 16;

impl RingConstants {
    pub fn new(bits: u32) -> Self {
        let w = bits + GUARD_BITS;
        let two = Fixed::from_int(2, w);
        let sqrt2 = two.sqrt();
        let s = (&two + &sqrt2).sqrt(); // sqrt(2 + sqrt 2)
        let t = (&two - &sqrt2).sqrt(); // sqrt(2 - sqrt 2)
        let z1 = &s + &t;
        let z2 = &s - &t;
        let z1z2 = sqrt2.mul_int(2);
        Self {
            z1: narrow(&z1, bits),
            z2: narrow(&z2, bits),
            z1z2: narrow(&z1z2, bits),
            bits,
        }
    }

    pub fn precision(&self) -> u32 {
        self.bits
    }
}

fn narrow(x: &Fixed, bits: u32) -> Fixed {
    debug_assert!(x.bits >= bits);
    Fixed { mant: &x.mant >> (x.bits - bits), bits }
}

/// `cos(m*pi/16)` for any integer `m`, via nested radicals.
pub fn cos_pi16(m: i64, bits: u32) -> Fixed {
    let w = bits + GUARD_BITS;
    let r = m.rem_euclid(32);
    // reduce to [0, 8] using symmetries of cosine
    let (idx, sign) = match r {
        0..=8 => (r, 1),
        9..=16 => (16 - r, -1),
        17..=24 => (r - 16, -1),
        _ => (32 - r, 1),
    };
    let two = Fixed::from_int(2, w);
    let sqrt2 = two.sqrt();
    let a = (&two + &sqrt2).sqrt();
    let b = (&two - &sqrt2).sqrt();
    let v = match idx {
        0 => Fixed::from_int(1, w),
        1 => (&two + &a).sqrt().half(),
        2 => a.half(),
        3 => (&two + &b).sqrt().half(),
        4 => sqrt2.half(),
        5 => (&two - &b).sqrt().half(),
        6 => b.half(),
        7 => (&two - &a).sqrt().half(),
        8 => Fixed::zero(w),
        _ => unreachable!(),
    };
    let v = if sign < 0 { -&v } else { v };
    narrow(&v, bits)
}
