//! Exact arithmetic in the bivariate algebraic-integer ring `Z[z1, z2]`.
//!
//! With `s = sqrt(2 + sqrt 2)` and `t = sqrt(2 - sqrt 2)` the generators are
//! `z1 = s + t` and `z2 = s - t`. Every element is carried as four integer
//! coordinates over the basis `{1, z1, z2, z1*z2}`. The basis is linearly
//! independent over the rationals, so coordinate equality is value equality.
//!
//! All arithmetic is checked: an overflow is reported as an error, never
//! wrapped.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::precise::{Fixed, RingConstants, MIN_PRECISION};

/// Default working precision for decoding, in bits.
pub const DEFAULT_PRECISION: u32 = 80;

/// An element `a + b*z1 + c*z2 + d*z1*z2` of the ring.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Z4Element {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl Z4Element {
    pub const ZERO: Self = Self::new(0, 0, 0, 0);
    pub const ONE: Self = Self::new(1, 0, 0, 0);
    pub const Z1: Self = Self::new(0, 1, 0, 0);
    pub const Z2: Self = Self::new(0, 0, 1, 0);
    pub const Z1Z2: Self = Self::new(0, 0, 0, 1);

    pub const fn new(a: i64, b: i64, c: i64, d: i64) -> Self {
        Self { a, b, c, d }
    }

    pub const fn from_coords(c: [i64; 4]) -> Self {
        Self::new(c[0], c[1], c[2], c[3])
    }

    pub const fn coords(&self) -> [i64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::ZERO
    }

    /// Largest absolute coordinate.
    pub fn max_abs(&self) -> u64 {
        self.coords().iter().map(|v| v.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn checked_add(self, rhs: Self) -> Result<Self> {
        zip4(self, rhs, i64::checked_add, "add")
    }

    pub fn checked_sub(self, rhs: Self) -> Result<Self> {
        zip4(self, rhs, i64::checked_sub, "sub")
    }

    pub fn checked_neg(self) -> Result<Self> {
        map4(self, i64::checked_neg, "neg")
    }

    /// Multiplication by `2^k`.
    pub fn shift_left(self, k: u32) -> Result<Self> {
        map4(self, |v| shl_checked(v, k), "shift_left")
    }

    /// Multiplication by a small integer.
    pub fn scale(self, k: i64) -> Result<Self> {
        map4(self, |v| v.checked_mul(k), "scale")
    }

    /// Ring product.
    ///
    /// Basis products, from `z1^2 = 4 + z1z2`, `z2^2 = 4 - z1z2`,
    /// `z1^2 z2 = 2(z1 + z2)`, `z1 z2^2 = 2(z1 - z2)` and `z1^2 z2^2 = 8`:
    ///
    /// ```text
    ///            1      z1          z2          z1z2
    /// 1          1      z1          z2          z1z2
    /// z1         z1     4 + z1z2    z1z2        2z1 + 2z2
    /// z2         z2     z1z2        4 - z1z2    2z1 - 2z2
    /// z1z2       z1z2   2z1 + 2z2   2z1 - 2z2   8
    /// ```
    ///
    /// Collecting coefficients of `(a,b,c,d) * (e,f,g,h)`:
    ///
    /// ```text
    /// 1    : ae + 4bf + 4cg + 8dh
    /// z1   : af + be + 2(bh + df + ch + dg)
    /// z2   : ag + ce + 2(bh + df - ch - dg)
    /// z1z2 : ah + de + bf - cg + bg + cf
    /// ```
    pub fn multiply(self, rhs: Self) -> Result<Self> {
        // i64 x i64 products fit in i128; the small multipliers and sums are
        // checked so that extreme coordinates still report overflow.
        let (a, b, c, d) = (self.a as i128, self.b as i128, self.c as i128, self.d as i128);
        let (e, f, g, h) = (rhs.a as i128, rhs.b as i128, rhs.c as i128, rhs.d as i128);
        let sum = |terms: &[(i128, i128)]| -> Option<i128> {
            terms.iter().try_fold(0i128, |acc, &(k, v)| acc.checked_add(k.checked_mul(v)?))
        };
        let ovf = || Error::Overflow("multiply");
        let one = sum(&[(1, a * e), (4, b * f), (4, c * g), (8, d * h)]).ok_or_else(ovf)?;
        let z1 = sum(&[(1, a * f), (1, b * e), (2, b * h), (2, d * f), (2, c * h), (2, d * g)])
            .ok_or_else(ovf)?;
        let z2 = sum(&[(1, a * g), (1, c * e), (2, b * h), (2, d * f), (-2, c * h), (-2, d * g)])
            .ok_or_else(ovf)?;
        let z1z2 = sum(&[(1, a * h), (1, d * e), (1, b * f), (-1, c * g), (1, b * g), (1, c * f)])
            .ok_or_else(ovf)?;
        let narrow = |v: i128| i64::try_from(v).map_err(|_| Error::Overflow("multiply"));
        Ok(Self::new(narrow(one)?, narrow(z1)?, narrow(z2)?, narrow(z1z2)?))
    }

    /// Multiplication by one of the Arai constants using only negation,
    /// addition and wired shifts.
    pub fn mul_constant(self, k: AiConstant) -> Result<Self> {
        let Self { a, b, c, d } = self;
        let ovf = || Error::Overflow("mul_constant");
        let add = |x: i64, y: i64| x.checked_add(y).ok_or_else(ovf);
        let sub = |x: i64, y: i64| x.checked_sub(y).ok_or_else(ovf);
        let dbl = |x: i64| shl_checked(x, 1).ok_or_else(ovf);
        let quad = |x: i64| shl_checked(x, 2).ok_or_else(ovf);
        let oct = |x: i64| shl_checked(x, 3).ok_or_else(ovf);
        match k {
            // x * z1z2
            AiConstant::C4 => Ok(Self::new(
                oct(d)?,
                dbl(add(b, c)?)?,
                dbl(sub(b, c)?)?,
                a,
            )),
            // x * (z1 - z2)
            AiConstant::C6 => Ok(Self::new(quad(sub(b, c)?)?, a, sub(quad(d)?, a)?, dbl(c)?)),
            // 2 * x * z2
            AiConstant::C2MinusC6 => Ok(Self::new(
                oct(c)?,
                quad(d)?,
                dbl(sub(a, dbl(d)?)?)?,
                dbl(sub(b, c)?)?,
            )),
            // 2 * x * z1
            AiConstant::C2PlusC6 => Ok(Self::new(
                oct(b)?,
                dbl(add(a, dbl(d)?)?)?,
                quad(d)?,
                dbl(add(b, c)?)?,
            )),
        }
    }

    /// Numeric value at `precision` bits.
    pub fn decode(&self, precision: u32) -> Result<Fixed> {
        if precision < MIN_PRECISION {
            return Err(Error::Precision(precision));
        }
        Ok(self.decode_with(&RingConstants::new(precision)))
    }

    /// Numeric value using precomputed constants.
    pub fn decode_with(&self, k: &RingConstants) -> Fixed {
        let bits = k.precision();
        let mut acc = Fixed::from_int(self.a, bits);
        acc = &acc + &k.z1.mul_int(self.b);
        acc = &acc + &k.z2.mul_int(self.c);
        &acc + &k.z1z2.mul_int(self.d)
    }

    /// `decode` at the default precision, rounded to `f64`.
    pub fn to_f64(&self) -> f64 {
        self.decode_with(&RingConstants::new(DEFAULT_PRECISION)).to_f64()
    }
}

impl fmt::Display for Z4Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.a, self.b, self.c, self.d)
    }
}

/// Trivial integer encoding: `m` maps to `(m, 0, 0, 0)`.
pub const fn encode_integer(m: i64) -> Z4Element {
    Z4Element::new(m, 0, 0, 0)
}

/// The four multiplier constants of the Arai flow graph, each scaled by 4.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AiConstant {
    /// `4 cos(4 pi / 16)`
    C4,
    /// `4 cos(6 pi / 16)`
    C6,
    /// `4 (cos(2 pi / 16) - cos(6 pi / 16))`
    C2MinusC6,
    /// `4 (cos(2 pi / 16) + cos(6 pi / 16))`
    C2PlusC6,
}

impl AiConstant {
    pub const ALL: [AiConstant; 4] =
        [AiConstant::C4, AiConstant::C6, AiConstant::C2MinusC6, AiConstant::C2PlusC6];

    pub const fn value(self) -> Z4Element {
        match self {
            AiConstant::C4 => Z4Element::new(0, 0, 0, 1),
            AiConstant::C6 => Z4Element::new(0, 1, -1, 0),
            AiConstant::C2MinusC6 => Z4Element::new(0, 0, 2, 0),
            AiConstant::C2PlusC6 => Z4Element::new(0, 2, 0, 0),
        }
    }

    /// The unscaled cosine combination, in double precision.
    pub fn cosine(self) -> f64 {
        use std::f64::consts::PI;
        let c = |k: f64| (k * PI / 16.0).cos();
        match self {
            AiConstant::C4 => c(4.0),
            AiConstant::C6 => c(6.0),
            AiConstant::C2MinusC6 => c(2.0) - c(6.0),
            AiConstant::C2PlusC6 => c(2.0) + c(6.0),
        }
    }
}

pub(crate) fn shl_checked(v: i64, k: u32) -> Option<i64> {
    if k >= 63 {
        return (v == 0).then_some(0);
    }
    let r = v.checked_mul(1i64 << k)?;
    Some(r)
}

fn map4(x: Z4Element, f: impl Fn(i64) -> Option<i64>, op: &'static str) -> Result<Z4Element> {
    let c = x.coords();
    let mut out = [0; 4];
    for (o, v) in out.iter_mut().zip(c) {
        *o = f(v).ok_or(Error::Overflow(op))?;
    }
    Ok(Z4Element::from_coords(out))
}

fn zip4(
    x: Z4Element,
    y: Z4Element,
    f: impl Fn(i64, i64) -> Option<i64>,
    op: &'static str,
) -> Result<Z4Element> {
    let (cx, cy) = (x.coords(), y.coords());
    let mut out = [0; 4];
    for i in 0..4 {
        out[i] = f(cx[i], cy[i]).ok_or(Error::Overflow(op))?;
    }
    Ok(Z4Element::from_coords(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn el(a: i64, b: i64, c: i64, d: i64) -> Z4Element {
        Z4Element::new(a, b, c, d)
    }

    #[test]
    fn encode_integer_examples() {
        assert_eq!(encode_integer(5), el(5, 0, 0, 0));
        assert_eq!(encode_integer(0), Z4Element::ZERO);
        assert_eq!(encode_integer(-128), el(-128, 0, 0, 0));
    }

    #[test]
    fn decode_examples() {
        assert!((Z4Element::Z1Z2.decode(80).unwrap().to_f64() - 2.82842712474619).abs() < 1e-14);
        assert!((Z4Element::Z1.decode(80).unwrap().to_f64() - 2.613125929752).abs() < 1e-12);
        assert_eq!(Z4Element::ONE.decode(80).unwrap().to_f64(), 1.0);
        assert_eq!(Z4Element::ONE.decode(52), Err(Error::Precision(52)));
    }

    #[test]
    fn coordinate_ops() {
        assert_eq!(el(1, 2, 3, 4).checked_add(el(4, 3, 2, 1)).unwrap(), el(5, 5, 5, 5));
        assert_eq!(el(1, -1, 0, 2).shift_left(3).unwrap(), el(8, -8, 0, 16));
        assert_eq!(Z4Element::ONE.checked_sub(Z4Element::ONE).unwrap(), Z4Element::ZERO);
        assert!(el(i64::MAX, 0, 0, 0).checked_add(Z4Element::ONE).is_err());
        assert!(el(0, 1 << 62, 0, 0).shift_left(1).is_err());
    }

    #[test]
    fn basis_relations() {
        let z1 = Z4Element::Z1;
        let z2 = Z4Element::Z2;
        let z12 = Z4Element::Z1Z2;
        assert_eq!(z1.multiply(z1).unwrap(), el(4, 0, 0, 1));
        assert_eq!(z2.multiply(z2).unwrap(), el(4, 0, 0, -1));
        assert_eq!(z1.multiply(z12).unwrap(), el(0, 2, 2, 0));
        assert_eq!(z2.multiply(z12).unwrap(), el(0, 2, -2, 0));
        assert_eq!(z12.multiply(z12).unwrap(), el(8, 0, 0, 0));
        assert_eq!(z1.multiply(z2).unwrap(), z12);
    }

    #[test]
    fn multiply_overflow_detected() {
        let big = el(i64::MAX / 2, 0, 0, 0);
        assert!(big.multiply(el(4, 0, 0, 0)).is_err());
    }

    #[test]
    fn constant_table_values() {
        assert_eq!(encode_integer(1).mul_constant(AiConstant::C4).unwrap(), el(0, 0, 0, 1));
        assert_eq!(encode_integer(3).mul_constant(AiConstant::C2MinusC6).unwrap(), el(0, 0, 6, 0));
        for k in AiConstant::ALL {
            let v = k.value();
            assert!(v.coords().iter().all(|c| [0, 1, -1, 2, -2].contains(c)));
            let got = v.decode(120).unwrap().to_f64() / 4.0;
            assert!((got - k.cosine()).abs() < 1e-15, "{k:?}");
        }
    }

    fn small() -> impl Strategy<Value = Z4Element> {
        prop::array::uniform4(-(1i64 << 15)..=(1i64 << 15)).prop_map(Z4Element::from_coords)
    }

    proptest! {
        #[test]
        fn mul_constant_matches_multiply(x in small()) {
            for k in AiConstant::ALL {
                prop_assert_eq!(x.mul_constant(k).unwrap(), x.multiply(k.value()).unwrap());
            }
        }

        #[test]
        fn ring_axioms(x in small(), y in small(), z in small()) {
            prop_assert_eq!(x.multiply(y).unwrap(), y.multiply(x).unwrap());
            let xy_z = x.multiply(y).unwrap().multiply(z).unwrap();
            let x_yz = x.multiply(y.multiply(z).unwrap()).unwrap();
            prop_assert_eq!(xy_z, x_yz);
            let lhs = x.multiply(y.checked_add(z).unwrap()).unwrap();
            let rhs = x.multiply(y).unwrap().checked_add(x.multiply(z).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
            prop_assert_eq!(Z4Element::ONE.multiply(y).unwrap(), y);
        }

        #[test]
        fn decode_homomorphism(x in small(), y in small()) {
            let k = RingConstants::new(80);
            let lhs = x.multiply(y).unwrap().decode_with(&k);
            let rhs = &x.decode_with(&k) * &y.decode_with(&k);
            let err = (&lhs - &rhs).abs().to_f64();
            prop_assert!(err < 1e-6, "{} vs {}", lhs.to_f64(), rhs.to_f64());
        }

        #[test]
        fn zero_product_iff_zero_factor(x in small(), y in small()) {
            let p = x.multiply(y).unwrap();
            prop_assert_eq!(p.is_zero(), x.is_zero() || y.is_zero());
        }
    }
}
