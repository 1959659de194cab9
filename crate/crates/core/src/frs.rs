//! Final reconstruction step (FRS): the only approximate stage of the
//! pipeline, mapping a doubly encoded coefficient to a binary fixed-point
//! value.
//!
//! Two decoders are provided:
//!
//! * [`frs_dempster`] replaces each basis product `v(q) v(p)` by a 12-bit
//!   dyadic approximation and multiplies through shift-add programs.
//! * [`frs_expansion`] first regroups the sixteen coordinates into the four
//!   exact integers `Y` (see [`compute_y`]), then evaluates
//!   `alpha * Ya + m1 Yb + m2 Yc + m3 Yd` with integer `m` and a signed
//!   power-of-two expansion of `alpha`. The result is `alpha` times the
//!   coefficient; dividing by `alpha` is optional.
//!
//! All arithmetic is exact integer arithmetic on a scaled representation, so
//! the only error is the approximation of the constants.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::arai::DoublyEncoded;
use crate::error::{Error, Result};
use crate::precise::{Fixed, RingConstants};
use crate::program::{multiplier, Program};
use crate::ring::{shl_checked, Z4Element};

/// Fractional bits of the Dempster-Macleod decoder's internal scale; the
/// finest constant is `x / 2^11`.
pub const DEMPSTER_FRAC_BITS: u32 = 11;

/// A binary fixed-point number `raw / 2^frac_bits`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixedPoint {
    pub raw: i64,
    pub frac_bits: u32,
}

impl FixedPoint {
    pub fn to_f64(self) -> f64 {
        self.raw as f64 * (-(self.frac_bits as f64)).exp2()
    }

    /// Re-quantizes to `bits` fractional bits, rounding half up.
    pub fn round_to(self, bits: u32) -> Result<FixedPoint> {
        if bits >= self.frac_bits {
            let raw = shl_checked(self.raw, bits - self.frac_bits)
                .ok_or(Error::Overflow("round_to"))?;
            return Ok(FixedPoint { raw, frac_bits: bits });
        }
        let k = self.frac_bits - bits;
        let raw = self.raw.checked_add(1i64 << (k - 1)).ok_or(Error::Overflow("round_to"))? >> k;
        Ok(FixedPoint { raw, frac_bits: bits })
    }
}

impl fmt::Display for FixedPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

/// Which exact value a dyadic constant approximates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasisProduct {
    Z1,
    Z2,
    Z1Sq,
    Z2Sq,
    Z1Z2,
    Z1Z2Sq,
    Z1SqZ2,
    Z1SqZ2Sq,
}

impl BasisProduct {
    /// Exact value at the precision of `k`.
    pub fn exact(self, k: &RingConstants) -> Fixed {
        match self {
            BasisProduct::Z1 => k.z1.clone(),
            BasisProduct::Z2 => k.z2.clone(),
            BasisProduct::Z1Sq => &k.z1 * &k.z1,
            BasisProduct::Z2Sq => &k.z2 * &k.z2,
            BasisProduct::Z1Z2 => k.z1z2.clone(),
            BasisProduct::Z1Z2Sq => &k.z1z2 * &k.z2,
            BasisProduct::Z1SqZ2 => &k.z1z2 * &k.z1,
            BasisProduct::Z1SqZ2Sq => Fixed::from_int(8, k.precision()),
        }
    }
}

/// `numerator / 2^shift`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DyadicConstant {
    pub target: BasisProduct,
    pub numerator: i64,
    pub shift: u32,
}

impl DyadicConstant {
    pub fn value(self) -> f64 {
        self.numerator as f64 / (1u64 << self.shift) as f64
    }
}

/// The 12-bit constants, plus the exact 8.
pub const TWELVE_BIT_CONSTANTS: [DyadicConstant; 8] = [
    DyadicConstant { target: BasisProduct::Z1, numerator: 669, shift: 8 },
    DyadicConstant { target: BasisProduct::Z2, numerator: 2217, shift: 11 },
    DyadicConstant { target: BasisProduct::Z1Sq, numerator: 437, shift: 6 },
    DyadicConstant { target: BasisProduct::Z2Sq, numerator: 2399, shift: 11 },
    DyadicConstant { target: BasisProduct::Z1Z2, numerator: 181, shift: 6 },
    DyadicConstant { target: BasisProduct::Z1Z2Sq, numerator: 3135, shift: 10 },
    DyadicConstant { target: BasisProduct::Z1SqZ2, numerator: 473, shift: 6 },
    DyadicConstant { target: BasisProduct::Z1SqZ2Sq, numerator: 8, shift: 0 },
];

/// Product `v(q) v(p)` of two basis elements, `None` for `1 * 1`.
pub fn basis_product(q: usize, p: usize) -> Option<BasisProduct> {
    use BasisProduct::*;
    match (q.min(p), q.max(p)) {
        (0, 0) => None,
        (0, 1) => Some(Z1),
        (0, 2) => Some(Z2),
        (0, 3) | (1, 2) => Some(Z1Z2),
        (1, 1) => Some(Z1Sq),
        (1, 3) => Some(Z1SqZ2),
        (2, 2) => Some(Z2Sq),
        (2, 3) => Some(Z1Z2Sq),
        (3, 3) => Some(Z1SqZ2Sq),
        _ => panic!("basis index out of range"),
    }
}

pub fn twelve_bit(target: BasisProduct) -> DyadicConstant {
    TWELVE_BIT_CONSTANTS.iter().copied().find(|c| c.target == target).expect("all products tabulated")
}

/// Dempster-Macleod decoder. Result has [`DEMPSTER_FRAC_BITS`] fractional bits.
pub fn frs_dempster(x: &DoublyEncoded) -> Result<FixedPoint> {
    let mut total: i64 = 0;
    for q in 0..4 {
        let mut channel: i64 = 0;
        for p in 0..4 {
            let coord = x.coords[q][p];
            let term = match basis_product(q, p) {
                None => shl_checked(coord, DEMPSTER_FRAC_BITS),
                Some(bp) => {
                    let k = twelve_bit(bp);
                    let prog = multiplier(k.numerator).expect("multiplier program for constant");
                    shl_checked(prog.run(coord)?, DEMPSTER_FRAC_BITS - k.shift)
                }
            }
            .ok_or(Error::Overflow("frs_dempster"))?;
            channel = channel.checked_add(term).ok_or(Error::Overflow("frs_dempster"))?;
        }
        total = total.checked_add(channel).ok_or(Error::Overflow("frs_dempster"))?;
    }
    Ok(FixedPoint { raw: total, frac_bits: DEMPSTER_FRAC_BITS })
}

/// Additions in one Dempster-Macleod coefficient: the multiplier programs
/// of all sixteen products plus fifteen to sum them.
pub fn dempster_additions() -> usize {
    let mut n = 15;
    for q in 0..4 {
        for p in 0..4 {
            if let Some(bp) = basis_product(q, p) {
                n += multiplier(twelve_bit(bp).numerator).expect("tabulated").additions();
            }
        }
    }
    n
}

/// Regroups the coordinates on `{1, z1, z2, z1 z2}`; the coefficient equals
/// `Ya + Yb z1 + Yc z2 + Yd z1 z2` exactly.
pub fn compute_y(x: &DoublyEncoded) -> Result<[i64; 4]> {
    let c = &x.coords;
    let ovf = || Error::Overflow("compute_y");
    let sum = |terms: &[(i64, u32, bool)]| -> Result<i64> {
        terms.iter().try_fold(0i64, |acc, &(v, k, neg)| {
            let t = shl_checked(v, k).ok_or_else(ovf)?;
            if neg { acc.checked_sub(t) } else { acc.checked_add(t) }.ok_or_else(ovf)
        })
    };
    let ya = sum(&[(c[0][0], 0, false), (c[1][1], 2, false), (c[2][2], 2, false), (c[3][3], 3, false)])?;
    let yb = sum(&[
        (c[0][1], 0, false),
        (c[1][0], 0, false),
        (c[1][3], 1, false),
        (c[2][3], 1, false),
        (c[3][1], 1, false),
        (c[3][2], 1, false),
    ])?;
    let yc = sum(&[
        (c[0][2], 0, false),
        (c[2][0], 0, false),
        (c[1][3], 1, false),
        (c[2][3], 1, true),
        (c[3][1], 1, false),
        (c[3][2], 1, true),
    ])?;
    let yd = sum(&[
        (c[0][3], 0, false),
        (c[1][1], 0, false),
        (c[1][2], 0, false),
        (c[2][1], 0, false),
        (c[2][2], 0, true),
        (c[3][0], 0, false),
    ])?;
    Ok([ya, yb, yc, yd])
}

/// Adders used by [`compute_y`]: 3 for `Ya`, 5 for each of the others.
pub const COMPUTE_Y_ADDITIONS: usize = 18;

pub fn y_as_element(y: [i64; 4]) -> Z4Element {
    Z4Element::from_coords(y)
}

/// One signed power of two, `±2^exp`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoothTerm {
    pub exp: i32,
    pub negative: bool,
}

impl BoothTerm {
    pub fn value(self) -> f64 {
        let v = (self.exp as f64).exp2();
        if self.negative { -v } else { v }
    }
}

pub fn booth_value(terms: &[BoothTerm]) -> f64 {
    terms.iter().map(|t| t.value()).sum()
}

const BOOTH_MAX_FRAC_BITS: i32 = 24;

/// Signed-power-of-two expansion of `value` using at most `max_terms` terms.
///
/// For every dyadic grid `2^-f` the rounded value is written with the
/// fewest nonzero signed digits (plain binary when it is no longer than the
/// canonical signed-digit form). The closest candidate within the term
/// budget wins; ties go to the coarser grid.
pub fn booth_encode(value: f64, max_terms: usize) -> Vec<BoothTerm> {
    if value == 0.0 || !value.is_finite() || max_terms == 0 {
        return Vec::new();
    }
    let negative = value < 0.0;
    let mag = value.abs();
    let mut best: Option<(f64, Vec<BoothTerm>)> = None;
    for f in 0..=BOOTH_MAX_FRAC_BITS {
        let scaled = (mag * (f as f64).exp2()).round();
        if scaled < 1.0 || scaled > (1u64 << 62) as f64 {
            continue;
        }
        let digits = min_weight_digits(scaled as i64);
        if digits.len() > max_terms {
            continue;
        }
        let residual = (mag - scaled * (-(f as f64)).exp2()).abs();
        if best.as_ref().is_none_or(|(r, _)| residual < *r) {
            let terms = digits
                .into_iter()
                .map(|(bit, neg)| BoothTerm { exp: bit as i32 - f, negative: neg != negative })
                .collect();
            best = Some((residual, terms));
        }
    }
    best.map(|(_, t)| t).unwrap_or_default()
}

/// `(bit, negative)` digits of `n > 0`, highest first.
fn min_weight_digits(n: i64) -> Vec<(u32, bool)> {
    let binary: Vec<(u32, bool)> = (0..63).rev().filter(|b| n >> b & 1 == 1).map(|b| (b, false)).collect();
    let csd = non_adjacent_form(n);
    if binary.len() <= csd.len() { binary } else { csd }
}

fn non_adjacent_form(mut n: i64) -> Vec<(u32, bool)> {
    let mut out = Vec::new();
    let mut bit = 0;
    while n != 0 {
        if n & 1 == 1 {
            // digit is +1 if n = 1 mod 4, else -1
            let neg = n & 3 == 3;
            out.push((bit, neg));
            n = if neg { n + 1 } else { n - 1 };
        }
        n >>= 1;
        bit += 1;
    }
    out.reverse();
    out
}

/// An expansion factor `alpha` with the integers `m = round(alpha * (z1, z2, z1 z2))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionFactorSet {
    pub alpha: f64,
    pub m: [i64; 3],
    pub booth: Vec<BoothTerm>,
}

impl ExpansionFactorSet {
    /// `alpha = 167.2309`, `m = (437, 181, 473)`.
    pub fn large() -> Self {
        Self::with_booth(167.2309, [437, 181, 473], 7)
    }

    /// `alpha = 4.5961`, `m = (12, 5, 13)`.
    pub fn small() -> Self {
        Self::with_booth(4.5961, [12, 5, 13], 5)
    }

    pub fn with_booth(alpha: f64, m: [i64; 3], booth_terms: usize) -> Self {
        Self { alpha, m, booth: booth_encode(alpha, booth_terms) }
    }

    /// Checks `round(alpha * zeta) == m`.
    pub fn is_consistent(&self) -> bool {
        rounded_triple(self.alpha) == self.m
    }

    /// Fractional bits needed to hold `alpha * Ya` exactly.
    pub fn frac_bits(&self) -> u32 {
        self.booth.iter().map(|t| (-t.exp).max(0) as u32).max().unwrap_or(0)
    }

    pub fn booth_value(&self) -> f64 {
        booth_value(&self.booth)
    }

    pub fn label(&self) -> String {
        format!("{{{}, {}, {}}}", self.m[0], self.m[1], self.m[2])
    }
}

/// The shift-add schedule computing `m1 b + m2 c + m3 d` for a known set.
pub fn cse_schedule(m: [i64; 3]) -> Result<&'static Program> {
    static SCHEDULES: std::sync::OnceLock<HashMap<[i64; 3], Program>> = std::sync::OnceLock::new();
    let table = SCHEDULES.get_or_init(|| {
        let mut t = HashMap::new();
        // 473 (b + c + d) - 36 (b + c) - 256 c
        t.insert(
            [437, 181, 473],
            Program::build(
                &["b", "c", "d"],
                &[
                    ("s1", &[(false, 0, "b"), (false, 0, "c")]),
                    ("s2", &[(false, 0, "s1"), (false, 0, "d")]),
                    ("w1", &[(false, 0, "s2"), (false, 2, "s2")]),
                    ("w2", &[(false, 0, "s2"), (true, 3, "w1")]),
                    ("w3", &[(false, 9, "s2"), (false, 0, "w2")]),
                    ("t36", &[(false, 5, "s1"), (false, 2, "s1")]),
                    ("u", &[(false, 0, "w3"), (true, 0, "t36")]),
                    ("y", &[(false, 0, "u"), (true, 8, "c")]),
                ],
            )
            .expect("static schedule"),
        );
        // 8 (b + d) + 4 (b + c + d) + d + c
        t.insert(
            [12, 5, 13],
            Program::build(
                &["b", "c", "d"],
                &[
                    ("t1", &[(false, 0, "b"), (false, 0, "d")]),
                    ("t2", &[(false, 0, "t1"), (false, 0, "c")]),
                    ("t3", &[(false, 3, "t1"), (false, 2, "t2")]),
                    ("t4", &[(false, 0, "t3"), (false, 0, "d")]),
                    ("y", &[(false, 0, "t4"), (false, 0, "c")]),
                ],
            )
            .expect("static schedule"),
        );
        t
    });
    table.get(&m).ok_or(Error::UnknownFactorSet(m))
}

/// `m1 Yb + m2 Yc + m3 Yd` through the set's CSE schedule. Returns the value
/// and the number of additions executed.
pub fn cse_combine(yb: i64, yc: i64, yd: i64, set: &ExpansionFactorSet) -> Result<(i64, usize)> {
    let prog = cse_schedule(set.m)?;
    Ok((prog.run(&[yb, yc, yd])?, prog.additions()))
}

/// `alpha * ya` through the Booth terms, scaled by `2^frac_bits`.
fn booth_multiply(ya: i64, set: &ExpansionFactorSet, frac_bits: u32) -> Result<i64> {
    set.booth.iter().try_fold(0i64, |acc, t| {
        let k = u32::try_from(t.exp + frac_bits as i32).expect("frac_bits covers every term");
        let v = shl_checked(ya, k).ok_or(Error::Overflow("booth"))?;
        if t.negative { acc.checked_sub(v) } else { acc.checked_add(v) }.ok_or(Error::Overflow("booth"))
    })
}

/// The expansion-factor decoder without the final `1/alpha`: returns
/// `alpha_booth * Ya + m1 Yb + m2 Yc + m3 Yd` exactly.
pub fn frs_expansion_raw(x: &DoublyEncoded, set: &ExpansionFactorSet) -> Result<FixedPoint> {
    let [ya, yb, yc, yd] = compute_y(x)?;
    let f = set.frac_bits();
    let scaled_a = booth_multiply(ya, set, f)?;
    let (combo, _) = cse_combine(yb, yc, yd, set)?;
    let combo = shl_checked(combo, f).ok_or(Error::Overflow("frs_expansion"))?;
    let raw = scaled_a.checked_add(combo).ok_or(Error::Overflow("frs_expansion"))?;
    Ok(FixedPoint { raw, frac_bits: f })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FrsMethod {
    DempsterMacleod,
    ExpansionFactor(ExpansionFactorSet),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrsConfig {
    pub method: FrsMethod,
    /// Divide expansion-factor results by `alpha`.
    pub apply_inverse_alpha: bool,
    /// Re-quantize the fixed-point result to this many fractional bits.
    pub output_frac_bits: Option<u32>,
}

impl FrsConfig {
    pub fn dempster() -> Self {
        Self { method: FrsMethod::DempsterMacleod, apply_inverse_alpha: false, output_frac_bits: None }
    }

    pub fn expansion(set: ExpansionFactorSet) -> Self {
        Self { method: FrsMethod::ExpansionFactor(set), apply_inverse_alpha: false, output_frac_bits: None }
    }

    pub fn with_inverse_alpha(mut self, on: bool) -> Self {
        self.apply_inverse_alpha = on;
        self
    }

    pub fn factor_set(&self) -> Option<&ExpansionFactorSet> {
        match &self.method {
            FrsMethod::ExpansionFactor(s) => Some(s),
            FrsMethod::DempsterMacleod => None,
        }
    }

    pub fn label(&self) -> String {
        match &self.method {
            FrsMethod::DempsterMacleod => "dempster-macleod".into(),
            FrsMethod::ExpansionFactor(s) => format!("expansion {}", s.label()),
        }
    }
}

/// Runs the configured decoder, including output re-quantization but not
/// the division by `alpha`.
pub fn frs_fixed(x: &DoublyEncoded, cfg: &FrsConfig) -> Result<FixedPoint> {
    let v = match &cfg.method {
        FrsMethod::DempsterMacleod => frs_dempster(x)?,
        FrsMethod::ExpansionFactor(set) => frs_expansion_raw(x, set)?,
    };
    match cfg.output_frac_bits {
        Some(bits) => v.round_to(bits),
        None => Ok(v),
    }
}

/// Decoded value, divided by `alpha` when the configuration asks for it.
pub fn frs_value(x: &DoublyEncoded, cfg: &FrsConfig) -> Result<f64> {
    let v = frs_fixed(x, cfg)?.to_f64();
    Ok(match (&cfg.method, cfg.apply_inverse_alpha) {
        (FrsMethod::ExpansionFactor(set), true) => v / set.alpha,
        _ => v,
    })
}

/// Expansion-factor decoder; requires an expansion-factor configuration.
pub fn frs_expansion(x: &DoublyEncoded, cfg: &FrsConfig) -> Result<f64> {
    if cfg.factor_set().is_none() {
        return Err(Error::Config("frs_expansion needs an expansion-factor set".into()));
    }
    frs_value(x, cfg)
}

/// `(z1, z2, z1 z2)` in double precision.
pub fn zeta() -> [f64; 3] {
    let s = (2.0 + std::f64::consts::SQRT_2).sqrt();
    let t = (2.0 - std::f64::consts::SQRT_2).sqrt();
    [s + t, s - t, 2.0 * std::f64::consts::SQRT_2]
}

pub fn rounded_triple(alpha: f64) -> [i64; 3] {
    zeta().map(|z| (alpha * z).round() as i64)
}

/// `|| alpha zeta - round(alpha zeta) ||_2`
pub fn rounding_norm(alpha: f64) -> f64 {
    zeta().iter().map(|z| {
        let v = alpha * z;
        (v - v.round()).powi(2)
    }).sum::<f64>().sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaCandidate {
    pub alpha: f64,
    pub triple: [i64; 3],
    pub norm: f64,
}

/// Results of a grid scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaSearch {
    /// Global minimizer; ties go to the smallest `alpha`.
    pub best: AlphaCandidate,
    /// Best grid point of every distinct integer triple, ranked by norm.
    pub ranked: Vec<AlphaCandidate>,
    /// Per-triple bests, in increasing `alpha`, that beat every smaller
    /// `alpha`. These are the useful small-factor candidates.
    pub records: Vec<AlphaCandidate>,
}

/// Exhaustive grid search for expansion factors in `[lo, hi]` with spacing
/// `step`. Grid points with `alpha <= 1` are skipped.
pub fn search_alpha(lo: f64, hi: f64, step: f64) -> Result<AlphaSearch> {
    let empty = || Error::EmptyRange { lo, hi, step };
    if step.is_nan() || step <= 0.0 || !lo.is_finite() || !hi.is_finite() || lo < 1.0 || hi < lo {
        return Err(empty());
    }
    let n = ((hi - lo) / step + 1e-9).floor() as u64;
    let mut best: Option<AlphaCandidate> = None;
    let mut per_triple: HashMap<[i64; 3], AlphaCandidate> = HashMap::new();
    for i in 0..=n {
        let alpha = lo + i as f64 * step;
        if alpha <= 1.0 {
            continue;
        }
        let cand = AlphaCandidate { alpha, triple: rounded_triple(alpha), norm: rounding_norm(alpha) };
        if best.is_none_or(|b| cand.norm < b.norm) {
            best = Some(cand);
        }
        per_triple
            .entry(cand.triple)
            .and_modify(|c| {
                if cand.norm < c.norm {
                    *c = cand;
                }
            })
            .or_insert(cand);
    }
    let best = best.ok_or_else(empty)?;
    let mut ranked: Vec<AlphaCandidate> = per_triple.into_values().collect();
    ranked.sort_by(|a, b| a.norm.total_cmp(&b.norm).then(a.alpha.total_cmp(&b.alpha)));
    let mut by_alpha = ranked.clone();
    by_alpha.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    let mut records: Vec<AlphaCandidate> = Vec::new();
    for c in by_alpha {
        if records.last().is_none_or(|r| c.norm < r.norm) {
            records.push(c);
        }
    }
    Ok(AlphaSearch { best, ranked, records })
}
