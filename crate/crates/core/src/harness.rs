//! Accuracy and cost measurement.
//!
//! A coefficient succeeds at tolerance `e` (a percentage) when the decoded,
//! descaled output is within `e/100 * |ref|` of the double-precision
//! orthonormal DCT. For references below [`ZERO_REFERENCE`] the relative
//! test is meaningless and an absolute floor of [`ZERO_FLOOR`] is used
//! instead.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arai::{dct2d_ai, DoublyEncoded, ExactDecoder, ScaleVector};
use crate::error::Result;
use crate::frs::{
    basis_product, cse_schedule, dempster_additions, frs_value, twelve_bit, FrsConfig, FrsMethod,
    COMPUTE_Y_ADDITIONS, DEMPSTER_FRAC_BITS,
};
use crate::program::multiplier;
use crate::reference::{dct2d_reference, to_real, Block};

/// Tolerances (percent) used by default, loosest first.
pub const DEFAULT_TOLERANCES: [f64; 7] = [10.0, 5.0, 1.0, 0.1, 0.05, 0.01, 0.005];

pub const ZERO_REFERENCE: f64 = 1e-9;
pub const ZERO_FLOOR: f64 = 1e-3;

/// Default decode precision for the exact decoder.
pub const EXACT_PRECISION: u32 = 160;

/// How coefficients are turned back into numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Decoder {
    /// Arbitrary-precision decode, no approximation.
    Exact { precision: u32 },
    Frs(FrsConfig),
}

impl Decoder {
    pub fn exact() -> Self {
        Decoder::Exact { precision: EXACT_PRECISION }
    }

    pub fn label(&self) -> String {
        match self {
            Decoder::Exact { precision } => format!("exact ({precision}-bit)"),
            Decoder::Frs(cfg) => cfg.label(),
        }
    }

    /// A reusable decoding context.
    pub fn prepare(&self) -> PreparedDecoder<'_> {
        match self {
            Decoder::Exact { precision } => PreparedDecoder::Exact(ExactDecoder::new(*precision)),
            Decoder::Frs(cfg) => PreparedDecoder::Frs(cfg),
        }
    }
}

pub enum PreparedDecoder<'a> {
    Exact(ExactDecoder),
    Frs(&'a FrsConfig),
}

impl PreparedDecoder<'_> {
    /// Value of `x` including any `1/alpha` the configuration applies, but
    /// not the Arai scale.
    pub fn decode(&self, x: &DoublyEncoded) -> Result<f64> {
        match self {
            PreparedDecoder::Exact(d) => Ok(d.decode(x).to_f64()),
            PreparedDecoder::Frs(cfg) => frs_value(x, cfg),
        }
    }
}

/// Decodes a transformed block to orthonormal DCT values: `1/alpha` and
/// `1/(s[u] s[v])` are always applied.
pub fn decode_block(coeffs: &Block<DoublyEncoded>, decoder: &Decoder) -> Result<Block<f64>> {
    let prepared = match decoder {
        Decoder::Frs(cfg) if !cfg.apply_inverse_alpha => {
            return decode_block(coeffs, &Decoder::Frs(cfg.clone().with_inverse_alpha(true)))
        }
        d => d.prepare(),
    };
    decode_block_prepared(coeffs, &prepared)
}

fn decode_block_prepared(coeffs: &Block<DoublyEncoded>, d: &PreparedDecoder<'_>) -> Result<Block<f64>> {
    let s = ScaleVector::get();
    let mut out = [[0.0; 8]; 8];
    for u in 0..8 {
        for v in 0..8 {
            out[u][v] = d.decode(&coeffs[u][v])? / s.scale2d(u, v);
        }
    }
    Ok(out)
}

/// Like [`decode_block`], but coefficients listed in `exact` bypass the
/// configured decoder and use an exact decode.
pub fn decode_block_mixed(
    coeffs: &Block<DoublyEncoded>,
    decoder: &Decoder,
    exact: &[(usize, usize)],
) -> Result<Block<f64>> {
    let mut out = decode_block(coeffs, decoder)?;
    if exact.is_empty() {
        return Ok(out);
    }
    let d = ExactDecoder::new(EXACT_PRECISION);
    let s = ScaleVector::get();
    for &(u, v) in exact {
        out[u][v] = d.decode(&coeffs[u][v]).to_f64() / s.scale2d(u, v);
    }
    Ok(out)
}

pub fn within_tolerance(out: f64, reference: f64, tolerance_pct: f64) -> bool {
    if reference.abs() < ZERO_REFERENCE {
        out.abs() <= ZERO_FLOOR
    } else {
        (out - reference).abs() <= tolerance_pct / 100.0 * reference.abs()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CoefficientStats {
    pub max_abs_error: f64,
    pub mean_abs_error: f64,
    /// Successes per tolerance, same order as the report's tolerances.
    pub within: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessReport {
    pub method: String,
    pub wordlength: u32,
    pub block_count: usize,
    pub tolerances: Vec<f64>,
    /// Success rate in percent, per tolerance.
    pub success_rates: Vec<f64>,
    pub max_abs_error: f64,
    pub mean_abs_error: f64,
    /// Row-major over `(u, v)`.
    pub coefficients: Vec<CoefficientStats>,
}

#[derive(Clone)]
struct Accum {
    max: [f64; 64],
    sum: [f64; 64],
    within: Vec<[u64; 64]>,
}

impl Accum {
    fn new(n_tol: usize) -> Self {
        Self { max: [0.0; 64], sum: [0.0; 64], within: vec![[0; 64]; n_tol] }
    }

    fn merge(mut self, other: Accum) -> Accum {
        for i in 0..64 {
            self.max[i] = self.max[i].max(other.max[i]);
            self.sum[i] += other.sum[i];
            for (a, b) in self.within.iter_mut().zip(&other.within) {
                a[i] += b[i];
            }
        }
        self
    }
}

/// Runs every block through `dct2d_ai`, the decoder and the descaling, and
/// compares against [`dct2d_reference`].
pub fn measure_success(
    blocks: &[Block<i64>],
    decoder: &Decoder,
    tolerances: &[f64],
    wordlength: u32,
) -> Result<SuccessReport> {
    let cfg_owned;
    let decoder = match decoder {
        Decoder::Frs(cfg) if !cfg.apply_inverse_alpha => {
            cfg_owned = Decoder::Frs(cfg.clone().with_inverse_alpha(true));
            &cfg_owned
        }
        d => d,
    };
    let n_tol = tolerances.len();
    let acc = blocks
        .par_iter()
        .try_fold(
            || (decoder.prepare(), Accum::new(n_tol)),
            |(prepared, mut acc), block| -> Result<_> {
                let coeffs = dct2d_ai(block)?;
                let out = decode_block_prepared(&coeffs, &prepared)?;
                let reference = dct2d_reference(&to_real(block));
                for u in 0..8 {
                    for v in 0..8 {
                        let i = 8 * u + v;
                        let err = (out[u][v] - reference[u][v]).abs();
                        acc.max[i] = acc.max[i].max(err);
                        acc.sum[i] += err;
                        for (t, &tol) in tolerances.iter().enumerate() {
                            if within_tolerance(out[u][v], reference[u][v], tol) {
                                acc.within[t][i] += 1;
                            }
                        }
                    }
                }
                Ok((prepared, acc))
            },
        )
        .map(|r| r.map(|(_, acc)| acc))
        .try_reduce(|| Accum::new(n_tol), |a, b| Ok(a.merge(b)))?;

    let n = blocks.len();
    let total = (n * 64) as f64;
    let success_rates = (0..n_tol)
        .map(|t| {
            if n == 0 {
                100.0
            } else {
                100.0 * acc.within[t].iter().sum::<u64>() as f64 / total
            }
        })
        .collect();
    let coefficients = (0..64)
        .map(|i| CoefficientStats {
            max_abs_error: acc.max[i],
            mean_abs_error: if n == 0 { 0.0 } else { acc.sum[i] / n as f64 },
            within: (0..n_tol).map(|t| acc.within[t][i]).collect(),
        })
        .collect();
    Ok(SuccessReport {
        method: decoder.label(),
        wordlength,
        block_count: n,
        tolerances: tolerances.to_vec(),
        success_rates,
        max_abs_error: acc.max.iter().copied().fold(0.0, f64::max),
        mean_abs_error: if n == 0 { 0.0 } else { acc.sum.iter().sum::<f64>() / total },
        coefficients,
    })
}

/// `count` blocks of uniform unsigned `wordlength`-bit samples.
pub fn random_blocks(count: usize, wordlength: u32, seed: u64) -> Vec<Block<i64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hi = (1i64 << wordlength) - 1;
    (0..count)
        .map(|_| {
            let mut b = [[0i64; 8]; 8];
            for v in b.iter_mut().flatten() {
                *v = rng.gen_range(0..=hi);
            }
            b
        })
        .collect()
}

/// Adder cost of one output coefficient.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub method: String,
    pub additions: usize,
    /// Additions of the integer-combination (CSE) stage, expansion method only.
    pub cse_additions: Option<usize>,
    pub adder_bits: u64,
    pub input_bits: u32,
}

/// Counts the adders the configured decoder executes on one coefficient,
/// with adder widths estimated for `input_bits`-bit signed coordinates.
pub fn complexity_report(cfg: &FrsConfig, input_bits: u32) -> Result<ComplexityReport> {
    let b = 1u128 << (input_bits - 1);
    match &cfg.method {
        FrsMethod::DempsterMacleod => {
            let mut bits = 0u64;
            let mut terms = Vec::with_capacity(16);
            for q in 0..4 {
                for p in 0..4 {
                    match basis_product(q, p) {
                        None => terms.push(b << DEMPSTER_FRAC_BITS),
                        Some(bp) => {
                            let k = twelve_bit(bp);
                            let prog = multiplier(k.numerator).expect("tabulated");
                            bits += prog.program.adder_bits(input_bits);
                            terms.push(b * k.numerator as u128 * (1 << (DEMPSTER_FRAC_BITS - k.shift)));
                        }
                    }
                }
            }
            let (_, sum_bits) = accumulate(&terms);
            Ok(ComplexityReport {
                method: cfg.label(),
                additions: dempster_additions(),
                cse_additions: None,
                adder_bits: bits + sum_bits,
                input_bits,
            })
        }
        FrsMethod::ExpansionFactor(set) => {
            let schedule = cse_schedule(set.m)?;
            let (_, ya_bits) = accumulate(&[b, 4 * b, 4 * b, 8 * b]);
            let (_, yb_bits) = accumulate(&[b, b, 2 * b, 2 * b, 2 * b, 2 * b]);
            let (_, yd_bits) = accumulate(&[b; 6]);
            let y_bound = 10 * b;
            let y_bits = width(y_bound);
            let f = set.frac_bits();
            let ya_bound = 17 * b;
            let booth_terms: Vec<u128> =
                set.booth.iter().map(|t| ya_bound << (t.exp + f as i32) as u32).collect();
            let (booth_sum, booth_bits) = accumulate(&booth_terms);
            let cse_bound = set.m.iter().map(|&m| m as u128).sum::<u128>() * y_bound;
            let final_bits = u64::from(width(booth_sum + (cse_bound << f)));
            let cse_adds = schedule.additions();
            Ok(ComplexityReport {
                method: cfg.label(),
                additions: COMPUTE_Y_ADDITIONS + cse_adds + set.booth.len().saturating_sub(1) + 1,
                cse_additions: Some(cse_adds),
                adder_bits: ya_bits
                    + 2 * yb_bits
                    + yd_bits
                    + schedule.adder_bits(y_bits)
                    + booth_bits
                    + final_bits,
                input_bits,
            })
        }
    }
}

fn width(bound: u128) -> u32 {
    128 - bound.max(1).leading_zeros() + 1
}

/// Sequential accumulation of terms with the given magnitude bounds:
/// returns the final bound and the summed adder widths.
fn accumulate(bounds: &[u128]) -> (u128, u64) {
    let mut total = bounds.first().copied().unwrap_or(0);
    let mut bits = 0;
    for &t in &bounds[1.min(bounds.len())..] {
        total += t;
        bits += u64::from(width(total));
    }
    (total, bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frs::ExpansionFactorSet;

    #[test]
    fn tolerance_rule() {
        assert!(within_tolerance(100.5, 100.0, 1.0));
        assert!(!within_tolerance(101.5, 100.0, 1.0));
        assert!(within_tolerance(5e-4, 0.0, 0.005));
        assert!(!within_tolerance(2e-3, 1e-12, 10.0));
    }

    #[test]
    fn exact_decoder_always_succeeds() {
        let blocks = random_blocks(50, 8, 7);
        let r = measure_success(&blocks, &Decoder::exact(), &DEFAULT_TOLERANCES, 8).unwrap();
        assert!(r.success_rates.iter().all(|&s| s == 100.0), "{:?}", r.success_rates);
        assert_eq!(r.block_count, 50);
        assert_eq!(r.coefficients.len(), 64);
    }

    #[test]
    fn rates_are_monotone() {
        let blocks = random_blocks(200, 8, 11);
        for cfg in [FrsConfig::dempster(), FrsConfig::expansion(ExpansionFactorSet::small())] {
            let r = measure_success(&blocks, &Decoder::Frs(cfg), &DEFAULT_TOLERANCES, 8).unwrap();
            assert!(r.success_rates.windows(2).all(|w| w[0] >= w[1]), "{:?}", r.success_rates);
        }
    }

    #[test]
    fn exact_override_touches_one_coefficient() {
        let block = random_blocks(1, 8, 21)[0];
        let coeffs = dct2d_ai(&block).unwrap();
        let d = Decoder::Frs(FrsConfig::expansion(ExpansionFactorSet::small()));
        let base = decode_block(&coeffs, &d).unwrap();
        let mixed = decode_block_mixed(&coeffs, &d, &[(2, 5)]).unwrap();
        let reference = dct2d_reference(&to_real(&block));
        assert!((mixed[2][5] - reference[2][5]).abs() < 1e-9);
        for u in 0..8 {
            for v in 0..8 {
                if (u, v) != (2, 5) {
                    assert_eq!(mixed[u][v].to_bits(), base[u][v].to_bits());
                }
            }
        }
    }

    #[test]
    fn random_blocks_are_seeded() {
        assert_eq!(random_blocks(3, 4, 1), random_blocks(3, 4, 1));
        assert_ne!(random_blocks(3, 4, 1), random_blocks(3, 4, 2));
        assert!(random_blocks(20, 4, 5).iter().flatten().flatten().all(|&v| (0..16).contains(&v)));
    }

    #[test]
    fn complexity_counts() {
        let l = complexity_report(&FrsConfig::expansion(ExpansionFactorSet::large()), 16).unwrap();
        let s = complexity_report(&FrsConfig::expansion(ExpansionFactorSet::small()), 16).unwrap();
        let d = complexity_report(&FrsConfig::dempster(), 16).unwrap();
        assert_eq!(l.cse_additions, Some(8));
        assert_eq!(s.cse_additions, Some(5));
        assert_eq!(l.additions, 18 + 8 + 6 + 1);
        assert_eq!(s.additions, 18 + 5 + 4 + 1);
        assert_eq!(d.additions, 59);
        assert!(s.adder_bits < l.adder_bits);
        assert_eq!(multiplier(8).unwrap().additions(), 0);
    }
}
