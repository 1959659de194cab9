//! The Arai-Agui-Nakajima 8-point DCT carried out over `Z[z1, z2]`, and the
//! separable 8x8 transform built from it.
//!
//! Every multiplier of the flow graph is one of the four [`AiConstant`]s, so
//! the whole transform is integer adds, subtracts and wired shifts. Outputs
//! are exact; the per-index scale of the Arai graph (and the factor 4 carried
//! by the constants) is exposed as a [`ScaleVector`] instead of being divided
//! out.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::precise::{Fixed, RingConstants, MIN_PRECISION};
use crate::reference::{dct_matrix, dct_matrix_precise, Block};
use crate::ring::{encode_integer, AiConstant, Z4Element};

pub type Z4Vector8 = [Z4Element; 8];

/// Precision used when deriving the scale vector.
const SCALE_PRECISION: u32 = 160;

/// One 2-D coefficient: `coords[q][p]` is basis coordinate `p` produced by
/// the row core that handled column-pass channel `q`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DoublyEncoded {
    pub coords: [[i64; 4]; 4],
}

impl DoublyEncoded {
    pub const ZERO: Self = Self { coords: [[0; 4]; 4] };

    pub fn channel(&self, q: usize) -> Z4Element {
        Z4Element::from_coords(self.coords[q])
    }

    pub fn checked_add(&self, rhs: &Self) -> Result<Self> {
        let mut out = Self::ZERO;
        for q in 0..4 {
            for p in 0..4 {
                out.coords[q][p] = self.coords[q][p]
                    .checked_add(rhs.coords[q][p])
                    .ok_or(Error::Overflow("doubly encoded add"))?;
            }
        }
        Ok(out)
    }

    /// Value at `precision` bits, with no approximation of the basis products.
    pub fn decode_exact(&self, precision: u32) -> Result<Fixed> {
        if precision < MIN_PRECISION {
            return Err(Error::Precision(precision));
        }
        Ok(ExactDecoder::new(precision).decode(self))
    }
}

/// Caches the sixteen basis products `v(q) v(p)` at one precision.
#[derive(Clone, Debug)]
pub struct ExactDecoder {
    products: Vec<Fixed>,
    bits: u32,
}

impl ExactDecoder {
    pub fn new(bits: u32) -> Self {
        let k = RingConstants::new(bits);
        let basis = [Fixed::from_int(1, bits), k.z1.clone(), k.z2.clone(), k.z1z2.clone()];
        let mut products = Vec::with_capacity(16);
        for q in &basis {
            for p in &basis {
                products.push(q * p);
            }
        }
        Self { products, bits }
    }

    pub fn precision(&self) -> u32 {
        self.bits
    }

    pub fn decode(&self, x: &DoublyEncoded) -> Fixed {
        let mut acc = Fixed::zero(self.bits);
        for q in 0..4 {
            for p in 0..4 {
                let c = x.coords[q][p];
                if c != 0 {
                    acc = &acc + &self.products[4 * q + p].mul_int(c);
                }
            }
        }
        acc
    }
}

/// Free-function form of [`DoublyEncoded::decode_exact`].
pub fn decode_exact(x: &DoublyEncoded, precision: u32) -> Result<Fixed> {
    x.decode_exact(precision)
}

/// 8-point Arai DCT over the ring.
///
/// Branches that skip a constant multiplier are shifted left by 2 so they
/// line up with the factor 4 carried by the constants. Outputs 0 and 4
/// never meet a multiplier and are left unshifted.
pub fn dct1d_ai(x: &Z4Vector8) -> Result<Z4Vector8> {
    let add = |a: Z4Element, b: Z4Element| a.checked_add(b);
    let sub = |a: Z4Element, b: Z4Element| a.checked_sub(b);
    let x4 = |a: Z4Element| a.shift_left(2);

    let t0 = add(x[0], x[7])?;
    let t7 = sub(x[0], x[7])?;
    let t1 = add(x[1], x[6])?;
    let t6 = sub(x[1], x[6])?;
    let t2 = add(x[2], x[5])?;
    let t5 = sub(x[2], x[5])?;
    let t3 = add(x[3], x[4])?;
    let t4 = sub(x[3], x[4])?;

    // even half
    let e10 = add(t0, t3)?;
    let e13 = sub(t0, t3)?;
    let e11 = add(t1, t2)?;
    let e12 = sub(t1, t2)?;
    let m1 = add(e12, e13)?.mul_constant(AiConstant::C4)?;
    let e13s = x4(e13)?;

    // odd half
    let o10 = add(t4, t5)?;
    let o11 = add(t5, t6)?;
    let o12 = add(t6, t7)?;
    let m5 = sub(o10, o12)?.mul_constant(AiConstant::C6)?;
    let m2 = add(o10.mul_constant(AiConstant::C2MinusC6)?, m5)?;
    let m4 = add(o12.mul_constant(AiConstant::C2PlusC6)?, m5)?;
    let m3 = o11.mul_constant(AiConstant::C4)?;
    let t7s = x4(t7)?;
    let z11 = add(t7s, m3)?;
    let z13 = sub(t7s, m3)?;

    Ok([
        add(e10, e11)?,
        add(z11, m4)?,
        add(e13s, m1)?,
        sub(z13, m2)?,
        sub(e10, e11)?,
        add(z13, m2)?,
        sub(e13s, m1)?,
        sub(z11, m4)?,
    ])
}

/// The column core: one input column of integer samples.
pub fn column_core(col: &[i64; 8]) -> Result<Z4Vector8> {
    dct1d_ai(&col.map(encode_integer))
}

/// Row core `q`: the channel-`q` integers of one transposed row.
pub fn row_core(row: &Z4Vector8, q: usize) -> Result<Z4Vector8> {
    dct1d_ai(&row.map(|x| encode_integer(x.coords()[q])))
}

/// Output of the column pass: `out[u][c]` is frequency `u` of input column `c`.
pub fn column_pass(block: &Block<i64>) -> Result<Block<Z4Element>> {
    let mut out = [[Z4Element::ZERO; 8]; 8];
    for c in 0..8 {
        let y = column_core(&std::array::from_fn(|r| block[r][c]))?;
        for u in 0..8 {
            out[u][c] = y[u];
        }
    }
    Ok(out)
}

/// Row pass over a transposed intermediate: `rows[u]` holds the column-pass
/// outputs for frequency `u`. Each channel `q` is an independent integer
/// plane run through its own 1-D core.
pub fn row_pass(rows: &Block<Z4Element>) -> Result<Block<DoublyEncoded>> {
    let mut out = [[DoublyEncoded::ZERO; 8]; 8];
    for (u, row) in rows.iter().enumerate() {
        for q in 0..4 {
            let y = row_core(row, q)?;
            for v in 0..8 {
                out[u][v].coords[q] = y[v].coords();
            }
        }
    }
    Ok(out)
}

/// Full 2-D transform of an integer block.
///
/// `out[u][v]` corresponds to `(C A C^T)[u][v]` up to the scale
/// `s[u] * s[v]`.
pub fn dct2d_ai(block: &Block<i64>) -> Result<Block<DoublyEncoded>> {
    row_pass(&column_pass(block)?)
}

/// Per-index scale of [`dct1d_ai`] relative to the orthonormal DCT-II.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleVector {
    pub s: [f64; 8],
}

impl ScaleVector {
    /// Scale of 2-D coefficient `(u, v)`.
    pub fn scale2d(&self, u: usize, v: usize) -> f64 {
        self.s[u] * self.s[v]
    }

    /// The shared instance, derived once.
    pub fn get() -> &'static ScaleVector {
        static SCALE: std::sync::OnceLock<ScaleVector> = std::sync::OnceLock::new();
        SCALE.get_or_init(|| derive_scale_vector().expect("Arai flow graph must be diagonal"))
    }
}

/// Decoded impulse responses: `resp[k][j]` is output `k` for input `e_j`.
fn impulse_responses(bits: u32) -> Result<Vec<Vec<Fixed>>> {
    let k = RingConstants::new(bits);
    let mut resp = vec![vec![Fixed::zero(bits); 8]; 8];
    for j in 0..8 {
        let mut e = [Z4Element::ZERO; 8];
        e[j] = Z4Element::ONE;
        let y = dct1d_ai(&e)?;
        for (kk, out) in y.iter().enumerate() {
            resp[kk][j] = out.decode_with(&k);
        }
    }
    Ok(resp)
}

/// Solves `dct1d_ai(e_j)[k] = s[k] C[k][j]` for the diagonal scale and
/// checks the relation really is diagonal.
pub fn derive_scale_vector() -> Result<ScaleVector> {
    let resp = impulse_responses(SCALE_PRECISION)?;
    let c = dct_matrix();
    let mut s = [0.0; 8];
    for k in 0..8 {
        // rows of C are unit vectors, so the least-squares fit is a dot product
        s[k] = (0..8).map(|j| resp[k][j].to_f64() * c[k][j]).sum();
        let residual = (0..8)
            .map(|j| (resp[k][j].to_f64() - s[k] * c[k][j]).abs())
            .fold(0.0, f64::max);
        if residual >= 1e-9 || s[k] <= 0.0 {
            return Err(Error::NotDiagonal { row: k, residual });
        }
    }
    Ok(ScaleVector { s })
}

/// The scale vector at arbitrary precision, for exactness checks that need
/// more than `f64`.
pub fn derive_scale_vector_precise(bits: u32) -> Result<[Fixed; 8]> {
    let resp = impulse_responses(bits)?;
    let c = dct_matrix_precise(bits);
    Ok(std::array::from_fn(|k| resp[k][0].div(&c[k][0])))
}
