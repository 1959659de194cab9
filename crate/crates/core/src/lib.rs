//! Error-free 8x8 2-D DCT over a bivariate algebraic-integer ring.
//!
//! The transform runs entirely on integer coordinates over the basis
//! `{1, z1, z2, z1*z2}`; the only approximate stage is the final
//! reconstruction step (FRS) that maps each coefficient back to a binary
//! fixed-point value.

pub mod arai;
pub mod datapath;
pub mod error;
pub mod frs;
pub mod harness;
pub mod precise;
pub mod program;
pub mod reference;
pub mod ring;

pub use arai::{dct1d_ai, dct2d_ai, decode_exact, DoublyEncoded, ScaleVector, Z4Vector8};
pub use error::{Error, Result};
pub use ring::{encode_integer, AiConstant, Z4Element};
