use std::io::Write;
use std::path::Path;

use aidct::dct2d_ai;
use aidct::harness::{decode_block, Decoder};
use aidct::reference::Block;
use anyhow::{bail, Context, Result};
use serde::Serialize;

use crate::Format;

pub fn is_image(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref(),
        Some("pgm" | "pnm")
    )
}

/// Images are tiled into 8x8 blocks in raster order; other files are raw
/// little-endian i16 samples, 64 per block, row-major within a block.
pub fn read_blocks(path: &Path, wordlength: u32) -> Result<Vec<Block<i64>>> {
    if is_image(path) {
        let img = image::ImageReader::open(path)
            .with_context(|| format!("opening {}", path.display()))?
            .decode()
            .with_context(|| format!("decoding {}", path.display()))?
            .to_luma8();
        let (w, h) = img.dimensions();
        if w % 8 != 0 || h % 8 != 0 || w == 0 || h == 0 {
            bail!("image is {w}x{h}; both sides must be positive multiples of 8");
        }
        let shift = 8 - wordlength;
        let mut out = Vec::with_capacity((w / 8 * h / 8) as usize);
        for by in 0..h / 8 {
            for bx in 0..w / 8 {
                out.push(std::array::from_fn(|r| {
                    std::array::from_fn(|c| i64::from(img.get_pixel(bx * 8 + c as u32, by * 8 + r as u32)[0] >> shift))
                }));
            }
        }
        Ok(out)
    } else {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        if bytes.len() % 128 != 0 {
            bail!("raw input has {} bytes; expected a multiple of 128 (64 i16 samples per block)", bytes.len());
        }
        Ok(bytes
            .chunks_exact(128)
            .map(|chunk| {
                std::array::from_fn(|r| {
                    std::array::from_fn(|c| {
                        let k = 2 * (8 * r + c);
                        i64::from(i16::from_le_bytes([chunk[k], chunk[k + 1]]))
                    })
                })
            })
            .collect())
    }
}

pub fn transform_blocks(blocks: &[Block<i64>], decoder: &Decoder, descale: bool) -> Result<Vec<Block<f64>>> {
    let prepared = decoder.prepare();
    blocks
        .iter()
        .map(|b| {
            let coeffs = dct2d_ai(b)?;
            if descale {
                return Ok(decode_block(&coeffs, decoder)?);
            }
            let mut out = [[0.0; 8]; 8];
            for u in 0..8 {
                for v in 0..8 {
                    out[u][v] = prepared.decode(&coeffs[u][v])?;
                }
            }
            Ok(out)
        })
        .collect()
}

#[derive(Serialize)]
struct JsonBlock<'a> {
    block: usize,
    coefficients: &'a Block<f64>,
}

pub fn write_coefficients(w: &mut dyn Write, values: &[Block<f64>], format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            let mut c = csv::Writer::from_writer(w);
            c.write_record(["block", "u", "v", "value"])?;
            for (b, block) in values.iter().enumerate() {
                for (u, row) in block.iter().enumerate() {
                    for (v, x) in row.iter().enumerate() {
                        c.write_record([b.to_string(), u.to_string(), v.to_string(), x.to_string()])?;
                    }
                }
            }
            c.flush()?;
        }
        Format::Json => {
            let rows: Vec<_> =
                values.iter().enumerate().map(|(block, coefficients)| JsonBlock { block, coefficients }).collect();
            serde_json::to_writer(&mut *w, &rows)?;
            writeln!(w)?;
        }
        Format::Bin => {
            for x in values.iter().flatten().flatten() {
                w.write_all(&x.to_le_bytes())?;
            }
        }
    }
    Ok(())
}
