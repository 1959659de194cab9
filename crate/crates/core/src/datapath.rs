//! Cycle-approximate model of the streaming architecture.
//!
//! One tick is one period of the core clock. Each tick the decimator hands
//! eight consecutive stream samples to the column core as one column; the
//! transpose buffer collects eight column outputs and releases the transposed
//! block, whose rows are multiplexed one per tick into the four row cores
//! (one per channel) and then through eight parallel reconstruction units.
//! Each core is a single fixed latency.

use std::collections::VecDeque;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::arai::{column_core, row_core, DoublyEncoded, Z4Vector8};
use crate::error::{Error, Result};
use crate::frs::{frs_value, FrsConfig};
use crate::reference::Block;
use crate::ring::Z4Element;

pub const COLUMN_CORE_LATENCY: usize = 4;
pub const ROW_CORE_LATENCY: usize = 4;
pub const FRS_LATENCY: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamConfig {
    pub clock_hz: u64,
    pub wordlength: u32,
    pub frs: FrsConfig,
}

/// Eight chains of clocked registers, one per column-core output.
#[derive(Clone, Debug, Default)]
pub struct TransposeBuffer {
    fifo: [Z4Vector8; 8],
    loaded: usize,
}

impl TransposeBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Clocks one column in. Every eighth call returns the transpose of the
    /// last eight columns: `out[i][n]` is element `i` of column `n`.
    pub fn step(&mut self, column: Z4Vector8) -> Option<Block<Z4Element>> {
        self.fifo.rotate_left(1);
        self.fifo[7] = column;
        self.loaded += 1;
        if self.loaded < 8 {
            return None;
        }
        self.loaded = 0;
        Some(std::array::from_fn(|i| std::array::from_fn(|n| self.fifo[n][i])))
    }
}

pub fn transpose_buffer_step(tb: &mut TransposeBuffer, column: Z4Vector8) -> Option<Block<Z4Element>> {
    tb.step(column)
}

struct DelayLine<T> {
    slots: VecDeque<Option<T>>,
}

impl<T> DelayLine<T> {
    fn new(latency: usize) -> Self {
        Self { slots: (0..latency).map(|_| None).collect() }
    }

    fn step(&mut self, input: Option<T>) -> Option<T> {
        self.slots.push_back(input);
        self.slots.pop_front().flatten()
    }
}

/// The block held in stream positions `64 b .. 64 b + 64`, with
/// `A[i][n] = stream[64 b + 8 n + i]`.
pub fn block_from_stream(stream: &[i64], b: usize) -> Block<i64> {
    std::array::from_fn(|i| std::array::from_fn(|n| stream[64 * b + 8 * n + i]))
}

/// Inverse of [`block_from_stream`] over a sequence of blocks.
pub fn stream_from_blocks(blocks: &[Block<i64>]) -> Vec<i64> {
    let mut out = Vec::with_capacity(blocks.len() * 64);
    for b in blocks {
        for n in 0..8 {
            out.extend(b.iter().map(|row| row[n]));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamBlock {
    pub index: usize,
    pub coefficients: Block<DoublyEncoded>,
    /// Reconstruction-unit outputs.
    pub values: Block<f64>,
    /// Tick on which the last row left the reconstruction units.
    pub completed_tick: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameTiming {
    pub width: u32,
    pub height: u32,
    pub blocks_per_frame: u64,
    pub frame_rate: Ratio<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub clock_hz: u64,
    pub wordlength: u32,
    pub blocks: usize,
    pub ticks: u64,
    /// Ticks from a block's first column entering to its last output.
    pub latency_ticks: u64,
    pub block_rate: Ratio<u64>,
    pub pixel_rate: Ratio<u64>,
    pub frame: Option<FrameTiming>,
}

impl TimingReport {
    pub fn with_frame(mut self, width: u32, height: u32) -> Result<Self> {
        self.frame = Some(frame_timing(self.clock_hz, width, height)?);
        Ok(self)
    }
}

pub fn block_rate(clock_hz: u64) -> Ratio<u64> {
    Ratio::new(clock_hz, 8)
}

pub fn pixel_rate(clock_hz: u64) -> Ratio<u64> {
    Ratio::from_integer(8 * clock_hz)
}

/// Frame rate for a `width x height` frame tiled by 8x8 blocks.
pub fn frame_timing(clock_hz: u64, width: u32, height: u32) -> Result<FrameTiming> {
    if width == 0 || height == 0 || !width.is_multiple_of(8) || !height.is_multiple_of(8) {
        return Err(Error::Config(format!("{width}x{height} is not a whole number of 8x8 blocks")));
    }
    let blocks_per_frame = u64::from(width / 8) * u64::from(height / 8);
    Ok(FrameTiming {
        width,
        height,
        blocks_per_frame,
        frame_rate: block_rate(clock_hz) / blocks_per_frame,
    })
}

pub fn ratio_to_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Simulates the architecture on a sample stream.
pub fn run_stream(stream: &[i64], cfg: &StreamConfig) -> Result<(Vec<StreamBlock>, TimingReport)> {
    if !stream.len().is_multiple_of(64) {
        return Err(Error::StreamLength(stream.len()));
    }
    let n_blocks = stream.len() / 64;
    let n_columns = 8 * n_blocks;

    let mut column_stage = DelayLine::new(COLUMN_CORE_LATENCY);
    let mut tb = TransposeBuffer::new();
    let mut mux: VecDeque<(usize, usize, Z4Vector8)> = VecDeque::new();
    let mut row_stage = DelayLine::new(ROW_CORE_LATENCY);
    let mut frs_stage = DelayLine::new(FRS_LATENCY);

    let mut pending: VecDeque<(Block<DoublyEncoded>, Block<f64>, usize)> = VecDeque::new();
    let mut done = Vec::with_capacity(n_blocks);
    let mut tb_block = 0;
    let mut tick = 0u64;

    while done.len() < n_blocks {
        let t = tick as usize;
        let column = if t < n_columns {
            let col: [i64; 8] = stream[8 * t..8 * t + 8].try_into().expect("eight samples");
            Some(column_core(&col)?)
        } else {
            None
        };
        if let Some(col) = column_stage.step(column) {
            if let Some(rows) = tb.step(col) {
                mux.extend(rows.into_iter().enumerate().map(|(u, r)| (tb_block, u, r)));
                tb_block += 1;
            }
        }

        let row = match mux.pop_front() {
            Some((b, u, r)) => {
                let mut out = [DoublyEncoded::ZERO; 8];
                for q in 0..4 {
                    let y = row_core(&r, q)?;
                    for v in 0..8 {
                        out[v].coords[q] = y[v].coords();
                    }
                }
                Some((b, u, out))
            }
            None => None,
        };
        let reconstructed = match row_stage.step(row) {
            Some((b, u, coeffs)) => {
                let mut vals = [0.0; 8];
                for (v, x) in vals.iter_mut().zip(&coeffs) {
                    *v = frs_value(x, &cfg.frs)?;
                }
                Some((b, u, coeffs, vals))
            }
            None => None,
        };
        if let Some((b, u, coeffs, vals)) = frs_stage.step(reconstructed) {
            let slot = b - done.len();
            while pending.len() <= slot {
                pending.push_back(([[DoublyEncoded::ZERO; 8]; 8], [[0.0; 8]; 8], 0));
            }
            let entry = &mut pending[slot];
            entry.0[u] = coeffs;
            entry.1[u] = vals;
            entry.2 += 1;
            while pending.front().is_some_and(|e| e.2 == 8) {
                let (coefficients, values, _) = pending.pop_front().expect("front");
                done.push(StreamBlock { index: done.len(), coefficients, values, completed_tick: tick });
            }
        }
        tick += 1;
    }

    let latency_ticks = done.first().map_or(0, |b| b.completed_tick + 1);
    let report = TimingReport {
        clock_hz: cfg.clock_hz,
        wordlength: cfg.wordlength,
        blocks: n_blocks,
        ticks: tick,
        latency_ticks,
        block_rate: block_rate(cfg.clock_hz),
        pixel_rate: pixel_rate(cfg.clock_hz),
        frame: None,
    };
    Ok((done, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arai::dct2d_ai;
    use crate::frs::{frs_value, ExpansionFactorSet};
    use crate::harness::random_blocks;
    use crate::ring::encode_integer;

    fn cfg(frs: FrsConfig) -> StreamConfig {
        StreamConfig { clock_hz: 312_402_000, wordlength: 8, frs }
    }

    #[test]
    fn transpose_of_random_block() {
        let mut tb = TransposeBuffer::new();
        let cols: Vec<Z4Vector8> = (0..8)
            .map(|n| std::array::from_fn(|i| Z4Element::new(i as i64, n as i64, (i * n) as i64, 7)))
            .collect();
        for (k, c) in cols.iter().enumerate() {
            let out = tb.step(*c);
            if k < 7 {
                assert!(out.is_none());
            } else {
                let out = out.unwrap();
                for i in 0..8 {
                    for n in 0..8 {
                        assert_eq!(out[i][n], cols[n][i]);
                    }
                }
            }
        }
    }

    #[test]
    fn transpose_of_constant_columns() {
        let mut tb = TransposeBuffer::new();
        let mut last = None;
        for n in 0..16 {
            last = transpose_buffer_step(&mut tb, [encode_integer(n % 8); 8]).or(last);
        }
        for row in last.unwrap() {
            for (n, x) in row.iter().enumerate() {
                assert_eq!(*x, encode_integer(n as i64));
            }
        }
    }

    #[test]
    fn stream_layout_round_trips() {
        let blocks = random_blocks(3, 8, 9);
        let s = stream_from_blocks(&blocks);
        for (b, block) in blocks.iter().enumerate() {
            assert_eq!(&block_from_stream(&s, b), block);
        }
        assert_eq!(s[8 * 2 + 3], blocks[0][3][2]);
    }

    #[test]
    fn matches_batch_path() {
        let blocks = random_blocks(20, 8, 3);
        let c = cfg(FrsConfig::expansion(ExpansionFactorSet::large()).with_inverse_alpha(true));
        let (out, report) = run_stream(&stream_from_blocks(&blocks), &c).unwrap();
        assert_eq!(out.len(), 20);
        for (b, sb) in out.iter().enumerate() {
            assert_eq!(sb.index, b);
            let batch = dct2d_ai(&blocks[b]).unwrap();
            assert_eq!(sb.coefficients, batch);
            for (vals, row) in sb.values.iter().zip(&batch) {
                for (val, x) in vals.iter().zip(row) {
                    assert_eq!(val.to_bits(), frs_value(x, &c.frs).unwrap().to_bits());
                }
            }
        }
        assert_eq!(report.blocks, 20);
        assert_eq!(report.ticks, out.last().unwrap().completed_tick + 1);
    }

    #[test]
    fn latency_is_constant() {
        let blocks = random_blocks(10, 8, 4);
        let (out, report) = run_stream(&stream_from_blocks(&blocks), &cfg(FrsConfig::dempster())).unwrap();
        let want = (14 + COLUMN_CORE_LATENCY + ROW_CORE_LATENCY + FRS_LATENCY + 1) as u64;
        assert_eq!(report.latency_ticks, want);
        for b in &out {
            assert_eq!(b.completed_tick + 1 - 8 * b.index as u64, want);
        }
    }

    #[test]
    fn rejects_partial_blocks() {
        assert_eq!(run_stream(&[0; 65], &cfg(FrsConfig::dempster())).unwrap_err(), Error::StreamLength(65));
        let (out, report) = run_stream(&[], &cfg(FrsConfig::dempster())).unwrap();
        assert!(out.is_empty());
        assert_eq!(report.ticks, 0);
    }

    #[test]
    fn rate_identities() {
        for clock in [312_402_000u64, 307_787_000, 1, 7] {
            assert_eq!(block_rate(clock) * 64, pixel_rate(clock));
            assert_eq!(block_rate(clock) * 8, Ratio::from_integer(clock));
        }
        let f = frame_timing(312_402_000, 1920, 1080).unwrap();
        assert_eq!(f.blocks_per_frame, 32_400);
        assert_eq!(f.frame_rate, Ratio::new(312_402_000, 8 * 32_400));
        assert!(frame_timing(1, 1921, 1080).is_err());
    }
}
