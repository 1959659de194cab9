#![allow(clippy::needless_range_loop)]

use std::process::ExitCode;
use std::time::Instant;

use aidct::datapath::{block_rate, frame_timing, ratio_to_f64, run_stream, stream_from_blocks, StreamConfig};
use aidct::frs::{
    booth_value, cse_combine, search_alpha, twelve_bit, BoothTerm, ExpansionFactorSet, FrsConfig,
    TWELVE_BIT_CONSTANTS,
};
use aidct::harness::{
    decode_block, decode_block_mixed, measure_success, random_blocks, Decoder, DEFAULT_TOLERANCES,
};
use aidct::precise::RingConstants;
use aidct::program::multiplier_programs;
use aidct::{dct2d_ai, Z4Element};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn exactness() -> Outcome {
    let blocks = random_blocks(10_000, 8, 1);
    let r = measure_success(&blocks, &Decoder::exact(), &[], 8).map_err(|e| e.to_string())?;
    check(r.max_abs_error < 1e-9, format!("10000 blocks, max abs error {:.3e}", r.max_abs_error))
}

fn ring_closure() -> Outcome {
    let (z1, z2, z12) = (Z4Element::Z1, Z4Element::Z2, Z4Element::Z1Z2);
    let mul = |a: Z4Element, b: Z4Element| a.multiply(b).unwrap();
    let relations = [
        (mul(z1, z1), Z4Element::new(4, 0, 0, 1)),
        (mul(z2, z2), Z4Element::new(4, 0, 0, -1)),
        (mul(mul(z1, z1), z2), Z4Element::new(0, 2, 2, 0)),
        (mul(mul(z1, z2), z2), Z4Element::new(0, 2, -2, 0)),
        (mul(z12, z12), Z4Element::new(8, 0, 0, 0)),
    ];
    if let Some((got, want)) = relations.iter().find(|(g, w)| g != w) {
        return Err(format!("relation gives {got:?}, expected {want:?}"));
    }
    let k = RingConstants::new(80);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..100_000 {
        let mut el = || Z4Element::from_coords(std::array::from_fn(|_| rng.gen_range(-(1 << 20)..=1 << 20)));
        let (x, y) = (el(), el());
        let lhs = mul(x, y).decode_with(&k);
        let rhs = &x.decode_with(&k) * &y.decode_with(&k);
        worst = worst.max((&lhs - &rhs).abs().to_f64());
    }
    check(worst < 1e-6, format!("5 relations exact, 100000 pairs, worst deviation {worst:.3e}"))
}

fn multiplier_programs_exact() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let wide: Vec<i64> = (0..1_000_000).map(|_| rng.gen_range(-(1i64 << 40)..=1 << 40)).collect();
    for p in multiplier_programs() {
        for x in (-(1i64 << 16)..=1 << 16).chain(wide.iter().copied()) {
            if p.run(x).ok() != Some(p.constant * x) {
                return Err(format!("program for {} fails at x = {x}", p.constant));
            }
        }
    }
    Ok(format!("{} programs, 131073 exhaustive + 1000000 random inputs", multiplier_programs().len()))
}

fn twelve_bit_constants() -> Outcome {
    let want = [(669, 8), (2217, 11), (437, 6), (2399, 11), (181, 6), (3135, 10), (473, 6)];
    let k = RingConstants::new(160);
    for (num, shift) in want {
        let c = TWELVE_BIT_CONSTANTS
            .iter()
            .find(|c| c.numerator == num && c.shift == shift)
            .ok_or(format!("{num}/2^{shift} missing"))?;
        if c.value() != num as f64 / (1u64 << shift) as f64 || twelve_bit(c.target) != *c {
            return Err(format!("{num}/2^{shift} stored incorrectly"));
        }
        let scaled = c.target.exact(&k).to_f64() * (1u64 << shift) as f64;
        if (scaled - num as f64).abs() > 0.5 || num >= 4096 {
            return Err(format!("{num}/2^{shift} is not the closest 12-bit numerator ({scaled})"));
        }
    }
    Ok("7 constants exact and closest at their shift".into())
}

fn expansion_search() -> Outcome {
    let t = Instant::now();
    let s = search_alpha(1.0, 256.0, 1e-4).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let best = s.best;
    let small = s
        .ranked
        .iter()
        .find(|c| c.triple == [12, 5, 13] && (c.alpha - 4.5961).abs() <= 1e-4 + 1e-9);
    check(
        (best.alpha - 167.2309).abs() <= 1e-4 + 1e-9
            && best.triple == [437, 181, 473]
            && (5e-3..=5e-2).contains(&best.norm)
            && small.is_some()
            && secs < 60.0,
        format!(
            "best alpha {:.4} {:?} norm {:.4e}; small candidate {:?}; {secs:.1} s",
            best.alpha,
            best.triple,
            best.norm,
            small.map(|c| c.alpha)
        ),
    )
}

fn booth() -> Outcome {
    let t = |exp, negative| BoothTerm { exp, negative };
    let small = ExpansionFactorSet::small();
    let large = ExpansionFactorSet::large();
    let small_terms = vec![t(2, false), t(-1, false), t(-4, false), t(-5, false), t(-9, false)];
    let large_terms =
        vec![t(7, false), t(5, false), t(3, false), t(0, true), t(-2, false), t(-6, true), t(-8, true)];
    check(
        small.booth_value() == 4.595703125
            && large.booth_value() == 167.23046875
            && small.booth == small_terms
            && large.booth == large_terms
            && booth_value(&small_terms) == 4.595703125,
        format!("{} and {}", small.booth_value(), large.booth_value()),
    )
}

fn cse() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut counts = Vec::new();
    for set in [ExpansionFactorSet::large(), ExpansionFactorSet::small()] {
        let mut adds = None;
        for _ in 0..1_000_000 {
            let y: [i64; 3] = std::array::from_fn(|_| rng.gen_range(-(1i64 << 30)..=1 << 30));
            let (v, n) = cse_combine(y[0], y[1], y[2], &set).map_err(|e| e.to_string())?;
            let direct: i64 = set.m.iter().zip(y).map(|(m, y)| m * y).sum();
            if v != direct {
                return Err(format!("{} wrong on {y:?}", set.label()));
            }
            adds = Some(n);
        }
        counts.push(adds.unwrap_or(0));
    }
    check(counts == [8, 5], format!("1000000 triples each, additions {counts:?}"))
}

fn success_study() -> Outcome {
    let n = 100_000;
    let designs = [
        FrsConfig::expansion(ExpansionFactorSet::large()),
        FrsConfig::dempster(),
        FrsConfig::expansion(ExpansionFactorSet::small()),
    ];
    let at = |rates: &[f64], tol: f64| rates[DEFAULT_TOLERANCES.iter().position(|&t| t == tol).unwrap()];
    let mut ok = true;
    let mut lines = Vec::new();
    for l in [4u32, 8] {
        let blocks = random_blocks(n, l, 8 + u64::from(l));
        let mut rates = Vec::new();
        for cfg in &designs {
            let r = measure_success(&blocks, &Decoder::Frs(cfg.clone()), &DEFAULT_TOLERANCES, l)
                .map_err(|e| e.to_string())?;
            ok &= r.success_rates.windows(2).all(|w| w[0] >= w[1]);
            lines.push(format!("L={l} {}: {:?}", r.method, r.success_rates));
            rates.push(r.success_rates);
        }
        let fine: Vec<f64> = rates.iter().map(|r| at(r, 0.01)).collect();
        ok &= fine[0] > fine[1] && fine[1] > fine[2];
        if l == 8 {
            let one: Vec<f64> = rates.iter().map(|r| at(r, 1.0)).collect();
            ok &= one[0] >= 99.5 && one[1] >= 99.0 && (85.0..=96.0).contains(&one[2]);
        }
    }
    check(ok, format!("{n} blocks per wordlength\n    {}", lines.join("\n    ")))
}

fn noise_decoupling() -> Outcome {
    let blocks = random_blocks(100, 8, 9);
    for cfg in [FrsConfig::dempster(), FrsConfig::expansion(ExpansionFactorSet::small())] {
        let d = Decoder::Frs(cfg);
        for block in &blocks {
            let coeffs = dct2d_ai(block).map_err(|e| e.to_string())?;
            let base = decode_block(&coeffs, &d).map_err(|e| e.to_string())?;
            for u in 0..8 {
                for v in 0..8 {
                    let mixed = decode_block_mixed(&coeffs, &d, &[(u, v)]).map_err(|e| e.to_string())?;
                    for i in 0..8 {
                        for k in 0..8 {
                            if (i, k) != (u, v) && mixed[i][k].to_bits() != base[i][k].to_bits() {
                                return Err(format!("exact decode at ({u},{v}) moved ({i},{k})"));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok("100 blocks, every coefficient swapped, 2 designs".into())
}

fn four_sig(x: f64) -> String {
    format!("{x:.3e}")
}

fn timing() -> Outcome {
    let br = ratio_to_f64(block_rate(312_402_000)) / 1e6;
    let f1 = ratio_to_f64(frame_timing(312_402_000, 1920, 1080).map_err(|e| e.to_string())?.frame_rate);
    let f2 = ratio_to_f64(frame_timing(307_787_000, 1920, 1080).map_err(|e| e.to_string())?.frame_rate);
    check(
        four_sig(br) == four_sig(39.05) && four_sig(f1) == four_sig(1205.25) && four_sig(f2) == four_sig(1187.35),
        format!("block rate {br:.5} MHz, {f1:.3} fps, {f2:.3} fps"),
    )
}

fn streaming() -> Outcome {
    let blocks = random_blocks(1000, 8, 11);
    let stream = stream_from_blocks(&blocks);
    for frs in [
        FrsConfig::dempster(),
        FrsConfig::expansion(ExpansionFactorSet::large()),
        FrsConfig::expansion(ExpansionFactorSet::small()).with_inverse_alpha(true),
    ] {
        let cfg = StreamConfig { clock_hz: 312_402_000, wordlength: 8, frs: frs.clone() };
        let (out, _) = run_stream(&stream, &cfg).map_err(|e| e.to_string())?;
        if out.len() != blocks.len() {
            return Err(format!("{} blocks streamed out of {}", out.len(), blocks.len()));
        }
        for (sb, block) in out.iter().zip(&blocks) {
            let batch = dct2d_ai(block).map_err(|e| e.to_string())?;
            for u in 0..8 {
                for v in 0..8 {
                    let want = aidct::frs::frs_value(&batch[u][v], &frs).map_err(|e| e.to_string())?;
                    if sb.coefficients[u][v] != batch[u][v] || sb.values[u][v].to_bits() != want.to_bits() {
                        return Err(format!("{} block {} differs at ({u},{v})", frs.label(), sb.index));
                    }
                }
            }
        }
    }
    Ok("1000 blocks, 3 designs, bit-identical".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("exactness", exactness),
        ("ring closure", ring_closure),
        ("multiplier programs", multiplier_programs_exact),
        ("12-bit constants", twelve_bit_constants),
        ("expansion factor search", expansion_search),
        ("booth encodings", booth),
        ("cse schedules", cse),
        ("success rates", success_study),
        ("noise decoupling", noise_decoupling),
        ("timing arithmetic", timing),
        ("streaming equivalence", streaming),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (status, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("[{status}] {:>2} {name} ({:.1} s): {detail}", i + 1, t.elapsed().as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
