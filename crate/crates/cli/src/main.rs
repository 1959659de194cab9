use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use aidct::datapath::{ratio_to_f64, run_stream, StreamConfig};
use aidct::frs::{search_alpha, ExpansionFactorSet, FrsConfig};
use aidct::harness::{
    complexity_report, measure_success, random_blocks, ComplexityReport, Decoder, DEFAULT_TOLERANCES,
};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod blocks;

#[derive(Parser)]
#[command(name = "aidct", version, about = "Error-free 8x8 DCT over a bivariate algebraic-integer ring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transform an image (.pgm/.pnm) or a raw stream of little-endian i16 samples.
    Transform(TransformArgs),
    /// Success-rate study on seeded random blocks.
    Analyze(AnalyzeArgs),
    /// Grid search for expansion factors.
    SearchAlpha(SearchArgs),
    /// Timing for a clock and frame size, with adder counts per decoder.
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Frs {
    Dempster,
    ExpSmall,
    ExpLarge,
    Exact,
}

impl Frs {
    fn config(self) -> Option<FrsConfig> {
        match self {
            Frs::Dempster => Some(FrsConfig::dempster()),
            Frs::ExpSmall => Some(FrsConfig::expansion(ExpansionFactorSet::small())),
            Frs::ExpLarge => Some(FrsConfig::expansion(ExpansionFactorSet::large())),
            Frs::Exact => None,
        }
    }

    fn decoder(self) -> Decoder {
        self.config().map_or_else(Decoder::exact, Decoder::Frs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Bin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

impl OutputArgs {
    fn writer(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.output {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).with_context(|| format!("creating {}", p.display()))?,
            )),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    fn text_only(&self) -> Result<()> {
        if self.format == Format::Bin {
            bail!("binary output is only available for transform");
        }
        Ok(())
    }
}

#[derive(Args)]
struct TransformArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value = "exp-large")]
    frs: Frs,
    /// Image samples are reduced to this many bits.
    #[arg(long, default_value_t = 8, value_parser = parse_wordlength)]
    wordlength: u32,
    /// Divide out the transform scale and expansion factor.
    #[arg(long, value_enum, default_value = "on")]
    descale: Switch,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long, default_value_t = 10_000)]
    blocks: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Comma-separated tolerances in percent.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_TOLERANCES.to_vec())]
    tolerances: Vec<f64>,
    /// Restrict to one decoder.
    #[arg(long, value_enum)]
    frs: Option<Frs>,
    /// Restrict to one wordlength.
    #[arg(long, value_parser = parse_wordlength)]
    wordlength: Option<u32>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, default_value_t = 1.0)]
    lo: f64,
    #[arg(long, default_value_t = 256.0)]
    hi: f64,
    #[arg(long, default_value_t = 1e-4)]
    step: f64,
    /// Number of ranked triples to print.
    #[arg(long, default_value_t = 10)]
    top: usize,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct ReportArgs {
    /// Core clock, e.g. 312.402MHz or 312402000.
    #[arg(long, default_value = "312.402MHz", value_parser = parse_clock)]
    clock: u64,
    #[arg(long, default_value = "1920x1080", value_parser = parse_resolution)]
    resolution: (u32, u32),
    #[arg(long, default_value_t = 8, value_parser = parse_wordlength)]
    wordlength: u32,
    /// Width of the signed coordinates entering the reconstruction step.
    #[arg(long, default_value_t = 24)]
    coord_bits: u32,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn parse_wordlength(s: &str) -> Result<u32, String> {
    match s {
        "4" => Ok(4),
        "8" => Ok(8),
        _ => Err(format!("wordlength must be 4 or 8, got {s}")),
    }
}

fn parse_clock(s: &str) -> Result<u64, String> {
    let t = s.trim().to_ascii_lowercase();
    let (num, scale) = [("ghz", 1e9), ("mhz", 1e6), ("khz", 1e3), ("hz", 1.0)]
        .iter()
        .find_map(|(suf, k)| t.strip_suffix(suf).map(|n| (n.trim().to_string(), *k)))
        .unwrap_or((t.clone(), 1.0));
    let v: f64 = num.parse().map_err(|_| format!("bad clock {s}"))?;
    let hz = (v * scale).round();
    if !(1.0..1e18).contains(&hz) {
        return Err(format!("clock {s} out of range"));
    }
    Ok(hz as u64)
}

fn parse_resolution(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or(format!("expected WxH, got {s}"))?;
    let p = |v: &str| v.trim().parse::<u32>().map_err(|_| format!("bad resolution {s}"));
    Ok((p(w)?, p(h)?))
}

fn transform(args: &TransformArgs) -> Result<()> {
    let input = blocks::read_blocks(&args.input, args.wordlength)?;
    let decoder = args.frs.decoder();
    let values = blocks::transform_blocks(&input, &decoder, args.descale == Switch::On)?;
    let mut w = args.out.writer()?;
    blocks::write_coefficients(&mut w, &values, args.out.format)?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct AnalyzeRow {
    wordlength: u32,
    method: String,
    blocks: usize,
    max_abs_error: f64,
    mean_abs_error: f64,
    tolerances: Vec<f64>,
    success_rates: Vec<f64>,
}

fn analyze(args: &AnalyzeArgs) -> Result<()> {
    args.out.text_only()?;
    let wordlengths = args.wordlength.map_or(vec![4, 8], |l| vec![l]);
    let designs = match args.frs {
        Some(f) => vec![f],
        None => vec![Frs::ExpLarge, Frs::Dempster, Frs::ExpSmall, Frs::Exact],
    };
    let mut rows = Vec::new();
    for &l in &wordlengths {
        let blocks = random_blocks(args.blocks, l, args.seed);
        for d in &designs {
            let r = measure_success(&blocks, &d.decoder(), &args.tolerances, l)?;
            rows.push(AnalyzeRow {
                wordlength: l,
                method: r.method,
                blocks: r.block_count,
                max_abs_error: r.max_abs_error,
                mean_abs_error: r.mean_abs_error,
                tolerances: r.tolerances,
                success_rates: r.success_rates,
            });
        }
    }
    let mut w = args.out.writer()?;
    match args.out.format {
        Format::Json => serde_json::to_writer_pretty(&mut w, &rows)?,
        _ => {
            let mut c = csv::Writer::from_writer(&mut w);
            let mut header = vec!["wordlength".to_string(), "method".into(), "blocks".into()];
            header.extend(args.tolerances.iter().map(|t| format!("success_{t}%")));
            header.extend(["max_abs_error".into(), "mean_abs_error".into()]);
            c.write_record(&header)?;
            for r in &rows {
                let mut rec = vec![r.wordlength.to_string(), r.method.clone(), r.blocks.to_string()];
                rec.extend(r.success_rates.iter().map(|s| format!("{s:.4}")));
                rec.extend([format!("{:e}", r.max_abs_error), format!("{:e}", r.mean_abs_error)]);
                c.write_record(&rec)?;
            }
            c.flush()?;
        }
    }
    w.flush()?;
    Ok(())
}

fn search(args: &SearchArgs) -> Result<()> {
    args.out.text_only()?;
    let mut s = search_alpha(args.lo, args.hi, args.step)?;
    s.ranked.truncate(args.top);
    let mut w = args.out.writer()?;
    match args.out.format {
        Format::Json => serde_json::to_writer_pretty(&mut w, &s)?,
        _ => {
            let mut c = csv::Writer::from_writer(&mut w);
            c.write_record(["kind", "alpha", "m1", "m2", "m3", "norm"])?;
            let rows = std::iter::once(("best", &s.best))
                .chain(s.ranked.iter().map(|r| ("ranked", r)))
                .chain(s.records.iter().map(|r| ("record", r)));
            for (kind, r) in rows {
                c.write_record([
                    kind.to_string(),
                    format!("{:.4}", r.alpha),
                    r.triple[0].to_string(),
                    r.triple[1].to_string(),
                    r.triple[2].to_string(),
                    format!("{:.6e}", r.norm),
                ])?;
            }
            c.flush()?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Report {
    clock_hz: u64,
    block_rate_hz: f64,
    pixel_rate_hz: f64,
    width: u32,
    height: u32,
    blocks_per_frame: u64,
    frame_rate_hz: f64,
    latency_ticks: u64,
    designs: Vec<ComplexityReport>,
}

fn report(args: &ReportArgs) -> Result<()> {
    if args.format == Format::Bin {
        bail!("binary output is only available for transform");
    }
    if !(2..=63).contains(&args.coord_bits) {
        bail!("coord-bits must be in 2..=63");
    }
    let cfg = StreamConfig { clock_hz: args.clock, wordlength: args.wordlength, frs: FrsConfig::dempster() };
    let (_, timing) = run_stream(&[0; 128], &cfg)?;
    let (width, height) = args.resolution;
    let timing = timing.with_frame(width, height)?;
    let frame = timing.frame.clone().context("frame timing")?;
    let designs = [Frs::ExpLarge, Frs::Dempster, Frs::ExpSmall]
        .iter()
        .map(|d| complexity_report(&d.config().expect("approximate decoder"), args.coord_bits))
        .collect::<Result<Vec<_>, _>>()?;
    let r = Report {
        clock_hz: timing.clock_hz,
        block_rate_hz: ratio_to_f64(timing.block_rate),
        pixel_rate_hz: ratio_to_f64(timing.pixel_rate),
        width,
        height,
        blocks_per_frame: frame.blocks_per_frame,
        frame_rate_hz: ratio_to_f64(frame.frame_rate),
        latency_ticks: timing.latency_ticks,
        designs,
    };
    let mut w: Box<dyn Write> = match &args.output {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match args.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &r)?;
            writeln!(w)?;
        }
        _ => {
            let mut c = csv::Writer::from_writer(&mut w);
            c.write_record(["quantity", "value"])?;
            for (k, v) in [
                ("clock_hz", r.clock_hz.to_string()),
                ("block_rate_hz", r.block_rate_hz.to_string()),
                ("pixel_rate_hz", r.pixel_rate_hz.to_string()),
                ("resolution", format!("{width}x{height}")),
                ("blocks_per_frame", r.blocks_per_frame.to_string()),
                ("frame_rate_hz", r.frame_rate_hz.to_string()),
                ("latency_ticks", r.latency_ticks.to_string()),
            ] {
                c.write_record([k, &v])?;
            }
            for d in &r.designs {
                c.write_record([format!("additions {}", d.method), d.additions.to_string()])?;
                c.write_record([format!("adder_bits {}", d.method), d.adder_bits.to_string()])?;
            }
            c.flush()?;
        }
    }
    w.flush()?;
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Transform(a) => transform(a),
        Command::Analyze(a) => analyze(a),
        Command::SearchAlpha(a) => search(a),
        Command::Report(a) => report(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
