//! Straight-line shift-add programs.
//!
//! A program is a list of steps `dest = ±(2^k * r1) ± (2^k * r2)`. Wired
//! shifts are free; every step with two terms costs one adder. Programs are
//! used both for single-constant multipliers and for the multi-input
//! combiners of the expansion-factor decoder.
//!
//! Text form, one program per line:
//!
//! ```text
//! 669 | v1 = x + 2^1*x ; v2 = v1 - 2^3*v1 ; y = -v1 - 2^5*v2
//! ```

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ring::shl_checked;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Term {
    pub reg: usize,
    pub shift: u32,
    pub negate: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub dest: usize,
    pub terms: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    /// Register names; the first `inputs` entries are the inputs.
    names: Vec<String>,
    inputs: usize,
    steps: Vec<Step>,
    output: usize,
}

/// `(negate, shift, source register)`.
pub type TermSpec<'a> = (bool, u32, &'a str);
/// `(destination, terms)`.
pub type RowSpec<'a> = (&'a str, &'a [TermSpec<'a>]);

impl Program {
    /// Builds a program from `(dest, [(negate, shift, src)])` rows. The last
    /// row's destination is the output.
    pub fn build(inputs: &[&str], rows: &[RowSpec<'_>]) -> Result<Self> {
        let mut names: Vec<String> = inputs.iter().map(|s| s.to_string()).collect();
        let mut steps = Vec::with_capacity(rows.len());
        for (line, (dest, terms)) in rows.iter().enumerate() {
            if terms.is_empty() || terms.len() > 2 {
                return Err(Error::Parse { line, msg: format!("{dest}: need one or two terms") });
            }
            let mut ts = Vec::with_capacity(terms.len());
            for &(negate, shift, src) in terms.iter() {
                let reg = names.iter().position(|n| n == src).ok_or_else(|| Error::Parse {
                    line,
                    msg: format!("register {src} used before assignment"),
                })?;
                ts.push(Term { reg, shift, negate });
            }
            if names.iter().any(|n| n == dest) {
                return Err(Error::Parse { line, msg: format!("register {dest} assigned twice") });
            }
            names.push(dest.to_string());
            steps.push(Step { dest: names.len() - 1, terms: ts });
        }
        if steps.is_empty() {
            return Err(Error::Parse { line: 0, msg: "empty program".into() });
        }
        let output = names.len() - 1;
        Ok(Self { names, inputs: inputs.len(), steps, output })
    }

    pub fn input_count(&self) -> usize {
        self.inputs
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn name(&self, reg: usize) -> &str {
        &self.names[reg]
    }

    /// Number of two-input adders executed per evaluation.
    pub fn additions(&self) -> usize {
        self.steps.iter().map(|s| s.terms.len() - 1).sum()
    }

    /// Runs the program; returns every register value.
    pub fn run_all(&self, inputs: &[i64]) -> Result<Vec<i64>> {
        assert_eq!(inputs.len(), self.inputs, "wrong number of program inputs");
        let mut regs = Vec::with_capacity(self.names.len());
        regs.extend_from_slice(inputs);
        for step in &self.steps {
            let mut acc: i64 = 0;
            for t in &step.terms {
                let v = shl_checked(regs[t.reg], t.shift).ok_or(Error::Overflow("shift-add"))?;
                acc = if t.negate { acc.checked_sub(v) } else { acc.checked_add(v) }
                    .ok_or(Error::Overflow("shift-add"))?;
            }
            regs.push(acc);
        }
        Ok(regs)
    }

    pub fn run(&self, inputs: &[i64]) -> Result<i64> {
        Ok(self.run_all(inputs)?[self.output])
    }

    /// Integer coefficients of every register as a linear form in the inputs.
    pub fn linear_forms(&self) -> Vec<Vec<i64>> {
        let mut forms: Vec<Vec<i64>> = (0..self.inputs)
            .map(|i| (0..self.inputs).map(|j| i64::from(i == j)).collect())
            .collect();
        for step in &self.steps {
            let mut f = vec![0; self.inputs];
            for t in &step.terms {
                let sign = if t.negate { -1 } else { 1 };
                for (o, v) in f.iter_mut().zip(&forms[t.reg]) {
                    *o += sign * (v << t.shift);
                }
            }
            forms.push(f);
        }
        forms
    }

    pub fn register(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Sum over all adders of the adder width in bits, for signed inputs of
    /// `input_bits` bits. The width of an adder is the width of its result
    /// bound.
    pub fn adder_bits(&self, input_bits: u32) -> u64 {
        let forms = self.linear_forms();
        let in_bound = 1u128 << (input_bits - 1);
        let bound = |reg: usize| -> u128 {
            forms[reg].iter().map(|c| c.unsigned_abs() as u128 * in_bound).sum()
        };
        self.steps
            .iter()
            .filter(|s| s.terms.len() > 1)
            .map(|s| u64::from(signed_width(bound(s.dest).max(1))))
            .sum()
    }
}

fn signed_width(bound: u128) -> u32 {
    128 - bound.leading_zeros() + 1
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, step) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str(" ; ")?;
            }
            write!(f, "{} = ", self.names[step.dest])?;
            for (j, t) in step.terms.iter().enumerate() {
                match (j, t.negate) {
                    (0, true) => f.write_str("-")?,
                    (0, false) => {}
                    (_, true) => f.write_str(" - ")?,
                    (_, false) => f.write_str(" + ")?,
                }
                if t.shift > 0 {
                    write!(f, "2^{}*", t.shift)?;
                }
                f.write_str(&self.names[t.reg])?;
            }
        }
        Ok(())
    }
}

/// A program computing `y = constant * x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FastMultiplierProgram {
    pub constant: i64,
    pub program: Program,
}

impl FastMultiplierProgram {
    pub fn run(&self, x: i64) -> Result<i64> {
        self.program.run(&[x])
    }

    pub fn additions(&self) -> usize {
        self.program.additions()
    }

    /// Checks the program's linear form against its constant.
    pub fn is_consistent(&self) -> bool {
        self.program.linear_forms().last().map(|f| f[0]) == Some(self.constant)
    }
}

/// Free-function form of [`FastMultiplierProgram::run`].
pub fn run_program(p: &FastMultiplierProgram, x: i64) -> Result<i64> {
    p.run(x)
}

impl fmt::Display for FastMultiplierProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} | {}", self.constant, self.program)
    }
}

impl FromStr for FastMultiplierProgram {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_row(s, 0)
    }
}

type OwnedTerm = (bool, u32, String);

fn parse_row(s: &str, line: usize) -> Result<FastMultiplierProgram> {
    let err = |msg: String| Error::Parse { line, msg };
    let (m, body) = s.split_once('|').ok_or_else(|| err("missing '|'".into()))?;
    let constant: i64 = m.trim().parse().map_err(|_| err(format!("bad constant {m:?}")))?;
    let mut rows: Vec<(String, Vec<OwnedTerm>)> = Vec::new();
    for stmt in body.split(';') {
        let (dest, expr) = stmt.split_once('=').ok_or_else(|| err(format!("no '=' in {stmt:?}")))?;
        rows.push((dest.trim().to_string(), parse_expr(expr).map_err(err)?));
    }
    let borrowed: Vec<Vec<TermSpec<'_>>> = rows
        .iter()
        .map(|(_, ts)| ts.iter().map(|(n, k, r)| (*n, *k, r.as_str())).collect())
        .collect();
    let layout: Vec<RowSpec<'_>> =
        rows.iter().zip(&borrowed).map(|((d, _), ts)| (d.as_str(), ts.as_slice())).collect();
    let program = Program::build(&["x"], &layout).map_err(|e| match e {
        Error::Parse { msg, .. } => err(msg),
        other => other,
    })?;
    Ok(FastMultiplierProgram { constant, program })
}

fn parse_expr(expr: &str) -> std::result::Result<Vec<(bool, u32, String)>, String> {
    let mut terms = Vec::new();
    let mut rest = expr.trim();
    let mut negate = false;
    if let Some(r) = rest.strip_prefix('-') {
        negate = true;
        rest = r.trim_start();
    }
    loop {
        let end = rest.find(['+', '-']).unwrap_or(rest.len());
        let tok = rest[..end].trim();
        let (shift, reg) = match tok.split_once('*') {
            Some((p, r)) => {
                let k = p
                    .trim()
                    .strip_prefix("2^")
                    .and_then(|k| k.parse::<u32>().ok())
                    .ok_or_else(|| format!("bad shift factor {p:?}"))?;
                (k, r.trim())
            }
            None => (0, tok),
        };
        if reg.is_empty() || !reg.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(format!("bad register {reg:?}"));
        }
        terms.push((negate, shift, reg.to_string()));
        if end == rest.len() {
            break;
        }
        negate = rest.as_bytes()[end] == b'-';
        rest = rest[end + 1..].trim_start();
    }
    Ok(terms)
}

/// Parses a table of programs, one per non-empty, non-`#` line.
pub fn parse_table(text: &str) -> Result<Vec<FastMultiplierProgram>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| parse_row(l, i + 1))
        .collect()
}

pub fn format_table(programs: &[FastMultiplierProgram]) -> String {
    programs.iter().map(|p| format!("{p}\n")).collect()
}

/// The multiplier programs of the fixed-point decoder.
pub const MULTIPLIER_TABLE: &str = "\
669 | v1 = x + 2^1*x ; v2 = v1 - 2^3*v1 ; y = -v1 - 2^5*v2
2217 | v1 = x + 2^4*x ; v2 = x + 2^1*x ; v3 = v1 + 2^3*v2 ; y = 2^7*v1 + v3
181 | v1 = x + 2^1*x ; v2 = 2^3*x + v1 ; y = 2^6*v1 - v2
3135 | v1 = x + 2^1*x ; v2 = x - 2^6*x ; y = 2^10*v1 - v2
473 | v1 = x + 2^2*x ; v2 = x - 2^3*v1 ; y = 2^9*x + v2
437 | v1 = x + 2^2*x ; v2 = 2^5*x - v1 ; y = v1 + 2^4*v2
2399 | v1 = x + 2^2*x ; v2 = x + 2^5*v1 ; y = 2^9*v1 - v2
8 | y = 2^3*x
";

/// All multiplier programs, parsed once.
pub fn multiplier_programs() -> &'static [FastMultiplierProgram] {
    static TABLE: std::sync::OnceLock<Vec<FastMultiplierProgram>> = std::sync::OnceLock::new();
    TABLE.get_or_init(|| parse_table(MULTIPLIER_TABLE).expect("built-in table parses"))
}

/// The program for constant `m`, if tabulated.
pub fn multiplier(m: i64) -> Option<&'static FastMultiplierProgram> {
    multiplier_programs().iter().find(|p| p.constant == m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn table_examples() {
        assert_eq!(multiplier(8).unwrap().run(3).unwrap(), 24);
        let p669 = multiplier(669).unwrap();
        assert_eq!(p669.program.run_all(&[1]).unwrap(), vec![1, 3, -21, 669]);
        assert_eq!(multiplier(2399).unwrap().run(-1).unwrap(), -2399);
    }

    #[test]
    fn addition_counts() {
        let counts: Vec<(i64, usize)> =
            multiplier_programs().iter().map(|p| (p.constant, p.additions())).collect();
        assert_eq!(
            counts,
            vec![(669, 3), (2217, 4), (181, 3), (3135, 3), (473, 3), (437, 3), (2399, 3), (8, 0)]
        );
    }

    #[test]
    fn every_program_is_consistent() {
        for p in multiplier_programs() {
            assert!(p.is_consistent(), "{p}");
        }
    }

    #[test]
    fn text_round_trip() {
        let text = format_table(multiplier_programs());
        assert_eq!(text, MULTIPLIER_TABLE);
        assert_eq!(parse_table(&text).unwrap(), multiplier_programs());
    }

    #[test]
    fn parse_errors() {
        assert!("12 v1 = x".parse::<FastMultiplierProgram>().is_err());
        assert!("12 | v1 = q + x".parse::<FastMultiplierProgram>().is_err());
        assert!("12 | v1 = 3^2*x".parse::<FastMultiplierProgram>().is_err());
        assert!("12 | v1 = x + x + x".parse::<FastMultiplierProgram>().is_err());
        assert!("12 | x = x + x".parse::<FastMultiplierProgram>().is_err());
    }

    #[test]
    fn overflow_is_reported() {
        assert!(multiplier(3135).unwrap().run(i64::MAX / 1000).is_err());
    }

    #[test]
    fn pure_shift_has_no_adder_bits() {
        assert_eq!(multiplier(8).unwrap().program.adder_bits(16), 0);
        assert!(multiplier(181).unwrap().program.adder_bits(8) > 0);
    }

    proptest! {
        #[test]
        fn programs_multiply(x in -(1i64 << 40)..(1i64 << 40)) {
            for p in multiplier_programs() {
                prop_assert_eq!(p.run(x).unwrap(), p.constant * x);
            }
        }
    }
}
