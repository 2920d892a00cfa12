//! Reading, writing and validating newform coefficient files (format `nf-1`).
//!
//! The grammar is documented in `docs/newform-format.md`.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use num_bigint::BigInt;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::modforms::{CharacterTable, NewformRecord, RecordSource};
use crate::{Error, Result};

pub const FORMAT_VERSION: &str = "nf-1";
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
const MAX_LISTED: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// λ(n) as two decimal floats.
    Arithmetic,
    /// Exact integers a(n).
    Integral,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Invariant {
    Normalization,
    Multiplicativity { n: u64 },
    HeckeRelation { p: u64 },
    DeligneBound { p: u64 },
}

impl fmt::Display for Invariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Invariant::Normalization => write!(f, "normalization"),
            Invariant::Multiplicativity { n } => write!(f, "multiplicativity at n={n}"),
            Invariant::HeckeRelation { p } => write!(f, "Hecke relation at p={p}"),
            Invariant::DeligneBound { p } => write!(f, "Deligne bound at p={p}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub invariant: Invariant,
    /// Index at which the check failed.
    pub n: u64,
    pub deviation: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// The first violations found, in check order.
    pub violations: Vec<Violation>,
    /// Violations found beyond those listed.
    pub omitted: usize,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn contains(&self, invariant: Invariant) -> bool {
        self.violations.iter().any(|v| v.invariant == invariant)
    }

    fn push(&mut self, invariant: Invariant, n: u64, deviation: f64) {
        if self.violations.len() < MAX_LISTED {
            self.violations.push(Violation { invariant, n, deviation });
        } else {
            self.omitted += 1;
        }
    }
}

/// Excess of |a − b| over the relative tolerance scale max(1, |a|, |b|); positive means violated.
fn excess(a: Complex64, b: Complex64, tol: f64) -> Option<f64> {
    let dev = (a - b).norm();
    (dev > tol * 1f64.max(a.norm()).max(b.norm())).then_some(dev)
}

fn smallest_prime_factors(n: usize) -> Vec<u32> {
    let mut spf = vec![0u32; n + 1];
    for i in 2..=n {
        if spf[i] == 0 {
            let mut j = i;
            while j <= n {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
                j += i;
            }
        }
    }
    spf
}

/// Checks λ(1) = 1, multiplicativity, the Hecke recursion at every prime and |λ(p)| <= 2.
pub fn validate(record: &NewformRecord, tolerance: f64) -> ValidationReport {
    let mut report = ValidationReport::default();
    let lam = record.lambdas();
    let prec = record.prec();
    let one = Complex64::new(1.0, 0.0);
    if let Some(d) = excess(lam[1], one, tolerance) {
        report.push(Invariant::Normalization, 1, d);
    }
    let spf = smallest_prime_factors(prec);
    for p in 2..=prec {
        if spf[p] as usize != p {
            continue;
        }
        let pu = p as u64;
        if lam[p].norm() > 2.0 * (1.0 + tolerance) {
            report.push(Invariant::DeligneBound { p: pu }, pu, lam[p].norm() - 2.0);
        }
        let chi = record.chi(pu);
        let (mut prev, mut cur, mut q) = (one, lam[p], p);
        while q <= prec / p {
            let next = q * p;
            let expect = lam[p] * cur - chi * prev;
            if let Some(d) = excess(lam[next], expect, tolerance) {
                report.push(Invariant::HeckeRelation { p: pu }, next as u64, d);
            }
            (prev, cur, q) = (cur, lam[next], next);
        }
    }
    for n in 6..=prec {
        let p = spf[n] as usize;
        let mut pe = p;
        while n % (pe * p) == 0 {
            pe *= p;
        }
        if pe == n {
            continue;
        }
        if let Some(d) = excess(lam[n], lam[pe] * lam[n / pe], tolerance) {
            report.push(Invariant::Multiplicativity { n: n as u64 }, n as u64, d);
        }
    }
    report
}

/// Writes `records` in the current format; output depends only on the records.
pub fn save_newforms(records: &[NewformRecord], path: impl AsRef<Path>) -> Result<()> {
    let text = render(records);
    let mut file = fs::File::create(path)?;
    file.write_all(text.as_bytes())?;
    file.sync_all()?;
    Ok(())
}

/// The file contents `save_newforms` would write.
pub fn render(records: &[NewformRecord]) -> String {
    let mut out = String::new();
    let mut line = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    line(format!("format {FORMAT_VERSION}"));
    line(format!("records {}", records.len()));
    for r in records {
        line("record".into());
        line(format!("label {}", r.label));
        line(format!("level {}", r.level));
        line(format!("weight {}", r.weight));
        line(format!("source {}", match r.source {
            RecordSource::Computed => "computed",
            RecordSource::Ingested => "ingested",
        }));
        let ch = &r.character;
        if ch.is_trivial() {
            line(format!("character {} {} trivial", ch.modulus(), ch.conductor()));
        } else {
            line(format!("character {} {} table", ch.modulus(), ch.conductor()));
            for (n, v) in ch.values().iter().enumerate() {
                line(format!("chi {n} {:.16e} {:.16e}", v.re, v.im));
            }
        }
        match r.exact() {
            Some(ints) => {
                line("normalization integral".into());
                line(format!("count {}", ints.len() - 1));
                for (n, a) in ints.iter().enumerate().skip(1) {
                    line(format!("coeff {n} {a}"));
                }
            }
            None => {
                line("normalization arithmetic".into());
                line(format!("count {}", r.prec()));
                for (n, v) in r.lambdas().iter().enumerate().skip(1) {
                    line(format!("coeff {n} {:.16e} {:.16e}", v.re, v.im));
                }
            }
        }
        line("end".into());
    }
    out
}

/// Reads every record in the file and validates each at the default tolerance.
pub fn load_newforms(path: impl AsRef<Path>) -> Result<Vec<NewformRecord>> {
    parse_newforms(&fs::read_to_string(path)?)
}

pub fn parse_newforms(text: &str) -> Result<Vec<NewformRecord>> {
    let records = parse_newforms_unchecked(text)?;
    for rec in &records {
        let report = validate(rec, DEFAULT_TOLERANCE);
        if let Some(v) = report.violations.first() {
            return Err(Error::InconsistentData(format!("record {:?}: {} (deviation {:e} at n={})", rec.label, v.invariant, v.deviation, v.n)));
        }
    }
    Ok(records)
}

/// Parses without the invariant checks, for reporting on suspect files.
pub fn parse_newforms_unchecked(text: &str) -> Result<Vec<NewformRecord>> {
    let mut lines = Lines { inner: text.lines().enumerate().peekable(), last: 0 };
    let version = lines.keyword("format")?;
    if version.len() != 1 || version[0] != FORMAT_VERSION {
        return Err(lines.error(format!("unrecognized format version {:?}", version.join(" "))));
    }
    let count: usize = lines.single("records")?;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(parse_record(&mut lines)?);
    }
    if let Some((i, l)) = lines.next_content() {
        return Err(Error::MalformedFile { line: i + 1, message: format!("unexpected content after the last record: {l:?}") });
    }
    Ok(out)
}

struct Lines<'a, I: Iterator<Item = (usize, &'a str)>> {
    inner: std::iter::Peekable<I>,
    last: usize,
}

impl<'a, I: Iterator<Item = (usize, &'a str)>> Lines<'a, I> {
    fn error(&self, message: impl Into<String>) -> Error {
        Error::MalformedFile { line: self.last, message: message.into() }
    }

    /// Next non-blank, non-comment line.
    fn next_content(&mut self) -> Option<(usize, &'a str)> {
        for (i, l) in self.inner.by_ref() {
            let t = l.trim();
            if !t.is_empty() && !t.starts_with('#') {
                self.last = i + 1;
                return Some((i, t));
            }
        }
        self.last += 1;
        None
    }

    fn peek_keyword(&mut self) -> Option<&'a str> {
        while let Some((_, l)) = self.inner.peek() {
            let t = l.trim();
            if t.is_empty() || t.starts_with('#') {
                self.inner.next();
                continue;
            }
            return t.split_whitespace().next();
        }
        None
    }

    fn keyword(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let (_, l) = self.next_content().ok_or_else(|| self.error(format!("unexpected end of file, expected `{key}`")))?;
        let mut parts = l.split_whitespace();
        match parts.next() {
            Some(k) if k == key => Ok(parts.collect()),
            other => Err(self.error(format!("expected `{key}`, found `{}`", other.unwrap_or("")))),
        }
    }

    fn single<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.keyword(key)?;
        if v.len() != 1 {
            return Err(self.error(format!("`{key}` takes exactly one value")));
        }
        self.value(v[0], key)
    }

    fn value<T: std::str::FromStr>(&self, s: &str, field: &str) -> Result<T> {
        s.parse().map_err(|_| self.error(format!("cannot parse {field} value {s:?}")))
    }
}

fn parse_record<'a, I: Iterator<Item = (usize, &'a str)>>(lines: &mut Lines<'a, I>) -> Result<NewformRecord> {
    lines.keyword("record")?;
    let label = lines.keyword("label")?.join(" ");
    let level: u64 = lines.single("level")?;
    let weight: u32 = lines.single("weight")?;
    let source = match lines.keyword("source")?.as_slice() {
        ["computed"] => RecordSource::Computed,
        ["ingested"] => RecordSource::Ingested,
        other => return Err(lines.error(format!("unknown source {other:?}"))),
    };
    let ch = lines.keyword("character")?;
    if ch.len() != 3 {
        return Err(lines.error("`character` takes modulus, conductor and `trivial` or `table`"));
    }
    let modulus: u64 = lines.value(ch[0], "character modulus")?;
    let conductor: u64 = lines.value(ch[1], "character conductor")?;
    if modulus != level {
        return Err(lines.error(format!("character modulus {modulus} differs from level {level}")));
    }
    let character = match ch[2] {
        "trivial" => CharacterTable::trivial(modulus),
        "table" => {
            let mut values = Vec::with_capacity(modulus as usize);
            for n in 0..modulus {
                let v = lines.keyword("chi")?;
                if v.len() != 3 || lines.value::<u64>(v[0], "chi index")? != n {
                    return Err(lines.error(format!("expected `chi {n} <re> <im>`")));
                }
                values.push(Complex64::new(lines.value(v[1], "chi real part")?, lines.value(v[2], "chi imaginary part")?));
            }
            CharacterTable::from_values(modulus, values).map_err(|e| lines.error(e.to_string()))?
        }
        other => return Err(lines.error(format!("unknown character kind {other:?}"))),
    };
    if character.conductor() != conductor {
        return Err(Error::InconsistentData(format!("declared conductor {conductor} but the table has conductor {}", character.conductor())));
    }
    let norm = match lines.keyword("normalization")?.as_slice() {
        ["arithmetic"] => Normalization::Arithmetic,
        ["integral"] => Normalization::Integral,
        other => return Err(lines.error(format!("unknown normalization {other:?}"))),
    };
    let count: usize = lines.single("count")?;
    if count == 0 {
        return Err(lines.error("a record needs at least one coefficient"));
    }
    let mut lambda = vec![Complex64::new(0.0, 0.0)];
    let mut ints = vec![BigInt::from(0)];
    for n in 1..=count {
        if lines.peek_keyword() != Some("coeff") {
            return Err(lines.error(format!("declared count {count} but found {} coefficients", n - 1)));
        }
        let v = lines.keyword("coeff")?;
        let idx: usize = lines.value(v.first().copied().unwrap_or(""), "coefficient index")?;
        if idx != n {
            return Err(lines.error(format!("expected coefficient index {n}, found {idx}")));
        }
        match (norm, v.len()) {
            (Normalization::Arithmetic, 3) => lambda.push(Complex64::new(lines.value(v[1], "real part")?, lines.value(v[2], "imaginary part")?)),
            (Normalization::Integral, 2) => ints.push(lines.value(v[1], "integer coefficient")?),
            _ => return Err(lines.error(format!("wrong number of fields for a {norm:?} coefficient"))),
        }
    }
    if lines.peek_keyword() == Some("coeff") {
        lines.next_content();
        return Err(lines.error(format!("more coefficients than the declared count {count}")));
    }
    lines.keyword("end")?;
    match norm {
        Normalization::Arithmetic => NewformRecord::new(level, weight, character, lambda, source, label),
        Normalization::Integral => NewformRecord::from_integral(level, weight, character, ints, source, label),
    }
}
