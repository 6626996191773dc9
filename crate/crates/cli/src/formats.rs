//! File formats: CSV tables, flat `key=value` summaries and run manifests.
//!
//! All CSV output uses a header row, comma delimiter, LF line endings and
//! floats rounded to 12 significant digits. Every file is written through a
//! temporary file in the destination directory and renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use gknn::tank::DailyClimateRecord;
use gknn::upscaling::{MonthlyQueryRecord, MonthlyTrainingRecord, QueryTable, Schema, TrainingTable};
use gknn::RankKind;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Float rendered with 12 significant digits, shortest form.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("valid float literal");
    format!("{rounded}")
}

pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(contents).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn read_file(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

/// CSV text built row by row.
pub struct CsvOut {
    buf: String,
}

impl CsvOut {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = header.join(",");
        buf.push('\n');
        Self { buf }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut first = true;
        for f in fields {
            if !first {
                self.buf.push(',');
            }
            self.buf.push_str(f.as_ref());
            first = false;
        }
        self.buf.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf.into_bytes()
    }
}

/// Ordered `key=value` lines.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct KeyValue {
    entries: Vec<(String, String)>,
}

impl KeyValue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Into<String>) -> &mut Self {
        self.entries.push((key.into(), value.into()));
        self
    }

    pub fn float(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.push(key, fmt_float(value))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut kv = Self::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Input(format!("line {}: expected key=value", i + 1)))?;
            kv.push(k, v);
        }
        Ok(kv)
    }
}

/// Parameters and input digests written next to every output.
pub struct Manifest {
    kv: KeyValue,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        let mut kv = KeyValue::new();
        kv.push("tool", "gknn").push("version", env!("CARGO_PKG_VERSION")).push("command", command);
        Self { kv }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.kv.push(format!("param.{key}"), value.to_string());
        self
    }

    pub fn input(&mut self, name: &str, path: &Path, bytes: &[u8]) -> &mut Self {
        self.kv.push(format!("input.{name}.path"), path.display().to_string());
        self.kv.push(format!("input.{name}.sha256"), sha256_hex(bytes));
        self
    }

    pub fn output(&mut self, name: &str, path: &Path, bytes: &[u8]) -> &mut Self {
        self.kv.push(format!("output.{name}.path"), path.display().to_string());
        self.kv.push(format!("output.{name}.sha256"), sha256_hex(bytes));
        self
    }

    pub fn render(&self) -> String {
        self.kv.render()
    }
}

/// `<path>.<suffix>` next to `path`.
pub fn sibling(path: &Path, suffix: &str) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    s.into()
}

fn csv_reader(bytes: &[u8]) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(bytes)
}

fn headers(rdr: &mut csv::Reader<&[u8]>, what: &str) -> CliResult<Vec<String>> {
    let h = rdr
        .headers()
        .map_err(|e| CliError::Input(format!("{what}: {e}")))?;
    Ok(h.iter().map(str::to_owned).collect())
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str, what: &str) -> CliResult<T> {
    let line = rec.position().map_or(0, |p| p.line());
    let raw = rec
        .get(i)
        .ok_or_else(|| CliError::Input(format!("{what} line {line}: missing column {name}")))?;
    raw.parse()
        .map_err(|_| CliError::Input(format!("{what} line {line}: cannot parse {name} = {raw:?}")))
}

fn records(rdr: &mut csv::Reader<&[u8]>, what: &str) -> CliResult<Vec<csv::StringRecord>> {
    rdr.records()
        .map(|r| r.map_err(|e| CliError::Input(format!("{what}: {e}"))))
        .collect()
}

fn schema_columns(schema: Schema, with_yield: bool) -> Vec<&'static str> {
    let mut cols = Vec::new();
    if schema.has_month_label() {
        cols.push("month_label");
    }
    cols.extend_from_slice(schema.climatic_columns());
    if with_yield {
        cols.push("yield_l");
    }
    cols
}

fn detect_schema(header: &[String], with_yield: bool, what: &str) -> CliResult<Schema> {
    [Schema::Coombes, Schema::Knn, Schema::Bootstrap]
        .into_iter()
        .find(|s| schema_columns(*s, with_yield) == header)
        .ok_or_else(|| CliError::Input(format!("{what}: unrecognised header {}", header.join(","))))
}

fn month_label(rec: &csv::StringRecord, what: &str) -> CliResult<u8> {
    let label: i64 = parse_field(rec, 0, "month_label", what)?;
    if !(1..=12).contains(&label) {
        let line = rec.position().map_or(0, |p| p.line());
        return Err(CliError::Input(format!("{what} line {line}: month_label {label} outside 1..=12")));
    }
    Ok(label as u8)
}

pub fn read_training(bytes: &[u8]) -> CliResult<TrainingTable> {
    let what = "training";
    let mut rdr = csv_reader(bytes);
    let schema = detect_schema(&headers(&mut rdr, what)?, true, what)?;
    let cols = schema_columns(schema, true);
    let rows = records(&mut rdr, what)?
        .iter()
        .map(|rec| {
            let label = schema.has_month_label().then(|| month_label(rec, what)).transpose()?;
            let offset = schema.has_month_label() as usize;
            let climatic = (0..schema.climatic_columns().len())
                .map(|c| parse_field(rec, offset + c, cols[offset + c], what))
                .collect::<CliResult<Vec<f64>>>()?;
            let yield_value = parse_field(rec, cols.len() - 1, "yield_l", what)?;
            Ok(MonthlyTrainingRecord {
                month_label: label,
                climatic,
                yield_value,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(TrainingTable::new(schema, rows)?)
}

pub fn read_queries(bytes: &[u8]) -> CliResult<QueryTable> {
    let what = "series";
    let mut rdr = csv_reader(bytes);
    let schema = detect_schema(&headers(&mut rdr, what)?, false, what)?;
    let cols = schema_columns(schema, false);
    let rows = records(&mut rdr, what)?
        .iter()
        .map(|rec| {
            let label = schema.has_month_label().then(|| month_label(rec, what)).transpose()?;
            let offset = schema.has_month_label() as usize;
            let climatic = (offset..cols.len())
                .map(|c| parse_field(rec, c, cols[c], what))
                .collect::<CliResult<Vec<f64>>>()?;
            Ok(MonthlyQueryRecord {
                month_label: label,
                climatic,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(QueryTable::new(schema, rows)?)
}

pub fn write_training(table: &TrainingTable) -> Vec<u8> {
    let cols = schema_columns(table.schema, true);
    let mut out = CsvOut::new(&cols);
    for r in &table.records {
        let mut fields: Vec<String> = r.month_label.iter().map(|l| l.to_string()).collect();
        fields.extend(r.climatic.iter().map(|x| fmt_float(*x)));
        fields.push(fmt_float(r.yield_value));
        out.row(fields);
    }
    out.into_bytes()
}

pub fn write_queries(table: &QueryTable) -> Vec<u8> {
    let cols = schema_columns(table.schema, false);
    let mut out = CsvOut::new(&cols);
    for r in &table.records {
        let mut fields: Vec<String> = r.month_label.iter().map(|l| l.to_string()).collect();
        fields.extend(r.climatic.iter().map(|x| fmt_float(*x)));
        out.row(fields);
    }
    out.into_bytes()
}

pub fn read_daily_climate(bytes: &[u8]) -> CliResult<Vec<DailyClimateRecord>> {
    let what = "climate";
    let mut rdr = csv_reader(bytes);
    let header = headers(&mut rdr, what)?;
    if header != ["date", "rain_mm", "temp_c"] {
        return Err(CliError::Input(format!("{what}: expected header date,rain_mm,temp_c, got {}", header.join(","))));
    }
    let rows = records(&mut rdr, what)?;
    if rows.is_empty() {
        return Err(CliError::Input(format!("{what}: no records")));
    }
    rows.iter()
        .map(|rec| {
            let raw: String = parse_field(rec, 0, "date", what)?;
            let date = NaiveDate::parse_from_str(&raw, "%Y-%m-%d").map_err(|_| {
                let line = rec.position().map_or(0, |p| p.line());
                CliError::Input(format!("{what} line {line}: invalid date {raw:?}"))
            })?;
            Ok(DailyClimateRecord {
                date,
                rainfall: parse_field(rec, 1, "rain_mm", what)?,
                temperature: parse_field(rec, 2, "temp_c", what)?,
            })
        })
        .collect()
}

pub fn write_daily_climate(records: &[DailyClimateRecord]) -> Vec<u8> {
    let mut out = CsvOut::new(&["date", "rain_mm", "temp_c"]);
    for r in records {
        out.row([r.date.format("%Y-%m-%d").to_string(), fmt_float(r.rainfall), fmt_float(r.temperature)]);
    }
    out.into_bytes()
}

/// Single-column `yield_l` file of actual yields.
pub fn read_actual(bytes: &[u8]) -> CliResult<Vec<f64>> {
    let what = "actual";
    let mut rdr = csv_reader(bytes);
    let header = headers(&mut rdr, what)?;
    let col = header
        .iter()
        .position(|h| h == "yield_l")
        .ok_or_else(|| CliError::Input(format!("{what}: no yield_l column")))?;
    records(&mut rdr, what)?
        .iter()
        .map(|rec| parse_field(rec, col, "yield_l", what))
        .collect()
}

/// `topk:K`, `harmonic:K` or `explicit:p1,p2,...`.
pub fn parse_dist(spec: &str) -> CliResult<RankKind> {
    let bad = || CliError::Input(format!("invalid --dist {spec:?}; expected topk:K, harmonic:K or explicit:p1,p2,..."));
    let (kind, arg) = spec.split_once(':').ok_or_else(bad)?;
    match kind {
        "topk" => Ok(RankKind::TopKUniform(arg.trim().parse().map_err(|_| bad())?)),
        "harmonic" => Ok(RankKind::Harmonic(arg.trim().parse().map_err(|_| bad())?)),
        "explicit" => Ok(RankKind::Explicit(
            arg.split(',')
                .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<CliResult<_>>()?,
        )),
        _ => Err(bad()),
    }
}

/// Comma-separated list of integers.
pub fn parse_list<T: std::str::FromStr>(raw: &str, what: &str) -> CliResult<Vec<T>> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::Input(format!("{what}: cannot parse {s:?}")))
        })
        .collect()
}
