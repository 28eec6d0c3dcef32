//! On-disk formats: the canonical sparse matrix file, input CSVs and output tables.
//!
//! Canonical matrix file:
//!
//! ```text
//! countries=<n> products=<m> entries=<z>
//! <n country labels, ascending, one per line>
//! <m product labels, ascending, one per line>
//! <z lines "i j" (binary) or "i j v" (valued), ascending by (i, j)>
//! ```
//!
//! Indices are 0-based positions in the label blocks. Values use Rust's
//! shortest round-trip float notation, so a read-write cycle is byte-exact.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ecomplexity_core::{BinaryMatrix, ExportMatrix, IncomePanel};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// A canonical matrix file holds either binary or valued entries.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixFile {
    Binary(BinaryMatrix),
    Valued(ExportMatrix),
}

impl MatrixFile {
    pub fn country_labels(&self) -> &[String] {
        match self {
            MatrixFile::Binary(m) => m.country_labels(),
            MatrixFile::Valued(x) => x.country_labels(),
        }
    }

    pub fn product_labels(&self) -> &[String] {
        match self {
            MatrixFile::Binary(m) => m.product_labels(),
            MatrixFile::Valued(x) => x.product_labels(),
        }
    }

    pub fn n_entries(&self) -> usize {
        match self {
            MatrixFile::Binary(m) => m.n_entries(),
            MatrixFile::Valued(x) => x.entries().len(),
        }
    }
}

fn sorted_order(labels: &[String]) -> (Vec<String>, Vec<usize>) {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| labels[a].cmp(&labels[b]));
    let mut position = vec![0; labels.len()];
    for (new, &old) in order.iter().enumerate() {
        position[old] = new;
    }
    (order.into_iter().map(|i| labels[i].clone()).collect(), position)
}

fn check_label(label: &str) -> std::result::Result<(), String> {
    if label.is_empty() {
        return Err("empty label".into());
    }
    if label.contains(['\n', '\r']) || label.trim() != label {
        return Err(format!("label {label:?} has line breaks or surrounding whitespace"));
    }
    Ok(())
}

/// Renders a matrix in canonical form. Labels are sorted and indices remapped.
pub fn to_canonical(file: &MatrixFile) -> Result<String> {
    for label in file.country_labels().iter().chain(file.product_labels()) {
        check_label(label).map_err(CliError::Usage)?;
    }
    let (countries, row_pos) = sorted_order(file.country_labels());
    let (products, col_pos) = sorted_order(file.product_labels());
    let mut out = String::new();
    let _ = writeln!(out, "countries={} products={} entries={}", countries.len(), products.len(), file.n_entries());
    for label in countries.iter().chain(&products) {
        out.push_str(label);
        out.push('\n');
    }
    match file {
        MatrixFile::Binary(m) => {
            let mut pairs: Vec<(usize, usize)> = m.entries().map(|(i, j)| (row_pos[i], col_pos[j])).collect();
            pairs.sort_unstable();
            for (i, j) in pairs {
                let _ = writeln!(out, "{i} {j}");
            }
        }
        MatrixFile::Valued(x) => {
            let mut cells: Vec<(usize, usize, f64)> =
                x.entries().iter().map(|&(i, j, v)| (row_pos[i], col_pos[j], v)).collect();
            cells.sort_by_key(|c| (c.0, c.1));
            for (i, j, v) in cells {
                let _ = writeln!(out, "{i} {j} {v:?}");
            }
        }
    }
    Ok(out)
}

/// Parses canonical text. `path` only labels error messages.
pub fn parse_canonical(text: &str, path: &Path) -> Result<MatrixFile> {
    let err = |line: usize, message: String| CliError::Parse { path: path.to_path_buf(), line: line as u64, message };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let mut counts = [0usize; 3];
    let fields: Vec<&str> = header.split(' ').collect();
    if fields.len() != 3 {
        return Err(err(1, "expected `countries=<n> products=<m> entries=<z>`".into()));
    }
    for ((field, key), slot) in fields.iter().zip(["countries", "products", "entries"]).zip(counts.iter_mut()) {
        *slot = field
            .strip_prefix(key)
            .and_then(|rest| rest.strip_prefix('='))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| err(1, format!("bad header field `{field}`, expected `{key}=<count>`")))?;
    }
    let [n, m, z] = counts;

    let mut read_labels = |count: usize, what: &str| -> Result<Vec<String>> {
        let mut labels: Vec<String> = Vec::with_capacity(count);
        for _ in 0..count {
            let (no, label) = lines.next().ok_or_else(|| err(0, format!("file ends inside the {what} labels")))?;
            check_label(label).map_err(|m| err(no, m))?;
            if labels.last().is_some_and(|prev| prev.as_str() >= label) {
                return Err(err(no, format!("{what} labels must be strictly ascending")));
            }
            labels.push(label.to_string());
        }
        Ok(labels)
    };
    let countries = read_labels(n, "country")?;
    let products = read_labels(m, "product")?;

    let mut pairs = Vec::with_capacity(z);
    let mut values = Vec::with_capacity(z);
    let mut valued = None;
    for _ in 0..z {
        let (no, line) = lines.next().ok_or_else(|| err(0, format!("expected {z} entries")))?;
        let parts: Vec<&str> = line.split(' ').collect();
        let is_valued = match parts.len() {
            2 => false,
            3 => true,
            _ => return Err(err(no, "entry must be `i j` or `i j v`".into())),
        };
        if *valued.get_or_insert(is_valued) != is_valued {
            return Err(err(no, "binary and valued entries are mixed".into()));
        }
        let i: usize = parts[0].parse().map_err(|_| err(no, format!("bad row index `{}`", parts[0])))?;
        let j: usize = parts[1].parse().map_err(|_| err(no, format!("bad column index `{}`", parts[1])))?;
        if i >= n || j >= m {
            return Err(err(no, format!("entry ({i}, {j}) outside a {n}x{m} matrix")));
        }
        if pairs.last().is_some_and(|&last| last >= (i, j)) {
            return Err(err(no, "entries must be strictly ascending by (i, j)".into()));
        }
        if is_valued {
            let v: f64 = parts[2].parse().map_err(|_| err(no, format!("bad value `{}`", parts[2])))?;
            if !(v.is_finite() && v > 0.0) {
                return Err(err(no, format!("stored values must be positive and finite, got {v}")));
            }
            values.push(v);
        }
        pairs.push((i, j));
    }
    if let Some((no, _)) = lines.find(|(_, l)| !l.is_empty()) {
        return Err(err(no, "trailing content after the last entry".into()));
    }

    Ok(if valued == Some(true) {
        let triplets = pairs.into_iter().zip(values).map(|((i, j), v)| (i, j, v));
        MatrixFile::Valued(ExportMatrix::from_triplets(countries, products, triplets)?)
    } else {
        MatrixFile::Binary(BinaryMatrix::from_entries(countries, products, pairs)?)
    })
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn read_matrix(path: &Path) -> Result<MatrixFile> {
    parse_canonical(&read_text(path)?, path)
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// A whole CSV file with its header, records tagged by physical line number.
struct CsvFile {
    headers: csv::StringRecord,
    records: Vec<(u64, csv::StringRecord)>,
}

impl CsvFile {
    fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        // 1-based line of a byte offset; the csv crate's own count skips blank lines
        let line_of = |offset: u64| {
            let mut at = offset as usize;
            // a record's offset can point at blank lines skipped before it
            while at < bytes.len() && matches!(bytes[at], b'\n' | b'\r') {
                at += 1;
            }
            1 + bytes[..at].iter().filter(|&&b| b == b'\n').count() as u64
        };
        let parse_err = |e: csv::Error| {
            let line = e.position().map_or(0, |p| line_of(p.byte()));
            CliError::Parse { path: path.to_path_buf(), line, message: format!("{:?}", e.into_kind()) }
        };
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes.as_slice());
        let headers = reader.headers().map_err(parse_err)?.clone();
        let mut records = Vec::new();
        for record in reader.records() {
            let record = record.map_err(parse_err)?;
            let line = record.position().map_or(0, |p| line_of(p.byte()));
            records.push((line, record));
        }
        Ok(Self { headers, records })
    }

    /// Reads the file and checks that its header is exactly `expected`.
    fn with_header(path: &Path, expected: &[&str]) -> Result<Self> {
        let file = Self::read(path)?;
        if file.headers.iter().ne(expected.iter().copied()) {
            return Err(CliError::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: format!("expected header `{}`", expected.join(",")),
            });
        }
        Ok(file)
    }
}

fn parse_number(field: &str, what: &str, path: &Path, line: u64) -> Result<f64> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(CliError::Parse { path: path.to_path_buf(), line, message: format!("{what} `{field}` is not a finite number") }),
    }
}

/// Reads a `country,product,value` CSV into an export matrix with sorted
/// labels. Repeated cells are summed in file order.
pub fn read_trade_csv(path: &Path) -> Result<ExportMatrix> {
    let file = CsvFile::with_header(path, &["country", "product", "value"])?;
    let mut rows = Vec::new();
    for (line, record) in file.records {
        let parse = |message: String| CliError::Parse { path: path.to_path_buf(), line, message };
        for label in [&record[0], &record[1]] {
            check_label(label).map_err(parse)?;
        }
        let value = parse_number(&record[2], "value", path, line)?;
        if value < 0.0 {
            return Err(CliError::NegativeValue { path: path.to_path_buf(), line, value });
        }
        rows.push((record[0].to_string(), record[1].to_string(), value));
    }
    let countries: BTreeSet<&str> = rows.iter().map(|r| r.0.as_str()).collect();
    let products: BTreeSet<&str> = rows.iter().map(|r| r.1.as_str()).collect();
    let c_index: BTreeMap<&str, usize> = countries.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let p_index: BTreeMap<&str, usize> = products.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let triplets: Vec<(usize, usize, f64)> =
        rows.iter().map(|(c, p, v)| (c_index[c.as_str()], p_index[p.as_str()], *v)).collect();
    Ok(ExportMatrix::from_triplets(
        countries.iter().map(|s| s.to_string()).collect(),
        products.iter().map(|s| s.to_string()).collect(),
        triplets,
    )?)
}

/// Reads a `country,gdp,natural_rents` CSV.
pub fn read_income_csv(path: &Path) -> Result<IncomePanel> {
    let file = CsvFile::with_header(path, &["country", "gdp", "natural_rents"])?;
    let (mut labels, mut gdp, mut rents) = (Vec::new(), Vec::new(), Vec::new());
    let mut seen = BTreeSet::new();
    for (line, record) in file.records {
        let parse = |message: String| CliError::Parse { path: path.to_path_buf(), line, message };
        check_label(&record[0]).map_err(parse)?;
        if !seen.insert(record[0].to_string()) {
            return Err(parse(format!("duplicate country `{}`", &record[0])));
        }
        let g = parse_number(&record[1], "gdp", path, line)?;
        let r = parse_number(&record[2], "natural_rents", path, line)?;
        if g <= 0.0 {
            return Err(parse(format!("gdp must be positive, got {g}")));
        }
        if r < 0.0 {
            return Err(parse(format!("natural_rents must be non-negative, got {r}")));
        }
        labels.push(record[0].to_string());
        gdp.push(g);
        rents.push(r);
    }
    Ok(IncomePanel::new(labels, gdp, rents)?)
}

/// Reads one numeric column, matched case-insensitively by header name.
pub fn read_column(path: &Path, name: &str) -> Result<Vec<f64>> {
    let file = CsvFile::read(path)?;
    let col = file.headers.iter().position(|h| h.eq_ignore_ascii_case(name)).ok_or_else(|| CliError::Parse {
        path: path.to_path_buf(),
        line: 1,
        message: format!("no `{name}` column"),
    })?;
    let mut values = Vec::new();
    for (line, record) in &file.records {
        let line = *line;
        let field = record.get(col).unwrap_or("");
        values.push(parse_number(field, name, path, line)?);
    }
    Ok(values)
}

/// A cell in an output table.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(u64),
    Float(f64),
    /// A value that could not be computed.
    Missing,
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        if v.is_finite() {
            Cell::Float(v)
        } else {
            Cell::Missing
        }
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::from)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:?}"),
            Cell::Missing => String::new(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Int(v) => Value::from(*v),
            Cell::Float(v) => Value::from(*v),
            Cell::Missing => Value::Null,
        }
    }
}

/// A rectangular table written as CSV or as a JSON array of row objects.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl Table {
    pub fn new(headers: &[&'static str]) -> Self {
        Self { headers: headers.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
        // writing to memory cannot fail
        writer.write_record(&self.headers).expect("in-memory csv");
        for row in &self.rows {
            writer.write_record(row.iter().map(Cell::render)).expect("in-memory csv");
        }
        String::from_utf8(writer.into_inner().expect("in-memory csv")).expect("utf-8 input")
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> =
                    self.headers.iter().zip(row).map(|(h, c)| (h.to_string(), c.to_json())).collect();
                Value::Object(obj)
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&rows).expect("json values serialize");
        s.push('\n');
        s
    }

    /// Writes `<dir>/<stem>.<ext>` and returns the path.
    pub fn write(&self, dir: &Path, stem: &str, format: OutputFormat) -> Result<PathBuf> {
        let path = dir.join(format!("{stem}.{}", format.extension()));
        let body = match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        };
        write_file(&path, &body)?;
        Ok(path)
    }
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    write_file(path, &s)
}
