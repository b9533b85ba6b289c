//! Bit-exact matrix files, function JSON, CSV symbol import and
//! deterministic report bundles with a hashed manifest.
//!
//! Matrix file layout (little endian):
//!
//! ```text
//! "PDOS" | version u32 = 1 | blob length u32 | level JSON blob | M u64
//! | M·M entries, row-major, each re f64 then im f64
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::calculus::OperatorMatrix;
use crate::error::{Error, Result};
use crate::group::{GroupLevel, LevelSpec};
use crate::symbol::SymbolGrid;
use crate::transform::{GridFunction, SpectrumFunction};

pub const MAGIC: &[u8; 4] = b"PDOS";
pub const FORMAT_VERSION: u32 = 1;
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST: &str = "manifest.json";
pub const TIMING: &str = "timing.json";

fn format_error(offset: usize, reason: impl Into<String>) -> Error {
    Error::Format {
        offset: offset as u64,
        reason: reason.into(),
    }
}

pub fn encode_matrix(a: &OperatorMatrix) -> Vec<u8> {
    let blob = a.level().to_json();
    let m = a.size();
    let mut out = Vec::with_capacity(24 + blob.len() + 16 * m * m);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(blob.len() as u32).to_le_bytes());
    out.extend_from_slice(blob.as_bytes());
    out.extend_from_slice(&(m as u64).to_le_bytes());
    let e = a.entries();
    for i in 0..m {
        for j in 0..m {
            out.extend_from_slice(&e[(i, j)].re.to_le_bytes());
            out.extend_from_slice(&e[(i, j)].im.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(format_error(
                self.pos,
                format!("truncated: {what} needs {n} bytes, {} left", self.bytes.len() - self.pos),
            ));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn decode_matrix(bytes: &[u8]) -> Result<OperatorMatrix> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(format_error(0, "magic: expected PDOS"));
    }
    let version = r.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(format_error(4, format!("unsupported version {version}")));
    }
    let len = r.u32("blob length")? as usize;
    let blob_at = r.pos;
    let blob = r.take(len, "level descriptor")?;
    let text = std::str::from_utf8(blob).map_err(|_| format_error(blob_at, "descriptor is not UTF-8"))?;
    let level = GroupLevel::from_json(text).map_err(|e| format_error(blob_at, format!("descriptor: {e}")))?;
    let m_at = r.pos;
    let m = r.u64("matrix size")?;
    if m != level.size() as u64 {
        return Err(format_error(m_at, format!("size {m} does not match the level ({})", level.size())));
    }
    let m = m as usize;
    let payload = r.take(16 * m * m, "payload")?;
    if r.pos != bytes.len() {
        return Err(format_error(r.pos, "trailing bytes after payload"));
    }
    let f = |k: usize| f64::from_le_bytes(payload[8 * k..8 * k + 8].try_into().unwrap());
    let entries = DMatrix::from_fn(m, m, |i, j| {
        let k = 2 * (i * m + j);
        Complex64::new(f(k), f(k + 1))
    });
    OperatorMatrix::new(&level, entries, "loaded")
}

pub fn save_matrix(a: &OperatorMatrix, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_matrix(a))?;
    Ok(())
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<OperatorMatrix> {
    decode_matrix(&fs::read(path)?)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionFile {
    kind: String,
    level: LevelSpec,
    values: Vec<[f64; 2]>,
}

fn function_json(kind: &str, level: &GroupLevel, values: &[Complex64]) -> Result<Vec<u8>> {
    let file = FunctionFile {
        kind: kind.into(),
        level: level.spec(),
        values: values.iter().map(|v| [v.re, v.im]).collect(),
    };
    to_canonical_json(&file)
}

fn parse_function(bytes: &[u8], kind: &str) -> Result<(GroupLevel, Vec<Complex64>)> {
    let file: FunctionFile =
        serde_json::from_slice(bytes).map_err(|e| format_error(0, format!("function JSON: {e}")))?;
    if file.kind != kind {
        return Err(format_error(0, format!("expected a {kind} function, found {}", file.kind)));
    }
    let level = GroupLevel::from_spec(&file.level)?;
    Ok((level, file.values.iter().map(|v| Complex64::new(v[0], v[1])).collect()))
}

pub fn grid_function_json(f: &GridFunction) -> Result<Vec<u8>> {
    function_json("grid", f.level(), f.values())
}

pub fn spectrum_function_json(f: &SpectrumFunction) -> Result<Vec<u8>> {
    function_json("spectrum", f.level(), f.values())
}

pub fn parse_grid_function(bytes: &[u8]) -> Result<GridFunction> {
    let (level, values) = parse_function(bytes, "grid")?;
    GridFunction::new(level, values)
}

pub fn parse_spectrum_function(bytes: &[u8]) -> Result<SpectrumFunction> {
    let (level, values) = parse_function(bytes, "spectrum")?;
    SpectrumFunction::new(level, values)
}

#[derive(Deserialize)]
struct CsvRow {
    x_index: i64,
    dual_dft_index: i64,
    re: f64,
    im: f64,
}

/// Reads `x_index, dual_dft_index, re, im` rows covering the whole grid.
pub fn import_symbol_csv(path: impl AsRef<Path>, level: &GroupLevel) -> Result<SymbolGrid> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(csv_error)?;
    let headers = reader.headers().map_err(csv_error)?.clone();
    for want in ["x_index", "dual_dft_index", "re", "im"] {
        if !headers.iter().any(|h| h == want) {
            return Err(format_error(0, format!("missing column `{want}`")));
        }
    }
    let m = level.size();
    let mut values: Vec<Option<Complex64>> = vec![None; m * m];
    let mut record = csv::StringRecord::new();
    loop {
        let offset = reader.position().byte() as usize;
        if !reader.read_record(&mut record).map_err(csv_error)? {
            break;
        }
        let row: CsvRow = record
            .deserialize(Some(&headers))
            .map_err(|e| format_error(offset, format!("bad row: {e}")))?;
        let in_range = |v: i64| (0..m as i64).contains(&v);
        if !in_range(row.x_index) || !in_range(row.dual_dft_index) {
            return Err(format_error(
                offset,
                format!("bad index (x={}, xi={}) for M={m}", row.x_index, row.dual_dft_index),
            ));
        }
        let xi = level.position_of_dft(row.dual_dft_index as usize);
        let slot = &mut values[xi * m + row.x_index as usize];
        if slot.is_some() {
            return Err(format_error(
                offset,
                format!("duplicate cell (x={}, xi={})", row.x_index, row.dual_dft_index),
            ));
        }
        *slot = Some(Complex64::new(row.re, row.im));
    }
    let end = reader.position().byte() as usize;
    if let Some(i) = values.iter().position(Option::is_none) {
        let (x, xi) = (i % m, level.dft_index(i / m));
        return Err(format_error(end, format!("missing cell (x={x}, xi={xi})")));
    }
    SymbolGrid::new(
        level,
        values.into_iter().map(Option::unwrap).collect(),
        format!("csv:{}", path.display()),
    )
}

fn csv_error(e: csv::Error) -> Error {
    let offset = e.position().map_or(0, |p| p.byte());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => format_error(offset as usize, format!("csv: {other:?}")),
    }
}

/// JSON formatter with 17 significant digits for every float.
struct FixedFloats;

impl serde_json::ser::Formatter for FixedFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{}", format_float(value))
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// `d.dddddddddddddddde±x`: round-trips every finite binary64.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Sorted keys, fixed float formatting, trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let value = serde_json::to_value(value).map_err(|e| Error::NumericalFailure(e.to_string()))?;
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloats);
    value.serialize(&mut ser).map_err(|e| Error::NumericalFailure(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

/// A tabular report: `{op, level, inputs, table, verdict}` plus scalars.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub op: String,
    pub level: String,
    pub inputs: BTreeMap<String, Value>,
    pub table: Table,
    pub verdict: String,
    pub summary: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.columns).map_err(csv_error)?;
        for row in &self.rows {
            w.write_record(row.iter().map(csv_cell)).map_err(csv_error)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Number(n) if n.is_f64() => format_float(n.as_f64().unwrap()),
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl Report {
    pub fn new(op: &str, level: impl ToString) -> Self {
        Report {
            op: op.into(),
            level: level.to_string(),
            inputs: BTreeMap::new(),
            table: Table::default(),
            verdict: String::new(),
            summary: BTreeMap::new(),
        }
    }

    pub fn input(mut self, key: &str, value: impl Serialize) -> Self {
        self.inputs.insert(key.into(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }

    pub fn summary(mut self, key: &str, value: impl Serialize) -> Self {
        self.summary.insert(key.into(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }

    pub fn with_table(mut self, table: Table) -> Self {
        self.table = table;
        self
    }

    pub fn with_verdict(mut self, verdict: impl Into<String>) -> Self {
        self.verdict = verdict.into();
        self
    }

    /// File stem inside the bundle.
    pub fn stem(&self) -> String {
        self.op.replace(|c: char| !c.is_ascii_alphanumeric() && c != '-', "_")
    }
}

#[derive(Serialize, Deserialize, Default)]
struct Manifest {
    artifact_version: String,
    hash_algorithm: String,
    config: Value,
    files: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// An output directory with a manifest listing every file and its hash.
/// Writes go through one `Bundle` at a time.
pub struct Bundle {
    dir: PathBuf,
}

impl Bundle {
    pub fn create(dir: impl AsRef<Path>) -> Result<Self> {
        fs::create_dir_all(dir.as_ref())?;
        Ok(Bundle {
            dir: dir.as_ref().to_path_buf(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn read_manifest(&self) -> Result<Manifest> {
        let path = self.dir.join(MANIFEST);
        if !path.exists() {
            return Ok(Manifest {
                artifact_version: ARTIFACT_VERSION.into(),
                hash_algorithm: "sha256".into(),
                config: Value::Null,
                files: BTreeMap::new(),
            });
        }
        serde_json::from_slice(&fs::read(&path)?)
            .map_err(|e| format_error(0, format!("manifest: {e}")))
    }

    fn write_manifest(&self, manifest: &Manifest) -> Result<()> {
        fs::write(self.dir.join(MANIFEST), to_canonical_json(manifest)?)?;
        Ok(())
    }

    /// Writes `rel` (a path inside the bundle) and records its hash.
    pub fn write_file(&self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        let mut manifest = self.read_manifest()?;
        manifest.files.insert(rel.replace('\\', "/"), sha256_hex(bytes));
        self.write_manifest(&manifest)
    }

    pub fn set_config(&self, config: &impl Serialize) -> Result<()> {
        let mut manifest = self.read_manifest()?;
        manifest.config = serde_json::to_value(config).map_err(|e| Error::NumericalFailure(e.to_string()))?;
        self.write_manifest(&manifest)
    }

    /// `<prefix><op>.json` and `<prefix><op>.csv`.
    pub fn write_report(&self, prefix: &str, report: &Report) -> Result<()> {
        let stem = format!("{prefix}{}", report.stem());
        self.write_file(&format!("{stem}.json"), &to_canonical_json(report)?)?;
        self.write_file(&format!("{stem}.csv"), &report.table.to_csv()?)
    }

    /// Unhashed timing record; never listed in the manifest.
    pub fn write_timing(&self, value: &impl Serialize) -> Result<()> {
        fs::write(self.dir.join(TIMING), to_canonical_json(value)?)?;
        Ok(())
    }
}

pub fn write_report(dir: impl AsRef<Path>, report: &Report) -> Result<()> {
    Bundle::create(dir)?.write_report("", report)
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub checked: usize,
    pub mismatched: Vec<String>,
    pub missing: Vec<String>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.mismatched.is_empty() && self.missing.is_empty()
    }
}

/// Recomputes every hash listed in the manifest.
pub fn verify(dir: impl AsRef<Path>) -> Result<VerifyReport> {
    let bundle = Bundle {
        dir: dir.as_ref().to_path_buf(),
    };
    if !bundle.dir.join(MANIFEST).exists() {
        return Err(Error::Io(io::Error::new(
            io::ErrorKind::NotFound,
            format!("no {MANIFEST} in {}", bundle.dir.display()),
        )));
    }
    let manifest = bundle.read_manifest()?;
    let mut report = VerifyReport {
        checked: manifest.files.len(),
        mismatched: Vec::new(),
        missing: Vec::new(),
    };
    for (rel, hash) in &manifest.files {
        match fs::read(bundle.dir.join(rel)) {
            Ok(bytes) if sha256_hex(&bytes) == *hash => {}
            Ok(_) => report.mismatched.push(rel.clone()),
            Err(_) => report.missing.push(rel.clone()),
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::assemble;
    use crate::group::GroupDescriptor;
    use crate::symbol::SymbolSource;

    fn level(p: u64, n: u32) -> GroupLevel {
        GroupLevel::new(GroupDescriptor::padic(p, 1).unwrap(), n).unwrap()
    }

    #[test]
    fn matrix_round_trip_and_errors() {
        let l = level(2, 2);
        let a = assemble(&SymbolSource::builtin("vladimirov:s=1").unwrap().eval_grid(&l).unwrap());
        let bytes = encode_matrix(&a);
        let back = decode_matrix(&bytes).unwrap();
        assert_eq!(encode_matrix(&back), bytes);
        match decode_matrix(&bytes[..bytes.len() - 3]) {
            Err(Error::Format { offset, .. }) => assert!(offset > 0),
            other => panic!("{other:?}"),
        }
        let mut bad = bytes.clone();
        bad[0] = b'X';
        match decode_matrix(&bad) {
            Err(Error::Format { offset: 0, reason }) => assert!(reason.contains("magic")),
            other => panic!("{other:?}"),
        }
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(decode_matrix(&bad), Err(Error::Format { offset: 4, .. })));
        let mut long = bytes;
        long.push(0);
        assert!(decode_matrix(&long).is_err());
    }

    #[test]
    fn canonical_json() {
        let mut m = BTreeMap::new();
        m.insert("b", 0.1);
        m.insert("a", f64::NAN);
        let text = String::from_utf8(to_canonical_json(&m).unwrap()).unwrap();
        assert_eq!(text, "{\"a\":null,\"b\":1.0000000000000001e-1}\n");
        assert_eq!("1.0000000000000001e-1".parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn function_json_round_trip() {
        let l = level(3, 2);
        let f = GridFunction::from_fn(&l, |x| Complex64::new((x as f64).sqrt(), -1.0 / 3.0));
        let back = parse_grid_function(&grid_function_json(&f).unwrap()).unwrap();
        assert_eq!(back, f);
        assert!(parse_spectrum_function(&grid_function_json(&f).unwrap()).is_err());
    }
}
