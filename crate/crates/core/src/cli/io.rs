//! CSV, provenance and atomic file output.
//!
//! CSV dialect: comma separator, `.` decimal point, one header row, UTF-8,
//! LF line endings. Floats use Rust's shortest round-trip formatting, so
//! per-case files re-parse to the exact values that were written.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CaseFailure;
use crate::error::{Error, Result};

/// Write via a temporary file in the target directory, then rename.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub(crate) fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory CSV write");
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        w.write_record(row).expect("in-memory CSV write");
    }
    w.into_inner().expect("in-memory CSV flush")
}

pub(crate) fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Empty string for undefined values.
pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// A fully read CSV file with a header row.
#[derive(Debug, Clone)]
pub struct CsvTable {
    pub path: PathBuf,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// 1-based file line of each row, for error messages.
    pub lines: Vec<usize>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    pub fn require_column(&self, name: &str) -> Result<usize> {
        self.column(name).ok_or_else(|| Error::Csv {
            path: self.path.clone(),
            row: 1,
            reason: format!("missing column '{name}' (have: {})", self.headers.join(", ")),
        })
    }

    pub fn error(&self, row: usize, reason: impl Into<String>) -> Error {
        Error::Csv {
            path: self.path.clone(),
            row: self.lines[row],
            reason: reason.into(),
        }
    }

    /// Numeric cell; empty cells are `None`.
    pub fn f64_at(&self, row: usize, col: usize) -> Result<Option<f64>> {
        let cell = self.rows[row][col].trim();
        if cell.is_empty() {
            return Ok(None);
        }
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Some(v)),
            _ => Err(self.error(row, format!("column '{}': '{cell}' is not a finite number", self.headers[col]))),
        }
    }
}

pub fn read_csv_table(path: &Path) -> Result<CsvTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        lines.push(record.position().map_or(0, |p| p.line() as usize));
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok(CsvTable {
        path: path.to_path_buf(),
        headers,
        rows,
        lines,
    })
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        kind => Error::Csv {
            path: path.to_path_buf(),
            row,
            reason: format!("{kind:?}"),
        },
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex(&Sha256::digest(&bytes)))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

/// Reproducibility record written next to every output. `hash` covers all
/// other fields; there are no timestamps, so identical runs give identical
/// hashes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
    pub processed: Vec<String>,
    pub failures: Vec<CaseFailure>,
    pub hash: String,
}

impl Provenance {
    pub fn new(command: &str, config: &impl Serialize) -> Result<Self> {
        Ok(Self {
            tool: "voxelval".into(),
            version: crate::VERSION.into(),
            command: command.into(),
            config: serde_json::to_value(config)?,
            inputs: Vec::new(),
            outputs: Vec::new(),
            processed: Vec::new(),
            failures: Vec::new(),
            hash: String::new(),
        })
    }

    /// Paths are recorded relative to `base` when possible.
    pub fn add_input(&mut self, path: &Path, base: &Path) -> Result<()> {
        self.inputs.push(file_hash(path, base)?);
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path, base: &Path) -> Result<()> {
        self.outputs.push(file_hash(path, base)?);
        Ok(())
    }

    pub fn compute_hash(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)?;
        if let Some(map) = value.as_object_mut() {
            map.remove("hash");
        }
        Ok(hex(&Sha256::digest(serde_json::to_string(&value)?.as_bytes())))
    }

    /// Sort file lists, fill in `hash` and write to `path`.
    pub fn finish(mut self, path: &Path) -> Result<String> {
        self.inputs.sort_by(|a, b| a.path.cmp(&b.path));
        self.outputs.sort_by(|a, b| a.path.cmp(&b.path));
        self.hash = self.compute_hash()?;
        write_json(path, &self)?;
        Ok(self.hash)
    }
}

fn file_hash(path: &Path, base: &Path) -> Result<FileHash> {
    let shown = path.strip_prefix(base).unwrap_or(path);
    Ok(FileHash {
        path: shown.to_string_lossy().replace('\\', "/"),
        sha256: sha256_file(path)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_dialect_is_pinned() {
        let bytes = csv_bytes(&["a", "b"], &[vec!["1.5".into(), "x, y".into()], vec!["".into(), "2".into()]]);
        assert_eq!(String::from_utf8(bytes).unwrap(), "a,b\n1.5,\"x, y\"\n,2\n");
        assert_eq!(fmt_opt(Some(0.1)), "0.1");
        assert_eq!(fmt_opt(None), "");
    }

    #[test]
    fn csv_errors_carry_row_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        std::fs::write(&p, "case,v\na,1\nb,zz\n").unwrap();
        let t = read_csv_table(&p).unwrap();
        let col = t.require_column("v").unwrap();
        assert_eq!(t.f64_at(0, col).unwrap(), Some(1.0));
        match t.f64_at(1, col) {
            Err(Error::Csv { row, .. }) => assert_eq!(row, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(t.require_column("w"), Err(Error::Csv { .. })));
        std::fs::write(&p, "case,v\na,1,extra\n").unwrap();
        assert!(matches!(read_csv_table(&p), Err(Error::Csv { row: 2, .. })));
    }

    #[test]
    fn provenance_hash_is_stable_and_sensitive() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.txt");
        std::fs::write(&input, "abc").unwrap();
        let make = || {
            let mut p = Provenance::new("test", &serde_json::json!({"k": 1})).unwrap();
            p.add_input(&input, dir.path()).unwrap();
            p
        };
        let h1 = make().finish(&dir.path().join("p1.json")).unwrap();
        let h2 = make().finish(&dir.path().join("p2.json")).unwrap();
        assert_eq!(h1, h2);
        assert_eq!(
            make().inputs[0].sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        std::fs::write(&input, "abd").unwrap();
        assert_ne!(make().finish(&dir.path().join("p3.json")).unwrap(), h1);
    }
}
