//! CSV emission, checksums and the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{KhoError, Result};

/// Shortest text that parses back to exactly `v`. Values that would print
/// with long runs of zeros use exponent notation instead.
pub fn format_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Accumulates CSV text with LF line endings.
#[derive(Debug, Clone)]
pub struct CsvText {
    text: String,
    columns: usize,
    rows: usize,
}

pub enum Cell {
    Int(u64),
    Float(f64),
    Str(&'static str),
}

impl CsvText {
    pub fn new(header: &[&str]) -> Self {
        CsvText {
            text: format!("{}\n", header.join(",")),
            columns: header.len(),
            rows: 0,
        }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        debug_assert_eq!(cells.len(), self.columns);
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            match c {
                Cell::Int(v) => write!(self.text, "{v}").unwrap(),
                Cell::Float(v) => self.text.push_str(&format_f64(*v)),
                Cell::Str(s) => self.text.push_str(s),
            }
        }
        self.text.push('\n');
        self.rows += 1;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes through a sibling temporary file and a rename, so readers never
/// see a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| KhoError::io(parent, e))?;
    }
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, bytes).map_err(|e| KhoError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| KhoError::io(path, e))
}

/// Collects output files under one directory and remembers their checksums.
#[derive(Debug)]
pub struct OutputSet {
    root: PathBuf,
    checksums: BTreeMap<String, String>,
}

impl OutputSet {
    pub fn new(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| KhoError::io(root, e))?;
        Ok(OutputSet {
            root: root.to_path_buf(),
            checksums: BTreeMap::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// `relative` uses `/` separators and is the key in the manifest.
    pub fn write(&mut self, relative: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.root.join(relative), bytes)?;
        self.checksums.insert(relative.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_csv(&mut self, relative: &str, csv: &CsvText) -> Result<()> {
        self.write(relative, csv.as_str().as_bytes())
    }

    pub fn checksums(&self) -> &BTreeMap<String, String> {
        &self.checksums
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Confinement {
    Ok,
    /// The run stopped after `completed_kicks` good periods; the next one
    /// pushed `tail_mass` past the limit.
    Truncated { completed_kicks: usize, breach_kick: usize, tail_mass: f64 },
    NotApplicable,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    pub config: BTreeMap<String, String>,
    pub code_version: String,
    pub wall_time_seconds: f64,
    pub grid_spacing: Option<f64>,
    pub confinement: Confinement,
    /// Headline numbers of the run, for quick inspection.
    pub summary: BTreeMap<String, f64>,
    pub files: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    /// Written last, after every data file.
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join("manifest.json"), self.to_json().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for v in [
            0.0,
            -0.0,
            1.0,
            0.1,
            -2.5,
            std::f64::consts::PI,
            1e-300,
            -3.2e-7,
            6.02e23,
            f64::MAX,
            f64::MIN_POSITIVE,
            5e-324,
            123456.789,
        ] {
            let s = format_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
            assert!(!s.contains(' ') && !s.contains(';'));
        }
        assert_eq!(format_f64(0.25), "0.25");
        assert_eq!(format_f64(13.0), "13");
        assert_eq!(format_f64(1e-7), "1e-7");
    }

    #[test]
    fn csv_text_layout() {
        let mut c = CsvText::new(&["kick", "quantum_energy"]);
        c.row(&[Cell::Int(0), Cell::Float(0.5)]);
        c.row(&[Cell::Int(1), Cell::Float(1e-9)]);
        assert_eq!(c.as_str(), "kick,quantum_energy\n0,0.5\n1,1e-9\n");
        assert_eq!(c.rows(), 2);
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn atomic_write_leaves_no_temporary() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputSet::new(dir.path()).unwrap();
        out.write("states/a.csv", b"x\n").unwrap();
        assert_eq!(fs::read(dir.path().join("states/a.csv")).unwrap(), b"x\n");
        let names: Vec<_> = fs::read_dir(dir.path().join("states"))
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(names.len(), 1);
        assert_eq!(out.checksums()["states/a.csv"], sha256_hex(b"x\n"));
    }

    #[test]
    fn manifest_json_shape() {
        let m = RunManifest {
            experiment: "energy".into(),
            config: BTreeMap::from([("mu".to_string(), "0.5".to_string())]),
            code_version: "0.1.0".into(),
            wall_time_seconds: 1.5,
            grid_spacing: Some(0.25),
            confinement: Confinement::Truncated {
                completed_kicks: 4,
                breach_kick: 5,
                tail_mass: 2e-6,
            },
            summary: BTreeMap::new(),
            files: BTreeMap::from([("energy.csv".to_string(), "00".to_string())]),
        };
        let v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(v["confinement"]["status"], "truncated");
        assert_eq!(v["confinement"]["breach_kick"], 5);
        assert_eq!(v["config"]["mu"], "0.5");
        assert_eq!(v["files"]["energy.csv"], "00");
    }
}
