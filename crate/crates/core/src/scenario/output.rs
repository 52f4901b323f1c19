//! Plot-ready tables and all-or-nothing output writing.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
}

impl Provenance {
    pub fn new(config_text: &str, seed: u64) -> Self {
        use sha2::{Digest, Sha256};
        Self {
            config_sha256: hex::encode(Sha256::digest(config_text.as_bytes())),
            seed,
            version: format!("twpa-core {}", env!("CARGO_PKG_VERSION")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputTable {
    /// File name inside the output directory.
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl OutputTable {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Header and rows only, without provenance lines.
    pub fn body(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                push_number(&mut s, *v);
            }
            s.push('\n');
        }
        s
    }

    pub fn to_csv(&self, prov: &Provenance) -> String {
        format!(
            "! config_sha256={}\n! seed={}\n! version={}\n{}",
            prov.config_sha256,
            prov.seed,
            prov.version,
            self.body()
        )
    }
}

/// Shortest round-trip form, switching to exponent notation for very small
/// or very large magnitudes.
fn push_number(s: &mut String, v: f64) {
    let a = v.abs();
    if v.is_nan() {
        s.push_str("nan");
    } else if a == 0.0 || (1e-4..1e16).contains(&a) || a.is_infinite() {
        let _ = write!(s, "{v}");
    } else {
        let _ = write!(s, "{v:e}");
    }
}

/// Everything a run produces, held in memory until it is written.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub provenance: Provenance,
    pub tables: Vec<OutputTable>,
    pub summary: serde_json::Value,
}

impl RunOutput {
    pub fn summary_json(&self) -> String {
        let doc = serde_json::json!({
            "provenance": self.provenance,
            "summary": self.summary,
            "files": self.tables.iter().map(|t| &t.name).collect::<Vec<_>>(),
        });
        serde_json::to_string_pretty(&doc).expect("summary serializes") + "\n"
    }

    /// Writes every file to a temporary name in `dir` and renames them into
    /// place only once all writes have succeeded.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut files: Vec<(String, String)> = self
            .tables
            .iter()
            .map(|t| (t.name.clone(), t.to_csv(&self.provenance)))
            .collect();
        files.push(("summary.json".into(), self.summary_json()));
        let mut staged = Vec::with_capacity(files.len());
        for (name, content) in &files {
            let mut tmp = tempfile::Builder::new()
                .prefix(".twpa-")
                .suffix(".tmp")
                .tempfile_in(dir)?;
            tmp.write_all(content.as_bytes())?;
            tmp.as_file().sync_all()?;
            staged.push((tmp, dir.join(name)));
        }
        let mut written = Vec::with_capacity(staged.len());
        for (tmp, dest) in staged {
            tmp.persist(&dest).map_err(|e| e.error)?;
            written.push(dest);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = OutputTable::new("x.csv", &["a", "b"]);
        t.push(vec![1.0, 0.5]);
        t.push(vec![f64::NAN, -2e-10]);
        let csv = t.to_csv(&Provenance::new("cfg", 7));
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("! config_sha256="));
        assert_eq!(lines[1], "! seed=7");
        assert_eq!(&lines[3..], ["a,b", "1,0.5", "nan,-2e-10"]);
    }
}
