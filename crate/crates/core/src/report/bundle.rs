use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::table::Table;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
}

/// Named output files kept in memory until written; paths are relative and sorted.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReportBundle {
    files: BTreeMap<String, Vec<u8>>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl ReportBundle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, path: impl Into<String>, content: impl Into<Vec<u8>>) {
        let path = path.into();
        assert!(path != MANIFEST_NAME, "manifest name is reserved");
        self.files.insert(path, content.into());
    }

    /// Adds `stem.csv` or `stem.json`.
    pub fn add_table(&mut self, stem: &str, table: &Table, format: Format) {
        let body = match format {
            Format::Csv => table.to_csv(),
            Format::Json => table.to_json(),
        };
        self.add(format!("{stem}.{}", format.ext()), body);
    }

    pub fn get(&self, path: &str) -> Option<&[u8]> {
        self.files.get(path).map(Vec::as_slice)
    }

    pub fn get_str(&self, path: &str) -> Option<&str> {
        self.get(path).and_then(|b| std::str::from_utf8(b).ok())
    }

    pub fn paths(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            files: self
                .files
                .iter()
                .map(|(p, b)| ManifestEntry {
                    path: p.clone(),
                    sha256: sha256_hex(b),
                    bytes: b.len() as u64,
                })
                .collect(),
        }
    }

    /// Writes every file plus `manifest.json` under `dir`.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<Manifest> {
        std::fs::create_dir_all(dir)?;
        for (p, b) in &self.files {
            let path = dir.join(p);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(path, b)?;
        }
        let m = self.manifest();
        let text = serde_json::to_string_pretty(&m).expect("manifest serializes") + "\n";
        std::fs::write(dir.join(MANIFEST_NAME), text)?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_hashes_every_file() {
        let mut b = ReportBundle::new();
        b.add("a.txt", "hello");
        b.add("sub/b.txt", "");
        let m = b.manifest();
        assert_eq!(m.files.len(), 2);
        assert_eq!(
            m.files[0].sha256,
            "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824"
        );
        let dir = tempfile::tempdir().unwrap();
        b.write_to(dir.path()).unwrap();
        for e in &m.files {
            let on_disk = std::fs::read(dir.path().join(&e.path)).unwrap();
            assert_eq!(sha256_hex(&on_disk), e.sha256);
        }
        assert!(dir.path().join(MANIFEST_NAME).exists());
    }
}
