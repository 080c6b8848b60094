use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::write_bytes;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Artifact {
    /// Path relative to the output directory.
    pub path: String,
    pub bytes: usize,
}

/// Artifacts written by one command, with the command line that made them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub command: Vec<String>,
    pub artifacts: Vec<Artifact>,
}

/// Output directory that records everything written into it.
#[derive(Debug)]
pub struct OutDir {
    root: PathBuf,
    manifest: Manifest,
}

impl OutDir {
    pub fn new(root: impl Into<PathBuf>, command: Vec<String>) -> Self {
        Self { root: root.into(), manifest: Manifest { command, artifacts: Vec::new() } }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Resolves `rel` under the root; absolute paths and `..` are refused so
    /// that every artifact stays inside the directory.
    pub fn path(&self, rel: &Path) -> Result<PathBuf> {
        let escapes = rel.is_absolute() || rel.components().any(|c| matches!(c, std::path::Component::ParentDir));
        if escapes {
            return Err(Error::Invariant(format!("output path {} must be relative to --out-dir", rel.display())));
        }
        Ok(self.root.join(rel))
    }

    pub fn write(&mut self, rel: impl AsRef<Path>, bytes: &[u8]) -> Result<PathBuf> {
        let rel = rel.as_ref();
        let path = self.path(rel)?;
        write_bytes(&path, bytes)?;
        let name = rel.to_string_lossy().replace('\\', "/");
        self.manifest.artifacts.retain(|a| a.path != name);
        self.manifest.artifacts.push(Artifact { path: name, bytes: bytes.len() });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, rel: impl AsRef<Path>, value: &T) -> Result<PathBuf> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
        s.push('\n');
        self.write(rel, s.as_bytes())
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    /// Writes the manifest itself.
    pub fn finish(self) -> Result<PathBuf> {
        let path = self.root.join(MANIFEST_FILE);
        let mut s = serde_json::to_string_pretty(&self.manifest).map_err(|e| Error::Parse(e.to_string()))?;
        s.push('\n');
        write_bytes(&path, s.as_bytes())?;
        Ok(path)
    }
}
