//! Deterministic artifact emission: every file starts with a comment header
//! carrying the artifact version and the configuration hash, and contains no
//! timestamps or other run-dependent noise.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::mesh::{Field, Mesh};

pub fn config_hash(raw: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(raw);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn header(hash: &str) -> String {
    format!("# pqlap {} config_sha256={hash}", env!("CARGO_PKG_VERSION"))
}

pub struct Emitter {
    dir: PathBuf,
    header: String,
    written: Vec<PathBuf>,
}

impl Emitter {
    pub fn new(dir: &Path, raw_config: &[u8]) -> Result<Emitter> {
        fs::create_dir_all(dir)?;
        Ok(Emitter {
            dir: dir.to_path_buf(),
            header: header(&config_hash(raw_config)),
            written: Vec::new(),
        })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, format!("{}\n{body}", self.header))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn field(&mut self, name: &str, field: &Field) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let mut buf = Vec::new();
        field.export(&mut buf, &self.header)?;
        fs::write(&path, buf)?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn mesh(&mut self, name: &str, mesh: &Mesh) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let mut buf = Vec::new();
        mesh.export(&mut buf, &self.header)?;
        fs::write(&path, buf)?;
        self.written.push(path.clone());
        Ok(path)
    }
}
