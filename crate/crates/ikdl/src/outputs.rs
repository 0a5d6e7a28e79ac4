//! Output files are collected in memory and written together at the end of
//! a command, so a failing command leaves nothing behind.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Self {
        Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn paths(&self) -> Vec<PathBuf> {
        self.files.iter().map(|(n, _)| self.path(n)).collect()
    }

    /// Writes every file to a temporary name, then renames them all.
    pub fn commit(self) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let mut staged = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            let tmp = self.dir.join(format!(".{name}.{}.tmp", std::process::id()));
            if let Err(e) = fs::write(&tmp, bytes) {
                let _ = fs::remove_file(&tmp);
                staged.iter().for_each(|(t, _): &(PathBuf, PathBuf)| {
                    let _ = fs::remove_file(t);
                });
                return Err(Error::io(&tmp, e));
            }
            staged.push((tmp, self.path(name)));
        }
        let mut done = Vec::with_capacity(staged.len());
        for (tmp, dst) in staged {
            fs::rename(&tmp, &dst).map_err(|e| Error::io(&dst, e))?;
            done.push(dst);
        }
        Ok(done)
    }
}
