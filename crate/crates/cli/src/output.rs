//! All-or-nothing output: files are rendered in memory first, then each is
//! written to a temporary name in the target directory and renamed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use tempfile::NamedTempFile;

#[derive(Default)]
pub struct Bundle {
    files: Vec<(String, String)>,
}

impl Bundle {
    pub fn add(&mut self, name: &str, body: String) {
        self.files.push((name.to_owned(), body));
    }

    pub fn commit(self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        // Stage everything before the first rename so a write error leaves
        // no final file behind.
        let mut staged = Vec::with_capacity(self.files.len());
        for (name, body) in &self.files {
            let mut tmp = NamedTempFile::new_in(dir).with_context(|| format!("staging {name}"))?;
            tmp.write_all(body.as_bytes()).with_context(|| format!("writing {name}"))?;
            tmp.as_file().sync_all().ok();
            staged.push((tmp, dir.join(name)));
        }
        let mut written = Vec::with_capacity(staged.len());
        for (tmp, path) in staged {
            tmp.persist(&path).with_context(|| format!("renaming into {}", path.display()))?;
            written.push(path);
        }
        Ok(written)
    }
}
