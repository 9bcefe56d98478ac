//! All-or-nothing output writing: files are accumulated in memory and only
//! land on disk once the whole command has succeeded. A failure mid-write
//! removes anything already written, so errors never leave partial output.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;

pub struct OutputSet {
    out_dir: PathBuf,
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl OutputSet {
    pub fn new(out_dir: &Path) -> Self {
        Self {
            out_dir: out_dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    pub fn push(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((self.out_dir.join(name), bytes));
    }

    pub fn push_text(&mut self, name: &str, text: String) {
        self.push(name, text.into_bytes());
    }

    /// Writes every accumulated file; on failure removes the ones already
    /// written and reports the error.
    pub fn commit(self) -> anyhow::Result<Vec<PathBuf>> {
        fs::create_dir_all(&self.out_dir)
            .with_context(|| format!("creating {}", self.out_dir.display()))?;
        let mut written = Vec::new();
        for (path, bytes) in &self.files {
            match fs::write(path, bytes) {
                Ok(()) => written.push(path.clone()),
                Err(e) => {
                    for done in &written {
                        let _ = fs::remove_file(done);
                    }
                    return Err(e).with_context(|| format!("writing {}", path.display()));
                }
            }
        }
        Ok(written)
    }
}

/// CSV assembly helper: header plus rows, one trailing newline.
pub fn csv_text(header: &str, rows: &[String]) -> String {
    let mut out = String::with_capacity(header.len() + rows.iter().map(|r| r.len() + 1).sum::<usize>() + 1);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(row);
        out.push('\n');
    }
    out
}
