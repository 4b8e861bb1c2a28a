//! Output directories written in a sibling staging directory and renamed
//! into place, so a run leaves either a complete directory or none.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Result, RunError};

/// Name of the resolved config; its presence marks a directory as ours and
/// safe to replace.
pub const RESOLVED_CONFIG: &str = "config.resolved";
pub const METADATA: &str = "metadata.json";
pub const DIAGNOSTICS: &str = "diagnostics.json";

#[derive(Debug)]
pub struct Staging {
    tmp: PathBuf,
    target: PathBuf,
    committed: bool,
}

impl Staging {
    pub fn new(target: &Path) -> Result<Self> {
        let name = target
            .file_name()
            .ok_or_else(|| RunError::Config(format!("output_dir `{}` has no final component", target.display())))?;
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).map_err(|e| RunError::io(format!("create {}", parent.display()), e))?;
        let tmp = parent.join(format!(".{}.partial-{}", name.to_string_lossy(), std::process::id()));
        if tmp.exists() {
            fs::remove_dir_all(&tmp).map_err(|e| RunError::io(format!("clear {}", tmp.display()), e))?;
        }
        fs::create_dir(&tmp).map_err(|e| RunError::io(format!("create {}", tmp.display()), e))?;
        Ok(Self {
            tmp,
            target: target.to_path_buf(),
            committed: false,
        })
    }

    pub fn target(&self) -> &Path {
        &self.target
    }

    pub fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<()> {
        let p = self.tmp.join(name);
        fs::write(&p, bytes).map_err(|e| RunError::io(format!("write {name}"), e))
    }

    /// Streams into `name` through a buffered writer.
    pub fn write_with<F>(&self, name: &str, f: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
    {
        let p = self.tmp.join(name);
        let file = fs::File::create(&p).map_err(|e| RunError::io(format!("create {name}"), e))?;
        let mut w = BufWriter::new(file);
        f(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| RunError::io(format!("write {name}"), e))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value).expect("report serializes");
        s.push('\n');
        self.write_bytes(name, s.as_bytes())
    }

    pub fn write_csv<S, I>(&self, name: &str, rows: I) -> Result<()>
    where
        S: Serialize,
        I: IntoIterator<Item = S>,
    {
        self.write_with(name, |w| {
            let mut c = csv::Writer::from_writer(w);
            for r in rows {
                c.serialize(r).map_err(std::io::Error::other)?;
            }
            c.flush()
        })
    }

    /// Moves the staged files to the target. An existing target is replaced
    /// only when it holds a resolved config from an earlier run.
    pub fn commit(mut self) -> Result<PathBuf> {
        if self.target.exists() {
            let ours = self.target.join(RESOLVED_CONFIG).is_file();
            let empty = fs::read_dir(&self.target).map(|mut d| d.next().is_none()).unwrap_or(false);
            if !(ours || empty) {
                return Err(RunError::io(
                    format!("replace {}", self.target.display()),
                    std::io::Error::new(
                        std::io::ErrorKind::AlreadyExists,
                        "directory exists and was not written by fracspde",
                    ),
                ));
            }
            fs::remove_dir_all(&self.target)
                .map_err(|e| RunError::io(format!("remove {}", self.target.display()), e))?;
        }
        fs::rename(&self.tmp, &self.target).map_err(|e| RunError::io(format!("rename to {}", self.target.display()), e))?;
        self.committed = true;
        Ok(self.target.clone())
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.tmp);
        }
    }
}
