//! Staged output files, written together or not at all.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::error::{CliError, CliResult};

/// Output files staged as temporaries next to their targets. Nothing is
/// visible at the target paths until [`Outputs::commit`], which restores any
/// earlier contents if one of the moves fails.
#[derive(Default)]
pub struct Outputs {
    staged: Vec<(NamedTempFile, PathBuf)>,
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::data(format!("{}: {e}", path.display()))
}

impl Outputs {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stage(&mut self, path: &Path, contents: &[u8]) -> CliResult<()> {
        if self.staged.iter().any(|(_, p)| p == path) {
            return Err(CliError::config(format!("{} is named as more than one output", path.display())));
        }
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        let mut tmp = NamedTempFile::new_in(dir).map_err(|e| io_error(path, e))?;
        tmp.write_all(contents).map_err(|e| io_error(path, e))?;
        tmp.as_file().sync_all().map_err(|e| io_error(path, e))?;
        self.staged.push((tmp, path.to_path_buf()));
        Ok(())
    }

    pub fn commit(self) -> CliResult<Vec<PathBuf>> {
        let mut done: Vec<(PathBuf, Option<Vec<u8>>)> = Vec::new();
        for (tmp, path) in self.staged {
            let previous = fs::read(&path).ok();
            if let Err(e) = tmp.persist(&path) {
                for (p, old) in done.iter().rev() {
                    let _ = match old {
                        Some(bytes) => fs::write(p, bytes),
                        None => fs::remove_file(p),
                    };
                }
                return Err(io_error(&path, e.error));
            }
            done.push((path, previous));
        }
        Ok(done.into_iter().map(|(p, _)| p).collect())
    }
}

/// Serialises a header and rows as CSV.
pub fn csv_bytes(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| CliError::data(e.to_string()))
}

/// Shortest text that parses back to exactly `v`.
pub fn num(v: f64) -> String {
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nothing_is_written_before_commit() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.txt");
        let mut out = Outputs::new();
        out.stage(&a, b"hello").unwrap();
        assert!(!a.exists());
        drop(out);
        assert!(!a.exists());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn failed_commit_restores_earlier_files() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.txt");
        let b = dir.path().join("b.txt");
        std::fs::write(&a, "old").unwrap();
        let mut out = Outputs::new();
        out.stage(&a, b"new").unwrap();
        out.stage(&b, b"new").unwrap();
        out.stage(&dir.path().join("c"), b"x").unwrap();
        // A directory in the way makes the last move fail.
        std::fs::create_dir(dir.path().join("c")).unwrap();
        std::fs::write(dir.path().join("c").join("f"), "x").unwrap();
        assert!(out.commit().is_err());
        assert_eq!(std::fs::read_to_string(&a).unwrap(), "old");
        assert!(!b.exists());
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 1e21, 0.0] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn duplicate_targets_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.txt");
        let mut out = Outputs::new();
        out.stage(&a, b"1").unwrap();
        assert!(out.stage(&a, b"2").is_err());
    }
}
