//! Report assembly and atomic file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use bumplab::GridFunction;
use serde::Serialize;

use crate::config::{Config, Format};
use crate::CliError;

#[derive(Serialize)]
struct Report<'a, R: Serialize> {
    command: &'a str,
    version: &'a str,
    config: &'a Config,
    result: &'a R,
}

/// Files produced by one command, written only once everything succeeded.
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
    json: bool,
    csv: bool,
}

impl Artifacts {
    pub fn new(config: &Config) -> Self {
        Self {
            dir: config.output.dir.clone().unwrap_or_default(),
            files: Vec::new(),
            json: config.wants(Format::Json),
            csv: config.wants(Format::Csv),
        }
    }

    pub fn report<R: Serialize>(&mut self, command: &str, config: &Config, result: &R) -> Result<(), CliError> {
        if !self.json {
            return Ok(());
        }
        let report = Report {
            command,
            version: env!("CARGO_PKG_VERSION"),
            config,
            result,
        };
        let mut text = serde_json::to_vec_pretty(&report)
            .map_err(|e| CliError::Validation(format!("cannot serialise report: {e}")))?;
        text.push(b'\n');
        self.files.push((format!("{}.json", command.replace(' ', "_")), text));
        Ok(())
    }

    /// A CSV with a header line and one row per record.
    pub fn csv<I, R>(&mut self, name: &str, header: &str, rows: I)
    where
        I: IntoIterator<Item = R>,
        R: AsRef<[f64]>,
    {
        if !self.csv {
            return;
        }
        let mut text = format!("{header}\n");
        for row in rows {
            let cells: Vec<String> = row.as_ref().iter().map(|v| format!("{v:.16e}")).collect();
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        self.files.push((name.to_string(), text.into_bytes()));
    }

    pub fn function(&mut self, name: &str, f: &GridFunction) -> Result<(), CliError> {
        if !self.csv {
            return Ok(());
        }
        let mut buf = Vec::new();
        f.write_csv(&mut buf)
            .map_err(|e| CliError::Validation(format!("cannot format {name}: {e}")))?;
        self.files.push((name.to_string(), buf));
        Ok(())
    }

    /// Write every file through a temporary in the target directory and
    /// rename it into place.
    pub fn commit(self) -> Result<Vec<PathBuf>, CliError> {
        let io = |path: &Path, e: std::io::Error| CliError::Validation(format!("cannot write {}: {e}", path.display()));
        std::fs::create_dir_all(&self.dir).map_err(|e| io(&self.dir, e))?;
        let mut written = Vec::new();
        for (name, bytes) in self.files {
            let path = self.dir.join(&name);
            let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(|e| io(&path, e))?;
            tmp.write_all(&bytes).map_err(|e| io(&path, e))?;
            tmp.as_file().sync_all().map_err(|e| io(&path, e))?;
            tmp.persist(&path).map_err(|e| io(&path, e.error))?;
            written.push(path);
        }
        Ok(written)
    }
}
