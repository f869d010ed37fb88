//! Stage files. JSON documents wrap their payload with the config hash; CSV
//! and text files carry it in a leading `#` line.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Serialize, Deserialize)]
pub struct Stamped<T> {
    pub config_hash: String,
    pub stage: String,
    pub data: T,
}

/// Writes into one output directory under one config hash.
#[derive(Debug, Clone)]
pub struct OutputDir {
    pub dir: PathBuf,
    pub hash: String,
}

impl OutputDir {
    pub fn create(dir: &Path, hash: &str) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), hash: hash.to_string() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, stage: &str, data: &T) -> Result<(), CliError> {
        let doc = Stamped { config_hash: self.hash.clone(), stage: stage.to_string(), data };
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        fs::write(self.path(name), text)?;
        Ok(())
    }

    /// Payload of `name` if it exists and was written under this config.
    pub fn read_json<T: DeserializeOwned>(&self, name: &str) -> Result<Option<T>, CliError> {
        let path = self.path(name);
        if !path.exists() {
            return Ok(None);
        }
        let doc: Stamped<T> = serde_json::from_str(&fs::read_to_string(&path)?)?;
        Ok((doc.config_hash == self.hash).then_some(doc.data))
    }

    pub fn write_table(
        &self,
        name: &str,
        header: &[String],
        rows: impl IntoIterator<Item = Vec<f64>>,
    ) -> Result<(), CliError> {
        let mut file = io::BufWriter::new(fs::File::create(self.path(name))?);
        writeln!(file, "# config_hash: {}", self.hash)?;
        write_rows(file, header, rows)
    }

    pub fn write_text(&self, name: &str, body: &str) -> Result<(), CliError> {
        fs::write(self.path(name), format!("# config_hash: {}\n{body}", self.hash))?;
        Ok(())
    }
}

/// CSV of numeric rows.
pub fn write_rows(w: impl Write, header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(f64::to_string))?;
    }
    w.flush()?;
    Ok(())
}
