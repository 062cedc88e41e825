use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Column-ordered table of numbers.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new() }
    }

    fn records(&self) -> Vec<serde_json::Map<String, serde_json::Value>> {
        self.rows
            .iter()
            .map(|row| self.header.iter().zip(row).map(|(h, v)| (h.to_string(), serde_json::json!(v))).collect())
            .collect()
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config_digest: String,
    pub seed: u64,
    pub version: String,
    pub outputs: Vec<String>,
    pub config: serde_json::Value,
}

/// Destination for a run's outputs: files in `--out`, or stdout.
pub struct Sink {
    dir: Option<PathBuf>,
    format: Format,
    written: Vec<String>,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>, format: Format) -> Result<Self, CliError> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d)?;
        }
        Ok(Self { dir, format, written: Vec::new() })
    }

    pub fn format(&self) -> Format {
        self.format
    }

    fn open(&mut self, file: &str) -> Result<Box<dyn Write>, CliError> {
        match &self.dir {
            Some(d) => {
                let path = d.join(file);
                self.written.push(path.display().to_string());
                Ok(Box::new(BufWriter::new(File::create(path)?)))
            }
            None => Ok(Box::new(io::stdout().lock())),
        }
    }

    /// Rows of a serializable record type.
    pub fn rows<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), CliError> {
        match self.format {
            Format::Csv => {
                let w = self.open(&format!("{name}.csv"))?;
                nonclassical::grid::write_csv(rows, w)?;
            }
            Format::Json => self.document(name, &rows)?,
        }
        Ok(())
    }

    pub fn table(&mut self, name: &str, table: &Table) -> Result<(), CliError> {
        match self.format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(self.open(&format!("{name}.csv"))?);
                w.write_record(&table.header)?;
                for row in &table.rows {
                    w.write_record(row.iter().map(|v| v.to_string()))?;
                }
                w.flush()?;
            }
            Format::Json => self.document(name, &table.records())?,
        }
        Ok(())
    }

    /// Structured document, always JSON.
    pub fn document<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut w = self.open(&format!("{name}.json"))?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    /// Plain-text side output; only written with `--out`.
    pub fn text<F>(&mut self, file: &str, write: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut dyn Write) -> nonclassical::Result<()>,
    {
        if self.dir.is_none() {
            log::info!("skipping {file}; pass --out to keep it");
            return Ok(());
        }
        let mut w = self.open(file)?;
        write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// Write the manifest next to the outputs, or to stderr without `--out`.
    pub fn finish(mut self, subcommand: &str, seed: u64, config: serde_json::Value) -> Result<(), CliError> {
        let manifest = RunManifest {
            subcommand: subcommand.to_string(),
            config_digest: digest(subcommand, seed, &config),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: std::mem::take(&mut self.written),
            config,
        };
        match &self.dir {
            Some(d) => {
                let mut w = BufWriter::new(File::create(d.join("manifest.json"))?);
                serde_json::to_writer_pretty(&mut w, &manifest)?;
                writeln!(w)?;
                w.flush()?;
            }
            None => eprintln!("{}", serde_json::to_string(&manifest)?),
        }
        Ok(())
    }
}

/// SHA-256 over the canonical JSON of the resolved inputs.
pub fn digest(subcommand: &str, seed: u64, config: &serde_json::Value) -> String {
    let canonical = serde_json::json!({ "subcommand": subcommand, "seed": seed, "config": config });
    hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
}
