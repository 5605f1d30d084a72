use std::fs;
use std::io::{self, Write};
use std::path::Path;

use clap::ValueEnum;
use percq_core::report::{to_json, write_csv};
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// A homogeneous table with a JSON view.
pub struct Table<'a, T: Serialize> {
    pub header: &'a [&'a str],
    pub rows: Vec<Vec<String>>,
    pub json: &'a T,
}

pub fn render<T: Serialize>(table: &Table<'_, T>, format: Format) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Json => Ok(to_json(table.json)?.into_bytes()),
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(&mut buf, table.header, &table.rows)?;
            Ok(buf)
        }
    }
}

/// Writes to `path`, or stdout when absent.
pub fn emit(bytes: &[u8], path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(path) => fs::write(path, bytes)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Io(format!("cannot write to stdout: {e}")))
        }
    }
}
