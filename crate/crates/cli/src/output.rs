//! Report sinks: JSON lines or CSV, to a file or stdout.

use crate::CliError;
use serde::Serialize;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

pub fn open(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn json_line<W: Write + ?Sized, T: Serialize>(w: &mut W, value: &T) -> Result<(), CliError> {
    serde_json::to_writer(&mut *w, value).map_err(io_err)?;
    writeln!(w).map_err(io_err)
}

/// CSV table with the given header; every row must match its width.
pub fn csv_table<W: Write>(w: W, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header).map_err(csv_err)?;
    for r in rows {
        out.write_record(&r).map_err(csv_err)?;
    }
    out.flush().map_err(io_err)
}

/// Shortest decimal that reads back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("write failed: {e}"))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Config(format!("csv: {e}"))
}
