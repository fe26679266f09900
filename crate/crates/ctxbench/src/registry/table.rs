use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::io::{csv_error, IoError};

/// An in-memory string table: the unit that views transform and blobs store.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Reads a headered CSV. Every row must have the header's width.
    pub fn from_csv<R: Read>(input: R) -> Result<Self, IoError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let columns = rdr.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_error)?;
            rows.push(rec.iter().map(str::to_string).collect());
        }
        Ok(Self { columns, rows })
    }

    /// Canonical CSV bytes: minimal quoting, `\n` line endings.
    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    /// Rows as JSON objects keyed by column name.
    pub fn row_objects(&self) -> Vec<serde_json::Map<String, serde_json::Value>> {
        self.rows.iter().map(|r| row_object(&self.columns, r)).collect()
    }
}

pub(crate) fn row_object(columns: &[String], row: &[String]) -> serde_json::Map<String, serde_json::Value> {
    columns
        .iter()
        .zip(row)
        .map(|(c, v)| (c.clone(), serde_json::Value::String(v.clone())))
        .collect()
}

pub(crate) fn csv_writer<W: std::io::Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}
