//! Text file formats: samples and predictions (CSV or JSON lines), graph edge
//! lists (TSV), trial and binding tables, expression matrices and embedding
//! tables.
//!
//! Every parse error that points at input carries the 1-based line number.

mod embeddings;
mod expression;
mod graph;
mod records;
mod samples;

use ctxbench_core::DataError;

pub use embeddings::{load_embeddings, read_embeddings, store_embeddings, write_embeddings};
pub use expression::{parse_expression, write_expression};
pub use graph::{parse_graph, write_graph};
pub use records::{parse_binding, parse_trials, write_binding, write_trials, BindingOptions};
pub use samples::{
    parse_predictions, parse_prediction_rows, parse_samples, write_predictions, write_samples, Format,
};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("line {line}: {message}")]
    MalformedRow { line: u64, message: String },
    #[error("line {line}: duplicate key ({entity}, {context})")]
    DuplicateKey { line: u64, entity: String, context: String },
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error("missing required column {0:?}")]
    MissingColumn(String),
    #[error("corrupt file: {0}")]
    CorruptFile(String),
    #[error("row {entity} has {found} values but the table dimension is {expected}")]
    DimMismatch { entity: String, expected: usize, found: usize },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl IoError {
    pub(crate) fn row(line: u64, message: impl ToString) -> Self {
        IoError::MalformedRow {
            line,
            message: message.to_string(),
        }
    }
}

/// Maps a `csv` error to a line-numbered row error where a position is known.
pub(crate) fn csv_error(e: csv::Error) -> IoError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => IoError::Io(io),
        csv::ErrorKind::Utf8 { err, .. } => IoError::row(line, format!("invalid UTF-8: {err}")),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            IoError::row(line, format!("expected {expected_len} fields, found {len}"))
        }
        other => IoError::row(line, format!("{other:?}")),
    }
}

/// Column positions of a fixed set of required names in a header. Extra
/// columns are rejected unless `allow_extra` is set.
pub(crate) fn locate_columns<const N: usize>(
    header: &csv::StringRecord,
    required: [&str; N],
    allow_extra: bool,
) -> Result<[usize; N], IoError> {
    let mut found = [usize::MAX; N];
    for (i, name) in header.iter().enumerate() {
        let name = name.trim();
        match required.iter().position(|r| *r == name) {
            Some(k) => found[k] = i,
            None if allow_extra => {}
            None => return Err(IoError::UnknownColumn(name.to_string())),
        }
    }
    for (k, pos) in found.iter().enumerate() {
        if *pos == usize::MAX {
            return Err(IoError::MissingColumn(required[k].to_string()));
        }
    }
    Ok(found)
}

pub(crate) fn csv_reader<R: std::io::Read>(input: R, delimiter: u8) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .trim(csv::Trim::Fields)
        .from_reader(input)
}
