//! Declarative data views: an ordered list of named transforms followed by a
//! column mapping.
//!
//! The serialized document uses parallel lists, as in
//!
//! ```json
//! {
//!   "dataset_name": "brown_mdm2_ace2_12ca5",
//!   "functions_to_run": ["autofill_identifier", "create_range", "insert_protein_sequence"],
//!   "args_for_functions": [
//!     {"autofill_column": "Name", "key_column": "Sequence"},
//!     {"column": "KD (nM)", "keys": ["Putative binder"], "subs": [0]},
//!     {"gene_column": "Protein Target"}
//!   ],
//!   "var_map": {"X1": "Sequence", "X2": "protein_or_rna_sequence", "ID1": "Name", "ID2": "Protein Target"}
//! }
//! ```
//!
//! `var_map` maps each output column name to the column it is taken from.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::fetch::{FetchError, SequenceFetcher};
use super::filter::{Filter, FilterError};
use super::Table;

/// Column added by the sequence step.
pub const SEQUENCE_COLUMN: &str = "protein_or_rna_sequence";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    /// Fill empty cells of one column from another row with the same key.
    AutofillIdentifier,
    /// Replace exact cell values with numeric substitutes.
    CreateRange,
    /// Look up a sequence per distinct key of a column.
    InsertSequence,
    /// Same step under its protein-specific name.
    InsertProteinSequence,
    /// Keep rows matching a filter expression.
    FilterRows,
    /// Keep and reorder a list of columns.
    SelectColumns,
}

impl Transform {
    pub fn name(self) -> &'static str {
        match self {
            Transform::AutofillIdentifier => "autofill_identifier",
            Transform::CreateRange => "create_range",
            Transform::InsertSequence => "insert_sequence",
            Transform::InsertProteinSequence => "insert_protein_sequence",
            Transform::FilterRows => "filter_rows",
            Transform::SelectColumns => "select_columns",
        }
    }

    pub fn parse(name: &str) -> Result<Self, ViewError> {
        serde_json::from_value(Value::String(name.to_string())).map_err(|_| ViewError::UnknownTransform(name.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub function: Transform,
    pub args: serde_json::Map<String, Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ViewDocument", into = "ViewDocument")]
pub struct DataViewConfig {
    pub dataset_name: String,
    /// Source version; the latest when absent.
    pub dataset_version: Option<u32>,
    pub steps: Vec<Step>,
    pub var_map: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ViewDocument {
    dataset_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dataset_version: Option<u32>,
    #[serde(default)]
    functions_to_run: Vec<String>,
    #[serde(default)]
    args_for_functions: Vec<serde_json::Map<String, Value>>,
    #[serde(default)]
    var_map: BTreeMap<String, String>,
}

impl TryFrom<ViewDocument> for DataViewConfig {
    type Error = ViewError;
    fn try_from(doc: ViewDocument) -> Result<Self, ViewError> {
        if doc.args_for_functions.len() > doc.functions_to_run.len() {
            return Err(ViewError::BadArgs {
                step: "args_for_functions".into(),
                message: format!(
                    "{} argument maps for {} functions",
                    doc.args_for_functions.len(),
                    doc.functions_to_run.len()
                ),
            });
        }
        let mut args = doc.args_for_functions.into_iter();
        let steps = doc
            .functions_to_run
            .iter()
            .map(|f| {
                Ok(Step {
                    function: Transform::parse(f)?,
                    args: args.next().unwrap_or_default(),
                })
            })
            .collect::<Result<_, ViewError>>()?;
        Ok(Self {
            dataset_name: doc.dataset_name,
            dataset_version: doc.dataset_version,
            steps,
            var_map: doc.var_map,
        })
    }
}

impl From<DataViewConfig> for ViewDocument {
    fn from(c: DataViewConfig) -> Self {
        Self {
            dataset_name: c.dataset_name,
            dataset_version: c.dataset_version,
            functions_to_run: c.steps.iter().map(|s| s.function.name().to_string()).collect(),
            args_for_functions: c.steps.into_iter().map(|s| s.args).collect(),
            var_map: c.var_map,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ViewError {
    #[error("unknown transform {0:?}")]
    UnknownTransform(String),
    #[error("step {step}: column {column:?} does not exist")]
    ColumnMissing { step: String, column: String },
    #[error("column {0:?} would appear twice")]
    DuplicateColumn(String),
    #[error("step {step}: {message}")]
    BadArgs { step: String, message: String },
    #[error("step {step}: {error}")]
    Filter { step: String, error: FilterError },
    #[error(transparent)]
    Fetch(#[from] FetchError),
}

struct Args<'a> {
    step: String,
    map: &'a serde_json::Map<String, Value>,
}

impl Args<'_> {
    fn bad(&self, message: impl Into<String>) -> ViewError {
        ViewError::BadArgs {
            step: self.step.clone(),
            message: message.into(),
        }
    }

    fn string(&self, key: &str) -> Result<&str, ViewError> {
        self.map
            .get(key)
            .and_then(Value::as_str)
            .ok_or_else(|| self.bad(format!("argument {key:?} must be a string")))
    }

    fn list(&self, key: &str) -> Result<&[Value], ViewError> {
        self.map
            .get(key)
            .and_then(Value::as_array)
            .map(Vec::as_slice)
            .ok_or_else(|| self.bad(format!("argument {key:?} must be a list")))
    }

    fn column(&self, table: &Table, key: &str) -> Result<usize, ViewError> {
        let name = self.string(key)?;
        table.column_index(name).ok_or_else(|| ViewError::ColumnMissing {
            step: self.step.clone(),
            column: name.to_string(),
        })
    }
}

/// A literal cell value as text: strings verbatim, numbers in JSON form.
fn cell_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

/// Runs the steps in order, then the column mapping. Pure apart from the
/// fetcher; each distinct sequence key is fetched once per run.
pub fn run_view(cfg: &DataViewConfig, input: &Table, fetcher: &dyn SequenceFetcher) -> Result<Table, ViewError> {
    let mut t = input.clone();
    for (i, step) in cfg.steps.iter().enumerate() {
        let args = Args {
            step: format!("{}#{}", step.function.name(), i + 1),
            map: &step.args,
        };
        match step.function {
            Transform::AutofillIdentifier => {
                let fill = args.column(&t, "autofill_column")?;
                let key = args.column(&t, "key_column")?;
                let mut known: HashMap<String, String> = HashMap::new();
                for row in &t.rows {
                    if !row[fill].is_empty() {
                        known.entry(row[key].clone()).or_insert_with(|| row[fill].clone());
                    }
                }
                for row in t.rows.iter_mut() {
                    if row[fill].is_empty() {
                        if let Some(v) = known.get(&row[key]) {
                            row[fill] = v.clone();
                        }
                    }
                }
            }
            Transform::CreateRange => {
                let col = args.column(&t, "column")?;
                let keys = args.list("keys")?;
                let subs = args.list("subs")?;
                if keys.len() != subs.len() {
                    return Err(args.bad(format!("{} keys but {} substitutes", keys.len(), subs.len())));
                }
                let mut table: HashMap<String, String> = HashMap::new();
                for (k, s) in keys.iter().zip(subs) {
                    let k = cell_text(k).ok_or_else(|| args.bad("keys must be strings or numbers"))?;
                    let s = cell_text(s).ok_or_else(|| args.bad("subs must be strings or numbers"))?;
                    table.insert(k, s);
                }
                for row in t.rows.iter_mut() {
                    if let Some(s) = table.get(row[col].trim()) {
                        row[col] = s.clone();
                    }
                }
            }
            Transform::InsertSequence | Transform::InsertProteinSequence => {
                let col = args.column(&t, "gene_column")?;
                if t.column_index(SEQUENCE_COLUMN).is_some() {
                    return Err(ViewError::DuplicateColumn(SEQUENCE_COLUMN.into()));
                }
                let mut cache: HashMap<String, String> = HashMap::new();
                for row in t.rows.iter_mut() {
                    let key = row[col].trim().to_string();
                    let seq = if key.is_empty() {
                        String::new()
                    } else if let Some(s) = cache.get(&key) {
                        s.clone()
                    } else {
                        let s = fetcher.fetch(&key)?;
                        cache.insert(key, s.clone());
                        s
                    };
                    row.push(seq);
                }
                t.columns.push(SEQUENCE_COLUMN.into());
            }
            Transform::FilterRows => {
                let expr = args.string("filter")?;
                let filter = Filter::compile(expr, &t.columns).map_err(|error| ViewError::Filter {
                    step: args.step.clone(),
                    error,
                })?;
                t.rows.retain(|r| filter.matches(r));
            }
            Transform::SelectColumns => {
                let names = args.list("columns")?;
                let mut idx = Vec::with_capacity(names.len());
                for n in names {
                    let n = n.as_str().ok_or_else(|| args.bad("columns must be strings"))?;
                    let i = t.column_index(n).ok_or_else(|| ViewError::ColumnMissing {
                        step: args.step.clone(),
                        column: n.to_string(),
                    })?;
                    if idx.contains(&i) {
                        return Err(ViewError::DuplicateColumn(n.to_string()));
                    }
                    idx.push(i);
                }
                t.columns = idx.iter().map(|&i| t.columns[i].clone()).collect();
                for row in t.rows.iter_mut() {
                    *row = idx.iter().map(|&i| std::mem::take(&mut row[i])).collect();
                }
            }
        }
    }
    apply_var_map(&mut t, &cfg.var_map)?;
    Ok(t)
}

/// Renames each source column to its output name in place. When several
/// output names share one source, the first (in key order) takes the
/// source's position and the rest are appended as copies.
fn apply_var_map(t: &mut Table, var_map: &BTreeMap<String, String>) -> Result<(), ViewError> {
    let mut by_source: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
    for (out, src) in var_map {
        let i = t.column_index(src).ok_or_else(|| ViewError::ColumnMissing {
            step: "var_map".into(),
            column: src.clone(),
        })?;
        by_source.entry(i).or_default().push(out);
    }
    let mut columns = t.columns.clone();
    let mut copies: Vec<(usize, String)> = Vec::new();
    for (i, outs) in &by_source {
        columns[*i] = outs[0].to_string();
        copies.extend(outs[1..].iter().map(|o| (*i, o.to_string())));
    }
    columns.extend(copies.iter().map(|(_, o)| o.clone()));
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = columns.iter().find(|c| !seen.insert(c.as_str())) {
        return Err(ViewError::DuplicateColumn(dup.clone()));
    }
    t.columns = columns;
    if !copies.is_empty() {
        for row in t.rows.iter_mut() {
            let extra: Vec<String> = copies.iter().map(|(i, _)| row[*i].clone()).collect();
            row.extend(extra);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::fetch::FixtureFetcher;

    fn table(cols: &[&str], rows: &[&[&str]]) -> Table {
        Table {
            columns: cols.iter().map(|s| s.to_string()).collect(),
            rows: rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect(),
        }
    }

    fn cfg(json: &str) -> DataViewConfig {
        serde_json::from_str(json).unwrap()
    }

    fn no_fetch() -> FixtureFetcher {
        FixtureFetcher::new(BTreeMap::new())
    }

    #[test]
    fn var_map_renames_source_to_output() {
        let t = table(&["Sequence", "other"], &[&["AAA", "1"]]);
        let c = cfg(r#"{"dataset_name":"d","var_map":{"X1":"Sequence"}}"#);
        let out = run_view(&c, &t, &no_fetch()).unwrap();
        assert_eq!(out.columns, ["X1", "other"]);
        assert_eq!(out.rows[0], ["AAA", "1"]);
        let missing = cfg(r#"{"dataset_name":"d","var_map":{"X1":"Nope"}}"#);
        assert!(matches!(run_view(&missing, &t, &no_fetch()), Err(ViewError::ColumnMissing { .. })));
        let clash = cfg(r#"{"dataset_name":"d","var_map":{"other":"Sequence"}}"#);
        assert!(matches!(run_view(&clash, &t, &no_fetch()), Err(ViewError::DuplicateColumn(_))));
    }

    #[test]
    fn autofill_and_create_range() {
        let t = table(
            &["Name", "Sequence", "KD"],
            &[&["", "AC", "Putative binder"], &["p1", "AC", "5"], &["", "GG", "7"]],
        );
        let c = cfg(
            r#"{"dataset_name":"d",
                "functions_to_run":["autofill_identifier","create_range"],
                "args_for_functions":[{"autofill_column":"Name","key_column":"Sequence"},
                                      {"column":"KD","keys":["Putative binder"],"subs":[0]}]}"#,
        );
        let out = run_view(&c, &t, &no_fetch()).unwrap();
        assert_eq!(out.rows[0], ["p1", "AC", "0"]);
        assert_eq!(out.rows[2], ["", "GG", "7"]);
    }

    #[test]
    fn sequence_lookup_filter_and_select() {
        let t = table(&["g", "v"], &[&["MDM2", "1"], &["ACE2", "2"], &["MDM2", "3"]]);
        let f = FixtureFetcher::new([("MDM2".into(), "MCNT".into()), ("ACE2".into(), "MSSS".into())].into());
        let c = cfg(
            r#"{"dataset_name":"d",
                "functions_to_run":["insert_sequence","filter_rows","select_columns"],
                "args_for_functions":[{"gene_column":"g"},{"filter":"v >= 2"},{"columns":["protein_or_rna_sequence","v"]}]}"#,
        );
        let out = run_view(&c, &t, &f).unwrap();
        assert_eq!(out, table(&["protein_or_rna_sequence", "v"], &[&["MSSS", "2"], &["MCNT", "3"]]));
        let unknown = table(&["g"], &[&["TP53"]]);
        assert_eq!(
            run_view(&c, &unknown, &f),
            Err(ViewError::Fetch(FetchError::FixtureMissing("TP53".into())))
        );
    }

    #[test]
    fn document_round_trip_and_unknown_transform() {
        let text = r#"{"dataset_name":"d","functions_to_run":["insert_protein_sequence"],"args_for_functions":[{"gene_column":"g"}],"var_map":{"X2":"protein_or_rna_sequence"}}"#;
        let c = cfg(text);
        assert_eq!(serde_json::to_string(&c).unwrap(), text);
        let bad = serde_json::from_str::<DataViewConfig>(r#"{"dataset_name":"d","functions_to_run":["explode"]}"#);
        assert!(bad.unwrap_err().to_string().contains("explode"));
        let missing_col = cfg(r#"{"dataset_name":"d","functions_to_run":["create_range"],"args_for_functions":[{"column":"zz","keys":[],"subs":[]}]}"#);
        let err = run_view(&missing_col, &table(&["a"], &[]), &no_fetch()).unwrap_err();
        assert_eq!(err, ViewError::ColumnMissing { step: "create_range#1".into(), column: "zz".into() });
    }
}
