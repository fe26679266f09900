use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Read, Write};

use ctxbench_core::{ContextId, ContextSample, EntityId, Label, PredictionRow, PredictionSet};
use serde::{Deserialize, Serialize};

use super::{csv_error, csv_reader, locate_columns, IoError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(format!("unknown format {other:?}; expected csv or jsonl")),
        }
    }
}

/// Raw fields of one input row and the line it came from.
struct RawRow {
    line: u64,
    fields: [String; 3],
}

fn csv_rows<R: Read>(input: R, columns: [&str; 3]) -> Result<Vec<RawRow>, IoError> {
    let mut rdr = csv_reader(input, b',');
    let header = rdr.headers().map_err(csv_error)?.clone();
    let pos = locate_columns(&header, columns, false)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        out.push(RawRow {
            line,
            fields: pos.map(|i| rec.get(i).unwrap_or("").to_string()),
        });
    }
    Ok(out)
}

fn jsonl_rows<R: Read>(input: R, columns: [&str; 3]) -> Result<Vec<RawRow>, IoError> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let lineno = i as u64 + 1;
        let line = line.map_err(|e| IoError::row(lineno, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line).map_err(|e| IoError::row(lineno, e))?;
        let obj = value
            .as_object()
            .ok_or_else(|| IoError::row(lineno, "expected a JSON object"))?;
        if let Some(k) = obj.keys().find(|k| !columns.contains(&k.as_str())) {
            return Err(IoError::UnknownColumn(k.clone()));
        }
        let mut fields: [String; 3] = Default::default();
        for (slot, name) in fields.iter_mut().zip(columns) {
            *slot = match obj.get(name) {
                Some(serde_json::Value::String(s)) => s.clone(),
                Some(serde_json::Value::Number(n)) => n.to_string(),
                Some(other) => return Err(IoError::row(lineno, format!("field {name:?} has unexpected value {other}"))),
                None => return Err(IoError::MissingColumn(name.to_string())),
            };
        }
        out.push(RawRow { line: lineno, fields });
    }
    Ok(out)
}

fn raw_rows<R: Read>(input: R, format: Format, columns: [&str; 3]) -> Result<Vec<RawRow>, IoError> {
    match format {
        Format::Csv => csv_rows(input, columns),
        Format::Jsonl => jsonl_rows(input, columns),
    }
}

fn ids(row: &RawRow) -> Result<(EntityId, ContextId), IoError> {
    let entity = EntityId::new(row.fields[0].trim()).map_err(|e| IoError::row(row.line, format!("entity: {e}")))?;
    let context = ContextId::new(row.fields[1].trim()).map_err(|e| IoError::row(row.line, format!("context: {e}")))?;
    Ok((entity, context))
}

/// Parses `entity,context,label` rows. Duplicate keys are rejected.
pub fn parse_samples<R: Read>(input: R, format: Format) -> Result<Vec<ContextSample>, IoError> {
    let rows = raw_rows(input, format, ["entity", "context", "label"])?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(rows.len());
    for row in &rows {
        let (entity, context) = ids(row)?;
        let label = Label::parse(&row.fields[2]).map_err(|e| IoError::row(row.line, e))?;
        if !seen.insert((entity.clone(), context.clone())) {
            return Err(IoError::DuplicateKey {
                line: row.line,
                entity: entity.to_string(),
                context: context.to_string(),
            });
        }
        out.push(ContextSample::new(entity, context, label));
    }
    Ok(out)
}

/// Parses `entity,context,score` rows; scores must be finite and in [0, 1].
pub fn parse_prediction_rows<R: Read>(input: R, format: Format) -> Result<Vec<PredictionRow>, IoError> {
    let rows = raw_rows(input, format, ["entity", "context", "score"])?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(rows.len());
    for row in &rows {
        let (entity, context) = ids(row)?;
        let score: f64 = row.fields[2]
            .trim()
            .parse()
            .map_err(|_| IoError::row(row.line, format!("score {:?} is not a number", row.fields[2])))?;
        if !seen.insert((entity.clone(), context.clone())) {
            return Err(IoError::DuplicateKey {
                line: row.line,
                entity: entity.to_string(),
                context: context.to_string(),
            });
        }
        out.push(PredictionRow::new(entity, context, score).map_err(|e| IoError::row(row.line, e))?);
    }
    Ok(out)
}

pub fn parse_predictions<R: Read>(input: R, format: Format, dataset_ref: &str) -> Result<PredictionSet, IoError> {
    Ok(PredictionSet::new(dataset_ref, parse_prediction_rows(input, format)?)?)
}

pub fn write_samples<W: Write>(out: W, samples: &[ContextSample], format: Format) -> Result<(), IoError> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["entity", "context", "label"]).map_err(csv_error)?;
            for s in samples {
                let label = if s.label.is_positive() { "1" } else { "0" };
                w.write_record([s.entity.as_str(), s.context.as_str(), label]).map_err(csv_error)?;
            }
            w.flush()?;
        }
        Format::Jsonl => write_jsonl(out, samples)?,
    }
    Ok(())
}

pub fn write_predictions<W: Write>(out: W, rows: &[PredictionRow], format: Format) -> Result<(), IoError> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["entity", "context", "score"]).map_err(csv_error)?;
            for r in rows {
                w.write_record([r.entity.as_str(), r.context.as_str(), &r.score.to_string()])
                    .map_err(csv_error)?;
            }
            w.flush()?;
        }
        Format::Jsonl => write_jsonl(out, rows)?,
    }
    Ok(())
}

fn write_jsonl<W: Write, T: Serialize>(mut out: W, items: &[T]) -> Result<(), IoError> {
    for item in items {
        serde_json::to_writer(&mut out, item).map_err(std::io::Error::other)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_samples() {
        let s = parse_samples("entity,context,label\ne1,ct1,1\ne2,ct1,0\n".as_bytes(), Format::Csv).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].label, Label::Positive);
    }

    #[test]
    fn bad_label_reports_line() {
        let err = parse_samples("entity,context,label\ne1,ct1,1\ne2,ct1,2\n".as_bytes(), Format::Csv).unwrap_err();
        assert!(matches!(err, IoError::MalformedRow { line: 3, .. }), "{err}");
    }

    #[test]
    fn duplicate_and_unknown_columns() {
        let dup = parse_samples("entity,context,label\ne1,ct1,1\ne1,ct1,0\n".as_bytes(), Format::Csv);
        assert!(matches!(dup, Err(IoError::DuplicateKey { line: 3, .. })));
        let extra = parse_samples("entity,context,label,x\n".as_bytes(), Format::Csv);
        assert!(matches!(extra, Err(IoError::UnknownColumn(c)) if c == "x"));
        let missing = parse_samples("entity,label\n".as_bytes(), Format::Csv);
        assert!(matches!(missing, Err(IoError::MissingColumn(c)) if c == "context"));
    }

    #[test]
    fn jsonl_samples_and_numbers() {
        let text = "{\"entity\":\"e1\",\"context\":\"c\",\"label\":1}\n\n{\"entity\":\"e2\",\"context\":\"c\",\"label\":\"0\"}\n";
        let s = parse_samples(text.as_bytes(), Format::Jsonl).unwrap();
        assert_eq!(s.len(), 2);
        let bad = parse_samples("{\"entity\":\"e1\",\"context\":\"c\",\"label\":2}\n".as_bytes(), Format::Jsonl);
        assert!(matches!(bad, Err(IoError::MalformedRow { line: 1, .. })));
    }

    #[test]
    fn predictions_reject_out_of_range() {
        let ok = parse_predictions("entity,context,score\na,c,0.25\n".as_bytes(), Format::Csv, "d").unwrap();
        assert_eq!(ok.rows()[0].score, 0.25);
        let bad = parse_prediction_rows("entity,context,score\na,c,0.2\nb,c,1.5\n".as_bytes(), Format::Csv);
        assert!(matches!(bad, Err(IoError::MalformedRow { line: 3, .. })));
        let short = parse_prediction_rows("entity,context,score\na,c\n".as_bytes(), Format::Csv);
        assert!(matches!(short, Err(IoError::MalformedRow { line: 2, .. })), "{short:?}");
    }
}
