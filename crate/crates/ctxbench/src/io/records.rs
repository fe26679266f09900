use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use ctxbench_core::{BindingPair, Date, EntityId, Label, Phase, TrialRecord};

use super::{csv_error, csv_reader, locate_columns, IoError};

const TRIAL_COLUMNS: [&str; 5] = ["trial_id", "start_date", "completion_date", "phase", "label"];

/// Reads trial records. Columns beyond the five required ones go into each
/// record's attribute bag; empty cells are left out of the bag.
pub fn parse_trials<R: Read>(input: R) -> Result<Vec<TrialRecord>, IoError> {
    let mut rdr = csv_reader(input, b',');
    let header = rdr.headers().map_err(csv_error)?.clone();
    let pos = locate_columns(&header, TRIAL_COLUMNS, true)?;
    let extra: Vec<(usize, String)> = header
        .iter()
        .enumerate()
        .filter(|(i, _)| !pos.contains(i))
        .map(|(i, h)| (i, h.trim().to_string()))
        .collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let field = |k: usize| rec.get(pos[k]).unwrap_or("");
        let id = EntityId::new(field(0)).map_err(|e| IoError::row(line, e))?;
        let start: Date = field(1).parse().map_err(|e| IoError::row(line, e))?;
        let end: Date = field(2).parse().map_err(|e| IoError::row(line, e))?;
        let phase: Phase = field(3).parse().map_err(|e| IoError::row(line, e))?;
        let label = Label::parse(field(4)).map_err(|e| IoError::row(line, e))?;
        if !seen.insert(id.clone()) {
            return Err(IoError::row(line, format!("duplicate trial id {id}")));
        }
        let mut t = TrialRecord::new(id, start, end, phase, label).map_err(|e| IoError::row(line, e))?;
        for (i, name) in &extra {
            if let Some(v) = rec.get(*i).filter(|v| !v.is_empty()) {
                t.attributes.insert(name.clone(), v.to_string());
            }
        }
        out.push(t);
    }
    Ok(out)
}

pub fn write_trials<W: Write>(out: W, trials: &[TrialRecord]) -> Result<(), IoError> {
    let attrs: BTreeSet<&str> = trials
        .iter()
        .flat_map(|t| t.attributes.keys().map(String::as_str))
        .collect();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRIAL_COLUMNS.iter().copied().chain(attrs.iter().copied()))
        .map_err(csv_error)?;
    for t in trials {
        let fixed = [
            t.trial_id.to_string(),
            t.start_date().to_string(),
            t.completion_date().to_string(),
            t.phase.to_string(),
            u8::from(t.label).to_string(),
        ];
        let rest = attrs
            .iter()
            .map(|a| t.attributes.get(*a).cloned().unwrap_or_default());
        w.write_record(fixed.into_iter().chain(rest)).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BindingOptions {
    /// Require both sequences to use the 20 standard amino-acid letters.
    pub check_alphabet: bool,
}

/// Reads `receptor,ligand,label` rows. Duplicate pairs are rejected.
pub fn parse_binding<R: Read>(input: R, opts: BindingOptions) -> Result<Vec<BindingPair>, IoError> {
    let mut rdr = csv_reader(input, b',');
    let header = rdr.headers().map_err(csv_error)?.clone();
    let pos = locate_columns(&header, ["receptor", "ligand", "label"], false)?;
    let mut seen: BTreeMap<(EntityId, EntityId), ()> = BTreeMap::new();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let field = |k: usize| rec.get(pos[k]).unwrap_or("");
        let receptor = EntityId::new(field(0)).map_err(|e| IoError::row(line, format!("receptor: {e}")))?;
        let ligand = EntityId::new(field(1)).map_err(|e| IoError::row(line, format!("ligand: {e}")))?;
        let label = Label::parse(field(2)).map_err(|e| IoError::row(line, e))?;
        let pair = if opts.check_alphabet {
            BindingPair::new_checked(receptor, ligand, label).map_err(|e| IoError::row(line, e))?
        } else {
            BindingPair::new(receptor, ligand, label)
        };
        if seen.insert((pair.receptor.clone(), pair.ligand.clone()), ()).is_some() {
            return Err(IoError::DuplicateKey {
                line,
                entity: pair.receptor.to_string(),
                context: pair.ligand.to_string(),
            });
        }
        out.push(pair);
    }
    Ok(out)
}

pub fn write_binding<W: Write>(out: W, pairs: &[BindingPair]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["receptor", "ligand", "label"]).map_err(csv_error)?;
    for p in pairs {
        w.write_record([p.receptor.as_str(), p.ligand.as_str(), &u8::from(p.label).to_string()])
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
