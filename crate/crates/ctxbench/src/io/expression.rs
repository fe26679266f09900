use std::io::{Read, Write};

use ctxbench_core::{Condition, ContextId, EntityId, ExpressionMatrix};

use super::{csv_error, csv_reader, IoError};

/// Reads a dense count matrix: header `cell,<gene>,<gene>,...`, then one row
/// per cell. Condition and context are not part of the file.
pub fn parse_expression<R: Read>(input: R, condition: Condition, context: ContextId) -> Result<ExpressionMatrix, IoError> {
    let mut rdr = csv_reader(input, b',');
    let header = rdr.headers().map_err(csv_error)?.clone();
    let mut cols = header.iter();
    match cols.next() {
        Some("cell") => {}
        _ => return Err(IoError::MissingColumn("cell".into())),
    }
    let genes = cols
        .map(|g| EntityId::new(g).map_err(|e| IoError::row(1, format!("gene name: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let mut cells = Vec::new();
    let mut counts = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        cells.push(rec.get(0).unwrap_or("").to_string());
        for v in rec.iter().skip(1) {
            let x: f64 = v
                .parse()
                .map_err(|_| IoError::row(line, format!("count {v:?} is not a number")))?;
            counts.push(x);
        }
    }
    Ok(ExpressionMatrix::new(genes, cells, counts, condition, context)?)
}

/// Writes the raw counts in the layout read by [`parse_expression`].
pub fn write_expression<W: Write>(out: W, m: &ExpressionMatrix) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(std::iter::once("cell").chain(m.genes().iter().map(|g| g.as_str())))
        .map_err(csv_error)?;
    for (c, cell) in m.cells().iter().enumerate() {
        let row = m.counts_row(c).iter().map(|x| x.to_string());
        w.write_record(std::iter::once(cell.clone()).chain(row)).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ctxbench_core::DataError;

    fn ctx() -> ContextId {
        ContextId::new("k562").unwrap()
    }

    #[test]
    fn round_trip() {
        let text = "cell,g1,g2\nc1,1,0\nc2,3,4.5\n";
        let m = parse_expression(text.as_bytes(), Condition::Control, ctx()).unwrap();
        assert_eq!(m.counts_row(1), &[3.0, 4.5]);
        let mut buf = Vec::new();
        write_expression(&mut buf, &m).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), text);
    }

    #[test]
    fn rejects_negative_and_duplicate_genes() {
        let neg = parse_expression("cell,g1\nc1,-1\n".as_bytes(), Condition::Control, ctx());
        assert!(matches!(neg, Err(IoError::Data(DataError::BadCount { .. }))));
        let dup = parse_expression("cell,g1,g1\nc1,1,1\n".as_bytes(), Condition::Control, ctx());
        assert!(matches!(dup, Err(IoError::Data(DataError::DuplicateGene(_)))));
        let bad = parse_expression("cell,g1\nc1,x\n".as_bytes(), Condition::Control, ctx());
        assert!(matches!(bad, Err(IoError::MalformedRow { line: 2, .. })));
    }
}
