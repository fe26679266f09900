use std::io::{Read, Write};
use std::path::Path;

use ctxbench_core::baselines::{BaselineError, EmbeddingTable};
use ctxbench_core::EntityId;

use super::{csv_error, IoError};

const MAGIC: &str = "ctxbench-embeddings";
const VERSION: &str = "v1";

/// Embedding table layout, all CSV:
///
/// ```text
/// ctxbench-embeddings,v1
/// dim,count,provenance
/// 3,2,my-model v2
/// P53,0.1,-2,3.5e-7
/// ...
/// ```
///
/// Values use the shortest decimal form that parses back to the same `f64`,
/// so a write/read cycle is exact.
pub fn write_embeddings<W: Write>(out: W, table: &EmbeddingTable) -> Result<(), IoError> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    w.write_record([MAGIC, VERSION]).map_err(csv_error)?;
    w.write_record(["dim", "count", "provenance"]).map_err(csv_error)?;
    w.write_record([&table.dim().to_string(), &table.len().to_string(), table.provenance()])
        .map_err(csv_error)?;
    for (entity, v) in table.iter() {
        let values = v.iter().map(|x| x.to_string());
        w.write_record(std::iter::once(entity.to_string()).chain(values))
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_embeddings<R: Read>(input: R) -> Result<EmbeddingTable, IoError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut records = rdr.records();
    let mut next = |what: &str| -> Result<csv::StringRecord, IoError> {
        records
            .next()
            .ok_or_else(|| IoError::CorruptFile(format!("truncated before {what}")))?
            .map_err(csv_error)
    };
    let magic = next("the magic line")?;
    if magic.iter().collect::<Vec<_>>() != [MAGIC, VERSION] {
        return Err(IoError::CorruptFile("not an embedding table (bad magic line)".into()));
    }
    let header = next("the header")?;
    if header.iter().collect::<Vec<_>>() != ["dim", "count", "provenance"] {
        return Err(IoError::CorruptFile("unexpected header line".into()));
    }
    let meta = next("the metadata line")?;
    if meta.len() != 3 {
        return Err(IoError::CorruptFile("metadata line needs dim,count,provenance".into()));
    }
    let dim: usize = meta[0]
        .parse()
        .map_err(|_| IoError::CorruptFile(format!("dim {:?} is not an integer", &meta[0])))?;
    let count: usize = meta[1]
        .parse()
        .map_err(|_| IoError::CorruptFile(format!("count {:?} is not an integer", &meta[1])))?;
    let mut table = EmbeddingTable::new(dim, &meta[2]).map_err(|e| IoError::CorruptFile(e.to_string()))?;
    let mut rows = 0usize;
    for rec in records {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let entity = EntityId::new(&rec[0]).map_err(|e| IoError::row(line, e))?;
        let vector = rec
            .iter()
            .skip(1)
            .map(|v| v.parse::<f64>().map_err(|_| IoError::row(line, format!("value {v:?} is not a number"))))
            .collect::<Result<Vec<_>, _>>()?;
        if table.get(entity.as_str()).is_some() {
            return Err(IoError::row(line, format!("duplicate entity {entity}")));
        }
        table.insert(entity.clone(), vector).map_err(|e| match e {
            BaselineError::DimMismatch { expected, found } => IoError::DimMismatch {
                entity: entity.to_string(),
                expected,
                found,
            },
            other => IoError::row(line, other),
        })?;
        rows += 1;
    }
    if rows != count {
        return Err(IoError::CorruptFile(format!("header declares {count} rows but {rows} were read")));
    }
    Ok(table)
}

/// Writes through a temporary sibling file and renames it into place.
pub fn store_embeddings(table: &EmbeddingTable, path: &Path) -> Result<(), IoError> {
    let tmp = path.with_extension("tmp");
    {
        let file = std::fs::File::create(&tmp)?;
        let mut buf = std::io::BufWriter::new(file);
        write_embeddings(&mut buf, table)?;
        buf.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable, IoError> {
    read_embeddings(std::io::BufReader::new(std::fs::File::open(path)?))
}
