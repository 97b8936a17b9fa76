//! Raw little-endian column files described by a textual manifest.
//!
//! ```text
//! name R
//! rows 3
//! column key u32 key.bin
//! column p0 u64 p0.bin
//! ```

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Column, Relation, ValueKind};

pub const MANIFEST_FILE: &str = "manifest.txt";

fn write_column(path: &Path, column: &Column) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    match column {
        Column::U32(v) => v.iter().try_for_each(|x| w.write_all(&x.to_le_bytes()))?,
        Column::U64(v) => v.iter().try_for_each(|x| w.write_all(&x.to_le_bytes()))?,
    }
    w.flush()?;
    Ok(())
}

fn read_column(path: &Path, kind: ValueKind, rows: usize) -> Result<Column> {
    let bytes = fs::read(path)?;
    let width = kind.byte_width();
    if bytes.len() != rows * width {
        return Err(Error::SchemaError(format!(
            "{} holds {} bytes, expected {} rows of {width} bytes",
            path.display(),
            bytes.len(),
            rows
        )));
    }
    Ok(match kind {
        ValueKind::U32 => Column::U32(bytes.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect()),
        ValueKind::U64 => Column::U64(bytes.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect()),
    })
}

/// Writes `relation` into `dir` (created if missing).
pub fn export_relation(relation: &Relation, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut manifest = format!("name {}\nrows {}\n", relation.name(), relation.len());
    let columns = std::iter::once(("key".to_string(), relation.key()))
        .chain(relation.payloads().iter().enumerate().map(|(i, c)| (format!("p{i}"), c)));
    for (name, column) in columns {
        let file = format!("{name}.bin");
        write_column(&dir.join(&file), column)?;
        manifest.push_str(&format!("column {name} {} {file}\n", column.kind()));
    }
    fs::write(dir.join(MANIFEST_FILE), manifest)?;
    Ok(())
}

pub fn import_relation(dir: &Path) -> Result<Relation> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    let mut name = None;
    let mut rows = None;
    let mut columns = Vec::new();
    for (no, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let bad = || Error::SchemaError(format!("manifest line {}: `{line}`", no + 1));
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            ["name", n] => name = Some(n.to_string()),
            ["rows", r] => rows = Some(r.parse::<usize>().map_err(|_| bad())?),
            ["column", _, kind, file] => {
                let rows = rows.ok_or_else(bad)?;
                let kind: ValueKind = kind.parse().map_err(|_| bad())?;
                columns.push(read_column(&dir.join(file), kind, rows)?);
            }
            _ => return Err(bad()),
        }
    }
    let mut columns = columns.into_iter();
    let key = columns
        .next()
        .ok_or_else(|| Error::SchemaError("manifest lists no key column".into()))?;
    Relation::new(name.unwrap_or_default(), key, columns.collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let r = Relation::new(
            "R",
            Column::U32(vec![1, 2, u32::MAX]),
            vec![Column::U64(vec![7, u64::MAX, 0]), Column::U32(vec![4, 5, 6])],
        )
        .unwrap();
        export_relation(&r, dir.path()).unwrap();
        assert_eq!(import_relation(dir.path()).unwrap(), r);
        let bytes = fs::read(dir.path().join("key.bin")).unwrap();
        assert_eq!(&bytes[..4], &[1, 0, 0, 0]);
    }

    #[test]
    fn truncated_file_is_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let r = Relation::new("R", Column::U32(vec![1, 2]), vec![]).unwrap();
        export_relation(&r, dir.path()).unwrap();
        fs::write(dir.path().join("key.bin"), [0u8; 5]).unwrap();
        assert!(matches!(import_relation(dir.path()), Err(Error::SchemaError(_))));
    }

    #[test]
    fn empty_relation_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let r = Relation::new("E", Column::U64(vec![]), vec![Column::U32(vec![])]).unwrap();
        export_relation(&r, dir.path()).unwrap();
        assert_eq!(import_relation(dir.path()).unwrap(), r);
    }
}
