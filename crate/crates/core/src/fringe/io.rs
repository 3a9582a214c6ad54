//! Table export: `k,i,c,c_a` rows in CSV plus a JSON sidecar.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::FringeTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSidecar {
    pub l: usize,
    pub a: usize,
    pub kmax: usize,
    pub min_a: Vec<Option<u32>>,
    pub tau: Vec<Option<u32>>,
    pub total: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    k: usize,
    i: usize,
    c: u64,
    c_a: u64,
}

/// `table.csv` -> `table.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Writes the CSV and its sidecar. `manifest` goes into a leading
/// `# manifest: ...` comment line.
pub fn write_table(table: &FringeTable, csv_path: &Path, manifest: Option<&str>) -> Result<()> {
    let mut out = BufWriter::new(File::create(csv_path)?);
    if let Some(m) = manifest {
        writeln!(out, "# manifest: {m}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    for k in 0..=table.l {
        for i in 0..=table.l {
            w.serialize(Row {
                k,
                i,
                c: table.c[k][i],
                c_a: table.c_a[k][i],
            })?;
        }
    }
    w.flush()?;
    let side = TableSidecar {
        l: table.l,
        a: table.a,
        kmax: table.kmax,
        min_a: table.min_a.clone(),
        tau: table.tau.clone(),
        total: table.total(),
    };
    let mut text = serde_json::to_string_pretty(&side)?;
    text.push('\n');
    std::fs::write(sidecar_path(csv_path), text)?;
    Ok(())
}

pub fn read_table(csv_path: &Path) -> Result<FringeTable> {
    let side: TableSidecar = serde_json::from_slice(&std::fs::read(sidecar_path(csv_path))?)?;
    let l = side.l;
    if l == 0 || l > super::MAX_WIDTH {
        return Err(Error::Table(format!("width {l} out of range")));
    }
    let mut c = vec![vec![0u64; l + 1]; l + 1];
    let mut c_a = c.clone();
    let mut seen = vec![vec![false; l + 1]; l + 1];
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(csv_path)?;
    for row in rdr.deserialize() {
        let row: Row = row?;
        if row.k > l || row.i > l {
            return Err(Error::Table(format!("row ({}, {}) outside width {l}", row.k, row.i)));
        }
        if std::mem::replace(&mut seen[row.k][row.i], true) {
            return Err(Error::Table(format!("duplicate row ({}, {})", row.k, row.i)));
        }
        c[row.k][row.i] = row.c;
        c_a[row.k][row.i] = row.c_a;
    }
    let table = FringeTable {
        l,
        a: side.a,
        kmax: side.kmax,
        c,
        c_a,
        min_a: side.min_a,
        tau: side.tau,
    };
    if side.total != table.total() {
        return Err(Error::Table(format!("sidecar total {} does not match width {l}", side.total)));
    }
    table.validate()?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fringe::enumerate;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn csv_round_trip(l in 1usize..=12, a_off in 0usize..12, kmax_off in 0usize..12, tag in proptest::option::of("[a-z]{1,8}\\.json")) {
            let a = 1 + a_off % l;
            let kmax = kmax_off % (l + 1);
            let table = enumerate(l, a, kmax).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("t.csv");
            write_table(&table, &path, tag.as_deref()).unwrap();
            prop_assert_eq!(read_table(&path).unwrap(), table);
        }
    }

    #[test]
    fn rejects_tampered_counts() {
        let table = enumerate(6, 3, 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_table(&table, &path, None).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let bumped = text.replacen("\n0,6,1,", "\n0,6,2,", 1);
        assert_ne!(text, bumped);
        std::fs::write(&path, bumped).unwrap();
        assert!(read_table(&path).is_err());
    }
}
