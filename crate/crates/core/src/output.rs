//! Comma-separated result tables: one header line, numeric rows written with
//! 17 significant digits so they read back exactly.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

/// Integers print without exponent; everything else as `{:.16e}`.
pub fn format_number(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:.16e}")
    }
}

pub fn write_table(path: &Path, table: &Table) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{}", table.header.join(","))?;
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|&x| format_number(x)).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path)?;
    let fail = |message: String| Error::Format {
        path: path.display().to_string(),
        message,
    };
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .filter(|h| !h.trim().is_empty())
        .ok_or_else(|| fail("empty file".into()))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| fail(format!("row {}: {e}", i + 1)))?;
        if row.len() != header.len() {
            return Err(fail(format!("row {} has {} columns, header has {}", i + 1, row.len(), header.len())));
        }
        rows.push(row);
    }
    Ok(Table { header, rows })
}

/// One table per field: columns `t, node_0, ..., node_{n-1}`.
pub fn field_table(times: &[f64], fields: &[Vec<f64>]) -> Table {
    let n = fields.first().map_or(0, Vec::len);
    let mut t = Table::new(std::iter::once("t".to_string()).chain((0..n).map(|i| format!("node_{i}"))));
    for (time, v) in times.iter().zip(fields) {
        let mut row = Vec::with_capacity(n + 1);
        row.push(*time);
        row.extend_from_slice(v);
        t.push(row);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut t = Table::new(["a", "b", "c"]);
        t.push(vec![0.1, 1.0 / 3.0, 7.0]);
        t.push(vec![-2.5e-17, f64::NAN, 1e300]);
        t.push(vec![std::f64::consts::PI, -0.0, 12345.0]);
        write_table(&path, &t).unwrap();
        let back = read_table(&path).unwrap();
        assert_eq!(back.header, t.header);
        for (r, s) in back.rows.iter().zip(&t.rows) {
            for (x, y) in r.iter().zip(s) {
                assert!(x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()) || (*x == 0.0 && *y == 0.0));
            }
        }
    }

    #[test]
    fn malformed_rows_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "a,b\n1,2\n3\n").unwrap();
        assert!(matches!(read_table(&path), Err(Error::Format { .. })));
        fs::write(&path, "").unwrap();
        assert!(matches!(read_table(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn field_table_layout() {
        let t = field_table(&[0.0, 0.5], &[vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(t.header, vec!["t", "node_0", "node_1"]);
        assert_eq!(t.rows[1], vec![0.5, 3.0, 4.0]);
    }
}
