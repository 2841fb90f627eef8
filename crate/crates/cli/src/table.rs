//! Numeric CSV tables.
//!
//! Values are written with 17 significant digits so a table read back
//! reproduces every `f64` bit for bit.

use std::io::{Read, Write};
use std::path::Path;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OutputTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl OutputTable {
    pub fn new(columns: Vec<String>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            out.write_record(row.iter().map(|v| format_value(*v)))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read_csv<R: Read>(r: R) -> csv::Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let columns = rdr.headers()?.iter().map(str::to_string).collect();
        let mut table = Self::new(columns);
        for rec in rdr.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| {
                    s.parse::<f64>().map_err(|e| {
                        csv::Error::from(std::io::Error::new(std::io::ErrorKind::InvalidData, e))
                    })
                })
                .collect::<csv::Result<Vec<_>>>()?;
            table.rows.push(row);
        }
        Ok(table)
    }
}

pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes to `path`, or to stdout when `path` is `None`.
pub fn emit_csv(table: &OutputTable, path: Option<&Path>) -> csv::Result<()> {
    match path {
        Some(p) => table.write_csv(std::fs::File::create(p)?),
        None => table.write_csv(std::io::stdout().lock()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn awkward_values_roundtrip() {
        let mut t = OutputTable::new(vec!["a".into(), "b".into()]);
        t.push(vec![0.1 + 0.2, -1e-300]);
        t.push(vec![f64::MIN_POSITIVE / 3.0, f64::INFINITY]);
        t.push(vec![-0.0, 123456789.12345679]);
        let back = OutputTable::read_csv(t.to_csv_string().as_bytes()).unwrap();
        assert_eq!(back.columns, t.columns);
        for (x, y) in back.rows.iter().flatten().zip(t.rows.iter().flatten()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = OutputTable::new(vec!["t".into(), "p0".into()]);
        assert_eq!(t.to_csv_string(), "t,p0\n");
    }
}
