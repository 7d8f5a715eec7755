//! Named column-major samples and their CSV form.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::NodeSet;
use crate::scalar::Scalar;

/// An `n × d` sample with one named column per variable.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    names: Vec<String>,
    columns: Vec<Vec<T>>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(names: Vec<String>, columns: Vec<Vec<T>>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::Empty("dataset needs at least one column"));
        }
        if names.len() != columns.len() {
            return Err(Error::LengthMismatch {
                expected: columns.len(),
                got: names.len(),
            });
        }
        let n = columns[0].len();
        for c in &columns {
            if c.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: c.len(),
                });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("dataset column"));
            }
        }
        Ok(Dataset { names, columns })
    }

    /// Columns named `X1..Xd`.
    pub fn from_columns(columns: Vec<Vec<T>>) -> Result<Self> {
        let names = (1..=columns.len()).map(|i| format!("X{i}")).collect();
        Dataset::new(names, columns)
    }

    pub fn num_vars(&self) -> usize {
        self.columns.len()
    }

    pub fn num_samples(&self) -> usize {
        self.columns[0].len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, i: usize) -> &[T] {
        &self.columns[i]
    }

    pub fn columns(&self) -> &[Vec<T>] {
        &self.columns
    }

    /// Borrowed columns for the indices in `set`, ascending.
    pub fn block(&self, set: NodeSet) -> Vec<&[T]> {
        set.iter().map(|i| self.columns[i].as_slice()).collect()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Converts every value to another precision.
    pub fn cast<U: Scalar>(&self) -> Dataset<U> {
        Dataset {
            names: self.names.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| c.iter().map(|v| U::lit(v.as_f64())).collect())
                .collect(),
        }
    }

    /// Comma-separated with a header row. `f64` values use the shortest
    /// representation that round-trips exactly.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().from_writer(writer);
        w.write_record(&self.names).map_err(csv_io)?;
        let mut row = Vec::with_capacity(self.num_vars());
        for r in 0..self.num_samples() {
            row.clear();
            row.extend(self.columns.iter().map(|c| format!("{}", c[r])));
            w.write_record(&row).map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let names: Vec<String> = rdr
            .headers()
            .map_err(|e| csv_err(1, 0, e))?
            .iter()
            .map(str::to_string)
            .collect();
        if names.is_empty() || names.iter().all(|n| n.is_empty()) {
            return Err(Error::Csv {
                row: 1,
                column: 0,
                message: "missing header row".into(),
            });
        }
        let mut columns: Vec<Vec<T>> = vec![Vec::new(); names.len()];
        for (k, rec) in rdr.records().enumerate() {
            // header is row 1
            let row = k + 2;
            let rec = rec.map_err(|e| csv_err(row, 0, e))?;
            if rec.len() != names.len() {
                return Err(Error::Csv {
                    row,
                    column: rec.len().min(names.len()) + 1,
                    message: format!("expected {} fields, found {}", names.len(), rec.len()),
                });
            }
            for (j, field) in rec.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| Error::Csv {
                    row,
                    column: j + 1,
                    message: format!("non-numeric value `{field}`"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Csv {
                        row,
                        column: j + 1,
                        message: format!("non-finite value `{field}`"),
                    });
                }
                columns[j].push(T::lit(v));
            }
        }
        if columns[0].is_empty() {
            return Err(Error::Empty("csv has no data rows"));
        }
        Dataset::new(names, columns)
    }

    pub fn read_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Dataset::read_csv(std::fs::File::open(path)?)
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

fn csv_err(row: usize, column: usize, e: csv::Error) -> Error {
    Error::Csv {
        row,
        column,
        message: e.to_string(),
    }
}
