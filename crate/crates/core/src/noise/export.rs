use std::io::{Read, Write};

use super::{Grid, JointNoise};
use crate::error::{Error, Result};

/// Named columns sampled on a grid, written as `t,<name>,...`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathColumns {
    pub grid: Grid,
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl PathColumns {
    pub fn new(grid: Grid) -> Self {
        PathColumns {
            grid,
            names: Vec::new(),
            columns: Vec::new(),
        }
    }

    /// The `t,W,X` layout of a single joint path.
    pub fn from_noise(noise: &JointNoise) -> Self {
        let mut p = PathColumns::new(noise.grid);
        p.push("W", noise.w.clone()).expect("consistent length");
        p.push("X", noise.x.clone()).expect("consistent length");
        p
    }

    pub fn push(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.grid.n + 1 {
            return Err(Error::LengthMismatch {
                expected: self.grid.n + 1,
                actual: values.len(),
            });
        }
        self.names.push(name.to_string());
        self.columns.push(values);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }
}

/// Writes the columns with 17 significant digits so values round-trip.
pub fn write_paths_csv<W: Write>(out: W, paths: &PathColumns) -> Result<()> {
    let mut wr = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend(paths.names.iter().cloned());
    wr.write_record(&header)?;
    for k in 0..=paths.grid.n {
        let mut row = vec![format!("{:.16e}", paths.grid.time(k))];
        row.extend(paths.columns.iter().map(|c| format!("{:.16e}", c[k])));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads a file produced by [`write_paths_csv`]: header names and columns,
/// the first column being `t`.
pub fn read_paths_csv<R: Read>(input: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rd = csv::Reader::from_reader(input);
    let names: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    let mut cols = vec![Vec::new(); names.len()];
    for (line, rec) in rd.records().enumerate() {
        let rec = rec?;
        for (i, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| Error::Malformed {
                line: line + 2,
                reason: format!("`{field}` is not a number"),
            })?;
            cols.get_mut(i)
                .ok_or(Error::Malformed {
                    line: line + 2,
                    reason: "too many fields".into(),
                })?
                .push(v);
        }
    }
    Ok((names, cols))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_lossless() {
        let g = Grid::new(1.0, 3).unwrap();
        let mut p = PathColumns::new(g);
        p.push("W", vec![0.0, 0.1, -1.0 / 3.0, std::f64::consts::PI])
            .unwrap();
        let mut buf = Vec::new();
        write_paths_csv(&mut buf, &p).unwrap();
        let (names, cols) = read_paths_csv(buf.as_slice()).unwrap();
        assert_eq!(names, vec!["t", "W"]);
        assert_eq!(cols[1], p.columns[0]);
        assert_eq!(cols[0], g.times());
    }
}
