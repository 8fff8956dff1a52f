use std::io::{Read, Write};

use super::Vec3;
use crate::error::{Error, Result};

/// A numeric CSV table with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.column(name)
            .ok_or_else(|| Error::InvalidInput(format!("CSV is missing column `{name}`")))
    }

    pub fn points(&self) -> Result<Vec<Vec3>> {
        let (ix, iy, iz) = (self.require("x")?, self.require("y")?, self.require("z")?);
        Ok(self.rows.iter().map(|r| Vec3::new(r[ix], r[iy], r[iz])).collect())
    }

    /// Three named columns as vectors.
    pub fn vectors(&self, names: [&str; 3]) -> Result<Vec<Vec3>> {
        let idx = [self.require(names[0])?, self.require(names[1])?, self.require(names[2])?];
        Ok(self.rows.iter().map(|r| Vec3::new(r[idx[0]], r[idx[1]], r[idx[2]])).collect())
    }

    pub fn scalars(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.require(name)?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn read_table_csv<R: Read>(reader: R) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("row {}: `{s}` is not a number", line + 2)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("row {}: non-finite value", line + 2)));
        }
        rows.push(row);
    }
    Ok(Table { headers, rows })
}

/// Reads the `x,y,z` columns of a CSV (other columns are ignored).
pub fn read_points_csv<R: Read>(reader: R) -> Result<Vec<Vec3>> {
    read_table_csv(reader)?.points()
}

fn fmt(v: f64) -> String {
    // shortest representation that round-trips
    format!("{v:?}")
}

pub fn write_vector_csv<W: Write>(writer: W, points: &[Vec3], values: &[Vec3]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x", "y", "z", "vx", "vy", "vz"])?;
    for (x, v) in points.iter().zip(values) {
        w.write_record([x.x, x.y, x.z, v.x, v.y, v.z].map(fmt))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_scalar_csv<W: Write>(writer: W, points: &[Vec3], values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x", "y", "z", "s"])?;
    for (x, s) in points.iter().zip(values) {
        w.write_record([x.x, x.y, x.z, *s].map(fmt))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_round_trip_is_exact() {
        let pts = vec![Vec3::new(0.1, -2.0, 1e-17), Vec3::new(3.0, 4.0, 5.0)];
        let vals = vec![Vec3::new(1.0 / 3.0, 2.0, -7.5), Vec3::new(0.0, 1e300, -1e-300)];
        let mut buf = Vec::new();
        write_vector_csv(&mut buf, &pts, &vals).unwrap();
        let t = read_table_csv(buf.as_slice()).unwrap();
        assert_eq!(t.headers, ["x", "y", "z", "vx", "vy", "vz"]);
        assert_eq!(t.points().unwrap(), pts);
        assert_eq!(t.vectors(["vx", "vy", "vz"]).unwrap(), vals);
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_table_csv("x,y,z\n1,2,abc\n".as_bytes()).is_err());
        assert!(read_points_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}
