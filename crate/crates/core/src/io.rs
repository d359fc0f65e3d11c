//! Trajectory file formats.
//!
//! CSV: a header `t,z1,…,zN` followed by one row per sample. Values are
//! written in Rust's shortest round-trip representation, so a write/read
//! cycle is lossless.
//!
//! Binary (version 1, little-endian):
//!
//! | field   | type          |
//! |---------|---------------|
//! | magic   | `b"ERTS"`     |
//! | version | `u32` = 1     |
//! | len     | `u64`         |
//! | dim     | `u64`         |
//! | dt      | `f64`         |
//! | times   | `len × f64`   |
//! | states  | `len·dim × f64`, row-major |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::dynamics::TimeSeriesSet;
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"ERTS";
const VERSION: u32 = 1;

pub fn write_csv(series: &TimeSeriesSet, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(series, file).map_err(|e| match e {
        Error::Format { message, .. } => Error::Format {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

pub fn write_csv_to<W: Write>(series: &TimeSeriesSet, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let fail = |e: csv::Error| Error::Format {
        path: Default::default(),
        message: e.to_string(),
    };
    let mut header = vec!["t".to_string()];
    header.extend((1..=series.state_dim()).map(|i| format!("z{i}")));
    w.write_record(&header).map_err(fail)?;
    for t in 0..series.len() {
        let mut rec = vec![series.times()[t].to_string()];
        rec.extend(series.state(t).iter().map(f64::to_string));
        w.write_record(&rec).map_err(fail)?;
    }
    w.flush().map_err(|e| fail(e.into()))
}

/// Reads a CSV trajectory. The first column is time; `dt` is inferred from
/// the first two samples (1 for a single sample).
pub fn read_csv(path: &Path) -> Result<TimeSeriesSet> {
    let table = read_csv_table(path)?;
    if table.header.first().map(String::as_str) != Some("t") {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: "first column must be `t`".into(),
        });
    }
    if table.header.len() < 2 {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: "no state columns".into(),
        });
    }
    let times: Vec<f64> = table.rows.iter().map(|r| r[0]).collect();
    let states: Vec<f64> = table.rows.iter().flat_map(|r| r[1..].iter().copied()).collect();
    let dt = if times.len() >= 2 { times[1] - times[0] } else { 1.0 };
    TimeSeriesSet::new(times, states, table.header.len() - 1, dt).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// A numeric CSV table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }
}

pub fn read_csv_table(path: &Path) -> Result<CsvTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(BufReader::new(file));
    let fmt = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let header: Vec<String> = r
        .headers()
        .map_err(|e| fmt(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| fmt(e.to_string()))?;
        let row = rec
            .iter()
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| fmt(format!("row {}: {e}", line + 2)))?;
        if row.len() != header.len() {
            return Err(fmt(format!("row {} has {} fields, expected {}", line + 2, row.len(), header.len())));
        }
        rows.push(row);
    }
    Ok(CsvTable { header, rows })
}

pub fn write_binary(series: &TimeSeriesSet, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_binary_to(series, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_binary_to<W: Write>(series: &TimeSeriesSet, w: &mut W) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(series.len() as u64).to_le_bytes())?;
    w.write_all(&(series.state_dim() as u64).to_le_bytes())?;
    w.write_all(&series.dt().to_le_bytes())?;
    for v in series.times().iter().chain(series.states()) {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary(path: &Path) -> Result<TimeSeriesSet> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_binary_from(&mut BufReader::new(file)).map_err(|e| match e {
        Error::Format { message, .. } => Error::Format {
            path: path.to_path_buf(),
            message,
        },
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn read_binary_from<R: Read>(r: &mut R) -> Result<TimeSeriesSet> {
    let bad = |message: &str| Error::Format {
        path: Default::default(),
        message: message.into(),
    };
    let io = |e| Error::io(Path::new(""), e);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(bad("not a trajectory dump"));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4).map_err(io)?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let mut b8 = [0u8; 8];
    let mut next = |r: &mut R| -> Result<[u8; 8]> {
        r.read_exact(&mut b8).map_err(io)?;
        Ok(b8)
    };
    let len = u64::from_le_bytes(next(r)?) as usize;
    let dim = u64::from_le_bytes(next(r)?) as usize;
    let dt = f64::from_le_bytes(next(r)?);
    let total = len
        .checked_mul(dim)
        .and_then(|s| s.checked_add(len))
        .ok_or_else(|| bad("header sizes overflow"))?;
    let mut values = Vec::with_capacity(total.min(1 << 24));
    for _ in 0..total {
        values.push(f64::from_le_bytes(next(r)?));
    }
    let states = values.split_off(len);
    TimeSeriesSet::new(values, states, dim, dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TimeSeriesSet {
        TimeSeriesSet::from_rows_at(vec![vec![0.1, -2.5], vec![1.0 / 3.0, 1e-300], vec![-0.0, 7.0]], 0.25, 0.01).unwrap()
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        write_csv(&sample(), &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("t,z1,z2\n"));
        let back = read_csv(&p).unwrap();
        assert_eq!(back.states(), sample().states());
        assert_eq!(back.times(), sample().times());
    }

    #[test]
    fn binary_round_trip() {
        let mut buf = Vec::new();
        write_binary_to(&sample(), &mut buf).unwrap();
        assert_eq!(&buf[..4], b"ERTS");
        let back = read_binary_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back, sample());
    }

    #[test]
    fn binary_rejects_garbage() {
        assert!(read_binary_from(&mut &b"NOPE\x01\0\0\0"[..]).is_err());
        let mut buf = Vec::new();
        write_binary_to(&sample(), &mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_binary_from(&mut buf.as_slice()).is_err());
    }

    #[test]
    fn missing_file_names_path() {
        let err = read_csv(Path::new("/nonexistent/dir/x.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/x.csv"));
    }
}
