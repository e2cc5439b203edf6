//! CSV interchange format.
//!
//! `positions.csv` has header `t,x,y` and one row per time bin. `spikes.csv`
//! has header `t,n0,n1,...,n{M-1}` with the same time bins in the same order.
//! Both are UTF-8 with `.` as the decimal separator.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use algoboard_core::{
    validate_dataset, ActiveSpace, Axis, ObservationMatrix, TrajectorySeries, ValidationReport,
};

pub const POSITIONS_FILE: &str = "positions.csv";
pub const SPIKES_FILE: &str = "spikes.csv";

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: line {line}: {source}", path.display())]
    Csv {
        path: PathBuf,
        line: u64,
        source: csv::Error,
    },
    #[error("{}: line 1: expected header `{expected}`, found `{found}`", path.display())]
    Header {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("{}: line {line}: expected {expected} fields, found {found}", path.display())]
    FieldCount {
        path: PathBuf,
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("{}: line {line}: column `{column}`: cannot parse `{value}` as a number", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        column: String,
        value: String,
    },
    #[error("{}: line {line}: time {found} does not match positions time {expected}", path.display())]
    TimeMismatch {
        path: PathBuf,
        line: u64,
        expected: f64,
        found: f64,
    },
    #[error("{}: no data rows", path.display())]
    Empty { path: PathBuf },
    #[error("dataset failed validation: {0}")]
    Validation(ValidationReport),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    /// Time column.
    pub t: Vec<f64>,
    /// Remaining columns, row-major.
    pub values: Vec<f64>,
}

/// Reads a numeric CSV table, checking the header against `expected`.
fn read_table(path: &Path, expected: impl Fn(&[String]) -> bool, describe: &str) -> Result<Table, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(file);
    let csv_err = |line: u64, source: csv::Error| IngestError::Csv {
        path: path.to_path_buf(),
        line,
        source,
    };

    let mut records = reader.records();
    let header: Vec<String> = match records.next() {
        None => return Err(IngestError::Empty { path: path.to_path_buf() }),
        Some(r) => r.map_err(|e| csv_err(1, e))?.iter().map(str::to_string).collect(),
    };
    if !expected(&header) {
        return Err(IngestError::Header {
            path: path.to_path_buf(),
            expected: describe.to_string(),
            found: header.join(","),
        });
    }

    let width = header.len();
    let mut t = Vec::new();
    let mut values = Vec::new();
    for record in records {
        let line = match &record {
            Ok(r) => r.position().map_or(0, |p| p.line()),
            Err(e) => e.position().map_or(0, |p| p.line()),
        };
        let record = record.map_err(|e| csv_err(line, e))?;
        if record.len() != width {
            return Err(IngestError::FieldCount {
                path: path.to_path_buf(),
                line,
                expected: width,
                found: record.len(),
            });
        }
        for (i, cell) in record.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| IngestError::Parse {
                path: path.to_path_buf(),
                line,
                column: header[i].clone(),
                value: cell.to_string(),
            })?;
            if i == 0 {
                t.push(v);
            } else {
                values.push(v);
            }
        }
    }
    if t.is_empty() {
        return Err(IngestError::Empty { path: path.to_path_buf() });
    }
    Ok(Table { header, t, values })
}

pub fn read_positions(path: &Path) -> Result<Table, IngestError> {
    read_table(path, |h| h == ["t", "x", "y"], "t,x,y")
}

pub fn read_spikes(path: &Path) -> Result<Table, IngestError> {
    read_table(
        path,
        |h| {
            h.len() >= 2
                && h[0] == "t"
                && h[1..].iter().enumerate().all(|(j, name)| *name == format!("n{j}"))
        },
        "t,n0,n1,...,n{M-1}",
    )
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: TrajectorySeries,
    pub y: TrajectorySeries,
    pub obs: ObservationMatrix,
}

impl Dataset {
    pub fn trajectory(&self, axis: Axis) -> &TrajectorySeries {
        match axis {
            Axis::X => &self.x,
            Axis::Y => &self.y,
        }
    }
}

/// Parses both files and validates the result against `space`.
pub fn ingest_csv(positions: &Path, spikes: &Path, space: &ActiveSpace) -> Result<Dataset, IngestError> {
    let pos = read_positions(positions)?;
    let spk = read_spikes(spikes)?;
    for (i, (a, b)) in pos.t.iter().zip(&spk.t).enumerate() {
        if a != b {
            return Err(IngestError::TimeMismatch {
                path: spikes.to_path_buf(),
                line: i as u64 + 2,
                expected: *a,
                found: *b,
            });
        }
    }

    let xs = pos.values.iter().step_by(2).copied().collect();
    let ys = pos.values.iter().skip(1).step_by(2).copied().collect();
    let x = TrajectorySeries::new(Axis::X, xs).expect("at least one data row");
    let y = TrajectorySeries::new(Axis::Y, ys).expect("at least one data row");
    let m = spk.header.len() - 1;
    let obs = ObservationMatrix::new(spk.t.len(), m, spk.values).expect("rows have equal width");

    for traj in [&x, &y] {
        let report = validate_dataset(traj, &obs, space);
        if !report.passed() {
            return Err(IngestError::Validation(report));
        }
    }
    Ok(Dataset { x, y, obs })
}

fn create(path: &Path) -> Result<BufWriter<File>, IngestError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })
}

/// Serialises positions in the interchange format. Floats use Rust's
/// shortest round-trip formatting, so re-reading recovers them exactly.
pub fn positions_csv(x: &TrajectorySeries, y: &TrajectorySeries) -> String {
    let mut out = String::from("t,x,y\n");
    for (k, (a, b)) in x.positions().iter().zip(y.positions()).enumerate() {
        out.push_str(&format!("{k},{a},{b}\n"));
    }
    out
}

pub fn spikes_csv(obs: &ObservationMatrix) -> String {
    let mut out = String::from("t");
    for j in 0..obs.cols() {
        out.push_str(&format!(",n{j}"));
    }
    out.push('\n');
    for (k, row) in obs.iter_rows().enumerate() {
        out.push_str(&k.to_string());
        for v in row {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn write_dataset(dir: &Path, data: &Dataset) -> Result<(PathBuf, PathBuf), IngestError> {
    let pos = dir.join(POSITIONS_FILE);
    let spk = dir.join(SPIKES_FILE);
    for (path, text) in [
        (&pos, positions_csv(&data.x, &data.y)),
        (&spk, spikes_csv(&data.obs)),
    ] {
        let mut w = create(path)?;
        w.write_all(text.as_bytes())
            .and_then(|_| w.flush())
            .map_err(|source| IngestError::Io {
                path: path.clone(),
                source,
            })?;
    }
    Ok((pos, spk))
}
