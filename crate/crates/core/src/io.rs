//! Plain-text matrix files and waypoint CSV files.
//!
//! Matrix format, one matrix per file:
//!
//! ```text
//! # igc-matrix v1
//! name: F_d
//! rows: 3 delta_e_cmd delta_r_cmd delta_t
//! cols: 7 e_h e_x1 q theta p r phi
//! -0.006 -0.3378 ...
//! ```
//!
//! Rows are written in row-major order, whitespace separated, with the
//! shortest decimal text that reads back to the same `f64`.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{IgcError, Result};

pub const MATRIX_VERSION: &str = "# igc-matrix v1";

#[derive(Debug, Clone, PartialEq)]
pub struct NamedMatrix {
    pub name: String,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub data: DMatrix<f64>,
}

impl NamedMatrix {
    pub fn new(name: &str, row_labels: &[&str], col_labels: &[&str], data: DMatrix<f64>) -> Self {
        assert_eq!(row_labels.len(), data.nrows(), "one label per row");
        assert_eq!(col_labels.len(), data.ncols(), "one label per column");
        Self {
            name: name.to_string(),
            row_labels: row_labels.iter().map(|s| s.to_string()).collect(),
            col_labels: col_labels.iter().map(|s| s.to_string()).collect(),
            data,
        }
    }

    /// Labels `prefix0, prefix1, …` on both axes.
    pub fn unlabeled(name: &str, data: DMatrix<f64>) -> Self {
        let lab = |p: &str, n: usize| (0..n).map(|i| format!("{p}{i}")).collect();
        Self {
            name: name.to_string(),
            row_labels: lab("r", data.nrows()),
            col_labels: lab("c", data.ncols()),
            data,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{MATRIX_VERSION}\nname: {}\nrows: {} {}\ncols: {} {}\n",
            self.name,
            self.data.nrows(),
            self.row_labels.join(" "),
            self.data.ncols(),
            self.col_labels.join(" ")
        );
        for i in 0..self.data.nrows() {
            let row: Vec<String> = self.data.row(i).iter().map(|v| number(*v)).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> std::result::Result<Self, String> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim_end) != Some(MATRIX_VERSION) {
            return Err(format!("first line must be '{MATRIX_VERSION}'"));
        }
        let field = |line: Option<&str>, key: &str| -> std::result::Result<String, String> {
            let line = line.ok_or_else(|| format!("missing '{key}:' line"))?;
            line.strip_prefix(key)
                .and_then(|r| r.strip_prefix(':'))
                .map(|r| r.trim().to_string())
                .ok_or_else(|| format!("expected '{key}:', found '{line}'"))
        };
        let name = field(lines.next(), "name")?;
        let dims = |spec: String, key: &str| -> std::result::Result<(usize, Vec<String>), String> {
            let mut it = spec.split_whitespace();
            let n: usize = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| format!("'{key}:' must start with a count"))?;
            let labels: Vec<String> = it.map(str::to_string).collect();
            if labels.len() != n {
                return Err(format!(
                    "'{key}:' declares {n} entries but lists {} labels",
                    labels.len()
                ));
            }
            Ok((n, labels))
        };
        let (nr, row_labels) = dims(field(lines.next(), "rows")?, "rows")?;
        let (nc, col_labels) = dims(field(lines.next(), "cols")?, "cols")?;
        let mut vals = Vec::with_capacity(nr * nc);
        for (i, line) in lines.enumerate() {
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| format!("bad number '{t}' in data row {i}"))
                })
                .collect::<std::result::Result<_, _>>()?;
            if row.len() != nc {
                return Err(format!("data row {i} has {} entries, expected {nc}", row.len()));
            }
            vals.extend(row);
        }
        if vals.len() != nr * nc {
            return Err(format!("expected {nr} data rows, found {}", vals.len() / nc.max(1)));
        }
        Ok(Self {
            name,
            row_labels,
            col_labels,
            data: DMatrix::from_row_slice(nr, nc, &vals),
        })
    }
}

fn number(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e9).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn write_matrix(path: &Path, m: &NamedMatrix) -> Result<()> {
    fs::write(path, m.to_text()).map_err(|e| IgcError::io(path, e))
}

pub fn read_matrix(path: &Path) -> Result<NamedMatrix> {
    let text = fs::read_to_string(path).map_err(|e| IgcError::io(path, e))?;
    NamedMatrix::from_text(&text).map_err(|message| IgcError::Parse {
        path: path.to_path_buf(),
        message,
    })
}

/// Waypoints from a CSV file with an `x,y` header (metres, x north).
pub fn read_waypoints(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = fs::read_to_string(path).map_err(|e| IgcError::io(path, e))?;
    parse_waypoints(&text).map_err(|message| IgcError::Parse {
        path: path.to_path_buf(),
        message,
    })
}

pub fn parse_waypoints(text: &str) -> std::result::Result<Vec<(f64, f64)>, String> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| e.to_string())?;
    if header.len() != 2 || &header[0] != "x" || &header[1] != "y" {
        return Err("waypoint file must start with the header 'x,y'".into());
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let get = |k: usize| -> std::result::Result<f64, String> {
            let v: f64 = rec
                .get(k)
                .ok_or_else(|| format!("row {} is missing a column", i + 1))?
                .parse()
                .map_err(|_| format!("row {} has a non-numeric entry", i + 1))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("row {} has a non-finite entry", i + 1))
            }
        };
        out.push((get(0)?, get(1)?));
    }
    Ok(out)
}

pub fn write_waypoints(path: &Path, waypoints: &[(f64, f64)]) -> Result<()> {
    let mut s = String::from("x,y\n");
    for (x, y) in waypoints {
        s.push_str(&format!("{},{}\n", number(*x), number(*y)));
    }
    fs::write(path, s).map_err(|e| IgcError::io(path, e))
}
