//! CSV tables of grid functions.
//!
//! Layout: a mandatory header row, the grid in the first column and one
//! function per remaining column. Numbers are written with 17 significant
//! digits so that every `f64` survives a write/read cycle unchanged.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use warpca_core::warping::validate_warping;
use warpca_core::{Grid, GridFunction, JointSample};

use crate::error::{CliError, Result};

/// A parsed table: the header, the grid and one function per data column.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub grid: Arc<Grid>,
    pub columns: Vec<GridFunction>,
}

impl Table {
    /// Names of the data columns (the header without the grid column).
    pub fn names(&self) -> &[String] {
        &self.header[1..]
    }
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err(path))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err(path))?
        .iter()
        .map(String::from)
        .collect();
    if header.len() < 2 {
        return Err(parse_error(
            path,
            1,
            header.len() + 1,
            "expected a grid column and at least one data column",
        ));
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err(path))?;
        let line = record
            .position()
            .map_or(rows.len() + 2, |p| p.line() as usize);
        if record.len() != header.len() {
            return Err(parse_error(
                path,
                line,
                record.len().min(header.len()) + 1,
                &format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(j, field)| match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(parse_error(
                    path,
                    line,
                    j + 1,
                    &format!("'{field}' is not a finite number"),
                )),
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }

    let points: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    if let Some(j) = points.windows(2).position(|w| w[1] <= w[0]) {
        return Err(parse_error(
            path,
            j + 3,
            1,
            "grid is not strictly increasing",
        ));
    }
    let grid = Arc::new(Grid::new(points).map_err(|e| parse_error(path, 1, 1, &e.to_string()))?);
    let columns = (1..header.len())
        .map(|c| GridFunction::new(Arc::clone(&grid), rows.iter().map(|r| r[c]).collect()))
        .collect::<warpca_core::Result<Vec<_>>>()?;
    Ok(Table {
        header,
        grid,
        columns,
    })
}

fn parse_error(path: &Path, row: usize, column: usize, message: &str) -> CliError {
    CliError::Parse {
        path: path.to_path_buf(),
        row,
        column,
        message: message.to_string(),
    }
}

/// Writes equally long numeric columns under `header`.
pub fn write_table(path: &Path, header: &[String], columns: &[&[f64]]) -> Result<()> {
    if header.len() != columns.len() {
        return Err(CliError::Config(format!(
            "{} headers for {} columns",
            header.len(),
            columns.len()
        )));
    }
    let rows = columns.first().map_or(0, |c| c.len());
    let mut writer = csv::Writer::from_path(path).map_err(csv_err(path))?;
    writer.write_record(header).map_err(csv_err(path))?;
    for i in 0..rows {
        writer
            .write_record(columns.iter().map(|c| fmt_f64(c[i])))
            .map_err(csv_err(path))?;
    }
    writer.flush().map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes a grid column followed by functions on that grid.
pub fn write_functions(
    path: &Path,
    grid_name: &str,
    names: &[String],
    functions: &[&GridFunction],
) -> Result<()> {
    let grid = match functions.first() {
        Some(f) => f.grid().points(),
        None => return Err(CliError::Config("nothing to write".into())),
    };
    let mut header = vec![grid_name.to_string()];
    header.extend(names.iter().cloned());
    let mut columns: Vec<&[f64]> = vec![grid];
    columns.extend(functions.iter().map(|f| f.values()));
    write_table(path, &header, &columns)
}

/// String-valued side table passed through to the score output.
#[derive(Debug, Clone, PartialEq)]
pub struct Metadata {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn read_metadata(path: &Path) -> Result<Metadata> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(csv_err(path))?;
    let header = reader
        .headers()
        .map_err(csv_err(path))?
        .iter()
        .map(String::from)
        .collect();
    let rows = reader
        .records()
        .map(|r| {
            r.map(|r| r.iter().map(String::from).collect())
                .map_err(csv_err(path))
        })
        .collect::<Result<Vec<Vec<String>>>>()?;
    Ok(Metadata { header, rows })
}

pub fn write_records(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_err(path))?;
    writer.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        writer.write_record(row).map_err(csv_err(path))?;
    }
    writer.flush().map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Registered functions and warpings (and optionally observed curves) read
/// from files with identical layout.
#[derive(Debug, Clone)]
pub struct JointInput {
    pub ids: Vec<String>,
    pub samples: Vec<JointSample>,
}

pub fn ingest_joint(
    registered: &Path,
    warpings: &Path,
    observed: Option<&Path>,
) -> Result<JointInput> {
    let w = read_table(registered)?;
    let g = read_table(warpings)?;
    check_layout(&w, &g, warpings)?;
    let x = observed.map(read_table).transpose()?;
    if let (Some(x), Some(path)) = (&x, observed) {
        check_layout(&w, x, path)?;
    }

    // the warping file's grid object is replaced by the registered one
    let grid = Arc::clone(&w.grid);
    let mut samples = Vec::with_capacity(w.columns.len());
    for (c, (wf, gf)) in w.columns.iter().zip(&g.columns).enumerate() {
        let raw = GridFunction::new(Arc::clone(&grid), gf.values().to_vec())?;
        let gamma = validate_warping(raw).map_err(|source| CliError::Column {
            path: PathBuf::from(warpings),
            column: c + 2,
            name: g.header[c + 1].clone(),
            source,
        })?;
        let sample = match &x {
            Some(x) => {
                let xf = GridFunction::new(Arc::clone(&grid), x.columns[c].values().to_vec())?;
                JointSample::with_observed(wf.clone(), gamma, xf)?
            }
            None => JointSample::new(wf.clone(), gamma)?,
        };
        samples.push(sample);
    }
    Ok(JointInput {
        ids: w.names().to_vec(),
        samples,
    })
}

fn check_layout(reference: &Table, other: &Table, path: &Path) -> Result<()> {
    if other.columns.len() != reference.columns.len() {
        return Err(CliError::Config(format!(
            "{}: expected {} data columns, found {}",
            path.display(),
            reference.columns.len(),
            other.columns.len()
        )));
    }
    if other.grid.points() != reference.grid.points() {
        let row = other
            .grid
            .points()
            .iter()
            .zip(reference.grid.points())
            .position(|(a, b)| a != b)
            .unwrap_or(other.grid.len().min(reference.grid.len()));
        return Err(parse_error(
            path,
            row + 2,
            1,
            "grid differs from the registered-function file",
        ));
    }
    Ok(())
}
