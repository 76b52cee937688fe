use std::fs;
use std::path::Path;

use pnn_core::{Axis, GridSpec, SampleMatrix};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::format::fmt_g;

/// Relative slack allowed between consecutive time gaps of a sample file.
const UNIFORM_STEP_TOL: f64 = 1e-9;

/// Time-stamped samples as read from a `t,x1,...,xn` file.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Samples {
    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    /// Uniform time step, when the time column has one.
    pub fn step(&self) -> Option<f64> {
        if self.times.len() < 2 {
            return None;
        }
        let m = self.times.len();
        let h = (self.times[m - 1] - self.times[0]) / (m - 1) as f64;
        let uniform = h > 0.0
            && self
                .times
                .windows(2)
                .all(|w| ((w[1] - w[0]) - h).abs() <= UNIFORM_STEP_TOL * h.max(1.0));
        uniform.then_some(h)
    }

    pub fn to_matrix(&self, stage: &'static str) -> CliResult<SampleMatrix> {
        let step = self
            .step()
            .ok_or_else(|| CliError::data(stage, "sample times are not uniformly spaced"))?;
        SampleMatrix::new(self.times[0], step, self.states.clone())
            .map_err(|e| CliError::data(stage, e.to_string()))
    }

    pub fn select(&self, components: &[usize], stage: &'static str) -> CliResult<Samples> {
        let n = self.dim();
        if let Some(&c) = components.iter().find(|&&c| c == 0 || c > n) {
            return Err(CliError::config(
                stage,
                format!("component {c} outside 1..={n}"),
            ));
        }
        Ok(Samples {
            times: self.times.clone(),
            states: self
                .states
                .iter()
                .map(|s| components.iter().map(|&c| s[c - 1]).collect())
                .collect(),
        })
    }
}

impl From<&SampleMatrix> for Samples {
    fn from(m: &SampleMatrix) -> Self {
        Samples {
            times: (0..m.len()).map(|r| m.time(r)).collect(),
            states: m.states().to_vec(),
        }
    }
}

fn csv_error(stage: &'static str, path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::data(stage, format!("{}: {e}", path.display()))
}

fn parse_field(stage: &'static str, path: &Path, row: usize, field: &str) -> CliResult<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|e| csv_error(stage, path, format!("row {row}: `{field}`: {e}")))
}

/// Header plus numeric rows; every row must match the header width.
fn read_table(path: &Path, stage: &'static str) -> CliResult<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(stage, path, e))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(stage, path, e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(stage, path, e))?;
        let row = record
            .iter()
            .map(|f| parse_field(stage, path, r + 1, f))
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(csv_error(stage, path, "no data rows"));
    }
    Ok((header, rows))
}

fn write_table(
    path: &Path,
    stage: &'static str,
    header: &[String],
    rows: impl Iterator<Item = Vec<f64>>,
) -> CliResult<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(stage, path, e))?;
    writer
        .write_record(header)
        .map_err(|e| csv_error(stage, path, e))?;
    for row in rows {
        writer
            .write_record(row.iter().map(|&v| fmt_g(v)))
            .map_err(|e| csv_error(stage, path, e))?;
    }
    writer.flush().map_err(|e| csv_error(stage, path, e))
}

pub fn axis_names(n: usize) -> Vec<String> {
    (1..=n).map(|j| format!("x{j}")).collect()
}

pub fn read_samples(path: &Path, stage: &'static str) -> CliResult<Samples> {
    let (header, rows) = read_table(path, stage)?;
    if header.first().map(String::as_str) != Some("t") || header.len() < 2 {
        return Err(csv_error(stage, path, "expected header `t,x1,...,xn`"));
    }
    Ok(Samples {
        times: rows.iter().map(|r| r[0]).collect(),
        states: rows.into_iter().map(|r| r[1..].to_vec()).collect(),
    })
}

pub fn write_samples(path: &Path, stage: &'static str, samples: &Samples) -> CliResult<()> {
    let mut header = vec!["t".to_string()];
    header.extend(axis_names(samples.dim()));
    let rows = samples.times.iter().zip(&samples.states).map(|(&t, s)| {
        let mut row = vec![t];
        row.extend(s);
        row
    });
    write_table(path, stage, &header, rows)
}

/// Signal rows: `x1,...,xn`, or a sample file whose time column is dropped.
pub fn read_signals(path: &Path, stage: &'static str) -> CliResult<Vec<Vec<f64>>> {
    let (header, rows) = read_table(path, stage)?;
    if header.first().map(String::as_str) == Some("t") {
        Ok(rows.into_iter().map(|r| r[1..].to_vec()).collect())
    } else {
        Ok(rows)
    }
}

/// Writes cell centers and one value column, last axis fastest.
pub fn write_grid(
    path: &Path,
    stage: &'static str,
    grid: &GridSpec,
    values: &[f64],
    label: &str,
) -> CliResult<()> {
    let mut header = axis_names(grid.dim());
    header.push(label.to_string());
    let rows = values.iter().enumerate().map(|(i, &v)| {
        let mut row = grid.center(i);
        row.push(v);
        row
    });
    write_table(path, stage, &header, rows)
}

/// Grid bounds are recovered from the printed centers, which carry twelve
/// significant digits; rounding to this resolution restores them exactly.
fn snap(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

/// Reads a grid file and rebuilds its [`GridSpec`] from the cell centers.
pub fn read_grid(path: &Path, stage: &'static str, label: &str) -> CliResult<(GridSpec, Vec<f64>)> {
    let (header, rows) = read_table(path, stage)?;
    let n = header.len().saturating_sub(1);
    let mut want = axis_names(n);
    want.push(label.to_string());
    if n == 0 || header != want {
        return Err(csv_error(
            stage,
            path,
            format!("expected header `{}`", want.join(",")),
        ));
    }
    let mut axes = Vec::with_capacity(n);
    for j in 0..n {
        let mut centers: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        centers.sort_by(f64::total_cmp);
        centers.dedup();
        let bins = centers.len();
        if bins < 2 {
            return Err(csv_error(
                stage,
                path,
                format!("axis {} has a single cell", j + 1),
            ));
        }
        let w = (centers[bins - 1] - centers[0]) / (bins - 1) as f64;
        let axis = Axis::new(
            snap(centers[0] - w / 2.0),
            snap(centers[bins - 1] + w / 2.0),
            bins,
        )
        .map_err(|e| csv_error(stage, path, e))?;
        axes.push(axis);
    }
    let grid = GridSpec::new(axes).map_err(|e| csv_error(stage, path, e))?;
    if grid.len() != rows.len() {
        return Err(csv_error(
            stage,
            path,
            format!("{} rows for a grid of {} cells", rows.len(), grid.len()),
        ));
    }
    for (i, row) in rows.iter().enumerate() {
        let c = grid.center(i);
        let tol = 1e-9 * grid.axes().iter().map(Axis::width).fold(0.0, f64::max);
        if c.iter().zip(row).any(|(a, b)| (a - b).abs() > tol) {
            return Err(csv_error(
                stage,
                path,
                format!("row {} is out of grid order", i + 1),
            ));
        }
    }
    Ok((grid, rows.into_iter().map(|r| r[n]).collect()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path, stage: &'static str) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| csv_error(stage, path, e))?;
    serde_json::from_str(&text).map_err(|e| csv_error(stage, path, e))
}

pub fn write_json<T: Serialize>(path: &Path, stage: &'static str, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string(value).map_err(|e| csv_error(stage, path, e))?;
    text.push('\n');
    write_text(path, stage, &text)
}

pub fn write_text(path: &Path, stage: &'static str, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| csv_error(stage, path, e))
}

/// Creates the directory; failure here is a configuration problem.
pub fn ensure_dir(path: &Path, stage: &'static str) -> CliResult<()> {
    fs::create_dir_all(path)
        .map_err(|e| CliError::config(stage, format!("output directory {}: {e}", path.display())))
}
