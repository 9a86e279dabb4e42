//! File formats: arrival clouds (CSV plus JSON header), ground-truth
//! sidecars, JSON documents and distance-difference CSVs.
//!
//! Every read goes through [`open_read`], which feeds the per-thread access
//! log in [`audit`].

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::scene::{ArrivalCloud, ArrivalSample, CloudHeader, SpacetimeSource};
use crate::geometry::Vec2;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {detail}")]
    Parse { path: PathBuf, detail: String },
    #[error("{path}: field `{field}` {constraint}")]
    Invalid { path: PathBuf, field: String, constraint: String },
}

pub mod audit {
    //! Records the files opened for reading on the current thread.

    use std::cell::RefCell;
    use std::path::{Path, PathBuf};

    thread_local! {
        static LOG: RefCell<Option<Vec<PathBuf>>> = const { RefCell::new(None) };
    }

    /// Starts a fresh log, discarding any previous one.
    pub fn start() {
        LOG.with(|l| *l.borrow_mut() = Some(Vec::new()));
    }

    /// Stops logging and returns the recorded paths.
    pub fn finish() -> Vec<PathBuf> {
        LOG.with(|l| l.borrow_mut().take().unwrap_or_default())
    }

    pub(crate) fn record(path: &Path) {
        LOG.with(|l| {
            if let Some(v) = l.borrow_mut().as_mut() {
                v.push(path.canonicalize().unwrap_or_else(|_| path.to_path_buf()));
            }
        });
    }
}

pub fn open_read(path: &Path) -> Result<BufReader<File>, IoError> {
    audit::record(path);
    File::open(path).map(BufReader::new).map_err(|source| IoError::Io { path: path.into(), source })
}

fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| IoError::Io { path: dir.into(), source })?;
    }
    File::create(path).map(BufWriter::new).map_err(|source| IoError::Io { path: path.into(), source })
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

/// `<stem>.header.json` next to a cloud CSV.
pub fn header_path(cloud: &Path) -> PathBuf {
    with_suffix(cloud, ".header.json")
}

/// `<stem>.truth.csv` next to a cloud CSV.
pub fn truth_path(cloud: &Path) -> PathBuf {
    with_suffix(cloud, ".truth.csv")
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    serde_json::from_reader(open_read(path)?).map_err(|e| IoError::Parse { path: path.into(), detail: e.to_string() })
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut w = create(path)?;
    let io = |source| IoError::Io { path: path.into(), source };
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| io(e.into()))?;
    w.write_all(b"\n").map_err(io)?;
    w.flush().map_err(io)
}

fn csv_error(path: &Path, e: csv::Error) -> IoError {
    IoError::Parse { path: path.into(), detail: e.to_string() }
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|source| IoError::Io { path: path.into(), source })
}

fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, IoError> {
    csv::Reader::from_reader(open_read(path)?)
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| csv_error(path, e))
}

/// Writes the samples to `path` and the header to [`header_path`].
pub fn write_cloud(path: &Path, cloud: &ArrivalCloud) -> Result<(), IoError> {
    write_rows(path, &cloud.samples)?;
    write_json(&header_path(path), &cloud.header)
}

pub fn read_cloud(path: &Path) -> Result<ArrivalCloud, IoError> {
    let hpath = header_path(path);
    let header: CloudHeader = read_json(&hpath)?;
    let invalid = |field: &str, constraint: String| IoError::Invalid { path: hpath.clone(), field: field.into(), constraint };
    if header.grid_size < 4 {
        return Err(invalid("grid_size", format!("must be at least 4, got {}", header.grid_size)));
    }
    if !(header.boundary_length > 0.0 && header.boundary_length.is_finite()) {
        return Err(invalid("boundary_length", format!("must be positive and finite, got {}", header.boundary_length)));
    }
    let samples: Vec<ArrivalSample> = read_rows(path)?;
    for (k, s) in samples.iter().enumerate() {
        if !(s.boundary_param.is_finite() && s.time.is_finite()) {
            return Err(IoError::Invalid {
                path: path.into(),
                field: format!("row {}", k + 1),
                constraint: "must hold finite boundary_param and time".into(),
            });
        }
    }
    Ok(ArrivalCloud { header, samples })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub tau: f64,
}

pub fn write_truth(path: &Path, sources: &[SpacetimeSource]) -> Result<(), IoError> {
    write_rows(
        path,
        sources.iter().map(|s| TruthRow { id: s.id, x: s.position.x, y: s.position.y, tau: s.time }),
    )
}

pub fn read_truth(path: &Path) -> Result<Vec<SpacetimeSource>, IoError> {
    Ok(read_rows::<TruthRow>(path)?
        .into_iter()
        .map(|r| SpacetimeSource { id: r.id, position: Vec2::new(r.x, r.y), time: r.tau })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DdRow {
    pub r: usize,
    pub s: usize,
    pub node: usize,
    pub value: f64,
}

pub fn write_dd(path: &Path, rows: &[(usize, usize, usize, f64)]) -> Result<(), IoError> {
    write_rows(path, rows.iter().map(|&(r, s, node, value)| DdRow { r, s, node, value }))
}

/// Long-format table of per-node values, one row per `(series, node)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub series: usize,
    pub node: usize,
    pub boundary_param: f64,
    pub value: f64,
}

pub fn write_series(path: &Path, spacing: f64, series: &[(usize, &[f64])]) -> Result<(), IoError> {
    write_rows(
        path,
        series.iter().flat_map(|&(id, values)| {
            values.iter().enumerate().map(move |(node, &value)| SeriesRow {
                series: id,
                node,
                boundary_param: node as f64 * spacing,
                value,
            })
        }),
    )
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), IoError> {
    write_rows(path, rows)
}
