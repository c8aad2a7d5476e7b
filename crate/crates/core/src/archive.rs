//! On-disk formats: SNPX matrix files, snapshot archives and CSV import.
//!
//! An archive is a directory holding `manifest.json` and one SNPX file per
//! entry. Parameter values live in the manifest; matrix files carry only
//! bulk data.
//!
//! SNPX layout (little-endian):
//!
//! ```text
//! offset  size        field
//! 0       4           magic "SNPX"
//! 4       4           u32 version = 1
//! 8       8           u64 rows
//! 16      8           u64 cols
//! 24      8*rows*cols f64 values, column-major
//! ```

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, ParamPoint};
use crate::snapshot::{SnapshotEntry, SnapshotSet};

pub const SNPX_MAGIC: &[u8; 4] = b"SNPX";
pub const SNPX_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
const MANIFEST_VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

/// Writes one matrix as an SNPX file.
pub fn write_matrix(path: &Path, m: &DenseMatrix) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(SNPX_MAGIC);
    header.extend_from_slice(&SNPX_VERSION.to_le_bytes());
    header.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    header.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    w.write_all(&header).map_err(|e| Error::io(path, e))?;
    for v in m.as_slice() {
        w.write_all(&v.to_le_bytes()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads an SNPX file, checking the header and the payload length.
pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    BufReader::new(file)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(path, "file shorter than the SNPX header"));
    }
    if &bytes[0..4] != SNPX_MAGIC {
        return Err(Error::format(path, "bad magic bytes"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != SNPX_VERSION {
        return Err(Error::format(path, format!("unsupported SNPX version {version}")));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let expected = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(8))
        .and_then(|c| c.checked_add(HEADER_LEN as u64));
    if expected != Some(bytes.len() as u64) {
        return Err(Error::format(
            path,
            format!("header declares {rows}x{cols} but payload has {} bytes", bytes.len() - HEADER_LEN),
        ));
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    DenseMatrix::from_column_major(rows as usize, cols as usize, data).map_err(|e| match e {
        Error::NonFinite(what) => Error::NonFinite(format!("{} ({what})", path.display())),
        other => other,
    })
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    version: u32,
    n: usize,
    d: usize,
    entries: Vec<ManifestEntry>,
}

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    id: String,
    lambda: Vec<f64>,
    file: String,
}

fn matrix_file_name(index: usize) -> String {
    format!("entry_{index:05}.snpx")
}

/// Writes `set` as an archive directory, creating it if needed.
pub fn save_archive(set: &SnapshotSet, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(set.len());
    for (i, e) in set.entries().iter().enumerate() {
        let file = matrix_file_name(i);
        write_matrix(&dir.join(&file), &e.snapshots)?;
        entries.push(ManifestEntry {
            id: e.id.clone(),
            lambda: e.lambda.coords().to_vec(),
            file,
        });
    }
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        n: set.n(),
        d: set.d(),
        entries,
    };
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json).map_err(|e| Error::io(&path, e))
}

/// Reads an archive directory written by [`save_archive`] (or by hand).
pub fn load_archive(dir: &Path) -> Result<SnapshotSet> {
    let path = dir.join(MANIFEST_FILE);
    if !path.is_file() {
        return Err(Error::MissingManifest(path));
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))?;
    if manifest.version != MANIFEST_VERSION {
        return Err(Error::format(
            &path,
            format!("unsupported manifest version {}", manifest.version),
        ));
    }
    let mut set = SnapshotSet::new(manifest.n, manifest.d)?;
    for e in manifest.entries {
        let lambda = ParamPoint::new(e.lambda).map_err(|err| match err {
            Error::NonFinite(_) => Error::NonFinite(format!("parameter of entry `{}`", e.id)),
            other => other,
        })?;
        let file: PathBuf = dir.join(&e.file);
        let snapshots = read_matrix(&file)?;
        if snapshots.rows() != manifest.n {
            return Err(Error::DimensionMismatch(format!(
                "{} declares {} rows but the manifest says n={}",
                file.display(),
                snapshots.rows(),
                manifest.n
            )));
        }
        set.push(SnapshotEntry {
            id: e.id,
            lambda,
            snapshots,
        })?;
    }
    Ok(set)
}

/// Reads a headerless numeric CSV: one row per spatial point, one column per
/// time step.
pub fn import_csv(path: &Path) -> Result<DenseMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| {
                    Error::format(path, format!("line {}: `{field}` is not a number", line + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::format(
                    path,
                    format!("line {} has {} fields, expected {}", line + 1, row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::format(path, "empty CSV"));
    }
    let (n, m) = (rows.len(), rows[0].len());
    DenseMatrix::from_column_major(n, m, (0..m).flat_map(|j| rows.iter().map(move |r| r[j])).collect())
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        }
    } else {
        Error::format(path, e.to_string())
    }
}
