//! Matrix file ingestion and emission.
//!
//! Two on-disk formats, selected by file extension:
//!
//! - **CSV** (anything not ending in `.xmat`): decimal 64-bit floats, one
//!   matrix row per record, uniform column count. A header row is
//!   auto-detected (first row with any non-numeric cell) and can be forced
//!   either way. Written numbers use the shortest decimal form that parses
//!   back to the identical float, so a write→read round trip is bitwise
//!   exact.
//! - **xmat** (`.xmat`, case-insensitive): a fast binary format for large
//!   feature matrices — magic bytes `XMAT`, version (u32), rows (u64),
//!   cols (u64), then rows×cols IEEE-754 doubles, all little-endian,
//!   row-major.
//!
//! Every read also reports a SHA-256 digest of the raw file bytes so
//! reports can state exactly which inputs they were computed from.

use std::fmt;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::numkit::{Matrix, NumError};

/// Current xmat format version.
pub const XMAT_VERSION: u32 = 1;

const XMAT_MAGIC: [u8; 4] = *b"XMAT";
const XMAT_HEADER_LEN: usize = 4 + 4 + 8 + 8;

/// On-disk matrix formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Csv,
    Xmat,
}

impl FileFormat {
    /// Picks the format for a path: `.xmat` (case-insensitive) is binary,
    /// everything else is CSV.
    pub fn for_path(path: &Path) -> FileFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("xmat") => FileFormat::Xmat,
            _ => FileFormat::Csv,
        }
    }
}

/// How to treat the first CSV row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeaderMode {
    /// Header if and only if the first row has a non-numeric cell.
    #[default]
    Auto,
    /// Always skip the first row.
    Header,
    /// Always parse the first row as data.
    NoHeader,
}

/// A matrix read from disk, with the digest of the bytes it came from.
#[derive(Debug, Clone)]
pub struct LoadedMatrix {
    pub matrix: Matrix,
    /// `sha256:<hex>` over the raw file bytes.
    pub digest: String,
    pub format: FileFormat,
}

/// Errors from matrix file I/O. All of them are input problems, not
/// dimension mismatches between inputs.
#[derive(Debug)]
pub enum MatFileError {
    Io { path: String, reason: String },
    Empty { path: String },
    Csv { path: String, reason: String },
    NonNumeric { path: String, row: usize, col: usize, cell: String },
    Xmat { path: String, reason: String },
    NonFinite { path: String, row: usize, col: usize },
}

impl fmt::Display for MatFileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatFileError::Io { path, reason } => write!(f, "{path}: {reason}"),
            MatFileError::Empty { path } => write!(f, "{path}: no data rows"),
            MatFileError::Csv { path, reason } => write!(f, "{path}: {reason}"),
            MatFileError::NonNumeric { path, row, col, cell } => write!(
                f,
                "{path}: row {row}, column {col}: {cell:?} is not a number"
            ),
            MatFileError::Xmat { path, reason } => write!(f, "{path}: {reason}"),
            MatFileError::NonFinite { path, row, col } => write!(
                f,
                "{path}: row {row}, column {col}: value is not finite"
            ),
        }
    }
}

impl std::error::Error for MatFileError {}

/// `sha256:<hex>` digest of a byte slice.
pub fn digest_bytes(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let hash = hasher.finalize();
    let mut out = String::with_capacity(7 + 64);
    out.push_str("sha256:");
    for byte in hash {
        use std::fmt::Write as _;
        let _ = write!(out, "{byte:02x}");
    }
    out
}

/// Reads a matrix file, dispatching on extension.
pub fn read_matrix(path: &Path, header: HeaderMode) -> Result<LoadedMatrix, MatFileError> {
    let display = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|e| MatFileError::Io {
        path: display.clone(),
        reason: e.to_string(),
    })?;
    let digest = digest_bytes(&bytes);
    let format = FileFormat::for_path(path);
    let matrix = match format {
        FileFormat::Csv => parse_csv(&bytes, header, &display)?,
        FileFormat::Xmat => parse_xmat(&bytes, &display)?,
    };
    Ok(LoadedMatrix {
        matrix,
        digest,
        format,
    })
}

fn matrix_from_cells(
    rows: Vec<Vec<f64>>,
    cols: usize,
    path: &str,
) -> Result<Matrix, MatFileError> {
    let n = rows.len();
    let data: Vec<f64> = rows.into_iter().flatten().collect();
    Matrix::from_vec(n, cols, data).map_err(|e| match e {
        NumError::NonFinite { row, col } => MatFileError::NonFinite {
            path: path.to_string(),
            row,
            col,
        },
        other => MatFileError::Csv {
            path: path.to_string(),
            reason: other.to_string(),
        },
    })
}

fn parse_csv(bytes: &[u8], header: HeaderMode, path: &str) -> Result<Matrix, MatFileError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut cols = 0usize;
    for (index, record) in reader.records().enumerate() {
        let record = record.map_err(|e| MatFileError::Csv {
            path: path.to_string(),
            reason: e.to_string(),
        })?;
        let mut parsed: Vec<f64> = Vec::with_capacity(record.len());
        let mut first_bad: Option<(usize, String)> = None;
        for (col, cell) in record.iter().enumerate() {
            match cell.parse::<f64>() {
                Ok(v) => parsed.push(v),
                Err(_) => {
                    first_bad = Some((col, cell.to_string()));
                    break;
                }
            }
        }
        if index == 0 {
            match (header, &first_bad) {
                // Forced or detected header: skip the row.
                (HeaderMode::Header, _) | (HeaderMode::Auto, Some(_)) => continue,
                (HeaderMode::NoHeader, Some((col, cell))) => {
                    return Err(MatFileError::NonNumeric {
                        path: path.to_string(),
                        row: index,
                        col: *col,
                        cell: cell.clone(),
                    });
                }
                _ => {}
            }
        } else if let Some((col, cell)) = &first_bad {
            return Err(MatFileError::NonNumeric {
                path: path.to_string(),
                row: index,
                col: *col,
                cell: cell.clone(),
            });
        }
        if rows.is_empty() {
            cols = parsed.len();
        }
        rows.push(parsed);
    }
    if rows.is_empty() || cols == 0 {
        return Err(MatFileError::Empty {
            path: path.to_string(),
        });
    }
    matrix_from_cells(rows, cols, path)
}

fn parse_xmat(bytes: &[u8], path: &str) -> Result<Matrix, MatFileError> {
    let fail = |reason: String| {
        Err(MatFileError::Xmat {
            path: path.to_string(),
            reason,
        })
    };
    if bytes.len() < XMAT_HEADER_LEN {
        return fail(format!(
            "truncated header: {} bytes, need {XMAT_HEADER_LEN}",
            bytes.len()
        ));
    }
    if bytes[0..4] != XMAT_MAGIC {
        return fail(format!("bad magic bytes {:?}, expected \"XMAT\"", &bytes[0..4]));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != XMAT_VERSION {
        return fail(format!("unsupported version {version}, expected {XMAT_VERSION}"));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let count = rows
        .checked_mul(cols)
        .and_then(|c| usize::try_from(c).ok())
        .and_then(|c| c.checked_mul(8));
    let Some(payload_len) = count else {
        return fail(format!("implausible dimensions {rows}x{cols}"));
    };
    if rows == 0 || cols == 0 {
        return Err(MatFileError::Empty {
            path: path.to_string(),
        });
    }
    let expected = XMAT_HEADER_LEN + payload_len;
    if bytes.len() != expected {
        return fail(format!(
            "size mismatch: {rows}x{cols} needs {expected} bytes, file has {}",
            bytes.len()
        ));
    }
    let mut data = Vec::with_capacity(payload_len / 8);
    for chunk in bytes[XMAT_HEADER_LEN..].chunks_exact(8) {
        data.push(f64::from_le_bytes(chunk.try_into().unwrap()));
    }
    Matrix::from_vec(rows as usize, cols as usize, data).map_err(|e| match e {
        NumError::NonFinite { row, col } => MatFileError::NonFinite {
            path: path.to_string(),
            row,
            col,
        },
        other => MatFileError::Xmat {
            path: path.to_string(),
            reason: other.to_string(),
        },
    })
}

/// Writes a matrix, dispatching on extension like [`read_matrix`].
pub fn write_matrix(path: &Path, matrix: &Matrix) -> Result<(), MatFileError> {
    match FileFormat::for_path(path) {
        FileFormat::Csv => write_csv(path, matrix),
        FileFormat::Xmat => write_xmat(path, matrix),
    }
}

/// Writes CSV with no header row. Numbers use the shortest decimal form
/// that parses back to the identical 64-bit float.
pub fn write_csv(path: &Path, matrix: &Matrix) -> Result<(), MatFileError> {
    let display = path.display().to_string();
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| MatFileError::Io {
            path: display.clone(),
            reason: e.to_string(),
        })?;
    let mut cells: Vec<String> = Vec::with_capacity(matrix.cols());
    for i in 0..matrix.rows() {
        cells.clear();
        cells.extend(matrix.row(i).iter().map(|v| format!("{v}")));
        writer.write_record(&cells).map_err(|e| MatFileError::Io {
            path: display.clone(),
            reason: e.to_string(),
        })?;
    }
    writer.flush().map_err(|e| MatFileError::Io {
        path: display,
        reason: e.to_string(),
    })
}

/// Writes the binary xmat layout.
pub fn write_xmat(path: &Path, matrix: &Matrix) -> Result<(), MatFileError> {
    let mut bytes = Vec::with_capacity(XMAT_HEADER_LEN + matrix.data().len() * 8);
    bytes.extend_from_slice(&XMAT_MAGIC);
    bytes.extend_from_slice(&XMAT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(matrix.rows() as u64).to_le_bytes());
    bytes.extend_from_slice(&(matrix.cols() as u64).to_le_bytes());
    for v in matrix.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, bytes).map_err(|e| MatFileError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}
