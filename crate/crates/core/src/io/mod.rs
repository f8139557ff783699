//! Point cloud file I/O.
//!
//! Two formats are supported: PLY (ASCII and binary little-endian) and plain
//! XYZ text. [`read_cloud`] / [`write_cloud`] dispatch on an explicit
//! [`CloudFormat`] or infer it from the file extension.

use std::path::Path;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

pub mod ply;
pub mod xyz;

pub use ply::{read_ply, write_ply};
pub use xyz::{read_xyz, write_xyz};

/// On-disk cloud encodings.
///
/// For reading, `PlyAscii` and `PlyBinary` are interchangeable: the PLY
/// header decides. For writing they select the encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    PlyAscii,
    PlyBinary,
    Xyz,
}

impl CloudFormat {
    /// Infers a format from a file extension (`.ply` ⇒ binary PLY, `.xyz` ⇒ XYZ).
    pub fn from_path(path: &Path) -> Result<CloudFormat> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        match ext.as_deref() {
            Some("ply") => Ok(CloudFormat::PlyBinary),
            Some("xyz") | Some("txt") => Ok(CloudFormat::Xyz),
            _ => Err(Error::UnknownFormat {
                path: path.to_path_buf(),
            }),
        }
    }

    /// Parses a format name, as used by CLI flags and config files.
    pub fn from_name(name: &str) -> Result<CloudFormat> {
        match name.to_ascii_lowercase().as_str() {
            "ply" | "ply-binary" | "ply_binary" => Ok(CloudFormat::PlyBinary),
            "ply-ascii" | "ply_ascii" => Ok(CloudFormat::PlyAscii),
            "xyz" => Ok(CloudFormat::Xyz),
            other => Err(Error::invalid(format!(
                "unknown cloud format '{other}' (expected ply, ply-ascii, ply-binary, or xyz)"
            ))),
        }
    }
}

impl std::fmt::Display for CloudFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CloudFormat::PlyAscii => write!(f, "ply-ascii"),
            CloudFormat::PlyBinary => write!(f, "ply-binary"),
            CloudFormat::Xyz => write!(f, "xyz"),
        }
    }
}

/// Reads a cloud from `path`. When `format` is `None` it is inferred from
/// the extension.
pub fn read_cloud(path: impl AsRef<Path>, format: Option<CloudFormat>) -> Result<PointCloud> {
    let path = path.as_ref();
    let format = match format {
        Some(f) => f,
        None => CloudFormat::from_path(path)?,
    };
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    match format {
        CloudFormat::PlyAscii | CloudFormat::PlyBinary => ply::read_ply(&data),
        CloudFormat::Xyz => xyz::read_xyz(&data),
    }
}

/// Writes a cloud to `path`. When `format` is `None` it is inferred from
/// the extension. Writing an empty cloud is an error.
pub fn write_cloud(
    cloud: &PointCloud,
    path: impl AsRef<Path>,
    format: Option<CloudFormat>,
) -> Result<()> {
    let path = path.as_ref();
    let format = match format {
        Some(f) => f,
        None => CloudFormat::from_path(path)?,
    };
    let bytes = match format {
        CloudFormat::PlyAscii => ply::write_ply(cloud, false)?,
        CloudFormat::PlyBinary => ply::write_ply(cloud, true)?,
        CloudFormat::Xyz => xyz::write_xyz(cloud)?,
    };
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
