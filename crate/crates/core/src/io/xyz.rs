//! Plain-text XYZ reader and writer.
//!
//! One point per line: `x y z`, whitespace-separated. Lines starting with
//! `#` and blank lines are ignored. Extra trailing fields (colors, normals)
//! are tolerated on read and dropped; the writer always emits exactly three
//! fields using shortest-round-trip formatting.

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

fn parse_field(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>().map_err(|_| Error::XyzParse {
        line,
        msg: format!("expected a number, found '{tok}'"),
    })
}

/// Parses an XYZ file from raw bytes.
pub fn read_xyz(data: &[u8]) -> Result<PointCloud> {
    let text = std::str::from_utf8(data).map_err(|_| Error::XyzParse {
        line: 0,
        msg: "file is not valid UTF-8".to_string(),
    })?;
    let mut points = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let mut coords = [0.0f64; 3];
        for (axis, coord) in coords.iter_mut().enumerate() {
            let tok = fields.next().ok_or_else(|| Error::XyzParse {
                line: line_no,
                msg: format!("expected 3 coordinates, found {axis}"),
            })?;
            *coord = parse_field(tok, line_no)?;
        }
        if !coords.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite {
                index: points.len(),
            });
        }
        points.push(coords);
    }
    PointCloud::new(points)
}

/// Serializes a cloud as XYZ text.
pub fn write_xyz(cloud: &PointCloud) -> Result<Vec<u8>> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let mut out = Vec::with_capacity(cloud.len() * 40);
    for p in cloud.points() {
        out.extend_from_slice(format!("{} {} {}\n", p[0], p[1], p[2]).as_bytes());
    }
    Ok(out)
}
