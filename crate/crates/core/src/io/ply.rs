//! PLY reader and writer.
//!
//! Reads ASCII and binary little-endian PLY files, extracting `x`, `y`, `z`
//! (and an optional integer `frame` property) from the `vertex` element.
//! All other elements and properties are parsed past and dropped: this crate
//! processes geometry only. Big-endian files are rejected with a clear error.
//!
//! The writer emits `double` coordinates so that binary round-trips are
//! bit-identical and ASCII round-trips are exact under shortest-round-trip
//! formatting.

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Scalar types a PLY property can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(s: &str) -> Option<ScalarType> {
        match s {
            "char" | "int8" => Some(ScalarType::I8),
            "uchar" | "uint8" => Some(ScalarType::U8),
            "short" | "int16" => Some(ScalarType::I16),
            "ushort" | "uint16" => Some(ScalarType::U16),
            "int" | "int32" => Some(ScalarType::I32),
            "uint" | "uint32" => Some(ScalarType::U32),
            "float" | "float32" => Some(ScalarType::F32),
            "double" | "float64" => Some(ScalarType::F64),
            _ => None,
        }
    }

    fn size(self) -> usize {
        match self {
            ScalarType::I8 | ScalarType::U8 => 1,
            ScalarType::I16 | ScalarType::U16 => 2,
            ScalarType::I32 | ScalarType::U32 | ScalarType::F32 => 4,
            ScalarType::F64 => 8,
        }
    }

    fn is_float(self) -> bool {
        matches!(self, ScalarType::F32 | ScalarType::F64)
    }

    fn is_integer(self) -> bool {
        !self.is_float()
    }

    /// Decodes one little-endian value as f64 (integers convert exactly
    /// within f64's 53-bit mantissa, which covers every PLY integer type).
    fn decode_le(self, bytes: &[u8]) -> f64 {
        match self {
            ScalarType::I8 => bytes[0] as i8 as f64,
            ScalarType::U8 => bytes[0] as f64,
            ScalarType::I16 => i16::from_le_bytes([bytes[0], bytes[1]]) as f64,
            ScalarType::U16 => u16::from_le_bytes([bytes[0], bytes[1]]) as f64,
            ScalarType::I32 => i32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as f64,
            ScalarType::U32 => u32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as f64,
            ScalarType::F32 => f32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as f64,
            ScalarType::F64 => f64::from_le_bytes([
                bytes[0], bytes[1], bytes[2], bytes[3], bytes[4], bytes[5], bytes[6], bytes[7],
            ]),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum PropertyKind {
    Scalar(ScalarType),
    List { count: ScalarType, item: ScalarType },
}

#[derive(Debug)]
struct Property {
    name: String,
    kind: PropertyKind,
}

#[derive(Debug)]
struct ElementDecl {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BodyFormat {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug)]
struct Header {
    format: BodyFormat,
    elements: Vec<ElementDecl>,
    /// Number of header lines consumed, including `end_header`.
    lines: usize,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::PlyParse {
        line,
        msg: msg.into(),
    }
}

/// Splits `data` into header and body at the line after `end_header`.
fn split_header(data: &[u8]) -> Result<(&str, &[u8])> {
    // The header is ASCII by definition; scan line by line for end_header.
    let mut pos = 0;
    let mut line_no = 0;
    while pos < data.len() {
        let end = data[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|i| pos + i + 1)
            .unwrap_or(data.len());
        line_no += 1;
        let line = &data[pos..end];
        let trimmed = std::str::from_utf8(line)
            .map_err(|_| parse_err(line_no, "header is not valid UTF-8"))?
            .trim();
        if trimmed == "end_header" {
            let header = std::str::from_utf8(&data[..end])
                .map_err(|_| parse_err(line_no, "header is not valid UTF-8"))?;
            return Ok((header, &data[end..]));
        }
        pos = end;
    }
    Err(parse_err(line_no, "missing end_header"))
}

fn parse_header(text: &str) -> Result<Header> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));

    let (line_no, magic) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    if magic != "ply" {
        return Err(parse_err(line_no, "missing 'ply' magic line"));
    }

    let mut format = None;
    let mut elements: Vec<ElementDecl> = Vec::new();
    let mut total_lines = 1;

    for (line_no, line) in lines {
        total_lines = line_no;
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let keyword = parts.next().unwrap_or("");
        match keyword {
            "comment" | "obj_info" => {}
            "format" => {
                let kind = parts.next().unwrap_or("");
                format = Some(match kind {
                    "ascii" => BodyFormat::Ascii,
                    "binary_little_endian" => BodyFormat::BinaryLittleEndian,
                    "binary_big_endian" => {
                        return Err(parse_err(
                            line_no,
                            "big-endian PLY is not supported (use ascii or binary_little_endian)",
                        ))
                    }
                    other => return Err(parse_err(line_no, format!("unknown format '{other}'"))),
                });
            }
            "element" => {
                let name = parts
                    .next()
                    .ok_or_else(|| parse_err(line_no, "element without a name"))?;
                let count: usize = parts
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| parse_err(line_no, "element without a valid count"))?;
                elements.push(ElementDecl {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            "property" => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(line_no, "property before any element"))?;
                let first = parts
                    .next()
                    .ok_or_else(|| parse_err(line_no, "property without a type"))?;
                let kind = if first == "list" {
                    let count_ty = parts
                        .next()
                        .and_then(ScalarType::parse)
                        .ok_or_else(|| parse_err(line_no, "list property needs a count type"))?;
                    if !count_ty.is_integer() {
                        return Err(parse_err(line_no, "list count type must be an integer"));
                    }
                    let item_ty = parts
                        .next()
                        .and_then(ScalarType::parse)
                        .ok_or_else(|| parse_err(line_no, "list property needs an item type"))?;
                    PropertyKind::List {
                        count: count_ty,
                        item: item_ty,
                    }
                } else {
                    PropertyKind::Scalar(ScalarType::parse(first).ok_or_else(|| {
                        parse_err(line_no, format!("unknown property type '{first}'"))
                    })?)
                };
                let name = parts
                    .next()
                    .ok_or_else(|| parse_err(line_no, "property without a name"))?;
                element.properties.push(Property {
                    name: name.to_string(),
                    kind,
                });
            }
            "end_header" => break,
            other => {
                return Err(parse_err(
                    line_no,
                    format!("unknown header keyword '{other}'"),
                ));
            }
        }
    }

    let format = format.ok_or_else(|| parse_err(total_lines, "header has no format line"))?;
    Ok(Header {
        format,
        elements,
        lines: total_lines,
    })
}

/// Column layout of the vertex element: property indices for x, y, z, frame.
struct VertexLayout {
    x: usize,
    y: usize,
    z: usize,
    frame: Option<usize>,
}

impl VertexLayout {
    fn resolve(element: &ElementDecl, header_lines: usize) -> Result<VertexLayout> {
        let find_float = |name: &str| -> Result<usize> {
            match element.properties.iter().position(|p| p.name == name) {
                Some(idx) => match element.properties[idx].kind {
                    PropertyKind::Scalar(t) if t.is_float() => Ok(idx),
                    _ => Err(parse_err(
                        header_lines,
                        format!("vertex property '{name}' must be a float or double scalar"),
                    )),
                },
                None => Err(parse_err(
                    header_lines,
                    format!("vertex element lacks property '{name}'"),
                )),
            }
        };
        let x = find_float("x")?;
        let y = find_float("y")?;
        let z = find_float("z")?;
        let frame = match element.properties.iter().position(|p| p.name == "frame") {
            Some(idx) => match element.properties[idx].kind {
                PropertyKind::Scalar(t) if t.is_integer() => Some(idx),
                _ => {
                    return Err(parse_err(
                        header_lines,
                        "vertex property 'frame' must be an integer scalar",
                    ))
                }
            },
            None => None,
        };
        Ok(VertexLayout { x, y, z, frame })
    }
}

/// Whitespace tokenizer over the ASCII body that tracks line numbers for
/// error reporting. Records are *not* assumed to align with lines.
struct Tokens<'a> {
    bytes: &'a [u8],
    pos: usize,
    line: usize,
}

impl<'a> Tokens<'a> {
    fn new(bytes: &'a [u8], first_line: usize) -> Self {
        Tokens {
            bytes,
            pos: 0,
            line: first_line,
        }
    }

    fn next(&mut self) -> Result<&'a str> {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            if self.bytes[self.pos] == b'\n' {
                self.line += 1;
            }
            self.pos += 1;
        }
        if self.pos >= self.bytes.len() {
            return Err(parse_err(self.line, "unexpected end of file"));
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| parse_err(self.line, "body is not valid UTF-8"))
    }

    fn next_f64(&mut self) -> Result<f64> {
        let tok = self.next()?;
        let line = self.line;
        tok.parse::<f64>()
            .map_err(|_| parse_err(line, format!("expected a number, found '{tok}'")))
    }

    fn next_count(&mut self) -> Result<usize> {
        let tok = self.next()?;
        let line = self.line;
        tok.parse::<usize>()
            .map_err(|_| parse_err(line, format!("expected a list count, found '{tok}'")))
    }
}

fn read_ascii_body(header: &Header, body: &[u8]) -> Result<PointCloud> {
    let mut tokens = Tokens::new(body, header.lines + 1);
    let mut points = Vec::new();
    let mut frames: Option<Vec<u32>> = None;

    for element in &header.elements {
        let layout = if element.name == "vertex" {
            let l = VertexLayout::resolve(element, header.lines)?;
            points.reserve(element.count);
            if l.frame.is_some() {
                frames = Some(Vec::with_capacity(element.count));
            }
            Some(l)
        } else {
            None
        };

        for record in 0..element.count {
            let mut coords = [0.0f64; 3];
            let mut frame_val = 0.0f64;
            for (pi, property) in element.properties.iter().enumerate() {
                match property.kind {
                    PropertyKind::Scalar(_) => {
                        let v = tokens.next_f64()?;
                        if let Some(l) = &layout {
                            if pi == l.x {
                                coords[0] = v;
                            } else if pi == l.y {
                                coords[1] = v;
                            } else if pi == l.z {
                                coords[2] = v;
                            } else if l.frame == Some(pi) {
                                frame_val = v;
                            }
                        }
                    }
                    PropertyKind::List { .. } => {
                        let n = tokens.next_count()?;
                        for _ in 0..n {
                            tokens.next_f64()?;
                        }
                    }
                }
            }
            if let Some(l) = &layout {
                push_vertex(&mut points, &mut frames, coords, frame_val, record, l)?;
            }
        }
    }

    finish_cloud(points, frames, &header.elements)
}

fn read_binary_body(header: &Header, body: &[u8]) -> Result<PointCloud> {
    let mut pos = 0usize;
    let mut points = Vec::new();
    let mut frames: Option<Vec<u32>> = None;
    let err_line = header.lines; // binary offsets do not map to lines

    let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
        if *pos + n > body.len() {
            return Err(parse_err(err_line, "unexpected end of binary data"));
        }
        let slice = &body[*pos..*pos + n];
        *pos += n;
        Ok(slice)
    };

    for element in &header.elements {
        let layout = if element.name == "vertex" {
            let l = VertexLayout::resolve(element, header.lines)?;
            points.reserve(element.count);
            if l.frame.is_some() {
                frames = Some(Vec::with_capacity(element.count));
            }
            Some(l)
        } else {
            None
        };

        for record in 0..element.count {
            let mut coords = [0.0f64; 3];
            let mut frame_val = 0.0f64;
            for (pi, property) in element.properties.iter().enumerate() {
                match property.kind {
                    PropertyKind::Scalar(t) => {
                        let raw = take(&mut pos, t.size())?;
                        if let Some(l) = &layout {
                            if pi == l.x || pi == l.y || pi == l.z || l.frame == Some(pi) {
                                let v = t.decode_le(raw);
                                if pi == l.x {
                                    coords[0] = v;
                                } else if pi == l.y {
                                    coords[1] = v;
                                } else if pi == l.z {
                                    coords[2] = v;
                                } else {
                                    frame_val = v;
                                }
                            }
                        }
                    }
                    PropertyKind::List { count, item } => {
                        let raw = take(&mut pos, count.size())?;
                        let n = count.decode_le(raw);
                        if n < 0.0 {
                            return Err(parse_err(err_line, "negative list count"));
                        }
                        take(&mut pos, item.size() * n as usize)?;
                    }
                }
            }
            if let Some(l) = &layout {
                push_vertex(&mut points, &mut frames, coords, frame_val, record, l)?;
            }
        }
    }

    finish_cloud(points, frames, &header.elements)
}

fn push_vertex(
    points: &mut Vec<[f64; 3]>,
    frames: &mut Option<Vec<u32>>,
    coords: [f64; 3],
    frame_val: f64,
    record: usize,
    layout: &VertexLayout,
) -> Result<()> {
    if !coords.iter().all(|c| c.is_finite()) {
        return Err(Error::NonFinite { index: record });
    }
    points.push(coords);
    if layout.frame.is_some() {
        if frame_val < 0.0 || frame_val > u32::MAX as f64 {
            return Err(Error::invalid(format!(
                "vertex {record}: frame index {frame_val} out of range"
            )));
        }
        frames.as_mut().unwrap().push(frame_val as u32);
    }
    Ok(())
}

fn finish_cloud(
    points: Vec<[f64; 3]>,
    frames: Option<Vec<u32>>,
    elements: &[ElementDecl],
) -> Result<PointCloud> {
    if !elements.iter().any(|e| e.name == "vertex") {
        return Err(parse_err(0, "file has no vertex element"));
    }
    match frames {
        Some(f) => PointCloud::with_frames(points, f),
        None => PointCloud::new(points),
    }
}

/// Parses a PLY file from raw bytes.
pub fn read_ply(data: &[u8]) -> Result<PointCloud> {
    let (header_text, body) = split_header(data)?;
    let header = parse_header(header_text)?;
    match header.format {
        BodyFormat::Ascii => read_ascii_body(&header, body),
        BodyFormat::BinaryLittleEndian => read_binary_body(&header, body),
    }
}

fn write_header(out: &mut Vec<u8>, cloud: &PointCloud, binary: bool) {
    out.extend_from_slice(b"ply\n");
    if binary {
        out.extend_from_slice(b"format binary_little_endian 1.0\n");
    } else {
        out.extend_from_slice(b"format ascii 1.0\n");
    }
    out.extend_from_slice(b"comment exported by pcdenoise\n");
    out.extend_from_slice(format!("element vertex {}\n", cloud.len()).as_bytes());
    out.extend_from_slice(b"property double x\n");
    out.extend_from_slice(b"property double y\n");
    out.extend_from_slice(b"property double z\n");
    if cloud.frame_ids().is_some() {
        out.extend_from_slice(b"property uint frame\n");
    }
    out.extend_from_slice(b"end_header\n");
}

/// Serializes a cloud as PLY. Coordinates are written as `double`; ASCII uses
/// shortest-round-trip formatting so read-back is exact.
pub fn write_ply(cloud: &PointCloud, binary: bool) -> Result<Vec<u8>> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let mut out = Vec::with_capacity(128 + cloud.len() * if binary { 28 } else { 48 });
    write_header(&mut out, cloud, binary);
    let frames = cloud.frame_ids();
    for (i, p) in cloud.points().iter().enumerate() {
        if binary {
            out.extend_from_slice(&p[0].to_le_bytes());
            out.extend_from_slice(&p[1].to_le_bytes());
            out.extend_from_slice(&p[2].to_le_bytes());
            if let Some(f) = frames {
                out.extend_from_slice(&f[i].to_le_bytes());
            }
        } else {
            match frames {
                Some(f) => out
                    .extend_from_slice(format!("{} {} {} {}\n", p[0], p[1], p[2], f[i]).as_bytes()),
                None => out.extend_from_slice(format!("{} {} {}\n", p[0], p[1], p[2]).as_bytes()),
            }
        }
    }
    Ok(out)
}
