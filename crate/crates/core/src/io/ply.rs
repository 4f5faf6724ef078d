//! Minimal PLY 1.0 reader/writer.
//!
//! Reads `ascii` and `binary_little_endian` files, extracting x/y/z from the
//! `vertex` element and skipping every other element and property (including
//! list properties). Writes a plain xyz vertex cloud in float32.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{Point3, PointCloud};

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
    fn parse(token: &str) -> Option<ScalarType> {
        Some(match token {
            "char" | "int8" => ScalarType::I8,
            "uchar" | "uint8" => ScalarType::U8,
            "short" | "int16" => ScalarType::I16,
            "ushort" | "uint16" => ScalarType::U16,
            "int" | "int32" => ScalarType::I32,
            "uint" | "uint32" => ScalarType::U32,
            "float" | "float32" => ScalarType::F32,
            "double" | "float64" => ScalarType::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            ScalarType::I8 | ScalarType::U8 => 1,
            ScalarType::I16 | ScalarType::U16 => 2,
            ScalarType::I32 | ScalarType::U32 | ScalarType::F32 => 4,
            ScalarType::F64 => 8,
        }
    }

    fn is_integer(self) -> bool {
        !matches!(self, ScalarType::F32 | ScalarType::F64)
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { ty: ScalarType, name: String },
    List { count: ScalarType, item: ScalarType },
}

#[derive(Debug, Clone)]
struct ElementDecl {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Encoding {
    Ascii,
    BinaryLittleEndian,
}

pub(crate) struct PlyCloud {
    pub points: Vec<Point3>,
    pub dropped_non_finite: usize,
}

fn parse_err(path: &Path, offset: usize, detail: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        offset: offset as u64,
        detail: detail.into(),
    }
}

/// Reads header lines while tracking byte offsets.
struct LineReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> LineReader<'a> {
    fn next_line(&mut self) -> Option<(usize, &'a str)> {
        if self.pos >= self.bytes.len() {
            return None;
        }
        let start = self.pos;
        let rest = &self.bytes[start..];
        let end = rest.iter().position(|&b| b == b'\n');
        let (line_bytes, consumed) = match end {
            Some(i) => (&rest[..i], i + 1),
            None => (rest, rest.len()),
        };
        self.pos += consumed;
        let line = std::str::from_utf8(line_bytes).ok()?;
        Some((start, line.trim_end_matches('\r')))
    }
}

pub(crate) fn parse_ply(bytes: &[u8], path: &Path) -> Result<PlyCloud> {
    let mut reader = LineReader { bytes, pos: 0 };

    let (off, magic) = reader
        .next_line()
        .ok_or_else(|| parse_err(path, 0, "empty file"))?;
    if magic.trim() != "ply" {
        return Err(parse_err(path, off, "missing `ply` magic line"));
    }

    let mut encoding: Option<Encoding> = None;
    let mut elements: Vec<ElementDecl> = Vec::new();
    let data_start;
    loop {
        let (off, line) = reader
            .next_line()
            .ok_or_else(|| parse_err(path, bytes.len(), "header ended without `end_header`"))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with("comment") || line.starts_with("obj_info") {
            continue;
        }
        if line == "end_header" {
            data_start = reader.pos;
            break;
        }
        let mut tokens = line.split_ascii_whitespace();
        match tokens.next() {
            Some("format") => {
                let enc = tokens.next().unwrap_or("");
                let version = tokens.next().unwrap_or("");
                if version != "1.0" {
                    return Err(parse_err(
                        path,
                        off,
                        format!("unsupported PLY version `{version}`"),
                    ));
                }
                encoding = Some(match enc {
                    "ascii" => Encoding::Ascii,
                    "binary_little_endian" => Encoding::BinaryLittleEndian,
                    other => {
                        return Err(parse_err(
                            path,
                            off,
                            format!("unsupported PLY encoding `{other}`"),
                        ))
                    }
                });
            }
            Some("element") => {
                let name = tokens
                    .next()
                    .ok_or_else(|| parse_err(path, off, "element line missing name"))?;
                let count: usize = tokens
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| parse_err(path, off, "element line missing a valid count"))?;
                elements.push(ElementDecl {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(path, off, "property declared before any element"))?;
                let kind = tokens
                    .next()
                    .ok_or_else(|| parse_err(path, off, "property line missing type"))?;
                if kind == "list" {
                    let count_ty = tokens.next().and_then(ScalarType::parse).ok_or_else(|| {
                        parse_err(path, off, "list property missing count type")
                    })?;
                    if !count_ty.is_integer() {
                        return Err(parse_err(path, off, "list count type must be an integer"));
                    }
                    let item_ty = tokens
                        .next()
                        .and_then(ScalarType::parse)
                        .ok_or_else(|| parse_err(path, off, "list property missing item type"))?;
                    element.properties.push(Property::List {
                        count: count_ty,
                        item: item_ty,
                    });
                } else {
                    let ty = ScalarType::parse(kind).ok_or_else(|| {
                        parse_err(path, off, format!("unknown property type `{kind}`"))
                    })?;
                    let name = tokens
                        .next()
                        .ok_or_else(|| parse_err(path, off, "property line missing name"))?;
                    element.properties.push(Property::Scalar {
                        ty,
                        name: name.to_string(),
                    });
                }
            }
            Some(other) => {
                return Err(parse_err(
                    path,
                    off,
                    format!("unexpected header keyword `{other}`"),
                ));
            }
            None => {}
        }
    }

    let encoding =
        encoding.ok_or_else(|| parse_err(path, data_start, "header missing `format` line"))?;

    // Locate the vertex element and its coordinate columns.
    let vertex_idx = elements.iter().position(|e| e.name == "vertex");
    let mut xyz_cols: [Option<(usize, ScalarType)>; 3] = [None, None, None];
    if let Some(vi) = vertex_idx {
        for (pi, prop) in elements[vi].properties.iter().enumerate() {
            if let Property::Scalar { ty, name } = prop {
                let slot = match name.as_str() {
                    "x" => 0,
                    "y" => 1,
                    "z" => 2,
                    _ => continue,
                };
                if !matches!(ty, ScalarType::F32 | ScalarType::F64) {
                    return Err(parse_err(
                        path,
                        data_start,
                        format!("vertex coordinate `{name}` must be float or double"),
                    ));
                }
                xyz_cols[slot] = Some((pi, *ty));
            }
        }
    }
    let vi = vertex_idx
        .ok_or_else(|| parse_err(path, data_start, "file declares no `vertex` element"))?;
    if xyz_cols.iter().any(|c| c.is_none()) {
        return Err(parse_err(
            path,
            data_start,
            "vertex element must declare float/double x, y, z",
        ));
    }

    match encoding {
        Encoding::Ascii => parse_ascii_body(bytes, data_start, &elements, vi, &xyz_cols, path),
        Encoding::BinaryLittleEndian => {
            parse_binary_body(bytes, data_start, &elements, vi, &xyz_cols, path)
        }
    }
}

/// Whitespace tokenizer that remembers byte offsets for error reporting.
struct Tokens<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn next_token(&mut self) -> Option<(usize, &'a str)> {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos >= self.bytes.len() {
            return None;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .map(|t| (start, t))
    }
}

fn parse_ascii_body(
    bytes: &[u8],
    data_start: usize,
    elements: &[ElementDecl],
    vertex_idx: usize,
    xyz_cols: &[Option<(usize, ScalarType)>; 3],
    path: &Path,
) -> Result<PlyCloud> {
    let mut tokens = Tokens {
        bytes,
        pos: data_start,
    };
    let mut points = Vec::new();
    let mut dropped = 0usize;

    for (ei, element) in elements.iter().enumerate() {
        for _row in 0..element.count {
            let mut coords = [0.0f64; 3];
            for (pi, prop) in element.properties.iter().enumerate() {
                match prop {
                    Property::Scalar { .. } => {
                        let (off, tok) = tokens.next_token().ok_or_else(|| {
                            parse_err(path, bytes.len(), "unexpected end of ascii data")
                        })?;
                        if ei == vertex_idx {
                            for (slot, col) in xyz_cols.iter().enumerate() {
                                if col.map(|(idx, _)| idx) == Some(pi) {
                                    coords[slot] = tok.parse::<f64>().map_err(|_| {
                                        parse_err(
                                            path,
                                            off,
                                            format!("invalid vertex coordinate `{tok}`"),
                                        )
                                    })?;
                                }
                            }
                        }
                    }
                    Property::List { .. } => {
                        let (off, tok) = tokens.next_token().ok_or_else(|| {
                            parse_err(path, bytes.len(), "unexpected end of ascii data")
                        })?;
                        let n: usize = tok.parse().map_err(|_| {
                            parse_err(path, off, format!("invalid list count `{tok}`"))
                        })?;
                        for _ in 0..n {
                            tokens.next_token().ok_or_else(|| {
                                parse_err(path, bytes.len(), "unexpected end of ascii data")
                            })?;
                        }
                    }
                }
            }
            if ei == vertex_idx {
                if coords.iter().all(|c| c.is_finite()) {
                    points.push(Point3::new(coords[0], coords[1], coords[2]));
                } else {
                    dropped += 1;
                }
            }
        }
    }
    Ok(PlyCloud {
        points,
        dropped_non_finite: dropped,
    })
}

fn read_scalar(bytes: &[u8], pos: &mut usize, ty: ScalarType, path: &Path) -> Result<f64> {
    let size = ty.size();
    if *pos + size > bytes.len() {
        return Err(parse_err(
            path,
            bytes.len(),
            format!("unexpected end of binary data (needed {size} bytes at offset {pos})"),
        ));
    }
    let raw = &bytes[*pos..*pos + size];
    *pos += size;
    Ok(match ty {
        ScalarType::I8 => raw[0] as i8 as f64,
        ScalarType::U8 => raw[0] as f64,
        ScalarType::I16 => i16::from_le_bytes([raw[0], raw[1]]) as f64,
        ScalarType::U16 => u16::from_le_bytes([raw[0], raw[1]]) as f64,
        ScalarType::I32 => i32::from_le_bytes([raw[0], raw[1], raw[2], raw[3]]) as f64,
        ScalarType::U32 => u32::from_le_bytes([raw[0], raw[1], raw[2], raw[3]]) as f64,
        ScalarType::F32 => f32::from_le_bytes([raw[0], raw[1], raw[2], raw[3]]) as f64,
        ScalarType::F64 => f64::from_le_bytes([
            raw[0], raw[1], raw[2], raw[3], raw[4], raw[5], raw[6], raw[7],
        ]),
    })
}

fn skip_bytes(bytes: &[u8], pos: &mut usize, n: usize, path: &Path) -> Result<()> {
    if *pos + n > bytes.len() {
        return Err(parse_err(
            path,
            bytes.len(),
            format!("unexpected end of binary data (needed {n} bytes at offset {pos})"),
        ));
    }
    *pos += n;
    Ok(())
}

fn parse_binary_body(
    bytes: &[u8],
    data_start: usize,
    elements: &[ElementDecl],
    vertex_idx: usize,
    xyz_cols: &[Option<(usize, ScalarType)>; 3],
    path: &Path,
) -> Result<PlyCloud> {
    let mut pos = data_start;
    let mut points = Vec::new();
    let mut dropped = 0usize;

    for (ei, element) in elements.iter().enumerate() {
        for _row in 0..element.count {
            let mut coords = [0.0f64; 3];
            for (pi, prop) in element.properties.iter().enumerate() {
                match prop {
                    Property::Scalar { ty, .. } => {
                        let is_coord = ei == vertex_idx
                            && xyz_cols.iter().any(|c| c.map(|(idx, _)| idx) == Some(pi));
                        if is_coord {
                            let value = read_scalar(bytes, &mut pos, *ty, path)?;
                            for (slot, col) in xyz_cols.iter().enumerate() {
                                if col.map(|(idx, _)| idx) == Some(pi) {
                                    coords[slot] = value;
                                }
                            }
                        } else {
                            skip_bytes(bytes, &mut pos, ty.size(), path)?;
                        }
                    }
                    Property::List { count, item } => {
                        let n = read_scalar(bytes, &mut pos, *count, path)?;
                        if n < 0.0 {
                            return Err(parse_err(path, pos, "negative list count"));
                        }
                        skip_bytes(bytes, &mut pos, n as usize * item.size(), path)?;
                    }
                }
            }
            if ei == vertex_idx {
                if coords.iter().all(|c| c.is_finite()) {
                    points.push(Point3::new(coords[0], coords[1], coords[2]));
                } else {
                    dropped += 1;
                }
            }
        }
    }
    Ok(PlyCloud {
        points,
        dropped_non_finite: dropped,
    })
}

pub(crate) fn write_ply(cloud: &PointCloud, path: &Path, ascii: bool) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = Vec::with_capacity(128 + cloud.len() * 13);
    let format = if ascii { "ascii" } else { "binary_little_endian" };
    write!(
        out,
        "ply\nformat {format} 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\nend_header\n",
        cloud.len()
    )
    .expect("writing to a Vec cannot fail");
    for p in &cloud.points {
        let (x, y, z) = (p.x as f32, p.y as f32, p.z as f32);
        if ascii {
            writeln!(out, "{x} {y} {z}").expect("writing to a Vec cannot fail");
        } else {
            out.extend_from_slice(&x.to_le_bytes());
            out.extend_from_slice(&y.to_le_bytes());
            out.extend_from_slice(&z.to_le_bytes());
        }
    }
    std::fs::write(path, out).map_err(io_err)
}
