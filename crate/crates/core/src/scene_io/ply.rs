//! Minimal PLY container reader/writer: ASCII and binary little/big endian,
//! scalar and list properties.

use std::io::Write;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
    BinaryBigEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarType {
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
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }

    pub fn byte_size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn read(self, bytes: &[u8], big_endian: bool) -> f64 {
        macro_rules! rd {
            ($t:ty, $n:expr) => {{
                let mut a = [0u8; $n];
                a.copy_from_slice(&bytes[..$n]);
                if big_endian {
                    <$t>::from_be_bytes(a) as f64
                } else {
                    <$t>::from_le_bytes(a) as f64
                }
            }};
        }
        match self {
            Self::I8 => bytes[0] as i8 as f64,
            Self::U8 => bytes[0] as f64,
            Self::I16 => rd!(i16, 2),
            Self::U16 => rd!(u16, 2),
            Self::I32 => rd!(i32, 4),
            Self::U32 => rd!(u32, 4),
            Self::F32 => rd!(f32, 4),
            Self::F64 => rd!(f64, 8),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropertyKind {
    Scalar(ScalarType),
    List { count: ScalarType, item: ScalarType },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Property {
    pub name: String,
    pub kind: PropertyKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Element {
    pub name: String,
    pub count: usize,
    pub properties: Vec<Property>,
}

impl Element {
    pub fn property_index(&self, name: &str) -> Option<usize> {
        self.properties.iter().position(|p| p.name == name)
    }
}

#[derive(Debug, Clone)]
pub struct Header {
    pub format: PlyFormat,
    pub elements: Vec<Element>,
}

impl Header {
    pub fn element(&self, name: &str) -> Option<&Element> {
        self.elements.iter().find(|e| e.name == name)
    }
}

/// One decoded element row: scalar values and list values in property order.
/// A list property stores its items in `lists` and `NaN` in `values`.
#[derive(Debug, Default)]
pub struct Row {
    pub values: Vec<f64>,
    pub lists: Vec<Vec<f64>>,
}

/// Streaming reader over an in-memory PLY file.
pub struct PlyReader<'a> {
    context: String,
    pub header: Header,
    data: &'a [u8],
    offset: usize,
    ascii_line: usize,
    next_element: usize,
}

impl<'a> PlyReader<'a> {
    pub fn new(data: &'a [u8], context: impl Into<String>) -> Result<Self> {
        let context = context.into();
        let (header, body_offset) = parse_header(data, &context)?;
        Ok(Self {
            context,
            header,
            data,
            offset: body_offset,
            ascii_line: 0,
            next_element: 0,
        })
    }

    fn err(&self, location: impl Into<String>, message: impl Into<String>) -> Error {
        Error::parse(self.context.clone(), location, message)
    }

    /// Decode the next element in file order, calling `f(row_index, row)` per row.
    pub fn read_next_element(
        &mut self,
        mut f: impl FnMut(usize, &Row) -> Result<()>,
    ) -> Result<&Element> {
        let idx = self.next_element;
        let element = self
            .header
            .elements
            .get(idx)
            .ok_or_else(|| self.err(format!("byte {}", self.offset), "no more elements"))?
            .clone();
        self.next_element += 1;
        let mut row = Row {
            values: vec![0.0; element.properties.len()],
            lists: vec![Vec::new(); element.properties.len()],
        };
        match self.header.format {
            PlyFormat::Ascii => {
                let text = std::str::from_utf8(&self.data[self.offset..])
                    .map_err(|_| self.err(format!("byte {}", self.offset), "ASCII body is not UTF-8"))?;
                let mut lines = text.split_inclusive('\n');
                let mut consumed = 0usize;
                let mut r = 0;
                while r < element.count {
                    let line = lines.next().ok_or_else(|| {
                        self.err(
                            format!("element '{}' row {r}", element.name),
                            "unexpected end of file",
                        )
                    })?;
                    consumed += line.len();
                    self.ascii_line += 1;
                    let trimmed = line.trim();
                    if trimmed.is_empty() {
                        continue;
                    }
                    let mut tokens = trimmed.split_whitespace();
                    for (pi, prop) in element.properties.iter().enumerate() {
                        let mut next = |what: &str| -> Result<f64> {
                            let tok = tokens.next().ok_or_else(|| {
                                self.err(
                                    format!("body line {}, property '{}'", self.ascii_line, prop.name),
                                    format!("missing {what}"),
                                )
                            })?;
                            tok.parse::<f64>().map_err(|_| {
                                self.err(
                                    format!("body line {}, property '{}'", self.ascii_line, prop.name),
                                    format!("cannot parse '{tok}'"),
                                )
                            })
                        };
                        match prop.kind {
                            PropertyKind::Scalar(_) => row.values[pi] = next("value")?,
                            PropertyKind::List { .. } => {
                                let n = next("list length")?;
                                row.values[pi] = f64::NAN;
                                row.lists[pi].clear();
                                for _ in 0..n as usize {
                                    let v = next("list item")?;
                                    row.lists[pi].push(v);
                                }
                            }
                        }
                    }
                    f(r, &row)?;
                    r += 1;
                }
                self.offset += consumed;
            }
            PlyFormat::BinaryLittleEndian | PlyFormat::BinaryBigEndian => {
                let be = self.header.format == PlyFormat::BinaryBigEndian;
                for r in 0..element.count {
                    for (pi, prop) in element.properties.iter().enumerate() {
                        match prop.kind {
                            PropertyKind::Scalar(t) => {
                                row.values[pi] = self.take(t, be, &element.name, r, &prop.name)?;
                            }
                            PropertyKind::List { count, item } => {
                                let n = self.take(count, be, &element.name, r, &prop.name)?;
                                row.values[pi] = f64::NAN;
                                row.lists[pi].clear();
                                for _ in 0..n as usize {
                                    let v = self.take(item, be, &element.name, r, &prop.name)?;
                                    row.lists[pi].push(v);
                                }
                            }
                        }
                    }
                    f(r, &row)?;
                }
            }
        }
        Ok(&self.header.elements[idx])
    }

    fn take(&mut self, t: ScalarType, be: bool, elem: &str, row: usize, prop: &str) -> Result<f64> {
        let n = t.byte_size();
        if self.offset + n > self.data.len() {
            return Err(self.err(
                format!("byte {} (element '{elem}' row {row}, property '{prop}')", self.offset),
                "unexpected end of file",
            ));
        }
        let v = t.read(&self.data[self.offset..], be);
        self.offset += n;
        Ok(v)
    }

    /// Byte offset of the first undecoded body byte.
    pub fn offset(&self) -> usize {
        self.offset
    }
}

fn parse_header(data: &[u8], context: &str) -> Result<(Header, usize)> {
    let perr = |loc: String, msg: &str| Error::parse(context, loc, msg);
    let mut offset = 0usize;
    let mut line_no = 0usize;
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    let next_line = |offset: &mut usize| -> Option<(usize, String)> {
        if *offset >= data.len() {
            return None;
        }
        let start = *offset;
        let end = data[start..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|p| start + p + 1)
            .unwrap_or(data.len());
        *offset = end;
        Some((start, String::from_utf8_lossy(&data[start..end]).trim().to_string()))
    };

    match next_line(&mut offset) {
        Some((_, l)) if l == "ply" => {}
        _ => return Err(perr("byte 0".into(), "missing 'ply' magic line")),
    }
    loop {
        line_no += 1;
        let (start, line) = next_line(&mut offset)
            .ok_or_else(|| perr(format!("header line {line_no}"), "header not terminated by end_header"))?;
        let loc = || format!("header line {line_no} (byte {start})");
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("format") => {
                format = Some(match tok.next() {
                    Some("ascii") => PlyFormat::Ascii,
                    Some("binary_little_endian") => PlyFormat::BinaryLittleEndian,
                    Some("binary_big_endian") => PlyFormat::BinaryBigEndian,
                    _ => return Err(perr(loc(), "unknown format")),
                });
            }
            Some("element") => {
                let name = tok.next().ok_or_else(|| perr(loc(), "element without name"))?;
                let count = tok
                    .next()
                    .and_then(|c| c.parse::<usize>().ok())
                    .ok_or_else(|| perr(loc(), "element count is not an integer"))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let elem = elements
                    .last_mut()
                    .ok_or_else(|| perr(loc(), "property before any element"))?;
                let t = tok.next().ok_or_else(|| perr(loc(), "property without type"))?;
                let kind = if t == "list" {
                    let count = tok.next().and_then(ScalarType::parse);
                    let item = tok.next().and_then(ScalarType::parse);
                    match (count, item) {
                        (Some(count), Some(item)) => PropertyKind::List { count, item },
                        _ => return Err(perr(loc(), "bad list property types")),
                    }
                } else {
                    PropertyKind::Scalar(
                        ScalarType::parse(t).ok_or_else(|| perr(loc(), "unknown property type"))?,
                    )
                };
                let name = tok.next().ok_or_else(|| perr(loc(), "property without name"))?;
                elem.properties.push(Property {
                    name: name.to_string(),
                    kind,
                });
            }
            Some("comment") | Some("obj_info") | None => {}
            Some("end_header") => break,
            Some(other) => {
                return Err(perr(loc(), &format!("unexpected header keyword '{other}'")));
            }
        }
    }
    let format = format.ok_or_else(|| perr("header".into(), "missing format line"))?;
    Ok((Header { format, elements }, offset))
}

/// Binary little-endian writer for float and list properties.
pub struct PlyWriter<W: Write> {
    out: W,
}

impl<W: Write> PlyWriter<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn header(&mut self, format: PlyFormat, elements: &[Element]) -> std::io::Result<()> {
        let fmt = match format {
            PlyFormat::Ascii => "ascii",
            PlyFormat::BinaryLittleEndian => "binary_little_endian",
            PlyFormat::BinaryBigEndian => "binary_big_endian",
        };
        writeln!(self.out, "ply")?;
        writeln!(self.out, "format {fmt} 1.0")?;
        for e in elements {
            writeln!(self.out, "element {} {}", e.name, e.count)?;
            for p in &e.properties {
                match &p.kind {
                    PropertyKind::Scalar(t) => writeln!(self.out, "property {} {}", type_name(*t), p.name)?,
                    PropertyKind::List { count, item } => writeln!(
                        self.out,
                        "property list {} {} {}",
                        type_name(*count),
                        type_name(*item),
                        p.name
                    )?,
                }
            }
        }
        writeln!(self.out, "end_header")
    }

    pub fn f32_le(&mut self, v: f32) -> std::io::Result<()> {
        self.out.write_all(&v.to_le_bytes())
    }

    pub fn raw(&mut self, bytes: &[u8]) -> std::io::Result<()> {
        self.out.write_all(bytes)
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

fn type_name(t: ScalarType) -> &'static str {
    match t {
        ScalarType::I8 => "char",
        ScalarType::U8 => "uchar",
        ScalarType::I16 => "short",
        ScalarType::U16 => "ushort",
        ScalarType::I32 => "int",
        ScalarType::U32 => "uint",
        ScalarType::F32 => "float",
        ScalarType::F64 => "double",
    }
}
