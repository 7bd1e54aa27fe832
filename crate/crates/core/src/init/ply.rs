//! Minimal PLY reader/writer for colored point clouds.

use std::io::Write;
use std::path::Path;

use nalgebra::Vector3;
use thiserror::Error;

use crate::error::{Error, Result};

#[derive(Debug, Error)]
pub enum PlyError {
    #[error("malformed PLY header: {0}")]
    MalformedHeader(String),
    #[error("PLY vertex element lacks required property `{0}`")]
    MissingProperty(&'static str),
    #[error("PLY payload truncated: {0}")]
    Truncated(String),
    #[error("invalid PLY value: {0}")]
    InvalidValue(String),
}

/// Colored points with optional unit normals.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    pub positions: Vec<Vector3<f64>>,
    pub colors: Vec<[u8; 3]>,
    pub normals: Option<Vec<Vector3<f64>>>,
}

impl PointCloud {
    pub fn new(positions: Vec<Vector3<f64>>, colors: Vec<[u8; 3]>) -> Result<Self> {
        let pc = PointCloud {
            positions,
            colors,
            normals: None,
        };
        pc.validate()?;
        Ok(pc)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.positions.len();
        if n == 0 {
            return Err(PlyError::InvalidValue("point cloud is empty".into()).into());
        }
        if self.colors.len() != n {
            return Err(PlyError::InvalidValue(format!("{} colors for {n} points", self.colors.len())).into());
        }
        if self.positions.iter().any(|p| !p.iter().all(|v| v.is_finite())) {
            return Err(PlyError::InvalidValue("non-finite position".into()).into());
        }
        if let Some(normals) = &self.normals {
            if normals.len() != n {
                return Err(PlyError::InvalidValue(format!("{} normals for {n} points", normals.len())).into());
            }
            if let Some(i) = normals.iter().position(|v| (v.norm() - 1.0).abs() > 1e-6) {
                return Err(PlyError::InvalidValue(format!("normal {i} is not unit length")).into());
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Ascii,
    BinaryLe,
    BinaryBe,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(s: &str) -> Option<Scalar> {
        Some(match s {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn is_float(self) -> bool {
        matches!(self, Scalar::F32 | Scalar::F64)
    }

    fn decode(self, b: &[u8], fmt: Format) -> f64 {
        macro_rules! num {
            ($t:ty, $n:expr) => {{
                let mut a = [0u8; $n];
                a.copy_from_slice(&b[..$n]);
                if fmt == Format::BinaryBe {
                    <$t>::from_be_bytes(a) as f64
                } else {
                    <$t>::from_le_bytes(a) as f64
                }
            }};
        }
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => num!(i16, 2),
            Scalar::U16 => num!(u16, 2),
            Scalar::I32 => num!(i32, 4),
            Scalar::U32 => num!(u32, 4),
            Scalar::F32 => num!(f32, 4),
            Scalar::F64 => num!(f64, 8),
        }
    }
}

#[derive(Clone, Debug)]
enum Property {
    Scalar(String, Scalar),
    List(Scalar, Scalar),
}

#[derive(Clone, Debug)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

struct Header {
    format: Format,
    elements: Vec<Element>,
    body_offset: usize,
}

fn malformed(msg: impl Into<String>) -> PlyError {
    PlyError::MalformedHeader(msg.into())
}

fn parse_header(bytes: &[u8]) -> std::result::Result<Header, PlyError> {
    let mut pos = 0;
    let mut next_line = || -> std::result::Result<String, PlyError> {
        let rest = &bytes[pos..];
        let end = rest
            .iter()
            .position(|&c| c == b'\n')
            .ok_or_else(|| malformed("missing end_header"))?;
        pos += end + 1;
        let line = std::str::from_utf8(&rest[..end]).map_err(|_| malformed("header is not UTF-8"))?;
        Ok(line.trim_end_matches('\r').to_string())
    };

    if next_line()?.trim() != "ply" {
        return Err(malformed("missing `ply` magic"));
    }
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let line = next_line()?;
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.first().copied() {
            None | Some("comment") | Some("obj_info") => {}
            Some("format") => {
                if tok.len() != 3 {
                    return Err(malformed(format!("bad format line `{line}`")));
                }
                format = Some(match tok[1] {
                    "ascii" => Format::Ascii,
                    "binary_little_endian" => Format::BinaryLe,
                    "binary_big_endian" => Format::BinaryBe,
                    other => return Err(malformed(format!("unknown format `{other}`"))),
                });
            }
            Some("element") => {
                if tok.len() != 3 {
                    return Err(malformed(format!("bad element line `{line}`")));
                }
                let count = tok[2]
                    .parse()
                    .map_err(|_| malformed(format!("bad element count `{}`", tok[2])))?;
                elements.push(Element {
                    name: tok[1].to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| malformed("property before any element"))?;
                let bad = || malformed(format!("bad property line `{line}`"));
                if tok.get(1) == Some(&"list") {
                    if tok.len() != 5 {
                        return Err(bad());
                    }
                    let ct = Scalar::parse(tok[2]).ok_or_else(bad)?;
                    let it = Scalar::parse(tok[3]).ok_or_else(bad)?;
                    el.properties.push(Property::List(ct, it));
                } else {
                    if tok.len() != 3 {
                        return Err(bad());
                    }
                    let t = Scalar::parse(tok[1]).ok_or_else(bad)?;
                    el.properties.push(Property::Scalar(tok[2].to_string(), t));
                }
            }
            Some("end_header") => break,
            Some(other) => return Err(malformed(format!("unexpected keyword `{other}`"))),
        }
    }
    let format = format.ok_or_else(|| malformed("missing format line"))?;
    Ok(Header {
        format,
        elements,
        body_offset: pos,
    })
}

/// Values of one element instance, by scalar property position.
struct RowReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    format: Format,
    tokens: std::str::SplitAsciiWhitespace<'a>,
}

impl<'a> RowReader<'a> {
    fn value(&mut self, t: Scalar) -> std::result::Result<f64, PlyError> {
        match self.format {
            Format::Ascii => {
                let tok = self
                    .tokens
                    .next()
                    .ok_or_else(|| PlyError::Truncated("ASCII body ended early".into()))?;
                tok.parse::<f64>()
                    .map_err(|_| PlyError::InvalidValue(format!("`{tok}` is not a number")))
            }
            _ => {
                let n = t.size();
                if self.pos + n > self.bytes.len() {
                    return Err(PlyError::Truncated(format!(
                        "needed {} bytes, {} available",
                        self.pos + n,
                        self.bytes.len()
                    )));
                }
                let v = t.decode(&self.bytes[self.pos..], self.format);
                self.pos += n;
                Ok(v)
            }
        }
    }
}

/// Parses a PLY file image. Only the `vertex` element is kept.
pub fn parse_ply(bytes: &[u8]) -> std::result::Result<PointCloud, PlyError> {
    let header = parse_header(bytes)?;
    let body = &bytes[header.body_offset..];
    let text = if header.format == Format::Ascii {
        std::str::from_utf8(body).map_err(|_| PlyError::InvalidValue("ASCII body is not UTF-8".into()))?
    } else {
        ""
    };
    let mut rd = RowReader {
        bytes: body,
        pos: 0,
        format: header.format,
        tokens: text.split_ascii_whitespace(),
    };

    let mut cloud = None;
    for el in &header.elements {
        if el.name != "vertex" {
            for _ in 0..el.count {
                for p in &el.properties {
                    match p {
                        Property::Scalar(_, t) => {
                            rd.value(*t)?;
                        }
                        Property::List(ct, it) => {
                            let n = rd.value(*ct)?;
                            for _ in 0..n as usize {
                                rd.value(*it)?;
                            }
                        }
                    }
                }
            }
            continue;
        }
        let find = |name: &'static str| -> Option<(usize, Scalar)> {
            el.properties.iter().enumerate().find_map(|(i, p)| match p {
                Property::Scalar(n, t) if n == name => Some((i, *t)),
                _ => None,
            })
        };
        let need = |name: &'static str| find(name).ok_or(PlyError::MissingProperty(name));
        let xyz = [need("x")?, need("y")?, need("z")?];
        let rgb = [
            find("red").or_else(|| find("r")).ok_or(PlyError::MissingProperty("red"))?,
            find("green").or_else(|| find("g")).ok_or(PlyError::MissingProperty("green"))?,
            find("blue").or_else(|| find("b")).ok_or(PlyError::MissingProperty("blue"))?,
        ];
        let nrm = match (find("nx"), find("ny"), find("nz")) {
            (Some(a), Some(b), Some(c)) => Some([a, b, c]),
            _ => None,
        };

        let mut positions = Vec::with_capacity(el.count);
        let mut colors = Vec::with_capacity(el.count);
        let mut normals = nrm.map(|_| Vec::with_capacity(el.count));
        let mut row = vec![0.0; el.properties.len()];
        for idx in 0..el.count {
            for (k, p) in el.properties.iter().enumerate() {
                match p {
                    Property::Scalar(_, t) => row[k] = rd.value(*t)?,
                    Property::List(ct, it) => {
                        let n = rd.value(*ct)?;
                        for _ in 0..n as usize {
                            rd.value(*it)?;
                        }
                    }
                }
            }
            positions.push(Vector3::new(row[xyz[0].0], row[xyz[1].0], row[xyz[2].0]));
            let mut c = [0u8; 3];
            for (ch, &(i, t)) in rgb.iter().enumerate() {
                let v = if t.is_float() { row[i] * 255.0 } else { row[i] };
                if !(-0.5..=255.5).contains(&v) {
                    return Err(PlyError::InvalidValue(format!("vertex {idx}: color {v} outside [0,255]")));
                }
                c[ch] = v.round().clamp(0.0, 255.0) as u8;
            }
            colors.push(c);
            if let (Some(list), Some(nrm)) = (normals.as_mut(), nrm) {
                list.push(Vector3::new(row[nrm[0].0], row[nrm[1].0], row[nrm[2].0]));
            }
        }
        cloud = Some(PointCloud {
            positions,
            colors,
            normals,
        });
    }
    let cloud = cloud.ok_or_else(|| malformed("no vertex element"))?;
    if cloud.positions.is_empty() {
        return Err(PlyError::InvalidValue("vertex element is empty".into()));
    }
    if let Some(normals) = &cloud.normals {
        if let Some(i) = normals.iter().position(|v| (v.norm() - 1.0).abs() > 1e-6) {
            return Err(PlyError::InvalidValue(format!("normal {i} is not unit length")));
        }
    }
    Ok(cloud)
}

pub fn load_point_cloud(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_ply(&bytes)?)
}

fn write_header(out: &mut Vec<u8>, cloud: &PointCloud, format: &str, coord: &str) {
    out.extend_from_slice(format!("ply\nformat {format} 1.0\nelement vertex {}\n", cloud.len()).as_bytes());
    for n in ["x", "y", "z"] {
        out.extend_from_slice(format!("property {coord} {n}\n").as_bytes());
    }
    if cloud.normals.is_some() {
        for n in ["nx", "ny", "nz"] {
            out.extend_from_slice(format!("property {coord} {n}\n").as_bytes());
        }
    }
    out.extend_from_slice(b"property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n");
}

/// Little-endian binary PLY with `double` coordinates.
pub fn ply_binary_bytes(cloud: &PointCloud) -> Vec<u8> {
    let mut out = Vec::new();
    write_header(&mut out, cloud, "binary_little_endian", "double");
    for i in 0..cloud.len() {
        for v in cloud.positions[i].iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        if let Some(n) = &cloud.normals {
            for v in n[i].iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out.extend_from_slice(&cloud.colors[i]);
    }
    out
}

/// ASCII PLY; coordinates printed with round-trip precision.
pub fn ply_ascii_bytes(cloud: &PointCloud) -> Vec<u8> {
    let mut out = Vec::new();
    write_header(&mut out, cloud, "ascii", "double");
    for i in 0..cloud.len() {
        let p = cloud.positions[i];
        let mut line = format!("{:?} {:?} {:?}", p.x, p.y, p.z);
        if let Some(n) = &cloud.normals {
            line += &format!(" {:?} {:?} {:?}", n[i].x, n[i].y, n[i].z);
        }
        let c = cloud.colors[i];
        line += &format!(" {} {} {}\n", c[0], c[1], c[2]);
        out.extend_from_slice(line.as_bytes());
    }
    out
}

pub fn save_point_cloud(path: impl AsRef<Path>, cloud: &PointCloud, binary: bool) -> Result<()> {
    let path = path.as_ref();
    let bytes = if binary { ply_binary_bytes(cloud) } else { ply_ascii_bytes(cloud) };
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}
