//! MetaImage (.mhd + .raw) reader/writer.
//!
//! The writer emits exactly the keys below, in this order, with a companion
//! raw file next to the header; the reader accepts any key order and ignores
//! unknown keys. Supported element types are `MET_SHORT` (i16) and
//! `MET_FLOAT` (f32), always little-endian, densely packed x-fastest.
//!
//! ```text
//! ObjectType = Image
//! NDims = 3
//! DimSize = W H D
//! ElementSpacing = sx sy sz
//! Offset = ox oy oz
//! ElementType = MET_FLOAT
//! ElementByteOrderMSB = False
//! ElementDataFile = <name>.raw
//! ```
//!
//! Volumes hold f64 in memory; `MET_FLOAT` storage round-trips bit-exactly
//! for any data that is exactly representable in f32 (in particular anything
//! previously loaded from a MetaImage file). Masks persist as `MET_SHORT`
//! with values {0, 1}.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::volume::{ImageGrid2D, Mask, Volume};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementType {
    Short,
    Float,
}

impl ElementType {
    fn name(self) -> &'static str {
        match self {
            ElementType::Short => "MET_SHORT",
            ElementType::Float => "MET_FLOAT",
        }
    }

    fn byte_width(self) -> usize {
        match self {
            ElementType::Short => 2,
            ElementType::Float => 4,
        }
    }
}

struct Header {
    ndims: usize,
    dim_size: Vec<usize>,     // file order: x y [z]
    spacing: Vec<f64>,        // file order: x y [z]
    offset: Vec<f64>,         // file order: x y [z]
    element_type: ElementType,
    data_file: String,
}

fn parse_header(path: &Path) -> Result<Header> {
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut ndims = None;
    let mut dim_size = None;
    let mut spacing = None;
    let mut offset = None;
    let mut element_type = None;
    let mut data_file = None;
    let mut object_type = None;
    let mut msb = None;

    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::MalformedHeader {
                path: path.to_path_buf(),
                why: format!("line without `=`: {line:?}"),
            });
        };
        let key = key.trim();
        let value = value.trim();
        match key {
            "ObjectType" => object_type = Some(value.to_string()),
            "NDims" => {
                ndims = Some(value.parse::<usize>().map_err(|_| Error::MalformedHeader {
                    path: path.to_path_buf(),
                    why: format!("NDims not an integer: {value:?}"),
                })?)
            }
            "DimSize" => dim_size = Some(parse_numbers::<usize>(path, "DimSize", value)?),
            "ElementSpacing" => spacing = Some(parse_numbers::<f64>(path, "ElementSpacing", value)?),
            "Offset" | "Origin" | "Position" => offset = Some(parse_numbers::<f64>(path, "Offset", value)?),
            "ElementType" => {
                element_type = Some(match value {
                    "MET_SHORT" => ElementType::Short,
                    "MET_FLOAT" => ElementType::Float,
                    other => {
                        return Err(Error::UnsupportedElementType {
                            path: path.to_path_buf(),
                            element_type: other.to_string(),
                        })
                    }
                })
            }
            "ElementByteOrderMSB" | "BinaryDataByteOrderMSB" => msb = Some(value.to_string()),
            "ElementDataFile" => data_file = Some(value.to_string()),
            _ => {} // tolerated
        }
    }

    if let Some(ot) = object_type {
        if ot != "Image" {
            return Err(Error::MalformedHeader {
                path: path.to_path_buf(),
                why: format!("ObjectType must be Image, got {ot:?}"),
            });
        }
    }
    if let Some(m) = msb {
        if m.eq_ignore_ascii_case("true") {
            return Err(Error::MalformedHeader {
                path: path.to_path_buf(),
                why: "big-endian element data (ElementByteOrderMSB = True) is not supported".into(),
            });
        }
    }
    let ndims = ndims.ok_or(Error::MissingHeaderKey {
        path: path.to_path_buf(),
        key: "NDims",
    })?;
    if ndims != 2 && ndims != 3 {
        return Err(Error::MalformedHeader {
            path: path.to_path_buf(),
            why: format!("NDims must be 2 or 3, got {ndims}"),
        });
    }
    let dim_size = dim_size.ok_or(Error::MissingHeaderKey {
        path: path.to_path_buf(),
        key: "DimSize",
    })?;
    if dim_size.len() != ndims || dim_size.iter().any(|&d| d == 0) {
        return Err(Error::MalformedHeader {
            path: path.to_path_buf(),
            why: format!("DimSize {dim_size:?} inconsistent with NDims {ndims}"),
        });
    }
    let spacing = spacing.unwrap_or_else(|| vec![1.0; ndims]);
    if spacing.len() != ndims || spacing.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::MalformedHeader {
            path: path.to_path_buf(),
            why: format!("ElementSpacing {spacing:?} invalid"),
        });
    }
    let offset = offset.unwrap_or_else(|| vec![0.0; ndims]);
    if offset.len() != ndims {
        return Err(Error::MalformedHeader {
            path: path.to_path_buf(),
            why: format!("Offset {offset:?} inconsistent with NDims {ndims}"),
        });
    }
    let element_type = element_type.ok_or(Error::MissingHeaderKey {
        path: path.to_path_buf(),
        key: "ElementType",
    })?;
    let data_file = data_file.ok_or(Error::MissingHeaderKey {
        path: path.to_path_buf(),
        key: "ElementDataFile",
    })?;
    if data_file == "LOCAL" {
        return Err(Error::MalformedHeader {
            path: path.to_path_buf(),
            why: "inline (LOCAL) element data is not supported; use a companion raw file".into(),
        });
    }

    Ok(Header {
        ndims,
        dim_size,
        spacing,
        offset,
        element_type,
        data_file,
    })
}

fn parse_numbers<T: std::str::FromStr>(path: &Path, key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split_whitespace()
        .map(|tok| {
            tok.parse::<T>().map_err(|_| Error::MalformedHeader {
                path: path.to_path_buf(),
                why: format!("{key}: cannot parse {tok:?}"),
            })
        })
        .collect()
}

fn read_raw(header_path: &Path, header: &Header) -> Result<Vec<f64>> {
    let raw_path: PathBuf = header_path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(&header.data_file);
    if !raw_path.exists() {
        return Err(Error::FileNotFound(raw_path));
    }
    let bytes = fs::read(&raw_path).map_err(|e| Error::io(&raw_path, e))?;
    let expected: usize = header.dim_size.iter().product();
    let width = header.element_type.byte_width();
    if bytes.len() % width != 0 || bytes.len() / width != expected {
        return Err(Error::DataSizeMismatch {
            path: raw_path,
            expected,
            actual: bytes.len() / width,
        });
    }
    let data = match header.element_type {
        ElementType::Short => bytes
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64)
            .collect(),
        ElementType::Float => bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect(),
    };
    Ok(data)
}

/// Load a 3D volume from a `.mhd` header with companion raw file.
pub fn load_volume(path: impl AsRef<Path>) -> Result<Volume> {
    let path = path.as_ref();
    let header = parse_header(path)?;
    if header.ndims != 3 {
        return Err(Error::MalformedHeader {
            path: path.to_path_buf(),
            why: format!("expected a 3D image, header has NDims = {}", header.ndims),
        });
    }
    let data = read_raw(path, &header)?;
    // File order is x y z; internal dims order is (d, h, w) = (z, y, x).
    Volume::new(
        (header.dim_size[2], header.dim_size[1], header.dim_size[0]),
        (header.spacing[0], header.spacing[1], header.spacing[2]),
        (header.offset[0], header.offset[1], header.offset[2]),
        data,
    )
}

/// Load a binary mask stored as `MET_SHORT` {0, 1}.
pub fn load_mask(path: impl AsRef<Path>) -> Result<Mask> {
    let path = path.as_ref();
    let v = load_volume(path)?;
    let (d, h, w) = v.dims();
    let mut data = Vec::with_capacity(v.len());
    for &x in v.data() {
        data.push(match x {
            x if x == 0.0 => 0u8,
            x if x == 1.0 => 1u8,
            other => {
                return Err(Error::MalformedHeader {
                    path: path.to_path_buf(),
                    why: format!("mask voxel value {other} is not 0 or 1"),
                })
            }
        });
    }
    Mask::new((d, h, w), v.spacing(), v.origin(), data)
}

fn raw_name_for(path: &Path) -> Result<String> {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::invalid("path", format!("cannot derive raw file name from {path:?}")))?;
    Ok(format!("{stem}.raw"))
}

fn write_pair(path: &Path, header_body: &str, raw: &[u8]) -> Result<()> {
    let raw_path = path.with_extension("raw");
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(header_body.as_bytes()).map_err(|e| Error::io(path, e))?;
    fs::write(&raw_path, raw).map_err(|e| Error::io(&raw_path, e))?;
    Ok(())
}

/// Save a volume as `MET_FLOAT` MetaImage (header + raw pair).
pub fn save_volume(v: &Volume, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let raw_name = raw_name_for(path)?;
    let (d, h, w) = v.dims();
    let (sx, sy, sz) = v.spacing();
    let (ox, oy, oz) = v.origin();
    let header = format!(
        "ObjectType = Image\nNDims = 3\nDimSize = {w} {h} {d}\nElementSpacing = {sx} {sy} {sz}\nOffset = {ox} {oy} {oz}\nElementType = MET_FLOAT\nElementByteOrderMSB = False\nElementDataFile = {raw_name}\n"
    );
    let mut raw = Vec::with_capacity(v.len() * 4);
    for &x in v.data() {
        raw.extend_from_slice(&(x as f32).to_le_bytes());
    }
    write_pair(path, &header, &raw)
}

/// Save a mask as `MET_SHORT` MetaImage with values {0, 1}.
pub fn save_mask(m: &Mask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let raw_name = raw_name_for(path)?;
    let (d, h, w) = m.dims();
    let (sx, sy, sz) = m.spacing();
    let (ox, oy, oz) = m.origin();
    let header = format!(
        "ObjectType = Image\nNDims = 3\nDimSize = {w} {h} {d}\nElementSpacing = {sx} {sy} {sz}\nOffset = {ox} {oy} {oz}\nElementType = MET_SHORT\nElementByteOrderMSB = False\nElementDataFile = {raw_name}\n"
    );
    let mut raw = Vec::with_capacity(m.len() * 2);
    for &x in m.data() {
        raw.extend_from_slice(&(x as i16).to_le_bytes());
    }
    write_pair(path, &header, &raw)
}

/// Save a 2D image as `MET_FLOAT` MetaImage with `NDims = 2`.
pub fn save_image(img: &ImageGrid2D, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let raw_name = raw_name_for(path)?;
    let (sr, sc) = img.pixel_spacing();
    let header = format!(
        "ObjectType = Image\nNDims = 2\nDimSize = {} {}\nElementSpacing = {sc} {sr}\nOffset = 0 0\nElementType = MET_FLOAT\nElementByteOrderMSB = False\nElementDataFile = {raw_name}\n",
        img.cols(),
        img.rows(),
    );
    let mut raw = Vec::with_capacity(img.data().len() * 4);
    for &x in img.data() {
        raw.extend_from_slice(&(x as f32).to_le_bytes());
    }
    write_pair(path, &header, &raw)
}

/// Load a 2D image saved by [`save_image`].
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageGrid2D> {
    let path = path.as_ref();
    let header = parse_header(path)?;
    if header.ndims != 2 {
        return Err(Error::MalformedHeader {
            path: path.to_path_buf(),
            why: format!("expected a 2D image, header has NDims = {}", header.ndims),
        });
    }
    let data = read_raw(path, &header)?;
    ImageGrid2D::new(header.dim_size[1], header.dim_size[0], (header.spacing[1], header.spacing[0]), data)
}
