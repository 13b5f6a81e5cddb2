//! File formats: 8-bit PNG codecs, the flat "DGSA" tensor format, CSV
//! feature tables and score lists, and vessel-tree JSON.
//!
//! Intensity mapping is `v / 255` on read and round-half-up on write. Masks
//! read as foreground when the byte is > 127 and write as 0/255.

use std::fs;
use std::io::{Cursor, Read, Write};
use std::path::Path;

use image::ImageFormat;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colonize::{ColonizeError, Point2, TreeNode, VesselTree};
use crate::image::{BinaryMask, GrayImage, RgbImage};
use crate::metrics::{FeatureTable, MetricsError};

pub const TENSOR_MAGIC: &[u8; 4] = b"DGSA";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Decode { path: String, message: String },
    #[error("{path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error(transparent)]
    InvalidTree(#[from] ColonizeError),
    #[error(transparent)]
    InvalidFeatures(#[from] MetricsError),
}

impl IoError {
    fn file(path: &Path, source: std::io::Error) -> Self {
        IoError::File {
            path: path.display().to_string(),
            source,
        }
    }

    fn decode(path: &Path, message: impl Into<String>) -> Self {
        IoError::Decode {
            path: path.display().to_string(),
            message: message.into(),
        }
    }
}

fn to_u8(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

// --- PNG ---

pub fn read_mask_png(path: &Path) -> Result<BinaryMask, IoError> {
    let img = image::open(path)
        .map_err(|e| IoError::decode(path, e.to_string()))?
        .into_luma8();
    let (w, h) = img.dimensions();
    Ok(BinaryMask::from_data(
        w,
        h,
        img.into_raw().into_iter().map(|v| v > 127).collect(),
    ))
}

pub fn read_gray_png(path: &Path) -> Result<GrayImage, IoError> {
    let img = image::open(path)
        .map_err(|e| IoError::decode(path, e.to_string()))?
        .into_luma8();
    let (w, h) = img.dimensions();
    Ok(GrayImage::from_data(
        w,
        h,
        img.into_raw()
            .into_iter()
            .map(|v| f64::from(v) / 255.0)
            .collect(),
    ))
}

pub fn read_rgb_png(path: &Path) -> Result<RgbImage, IoError> {
    let img = image::open(path)
        .map_err(|e| IoError::decode(path, e.to_string()))?
        .into_rgb8();
    let (w, h) = img.dimensions();
    Ok(RgbImage::from_data(
        w,
        h,
        img.into_raw()
            .into_iter()
            .map(|v| f64::from(v) / 255.0)
            .collect(),
    ))
}

/// Reads only the dimensions, without decoding pixel data.
pub fn png_dimensions(path: &Path) -> Result<(u32, u32), IoError> {
    image::image_dimensions(path).map_err(|e| IoError::decode(path, e.to_string()))
}

pub fn mask_png_bytes(m: &BinaryMask) -> Vec<u8> {
    let raw: Vec<u8> = m.data().iter().map(|&v| if v { 255 } else { 0 }).collect();
    let img = image::GrayImage::from_raw(m.width(), m.height(), raw).expect("sized buffer");
    let mut bytes = Vec::new();
    img.write_to(&mut Cursor::new(&mut bytes), ImageFormat::Png)
        .expect("in-memory PNG encode");
    bytes
}

pub fn gray_png_bytes(img: &GrayImage) -> Vec<u8> {
    let raw: Vec<u8> = img.data().iter().map(|&v| to_u8(v)).collect();
    let img = image::GrayImage::from_raw(img.width(), img.height(), raw).expect("sized buffer");
    let mut bytes = Vec::new();
    img.write_to(&mut Cursor::new(&mut bytes), ImageFormat::Png)
        .expect("in-memory PNG encode");
    bytes
}

pub fn rgb_png_bytes(img: &RgbImage) -> Vec<u8> {
    let raw: Vec<u8> = img.data().iter().map(|&v| to_u8(v)).collect();
    let img = image::RgbImage::from_raw(img.width(), img.height(), raw).expect("sized buffer");
    let mut bytes = Vec::new();
    img.write_to(&mut Cursor::new(&mut bytes), ImageFormat::Png)
        .expect("in-memory PNG encode");
    bytes
}

pub fn write_mask_png(path: &Path, m: &BinaryMask) -> Result<(), IoError> {
    fs::write(path, mask_png_bytes(m)).map_err(|e| IoError::file(path, e))
}

pub fn write_gray_png(path: &Path, img: &GrayImage) -> Result<(), IoError> {
    fs::write(path, gray_png_bytes(img)).map_err(|e| IoError::file(path, e))
}

pub fn write_rgb_png(path: &Path, img: &RgbImage) -> Result<(), IoError> {
    fs::write(path, rgb_png_bytes(img)).map_err(|e| IoError::file(path, e))
}

// --- DGSA tensor format ---
//
// magic "DGSA" | u32 rank | u32 dims[rank] | f32 data (all little-endian).
// A rank-2 tensor therefore has a 16-byte header.

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub dims: Vec<u32>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn element_count(&self) -> usize {
        self.dims.iter().map(|&d| d as usize).product()
    }
}

pub fn write_tensor(path: &Path, tensor: &Tensor) -> Result<(), IoError> {
    assert_eq!(tensor.data.len(), tensor.element_count());
    let mut bytes =
        Vec::with_capacity(8 + tensor.dims.len() * 4 + tensor.data.len() * 4);
    bytes.extend_from_slice(TENSOR_MAGIC);
    bytes.extend_from_slice(&(tensor.dims.len() as u32).to_le_bytes());
    for &d in &tensor.dims {
        bytes.extend_from_slice(&d.to_le_bytes());
    }
    for &v in &tensor.data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| IoError::file(path, e))
}

pub fn read_tensor(path: &Path) -> Result<Tensor, IoError> {
    let mut file = fs::File::open(path).map_err(|e| IoError::file(path, e))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)
        .map_err(|e| IoError::file(path, e))?;
    if bytes.len() < 8 || &bytes[0..4] != TENSOR_MAGIC {
        return Err(IoError::decode(path, "missing DGSA magic"));
    }
    let rank = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let header_len = 8 + rank * 4;
    if bytes.len() < header_len {
        return Err(IoError::decode(path, "truncated dimension header"));
    }
    let dims: Vec<u32> = (0..rank)
        .map(|i| u32::from_le_bytes(bytes[8 + i * 4..12 + i * 4].try_into().unwrap()))
        .collect();
    let count: usize = dims.iter().map(|&d| d as usize).product();
    let expected = header_len + count * 4;
    if bytes.len() != expected {
        return Err(IoError::decode(
            path,
            format!("expected {expected} bytes for dims {dims:?}, found {}", bytes.len()),
        ));
    }
    let data: Vec<f32> = (0..count)
        .map(|i| {
            f32::from_le_bytes(
                bytes[header_len + i * 4..header_len + i * 4 + 4]
                    .try_into()
                    .unwrap(),
            )
        })
        .collect();
    Ok(Tensor { dims, data })
}

// --- Vessel tree JSON ---

#[derive(Serialize, Deserialize)]
struct TreeNodeJson {
    x: f64,
    y: f64,
    parent: Option<usize>,
    radius: f64,
}

#[derive(Serialize, Deserialize)]
struct TreeJson {
    nodes: Vec<TreeNodeJson>,
}

pub fn tree_to_json(tree: &VesselTree) -> String {
    let doc = TreeJson {
        nodes: tree
            .nodes()
            .iter()
            .map(|n| TreeNodeJson {
                x: n.position.x,
                y: n.position.y,
                parent: n.parent,
                radius: n.radius,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("tree serialization")
}

pub fn tree_from_json_str(path: &Path, json: &str) -> Result<VesselTree, IoError> {
    let doc: TreeJson = serde_json::from_str(json).map_err(|e| IoError::Json {
        path: path.display().to_string(),
        source: e,
    })?;
    let nodes = doc
        .nodes
        .into_iter()
        .map(|n| TreeNode {
            position: Point2::new(n.x, n.y),
            parent: n.parent,
            radius: n.radius,
        })
        .collect();
    Ok(VesselTree::from_nodes(nodes)?)
}

pub fn read_tree_json(path: &Path) -> Result<VesselTree, IoError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::file(path, e))?;
    tree_from_json_str(path, &text)
}

pub fn write_tree_json(path: &Path, tree: &VesselTree) -> Result<(), IoError> {
    fs::write(path, tree_to_json(tree)).map_err(|e| IoError::file(path, e))
}

// --- CSV ---

/// Feature table: header `domain,f0,f1,...`, one row per feature vector.
pub fn read_feature_csv(path: &Path) -> Result<FeatureTable, IoError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::file(path, e))?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || lineno == 0 {
            continue;
        }
        let mut fields = line.split(',');
        let domain = fields
            .next()
            .ok_or_else(|| IoError::decode(path, format!("line {}: empty row", lineno + 1)))?
            .trim()
            .to_string();
        let mut vector = Vec::new();
        for field in fields {
            let v: f64 = field.trim().parse().map_err(|_| {
                IoError::decode(
                    path,
                    format!("line {}: {field:?} is not a number", lineno + 1),
                )
            })?;
            vector.push(v);
        }
        rows.push((domain, vector));
    }
    Ok(FeatureTable::from_rows(rows)?)
}

/// Score list: one value per line; a single non-numeric first line is
/// treated as a header and skipped.
pub fn read_score_csv(path: &Path) -> Result<Vec<f64>, IoError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::file(path, e))?;
    let mut scores = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match line.parse::<f64>() {
            Ok(v) => scores.push(v),
            Err(_) if lineno == 0 => continue,
            Err(_) => {
                return Err(IoError::decode(
                    path,
                    format!("line {}: {line:?} is not a number", lineno + 1),
                ));
            }
        }
    }
    Ok(scores)
}

/// Writes bytes through a generic writer, mapping errors to the path.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let mut f = fs::File::create(path).map_err(|e| IoError::file(path, e))?;
    f.write_all(bytes).map_err(|e| IoError::file(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn mask_png_roundtrip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("mask.png");
        let m = BinaryMask::from_fn(9, 7, |x, y| (x + 2 * y) % 3 == 0);
        write_mask_png(&path, &m).unwrap();
        assert_eq!(read_mask_png(&path).unwrap(), m);
        assert_eq!(png_dimensions(&path).unwrap(), (9, 7));
    }

    #[test]
    fn gray_png_roundtrip_on_u8_grid() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("gray.png");
        let img = GrayImage::from_data(
            4,
            1,
            vec![0.0, 64.0 / 255.0, 128.0 / 255.0, 1.0],
        );
        write_gray_png(&path, &img).unwrap();
        assert_eq!(read_gray_png(&path).unwrap(), img);
    }

    #[test]
    fn rgb_png_roundtrip_on_u8_grid() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("rgb.png");
        let img = RgbImage::from_fn(5, 3, |x, y| {
            [
                f64::from((x * 40) % 256) / 255.0,
                f64::from((y * 90) % 256) / 255.0,
                f64::from((x + y) % 2) * 1.0,
            ]
        });
        write_rgb_png(&path, &img).unwrap();
        assert_eq!(read_rgb_png(&path).unwrap(), img);
    }

    #[test]
    fn tensor_roundtrip_rank2_header_is_16_bytes() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.bin");
        let t = Tensor {
            dims: vec![2, 3],
            data: vec![1.0, 2.0, 3.0, 4.0, 5.0, -0.5],
        };
        write_tensor(&path, &t).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[0..4], b"DGSA");
        assert_eq!(bytes.len(), 16 + 6 * 4);
        assert_eq!(read_tensor(&path).unwrap(), t);
    }

    #[test]
    fn tensor_rejects_garbage() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        fs::write(&path, b"NOPE").unwrap();
        assert!(read_tensor(&path).is_err());
    }

    #[test]
    fn tree_json_roundtrip() {
        use crate::colonize::{GrowthParams, Point2};
        let dir = tempdir().unwrap();
        let path = dir.path().join("tree.json");
        let roi = BinaryMask::from_fn(32, 32, |_, _| true);
        let params = GrowthParams {
            attraction_radius_d: 10.0,
            segment_length_l: 3.0,
            kill_radius_k: 2.0,
            max_nodes_m: 50,
            seed: 5,
            root: Some(Point2::new(16.0, 16.0)),
            ..GrowthParams::default()
        };
        let tree = crate::colonize::grow(&roi, &params, 40).unwrap();
        let tree = crate::colonize::assign_radii(tree, 1.0, 3.0);
        write_tree_json(&path, &tree).unwrap();
        let back = read_tree_json(&path).unwrap();
        assert_eq!(back, tree);
    }

    #[test]
    fn feature_csv_parses() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("f.csv");
        fs::write(&path, "domain,f0,f1\na,0,0\nb,3,4\n").unwrap();
        let table = read_feature_csv(&path).unwrap();
        assert_eq!(table.rows().len(), 2);
        assert_eq!(table.dim(), 2);
        assert_eq!(
            crate::metrics::domain_inter_distance(&table).unwrap(),
            5.0
        );
    }

    #[test]
    fn score_csv_skips_header_only() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("s.csv");
        fs::write(&path, "score\n0.5\n0.75\n").unwrap();
        assert_eq!(read_score_csv(&path).unwrap(), vec![0.5, 0.75]);
        fs::write(&path, "0.5\nbogus\n").unwrap();
        assert!(read_score_csv(&path).is_err());
    }
}
