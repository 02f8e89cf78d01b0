//! File formats: input images (8-bit PNG/PGM), masks (binary PGM with
//! 0/255, or PNG), and JSON seed, scene and report documents.

use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageFormat};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{BinaryMask, GridError, Polygon, ScalarField, SeedSpec, Sign};
use crate::metrics::MetricsReport;
use crate::synth::SceneSpec;

/// Luma weights applied to 8-bit RGB input.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

pub const SEED_FILE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot decode image: {0}")]
    Decode(String),
    #[error("unsupported image format {0}: expected 8-bit grayscale or RGB")]
    UnsupportedBitDepth(String),
    #[error("malformed document at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error(transparent)]
    Grid(#[from] GridError),
}

fn read_file(path: &Path) -> Result<Vec<u8>, IoError> {
    fs::read(path).map_err(|source| IoError::File {
        path: path.to_owned(),
        source,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    fs::write(path, bytes).map_err(|source| IoError::File {
        path: path.to_owned(),
        source,
    })
}

fn decode(bytes: &[u8]) -> Result<DynamicImage, IoError> {
    image::load_from_memory(bytes).map_err(|e| IoError::Decode(e.to_string()))
}

/// Decodes an 8-bit grayscale or RGB(A) image to intensities in `[0, 1]`.
/// Alpha is ignored.
pub fn decode_image(bytes: &[u8]) -> Result<ScalarField, IoError> {
    let img = decode(bytes)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let values: Vec<f64> = match img {
        DynamicImage::ImageLuma8(buf) => buf.pixels().map(|p| p.0[0] as f64 / 255.0).collect(),
        DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| p.0[0] as f64 / 255.0).collect(),
        DynamicImage::ImageRgb8(buf) => buf.pixels().map(|p| luma(p.0[0], p.0[1], p.0[2])).collect(),
        DynamicImage::ImageRgba8(buf) => buf.pixels().map(|p| luma(p.0[0], p.0[1], p.0[2])).collect(),
        other => return Err(IoError::UnsupportedBitDepth(format!("{:?}", other.color()))),
    };
    Ok(ScalarField::new(w, h, values)?)
}

fn luma(r: u8, g: u8, b: u8) -> f64 {
    let [wr, wg, wb] = LUMA_WEIGHTS;
    (wr * r as f64 + wg * g as f64 + wb * b as f64) / 255.0
}

pub fn load_image(path: &Path) -> Result<ScalarField, IoError> {
    decode_image(&read_file(path)?)
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn pgm_bytes(width: usize, height: usize, pixels: impl Iterator<Item = u8>) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(pixels);
    out
}

fn png_bytes(width: usize, height: usize, pixels: Vec<u8>) -> Vec<u8> {
    let buf = image::GrayImage::from_raw(width as u32, height as u32, pixels)
        .expect("buffer length matches dimensions");
    let mut out = Cursor::new(Vec::new());
    buf.write_to(&mut out, ImageFormat::Png)
        .expect("in-memory PNG encoding");
    out.into_inner()
}

/// 8-bit binary PGM (P5), intensities rounded to the nearest level.
pub fn encode_image_pgm(image: &ScalarField) -> Vec<u8> {
    pgm_bytes(image.width(), image.height(), image.values().iter().map(|&v| quantize(v)))
}

pub fn encode_image_png(image: &ScalarField) -> Vec<u8> {
    png_bytes(image.width(), image.height(), image.values().iter().map(|&v| quantize(v)).collect())
}

/// Writes PNG for a `.png` extension, PGM otherwise.
pub fn write_image(image: &ScalarField, path: &Path) -> Result<(), IoError> {
    let bytes = if has_png_extension(path) {
        encode_image_png(image)
    } else {
        encode_image_pgm(image)
    };
    write_file(path, &bytes)
}

fn mask_pixels(mask: &BinaryMask) -> impl Iterator<Item = u8> + '_ {
    mask.bits().iter().map(|&b| if b { 255 } else { 0 })
}

pub fn encode_mask_pgm(mask: &BinaryMask) -> Vec<u8> {
    pgm_bytes(mask.width(), mask.height(), mask_pixels(mask))
}

pub fn encode_mask_png(mask: &BinaryMask) -> Vec<u8> {
    png_bytes(mask.width(), mask.height(), mask_pixels(mask).collect())
}

/// Any 8-bit image; pixels at or above half intensity are object.
pub fn decode_mask(bytes: &[u8]) -> Result<BinaryMask, IoError> {
    let field = decode_image(bytes)?;
    let bits = field.values().iter().map(|&v| v >= 0.5).collect();
    Ok(BinaryMask::new(field.width(), field.height(), bits)?)
}

pub fn read_mask(path: &Path) -> Result<BinaryMask, IoError> {
    decode_mask(&read_file(path)?)
}

/// Writes PNG for a `.png` extension, PGM otherwise.
pub fn write_mask(mask: &BinaryMask, path: &Path) -> Result<(), IoError> {
    let bytes = if has_png_extension(path) {
        encode_mask_png(mask)
    } else {
        encode_mask_pgm(mask)
    };
    write_file(path, &bytes)
}

fn has_png_extension(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

fn syntax(e: serde_json::Error) -> IoError {
    IoError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// On-disk seed document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedFile {
    pub version: u32,
    pub inside_sign: i32,
    pub polygons: Vec<Vec<[f64; 2]>>,
}

impl From<&SeedSpec> for SeedFile {
    fn from(s: &SeedSpec) -> Self {
        Self {
            version: SEED_FILE_VERSION,
            inside_sign: s.inside_sign.into(),
            polygons: s.polygons.iter().map(|p| p.vertices.clone()).collect(),
        }
    }
}

impl TryFrom<SeedFile> for SeedSpec {
    type Error = IoError;

    fn try_from(f: SeedFile) -> Result<Self, IoError> {
        if f.version != SEED_FILE_VERSION {
            return Err(IoError::Field {
                field: "version".into(),
                message: format!("unsupported version {}, expected {SEED_FILE_VERSION}", f.version),
            });
        }
        let inside_sign = Sign::try_from(f.inside_sign).map_err(|e| IoError::Field {
            field: "inside_sign".into(),
            message: e.to_string(),
        })?;
        let spec = SeedSpec::new(f.polygons.into_iter().map(Polygon::new).collect(), inside_sign);
        spec.validate().map_err(|e| {
            let field = match &e {
                GridError::TooFewVertices { index, .. } | GridError::NonFiniteVertex { index } => {
                    format!("polygons[{index}]")
                }
                _ => "polygons".into(),
            };
            IoError::Field {
                field,
                message: e.to_string(),
            }
        })?;
        Ok(spec)
    }
}

pub fn parse_seed_str(text: &str) -> Result<SeedSpec, IoError> {
    let file: SeedFile = serde_json::from_str(text).map_err(syntax)?;
    file.try_into()
}

pub fn parse_seed_file(path: &Path) -> Result<SeedSpec, IoError> {
    let bytes = read_file(path)?;
    parse_seed_str(&String::from_utf8_lossy(&bytes))
}

pub fn seed_to_string(seeds: &SeedSpec) -> String {
    let mut s = serde_json::to_string_pretty(&SeedFile::from(seeds)).expect("seed serialization");
    s.push('\n');
    s
}

pub fn write_seed_file(seeds: &SeedSpec, path: &Path) -> Result<(), IoError> {
    write_file(path, seed_to_string(seeds).as_bytes())
}

pub fn parse_scene_str(text: &str) -> Result<SceneSpec, IoError> {
    let spec: SceneSpec = serde_json::from_str(text).map_err(syntax)?;
    spec.validate().map_err(|e| IoError::Field {
        field: "shapes".into(),
        message: e.to_string(),
    })?;
    Ok(spec)
}

pub fn parse_scene_file(path: &Path) -> Result<SceneSpec, IoError> {
    let bytes = read_file(path)?;
    parse_scene_str(&String::from_utf8_lossy(&bytes))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), IoError> {
    let mut s = serde_json::to_string_pretty(value).expect("json serialization");
    s.push('\n');
    write_file(path, s.as_bytes())
}

pub fn write_report(report: &MetricsReport, path: &Path) -> Result<(), IoError> {
    write_json(report, path)
}

pub fn parse_report_str(text: &str) -> Result<MetricsReport, IoError> {
    serde_json::from_str(text).map_err(syntax)
}
