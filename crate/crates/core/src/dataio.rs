//! File formats: grayscale PNG masks, run-length-encoded text masks, and
//! dataset manifests.
//!
//! Masks travel either as 8-bit grayscale PNGs (any nonzero value is
//! foreground) or as an RLE text form: line one is `<width> <height>`, line
//! two the space-separated run lengths in row-major order starting with the
//! background count. A manifest is a JSON document binding ground-truth and
//! detection masks to images plus the ground sample distance, given either
//! directly or as camera parameters.

use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, PixelMask, PixelPoint};
use crate::photogrammetry::{compute_gsd, CameraModel, GroundSampleDistance, PhotogrammetryError};

#[derive(Debug, Error)]
pub enum DataIoError {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: unsupported PNG flavor ({detail}); expected 8-bit grayscale")]
    UnsupportedPngFlavor { path: PathBuf, detail: String },
    #[error("{path}: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("manifest schema error at {location}: {message}")]
    Schema { location: String, message: String },
    #[error("manifest image {image_id}: mask file {mask} not found")]
    MissingMaskFile { image_id: String, mask: PathBuf },
    #[error("manifest provides neither gsd_cm_per_px nor a camera block")]
    GsdMissing,
    #[error("RLE runs sum to {got} but the mask holds {expected} pixels")]
    RunSumMismatch { expected: u64, got: u64 },
    #[error("RLE text line {line}: {message}")]
    RleParse { line: usize, message: String },
    #[error("mask for image {image_id} is {got_w}x{got_h}, manifest says {want_w}x{want_h}")]
    MaskDimensionMismatch {
        image_id: String,
        want_w: u32,
        want_h: u32,
        got_w: u32,
        got_h: u32,
    },
    #[error(transparent)]
    Mask(#[from] GeometryError),
    #[error(transparent)]
    Camera(#[from] PhotogrammetryError),
}

fn io_err(path: &Path, source: std::io::Error) -> DataIoError {
    if source.kind() == std::io::ErrorKind::NotFound {
        DataIoError::FileNotFound(path.to_path_buf())
    } else {
        DataIoError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

// ---------------------------------------------------------------------------
// PNG masks

/// Loads an 8-bit grayscale PNG as a mask; any pixel value above zero is
/// foreground.
pub fn load_mask_png(path: &Path) -> Result<PixelMask, DataIoError> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let decoder = png::Decoder::new(BufReader::new(file));
    let mut reader = decoder.read_info().map_err(|e| DataIoError::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(DataIoError::UnsupportedPngFlavor {
            path: path.to_path_buf(),
            detail: format!("{:?} / {:?}", info.color_type, info.bit_depth),
        });
    }
    let mut buf = vec![0u8; reader.output_buffer_size().unwrap_or(0)];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| DataIoError::Decode {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    let (width, height) = (frame.width, frame.height);
    let pixels = &buf[..frame.buffer_size()];
    let mut points = Vec::new();
    for (i, &value) in pixels.iter().enumerate() {
        if value > 0 {
            let x = (i as u32 % width) as i64;
            let y = (i as u32 / width) as i64;
            points.push(PixelPoint::new(x, y));
        }
    }
    Ok(PixelMask::new(width, height, points)?)
}

/// Writes a mask as an 8-bit grayscale PNG with foreground 255.
pub fn save_mask_png(mask: &PixelMask, path: &Path) -> Result<(), DataIoError> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), mask.width(), mask.height());
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header().map_err(|e| DataIoError::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut data = vec![0u8; mask.width() as usize * mask.height() as usize];
    for p in mask.foreground() {
        data[p.y as usize * mask.width() as usize + p.x as usize] = 255;
    }
    writer
        .write_image_data(&data)
        .map_err(|e| DataIoError::Decode {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    Ok(())
}

// ---------------------------------------------------------------------------
// RLE masks

/// Run-length encoding of a mask: alternating background/foreground run
/// lengths in row-major order, background first. Runs sum to width*height.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RleMask {
    pub width: u32,
    pub height: u32,
    pub runs: Vec<u64>,
}

/// Encodes a mask; the first run is the leading background count (possibly
/// zero), after which runs strictly alternate.
pub fn rle_encode(mask: &PixelMask) -> RleMask {
    let total = u64::from(mask.width()) * u64::from(mask.height());
    let mut runs = Vec::new();
    let mut pos: u64 = 0;
    for p in mask.foreground() {
        let idx = p.y as u64 * u64::from(mask.width()) + p.x as u64;
        if idx == pos && !runs.is_empty() {
            // contiguous: extend the current foreground run
            *runs.last_mut().unwrap() += 1;
        } else {
            runs.push(idx - pos); // background gap, may be 0 at the start
            runs.push(1);
        }
        pos = idx + 1;
    }
    if runs.is_empty() {
        runs.push(total);
    } else if pos < total {
        runs.push(total - pos);
    }
    RleMask {
        width: mask.width(),
        height: mask.height(),
        runs,
    }
}

/// Expands an RLE mask back to pixels. Fails if the runs do not cover the
/// raster exactly.
pub fn rle_decode(rle: &RleMask) -> Result<PixelMask, DataIoError> {
    let total = u64::from(rle.width) * u64::from(rle.height);
    let sum: u64 = rle.runs.iter().sum();
    if sum != total {
        return Err(DataIoError::RunSumMismatch {
            expected: total,
            got: sum,
        });
    }
    let mut points = Vec::new();
    let mut pos: u64 = 0;
    for (i, &run) in rle.runs.iter().enumerate() {
        if i % 2 == 1 {
            for offset in 0..run {
                let idx = pos + offset;
                let x = (idx % u64::from(rle.width)) as i64;
                let y = (idx / u64::from(rle.width)) as i64;
                points.push(PixelPoint::new(x, y));
            }
        }
        pos += run;
    }
    Ok(PixelMask::new(rle.width, rle.height, points)?)
}

impl RleMask {
    /// Text form: `<width> <height>` on line one, runs on line two.
    pub fn to_text(&self) -> String {
        let runs: Vec<String> = self.runs.iter().map(u64::to_string).collect();
        format!("{} {}\n{}\n", self.width, self.height, runs.join(" "))
    }

    /// Parses the text form; accepts LF or CRLF endings.
    pub fn from_text(text: &str) -> Result<Self, DataIoError> {
        let mut lines = text.lines().map(|l| l.trim_end_matches('\r'));
        let header = lines.next().ok_or(DataIoError::RleParse {
            line: 1,
            message: "missing dimension line".to_string(),
        })?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        if dims.len() != 2 {
            return Err(DataIoError::RleParse {
                line: 1,
                message: format!("expected \"<width> <height>\", got {header:?}"),
            });
        }
        let parse_dim = |s: &str| -> Result<u32, DataIoError> {
            s.parse().map_err(|_| DataIoError::RleParse {
                line: 1,
                message: format!("cannot parse dimension {s:?}"),
            })
        };
        let width = parse_dim(dims[0])?;
        let height = parse_dim(dims[1])?;
        let runs_line = lines.next().unwrap_or("");
        let mut runs = Vec::new();
        for tok in runs_line.split_whitespace() {
            runs.push(tok.parse::<u64>().map_err(|_| DataIoError::RleParse {
                line: 2,
                message: format!("cannot parse run length {tok:?}"),
            })?);
        }
        Ok(Self {
            width,
            height,
            runs,
        })
    }
}

pub fn load_mask_rle(path: &Path) -> Result<PixelMask, DataIoError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    rle_decode(&RleMask::from_text(&text)?)
}

pub fn save_mask_rle(mask: &PixelMask, path: &Path) -> Result<(), DataIoError> {
    fs::write(path, rle_encode(mask).to_text()).map_err(|e| io_err(path, e))
}

/// Loads a mask, dispatching on the file extension: `.png` or `.rle`.
pub fn load_mask(path: &Path) -> Result<PixelMask, DataIoError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("png") => load_mask_png(path),
        Some("rle") => load_mask_rle(path),
        other => Err(DataIoError::Decode {
            path: path.to_path_buf(),
            message: format!("unsupported mask extension {other:?}; expected png or rle"),
        }),
    }
}

// ---------------------------------------------------------------------------
// Dataset manifests

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruthEntry {
    pub mask_path: String,
    pub type_code: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionEntry {
    pub mask_path: String,
    pub score: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageEntry {
    pub id: String,
    pub width: u32,
    pub height: u32,
    pub ground_truth: Vec<GroundTruthEntry>,
    pub detections: Vec<DetectionEntry>,
}

/// On-disk manifest document. Unknown keys are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct ManifestDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gsd_cm_per_px: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub camera: Option<CameraModel>,
    pub images: Vec<ImageEntry>,
}

/// A validated dataset manifest with its resolved ground sample distance.
/// Mask paths resolve relative to the manifest file's directory.
#[derive(Debug, Clone)]
pub struct DatasetManifest {
    doc: ManifestDoc,
    base_dir: PathBuf,
    gsd: GroundSampleDistance,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self, DataIoError> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let mut de = serde_json::Deserializer::from_str(&text);
        let doc: ManifestDoc =
            serde_path_to_error::deserialize(&mut de).map_err(|e| DataIoError::Schema {
                location: e.path().to_string(),
                message: e.inner().to_string(),
            })?;
        let base_dir = path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .to_path_buf();
        Self::from_doc(doc, base_dir)
    }

    pub(crate) fn from_doc(doc: ManifestDoc, base_dir: PathBuf) -> Result<Self, DataIoError> {
        // Explicit gsd wins over the camera block when both are present.
        let gsd = match (doc.gsd_cm_per_px, &doc.camera) {
            (Some(v), _) => {
                GroundSampleDistance::from_cm_per_px(v).map_err(|e| DataIoError::Schema {
                    location: "gsd_cm_per_px".to_string(),
                    message: e.to_string(),
                })?
            }
            (None, Some(camera)) => compute_gsd(camera).map_err(|e| DataIoError::Schema {
                location: "camera".to_string(),
                message: e.to_string(),
            })?,
            (None, None) => return Err(DataIoError::GsdMissing),
        };
        for (i, image) in doc.images.iter().enumerate() {
            if image.width == 0 || image.height == 0 {
                return Err(DataIoError::Schema {
                    location: format!("images[{i}]"),
                    message: "image dimensions must be positive".to_string(),
                });
            }
            if doc.images[..i].iter().any(|other| other.id == image.id) {
                return Err(DataIoError::Schema {
                    location: format!("images[{i}].id"),
                    message: format!("duplicate image id {:?}", image.id),
                });
            }
            for (j, det) in image.detections.iter().enumerate() {
                if !(0.0..=1.0).contains(&det.score) || !det.score.is_finite() {
                    return Err(DataIoError::Schema {
                        location: format!("images[{i}].detections[{j}].score"),
                        message: format!("score {} is outside [0, 1]", det.score),
                    });
                }
            }
            let mask_paths = image
                .ground_truth
                .iter()
                .map(|g| &g.mask_path)
                .chain(image.detections.iter().map(|d| &d.mask_path));
            for mask_path in mask_paths {
                let resolved = base_dir.join(mask_path);
                if !resolved.is_file() {
                    return Err(DataIoError::MissingMaskFile {
                        image_id: image.id.clone(),
                        mask: resolved,
                    });
                }
            }
        }
        Ok(Self { doc, base_dir, gsd })
    }

    pub fn gsd(&self) -> GroundSampleDistance {
        self.gsd
    }

    pub fn images(&self) -> &[ImageEntry] {
        &self.doc.images
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    /// Absolute path of a mask referenced by this manifest.
    pub fn resolve_mask_path(&self, mask_path: &str) -> PathBuf {
        self.base_dir.join(mask_path)
    }

    /// Loads a referenced mask and checks it against the image dimensions.
    pub fn load_image_mask(
        &self,
        image: &ImageEntry,
        mask_path: &str,
    ) -> Result<PixelMask, DataIoError> {
        let mask = load_mask(&self.resolve_mask_path(mask_path))?;
        if mask.width() != image.width || mask.height() != image.height {
            return Err(DataIoError::MaskDimensionMismatch {
                image_id: image.id.clone(),
                want_w: image.width,
                want_h: image.height,
                got_w: mask.width(),
                got_h: mask.height(),
            });
        }
        Ok(mask)
    }
}

/// Serializes a manifest document; used by dataset writers.
pub(crate) fn manifest_to_json(doc: &ManifestDoc) -> String {
    let mut out = serde_json::to_string_pretty(doc).expect("manifest serializes");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask_from(coords: &[(i64, i64)], w: u32, h: u32) -> PixelMask {
        PixelMask::new(
            w,
            h,
            coords.iter().map(|&(x, y)| PixelPoint::new(x, y)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn rle_of_empty_and_full_masks() {
        let empty = PixelMask::empty(3, 2);
        let rle = rle_encode(&empty);
        assert_eq!(rle.runs, vec![6]);
        assert_eq!(rle.to_text(), "3 2\n6\n");

        let full = mask_from(&[(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (2, 1)], 3, 2);
        let rle = rle_encode(&full);
        assert_eq!(rle.runs, vec![0, 6]);
        assert_eq!(rle_decode(&rle).unwrap(), full);
    }

    #[test]
    fn rle_round_trips_a_sparse_mask() {
        let mask = mask_from(&[(1, 0), (3, 0), (0, 2), (1, 2), (2, 2)], 4, 3);
        let rle = rle_encode(&mask);
        assert_eq!(rle.runs, vec![1, 1, 1, 1, 4, 3, 1]);
        assert_eq!(rle_decode(&rle).unwrap(), mask);
        assert_eq!(RleMask::from_text(&rle.to_text()).unwrap(), rle);
    }

    #[test]
    fn rle_rejects_wrong_sums() {
        let rle = RleMask {
            width: 3,
            height: 2,
            runs: vec![5],
        };
        assert!(matches!(
            rle_decode(&rle),
            Err(DataIoError::RunSumMismatch {
                expected: 6,
                got: 5
            })
        ));
    }

    #[test]
    fn rle_text_accepts_crlf() {
        let rle = RleMask::from_text("3 2\r\n1 2 3\r\n").unwrap();
        assert_eq!(rle.runs, vec![1, 2, 3]);
    }

    #[test]
    fn png_round_trip_checkerboard() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("checker.png");
        let mut coords = Vec::new();
        for y in 0..4i64 {
            for x in 0..4i64 {
                if (x + y) % 2 == 0 {
                    coords.push((x, y));
                }
            }
        }
        let mask = mask_from(&coords, 4, 4);
        assert_eq!(mask.pixel_count(), 8);
        save_mask_png(&mask, &path).unwrap();
        assert_eq!(load_mask_png(&path).unwrap(), mask);
        assert_eq!(load_mask(&path).unwrap(), mask);
    }

    #[test]
    fn png_all_zero_loads_as_empty_mask() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("zero.png");
        save_mask_png(&PixelMask::empty(3, 4), &path).unwrap();
        let mask = load_mask_png(&path).unwrap();
        assert!(mask.is_empty());
        assert_eq!((mask.width(), mask.height()), (3, 4));
    }

    #[test]
    fn png_missing_file_is_file_not_found() {
        let err = load_mask_png(Path::new("/nonexistent/mask.png")).unwrap_err();
        assert!(matches!(err, DataIoError::FileNotFound(_)));
    }

    #[test]
    fn png_rgb_flavor_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rgb.png");
        let file = fs::File::create(&path).unwrap();
        let mut encoder = png::Encoder::new(BufWriter::new(file), 2, 2);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder.write_header().unwrap();
        writer.write_image_data(&[0u8; 12]).unwrap();
        drop(writer);
        assert!(matches!(
            load_mask_png(&path),
            Err(DataIoError::UnsupportedPngFlavor { .. })
        ));
    }

    fn write_minimal_dataset(dir: &Path, manifest_body: &str) -> PathBuf {
        let mask = mask_from(&[(0, 0), (1, 0)], 4, 3);
        save_mask_png(&mask, &dir.join("m.png")).unwrap();
        let manifest_path = dir.join("manifest.json");
        fs::write(&manifest_path, manifest_body).unwrap();
        manifest_path
    }

    #[test]
    fn manifest_minimal_parses() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_minimal_dataset(
            dir.path(),
            r#"{
              "gsd_cm_per_px": 3.13,
              "images": [{
                "id": "img0", "width": 4, "height": 3,
                "ground_truth": [{"mask_path": "m.png", "type_code": "CM2"}],
                "detections": [{"mask_path": "m.png", "score": 0.9}]
              }]
            }"#,
        );
        let manifest = DatasetManifest::load(&path).unwrap();
        assert_eq!(manifest.images().len(), 1);
        assert!((manifest.gsd().cm_per_px() - 3.13).abs() < 1e-12);
        let image = &manifest.images()[0];
        let mask = manifest.load_image_mask(image, "m.png").unwrap();
        assert_eq!(mask.pixel_count(), 2);
    }

    #[test]
    fn manifest_camera_block_resolves_gsd() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_minimal_dataset(
            dir.path(),
            r#"{
              "camera": {"sensor_width_mm": 12.75, "altitude_m": 120.0,
                         "focal_length_mm": 10.6, "image_width_px": 4608},
              "images": []
            }"#,
        );
        let manifest = DatasetManifest::load(&path).unwrap();
        assert!((manifest.gsd().cm_per_px() - 3.13).abs() < 0.005);
    }

    #[test]
    fn manifest_negative_score_is_a_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_minimal_dataset(
            dir.path(),
            r#"{
              "gsd_cm_per_px": 3.13,
              "images": [{
                "id": "img0", "width": 4, "height": 3,
                "ground_truth": [],
                "detections": [{"mask_path": "m.png", "score": -0.1}]
              }]
            }"#,
        );
        let err = DatasetManifest::load(&path).unwrap_err();
        match err {
            DataIoError::Schema { location, .. } => {
                assert_eq!(location, "images[0].detections[0].score")
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn manifest_unknown_keys_are_rejected_with_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_minimal_dataset(
            dir.path(),
            r#"{"gsd_cm_per_px": 1.0, "extra": 1, "images": []}"#,
        );
        let err = DatasetManifest::load(&path).unwrap_err();
        assert!(matches!(err, DataIoError::Schema { .. }), "{err:?}");
    }

    #[test]
    fn manifest_without_gsd_or_camera_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_minimal_dataset(dir.path(), r#"{"images": []}"#);
        assert!(matches!(
            DatasetManifest::load(&path),
            Err(DataIoError::GsdMissing)
        ));
    }

    #[test]
    fn manifest_missing_mask_file_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_minimal_dataset(
            dir.path(),
            r#"{
              "gsd_cm_per_px": 1.0,
              "images": [{
                "id": "img0", "width": 4, "height": 3,
                "ground_truth": [{"mask_path": "gone.png", "type_code": "CM2"}],
                "detections": []
              }]
            }"#,
        );
        assert!(matches!(
            DatasetManifest::load(&path),
            Err(DataIoError::MissingMaskFile { .. })
        ));
    }
}
