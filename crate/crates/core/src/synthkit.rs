//! Synthetic masks with known ground truth, for property tests and
//! desk-scale end-to-end runs.
//!
//! Shapes are rasterized by pixel-center inclusion: a pixel belongs to the
//! mask iff its center lies inside the closed shape. The shape center sits
//! at (0.25, 0.25) relative to the pixel grid so axis-aligned extents never
//! land exactly on pixel centers and rasterized sizes are stable. All three
//! shapes are symmetric under 180-degree rotation about their center, so a
//! heading and its opposite rasterize identically. The recorded truth is
//! measured on the rasterized mask, not the continuous shape.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataio::{
    manifest_to_json, save_mask_png, DataIoError, DatasetManifest, DetectionEntry,
    GroundTruthEntry, ImageEntry, ManifestDoc,
};
use crate::geometry::{dist_sq, PixelMask, PixelPoint};
use crate::identification::TypeDatabase;
use crate::photogrammetry::GroundSampleDistance;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth spec: {0}")]
    InvalidSpec(String),
    #[error("shape rasterizes to zero pixels at {cm_per_px} cm/px")]
    DegenerateSpec { cm_per_px: f64 },
    #[error(transparent)]
    Io(#[from] DataIoError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthShape {
    Rectangle,
    /// Axes `length_m` by `secondary_m`.
    Ellipse,
    /// Plane-like: a fuselage `length_m` long plus a centered wing bar
    /// spanning `secondary_m`.
    Cross,
}

/// Recipe for one synthetic mask. `length_m` must cover `secondary_m` for
/// rectangles and ellipses; for crosses the recorded ground-truth diameter
/// is whichever of fuselage length and wingspan is larger. The seed rides
/// along for dataset-level bookkeeping; rasterization itself is canonical
/// and fully deterministic.
#[derive(Debug, Clone, Copy)]
pub struct SynthSpec {
    pub shape: SynthShape,
    pub length_m: f64,
    pub secondary_m: f64,
    pub heading_deg: f64,
    pub gsd: GroundSampleDistance,
    pub seed: u64,
}

/// Ground truth enumerated from the rasterized mask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthTruth {
    pub diameter_px: f64,
    pub pixel_count: usize,
}

/// Shape center offset from the integer pixel grid.
const ANCHOR: f64 = 0.25;

/// Rasterizes a spec into a tight mask (its bounding box) plus enumerated
/// truth. Deterministic for identical specs.
pub fn synth_mask(spec: &SynthSpec) -> Result<(PixelMask, SynthTruth), SynthError> {
    if spec.length_m <= 0.0
        || spec.secondary_m <= 0.0
        || !spec.length_m.is_finite()
        || !spec.secondary_m.is_finite()
    {
        return Err(SynthError::InvalidSpec(format!(
            "dimensions must be positive, got {} x {}",
            spec.length_m, spec.secondary_m
        )));
    }
    if matches!(spec.shape, SynthShape::Rectangle | SynthShape::Ellipse)
        && spec.length_m < spec.secondary_m
    {
        return Err(SynthError::InvalidSpec(format!(
            "length {} must cover secondary dimension {}",
            spec.length_m, spec.secondary_m
        )));
    }

    let m_per_px = spec.gsd.m_per_px();
    let len = spec.length_m / m_per_px;
    let sec = spec.secondary_m / m_per_px;
    let heading = spec.heading_deg.to_radians();
    let (sin, cos) = heading.sin_cos();

    // Fuselage width and wing chord as fractions of the length, with a
    // floor so thin shapes still rasterize a pixel row.
    let fuselage_w = (0.05 * len).max(1.25);
    let chord = (0.14 * len).max(1.25);

    let inside = |dx: f64, dy: f64| -> bool {
        let u = cos * dx + sin * dy;
        let v = -sin * dx + cos * dy;
        match spec.shape {
            SynthShape::Rectangle => u.abs() <= len / 2.0 && v.abs() <= sec / 2.0,
            SynthShape::Ellipse => {
                let a = len / 2.0;
                let b = sec / 2.0;
                (u / a) * (u / a) + (v / b) * (v / b) <= 1.0
            }
            SynthShape::Cross => {
                (u.abs() <= len / 2.0 && v.abs() <= fuselage_w / 2.0)
                    || (u.abs() <= chord / 2.0 && v.abs() <= sec / 2.0)
            }
        }
    };

    let radius = (len * len + sec * sec).sqrt() / 2.0 + 1.0;
    let lo = (ANCHOR - radius).floor() as i64;
    let hi = (ANCHOR + radius).ceil() as i64;
    let mut points = Vec::new();
    for y in lo..=hi {
        for x in lo..=hi {
            if inside(x as f64 - ANCHOR, y as f64 - ANCHOR) {
                points.push(PixelPoint::new(x, y));
            }
        }
    }
    if points.is_empty() {
        return Err(SynthError::DegenerateSpec {
            cm_per_px: spec.gsd.cm_per_px(),
        });
    }

    // Normalize to a tight bounding box anchored at the origin.
    let min_x = points.iter().map(|p| p.x).min().unwrap();
    let min_y = points.iter().map(|p| p.y).min().unwrap();
    let max_x = points.iter().map(|p| p.x).max().unwrap();
    let max_y = points.iter().map(|p| p.y).max().unwrap();
    let points: Vec<PixelPoint> = points
        .into_iter()
        .map(|p| PixelPoint::new(p.x - min_x, p.y - min_y))
        .collect();
    let width = (max_x - min_x + 1) as u32;
    let height = (max_y - min_y + 1) as u32;

    let truth = SynthTruth {
        diameter_px: enumerated_diameter_px(&points),
        pixel_count: points.len(),
    };
    let mask = PixelMask::new(width, height, points).expect("normalized points are in bounds");
    Ok((mask, truth))
}

/// Farthest pixel-center distance by enumeration. For any pair of columns
/// the distance is maximized at the columns' extreme rows, so the farthest
/// pair over the whole mask is realized between per-column extremes.
fn enumerated_diameter_px(points: &[PixelPoint]) -> f64 {
    use std::collections::BTreeMap;
    let mut extremes: BTreeMap<i64, (i64, i64)> = BTreeMap::new();
    for p in points {
        let e = extremes.entry(p.x).or_insert((p.y, p.y));
        e.0 = e.0.min(p.y);
        e.1 = e.1.max(p.y);
    }
    let candidates: Vec<PixelPoint> = extremes
        .iter()
        .flat_map(|(&x, &(lo, hi))| [PixelPoint::new(x, lo), PixelPoint::new(x, hi)])
        .collect();
    let mut best = 0i64;
    for i in 0..candidates.len() {
        for j in i + 1..candidates.len() {
            best = best.max(dist_sq(candidates[i], candidates[j]));
        }
    }
    (best as f64).sqrt()
}

/// Generates a labeled dataset: `per_type_count` instances of every type in
/// the database, each a random shape at a random heading with target length
/// `actual * (1 + u)`, u uniform in [-noise_rel, +noise_rel]. Detections
/// duplicate the ground truth with score 1.0. Masks are written as PNGs and
/// the manifest as `manifest.json` under `out_dir`; a fixed seed reproduces
/// the dataset byte for byte.
pub fn synth_dataset(
    db: &TypeDatabase,
    per_type_count: usize,
    noise_rel: f64,
    gsd: GroundSampleDistance,
    seed: u64,
    out_dir: &Path,
) -> Result<DatasetManifest, SynthError> {
    if !(0.0..0.5).contains(&noise_rel) {
        return Err(SynthError::InvalidSpec(format!(
            "noise_rel must lie in [0, 0.5), got {noise_rel}"
        )));
    }
    let masks_dir = out_dir.join("masks");
    std::fs::create_dir_all(&masks_dir).map_err(|e| DataIoError::Io {
        path: masks_dir.clone(),
        source: e,
    })?;

    let mut images = Vec::with_capacity(db.len() * per_type_count);
    for (type_idx, entry) in db.entries().iter().enumerate() {
        for k in 0..per_type_count {
            let instance = (type_idx * per_type_count + k) as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(instance + 1);

            let u: f64 = rng.random_range(-1.0..=1.0) * noise_rel;
            let heading: f64 = rng.random_range(0.0..360.0);
            let shape = match rng.random_range(0u32..3) {
                0 => SynthShape::Rectangle,
                1 => SynthShape::Ellipse,
                _ => SynthShape::Cross,
            };
            let target_m = entry.actual_length_m * (1.0 + u);
            // Center-to-center measurement spans one pixel less than the
            // pixel count; size the shape one GSD up to compensate.
            let length_m = target_m + gsd.m_per_px();
            let secondary_m = match shape {
                SynthShape::Rectangle | SynthShape::Ellipse => {
                    length_m * rng.random_range(0.04..0.07)
                }
                SynthShape::Cross => length_m * rng.random_range(0.70..0.85),
            };
            let spec = SynthSpec {
                shape,
                length_m,
                secondary_m,
                heading_deg: heading,
                gsd,
                seed: seed ^ instance,
            };
            let (mask, _truth) = synth_mask(&spec)?;

            let margin_left: u32 = rng.random_range(2..18);
            let margin_top: u32 = rng.random_range(2..18);
            let margin_right: u32 = rng.random_range(2..18);
            let margin_bottom: u32 = rng.random_range(2..18);
            let canvas_w = mask.width() + margin_left + margin_right;
            let canvas_h = mask.height() + margin_top + margin_bottom;
            let placed: Vec<PixelPoint> = mask
                .foreground()
                .iter()
                .map(|p| PixelPoint::new(p.x + i64::from(margin_left), p.y + i64::from(margin_top)))
                .collect();
            let placed =
                PixelMask::new(canvas_w, canvas_h, placed).expect("placed points are in bounds");

            let image_id = format!("{}_{:03}", entry.code, k);
            let mask_rel = format!("masks/{image_id}.png");
            save_mask_png(&placed, &out_dir.join(&mask_rel))?;
            images.push(ImageEntry {
                id: image_id,
                width: canvas_w,
                height: canvas_h,
                ground_truth: vec![GroundTruthEntry {
                    mask_path: mask_rel.clone(),
                    type_code: entry.code.clone(),
                }],
                detections: vec![DetectionEntry {
                    mask_path: mask_rel,
                    score: 1.0,
                }],
            });
        }
    }

    let doc = ManifestDoc {
        gsd_cm_per_px: Some(gsd.cm_per_px()),
        camera: None,
        images,
    };
    let manifest_path = out_dir.join("manifest.json");
    std::fs::write(&manifest_path, manifest_to_json(&doc)).map_err(|e| DataIoError::Io {
        path: manifest_path.clone(),
        source: e,
    })?;
    Ok(DatasetManifest::load(&manifest_path)?)
}

/// Path of the manifest written by [`synth_dataset`] for a given directory.
pub fn manifest_path(out_dir: &Path) -> PathBuf {
    out_dir.join("manifest.json")
}
