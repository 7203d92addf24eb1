//! Python bindings: masks, ground-sample-distance conversions, type
//! classification, and dataset evaluation.
//!
//! Build with `cargo build -p apronid-py`, then rename the produced
//! `libapronid_py.so` to `apronid_py.so` somewhere on `sys.path` (the
//! `python/smoke_test.py` script does this automatically).

use std::path::Path;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use apronid_core::dataio;
use apronid_core::evaluation;
use apronid_core::geometry::{self, PixelMask, PixelPoint};
use apronid_core::identification;
use apronid_core::photogrammetry::{self, CameraModel, GroundSampleDistance};
use apronid_core::synthkit;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn io_err(e: impl std::fmt::Display) -> PyErr {
    PyIOError::new_err(e.to_string())
}

fn gsd_from(cm_per_px: f64) -> PyResult<GroundSampleDistance> {
    GroundSampleDistance::from_cm_per_px(cm_per_px).map_err(value_err)
}

/// Binary foreground mask for one object instance.
#[pyclass(name = "Mask")]
struct PyMask {
    inner: PixelMask,
}

#[pymethods]
impl PyMask {
    /// Mask from a set of (x, y) foreground pixels inside width x height.
    #[new]
    fn new(width: u32, height: u32, points: Vec<(i64, i64)>) -> PyResult<Self> {
        let points = points
            .into_iter()
            .map(|(x, y)| PixelPoint::new(x, y))
            .collect();
        Ok(Self {
            inner: PixelMask::new(width, height, points).map_err(value_err)?,
        })
    }

    /// Loads a mask file; `.png` (8-bit grayscale) or `.rle` text.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: dataio::load_mask(Path::new(path)).map_err(io_err)?,
        })
    }

    #[staticmethod]
    fn from_rle_text(text: &str) -> PyResult<Self> {
        let rle = dataio::RleMask::from_text(text).map_err(value_err)?;
        Ok(Self {
            inner: dataio::rle_decode(&rle).map_err(value_err)?,
        })
    }

    #[getter]
    fn width(&self) -> u32 {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> u32 {
        self.inner.height()
    }

    fn pixel_count(&self) -> usize {
        self.inner.pixel_count()
    }

    fn points(&self) -> Vec<(i64, i64)> {
        self.inner.foreground().iter().map(|p| (p.x, p.y)).collect()
    }

    /// Farthest center-to-center pixel distance, in pixels.
    fn diameter_px(&self) -> PyResult<f64> {
        geometry::mask_diameter_px(&self.inner).map_err(value_err)
    }

    /// Convex hull vertices, counter-clockwise from the leftmost point.
    fn hull(&self) -> PyResult<Vec<(i64, i64)>> {
        let hull = geometry::convex_hull_monotone(self.inner.foreground()).map_err(value_err)?;
        Ok(hull.vertices().iter().map(|p| (p.x, p.y)).collect())
    }

    fn iou(&self, other: &PyMask) -> PyResult<f64> {
        evaluation::mask_iou(&self.inner, &other.inner).map_err(value_err)
    }

    fn rle_text(&self) -> String {
        dataio::rle_encode(&self.inner).to_text()
    }

    fn save_png(&self, path: &str) -> PyResult<()> {
        dataio::save_mask_png(&self.inner, Path::new(path)).map_err(io_err)
    }

    fn save_rle(&self, path: &str) -> PyResult<()> {
        dataio::save_mask_rle(&self.inner, Path::new(path)).map_err(io_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Mask({}x{}, {} px)",
            self.inner.width(),
            self.inner.height(),
            self.inner.pixel_count()
        )
    }
}

/// Table of aircraft types: code, full name, actual length in meters.
#[pyclass(name = "TypeDatabase")]
struct PyTypeDatabase {
    inner: identification::TypeDatabase,
}

#[pymethods]
impl PyTypeDatabase {
    /// The built-in table.
    #[new]
    fn new() -> Self {
        Self {
            inner: identification::TypeDatabase::builtin(),
        }
    }

    /// Loads a `code,full_name,actual_length_m` CSV.
    #[staticmethod]
    fn from_csv(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: identification::TypeDatabase::from_csv_path(Path::new(path))
                .map_err(value_err)?,
        })
    }

    fn entries(&self) -> Vec<(String, String, f64)> {
        self.inner
            .entries()
            .iter()
            .map(|e| (e.code.clone(), e.full_name.clone(), e.actual_length_m))
            .collect()
    }

    /// Code of the type whose actual length is nearest to `length_m`.
    fn classify(&self, length_m: f64) -> PyResult<String> {
        if length_m < 0.0 || !length_m.is_finite() {
            return Err(value_err(format!(
                "length must be non-negative and finite, got {length_m}"
            )));
        }
        Ok(self.inner.classify_by_length(length_m).code.clone())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Ground sample distance in cm/px from camera parameters.
#[pyfunction]
fn compute_gsd_cm_per_px(
    sensor_width_mm: f64,
    altitude_m: f64,
    focal_length_mm: f64,
    image_width_px: u32,
) -> PyResult<f64> {
    let camera = CameraModel::new(sensor_width_mm, altitude_m, focal_length_mm, image_width_px)
        .map_err(value_err)?;
    Ok(photogrammetry::compute_gsd(&camera)
        .map_err(value_err)?
        .cm_per_px())
}

/// Ground surface area of a pixel count, in square meters.
#[pyfunction]
fn surface_area_m2(pixel_count: usize, gsd_cm_per_px: f64) -> PyResult<f64> {
    Ok(photogrammetry::surface_area_m2(
        pixel_count,
        gsd_from(gsd_cm_per_px)?,
    ))
}

/// Ground length of a pixel-space distance, in meters.
#[pyfunction]
fn length_m(diameter_px: f64, gsd_cm_per_px: f64) -> PyResult<f64> {
    if diameter_px < 0.0 {
        return Err(value_err("diameter_px must be non-negative"));
    }
    Ok(photogrammetry::length_m(
        diameter_px,
        gsd_from(gsd_cm_per_px)?,
    ))
}

/// Measures a mask and identifies its type: (length_m, area_m2, type_code).
#[pyfunction]
#[pyo3(signature = (mask, gsd_cm_per_px, db=None))]
fn identify(
    mask: &PyMask,
    gsd_cm_per_px: f64,
    db: Option<&PyTypeDatabase>,
) -> PyResult<(f64, f64, String)> {
    let gsd = gsd_from(gsd_cm_per_px)?;
    let diameter = geometry::mask_diameter_px(&mask.inner).map_err(value_err)?;
    let length = photogrammetry::length_m(diameter, gsd);
    let area = photogrammetry::surface_area_m2(mask.inner.pixel_count(), gsd);
    let builtin;
    let db = match db {
        Some(db) => &db.inner,
        None => {
            builtin = identification::TypeDatabase::builtin();
            &builtin
        }
    };
    Ok((length, area, db.classify_by_length(length).code.clone()))
}

/// Evaluates a dataset manifest; returns the report as a JSON string.
#[pyfunction]
#[pyo3(signature = (manifest_path, types_csv=None))]
fn evaluate_manifest(manifest_path: &str, types_csv: Option<&str>) -> PyResult<String> {
    let manifest = dataio::DatasetManifest::load(Path::new(manifest_path)).map_err(io_err)?;
    let db = match types_csv {
        Some(p) => identification::TypeDatabase::from_csv_path(Path::new(p)).map_err(value_err)?,
        None => identification::TypeDatabase::builtin(),
    };
    let report = evaluation::evaluate_dataset(&manifest, &db).map_err(value_err)?;
    Ok(report.to_json())
}

/// Writes a synthetic labeled dataset; returns the manifest path.
#[pyfunction]
#[pyo3(signature = (out_dir, per_type, noise, gsd_cm_per_px, seed, types_csv=None))]
fn synth_dataset(
    out_dir: &str,
    per_type: usize,
    noise: f64,
    gsd_cm_per_px: f64,
    seed: u64,
    types_csv: Option<&str>,
) -> PyResult<String> {
    let db = match types_csv {
        Some(p) => identification::TypeDatabase::from_csv_path(Path::new(p)).map_err(value_err)?,
        None => identification::TypeDatabase::builtin(),
    };
    let gsd = gsd_from(gsd_cm_per_px)?;
    synthkit::synth_dataset(&db, per_type, noise, gsd, seed, Path::new(out_dir))
        .map_err(value_err)?;
    Ok(synthkit::manifest_path(Path::new(out_dir))
        .display()
        .to_string())
}

#[pymodule]
fn apronid_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMask>()?;
    m.add_class::<PyTypeDatabase>()?;
    m.add_function(wrap_pyfunction!(compute_gsd_cm_per_px, m)?)?;
    m.add_function(wrap_pyfunction!(surface_area_m2, m)?)?;
    m.add_function(wrap_pyfunction!(length_m, m)?)?;
    m.add_function(wrap_pyfunction!(identify, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_manifest, m)?)?;
    m.add_function(wrap_pyfunction!(synth_dataset, m)?)?;
    Ok(())
}
