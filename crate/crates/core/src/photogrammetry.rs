//! Pixel-to-ground conversions via ground sample distance.
//!
//! The GSD of a nadir frame is `sensor_width_mm * altitude_m * 100 /
//! (focal_length_mm * image_width_px)`, in cm per pixel. Lengths convert
//! linearly through it and areas through its square. Outputs are in meters
//! and square meters; no rounding happens here.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhotogrammetryError {
    #[error("camera parameter {name} must be positive, got {value}")]
    InvalidCamera { name: &'static str, value: f64 },
    #[error("ground sample distance must be positive, got {0}")]
    InvalidGsd(f64),
}

/// Nadir camera geometry: sensor width, flight altitude, focal length, and
/// frame width in pixels. All fields must be strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraModel {
    pub sensor_width_mm: f64,
    pub altitude_m: f64,
    pub focal_length_mm: f64,
    pub image_width_px: u32,
}

impl CameraModel {
    pub fn new(
        sensor_width_mm: f64,
        altitude_m: f64,
        focal_length_mm: f64,
        image_width_px: u32,
    ) -> Result<Self, PhotogrammetryError> {
        let camera = Self {
            sensor_width_mm,
            altitude_m,
            focal_length_mm,
            image_width_px,
        };
        camera.validate()?;
        Ok(camera)
    }

    pub fn validate(&self) -> Result<(), PhotogrammetryError> {
        let checks = [
            ("sensor_width_mm", self.sensor_width_mm),
            ("altitude_m", self.altitude_m),
            ("focal_length_mm", self.focal_length_mm),
            ("image_width_px", f64::from(self.image_width_px)),
        ];
        for (name, value) in checks {
            if value <= 0.0 || !value.is_finite() {
                return Err(PhotogrammetryError::InvalidCamera { name, value });
            }
        }
        Ok(())
    }
}

/// Ground length covered by one pixel, stored in cm/px.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundSampleDistance {
    cm_per_px: f64,
}

impl GroundSampleDistance {
    pub fn from_cm_per_px(cm_per_px: f64) -> Result<Self, PhotogrammetryError> {
        if cm_per_px <= 0.0 || !cm_per_px.is_finite() {
            return Err(PhotogrammetryError::InvalidGsd(cm_per_px));
        }
        Ok(Self { cm_per_px })
    }

    pub fn cm_per_px(&self) -> f64 {
        self.cm_per_px
    }

    pub fn m_per_px(&self) -> f64 {
        self.cm_per_px / 100.0
    }
}

/// Ground sample distance of a camera, in cm/px.
pub fn compute_gsd(camera: &CameraModel) -> Result<GroundSampleDistance, PhotogrammetryError> {
    camera.validate()?;
    let cm_per_px = camera.sensor_width_mm * camera.altitude_m * 100.0
        / (camera.focal_length_mm * f64::from(camera.image_width_px));
    GroundSampleDistance::from_cm_per_px(cm_per_px)
}

/// Ground surface area covered by `pixel_count` pixels, in square meters.
pub fn surface_area_m2(pixel_count: usize, gsd: GroundSampleDistance) -> f64 {
    let m = gsd.m_per_px();
    pixel_count as f64 * m * m
}

/// Ground length of a pixel-space distance, in meters.
pub fn length_m(diameter_px: f64, gsd: GroundSampleDistance) -> f64 {
    debug_assert!(diameter_px >= 0.0);
    diameter_px * gsd.m_per_px()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn survey_camera() -> CameraModel {
        CameraModel::new(12.75, 120.0, 10.6, 4608).unwrap()
    }

    #[test]
    fn gsd_of_the_survey_camera() {
        let gsd = compute_gsd(&survey_camera()).unwrap();
        assert!(
            (gsd.cm_per_px() - 3.13).abs() < 0.005,
            "{}",
            gsd.cm_per_px()
        );
    }

    #[test]
    fn gsd_unit_cancelling_case() {
        let gsd = compute_gsd(&CameraModel::new(10.0, 1.0, 10.0, 100).unwrap()).unwrap();
        assert_eq!(gsd.cm_per_px(), 1.0);
    }

    #[test]
    fn gsd_direct_substitution() {
        // 35 * 100 * 100 / (50 * 7000) = 1.0
        let gsd = compute_gsd(&CameraModel::new(35.0, 100.0, 50.0, 7000).unwrap()).unwrap();
        assert!((gsd.cm_per_px() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_camera_fields_are_rejected() {
        assert!(matches!(
            CameraModel::new(0.0, 120.0, 10.6, 4608),
            Err(PhotogrammetryError::InvalidCamera {
                name: "sensor_width_mm",
                ..
            })
        ));
        assert!(matches!(
            CameraModel::new(12.75, -1.0, 10.6, 4608),
            Err(PhotogrammetryError::InvalidCamera {
                name: "altitude_m",
                ..
            })
        ));
        assert!(matches!(
            CameraModel::new(12.75, 120.0, 10.6, 0),
            Err(PhotogrammetryError::InvalidCamera {
                name: "image_width_px",
                ..
            })
        ));
    }

    #[test]
    fn surface_area_cases() {
        let gsd = GroundSampleDistance::from_cm_per_px(100.0).unwrap();
        assert_eq!(surface_area_m2(0, gsd), 0.0);
        assert_eq!(surface_area_m2(1, gsd), 1.0);

        let gsd = GroundSampleDistance::from_cm_per_px(3.13).unwrap();
        let area = surface_area_m2(10_000, gsd);
        let expected = 10_000.0 * 0.0313 * 0.0313;
        assert!((area - expected).abs() / expected < 1e-9);
    }

    #[test]
    fn length_cases() {
        let gsd = GroundSampleDistance::from_cm_per_px(3.13).unwrap();
        assert_eq!(length_m(0.0, gsd), 0.0);
        assert!((length_m(1118.21, gsd) - 35.0).abs() < 0.01);

        let coarse = GroundSampleDistance::from_cm_per_px(100.0).unwrap();
        assert_eq!(length_m(100.0, coarse), 100.0);
    }

    #[test]
    fn gsd_scaling_is_homogeneous() {
        let base = survey_camera();
        let gsd = compute_gsd(&base).unwrap().cm_per_px();

        let double_alt = CameraModel {
            altitude_m: base.altitude_m * 2.0,
            ..base
        };
        assert!((compute_gsd(&double_alt).unwrap().cm_per_px() - 2.0 * gsd).abs() < 1e-12);

        let double_fl = CameraModel {
            focal_length_mm: base.focal_length_mm * 2.0,
            ..base
        };
        assert!((compute_gsd(&double_fl).unwrap().cm_per_px() - gsd / 2.0).abs() < 1e-12);

        let double_w = CameraModel {
            image_width_px: base.image_width_px * 2,
            ..base
        };
        assert!((compute_gsd(&double_w).unwrap().cm_per_px() - gsd / 2.0).abs() < 1e-12);
    }

    #[test]
    fn length_round_trips_through_pixels() {
        let gsd = GroundSampleDistance::from_cm_per_px(3.13).unwrap();
        for x in [0.5, 13.0, 35.0, 73.0, 1234.5] {
            let back = length_m(x / gsd.m_per_px(), gsd);
            assert!((back - x).abs() / x < 1e-12);
        }
    }
}
