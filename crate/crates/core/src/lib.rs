//! Aircraft type identification from overhead instance masks.
//!
//! The pipeline runs from a binary instance mask and camera parameters to a
//! type label: count covered pixels and take the mask's convex hull, measure
//! the farthest pixel pair with rotating calipers, convert to ground units
//! through the ground sample distance, and assign the nearest published
//! aircraft length. Around that sit the evaluation tools (COCO-style
//! detection metrics, per-type length accuracy, confusion matrix), file
//! formats for masks and dataset manifests, and a synthetic dataset
//! generator with enumerated ground truth.

pub mod dataio;
pub mod evaluation;
pub mod geometry;
pub mod identification;
pub mod photogrammetry;
pub mod synthkit;

pub use dataio::{DataIoError, DatasetManifest, RleMask};
pub use evaluation::{
    CocoMetrics, ConfusionMatrix, DetectionRecord, EvalError, EvalReport, GroundTruthRecord,
};
pub use geometry::{ConvexHull, GeometryError, PixelMask, PixelPoint};
pub use identification::{AircraftType, TypeDatabase, TypeDbError};
pub use photogrammetry::{CameraModel, GroundSampleDistance, PhotogrammetryError};
pub use synthkit::{SynthError, SynthShape, SynthSpec, SynthTruth};
