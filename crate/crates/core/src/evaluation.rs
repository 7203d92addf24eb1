//! Detection and identification metrics: mask IoU, greedy matching, the
//! twelve-number COCO-style summary, per-type length accuracy, and the
//! confusion matrix.
//!
//! IoU thresholds are derived from integer percents (50, 55, ..., 95) so
//! that rational IoU values such as 3/5 compare exactly against them.
//! Average precision uses 101-point interpolated precision; average recall
//! caps detections per image at 1, 10, and 100. Area buckets follow the
//! COCO convention but are measured on mask pixel counts: small below 32*32,
//! medium up to 96*96 inclusive, large above. A bucket with no ground truth
//! reports the sentinel -1.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::dataio::{DataIoError, DatasetManifest};
use crate::geometry::{mask_diameter_px, PixelMask};
use crate::identification::TypeDatabase;
use crate::photogrammetry::length_m;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("mask dimensions differ: {a_w}x{a_h} vs {b_w}x{b_h}")]
    DimensionMismatch {
        a_w: u32,
        a_h: u32,
        b_w: u32,
        b_h: u32,
    },
    #[error("cannot average an empty sample")]
    EmptySample,
    #[error("actual length must be positive, got {0}")]
    NonPositiveActual(f64),
    #[error("type code {0:?} is not in the type database")]
    UnknownCode(String),
    #[error("confidence score {0} is outside [0, 1]")]
    InvalidScore(f64),
    #[error("record for image {0:?} has an empty mask")]
    EmptyMaskRecord(String),
    #[error(transparent)]
    Data(#[from] DataIoError),
}

/// One detected instance: its image, mask, and confidence score in [0, 1].
#[derive(Debug, Clone)]
pub struct DetectionRecord {
    pub image_id: String,
    pub mask: PixelMask,
    pub score: f64,
}

impl DetectionRecord {
    pub fn new(image_id: String, mask: PixelMask, score: f64) -> Result<Self, EvalError> {
        if !(0.0..=1.0).contains(&score) || !score.is_finite() {
            return Err(EvalError::InvalidScore(score));
        }
        if mask.is_empty() {
            return Err(EvalError::EmptyMaskRecord(image_id));
        }
        Ok(Self {
            image_id,
            mask,
            score,
        })
    }
}

/// One annotated instance: its image, mask, and true type code.
#[derive(Debug, Clone)]
pub struct GroundTruthRecord {
    pub image_id: String,
    pub mask: PixelMask,
    pub type_code: String,
}

impl GroundTruthRecord {
    pub fn new(image_id: String, mask: PixelMask, type_code: String) -> Result<Self, EvalError> {
        if mask.is_empty() {
            return Err(EvalError::EmptyMaskRecord(image_id));
        }
        Ok(Self {
            image_id,
            mask,
            type_code,
        })
    }
}

/// The twelve-number COCO-style summary. Values lie in [0, 1]; a bucket with
/// no ground truth reports -1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CocoMetrics {
    pub ap: f64,
    pub ap50: f64,
    pub ap75: f64,
    pub ap_small: f64,
    pub ap_medium: f64,
    pub ap_large: f64,
    pub ar_max1: f64,
    pub ar_max10: f64,
    pub ar_max100: f64,
    pub ar_small: f64,
    pub ar_medium: f64,
    pub ar_large: f64,
}

/// IoU thresholds 0.50:0.05:0.95, derived from integer percents so rational
/// IoU values compare exactly.
pub fn iou_thresholds() -> [f64; 10] {
    let mut out = [0.0; 10];
    for (i, t) in out.iter_mut().enumerate() {
        *t = (50 + 5 * i) as f64 / 100.0;
    }
    out
}

/// Intersection over union of two foreground pixel sets.
pub fn mask_iou(a: &PixelMask, b: &PixelMask) -> Result<f64, EvalError> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(EvalError::DimensionMismatch {
            a_w: a.width(),
            a_h: a.height(),
            b_w: b.width(),
            b_h: b.height(),
        });
    }
    let (fa, fb) = (a.foreground(), b.foreground());
    let mut intersection = 0usize;
    let (mut i, mut j) = (0usize, 0usize);
    while i < fa.len() && j < fb.len() {
        let ka = (fa[i].y, fa[i].x);
        let kb = (fb[j].y, fb[j].x);
        match ka.cmp(&kb) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                intersection += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = fa.len() + fb.len() - intersection;
    if union == 0 {
        return Ok(0.0);
    }
    Ok(intersection as f64 / union as f64)
}

// ---------------------------------------------------------------------------
// Greedy matching

/// Outcome of one detection within its image scene.
#[derive(Debug, Clone, Copy)]
struct MatchOutcome {
    /// Scene-local index of the matched ground truth, if any.
    gt: Option<usize>,
    /// Ignored detections count as neither true nor false positives.
    ignored: bool,
}

impl MatchOutcome {
    fn is_tp(self) -> bool {
        self.gt.is_some() && !self.ignored
    }
}

/// Per-image evaluation state shared by all thresholds and buckets.
#[derive(Default)]
struct Scene {
    /// Global detection indices, sorted by score descending (input order on
    /// ties).
    det_global: Vec<usize>,
    det_scores: Vec<f64>,
    det_areas: Vec<usize>,
    gt_global: Vec<usize>,
    gt_areas: Vec<usize>,
    /// IoU matrix indexed `[det position][gt position]`.
    iou: Vec<Vec<f64>>,
}

fn build_scenes(dets: &[DetectionRecord], gts: &[GroundTruthRecord]) -> Vec<Scene> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut scenes: Vec<Scene> = Vec::new();
    fn scene_of(index: &mut HashMap<String, usize>, scenes: &mut Vec<Scene>, id: &str) -> usize {
        if let Some(&i) = index.get(id) {
            i
        } else {
            scenes.push(Scene::default());
            index.insert(id.to_string(), scenes.len() - 1);
            scenes.len() - 1
        }
    }
    for (gi, g) in gts.iter().enumerate() {
        let s = scene_of(&mut index, &mut scenes, &g.image_id);
        scenes[s].gt_global.push(gi);
        scenes[s].gt_areas.push(g.mask.pixel_count());
    }
    for (di, d) in dets.iter().enumerate() {
        let s = scene_of(&mut index, &mut scenes, &d.image_id);
        scenes[s].det_global.push(di);
    }
    for scene in &mut scenes {
        scene
            .det_global
            .sort_by(|&a, &b| dets[b].score.partial_cmp(&dets[a].score).unwrap());
        scene.det_scores = scene.det_global.iter().map(|&d| dets[d].score).collect();
        scene.det_areas = scene
            .det_global
            .iter()
            .map(|&d| dets[d].mask.pixel_count())
            .collect();
        scene.iou = scene
            .det_global
            .iter()
            .map(|&d| {
                scene
                    .gt_global
                    .iter()
                    .map(|&g| {
                        mask_iou(&dets[d].mask, &gts[g].mask)
                            .expect("masks within an image share dimensions")
                    })
                    .collect()
            })
            .collect();
    }
    scenes
}

/// Greedy per-image matching: detections in score order each take the
/// not-yet-matched ground truth of highest IoU at or above the threshold.
/// Equal IoU resolves to the earlier ground truth; a match to a considered
/// ground truth is never traded for an ignored one.
fn match_scene(scene: &Scene, gt_considered: &[bool], threshold: f64) -> Vec<MatchOutcome> {
    let n_gt = scene.gt_global.len();
    let mut order: Vec<usize> = (0..n_gt).filter(|&g| gt_considered[g]).collect();
    order.extend((0..n_gt).filter(|&g| !gt_considered[g]));
    let mut taken = vec![false; n_gt];
    let mut outcomes = Vec::with_capacity(scene.det_global.len());
    for d in 0..scene.det_global.len() {
        let mut best: Option<(usize, f64)> = None;
        for &g in &order {
            if taken[g] {
                continue;
            }
            if let Some((bg, _)) = best {
                if gt_considered[bg] && !gt_considered[g] {
                    break;
                }
            }
            let iou = scene.iou[d][g];
            if iou < threshold {
                continue;
            }
            match best {
                Some((_, best_iou)) if iou <= best_iou => {}
                _ => best = Some((g, iou)),
            }
        }
        let outcome = match best {
            Some((g, _)) => {
                taken[g] = true;
                MatchOutcome {
                    gt: Some(g),
                    ignored: !gt_considered[g],
                }
            }
            None => MatchOutcome {
                gt: None,
                ignored: false,
            },
        };
        outcomes.push(outcome);
    }
    outcomes
}

/// One detection paired with the ground truth it matched, if any. Indices
/// refer to the input slices of [`match_detections`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectionMatch {
    pub detection: usize,
    pub ground_truth: Option<usize>,
}

/// Greedy detection-to-ground-truth matching at a single IoU threshold,
/// image by image. Returns one entry per detection, in input order;
/// detections left unmatched are false positives and unmatched ground
/// truths false negatives. Masks within an image must share dimensions.
pub fn match_detections(
    dets: &[DetectionRecord],
    gts: &[GroundTruthRecord],
    iou_threshold: f64,
) -> Vec<DetectionMatch> {
    debug_assert!(iou_threshold > 0.0 && iou_threshold <= 1.0);
    let scenes = build_scenes(dets, gts);
    let mut matches = Vec::with_capacity(dets.len());
    for scene in &scenes {
        let considered = vec![true; scene.gt_global.len()];
        let outcomes = match_scene(scene, &considered, iou_threshold);
        for (pos, outcome) in outcomes.iter().enumerate() {
            matches.push(DetectionMatch {
                detection: scene.det_global[pos],
                ground_truth: outcome.gt.map(|g| scene.gt_global[g]),
            });
        }
    }
    matches.sort_by_key(|m| m.detection);
    matches
}

// ---------------------------------------------------------------------------
// COCO-style summary

const SMALL_LIMIT: usize = 32 * 32;
const MEDIUM_LIMIT: usize = 96 * 96;
/// Detections per image used for all AP metrics and the bucketed AR ones.
const AP_MAX_DETS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
enum AreaBucket {
    All,
    Small,
    Medium,
    Large,
}

impl AreaBucket {
    fn contains(self, pixel_count: usize) -> bool {
        match self {
            AreaBucket::All => true,
            AreaBucket::Small => pixel_count < SMALL_LIMIT,
            AreaBucket::Medium => (SMALL_LIMIT..=MEDIUM_LIMIT).contains(&pixel_count),
            AreaBucket::Large => pixel_count > MEDIUM_LIMIT,
        }
    }
}

/// Matching results for one bucket: outcomes per threshold per scene, plus
/// the number of in-bucket ground truths.
struct BucketEval {
    num_gt: usize,
    /// `[threshold][scene][det position]`
    outcomes: Vec<Vec<Vec<MatchOutcome>>>,
}

fn eval_bucket(scenes: &[Scene], bucket: AreaBucket) -> BucketEval {
    let considered: Vec<Vec<bool>> = scenes
        .iter()
        .map(|s| s.gt_areas.iter().map(|&a| bucket.contains(a)).collect())
        .collect();
    let num_gt = considered
        .iter()
        .map(|c| c.iter().filter(|&&x| x).count())
        .sum();
    let outcomes = iou_thresholds()
        .iter()
        .map(|&t| {
            scenes
                .iter()
                .zip(&considered)
                .map(|(scene, cons)| {
                    let mut outs = match_scene(scene, cons, t);
                    // Unmatched detections outside the bucket by their own
                    // pixel count do not count as false positives there.
                    if bucket != AreaBucket::All {
                        for (pos, out) in outs.iter_mut().enumerate() {
                            if out.gt.is_none() && !bucket.contains(scene.det_areas[pos]) {
                                out.ignored = true;
                            }
                        }
                    }
                    outs
                })
                .collect()
        })
        .collect();
    BucketEval { num_gt, outcomes }
}

/// 101-point interpolated average precision: precision at recall r is the
/// maximum precision at any recall >= r, sampled at r = 0.00, 0.01, ..., 1.00.
fn average_precision_101(mut entries: Vec<(f64, usize, bool)>, num_gt: usize) -> f64 {
    debug_assert!(num_gt > 0);
    entries.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let mut precision = Vec::with_capacity(entries.len());
    let mut recall = Vec::with_capacity(entries.len());
    let (mut tp, mut fp) = (0usize, 0usize);
    for &(_, _, is_tp) in &entries {
        if is_tp {
            tp += 1;
        } else {
            fp += 1;
        }
        precision.push(tp as f64 / (tp + fp) as f64);
        recall.push(tp as f64 / num_gt as f64);
    }
    for k in (0..precision.len().saturating_sub(1)).rev() {
        precision[k] = precision[k].max(precision[k + 1]);
    }
    let mut sum = 0.0;
    let mut k = 0;
    for r_pct in 0..=100u32 {
        let r = f64::from(r_pct) / 100.0;
        while k < recall.len() && recall[k] < r {
            k += 1;
        }
        if k < recall.len() {
            sum += precision[k];
        }
    }
    sum / 101.0
}

fn bucket_ap(scenes: &[Scene], eval: &BucketEval, t_idx: usize) -> f64 {
    if eval.num_gt == 0 {
        return -1.0;
    }
    let mut entries = Vec::new();
    let mut tiebreak = 0usize;
    for (s, scene) in scenes.iter().enumerate() {
        let outs = &eval.outcomes[t_idx][s];
        for (pos, out) in outs.iter().take(AP_MAX_DETS).enumerate() {
            tiebreak += 1;
            if out.ignored {
                continue;
            }
            entries.push((scene.det_scores[pos], tiebreak, out.is_tp()));
        }
    }
    average_precision_101(entries, eval.num_gt)
}

fn bucket_recall(eval: &BucketEval, t_idx: usize, max_dets: usize) -> f64 {
    if eval.num_gt == 0 {
        return -1.0;
    }
    let tp: usize = eval.outcomes[t_idx]
        .iter()
        .map(|outs| outs.iter().take(max_dets).filter(|o| o.is_tp()).count())
        .sum();
    tp as f64 / eval.num_gt as f64
}

fn mean_over_thresholds(f: impl Fn(usize) -> f64) -> f64 {
    let n = iou_thresholds().len();
    let vals: Vec<f64> = (0..n).map(f).collect();
    if vals.iter().any(|&v| v < 0.0) {
        return -1.0;
    }
    vals.iter().sum::<f64>() / n as f64
}

/// Evaluates detections against ground truth and returns the twelve-number
/// summary. Masks within an image must share dimensions; with no ground
/// truth at all, every metric is the sentinel -1.
pub fn coco_evaluate(dets: &[DetectionRecord], gts: &[GroundTruthRecord]) -> CocoMetrics {
    let scenes = build_scenes(dets, gts);
    let all = eval_bucket(&scenes, AreaBucket::All);
    let small = eval_bucket(&scenes, AreaBucket::Small);
    let medium = eval_bucket(&scenes, AreaBucket::Medium);
    let large = eval_bucket(&scenes, AreaBucket::Large);

    // Threshold indices: 0 is 0.50, 5 is 0.75.
    CocoMetrics {
        ap: mean_over_thresholds(|t| bucket_ap(&scenes, &all, t)),
        ap50: bucket_ap(&scenes, &all, 0),
        ap75: bucket_ap(&scenes, &all, 5),
        ap_small: mean_over_thresholds(|t| bucket_ap(&scenes, &small, t)),
        ap_medium: mean_over_thresholds(|t| bucket_ap(&scenes, &medium, t)),
        ap_large: mean_over_thresholds(|t| bucket_ap(&scenes, &large, t)),
        ar_max1: mean_over_thresholds(|t| bucket_recall(&all, t, 1)),
        ar_max10: mean_over_thresholds(|t| bucket_recall(&all, t, 10)),
        ar_max100: mean_over_thresholds(|t| bucket_recall(&all, t, 100)),
        ar_small: mean_over_thresholds(|t| bucket_recall(&small, t, AP_MAX_DETS)),
        ar_medium: mean_over_thresholds(|t| bucket_recall(&medium, t, AP_MAX_DETS)),
        ar_large: mean_over_thresholds(|t| bucket_recall(&large, t, AP_MAX_DETS)),
    }
}

// ---------------------------------------------------------------------------
// Length statistics

/// Arithmetic mean of detected lengths for one type.
pub fn mean_detected_length(lengths: &[f64]) -> Result<f64, EvalError> {
    if lengths.is_empty() {
        return Err(EvalError::EmptySample);
    }
    Ok(lengths.iter().sum::<f64>() / lengths.len() as f64)
}

/// Accuracy of a mean detected length against the actual length, as an
/// integer percent: the relative-error complement clamped to [0, 100] and
/// rounded to the nearest integer.
pub fn length_accuracy_pct(mean_detected_m: f64, actual_m: f64) -> Result<u8, EvalError> {
    if actual_m <= 0.0 || !actual_m.is_finite() {
        return Err(EvalError::NonPositiveActual(actual_m));
    }
    debug_assert!(mean_detected_m >= 0.0);
    let accuracy = 100.0 * (1.0 - (mean_detected_m - actual_m).abs() / actual_m);
    Ok(accuracy.max(0.0).round() as u8)
}

// ---------------------------------------------------------------------------
// Confusion matrix

/// Actual-type by predicted-type count table. Row and column order follow
/// the type database's declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    codes: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn codes(&self) -> &[String] {
        &self.codes
    }

    /// Rows are actual types, columns predicted types.
    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn count(&self, actual: &str, predicted: &str) -> Option<u64> {
        let i = self.codes.iter().position(|c| c == actual)?;
        let j = self.codes.iter().position(|c| c == predicted)?;
        Some(self.counts[i][j])
    }

    pub fn row_sum(&self, actual: &str) -> Option<u64> {
        let i = self.codes.iter().position(|c| c == actual)?;
        Some(self.counts[i].iter().sum())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// CSV form with a header row and column of type codes.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(",{}\n", self.codes.join(",")));
        for (code, row) in self.codes.iter().zip(&self.counts) {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            out.push_str(&format!("{},{}\n", code, cells.join(",")));
        }
        out
    }
}

/// Tallies (actual, predicted) code pairs into a matrix laid out in database
/// order. Unknown codes on either side are an error.
pub fn build_confusion_matrix(
    pairs: &[(String, String)],
    db: &TypeDatabase,
) -> Result<ConfusionMatrix, EvalError> {
    let codes: Vec<String> = db.entries().iter().map(|e| e.code.clone()).collect();
    let mut counts = vec![vec![0u64; codes.len()]; codes.len()];
    for (actual, predicted) in pairs {
        let i = db
            .index_of(actual)
            .ok_or_else(|| EvalError::UnknownCode(actual.clone()))?;
        let j = db
            .index_of(predicted)
            .ok_or_else(|| EvalError::UnknownCode(predicted.clone()))?;
        counts[i][j] += 1;
    }
    Ok(ConfusionMatrix { codes, counts })
}

// ---------------------------------------------------------------------------
// Dataset evaluation

/// IoU threshold pairing detections with ground truth for identification
/// (confusion matrix and length statistics).
pub const IDENTIFICATION_IOU: f64 = 0.5;

/// Length statistics for one type.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeLengthStats {
    pub code: String,
    pub actual_length_m: f64,
    pub mean_detected_length_m: Option<f64>,
    pub accuracy_pct: Option<u8>,
    pub samples: usize,
}

/// Full evaluation output: detection metrics, per-type length statistics
/// with their average, and the confusion matrix.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub coco: CocoMetrics,
    pub per_type: Vec<TypeLengthStats>,
    /// Plain mean of per-type accuracies over types with samples.
    pub average_accuracy_pct: Option<f64>,
    pub confusion: ConfusionMatrix,
}

#[derive(Serialize)]
struct VersionedReport<'a> {
    version: &'static str,
    #[serde(flatten)]
    report: &'a EvalReport,
}

impl EvalReport {
    /// Schema-stable JSON form; identical inputs produce identical bytes.
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(&VersionedReport {
            version: "1",
            report: self,
        })
        .expect("report serializes");
        out.push('\n');
        out
    }
}

/// Runs the full evaluation over a manifest: loads every mask, computes the
/// COCO-style summary, then pairs detections with ground truth at IoU 0.5,
/// measures each matched detection's length, classifies it, and aggregates
/// per-type length accuracy and the confusion matrix.
pub fn evaluate_dataset(
    manifest: &DatasetManifest,
    db: &TypeDatabase,
) -> Result<EvalReport, EvalError> {
    let gsd = manifest.gsd();
    let mut dets = Vec::new();
    let mut gts = Vec::new();
    for image in manifest.images() {
        for g in &image.ground_truth {
            if db.get(&g.type_code).is_none() {
                return Err(EvalError::UnknownCode(g.type_code.clone()));
            }
            let mask = manifest.load_image_mask(image, &g.mask_path)?;
            gts.push(GroundTruthRecord::new(
                image.id.clone(),
                mask,
                g.type_code.clone(),
            )?);
        }
        for d in &image.detections {
            let mask = manifest.load_image_mask(image, &d.mask_path)?;
            dets.push(DetectionRecord::new(image.id.clone(), mask, d.score)?);
        }
    }

    let coco = coco_evaluate(&dets, &gts);

    let mut pairs = Vec::new();
    let mut lengths: Vec<Vec<f64>> = vec![Vec::new(); db.len()];
    for m in match_detections(&dets, &gts, IDENTIFICATION_IOU) {
        let Some(g) = m.ground_truth else { continue };
        let det = &dets[m.detection];
        let diameter = mask_diameter_px(&det.mask).expect("detection records hold non-empty masks");
        let detected_len = length_m(diameter, gsd);
        let predicted = db.classify_by_length(detected_len).code.clone();
        let actual = gts[g].type_code.clone();
        let type_idx = db
            .index_of(&actual)
            .expect("ground-truth codes were checked against the database");
        lengths[type_idx].push(detected_len);
        pairs.push((actual, predicted));
    }
    let confusion = build_confusion_matrix(&pairs, db)?;

    let mut per_type = Vec::with_capacity(db.len());
    let mut accuracy_sum = 0.0;
    let mut accuracy_n = 0usize;
    for (i, entry) in db.entries().iter().enumerate() {
        let samples = lengths[i].len();
        let (mean, accuracy) = if samples > 0 {
            let mean = mean_detected_length(&lengths[i])?;
            let accuracy = length_accuracy_pct(mean, entry.actual_length_m)?;
            accuracy_sum += f64::from(accuracy);
            accuracy_n += 1;
            (Some(mean), Some(accuracy))
        } else {
            (None, None)
        };
        per_type.push(TypeLengthStats {
            code: entry.code.clone(),
            actual_length_m: entry.actual_length_m,
            mean_detected_length_m: mean,
            accuracy_pct: accuracy,
            samples,
        });
    }
    let average_accuracy_pct = (accuracy_n > 0).then(|| accuracy_sum / accuracy_n as f64);

    Ok(EvalReport {
        coco,
        per_type,
        average_accuracy_pct,
        confusion,
    })
}
