//! Box-overlap metrics and per-sequence detection rate.

use serde::Serialize;

use crate::appearance::BoundingBox;
use crate::error::{Error, Result};
use crate::synth::GroundTruthTable;
use crate::tracker::TrackRecord;

/// F-measure a frame must exceed to count as tracked.
pub const COVERAGE_THRESHOLD: f64 = 0.5;

pub fn intersection_area(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let w = (a.x + a.w).min(b.x + b.w) - a.x.max(b.x);
    let h = (a.y + a.h).min(b.y + b.h) - a.y.max(b.y);
    if w > 0.0 && h > 0.0 {
        w * h
    } else {
        0.0
    }
}

/// Fraction of the ground-truth box covered by the estimate.
pub fn recall(gt: &BoundingBox, est: &BoundingBox) -> Result<f64> {
    if gt.area() <= 0.0 {
        return Err(Error::UndefinedMetric("recall of a zero-area ground-truth box"));
    }
    Ok(intersection_area(gt, est) / gt.area())
}

/// Fraction of the estimate covering the ground-truth box.
pub fn precision(gt: &BoundingBox, est: &BoundingBox) -> Result<f64> {
    if est.area() <= 0.0 {
        return Err(Error::UndefinedMetric("precision of a zero-area estimate"));
    }
    Ok(intersection_area(gt, est) / est.area())
}

pub fn f_measure(gt: &BoundingBox, est: &BoundingBox) -> Result<f64> {
    let r = recall(gt, est)?;
    let p = precision(gt, est)?;
    Ok(harmonic(r, p))
}

fn harmonic(r: f64, p: f64) -> f64 {
    if r + p == 0.0 {
        0.0
    } else {
        2.0 * r * p / (r + p)
    }
}

/// Strictly above the coverage threshold.
pub fn coverage_tracked(f: f64) -> bool {
    f > COVERAGE_THRESHOLD
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameScore {
    pub frame_index: usize,
    pub recall: f64,
    pub precision: f64,
    pub f_measure: f64,
    pub tracked: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub target: usize,
    pub per_frame: Vec<FrameScore>,
    /// `100 * tracked / frames with ground truth`.
    pub detection_rate_pct: f64,
    pub mean_ms_per_frame: f64,
    pub mean_evaluations_per_frame: f64,
}

/// Scores one target's records against its ground truth. Records for frames
/// without ground truth are ignored; a ground-truth frame without a record is
/// an error.
pub fn evaluate(records: &[TrackRecord], gt: &GroundTruthTable, target: usize) -> Result<EvalReport> {
    let mut per_frame = Vec::new();
    let mut missing = None;
    for row in gt.for_target(target) {
        match records
            .iter()
            .find(|r| r.target == target && r.frame_index == row.frame)
        {
            Some(rec) => {
                let r = recall(&row.bbox, &rec.bbox)?;
                let p = precision(&row.bbox, &rec.bbox)?;
                let f = harmonic(r, p);
                per_frame.push(FrameScore {
                    frame_index: row.frame,
                    recall: r,
                    precision: p,
                    f_measure: f,
                    tracked: coverage_tracked(f),
                });
            }
            None => missing = missing.or(Some(row.frame)),
        }
    }
    if per_frame.is_empty() {
        return Err(Error::EmptyReport);
    }
    if let Some(frame) = missing {
        return Err(Error::FrameMismatch { frame, target });
    }
    per_frame.sort_by_key(|s| s.frame_index);

    let own: Vec<&TrackRecord> = records.iter().filter(|r| r.target == target).collect();
    let tracked = per_frame.iter().filter(|s| s.tracked).count();
    let mean = |f: fn(&TrackRecord) -> f64| own.iter().map(|r| f(r)).sum::<f64>() / own.len() as f64;
    Ok(EvalReport {
        target,
        detection_rate_pct: 100.0 * tracked as f64 / per_frame.len() as f64,
        mean_ms_per_frame: mean(|r| r.elapsed_ms),
        mean_evaluations_per_frame: mean(|r| r.evaluations as f64),
        per_frame,
    })
}

/// Reports for every target present in the ground truth.
pub fn evaluate_all(records: &[TrackRecord], gt: &GroundTruthTable) -> Result<Vec<EvalReport>> {
    let targets = gt.targets();
    if targets.is_empty() {
        return Err(Error::EmptyReport);
    }
    targets.into_iter().map(|t| evaluate(records, gt, t)).collect()
}

/// Mean over reports of (detection rate, ms per frame).
pub fn average(reports: &[EvalReport]) -> (f64, f64) {
    let n = reports.len().max(1) as f64;
    (
        reports.iter().map(|r| r.detection_rate_pct).sum::<f64>() / n,
        reports.iter().map(|r| r.mean_ms_per_frame).sum::<f64>() / n,
    )
}
