//! Tracker dispatch and the seeded sample-count and frame-rate studies.

use rayon::prelude::*;
use serde::Serialize;

use crate::appearance::{BoundingBox, Frame};
use crate::config::{RunConfig, Suite, SynthConfig, TrackerKind};
use crate::error::{Error, Result};
use crate::eval::{evaluate_all, f_measure};
use crate::pf::{pf_track_sequence, PfConfig};
use crate::rng;
use crate::synth::{self, suites, GroundTruthTable, SceneSpec};
use crate::tracker::{track_sequence, TrackRecord};

/// Runs `kind` over `frames` from `init` boxes in the first frame. Returns one
/// record list per target.
pub fn run_tracker(
    kind: TrackerKind,
    frames: &[Frame],
    init: &[BoundingBox],
    cfg: &RunConfig,
) -> Result<Vec<Vec<TrackRecord>>> {
    let source = || frames.iter().cloned().map(Ok);
    match kind {
        TrackerKind::Swatrack => track_sequence(source(), init, &cfg.tracker),
        TrackerKind::PsoFixed => track_sequence(source(), init, &cfg.tracker.clone().pso_fixed()),
        TrackerKind::Pf => {
            if init.is_empty() {
                return Err(Error::config("at least one initial box is required"));
            }
            init.iter()
                .enumerate()
                .map(|(t, b)| {
                    let pf = PfConfig {
                        seed: rng::derive_seed(cfg.pf.seed, t as u64),
                        ..cfg.pf.clone()
                    };
                    let mut recs = pf_track_sequence(source(), *b, &pf)?;
                    recs.iter_mut().for_each(|r| r.target = t);
                    Ok(recs)
                })
                .collect()
        }
    }
}

/// Scenes of the configured suite for one seed.
pub fn suite_scenes(synth: &SynthConfig, seed: u64) -> Vec<SceneSpec> {
    match synth.suite {
        Suite::Mixed => suites::mixed(seed, synth.frame_count),
        Suite::Teleport => vec![suites::teleport(
            seed,
            synth.frame_count,
            synth.frame_count / 2,
            synth.teleport_jump,
        )],
    }
}

/// Whether the estimate overlaps the target with F above 0.5 in any of the
/// `within + 1` frames starting at `jump_frame`.
pub fn recovered_after(
    records: &[TrackRecord],
    gt: &GroundTruthTable,
    target: usize,
    jump_frame: usize,
    within: usize,
) -> Result<bool> {
    for f in jump_frame..=jump_frame + within {
        let (Some(g), Some(r)) = (gt.get(f, target), records.iter().find(|r| r.frame_index == f)) else {
            return Err(Error::FrameMismatch { frame: f, target });
        };
        if f_measure(g, &r.bbox)? > 0.5 {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Means over every target of every scene for one seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeedScore {
    pub detection_rate_pct: f64,
    pub ms_per_frame: f64,
    pub evaluations_per_frame: f64,
}

pub fn score_seed(kind: TrackerKind, cfg: &RunConfig, seed: u64, keep_every: usize) -> Result<SeedScore> {
    let cfg = cfg.clone().with_seed(seed);
    let mut reports = Vec::new();
    for spec in suite_scenes(&cfg.synth, seed) {
        let (frames, gt) = synth::generate(&spec)?;
        let (frames, gt) = synth::downsample(frames, &gt, keep_every)?;
        let records = run_tracker(kind, &frames, &gt.boxes_at(0), &cfg)?;
        reports.extend(evaluate_all(&records.concat(), &gt)?);
    }
    let n = reports.len() as f64;
    Ok(SeedScore {
        detection_rate_pct: reports.iter().map(|r| r.detection_rate_pct).sum::<f64>() / n,
        ms_per_frame: reports.iter().map(|r| r.mean_ms_per_frame).sum::<f64>() / n,
        evaluations_per_frame: reports.iter().map(|r| r.mean_evaluations_per_frame).sum::<f64>() / n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub study: &'static str,
    pub tracker: TrackerKind,
    pub particles: usize,
    pub keep_every: usize,
    /// Seeds that ran to completion.
    pub seeds: usize,
    pub failed: usize,
    pub accuracy_mean: f64,
    pub accuracy_sd: f64,
    pub ms_mean: f64,
    pub ms_sd: f64,
    pub evals_mean: f64,
    pub evals_sd: f64,
    /// Paired accuracy drop against the first downsampling factor.
    pub drop_mean: Option<f64>,
    pub drop_sd: Option<f64>,
}

/// Sample mean and standard deviation (n − 1); zero spread for one value.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    tracker: TrackerKind,
    particles: usize,
    keep_every: usize,
}

impl Cell {
    fn config(&self, cfg: &RunConfig) -> RunConfig {
        let mut cfg = cfg.clone();
        match self.tracker {
            TrackerKind::Pf => cfg.pf.particles = self.particles,
            _ => cfg.tracker.particles = self.particles,
        }
        cfg
    }
}

/// Every (cell, seed) run, in parallel, returned in cell-major order.
fn run_cells(cells: &[Cell], cfg: &RunConfig) -> Vec<Vec<Result<SeedScore>>> {
    let seeds: Vec<u64> = (0..cfg.study.seeds).map(|i| cfg.study.base_seed + i).collect();
    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| seeds.iter().map(move |&s| (c, s)))
        .collect();
    let results: Vec<Result<SeedScore>> = jobs
        .par_iter()
        .map(|&(c, seed)| {
            let cell = cells[c];
            score_seed(cell.tracker, &cell.config(cfg), seed, cell.keep_every)
        })
        .collect();
    let mut grouped: Vec<Vec<Result<SeedScore>>> = cells.iter().map(|_| Vec::new()).collect();
    for ((c, _), r) in jobs.into_iter().zip(results) {
        grouped[c].push(r);
    }
    grouped
}

fn summarize(study: &'static str, cell: Cell, runs: &[Result<SeedScore>]) -> StudyRow {
    let ok: Vec<&SeedScore> = runs.iter().filter_map(|r| r.as_ref().ok()).collect();
    let col = |f: fn(&SeedScore) -> f64| mean_sd(&ok.iter().map(|s| f(s)).collect::<Vec<_>>());
    let (accuracy_mean, accuracy_sd) = col(|s| s.detection_rate_pct);
    let (ms_mean, ms_sd) = col(|s| s.ms_per_frame);
    let (evals_mean, evals_sd) = col(|s| s.evaluations_per_frame);
    StudyRow {
        study,
        tracker: cell.tracker,
        particles: cell.particles,
        keep_every: cell.keep_every,
        seeds: ok.len(),
        failed: runs.len() - ok.len(),
        accuracy_mean,
        accuracy_sd,
        ms_mean,
        ms_sd,
        evals_mean,
        evals_sd,
        drop_mean: None,
        drop_sd: None,
    }
}

fn report_failures(cells: &[Cell], runs: &[Vec<Result<SeedScore>>], cfg: &RunConfig) {
    for (cell, rs) in cells.iter().zip(runs) {
        for (i, r) in rs.iter().enumerate() {
            if let Err(e) = r {
                eprintln!(
                    "cell {} N={} k={} seed {} failed: {e}",
                    cell.tracker.name(),
                    cell.particles,
                    cell.keep_every,
                    cfg.study.base_seed + i as u64
                );
            }
        }
    }
}

/// Accuracy, time and evaluations against particle count for the particle
/// filter and SwaTrack.
pub fn samples_study(cfg: &RunConfig) -> Result<Vec<StudyRow>> {
    let s = &cfg.study;
    if s.pf_particles.is_empty() && s.swatrack_particles.is_empty() {
        return Err(Error::config("samples study needs at least one particle count"));
    }
    if s.pf_particles.iter().chain(&s.swatrack_particles).any(|&n| n == 0) {
        return Err(Error::config("particle counts must be positive"));
    }
    let cells: Vec<Cell> = s
        .pf_particles
        .iter()
        .map(|&n| (TrackerKind::Pf, n))
        .chain(s.swatrack_particles.iter().map(|&n| (TrackerKind::Swatrack, n)))
        .map(|(tracker, particles)| Cell {
            tracker,
            particles,
            keep_every: 1,
        })
        .collect();
    let runs = run_cells(&cells, cfg);
    report_failures(&cells, &runs, cfg);
    Ok(cells.iter().zip(&runs).map(|(c, r)| summarize("samples", *c, r)).collect())
}

/// Accuracy at each keep-one-in-k factor, with the paired drop against the
/// first factor.
pub fn downsample_study(cfg: &RunConfig) -> Result<Vec<StudyRow>> {
    let s = &cfg.study;
    if s.downsample.is_empty() || s.downsample_trackers.is_empty() {
        return Err(Error::config("downsample study needs factors and trackers"));
    }
    if s.downsample.contains(&0) {
        return Err(Error::config("downsampling factors must be at least 1"));
    }
    let cells: Vec<Cell> = s
        .downsample_trackers
        .iter()
        .flat_map(|&tracker| {
            let particles = match tracker {
                TrackerKind::Pf => cfg.pf.particles,
                _ => cfg.tracker.particles,
            };
            s.downsample.iter().map(move |&keep_every| Cell {
                tracker,
                particles,
                keep_every,
            })
        })
        .collect();
    let runs = run_cells(&cells, cfg);
    report_failures(&cells, &runs, cfg);

    let per_tracker = s.downsample.len();
    let mut rows = Vec::new();
    for (i, (cell, rs)) in cells.iter().zip(&runs).enumerate() {
        let mut row = summarize("downsample", *cell, rs);
        let reference = &runs[i - i % per_tracker];
        if i % per_tracker != 0 {
            let drops: Vec<f64> = reference
                .iter()
                .zip(rs)
                .filter_map(|(a, b)| Some(a.as_ref().ok()?.detection_rate_pct - b.as_ref().ok()?.detection_rate_pct))
                .collect();
            if !drops.is_empty() {
                let (m, sd) = mean_sd(&drops);
                row.drop_mean = Some(m);
                row.drop_sd = Some(sd);
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

pub const STUDY_HEADER: &str = "study,tracker,particles,keep_every,seeds,failed,accuracy_mean,accuracy_sd,ms_mean,ms_sd,evals_mean,evals_sd,drop_mean,drop_sd";

/// Long-form CSV. Without `timing` the time columns are zero.
pub fn write_study_csv(rows: &[StudyRow], timing: bool) -> String {
    let opt = |v: Option<f64>| v.map(|v| format!("{v:.6}")).unwrap_or_default();
    let mut out = format!("{STUDY_HEADER}\n");
    for r in rows {
        let (ms, ms_sd) = if timing { (r.ms_mean, r.ms_sd) } else { (0.0, 0.0) };
        out.push_str(&format!(
            "{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{}\n",
            r.study,
            r.tracker.name(),
            r.particles,
            r.keep_every,
            r.seeds,
            r.failed,
            r.accuracy_mean,
            r.accuracy_sd,
            ms,
            ms_sd,
            r.evals_mean,
            r.evals_sd,
            opt(r.drop_mean),
            opt(r.drop_sd),
        ));
    }
    out
}
