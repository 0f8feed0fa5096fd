//! Frame-by-frame swarm tracker.
//!
//! Each target is a 2-D box centre searched by a fresh swarm every frame. The
//! swarm is seeded around the previous estimate with a spread proportional to
//! the current exploration factor, and one particle sits exactly on the
//! previous estimate. Fitness is the Bhattacharyya coefficient between the
//! reference histogram and the histogram under a candidate box.

use std::cell::Cell;
use std::time::Instant;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::adaptive::{
    update_dap, quantize_direction, AdaptiveController, DapState, EfState, FixedController,
    MotionHistory, SwaTrackController,
};
use crate::appearance::{
    bhattacharyya_fitness, BinLayout, BinnedFrame, BoundingBox, Frame, Histogram,
};
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};
use crate::swarm::{run_until_converged, Boundary, ConvergenceCriteria, SearchSpace, StateVector, Swarm};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    /// Swarm size `I`.
    pub particles: usize,
    /// Initial iteration budget `K`.
    pub k_init: usize,
    pub k_min: usize,
    pub k_max: usize,
    pub omega0: f64,
    pub c10: f64,
    pub c20: f64,
    /// Initial exploration factor.
    pub ef0: f64,
    pub ef_min: f64,
    pub ef_max: f64,
    /// Fitness at or below which the swarm explores harder. A box that only
    /// grazes the target already scores well above 0.5, hence the high default.
    pub t_minf: f64,
    /// DAP step.
    pub m: f64,
    /// EF / K step.
    pub n: f64,
    /// Motion-direction window length.
    pub window: usize,
    /// Consistency at or above which motion counts as consistent.
    pub consistency_threshold: f64,
    /// Fixed target size; taken from the initial box when unset.
    pub box_w: Option<f64>,
    pub box_h: Option<f64>,
    /// Per-axis spread of the per-frame swarm, in pixels per unit of EF.
    pub spread_per_ef: f64,
    pub convergence_radius: f64,
    pub convergence_delta: f64,
    pub convergence_patience: usize,
    pub layout: BinLayout,
    /// Handling of particles pushed outside the frame. Clamping pins an
    /// exploding swarm to the frame corners, so the default redraws them.
    pub boundary: Boundary,
    pub seed: u64,
    /// `false` turns off DAP and EF adaptation (plain PSO, EF = 1).
    pub adaptive: bool,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            particles: 15,
            k_init: 30,
            k_min: 5,
            k_max: 70,
            omega0: 0.4,
            c10: 0.3,
            c20: 0.3,
            ef0: 25.0,
            ef_min: 1.0,
            ef_max: 100.0,
            t_minf: 0.95,
            m: 0.05,
            n: 5.0,
            window: 5,
            consistency_threshold: 0.5,
            box_w: None,
            box_h: None,
            spread_per_ef: 2.0,
            convergence_radius: 1.0,
            convergence_delta: 1e-4,
            convergence_patience: 3,
            layout: BinLayout::HsvJoint,
            boundary: Boundary::Reinit,
            seed: 0,
            adaptive: true,
        }
    }
}

impl TrackerConfig {
    /// The plain-PSO ablation: constant weights, EF fixed at 1 and a fixed
    /// iteration budget of `k_init`.
    pub fn pso_fixed(mut self) -> Self {
        self.adaptive = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.particles == 0 {
            return Err(Error::config("tracker needs at least one particle"));
        }
        self.initial_dap()?;
        self.initial_ef()?;
        MotionHistory::new(self.window)?;
        for (name, v) in [("box_w", self.box_w), ("box_h", self.box_h)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::config(format!("{name} = {v} must be positive")));
                }
            }
        }
        if !(self.spread_per_ef > 0.0 && self.spread_per_ef.is_finite()) {
            return Err(Error::config("spread_per_ef must be positive"));
        }
        if !(0.0..=1.0).contains(&self.consistency_threshold) {
            return Err(Error::config("consistency_threshold must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn initial_dap(&self) -> Result<DapState> {
        DapState::new(self.omega0, self.c10, self.c20, self.m)
    }

    pub fn initial_ef(&self) -> Result<EfState> {
        EfState::new(
            self.ef0,
            self.k_init,
            self.n,
            self.t_minf,
            (self.k_min, self.k_max),
            (self.ef_min, self.ef_max),
        )
    }

    fn criteria(&self) -> ConvergenceCriteria {
        ConvergenceCriteria {
            radius: self.convergence_radius,
            delta: self.convergence_delta,
            patience: self.convergence_patience,
        }
    }
}

/// One frame's estimate for one target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub frame_index: usize,
    pub target: usize,
    pub bbox: BoundingBox,
    pub fitness: f64,
    pub iterations_used: usize,
    pub evaluations: usize,
    pub elapsed_ms: f64,
    /// Final fitness below `t_minf`, or nothing observable in the frame.
    pub lost: bool,
}

#[derive(Debug, Clone)]
pub struct TargetState {
    pub target: usize,
    pub reference: Histogram,
    pub last_box: BoundingBox,
    pub dap: DapState,
    pub ef: EfState,
    pub history: MotionHistory,
    rng: StreamRng,
    frames_seen: usize,
}

/// Per-frame diagnostics beyond the record itself.
#[derive(Debug, Clone, Default)]
pub struct FrameTrace {
    pub controller: Vec<crate::adaptive::ControllerSample>,
    pub consistency: Option<f64>,
}

/// Builds a target from its box in the first frame.
pub fn init_target(frame: &Frame, bbox: BoundingBox, cfg: &TrackerConfig) -> Result<TargetState> {
    init_target_indexed(frame, bbox, cfg, 0)
}

fn init_target_indexed(
    frame: &Frame,
    bbox: BoundingBox,
    cfg: &TrackerConfig,
    target: usize,
) -> Result<TargetState> {
    cfg.validate()?;
    let reference = BinnedFrame::new(frame, cfg.layout).histogram(&bbox);
    if reference.is_empty() {
        return Err(Error::Initialization(format!(
            "box ({}, {}, {}, {}) covers no pixels of the {}x{} frame",
            bbox.x,
            bbox.y,
            bbox.w,
            bbox.h,
            frame.width(),
            frame.height()
        )));
    }
    let last_box = BoundingBox::from_center(
        bbox.center().0,
        bbox.center().1,
        cfg.box_w.unwrap_or(bbox.w),
        cfg.box_h.unwrap_or(bbox.h),
    );
    Ok(TargetState {
        target,
        reference,
        last_box,
        dap: cfg.initial_dap()?,
        ef: cfg.initial_ef()?,
        history: MotionHistory::new(cfg.window)?,
        rng: rng::seeded(rng::derive_seed(cfg.seed, target as u64)),
        frames_seen: 0,
    })
}

/// Estimates the target's box in `frame`.
pub fn track_frame(state: &mut TargetState, frame: &Frame, cfg: &TrackerConfig) -> Result<TrackRecord> {
    let started = Instant::now();
    let binned = BinnedFrame::new(frame, cfg.layout);
    track_binned(state, &binned, cfg, started).map(|(rec, _)| rec)
}

/// [`track_frame`] on a frame already reduced to bin indices, also returning
/// the controller trace.
pub fn track_binned(
    state: &mut TargetState,
    frame: &BinnedFrame,
    cfg: &TrackerConfig,
    started: Instant,
) -> Result<(TrackRecord, FrameTrace)> {
    let (w, h) = (state.last_box.w, state.last_box.h);
    let observed = Cell::new(false);
    let fitness = |x: &[f64]| {
        let candidate = BoundingBox::from_center(x[0], x[1], w, h);
        let obs = bhattacharyya_fitness(&state.reference, &frame.histogram(&candidate));
        if obs.is_observed() {
            observed.set(true);
        }
        obs.fitness()
    };

    let space = SearchSpace::from_bounds(&[
        (0.0, frame.width() as f64),
        (0.0, frame.height() as f64),
    ])?;
    let (cx, cy) = state.last_box.center();
    let mut center = vec![cx, cy];
    space.clamp(&mut center);
    let center = StateVector::new(center)?;

    let mut trace = FrameTrace::default();
    let seed = state.rng.next_u64();
    let (swarm, outcome) = if cfg.adaptive {
        let c = state.history.consistency();
        trace.consistency = c;
        state.dap = update_dap(&state.dap, c.unwrap_or(1.0), cfg.consistency_threshold);

        let region = space.neighbourhood(center.as_slice(), cfg.spread_per_ef * state.ef.ef)?;
        let mut swarm =
            Swarm::init_in_region(space, &region, Some(&center), cfg.particles, seed, &fitness)?
                .with_boundary(cfg.boundary);
        let mut ctrl = SwaTrackController::new(state.dap, state.ef);
        let outcome =
            run_until_converged(&mut swarm, &fitness, &mut ctrl, state.ef.k_max, &cfg.criteria())?;
        state.ef = ctrl.ef_state();
        trace.controller = ctrl.trace().to_vec();
        (swarm, outcome)
    } else {
        let mut ctrl = FixedController {
            dap: cfg.initial_dap()?,
            ef: 1.0,
            k_cap: cfg.k_init,
            t_minf: cfg.t_minf,
        };
        let region = space.neighbourhood(center.as_slice(), cfg.spread_per_ef * ctrl.ef())?;
        let mut swarm =
            Swarm::init_in_region(space, &region, Some(&center), cfg.particles, seed, &fitness)?
                .with_boundary(cfg.boundary);
        let outcome =
            run_until_converged(&mut swarm, &fitness, &mut ctrl, cfg.k_init, &cfg.criteria())?;
        (swarm, outcome)
    };

    let record_base = TrackRecord {
        frame_index: state.frames_seen,
        target: state.target,
        bbox: state.last_box,
        fitness: 0.0,
        iterations_used: outcome.iterations,
        evaluations: swarm.evaluations(),
        elapsed_ms: 0.0,
        lost: true,
    };
    state.frames_seen += 1;

    if !observed.get() {
        let record = TrackRecord {
            elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
            ..record_base
        };
        return Ok((record, trace));
    }

    let best = swarm.gbest_position();
    let new_box = BoundingBox::from_center(best[0], best[1], w, h);
    if let Some(bin) = quantize_direction(best[0] - cx, best[1] - cy) {
        state.history.push(bin);
    }
    state.last_box = new_box;
    let record = TrackRecord {
        bbox: new_box,
        fitness: swarm.gbest_fitness(),
        lost: swarm.gbest_fitness() < cfg.t_minf,
        elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
        ..record_base
    };
    Ok((record, trace))
}

/// Tracks every target through `frames`. Targets are independent: each has
/// its own swarm and a seed stream derived from `cfg.seed + target index`.
pub fn track_sequence<I>(
    frames: I,
    init_boxes: &[BoundingBox],
    cfg: &TrackerConfig,
) -> Result<Vec<Vec<TrackRecord>>>
where
    I: IntoIterator<Item = Result<Frame>>,
{
    if init_boxes.is_empty() {
        return Err(Error::config("at least one initial box is required"));
    }
    let mut frames = frames.into_iter().peekable();
    let first = match frames.peek() {
        None => return Err(Error::config("frame source is empty")),
        Some(Err(_)) => return Err(frames.next().unwrap().unwrap_err()),
        Some(Ok(f)) => f,
    };
    let mut states = init_boxes
        .iter()
        .enumerate()
        .map(|(i, b)| init_target_indexed(first, *b, cfg, i))
        .collect::<Result<Vec<_>>>()?;
    let mut out = vec![Vec::new(); states.len()];
    for frame in frames {
        let frame = frame?;
        let started = Instant::now();
        let binned = BinnedFrame::new(&frame, cfg.layout);
        // Binning is shared, so each target is charged an equal share.
        let prep_ms = started.elapsed().as_secs_f64() * 1e3 / states.len() as f64;
        for (state, records) in states.iter_mut().zip(out.iter_mut()) {
            let (mut rec, _) = track_binned(state, &binned, cfg, Instant::now())?;
            rec.elapsed_ms += prep_ms;
            records.push(rec);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval;
    use crate::synth::{self, Background, MotionSpec, SceneSpec, TargetSpec};

    const RED: [u8; 3] = [255, 0, 0];
    const BG: [u8; 3] = [30, 30, 30];

    fn disc_frame(w: usize, h: usize, centers: &[(f64, f64)]) -> Frame {
        let mut f = Frame::filled(w, h, BG);
        for &(cx, cy) in centers {
            for y in 0..h {
                for x in 0..w {
                    let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
                    if dx * dx + dy * dy <= 100.0 {
                        f.set_pixel(x, y, RED);
                    }
                }
            }
        }
        f
    }

    #[test]
    fn defaults_match_published_settings() {
        let cfg = TrackerConfig::default();
        let frame = Frame::filled(50, 50, RED);
        let state = init_target(&frame, BoundingBox::new(5.0, 5.0, 10.0, 10.0).unwrap(), &cfg)
            .unwrap();
        assert_eq!((state.dap.omega, state.dap.c1, state.dap.c2), (0.4, 0.3, 0.3));
        assert_eq!(state.ef.ef, 25.0);
        assert_eq!(state.ef.k_budget, 30);
        assert_eq!(cfg.particles, 15);
        assert_eq!(state.reference.bins()[3], 1.0);
        assert!(state.history.is_empty());
    }

    #[test]
    fn init_outside_frame_fails() {
        let frame = Frame::filled(50, 50, RED);
        let err = init_target(&frame, BoundingBox::new(60.0, 5.0, 10.0, 10.0).unwrap(), &Default::default())
            .unwrap_err();
        assert!(matches!(err, Error::Initialization(_)));
    }

    #[test]
    fn static_target_stays_put() {
        let frame = disc_frame(120, 100, &[(60.0, 50.0)]);
        let bbox = BoundingBox::new(50.0, 40.0, 20.0, 20.0).unwrap();
        let cfg = TrackerConfig::default();
        let mut state = init_target(&frame, bbox, &cfg).unwrap();
        let own = bhattacharyya_fitness(&state.reference, &extract(&frame, &bbox)).fitness();
        for _ in 0..3 {
            let rec = track_frame(&mut state, &frame, &cfg).unwrap();
            assert!(rec.fitness >= own - 1e-12);
            let (cx, cy) = rec.bbox.center();
            assert!((cx - 60.0).abs() < 1.0 && (cy - 50.0).abs() < 1.0);
        }
    }

    fn extract(frame: &Frame, bbox: &BoundingBox) -> Histogram {
        crate::appearance::extract_histogram(frame, bbox)
    }

    #[test]
    fn reported_fitness_matches_reported_box() {
        let spec = synth::suites::mixed(5, 12).remove(1);
        let (frames, gt) = synth::generate(&spec).unwrap();
        let cfg = TrackerConfig::default();
        let mut state = init_target(&frames[0], *gt.get(0, 0).unwrap(), &cfg).unwrap();
        for frame in &frames {
            let rec = track_frame(&mut state, frame, &cfg).unwrap();
            let again = bhattacharyya_fitness(&state.reference, &extract(frame, &rec.bbox));
            assert_eq!(again.fitness(), rec.fitness);
            assert!(rec.evaluations <= cfg.particles * cfg.k_max);
            assert!(rec.iterations_used <= cfg.k_max);
        }
    }

    #[test]
    fn absent_target_grows_exploration() {
        let frame = disc_frame(200, 150, &[(100.0, 75.0)]);
        let bbox = BoundingBox::new(90.0, 65.0, 20.0, 20.0).unwrap();
        let cfg = TrackerConfig::default();
        let mut state = init_target(&frame, bbox, &cfg).unwrap();
        let empty = BinnedFrame::new(&Frame::filled(200, 150, [0, 0, 255]), cfg.layout);
        let (rec, trace) = track_binned(&mut state, &empty, &cfg, Instant::now()).unwrap();
        assert!(rec.fitness < cfg.t_minf);
        assert!(rec.lost);
        let efs: Vec<f64> = trace.controller.iter().map(|s| s.ef).collect();
        assert!(efs.windows(2).all(|w| w[1] >= w[0]));
        assert!(efs.last().unwrap() > &cfg.ef0);
        assert!(state.ef.k_budget > cfg.k_init);
    }

    #[test]
    fn teleport_recovered_within_two_frames() {
        let mut spec = synth::suites::teleport(3, 8, 3, 150.0);
        spec.background = Background::Solid { color: BG };
        let (frames, gt) = synth::generate(&spec).unwrap();
        let out = track_sequence(frames.into_iter().map(Ok), &gt.boxes_at(0), &TrackerConfig::default())
            .unwrap();
        let recovered = (3..=5).any(|f| {
            eval::f_measure(gt.get(f, 0).unwrap(), &out[0][f].bbox).unwrap() > 0.5
        });
        assert!(recovered);
    }

    #[test]
    fn two_targets_tracked_independently() {
        let spec = SceneSpec {
            width: 320,
            height: 200,
            frame_count: 10,
            background: Background::Solid { color: BG },
            targets: vec![
                TargetSpec {
                    radius: 10.0,
                    color: RED,
                    start: [60.0, 60.0],
                    motion: MotionSpec::Linear { velocity: [3.0, 1.0] },
                },
                TargetSpec {
                    radius: 10.0,
                    color: [0, 0, 255],
                    start: [250.0, 140.0],
                    motion: MotionSpec::Linear { velocity: [-2.0, -1.0] },
                },
            ],
            seed: 1,
        };
        let (frames, gt) = synth::generate(&spec).unwrap();
        let cfg = TrackerConfig::default();
        let out = track_sequence(frames.into_iter().map(Ok), &gt.boxes_at(0), &cfg).unwrap();
        assert_eq!(out.len(), 2);
        for (t, records) in out.iter().enumerate() {
            assert_eq!(records.len(), 10);
            for r in records {
                assert_eq!(r.target, t);
                assert!(r.fitness > cfg.t_minf);
            }
        }
    }

    #[test]
    fn single_frame_sequence() {
        let frame = disc_frame(100, 100, &[(50.0, 50.0)]);
        let out = track_sequence(
            vec![Ok(frame)],
            &[BoundingBox::new(40.0, 40.0, 20.0, 20.0).unwrap()],
            &TrackerConfig::default(),
        )
        .unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].len(), 1);
    }

    #[test]
    fn empty_inputs_rejected() {
        let cfg = TrackerConfig::default();
        let b = BoundingBox::new(0.0, 0.0, 5.0, 5.0).unwrap();
        assert!(track_sequence(Vec::<Result<Frame>>::new(), &[b], &cfg).is_err());
        assert!(track_sequence(vec![Ok(Frame::filled(10, 10, RED))], &[], &cfg).is_err());
    }

    #[test]
    fn sequence_is_deterministic() {
        let spec = synth::suites::mixed(7, 15).remove(1);
        let (frames, gt) = synth::generate(&spec).unwrap();
        let cfg = TrackerConfig {
            seed: 42,
            ..Default::default()
        };
        let run = || {
            track_sequence(frames.iter().cloned().map(Ok), &gt.boxes_at(0), &cfg).unwrap()
        };
        let strip = |v: Vec<Vec<TrackRecord>>| {
            v.into_iter()
                .flatten()
                .map(|r| TrackRecord { elapsed_ms: 0.0, ..r })
                .collect::<Vec<_>>()
        };
        let (a, b) = (strip(run()), strip(run()));
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.bbox.x.to_bits(), y.bbox.x.to_bits());
            assert_eq!(x.fitness.to_bits(), y.fitness.to_bits());
            assert_eq!(x, y);
        }
    }

    #[test]
    fn pso_fixed_keeps_budget() {
        let spec = synth::suites::mixed(3, 6).remove(0);
        let (frames, gt) = synth::generate(&spec).unwrap();
        let cfg = TrackerConfig::default().pso_fixed();
        let out = track_sequence(frames.into_iter().map(Ok), &gt.boxes_at(0), &cfg).unwrap();
        for r in &out[0] {
            assert!(r.iterations_used < cfg.k_init);
            assert!(r.evaluations <= cfg.particles * cfg.k_init);
        }
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(toml::from_str::<TrackerConfig>("particles = 10\nbogus = 1").is_err());
        let cfg: TrackerConfig = toml::from_str("particles = 10").unwrap();
        assert_eq!(cfg.particles, 10);
        assert_eq!(cfg.ef0, 25.0);
    }
}
