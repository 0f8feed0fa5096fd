//! Deterministic synthetic scenes with exact ground truth.
//!
//! Targets are flat-coloured discs drawn over a solid, checkerboard or noise
//! background. Motion models cover smooth linear motion, random walks,
//! inconsistent-speed wandering and instantaneous jumps (camera switches).
//! Continuous motion reflects off the frame border; jumps must land inside
//! the frame or the spec is rejected.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::appearance::{BoundingBox, Frame, Rgb};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub frame_count: usize,
    pub background: Background,
    pub targets: Vec<TargetSpec>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Background {
    Solid { color: Rgb },
    Checkerboard { cell: usize, colors: [Rgb; 2] },
    /// Static per-pixel texture: `base` jittered by up to `amplitude` per channel.
    Noise { base: Rgb, amplitude: u8 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub radius: f64,
    pub color: Rgb,
    /// Disc centre at frame 0.
    pub start: [f64; 2],
    pub motion: MotionSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MotionSpec {
    Linear {
        velocity: [f64; 2],
    },
    RandomWalk {
        sigma: f64,
    },
    /// Linear drift plus a jump by `jump` at each frame listed in `at`.
    Teleport {
        #[serde(default)]
        velocity: [f64; 2],
        at: Vec<usize>,
        jump: [f64; 2],
    },
    /// Segments of constant speed, each heading in a random direction.
    /// Segments repeat cyclically.
    PiecewiseSpeed {
        segments: Vec<SpeedSegment>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedSegment {
    pub frames: usize,
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GtRow {
    pub frame: usize,
    pub target: usize,
    pub bbox: BoundingBox,
}

/// Ground-truth boxes, one row per target per frame.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthTable {
    pub rows: Vec<GtRow>,
}

impl GroundTruthTable {
    pub fn get(&self, frame: usize, target: usize) -> Option<&BoundingBox> {
        self.rows
            .iter()
            .find(|r| r.frame == frame && r.target == target)
            .map(|r| &r.bbox)
    }

    pub fn for_target(&self, target: usize) -> impl Iterator<Item = &GtRow> {
        self.rows.iter().filter(move |r| r.target == target)
    }

    /// Target ids in ascending order.
    pub fn targets(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.rows.iter().map(|r| r.target).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Boxes of every target at `frame`, ordered by target id.
    pub fn boxes_at(&self, frame: usize) -> Vec<BoundingBox> {
        let mut rows: Vec<&GtRow> = self.rows.iter().filter(|r| r.frame == frame).collect();
        rows.sort_by_key(|r| r.target);
        rows.into_iter().map(|r| r.bbox).collect()
    }
}

/// A validated scene with precomputed target trajectories. Any frame can be
/// rendered independently of the others.
#[derive(Debug, Clone)]
pub struct Scene {
    spec: SceneSpec,
    centers: Vec<Vec<[f64; 2]>>,
}

impl Scene {
    pub fn new(spec: SceneSpec) -> Result<Self> {
        validate(&spec)?;
        let centers = (0..spec.targets.len())
            .map(|t| trajectory(&spec, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { spec, centers })
    }

    pub fn spec(&self) -> &SceneSpec {
        &self.spec
    }

    pub fn frame_count(&self) -> usize {
        self.spec.frame_count
    }

    pub fn center(&self, frame: usize, target: usize) -> [f64; 2] {
        self.centers[target][frame]
    }

    pub fn gt_box(&self, frame: usize, target: usize) -> BoundingBox {
        let [cx, cy] = self.center(frame, target);
        let r = self.spec.targets[target].radius;
        BoundingBox {
            x: cx - r,
            y: cy - r,
            w: 2.0 * r,
            h: 2.0 * r,
        }
    }

    pub fn ground_truth(&self) -> GroundTruthTable {
        let rows = (0..self.spec.frame_count)
            .flat_map(|f| {
                (0..self.spec.targets.len()).map(move |t| (f, t))
            })
            .map(|(frame, target)| GtRow {
                frame,
                target,
                bbox: self.gt_box(frame, target),
            })
            .collect();
        GroundTruthTable { rows }
    }

    pub fn render(&self, index: usize) -> Frame {
        let spec = &self.spec;
        let mut frame = Frame::filled(spec.width, spec.height, [0, 0, 0]);
        for y in 0..spec.height {
            for x in 0..spec.width {
                frame.set_pixel(x, y, background_pixel(&spec.background, spec.seed, x, y));
            }
        }
        for (t, target) in spec.targets.iter().enumerate() {
            let [cx, cy] = self.center(index, t);
            let r = target.radius;
            let x0 = (cx - r).floor().max(0.0) as usize;
            let y0 = (cy - r).floor().max(0.0) as usize;
            let x1 = ((cx + r).ceil() as usize).min(spec.width);
            let y1 = ((cy + r).ceil() as usize).min(spec.height);
            for y in y0..y1 {
                for x in x0..x1 {
                    let dx = x as f64 + 0.5 - cx;
                    let dy = y as f64 + 0.5 - cy;
                    if dx * dx + dy * dy <= r * r {
                        frame.set_pixel(x, y, target.color);
                    }
                }
            }
        }
        frame
    }

    pub fn frames(&self) -> Vec<Frame> {
        (0..self.spec.frame_count).map(|i| self.render(i)).collect()
    }
}

/// Renders every frame of `spec` together with its ground truth.
pub fn generate(spec: &SceneSpec) -> Result<(Vec<Frame>, GroundTruthTable)> {
    let scene = Scene::new(spec.clone())?;
    Ok((scene.frames(), scene.ground_truth()))
}

/// Keeps frames whose index is a multiple of `keep_every` and renumbers the
/// ground truth to match.
pub fn downsample(
    frames: Vec<Frame>,
    gt: &GroundTruthTable,
    keep_every: usize,
) -> Result<(Vec<Frame>, GroundTruthTable)> {
    if keep_every == 0 {
        return Err(Error::config("keep_every must be at least 1"));
    }
    let frames = frames
        .into_iter()
        .enumerate()
        .filter(|(i, _)| i % keep_every == 0)
        .map(|(_, f)| f)
        .collect();
    let rows = gt
        .rows
        .iter()
        .filter(|r| r.frame % keep_every == 0)
        .map(|r| GtRow {
            frame: r.frame / keep_every,
            ..*r
        })
        .collect();
    Ok((frames, GroundTruthTable { rows }))
}

fn validate(spec: &SceneSpec) -> Result<()> {
    if spec.width == 0 || spec.height == 0 {
        return Err(Error::config("scene must have non-zero width and height"));
    }
    if spec.frame_count == 0 {
        return Err(Error::config("scene must have at least one frame"));
    }
    if let Background::Checkerboard { cell: 0, .. } = spec.background {
        return Err(Error::config("checkerboard cell size must be at least 1"));
    }
    for (t, target) in spec.targets.iter().enumerate() {
        let r = target.radius;
        if !(r >= 1.0 && 2.0 * r < spec.width as f64 && 2.0 * r < spec.height as f64) {
            return Err(Error::config(format!(
                "target {t}: radius {r} must be >= 1 and fit inside the frame"
            )));
        }
        let [x, y] = target.start;
        if !inside(spec, r, x, y) {
            return Err(Error::config(format!(
                "target {t}: start ({x}, {y}) does not fit inside the frame"
            )));
        }
        match &target.motion {
            MotionSpec::Linear { velocity } | MotionSpec::Teleport { velocity, .. }
                if !velocity.iter().all(|v| v.is_finite()) =>
            {
                return Err(Error::config(format!("target {t}: non-finite velocity")));
            }
            MotionSpec::RandomWalk { sigma } if !(*sigma >= 0.0 && sigma.is_finite()) => {
                return Err(Error::config(format!("target {t}: sigma must be >= 0")));
            }
            MotionSpec::PiecewiseSpeed { segments }
                if segments.is_empty()
                    || segments
                        .iter()
                        .any(|s| s.frames == 0 || !(s.speed >= 0.0 && s.speed.is_finite())) =>
            {
                return Err(Error::config(format!(
                    "target {t}: speed segments must be non-empty with frames >= 1 and speed >= 0"
                )));
            }
            _ => {}
        }
    }
    Ok(())
}

fn inside(spec: &SceneSpec, r: f64, x: f64, y: f64) -> bool {
    x >= r && x <= spec.width as f64 - r && y >= r && y <= spec.height as f64 - r
}

fn reflect(p: &mut f64, v: &mut f64, lo: f64, hi: f64) {
    while *p < lo || *p > hi {
        if *p < lo {
            *p = 2.0 * lo - *p;
        } else {
            *p = 2.0 * hi - *p;
        }
        *v = -*v;
    }
}

fn trajectory(spec: &SceneSpec, target: usize) -> Result<Vec<[f64; 2]>> {
    let t = &spec.targets[target];
    let r = t.radius;
    let (lo_x, hi_x) = (r, spec.width as f64 - r);
    let (lo_y, hi_y) = (r, spec.height as f64 - r);
    let mut rng = rng::seeded(rng::derive_seed(spec.seed, target as u64));

    let mut pos = t.start;
    let mut vel = match &t.motion {
        MotionSpec::Linear { velocity } | MotionSpec::Teleport { velocity, .. } => *velocity,
        _ => [0.0, 0.0],
    };
    let walk = match t.motion {
        MotionSpec::RandomWalk { sigma } if sigma > 0.0 => {
            Some(Normal::new(0.0, sigma).map_err(|e| Error::config(e.to_string()))?)
        }
        _ => None,
    };

    let mut out = Vec::with_capacity(spec.frame_count);
    out.push(pos);
    let mut segment = 0usize;
    let mut left_in_segment = 0usize;
    for frame in 1..spec.frame_count {
        match &t.motion {
            MotionSpec::Linear { .. } | MotionSpec::Teleport { .. } => {}
            MotionSpec::RandomWalk { .. } => {
                vel = match &walk {
                    Some(n) => [n.sample(&mut rng), n.sample(&mut rng)],
                    None => [0.0, 0.0],
                };
            }
            MotionSpec::PiecewiseSpeed { segments } => {
                if left_in_segment == 0 {
                    let seg = segments[segment % segments.len()];
                    segment += 1;
                    left_in_segment = seg.frames;
                    let heading = rng.random::<f64>() * std::f64::consts::TAU;
                    vel = [seg.speed * heading.cos(), seg.speed * heading.sin()];
                }
                left_in_segment -= 1;
            }
        }
        pos[0] += vel[0];
        pos[1] += vel[1];
        reflect(&mut pos[0], &mut vel[0], lo_x, hi_x);
        reflect(&mut pos[1], &mut vel[1], lo_y, hi_y);

        if let MotionSpec::Teleport { at, jump, .. } = &t.motion {
            if at.contains(&frame) {
                pos[0] += jump[0];
                pos[1] += jump[1];
                if !inside(spec, r, pos[0], pos[1]) {
                    return Err(Error::config(format!(
                        "target {target}: jump at frame {frame} leaves the frame (lands at ({:.1}, {:.1}))",
                        pos[0], pos[1]
                    )));
                }
            }
        }
        out.push(pos);
    }
    Ok(out)
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn background_pixel(bg: &Background, seed: u64, x: usize, y: usize) -> Rgb {
    match *bg {
        Background::Solid { color } => color,
        Background::Checkerboard { cell, colors } => colors[(x / cell + y / cell) % 2],
        Background::Noise { base, amplitude } => {
            let h = mix64(seed ^ mix64(((y as u64) << 32) | x as u64));
            let span = 2 * amplitude as i32 + 1;
            let mut out = base;
            for (c, px) in out.iter_mut().enumerate() {
                let jitter = ((h >> (c * 16)) & 0xffff) as i32 % span - amplitude as i32;
                *px = (*px as i32 + jitter).clamp(0, 255) as u8;
            }
            out
        }
    }
}

/// Built-in scene families used by the studies and acceptance tests.
pub mod suites {
    use super::*;

    pub const WIDTH: usize = 360;
    pub const HEIGHT: usize = 240;
    pub const RADIUS: f64 = 10.0;
    const TARGET: Rgb = [220, 30, 30];
    const PLAIN: Rgb = [40, 40, 40];

    fn start(rng: &mut rng::StreamRng, margin: f64) -> [f64; 2] {
        [
            rng::uniform(rng, margin, WIDTH as f64 - margin),
            rng::uniform(rng, margin, HEIGHT as f64 - margin),
        ]
    }

    /// Plain background, one disc drifting slowly, then a jump of length
    /// `jump` in a seed-chosen direction at `jump_frame`.
    pub fn teleport(seed: u64, frame_count: usize, jump_frame: usize, jump: f64) -> SceneSpec {
        let mut rng = rng::seeded(seed ^ 0x7e1e_9047);
        // Keep drawing until both ends of the jump fit.
        loop {
            let s = start(&mut rng, 30.0);
            let heading = rng.random::<f64>() * std::f64::consts::TAU;
            let j = [jump * heading.cos(), jump * heading.sin()];
            let drift = [rng::uniform(&mut rng, -1.0, 1.0), rng::uniform(&mut rng, -1.0, 1.0)];
            let spec = SceneSpec {
                width: WIDTH,
                height: HEIGHT,
                frame_count,
                background: Background::Solid { color: PLAIN },
                targets: vec![TargetSpec {
                    radius: RADIUS,
                    color: TARGET,
                    start: s,
                    motion: MotionSpec::Teleport {
                        velocity: drift,
                        at: vec![jump_frame],
                        jump: j,
                    },
                }],
                seed,
            };
            if Scene::new(spec.clone()).is_ok() {
                return spec;
            }
        }
    }

    /// Mixed scenarios: smooth motion, inconsistent speed, a camera switch,
    /// a random walk over texture and a fast-moving disc over a checkerboard.
    pub fn mixed(seed: u64, frame_count: usize) -> Vec<SceneSpec> {
        let mut rng = rng::seeded(seed ^ 0x5eed_0001);
        let target = |start, motion| TargetSpec {
            radius: RADIUS,
            color: TARGET,
            start,
            motion,
        };
        let scene = |background, t: TargetSpec, seed| SceneSpec {
            width: WIDTH,
            height: HEIGHT,
            frame_count,
            background,
            targets: vec![t],
            seed,
        };
        let heading = |rng: &mut rng::StreamRng, speed: f64| {
            let a = rng.random::<f64>() * std::f64::consts::TAU;
            [speed * a.cos(), speed * a.sin()]
        };
        let smooth = scene(
            Background::Solid { color: PLAIN },
            target(start(&mut rng, 40.0), MotionSpec::Linear { velocity: heading(&mut rng, 3.0) }),
            seed,
        );
        let erratic = scene(
            Background::Solid { color: [30, 60, 30] },
            target(
                start(&mut rng, 40.0),
                MotionSpec::PiecewiseSpeed {
                    segments: vec![
                        SpeedSegment { frames: 4, speed: 2.0 },
                        SpeedSegment { frames: 3, speed: 12.0 },
                        SpeedSegment { frames: 5, speed: 5.0 },
                        SpeedSegment { frames: 2, speed: 20.0 },
                    ],
                },
            ),
            seed.wrapping_add(1),
        );
        let mut switch = teleport(seed.wrapping_add(2), frame_count, frame_count / 2, 150.0);
        switch.background = Background::Solid { color: [60, 50, 70] };
        let textured = scene(
            Background::Noise { base: [50, 120, 40], amplitude: 30 },
            target(start(&mut rng, 40.0), MotionSpec::RandomWalk { sigma: 4.0 }),
            seed.wrapping_add(3),
        );
        let fast = scene(
            Background::Checkerboard { cell: 16, colors: [[200, 200, 200], [90, 90, 90]] },
            target(start(&mut rng, 40.0), MotionSpec::Linear { velocity: heading(&mut rng, 9.0) }),
            seed.wrapping_add(4),
        );
        vec![smooth, erratic, switch, textured, fast]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_spec(velocity: [f64; 2]) -> SceneSpec {
        SceneSpec {
            width: 200,
            height: 120,
            frame_count: 30,
            background: Background::Solid { color: [10, 10, 10] },
            targets: vec![TargetSpec {
                radius: 8.0,
                color: [255, 0, 0],
                start: [50.0, 50.0],
                motion: MotionSpec::Linear { velocity },
            }],
            seed: 3,
        }
    }

    #[test]
    fn linear_motion_by_construction() {
        let scene = Scene::new(linear_spec([2.0, 0.0])).unwrap();
        assert_eq!(scene.center(10, 0), [70.0, 50.0]);
        let gt = scene.ground_truth();
        assert_eq!(gt.rows.len(), 30);
        assert_eq!(gt.get(10, 0).unwrap().x, 62.0);
    }

    #[test]
    fn linear_motion_reflects() {
        let scene = Scene::new(linear_spec([20.0, 0.0])).unwrap();
        for f in 0..30 {
            let [x, _] = scene.center(f, 0);
            assert!((8.0..=192.0).contains(&x), "frame {f}: x = {x}");
        }
        // 50 + 8*20 = 210 -> reflected about 192 -> 174
        assert_eq!(scene.center(8, 0)[0], 174.0);
    }

    #[test]
    fn teleport_jumps_exactly() {
        let mut spec = linear_spec([0.0, 0.0]);
        spec.width = 360;
        spec.targets[0].motion = MotionSpec::Teleport {
            velocity: [0.0, 0.0],
            at: vec![20],
            jump: [150.0, 0.0],
        };
        let gt = Scene::new(spec).unwrap().ground_truth();
        let dx = gt.get(20, 0).unwrap().x - gt.get(19, 0).unwrap().x;
        assert_eq!(dx, 150.0);
    }

    #[test]
    fn teleport_out_of_frame_rejected() {
        let mut spec = linear_spec([0.0, 0.0]);
        spec.targets[0].motion = MotionSpec::Teleport {
            velocity: [0.0, 0.0],
            at: vec![5],
            jump: [400.0, 0.0],
        };
        let err = Scene::new(spec).unwrap_err();
        assert!(err.is_config());
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut spec = linear_spec([1.0, 0.0]);
        spec.targets[0].start = [2.0, 50.0];
        assert!(generate(&spec).is_err());
        let mut spec = linear_spec([1.0, 0.0]);
        spec.frame_count = 0;
        assert!(generate(&spec).is_err());
        let mut spec = linear_spec([1.0, 0.0]);
        spec.background = Background::Checkerboard { cell: 0, colors: [[0; 3], [255; 3]] };
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        for spec in suites::mixed(9, 12) {
            let (a, ga) = generate(&spec).unwrap();
            let (b, gb) = generate(&spec).unwrap();
            assert_eq!(a, b);
            assert_eq!(ga, gb);
        }
    }

    #[test]
    fn target_color_at_gt_center() {
        for spec in suites::mixed(4, 20) {
            let scene = Scene::new(spec.clone()).unwrap();
            for f in 0..scene.frame_count() {
                let [cx, cy] = scene.center(f, 0);
                let px = scene.render(f).pixel(cx as usize, cy as usize);
                assert_eq!(px, spec.targets[0].color);
            }
        }
    }

    #[test]
    fn downsample_examples() {
        let mut spec = linear_spec([2.0, 0.0]);
        spec.frame_count = 100;
        spec.width = 1000;
        let (frames, gt) = generate(&spec).unwrap();
        let (same, same_gt) = downsample(frames.clone(), &gt, 1).unwrap();
        assert_eq!(same, frames);
        assert_eq!(same_gt, gt);

        let (kept, kept_gt) = downsample(frames.clone(), &gt, 25).unwrap();
        assert_eq!(kept.len(), 4);
        assert_eq!(kept[3], frames[75]);
        assert_eq!(kept_gt.get(3, 0), gt.get(75, 0));

        let (_, k5) = downsample(frames, &gt, 5).unwrap();
        let step = k5.get(1, 0).unwrap().x - k5.get(0, 0).unwrap().x;
        assert_eq!(step, 10.0);
        assert!(downsample(vec![], &gt, 0).is_err());
    }

    #[test]
    fn downsample_commutes_with_rendering() {
        let spec = suites::mixed(2, 30).remove(1);
        let scene = Scene::new(spec.clone()).unwrap();
        let (frames, gt) = generate(&spec).unwrap();
        let (kept, _) = downsample(frames, &gt, 4).unwrap();
        let direct: Vec<Frame> = (0..30).step_by(4).map(|i| scene.render(i)).collect();
        assert_eq!(kept, direct);
    }

    #[test]
    fn teleport_suite_is_valid() {
        for seed in 0..50 {
            let spec = suites::teleport(seed, 20, 10, 150.0);
            let scene = Scene::new(spec).unwrap();
            let [a, b] = [scene.center(9, 0), scene.center(10, 0)];
            let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            assert!(d > 140.0, "seed {seed}: jump {d}");
        }
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = suites::mixed(1, 10).remove(3);
        let json = serde_json::to_string(&spec).unwrap();
        let back: SceneSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
        assert!(serde_json::from_str::<SceneSpec>(r#"{"width":1,"bogus":2}"#).is_err());
    }
}
