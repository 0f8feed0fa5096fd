//! Sampling-importance-resampling particle filter with a Gaussian random-walk
//! motion model. This is the comparison baseline.

use std::time::Instant;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::appearance::{bhattacharyya_fitness, BinLayout, BinnedFrame, BoundingBox, Frame, Histogram};
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};
use crate::swarm::{SearchSpace, StateVector};
use crate::tracker::TrackRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PfEstimate {
    /// Weighted mean of the particle positions.
    #[default]
    Mean,
    /// Position of the heaviest particle.
    Map,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PfConfig {
    pub particles: usize,
    /// Standard deviation of the per-axis random walk, in pixels.
    pub motion_sigma: f64,
    pub likelihood_lambda: f64,
    pub estimate: PfEstimate,
    /// Estimates scoring below this are flagged lost.
    pub lost_threshold: f64,
    pub box_w: Option<f64>,
    pub box_h: Option<f64>,
    pub layout: BinLayout,
    pub seed: u64,
}

impl Default for PfConfig {
    fn default() -> Self {
        Self {
            particles: 150,
            motion_sigma: 8.0,
            likelihood_lambda: 20.0,
            estimate: PfEstimate::Mean,
            lost_threshold: 0.5,
            box_w: None,
            box_h: None,
            layout: BinLayout::HsvJoint,
            seed: 0,
        }
    }
}

impl PfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.particles == 0 {
            return Err(Error::config("particle filter needs at least one particle"));
        }
        if !(self.motion_sigma >= 0.0 && self.motion_sigma.is_finite()) {
            return Err(Error::config(format!("motion_sigma = {} must be >= 0", self.motion_sigma)));
        }
        if !(self.likelihood_lambda > 0.0 && self.likelihood_lambda.is_finite()) {
            return Err(Error::config("likelihood_lambda must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedParticle {
    pub position: StateVector,
    pub weight: f64,
}

/// Adds `N(0, sigma)` noise per axis and clamps into `space`.
pub fn pf_predict(particles: &mut [WeightedParticle], sigma: f64, space: &SearchSpace, rng: &mut StreamRng) {
    if sigma == 0.0 {
        return;
    }
    let noise = Normal::new(0.0, sigma).expect("sigma is finite and positive");
    for p in particles.iter_mut() {
        let mut x = p.position.as_slice().to_vec();
        for v in x.iter_mut() {
            *v += noise.sample(rng);
        }
        space.clamp(&mut x);
        p.position = StateVector::new(x).expect("clamped coordinates are finite");
    }
}

/// Normalized weights `∝ exp(lambda · (bc − 1))`. Returns `true` when the raw
/// weights were all zero and the result fell back to uniform.
pub fn weights_from_similarity(bc: &[f64], lambda: f64) -> (Vec<f64>, bool) {
    let raw: Vec<f64> = bc.iter().map(|b| (lambda * (b - 1.0)).exp()).collect();
    let total: f64 = raw.iter().sum();
    if total > 0.0 && total.is_finite() {
        (raw.iter().map(|w| w / total).collect(), false)
    } else {
        (vec![1.0 / bc.len() as f64; bc.len()], true)
    }
}

/// Reweights by appearance similarity under a `w × h` box at each particle.
/// Returns the per-particle similarities and the degeneracy flag.
pub fn pf_update_weights(
    particles: &mut [WeightedParticle],
    frame: &BinnedFrame,
    reference: &Histogram,
    box_size: (f64, f64),
    lambda: f64,
) -> (Vec<f64>, bool) {
    let bc: Vec<f64> = particles
        .iter()
        .map(|p| {
            let b = BoundingBox::from_center(p.position[0], p.position[1], box_size.0, box_size.1);
            bhattacharyya_fitness(reference, &frame.histogram(&b)).fitness()
        })
        .collect();
    let (w, degenerate) = weights_from_similarity(&bc, lambda);
    for (p, w) in particles.iter_mut().zip(w) {
        p.weight = w;
    }
    (bc, degenerate)
}

/// Low-variance resampling with a single comb offset.
pub fn pf_resample_systematic(particles: &[WeightedParticle], rng: &mut StreamRng) -> Vec<WeightedParticle> {
    systematic_with_offset(particles, rng::uniform(rng, 0.0, 1.0))
}

fn systematic_with_offset(particles: &[WeightedParticle], offset: f64) -> Vec<WeightedParticle> {
    let n = particles.len();
    let mut out = Vec::with_capacity(n);
    let mut cumulative = particles[0].weight;
    let mut i = 0;
    for k in 0..n {
        let u = (offset + k as f64) / n as f64;
        while u >= cumulative && i + 1 < n {
            i += 1;
            cumulative += particles[i].weight;
        }
        out.push(WeightedParticle {
            position: particles[i].position.clone(),
            weight: 1.0 / n as f64,
        });
    }
    out
}

fn estimate(particles: &[WeightedParticle], how: PfEstimate) -> [f64; 2] {
    match how {
        PfEstimate::Mean => particles.iter().fold([0.0, 0.0], |acc, p| {
            [acc[0] + p.weight * p.position[0], acc[1] + p.weight * p.position[1]]
        }),
        PfEstimate::Map => {
            let best = particles
                .iter()
                .reduce(|a, b| if b.weight > a.weight { b } else { a })
                .expect("particle set is non-empty");
            [best.position[0], best.position[1]]
        }
    }
}

/// Runs the filter over `frames`, starting from `init_box` in the first one.
/// Each record charges `N` evaluations; the reported fitness is the
/// similarity at the estimate and is not counted.
pub fn pf_track_sequence<I>(frames: I, init_box: BoundingBox, cfg: &PfConfig) -> Result<Vec<TrackRecord>>
where
    I: IntoIterator<Item = Result<Frame>>,
{
    cfg.validate()?;
    let mut frames = frames.into_iter().peekable();
    let reference = match frames.peek() {
        None => return Err(Error::config("frame source is empty")),
        Some(Err(_)) => return Err(frames.next().unwrap().unwrap_err()),
        Some(Ok(first)) => BinnedFrame::new(first, cfg.layout).histogram(&init_box),
    };
    if reference.is_empty() {
        return Err(Error::Initialization("initial box covers no pixels of the first frame".into()));
    }
    let size = (cfg.box_w.unwrap_or(init_box.w), cfg.box_h.unwrap_or(init_box.h));
    let (cx, cy) = init_box.center();
    let n = cfg.particles;
    let mut particles = vec![
        WeightedParticle {
            position: StateVector::new(vec![cx, cy])?,
            weight: 1.0 / n as f64,
        };
        n
    ];
    let mut rng = rng::seeded(cfg.seed);
    let mut out = Vec::new();

    for (index, frame) in frames.enumerate() {
        let frame = frame?;
        let started = Instant::now();
        let space = SearchSpace::from_bounds(&[(0.0, frame.width() as f64), (0.0, frame.height() as f64)])?;
        let binned = BinnedFrame::new(&frame, cfg.layout);

        pf_predict(&mut particles, cfg.motion_sigma, &space, &mut rng);
        pf_update_weights(&mut particles, &binned, &reference, size, cfg.likelihood_lambda);
        let [ex, ey] = estimate(&particles, cfg.estimate);
        let bbox = BoundingBox::from_center(ex, ey, size.0, size.1);
        let obs = bhattacharyya_fitness(&reference, &binned.histogram(&bbox));
        particles = pf_resample_systematic(&particles, &mut rng);

        out.push(TrackRecord {
            frame_index: index,
            target: 0,
            bbox,
            fitness: obs.fitness(),
            iterations_used: 1,
            evaluations: n,
            elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
            lost: !obs.is_observed() || obs.fitness() < cfg.lost_threshold,
        });
    }
    Ok(out)
}
