//! Particle swarm optimizer over a bounded real search space.
//!
//! The velocity update is the classic inertia/cognitive/social rule scaled by
//! an exploration factor `ef`:
//!
//! ```text
//! v' = ef * (omega * v + c1 * r1 * (pbest - x) + c2 * r2 * (gbest - x))
//! x' = clamp(x + v')
//! ```
//!
//! With `ef = 1` this is standard PSO. `r1` and `r2` are drawn per dimension
//! from the swarm's own seeded stream, all before any fitness is evaluated, so
//! a seed fixes the whole trajectory.

use std::ops::Index;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::adaptive::{AdaptiveController, DapState};
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};

/// A point in the search space. All coordinates are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(Vec<f64>);

impl StateVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::config("state vector must have at least one dimension"));
        }
        if let Some(v) = coords.iter().find(|v| !v.is_finite()) {
            return Err(Error::config(format!("state coordinate {v} is not finite")));
        }
        Ok(Self(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    fn from_raw(coords: Vec<f64>) -> Self {
        Self(coords)
    }
}

impl Index<usize> for StateVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<[f64; 2]> for StateVector {
    fn from(v: [f64; 2]) -> Self {
        Self(v.to_vec())
    }
}

/// Axis-aligned box `[lower, upper)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    lower: StateVector,
    upper: StateVector,
}

impl SearchSpace {
    pub fn new(lower: StateVector, upper: StateVector) -> Result<Self> {
        if lower.dim() != upper.dim() {
            return Err(Error::config(format!(
                "search space bounds have dimensions {} and {}",
                lower.dim(),
                upper.dim()
            )));
        }
        for d in 0..lower.dim() {
            if lower[d] >= upper[d] {
                return Err(Error::config(format!(
                    "search space dimension {d}: lower {} >= upper {}",
                    lower[d], upper[d]
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn from_bounds(bounds: &[(f64, f64)]) -> Result<Self> {
        let (lo, hi): (Vec<f64>, Vec<f64>) = bounds.iter().copied().unzip();
        Self::new(StateVector::new(lo)?, StateVector::new(hi)?)
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    pub fn lower(&self) -> &StateVector {
        &self.lower
    }

    pub fn upper(&self) -> &StateVector {
        &self.upper
    }

    /// Clamps each coordinate into `[lower, upper - ulp]`.
    pub fn clamp(&self, x: &mut [f64]) {
        for (d, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[d], self.upper[d].next_down());
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .enumerate()
                .all(|(d, &v)| v >= self.lower[d] && v < self.upper[d])
    }

    /// The part of this space within `radius` (per axis) of `center`.
    pub fn neighbourhood(&self, center: &[f64], radius: f64) -> Result<SearchSpace> {
        let bounds: Vec<(f64, f64)> = center
            .iter()
            .enumerate()
            .map(|(d, &c)| {
                let lo = (c - radius).max(self.lower[d]);
                let hi = (c + radius).min(self.upper[d]);
                (lo, hi)
            })
            .collect();
        SearchSpace::from_bounds(&bounds)
    }

    fn sample(&self, rng: &mut StreamRng) -> Vec<f64> {
        (0..self.dim())
            .map(|d| {
                let v = rng::uniform(rng, self.lower[d], self.upper[d]);
                v.min(self.upper[d].next_down())
            })
            .collect()
    }
}

/// Objective maximized by the swarm. Values are expected in [0, 1].
pub trait Fitness {
    fn evaluate(&self, x: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64> Fitness for F {
    fn evaluate(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: StateVector,
    pub velocity: StateVector,
    pub pbest_position: StateVector,
    pub pbest_fitness: f64,
}

/// `omega * v + c1 * r1 * (pbest - x) + c2 * r2 * (gbest - x)`, element-wise.
///
/// Panics if the dimensions of the inputs disagree.
pub fn standard_velocity(
    p: &Particle,
    gbest: &StateVector,
    omega: f64,
    c1: f64,
    c2: f64,
    r1: &[f64],
    r2: &[f64],
) -> StateVector {
    let dim = p.position.dim();
    assert!(
        p.velocity.dim() == dim
            && p.pbest_position.dim() == dim
            && gbest.dim() == dim
            && r1.len() == dim
            && r2.len() == dim,
        "dimension mismatch in velocity update"
    );
    let v = (0..dim)
        .map(|d| {
            let x = p.position[d];
            omega * p.velocity[d]
                + c1 * r1[d] * (p.pbest_position[d] - x)
                + c2 * r2[d] * (gbest[d] - x)
        })
        .collect();
    StateVector::from_raw(v)
}

/// The standard update scaled as a whole by the exploration factor `ef`.
pub fn swatrack_velocity(
    p: &Particle,
    gbest: &StateVector,
    dap: &DapState,
    ef: f64,
    r1: &[f64],
    r2: &[f64],
) -> StateVector {
    let v = standard_velocity(p, gbest, dap.omega, dap.c1, dap.c2, r1, r2);
    StateVector::from_raw(v.0.into_iter().map(|c| ef * c).collect())
}

/// What happens to a particle component that leaves the search space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Clamp into `[lower, upper)`, keeping the velocity.
    #[default]
    Clamp,
    /// Clamp and zero that velocity component.
    Absorb,
    /// Redraw that component uniformly in the space and zero its velocity.
    Reinit,
}

#[derive(Debug, Clone)]
pub struct Swarm {
    particles: Vec<Particle>,
    boundary: Boundary,
    gbest_position: StateVector,
    gbest_fitness: f64,
    iteration: usize,
    space: SearchSpace,
    rng_seed: u64,
    rng: StreamRng,
    evaluations: usize,
}

fn checked(particle: usize, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Evaluation { particle, value })
    }
}

impl Swarm {
    /// Positions uniform over `space`, velocities uniform in [-1, 1].
    pub fn init<F: Fitness + ?Sized>(
        space: SearchSpace,
        count: usize,
        seed: u64,
        fitness: &F,
    ) -> Result<Self> {
        let region = space.clone();
        Self::init_in_region(space, &region, None, count, seed, fitness)
    }

    /// Like [`Swarm::init`], but positions are drawn from `region` (a sub-box
    /// of `space`), and particle 0 is placed at `pinned` when given.
    pub fn init_in_region<F: Fitness + ?Sized>(
        space: SearchSpace,
        region: &SearchSpace,
        pinned: Option<&StateVector>,
        count: usize,
        seed: u64,
        fitness: &F,
    ) -> Result<Self> {
        if count == 0 {
            return Err(Error::config("swarm needs at least one particle"));
        }
        if region.dim() != space.dim() {
            return Err(Error::config("sampling region dimension differs from search space"));
        }
        let dim = space.dim();
        let mut rng = rng::seeded(seed);

        let mut particles = Vec::with_capacity(count);
        for i in 0..count {
            let mut position = match pinned {
                Some(p) if i == 0 => {
                    if p.dim() != dim {
                        return Err(Error::config("pinned position has the wrong dimension"));
                    }
                    p.as_slice().to_vec()
                }
                _ => region.sample(&mut rng),
            };
            space.clamp(&mut position);
            let velocity = (0..dim).map(|_| rng::uniform(&mut rng, -1.0, 1.0)).collect();
            let position = StateVector::from_raw(position);
            particles.push(Particle {
                pbest_position: position.clone(),
                position,
                velocity: StateVector::from_raw(velocity),
                pbest_fitness: 0.0,
            });
        }
        for (i, p) in particles.iter_mut().enumerate() {
            p.pbest_fitness = checked(i, fitness.evaluate(p.position.as_slice()))?;
        }

        let mut best = 0;
        for (i, p) in particles.iter().enumerate() {
            if p.pbest_fitness > particles[best].pbest_fitness {
                best = i;
            }
        }
        Ok(Self {
            boundary: Boundary::Clamp,
            gbest_position: particles[best].pbest_position.clone(),
            gbest_fitness: particles[best].pbest_fitness,
            evaluations: count,
            particles,
            iteration: 0,
            space,
            rng_seed: seed,
            rng,
        })
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn gbest_position(&self) -> &StateVector {
        &self.gbest_position
    }

    pub fn gbest_fitness(&self) -> f64 {
        self.gbest_fitness
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn space(&self) -> &SearchSpace {
        &self.space
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    /// Replaces the boundary policy used by later steps.
    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Fitness evaluations performed so far, including initialization.
    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    /// Largest per-axis distance from any particle to the global best.
    pub fn radius(&self) -> f64 {
        self.particles
            .iter()
            .flat_map(|p| {
                p.position
                    .as_slice()
                    .iter()
                    .zip(self.gbest_position.as_slice())
                    .map(|(a, b)| (a - b).abs())
            })
            .fold(0.0, f64::max)
    }

    /// One synchronous iteration: move every particle, then evaluate, then
    /// update personal and global bests in particle order.
    pub fn step<F: Fitness + ?Sized>(&mut self, fitness: &F, dap: &DapState, ef: f64) -> Result<()> {
        let dim = self.space.dim();
        let mut r1 = vec![0.0; dim];
        let mut r2 = vec![0.0; dim];
        for p in self.particles.iter_mut() {
            for d in 0..dim {
                r1[d] = rng::open01(&mut self.rng);
            }
            for d in 0..dim {
                r2[d] = rng::open01(&mut self.rng);
            }
            let v = swatrack_velocity(p, &self.gbest_position, dap, ef, &r1, &r2);
            let mut x: Vec<f64> = p
                .position
                .as_slice()
                .iter()
                .zip(v.as_slice())
                .map(|(x, v)| x + v)
                .collect();
            let mut v = v.into_inner();
            for d in 0..dim {
                let (lo, hi) = (self.space.lower[d], self.space.upper[d]);
                if x[d] >= lo && x[d] < hi {
                    continue;
                }
                match self.boundary {
                    Boundary::Clamp => x[d] = x[d].clamp(lo, hi.next_down()),
                    Boundary::Absorb => {
                        x[d] = x[d].clamp(lo, hi.next_down());
                        v[d] = 0.0;
                    }
                    Boundary::Reinit => {
                        x[d] = rng::uniform(&mut self.rng, lo, hi).min(hi.next_down());
                        v[d] = 0.0;
                    }
                }
            }
            p.position = StateVector::from_raw(x);
            p.velocity = StateVector::from_raw(v);
        }

        let values = self
            .particles
            .iter()
            .map(|p| fitness.evaluate(p.position.as_slice()))
            .collect::<Vec<_>>();
        self.evaluations += values.len();

        for (i, (p, value)) in self.particles.iter_mut().zip(values).enumerate() {
            let value = checked(i, value)?;
            if value > p.pbest_fitness {
                p.pbest_fitness = value;
                p.pbest_position = p.position.clone();
            }
        }
        for p in &self.particles {
            if p.pbest_fitness > self.gbest_fitness {
                self.gbest_fitness = p.pbest_fitness;
                self.gbest_position = p.pbest_position.clone();
            }
        }
        self.iteration += 1;
        Ok(())
    }

    /// Advances the internal stream without touching particles. Used to keep
    /// seeds independent when a caller needs an extra draw.
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

/// When a run may stop early.
///
/// The swarm has converged once the best fitness reaches `t_minf` and either
/// every particle lies within `radius` (per axis) of the global best, or the
/// best fitness improved by less than `delta` for `patience` consecutive
/// iterations. A best fitness at the top of the range (1.0) is always
/// converged since it cannot improve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceCriteria {
    pub radius: f64,
    pub delta: f64,
    pub patience: usize,
}

impl Default for ConvergenceCriteria {
    fn default() -> Self {
        Self {
            radius: 1.0,
            delta: 1e-4,
            patience: 3,
        }
    }
}

const FITNESS_CEILING: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOutcome {
    pub iterations: usize,
    pub converged: bool,
}

/// Iterates [`Swarm::step`] under `ctrl` until convergence or until the
/// evaluation rounds (initialization plus steps) reach
/// `min(max_iter, ctrl.k_cap())`. The cap is re-read every iteration since the
/// controller may move it.
pub fn run_until_converged<F, C>(
    swarm: &mut Swarm,
    fitness: &F,
    ctrl: &mut C,
    max_iter: usize,
    criteria: &ConvergenceCriteria,
) -> Result<RunOutcome>
where
    F: Fitness + ?Sized,
    C: AdaptiveController + ?Sized,
{
    if max_iter == 0 {
        return Err(Error::config("iteration cap K must be at least 1"));
    }
    let start = swarm.iteration;
    let mut stalled = 0usize;
    while swarm.iteration - start + 1 < max_iter.min(ctrl.k_cap()) {
        let before = swarm.gbest_fitness;
        ctrl.observe(before);
        let dap = ctrl.dap();
        swarm.step(fitness, &dap, ctrl.ef())?;

        if swarm.gbest_fitness - before < criteria.delta {
            stalled += 1;
        } else {
            stalled = 0;
        }
        let good = swarm.gbest_fitness >= ctrl.t_minf();
        if swarm.gbest_fitness >= FITNESS_CEILING
            || (good && (swarm.radius() < criteria.radius || stalled >= criteria.patience))
        {
            return Ok(RunOutcome {
                iterations: swarm.iteration - start,
                converged: true,
            });
        }
    }
    Ok(RunOutcome {
        iterations: swarm.iteration - start,
        converged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adaptive::{EfState, FixedController, SwaTrackController};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn space_360() -> SearchSpace {
        SearchSpace::from_bounds(&[(0.0, 360.0), (0.0, 240.0)]).unwrap()
    }

    fn particle(x: [f64; 2], v: [f64; 2], pbest: [f64; 2]) -> Particle {
        Particle {
            position: x.into(),
            velocity: v.into(),
            pbest_position: pbest.into(),
            pbest_fitness: 0.0,
        }
    }

    fn fixed(dap: DapState, ef: f64, k: usize) -> FixedController {
        FixedController {
            dap,
            ef,
            k_cap: k,
            t_minf: 0.5,
        }
    }

    #[test]
    fn space_rejects_inverted_bounds() {
        assert!(SearchSpace::from_bounds(&[(0.0, 10.0), (5.0, 5.0)]).is_err());
        assert!(SearchSpace::from_bounds(&[(0.0, 10.0), (6.0, 5.0)]).is_err());
        assert!(StateVector::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn single_particle_is_gbest() {
        let space = SearchSpace::from_bounds(&[(0.0, 10.0), (0.0, 10.0)]).unwrap();
        let s = Swarm::init(space, 1, 3, &|x: &[f64]| x[0] / 10.0).unwrap();
        assert_eq!(s.gbest_position(), &s.particles()[0].position);
        assert_eq!(s.iteration(), 0);
    }

    #[test]
    fn init_respects_bounds_and_velocity_range() {
        let s = Swarm::init(space_360(), 15, 99, &|_: &[f64]| 0.5).unwrap();
        assert_eq!(s.particles().len(), 15);
        for p in s.particles() {
            assert!(s.space().contains(p.position.as_slice()));
            assert!(p.velocity.as_slice().iter().all(|v| (-1.0..=1.0).contains(v)));
            assert_eq!(p.pbest_position, p.position);
        }
    }

    #[test]
    fn init_is_deterministic() {
        let f = |x: &[f64]| 1.0 / (1.0 + x[0] * x[0]);
        let a = Swarm::init(space_360(), 15, 5, &f).unwrap();
        let b = Swarm::init(space_360(), 15, 5, &f).unwrap();
        assert_eq!(a.particles(), b.particles());
        assert_eq!(a.gbest_position(), b.gbest_position());
    }

    #[test]
    fn init_rejects_empty_swarm() {
        assert!(Swarm::init(space_360(), 0, 1, &|_: &[f64]| 0.0).is_err());
    }

    #[test]
    fn standard_velocity_zero_coefficients() {
        let p = particle([3.0, 4.0], [1.0, -2.0], [0.0, 0.0]);
        let v = standard_velocity(&p, &[9.0, 9.0].into(), 0.0, 0.0, 0.0, &[0.5, 0.5], &[0.5, 0.5]);
        assert_eq!(v.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn standard_velocity_at_bests_is_inertia_only() {
        let p = particle([3.0, 4.0], [1.0, -2.0], [3.0, 4.0]);
        let v = standard_velocity(&p, &[3.0, 4.0].into(), 0.7, 0.3, 0.3, &[0.2, 0.9], &[0.4, 0.1]);
        assert_eq!(v.as_slice(), &[0.7, -1.4]);
    }

    #[test]
    fn standard_velocity_hand_example() {
        // 0.4*1 + 0.3*1*(2-0) + 0.3*1*(0-0) = 1.0 ; symmetric in y
        let p = particle([0.0, 0.0], [1.0, 1.0], [2.0, 0.0]);
        let v = standard_velocity(&p, &[0.0, 2.0].into(), 0.4, 0.3, 0.3, &[1.0, 1.0], &[1.0, 1.0]);
        assert_abs_diff_eq!(v[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    #[should_panic(expected = "dimension mismatch")]
    fn standard_velocity_dimension_mismatch() {
        let p = particle([0.0, 0.0], [1.0, 1.0], [2.0, 0.0]);
        standard_velocity(&p, &StateVector::zeros(3), 0.4, 0.3, 0.3, &[1.0, 1.0], &[1.0, 1.0]);
    }

    #[test]
    fn swatrack_velocity_scales_by_ef() {
        let p = particle([0.0, 0.0], [1.0, 1.0], [2.0, 0.0]);
        let g: StateVector = [0.0, 2.0].into();
        let dap = DapState::default();
        let one = [1.0, 1.0];
        let std = standard_velocity(&p, &g, 0.4, 0.3, 0.3, &one, &one);
        assert_eq!(swatrack_velocity(&p, &g, &dap, 1.0, &one, &one), std);
        let v2 = swatrack_velocity(&p, &g, &dap, 2.0, &one, &one);
        assert_abs_diff_eq!(v2[0], 2.0, epsilon = 1e-12);
        let v25 = swatrack_velocity(&p, &g, &dap, 25.0, &one, &one);
        assert_abs_diff_eq!(v25[0], 25.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v25[1], 25.0, epsilon = 1e-12);
    }

    #[test]
    fn step_with_zero_motion_keeps_positions() {
        let space = space_360();
        let mut s = Swarm::init(space, 5, 11, &|_: &[f64]| 0.3).unwrap();
        for p in s.particles.iter_mut() {
            p.velocity = StateVector::zeros(2);
        }
        let before: Vec<_> = s.particles().iter().map(|p| p.position.clone()).collect();
        let dap = DapState {
            omega: 0.0,
            c1: 0.0,
            c2: 0.0,
            step_m: 0.0,
        };
        s.step(&|_: &[f64]| 0.3, &dap, 1.0).unwrap();
        let after: Vec<_> = s.particles().iter().map(|p| p.position.clone()).collect();
        assert_eq!(before, after);
        assert_eq!(s.iteration(), 1);
    }

    #[test]
    fn step_clamps_past_upper_bound() {
        let mut s = Swarm::init(space_360(), 1, 0, &|_: &[f64]| 0.0).unwrap();
        s.particles[0] = particle([350.0, 100.0], [20.0, 0.0], [350.0, 100.0]);
        s.gbest_position = [350.0, 100.0].into();
        let inertia_only = DapState {
            omega: 1.0,
            c1: 0.0,
            c2: 0.0,
            step_m: 0.0,
        };
        s.step(&|_: &[f64]| 0.0, &inertia_only, 1.0).unwrap();
        let x = &s.particles()[0].position;
        assert_eq!(x[0], 360.0f64.next_down());
        assert!(x[0] < 360.0);
        assert_eq!(x[1], 100.0);
    }

    #[test]
    fn step_reports_non_finite_fitness() {
        let mut s = Swarm::init(space_360(), 4, 0, &|_: &[f64]| 0.1).unwrap();
        let err = s
            .step(&|x: &[f64]| if x[0] > -1.0 { f64::NAN } else { 0.0 }, &DapState::default(), 1.0)
            .unwrap_err();
        assert!(matches!(err, Error::Evaluation { particle: 0, .. }));
    }

    #[test]
    fn steps_replay_bit_exactly() {
        let f = |x: &[f64]| 1.0 / (1.0 + (x[0] - 100.0).powi(2) + (x[1] - 50.0).powi(2));
        let run = || {
            let mut s = Swarm::init(space_360(), 15, 17, &f).unwrap();
            for _ in 0..10 {
                s.step(&f, &DapState::default(), 3.0).unwrap();
            }
            s
        };
        let (a, b) = (run(), run());
        assert_eq!(a.particles(), b.particles());
        assert_eq!(a.gbest_fitness().to_bits(), b.gbest_fitness().to_bits());
    }

    #[test]
    fn constant_fitness_converges_after_one_iteration() {
        let f = |_: &[f64]| 1.0;
        let mut s = Swarm::init(space_360(), 15, 1, &f).unwrap();
        let mut ctrl = fixed(DapState::default(), 1.0, 100);
        let out = run_until_converged(&mut s, &f, &mut ctrl, 100, &ConvergenceCriteria::default())
            .unwrap();
        assert_eq!(out.iterations, 1);
        assert!(out.converged);
    }

    #[test]
    fn cap_is_enforced_on_noise() {
        // Hash-like noise never stagnates above threshold for long.
        let f = |x: &[f64]| ((x[0] * 12.9898 + x[1] * 78.233).sin() * 43758.5453).fract().abs() * 0.4;
        let mut s = Swarm::init(space_360(), 15, 4, &f).unwrap();
        let mut ctrl = SwaTrackController::new(DapState::default(), EfState::default());
        let out = run_until_converged(&mut s, &f, &mut ctrl, 1000, &ConvergenceCriteria::default())
            .unwrap();
        assert!(!out.converged);
        assert!(out.iterations <= EfState::default().k_max);
        assert!(s.evaluations() <= 15 * EfState::default().k_max);
    }

    #[test]
    fn sphere_converges_near_center() {
        let c = [123.4, 87.6];
        let f = move |x: &[f64]| 1.0 / (1.0 + (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2));
        // f >= 0.99 exactly when the point is within ~0.1 px of c.
        let dap = DapState::new(0.7, 0.15, 0.15, 0.0).unwrap();
        let mut hits = 0;
        for seed in 0..100 {
            let mut s = Swarm::init(space_360(), 15, seed, &f).unwrap();
            let mut ctrl = FixedController {
                t_minf: 0.99,
                ..fixed(dap, 1.0, 100)
            };
            run_until_converged(&mut s, &f, &mut ctrl, 100, &ConvergenceCriteria::default())
                .unwrap();
            let g = s.gbest_position();
            let err = ((g[0] - c[0]).powi(2) + (g[1] - c[1]).powi(2)).sqrt();
            if err < 0.1 {
                hits += 1;
            }
        }
        assert!(hits >= 95, "only {hits}/100 runs landed within 0.1 px");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn bests_monotone_and_positions_bounded(seed in any::<u64>(), ef in 0.5f64..60.0) {
            let f = |x: &[f64]| 1.0 / (1.0 + 0.01 * ((x[0] - 200.0).powi(2) + (x[1] - 30.0).powi(2)));
            let mut s = Swarm::init(space_360(), 8, seed, &f).unwrap();
            let mut g = s.gbest_fitness();
            let mut pb: Vec<f64> = s.particles().iter().map(|p| p.pbest_fitness).collect();
            for _ in 0..15 {
                s.step(&f, &DapState::default(), ef).unwrap();
                prop_assert!(s.gbest_fitness() >= g);
                g = s.gbest_fitness();
                for (p, old) in s.particles().iter().zip(pb.iter_mut()) {
                    prop_assert!(s.space().contains(p.position.as_slice()));
                    prop_assert!(p.pbest_fitness >= *old);
                    *old = p.pbest_fitness;
                }
                let best = s.particles().iter().map(|p| p.pbest_fitness).fold(f64::MIN, f64::max);
                prop_assert_eq!(best, s.gbest_fitness());
            }
        }

        #[test]
        fn velocity_linear_in_v_without_attraction(
            vx in -50.0f64..50.0, vy in -50.0f64..50.0, w in 0.0f64..1.0,
        ) {
            let p1 = particle([1.0, 2.0], [vx, vy], [7.0, 7.0]);
            let p2 = particle([1.0, 2.0], [2.0 * vx, 2.0 * vy], [7.0, 7.0]);
            let g: StateVector = [5.0, 5.0].into();
            let r = [0.5, 0.5];
            let a = standard_velocity(&p1, &g, w, 0.0, 0.0, &r, &r);
            let b = standard_velocity(&p2, &g, w, 0.0, 0.0, &r, &r);
            prop_assert_eq!(b[0], 2.0 * a[0]);
            prop_assert_eq!(b[1], 2.0 * a[1]);
        }
    }
}
