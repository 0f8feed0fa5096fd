//! Adaptive swarm parameters.
//!
//! Two feedback loops steer the swarm:
//!
//! * **Dynamic acceleration parameters** (`DapState`): the inertia `omega`,
//!   cognitive weight `c1` and social weight `c2` move by a step `m` according
//!   to how consistently the target has been moving. Consistent motion favours
//!   inertia and personal memory; erratic motion favours the social term. The
//!   three weights are kept normalized so that they sum to one.
//! * **Exploration factor** (`EfState`): a multiplier on the whole velocity
//!   update, raised together with the iteration budget `K` while the best
//!   fitness stays at or below `t_minf`, and lowered otherwise.

use std::collections::VecDeque;
use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, TAU};

use serde::Serialize;

use crate::error::{Error, Result};

/// Lower clamp applied to each raw DAP component before normalization.
pub const DAP_COMPONENT_MIN: f64 = 0.05;
/// Upper clamp applied to each raw DAP component before normalization.
pub const DAP_COMPONENT_MAX: f64 = 0.9;

const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DapState {
    pub omega: f64,
    pub c1: f64,
    pub c2: f64,
    pub step_m: f64,
}

impl DapState {
    pub fn new(omega: f64, c1: f64, c2: f64, step_m: f64) -> Result<Self> {
        for (name, v) in [("omega", omega), ("c1", c1), ("c2", c2)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::config(format!("{name} = {v} must lie in (0, 1)")));
            }
        }
        if !(step_m >= 0.0 && step_m.is_finite()) {
            return Err(Error::config(format!("DAP step m = {step_m} must be >= 0")));
        }
        let sum = omega + c1 + c2;
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::config(format!(
                "omega + c1 + c2 = {sum} but the weights must sum to 1"
            )));
        }
        Ok(Self {
            omega,
            c1,
            c2,
            step_m,
        })
    }

    pub fn sum(&self) -> f64 {
        self.omega + self.c1 + self.c2
    }
}

impl Default for DapState {
    fn default() -> Self {
        Self {
            omega: 0.4,
            c1: 0.3,
            c2: 0.3,
            step_m: 0.05,
        }
    }
}

/// One DAP adjustment driven by the motion consistency `consistency` in [0, 1].
///
/// At or above `threshold` the motion counts as consistent and inertia and
/// `c1` grow at the expense of `c2`; below it the opposite happens. The shared
/// step is shortened so that no decreasing weight is pushed below
/// `DAP_COMPONENT_MIN`; each component is then clamped to
/// `[DAP_COMPONENT_MIN, DAP_COMPONENT_MAX]` and the triple rescaled to sum to
/// one. For `step_m <= 0.05` every output component lies in
/// `[DAP_COMPONENT_MIN / 1.05, DAP_COMPONENT_MAX / 0.95]`.
pub fn update_dap(dap: &DapState, consistency: f64, threshold: f64) -> DapState {
    let headroom = |v: f64| (v - DAP_COMPONENT_MIN).max(0.0);
    let (omega, c1, c2) = if consistency >= threshold {
        let m = dap.step_m.min(headroom(dap.c2));
        (dap.omega + m, dap.c1 + m, dap.c2 - m)
    } else {
        let m = dap.step_m.min(headroom(dap.omega)).min(headroom(dap.c1));
        (dap.omega - m, dap.c1 - m, dap.c2 + m)
    };
    let clamp = |v: f64| v.clamp(DAP_COMPONENT_MIN, DAP_COMPONENT_MAX);
    let (omega, c1, c2) = (clamp(omega), clamp(c1), clamp(c2));
    let sum = omega + c1 + c2;
    DapState {
        omega: omega / sum,
        c1: c1 / sum,
        c2: c2 / sum,
        step_m: dap.step_m,
    }
}

/// Exploration factor and iteration budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfState {
    pub ef: f64,
    pub k_budget: usize,
    pub step_n: f64,
    pub t_minf: f64,
    pub k_min: usize,
    pub k_max: usize,
    pub ef_min: f64,
    pub ef_max: f64,
}

impl EfState {
    pub fn new(
        ef: f64,
        k_budget: usize,
        step_n: f64,
        t_minf: f64,
        (k_min, k_max): (usize, usize),
        (ef_min, ef_max): (f64, f64),
    ) -> Result<Self> {
        if !(step_n > 0.0 && step_n.is_finite()) {
            return Err(Error::config(format!("EF step n = {step_n} must be > 0")));
        }
        if !(t_minf > 0.0 && t_minf < 1.0) {
            return Err(Error::config(format!("t_minf = {t_minf} must lie in (0, 1)")));
        }
        if k_min < 1 || k_min > k_max {
            return Err(Error::config(format!(
                "iteration range [{k_min}, {k_max}] is invalid"
            )));
        }
        if !(k_min..=k_max).contains(&k_budget) {
            return Err(Error::config(format!(
                "K = {k_budget} outside [{k_min}, {k_max}]"
            )));
        }
        if !(ef_min > 0.0 && ef_min <= ef_max && ef_max.is_finite()) {
            return Err(Error::config(format!(
                "EF range [{ef_min}, {ef_max}] is invalid"
            )));
        }
        if !(ef_min..=ef_max).contains(&ef) {
            return Err(Error::config(format!(
                "EF = {ef} outside [{ef_min}, {ef_max}]"
            )));
        }
        Ok(Self {
            ef,
            k_budget,
            step_n,
            t_minf,
            k_min,
            k_max,
            ef_min,
            ef_max,
        })
    }
}

impl Default for EfState {
    fn default() -> Self {
        Self {
            ef: 25.0,
            k_budget: 30,
            step_n: 5.0,
            t_minf: 0.5,
            k_min: 5,
            k_max: 70,
            ef_min: 1.0,
            ef_max: 100.0,
        }
    }
}

/// Poor fitness (at or below `t_minf`) widens exploration and the iteration
/// budget by `n`; good fitness narrows both. Results are clamped to range.
pub fn update_ef(state: &EfState, gbest_fitness: f64) -> EfState {
    let step_k = state.step_n.round() as i64;
    let (ef, k) = if gbest_fitness <= state.t_minf {
        (state.ef + state.step_n, state.k_budget as i64 + step_k)
    } else {
        (state.ef - state.step_n, state.k_budget as i64 - step_k)
    };
    EfState {
        ef: ef.clamp(state.ef_min, state.ef_max),
        k_budget: k.clamp(state.k_min as i64, state.k_max as i64) as usize,
        ..*state
    }
}

/// Quantizes a 2-D displacement into one of eight 45 degree sectors centred
/// on the axes and diagonals. `None` means no motion.
pub fn quantize_direction(dx: f64, dy: f64) -> Option<u8> {
    if dx == 0.0 && dy == 0.0 {
        return None;
    }
    let angle = dy.atan2(dx).rem_euclid(TAU);
    Some((((angle + FRAC_PI_8) / FRAC_PI_4).floor() as i64).rem_euclid(8) as u8)
}

/// Fraction of adjacent direction pairs that did not change. `None` with
/// fewer than two entries.
pub fn consistency(bins: &[u8]) -> Option<f64> {
    if bins.len() < 2 {
        return None;
    }
    let changes = bins.windows(2).filter(|w| w[0] != w[1]).count();
    Some(1.0 - changes as f64 / (bins.len() - 1) as f64)
}

/// Sliding window of quantized motion directions, oldest evicted first.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionHistory {
    window: VecDeque<u8>,
    capacity: usize,
}

impl MotionHistory {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity < 2 {
            return Err(Error::config(format!(
                "motion window {capacity} must hold at least 2 entries"
            )));
        }
        Ok(Self {
            window: VecDeque::with_capacity(capacity),
            capacity,
        })
    }

    pub fn push(&mut self, bin: u8) {
        debug_assert!(bin < 8);
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back(bin);
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    pub fn bins(&self) -> Vec<u8> {
        self.window.iter().copied().collect()
    }

    pub fn consistency(&self) -> Option<f64> {
        consistency(&self.bins())
    }
}

/// Supplies the swarm parameters for each iteration and receives the best
/// fitness before every step.
pub trait AdaptiveController {
    fn dap(&self) -> DapState;
    fn ef(&self) -> f64;
    fn k_cap(&self) -> usize;
    fn t_minf(&self) -> f64;
    /// Called once per iteration, before particles move.
    fn observe(&mut self, gbest_fitness: f64);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControllerSample {
    pub gbest_fitness: f64,
    pub ef: f64,
    pub k_budget: usize,
}

/// EF/K adaptation every iteration; DAP held fixed within a run.
#[derive(Debug, Clone)]
pub struct SwaTrackController {
    dap: DapState,
    ef: EfState,
    trace: Vec<ControllerSample>,
}

impl SwaTrackController {
    pub fn new(dap: DapState, ef: EfState) -> Self {
        Self {
            dap,
            ef,
            trace: Vec::new(),
        }
    }

    pub fn ef_state(&self) -> EfState {
        self.ef
    }

    /// EF and K after each observation, in order.
    pub fn trace(&self) -> &[ControllerSample] {
        &self.trace
    }
}

impl AdaptiveController for SwaTrackController {
    fn dap(&self) -> DapState {
        self.dap
    }

    fn ef(&self) -> f64 {
        self.ef.ef
    }

    fn k_cap(&self) -> usize {
        self.ef.k_budget
    }

    fn t_minf(&self) -> f64 {
        self.ef.t_minf
    }

    fn observe(&mut self, gbest_fitness: f64) {
        self.ef = update_ef(&self.ef, gbest_fitness);
        self.trace.push(ControllerSample {
            gbest_fitness,
            ef: self.ef.ef,
            k_budget: self.ef.k_budget,
        });
    }
}

/// Constant parameters: plain PSO.
#[derive(Debug, Clone, Copy)]
pub struct FixedController {
    pub dap: DapState,
    pub ef: f64,
    pub k_cap: usize,
    pub t_minf: f64,
}

impl AdaptiveController for FixedController {
    fn dap(&self) -> DapState {
        self.dap
    }

    fn ef(&self) -> f64 {
        self.ef
    }

    fn k_cap(&self) -> usize {
        self.k_cap
    }

    fn t_minf(&self) -> f64 {
        self.t_minf
    }

    fn observe(&mut self, _gbest_fitness: f64) {}
}
