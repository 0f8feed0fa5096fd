//! The TOML run configuration shared by every CLI command.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pf::PfConfig;
use crate::tracker::TrackerConfig;

/// Which tracker a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrackerKind {
    Swatrack,
    /// SwaTrack with DAP and EF adaptation switched off.
    PsoFixed,
    Pf,
}

impl TrackerKind {
    pub fn name(self) -> &'static str {
        match self {
            TrackerKind::Swatrack => "swatrack",
            TrackerKind::PsoFixed => "pso-fixed",
            TrackerKind::Pf => "pf",
        }
    }
}

/// Scene suite used by the studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// Five scenes per seed: smooth, erratic speed, camera switch, textured
    /// random walk, fast motion over a checkerboard.
    Mixed,
    /// One plain-background scene per seed with a 150 px jump halfway.
    Teleport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub suite: Suite,
    pub frame_count: usize,
    /// Jump length for the teleport suite, in pixels.
    pub teleport_jump: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            suite: Suite::Mixed,
            frame_count: 100,
            teleport_jump: 150.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Write measured milliseconds into output files. Off by default so that
    /// reruns produce identical bytes.
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    /// Seeds per cell.
    pub seeds: u64,
    pub base_seed: u64,
    pub pf_particles: Vec<usize>,
    pub swatrack_particles: Vec<usize>,
    /// Keep-one-in-k factors; the first is the reference for drops.
    pub downsample: Vec<usize>,
    pub downsample_trackers: Vec<TrackerKind>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            seeds: 10,
            base_seed: 0,
            pf_particles: vec![50, 150, 600],
            swatrack_particles: vec![10, 15, 50],
            downsample: vec![1, 5],
            downsample_trackers: vec![TrackerKind::Swatrack, TrackerKind::Pf],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub tracker: TrackerConfig,
    pub pf: PfConfig,
    pub synth: SynthConfig,
    pub eval: EvalConfig,
    pub study: StudyConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Sets both tracker seeds.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.tracker.seed = seed;
        self.pf.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.tracker.validate()?;
        self.pf.validate()?;
        if self.synth.frame_count == 0 {
            return Err(Error::config("synth.frame_count must be positive"));
        }
        if self.study.seeds == 0 {
            return Err(Error::config("study.seeds must be positive"));
        }
        Ok(())
    }
}
