//! Swarm-based visual tracking with adaptive acceleration parameters and an
//! adaptive exploration factor, plus a particle-filter baseline, a synthetic
//! scene generator and evaluation tools.

pub mod adaptive;
pub mod appearance;
pub mod config;
pub mod error;
pub mod eval;
pub mod frame_io;
pub mod pf;
pub mod rng;
pub mod study;
pub mod swarm;
pub mod synth;
pub mod tracker;

pub use error::{Error, Result};
