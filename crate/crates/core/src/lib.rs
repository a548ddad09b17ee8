//! Bounded-input, fixed-time 3D path-following guidance for a point-mass UAV
//! chasing a pseudo-target, with a fixed-step closed-loop simulator and
//! numerical audits of the controller's invariants.

use thiserror::Error;

pub mod engagement;
pub mod frames;
pub mod guard;
pub mod io;
pub mod guidance;
pub mod saturation;
pub mod simulator;
pub mod targets;
pub mod verify;

pub use guard::GuardFlags;

/// A violated parameter invariant.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{0}")]
pub struct ValidationError(pub String);

impl ValidationError {
    pub fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}
