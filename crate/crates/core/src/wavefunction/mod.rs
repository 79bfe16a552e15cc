//! Two-particle wavefunction models `Psi(x1, y1, x2, y2, t) = R exp(i S / hbar)`.
//!
//! Every model factorizes into a transverse part `Psi_x(x1, x2, t)` and two
//! identical longitudinal packets `chi(y1, t) chi(y2, t)`. Models are evaluated
//! in log form so amplitudes far in the tails do not underflow before the
//! gradient is formed.

mod model;
mod packet;
mod params;
mod symmetry;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use model::{PsiValue, RelativeLump, TransverseWindow, TwoParticleWaveFunction};
pub use packet::{FreePacket, RigidPacket};
pub use params::{ModelKind, PhysicalParams, ELECTRON_MASS_CGS, HBAR_CGS};
pub use symmetry::{check_symmetries, SymmetryReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },
    #[error("non-finite configuration {0:?}")]
    NonFinite(Configuration),
}

/// Pair configuration `(x1, y1, x2, y2)` at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
    pub t: f64,
}

impl Configuration {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64, t: f64) -> Self {
        Self { x1, y1, x2, y2, t }
    }

    pub fn from_state(s: [f64; 4], t: f64) -> Self {
        Self::new(s[0], s[1], s[2], s[3], t)
    }

    pub fn state(&self) -> [f64; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }

    pub fn is_finite(&self) -> bool {
        self.state().iter().all(|v| v.is_finite()) && self.t.is_finite()
    }

    /// Particle labels exchanged.
    pub fn swapped(&self) -> Self {
        Self::new(self.x2, self.y2, self.x1, self.y1, self.t)
    }

    /// Reflected about the axis `x = 0`.
    pub fn reflected(&self) -> Self {
        Self::new(-self.x1, self.y1, -self.x2, self.y2, self.t)
    }

    /// Both particles translated by `h` along x.
    pub fn shifted(&self, h: f64) -> Self {
        Self::new(self.x1 + h, self.y1, self.x2 + h, self.y2, self.t)
    }

    pub fn sum_x(&self) -> f64 {
        self.x1 + self.x2
    }
}
