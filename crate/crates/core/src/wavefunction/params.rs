use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Which concrete two-particle wavefunction to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Symmetrized slit pair with a stationary centre-of-mass envelope; the
    /// transverse phase depends on `x1 - x2` only.
    #[default]
    DoubleSlit,
    /// Literal product of independently free-spreading slit packets.
    DoubleSlitFree,
    /// Like `DoubleSlitFree` but the slit at `-a/2` is twice as wide.
    AsymmetricSlits,
    /// Rigidly translating envelope with phase `hbar*kx*(x1 - x2)`.
    PlaneWave,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::DoubleSlit => "double_slit",
            ModelKind::DoubleSlitFree => "double_slit_free",
            ModelKind::AsymmetricSlits => "asymmetric_slits",
            ModelKind::PlaneWave => "plane_wave",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        [
            ModelKind::DoubleSlit,
            ModelKind::DoubleSlitFree,
            ModelKind::AsymmetricSlits,
            ModelKind::PlaneWave,
        ]
        .into_iter()
        .find(|k| k.name() == name)
    }
}

/// Physical parameters of the apparatus, CGS or natural units (`hbar = mass = 1`).
///
/// JSON keys: `hbar`, `mass`, `k`, `L`, `a`, `d`, `sigma0`, `model_kind`, and
/// the optional `sigma_cm`, `sigma_long`, `kx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    pub hbar: f64,
    pub mass: f64,
    /// Longitudinal wavenumber.
    pub k: f64,
    /// Slit-to-detector distance.
    #[serde(rename = "L")]
    pub length: f64,
    /// Slit centre separation.
    pub a: f64,
    /// Slit width; also the width of the constraint band for `x1 + x2`.
    pub d: f64,
    /// Initial width of each slit packet.
    pub sigma0: f64,
    #[serde(default)]
    pub model_kind: ModelKind,
    /// Width of the centre-of-mass envelope of `double_slit`. Defaults to
    /// `sigma0 / sqrt(2)`, which makes the t = 0 state the plain product of
    /// slit packets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_cm: Option<f64>,
    /// Width of the longitudinal packet density. Defaults to `sigma0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_long: Option<f64>,
    /// Transverse wavenumber of the `plane_wave` model. Defaults to `1 / (4 sigma0)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kx: Option<f64>,
}

/// CODATA 2018 reduced Planck constant, erg s.
pub const HBAR_CGS: f64 = 1.054_571_817e-27;
/// CODATA 2018 electron mass, g.
pub const ELECTRON_MASS_CGS: f64 = 9.109_383_701_5e-28;

impl PhysicalParams {
    /// Natural-units apparatus used by the simulation presets: well separated
    /// slits, strongly overlapping packets at the detector (`tau = 50`) and a
    /// centre-of-mass envelope as broad as the detection pattern.
    pub fn natural() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
            k: 1.0,
            length: 100.0,
            a: 20.0,
            d: 2.0,
            sigma0: 1.0,
            model_kind: ModelKind::DoubleSlit,
            sigma_cm: Some(40.0),
            sigma_long: Some(1.0),
            kx: None,
        }
    }

    /// Electron apparatus: `L = 100 cm`, `v = 1e10 cm/s`, `sigma0 = 2e-4 cm`,
    /// `d = 2e-4 cm`, `a = 2e-2 cm`.
    pub fn electron() -> Self {
        let v = 1e10;
        Self {
            hbar: HBAR_CGS,
            mass: ELECTRON_MASS_CGS,
            k: ELECTRON_MASS_CGS * v / HBAR_CGS,
            length: 100.0,
            a: 2e-2,
            d: 2e-4,
            sigma0: 2e-4,
            model_kind: ModelKind::DoubleSlit,
            sigma_cm: None,
            sigma_long: None,
            kx: None,
        }
    }

    pub fn with_kind(mut self, kind: ModelKind) -> Self {
        self.model_kind = kind;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("hbar", Some(self.hbar)),
            ("mass", Some(self.mass)),
            ("k", Some(self.k)),
            ("L", Some(self.length)),
            ("a", Some(self.a)),
            ("d", Some(self.d)),
            ("sigma0", Some(self.sigma0)),
            ("sigma_cm", self.sigma_cm),
            ("sigma_long", self.sigma_long),
            ("kx", self.kx),
        ];
        for (field, value) in positive {
            if let Some(v) = value {
                if !(v.is_finite() && v > 0.0) {
                    return Err(ModelError::InvalidParams {
                        field,
                        reason: format!("must be finite and strictly positive, got {v}"),
                    });
                }
            }
        }
        if self.d >= self.a {
            return Err(ModelError::InvalidParams {
                field: "d",
                reason: format!("slit width d = {} must be smaller than the separation a = {}", self.d, self.a),
            });
        }
        if self.a >= self.length {
            return Err(ModelError::InvalidParams {
                field: "a",
                reason: format!("separation a = {} must be smaller than L = {}", self.a, self.length),
            });
        }
        Ok(())
    }

    /// Longitudinal speed `hbar k / m`.
    pub fn v(&self) -> f64 {
        self.hbar * self.k / self.mass
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * PI / self.k
    }

    /// Fraunhofer onset distance `d^2 / lambda`.
    pub fn far_field_onset(&self) -> f64 {
        self.d * self.d / self.wavelength()
    }

    /// Dimensionless spreading time `hbar t / (2 m sigma0^2)`.
    pub fn tau(&self, t: f64) -> f64 {
        self.hbar * t / (2.0 * self.mass * self.sigma0 * self.sigma0)
    }

    /// Nominal flight time to the detector plane, `L / v`.
    pub fn flight_time(&self) -> f64 {
        self.length / self.v()
    }

    pub fn sigma_cm(&self) -> f64 {
        self.sigma_cm.unwrap_or(self.sigma0 / std::f64::consts::SQRT_2)
    }

    pub fn sigma_long(&self) -> f64 {
        self.sigma_long.unwrap_or(self.sigma0)
    }

    pub fn kx(&self) -> f64 {
        self.kx.unwrap_or(0.25 / self.sigma0)
    }
}
