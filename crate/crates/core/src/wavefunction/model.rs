use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use super::packet::{log_sum, FreePacket, RigidPacket};
use super::{Configuration, ModelError, ModelKind, PhysicalParams};

/// Nodes are densities below this fraction of the t = 0 peak density.
pub const NODE_FRACTION: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
enum Transverse {
    /// `G(X) [h(r - a) + h(r + a)]`, `X = (x1 + x2)/2`, `r = x1 - x2`.
    Collimated {
        cm_sigma: f64,
        cm_log_norm: f64,
        relative: FreePacket,
        log_norm: f64,
    },
    /// `psi_A(x1) psi_B(x2) + psi_B(x1) psi_A(x2)`, slits at `+a/2` (A) and `-a/2` (B).
    FreeProduct {
        slit_a: FreePacket,
        slit_b: FreePacket,
        log_norm: f64,
    },
    /// `e(x1 - a/2 - u t) e(x2 + a/2 + u t) exp(i kx (x1 - x2))`.
    PlaneWave { envelope: FreePacket, kx: f64, u: f64 },
}

/// Evaluated amplitude, phase and phase gradient at one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiValue {
    /// `R >= 0`.
    pub amplitude: f64,
    /// `S`, in action units.
    pub phase: f64,
    /// `dS/d(x1, y1, x2, y2)`.
    pub grad_phase: [f64; 4],
    /// `R^2`.
    pub density: f64,
    /// Density below the node threshold; `grad_phase` is unreliable.
    pub node: bool,
}

/// Bounding box in centre-of-mass / relative coordinates `(X, r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransverseWindow {
    pub cm_center: f64,
    pub cm_half: f64,
    pub rel_center: f64,
    pub rel_half: f64,
}

impl TransverseWindow {
    /// Cartesian box `[x1_lo, x1_hi] x [x2_lo, x2_hi]` enclosing the window.
    pub fn cartesian(&self) -> ((f64, f64), (f64, f64)) {
        let (xlo, xhi) = (self.cm_center - self.cm_half, self.cm_center + self.cm_half);
        let (rlo, rhi) = (self.rel_center - self.rel_half, self.rel_center + self.rel_half);
        ((xlo + 0.5 * rlo, xhi + 0.5 * rhi), (xlo - 0.5 * rhi, xhi - 0.5 * rlo))
    }
}

/// A lump of the relative-coordinate density: centre and width of `x1` about
/// `(x1 + x2)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeLump {
    pub offset: f64,
    pub width: f64,
}

/// Immutable, thread-safe two-particle wavefunction model.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoParticleWaveFunction {
    params: PhysicalParams,
    transverse: Transverse,
    longitudinal: RigidPacket,
    peak_density: f64,
}

impl TwoParticleWaveFunction {
    /// Builds the model selected by `params.model_kind`.
    pub fn build(params: PhysicalParams) -> Result<Self, ModelError> {
        params.validate()?;
        let (hbar, mass, a) = (params.hbar, params.mass, params.a);
        let transverse = match params.model_kind {
            ModelKind::DoubleSlit => {
                let cm_sigma = params.sigma_cm();
                // relative coordinate: reduced mass m/2, width sqrt(2) sigma0
                let relative = FreePacket {
                    sigma: SQRT_2 * params.sigma0,
                    mass: 0.5 * mass,
                    hbar,
                };
                let overlap = (-a * a / (2.0 * relative.sigma * relative.sigma)).exp();
                Transverse::Collimated {
                    cm_sigma,
                    cm_log_norm: -0.25 * (2.0 * PI * cm_sigma * cm_sigma).ln(),
                    relative,
                    log_norm: -0.5 * (2.0 * (1.0 + overlap)).ln(),
                }
            }
            ModelKind::DoubleSlitFree | ModelKind::AsymmetricSlits => {
                let sigma_b = if params.model_kind == ModelKind::AsymmetricSlits {
                    2.0 * params.sigma0
                } else {
                    params.sigma0
                };
                let slit_a = FreePacket { sigma: params.sigma0, mass, hbar };
                let slit_b = FreePacket { sigma: sigma_b, mass, hbar };
                let s2 = slit_a.sigma * slit_a.sigma + slit_b.sigma * slit_b.sigma;
                let overlap = (2.0 * slit_a.sigma * slit_b.sigma / s2).sqrt() * (-a * a / (4.0 * s2)).exp();
                Transverse::FreeProduct {
                    slit_a,
                    slit_b,
                    log_norm: -0.5 * (2.0 + 2.0 * overlap * overlap).ln(),
                }
            }
            ModelKind::PlaneWave => {
                let kx = params.kx();
                Transverse::PlaneWave {
                    // infinite mass: the envelope does not spread
                    envelope: FreePacket { sigma: params.sigma0, mass: f64::INFINITY, hbar },
                    kx,
                    u: hbar * kx / mass,
                }
            }
        };
        let longitudinal = RigidPacket {
            sigma: params.sigma_long(),
            k: params.k,
            v: params.v(),
            omega: hbar * params.k * params.k / (2.0 * mass),
        };
        let mut model = Self {
            params,
            transverse,
            longitudinal,
            peak_density: 1.0,
        };
        model.peak_density = model.density(&model.peak_configuration());
        Ok(model)
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn kind(&self) -> ModelKind {
        self.params.model_kind
    }

    pub fn longitudinal(&self) -> &RigidPacket {
        &self.longitudinal
    }

    /// The t = 0 configuration with each particle at a slit centre.
    pub fn peak_configuration(&self) -> Configuration {
        Configuration::new(0.5 * self.params.a, 0.0, -0.5 * self.params.a, 0.0, 0.0)
    }

    /// Reference density at [`Self::peak_configuration`].
    pub fn peak_density(&self) -> f64 {
        self.peak_density
    }

    /// `eps_node = 1e-12 x` peak density at t = 0.
    pub fn node_floor(&self) -> f64 {
        NODE_FRACTION * self.peak_density
    }

    /// Both particles past the Fraunhofer onset `y_F = d^2 / lambda`.
    pub fn is_far_field(&self, c: &Configuration) -> bool {
        let yf = self.params.far_field_onset();
        c.y1 > yf && c.y2 > yf
    }

    /// `ln Psi_x(x1, x2, t)` and its gradient.
    pub fn log_transverse(&self, x1: f64, x2: f64, t: f64) -> (Complex64, [Complex64; 2]) {
        let a = self.params.a;
        match &self.transverse {
            Transverse::Collimated {
                cm_sigma,
                cm_log_norm,
                relative,
                log_norm,
            } => {
                let cm = 0.5 * (x1 + x2);
                let r = x1 - x2;
                let (l1, g1) = relative.log_amp(r - a, t);
                let (l2, g2) = relative.log_amp(r + a, t);
                let (lh, [gh]) = log_sum((l1, [g1]), (l2, [g2]));
                let cm_ln = cm_log_norm - cm * cm / (4.0 * cm_sigma * cm_sigma);
                let cm_grad = -cm / (2.0 * cm_sigma * cm_sigma);
                // Keep the imaginary parts exactly antisymmetric: the CM factor is real.
                let g_1 = Complex64::new(0.5 * cm_grad + gh.re, gh.im);
                let g_2 = Complex64::new(0.5 * cm_grad - gh.re, -gh.im);
                (lh + cm_ln + log_norm, [g_1, g_2])
            }
            Transverse::FreeProduct { slit_a, slit_b, log_norm } => {
                let half = 0.5 * a;
                let (a1, da1) = slit_a.log_amp(x1 - half, t);
                let (b2, db2) = slit_b.log_amp(x2 + half, t);
                let (b1, db1) = slit_b.log_amp(x1 + half, t);
                let (a2, da2) = slit_a.log_amp(x2 - half, t);
                let (l, g) = log_sum((a1 + b2, [da1, db2]), (b1 + a2, [db1, da2]));
                (l + log_norm, g)
            }
            Transverse::PlaneWave { envelope, kx, u } => {
                let half = 0.5 * a;
                let (e1, de1) = envelope.log_amp(x1 - half - u * t, 0.0);
                let (e2, de2) = envelope.log_amp(x2 + half + u * t, 0.0);
                let phase = Complex64::new(0.0, kx * (x1 - x2));
                (e1 + e2 + phase, [de1 + Complex64::new(0.0, *kx), de2 - Complex64::new(0.0, *kx)])
            }
        }
    }

    /// `ln Psi` and `grad ln Psi` in the order `(x1, y1, x2, y2)`.
    pub fn log_psi(&self, c: &Configuration) -> (Complex64, [Complex64; 4]) {
        let (lx, [gx1, gx2]) = self.log_transverse(c.x1, c.x2, c.t);
        let (ly1, gy1) = self.longitudinal.log_amp(c.y1, c.t);
        let (ly2, gy2) = self.longitudinal.log_amp(c.y2, c.t);
        (lx + ly1 + ly2, [gx1, gy1, gx2, gy2])
    }

    /// Complex amplitude `Psi(c)`.
    pub fn psi(&self, c: &Configuration) -> Complex64 {
        self.log_psi(c).0.exp()
    }

    pub fn evaluate(&self, c: &Configuration) -> Result<PsiValue, ModelError> {
        if !c.is_finite() {
            return Err(ModelError::NonFinite(*c));
        }
        let (ln, grad) = self.log_psi(c);
        let hbar = self.params.hbar;
        let amplitude = ln.re.exp();
        let density = amplitude * amplitude;
        Ok(PsiValue {
            amplitude,
            phase: hbar * ln.im,
            grad_phase: grad.map(|g| hbar * g.im),
            density,
            node: density < self.node_floor(),
        })
    }

    /// `R^2(c)`.
    pub fn density(&self, c: &Configuration) -> f64 {
        let r = self.log_psi(c).0.re.exp();
        r * r
    }

    /// `|Psi_x(x1, x2, t)|^2`, the transverse joint density.
    pub fn transverse_density(&self, x1: f64, x2: f64, t: f64) -> f64 {
        (2.0 * self.log_transverse(x1, x2, t).0.re).exp()
    }

    /// Phase gradient from central differences of `Im ln Psi`, taken as
    /// `arg(Psi(c + h) / Psi(c - h))` so no unwrapping is needed.
    pub fn numerical_grad_phase(&self, c: &Configuration, step: f64) -> [f64; 4] {
        let s = c.state();
        let mut out = [0.0; 4];
        for (i, o) in out.iter_mut().enumerate() {
            let (mut sp, mut sm) = (s, s);
            sp[i] += step;
            sm[i] -= step;
            let lp = self.log_psi(&Configuration::from_state(sp, c.t)).0;
            let lm = self.log_psi(&Configuration::from_state(sm, c.t)).0;
            let diff = (Complex64::new(0.0, lp.im - lm.im)).exp().arg();
            *o = self.params.hbar * diff / (sp[i] - sm[i]);
        }
        out
    }

    /// Width of a single particle's transverse packet at `t`.
    pub fn particle_width(&self, t: f64) -> f64 {
        match &self.transverse {
            Transverse::Collimated { relative, .. } => relative.width(t) / SQRT_2,
            Transverse::FreeProduct { slit_a, slit_b, .. } => slit_a.width(t).max(slit_b.width(t)),
            Transverse::PlaneWave { envelope, .. } => envelope.sigma,
        }
    }

    /// Lumps of `x1 - (x1 + x2)/2 = r/2` carrying the transverse density at `t`.
    pub fn relative_lumps(&self, t: f64) -> Vec<RelativeLump> {
        let half = 0.5 * self.params.a;
        let width = self.particle_width(t);
        match &self.transverse {
            Transverse::PlaneWave { u, .. } => vec![RelativeLump {
                offset: half + u * t,
                width,
            }],
            _ => vec![
                RelativeLump { offset: half, width },
                RelativeLump { offset: -half, width },
            ],
        }
    }

    /// Box in `(X, r)` covering `n_sd` widths of the transverse density at `t`.
    pub fn transverse_window(&self, t: f64, n_sd: f64) -> TransverseWindow {
        let a = self.params.a;
        match &self.transverse {
            Transverse::Collimated { cm_sigma, relative, .. } => TransverseWindow {
                cm_center: 0.0,
                cm_half: n_sd * cm_sigma,
                rel_center: 0.0,
                rel_half: a + n_sd * relative.width(t),
            },
            Transverse::FreeProduct { slit_a, slit_b, .. } => {
                let s = slit_a.width(t).max(slit_b.width(t));
                TransverseWindow {
                    cm_center: 0.0,
                    cm_half: n_sd * s / SQRT_2,
                    rel_center: 0.0,
                    rel_half: a + n_sd * SQRT_2 * s,
                }
            }
            Transverse::PlaneWave { envelope, u, .. } => TransverseWindow {
                cm_center: 0.0,
                cm_half: n_sd * envelope.sigma / SQRT_2,
                rel_center: a + 2.0 * u * t,
                rel_half: n_sd * SQRT_2 * envelope.sigma,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn natural(kind: ModelKind) -> TwoParticleWaveFunction {
        TwoParticleWaveFunction::build(PhysicalParams::natural().with_kind(kind)).unwrap()
    }

    #[test]
    fn density_is_amplitude_squared() {
        for kind in [
            ModelKind::DoubleSlit,
            ModelKind::DoubleSlitFree,
            ModelKind::AsymmetricSlits,
            ModelKind::PlaneWave,
        ] {
            let m = natural(kind);
            let c = Configuration::new(3.0, 10.0, -7.5, 11.0, 10.0);
            let v = m.evaluate(&c).unwrap();
            assert_eq!(v.density, v.amplitude * v.amplitude);
            assert_eq!(m.density(&c), v.density);
        }
    }

    #[test]
    fn collimated_phase_gradient_is_antisymmetric() {
        let m = natural(ModelKind::DoubleSlit);
        let c = Configuration::new(13.25, 50.0, -9.5, 49.0, 50.0);
        let v = m.evaluate(&c).unwrap();
        assert_eq!(v.grad_phase[0], -v.grad_phase[2]);
    }

    #[test]
    fn plane_wave_velocity_is_uniform() {
        let m = natural(ModelKind::PlaneWave);
        let kx = m.params().kx();
        let v = m.evaluate(&Configuration::new(10.0, 1.0, -10.0, 1.0, 0.0)).unwrap();
        assert!((v.grad_phase[0] - kx).abs() < 1e-15);
        assert!((v.grad_phase[2] + kx).abs() < 1e-15);
        assert!((v.grad_phase[1] - m.params().k).abs() < 1e-15);
    }

    #[test]
    fn non_finite_configuration_is_rejected() {
        let m = natural(ModelKind::DoubleSlit);
        let c = Configuration::new(f64::NAN, 0.0, 0.0, 0.0, 0.0);
        assert!(matches!(m.evaluate(&c), Err(ModelError::NonFinite(_))));
    }

    #[test]
    fn asymmetric_model_breaks_reflection() {
        let m = natural(ModelKind::AsymmetricSlits);
        let c = Configuration::new(12.0, 0.0, -9.0, 0.0, 0.0);
        let (d, dr) = (m.density(&c), m.density(&c.reflected()));
        assert!((d - dr).abs() > 1e-3 * d.max(dr));
    }

    #[test]
    fn far_field_predicate() {
        let m = natural(ModelKind::DoubleSlit);
        let yf = m.params().far_field_onset();
        assert!(m.is_far_field(&Configuration::new(0.0, 2.0 * yf, 0.0, 1.5 * yf, 1.0)));
        assert!(!m.is_far_field(&Configuration::new(0.0, 0.5 * yf, 0.0, 1.5 * yf, 1.0)));
    }

    #[test]
    fn window_corners_cover_cartesian_box() {
        let w = TransverseWindow {
            cm_center: 0.0,
            cm_half: 1.0,
            rel_center: 0.0,
            rel_half: 4.0,
        };
        let ((a, b), (c, d)) = w.cartesian();
        assert_eq!((a, b, c, d), (-3.0, 3.0, -3.0, 3.0));
    }
}
