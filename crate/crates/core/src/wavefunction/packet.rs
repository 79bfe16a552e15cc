use std::f64::consts::PI;

use num_complex::Complex64;

/// Zero-momentum Gaussian packet under free evolution, in log form.
///
/// `psi(u, t) = (2 pi s^2)^(-1/4) (1 + i tau)^(-1/2) exp(-u^2 / (4 s^2 (1 + i tau)))`
/// with `tau = hbar t / (2 m s^2)` and `u` the displacement from the centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreePacket {
    pub sigma: f64,
    pub mass: f64,
    pub hbar: f64,
}

impl FreePacket {
    pub fn tau(&self, t: f64) -> f64 {
        self.hbar * t / (2.0 * self.mass * self.sigma * self.sigma)
    }

    /// Width of `|psi|^2` at time `t`.
    pub fn width(&self, t: f64) -> f64 {
        let tau = self.tau(t);
        self.sigma * (1.0 + tau * tau).sqrt()
    }

    /// `(ln psi, d ln psi / du)`.
    pub fn log_amp(&self, u: f64, t: f64) -> (Complex64, Complex64) {
        let tau = self.tau(t);
        let s2 = self.sigma * self.sigma;
        let q = Complex64::new(4.0 * s2, 4.0 * s2 * tau);
        // ln(1 + i tau) without a branch cut for real tau.
        let ln_spread = Complex64::new(0.5 * (tau * tau).ln_1p(), tau.atan());
        let ln_amp = -0.25 * (2.0 * PI * s2).ln() - 0.5 * ln_spread - u * u / q;
        (ln_amp, -2.0 * u / q)
    }
}

/// Longitudinal packet translating rigidly at `v` with carrier `exp(i(k y - w t))`.
///
/// It satisfies the continuity equation exactly, and the guidance velocity
/// `hbar k / m` equals `v` everywhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidPacket {
    pub sigma: f64,
    pub k: f64,
    pub v: f64,
    pub omega: f64,
}

impl RigidPacket {
    pub fn center(&self, t: f64) -> f64 {
        self.v * t
    }

    pub fn log_amp(&self, y: f64, t: f64) -> (Complex64, Complex64) {
        let u = y - self.center(t);
        let s2 = self.sigma * self.sigma;
        let re = -0.25 * (2.0 * PI * s2).ln() - u * u / (4.0 * s2);
        let im = self.k * y - self.omega * t;
        (Complex64::new(re, im), Complex64::new(-u / (2.0 * s2), self.k))
    }
}

/// `ln(e^a + e^b)` with gradients, evaluated relative to the dominant term.
///
/// The imaginary part is `Im(dominant) + arg(1 + w)` with `|w| <= 1`, which is
/// continuous away from exact cancellation.
pub(crate) fn log_sum<const N: usize>(
    a: (Complex64, [Complex64; N]),
    b: (Complex64, [Complex64; N]),
) -> (Complex64, [Complex64; N]) {
    let (dom, other) = if a.0.re >= b.0.re { (a, b) } else { (b, a) };
    let w = (other.0 - dom.0).exp();
    let one_w = Complex64::new(1.0, 0.0) + w;
    let mut grad = [Complex64::new(0.0, 0.0); N];
    for (g, (d, o)) in grad.iter_mut().zip(dom.1.iter().zip(&other.1)) {
        *g = (d + w * o) / one_w;
    }
    (dom.0 + one_w.ln(), grad)
}
