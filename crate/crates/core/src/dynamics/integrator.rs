//! Explicit Runge–Kutta steppers with cubic Hermite dense output.

use serde::{Deserialize, Serialize};

/// Stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Classical fourth-order Runge–Kutta with step `max_step`.
    Rk4Fixed,
    /// Dormand–Prince 5(4) with embedded error control.
    #[default]
    Rk45Adaptive,
}

/// Smallest accepted adaptive step before giving up.
pub const MIN_STEP: f64 = 1e-18;

#[derive(Debug, Clone, PartialEq)]
pub enum StepError<E> {
    /// The right-hand side refused to evaluate.
    Rhs(E),
    /// The adaptive step fell below [`MIN_STEP`] at this time.
    Underflow { t: f64, h: f64 },
}

/// One accepted step with its endpoint derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    pub f0: [f64; N],
    pub f1: [f64; N],
}

impl<const N: usize> Step<N> {
    /// Cubic Hermite interpolant of component `i` at `t in [t0, t1]`.
    pub fn dense(&self, i: usize, t: f64) -> f64 {
        let h = self.t1 - self.t0;
        let s = (t - self.t0) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y0[i] + h10 * h * self.f0[i] + h01 * self.y1[i] + h11 * h * self.f1[i]
    }

    /// Times in `(t0, t1)` where the interpolant of component `i` has a
    /// stationary point.
    pub fn interior_extrema(&self, i: usize) -> Vec<f64> {
        let h = self.t1 - self.t0;
        let (p0, m0, p1, m1) = (self.y0[i], h * self.f0[i], self.y1[i], h * self.f1[i]);
        // d/ds of the Hermite cubic: 3A s^2 + 2B s + C
        let a = 2.0 * p0 + m0 - 2.0 * p1 + m1;
        let b = -3.0 * p0 - 2.0 * m0 + 3.0 * p1 - m1;
        let c = m0;
        let mut roots = Vec::with_capacity(2);
        let (qa, qb, qc) = (3.0 * a, 2.0 * b, c);
        if qa.abs() < 1e-300 {
            if qb.abs() > 1e-300 {
                roots.push(-qc / qb);
            }
        } else {
            let disc = qb * qb - 4.0 * qa * qc;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                let q = -0.5 * (qb + qb.signum() * sq);
                roots.push(q / qa);
                if q != 0.0 {
                    roots.push(qc / q);
                }
            }
        }
        roots
            .into_iter()
            .filter(|s| *s > 0.0 && *s < 1.0)
            .map(|s| self.t0 + s * h)
            .collect()
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

/// Classical RK4 step of size `h`.
pub fn rk4_step<const N: usize, E, F>(f: &mut F, t: f64, y: &[f64; N], f0: &[f64; N], h: f64) -> Result<Step<N>, E>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
{
    let k1 = *f0;
    let k2 = f(t + 0.5 * h, &axpy(y, h, &[(0.5, &k1)]))?;
    let k3 = f(t + 0.5 * h, &axpy(y, h, &[(0.5, &k2)]))?;
    let k4 = f(t + h, &axpy(y, h, &[(1.0, &k3)]))?;
    let y1 = axpy(y, h, &[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)]);
    let t1 = t + h;
    let f1 = f(t1, &y1)?;
    Ok(Step {
        t0: t,
        t1,
        y0: *y,
        y1,
        f0: *f0,
        f1,
    })
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Dormand–Prince trial step; returns the step and its scaled RMS error.
pub fn dopri_step<const N: usize, E, F>(
    f: &mut F,
    t: f64,
    y: &[f64; N],
    f0: &[f64; N],
    h: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<(Step<N>, f64), E>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
{
    let k1 = *f0;
    let k2 = f(t + C2 * h, &axpy(y, h, &[(A21, &k1)]))?;
    let k3 = f(t + C3 * h, &axpy(y, h, &[(A31, &k1), (A32, &k2)]))?;
    let k4 = f(t + C4 * h, &axpy(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = f(t + C5 * h, &axpy(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
    let k6 = f(t + h, &axpy(y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
    let y1 = axpy(y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let t1 = t + h;
    let k7 = f(t1, &y1)?;
    let mut sum = 0.0;
    for i in 0..N {
        let err = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let scale = abs_tol + rel_tol * y[i].abs().max(y1[i].abs());
        sum += (err / scale).powi(2);
    }
    let err = (sum / N as f64).sqrt();
    Ok((
        Step {
            t0: t,
            t1,
            y0: *y,
            y1,
            f0: k1,
            f1: k7,
        },
        err,
    ))
}

/// Step controller shared by both schemes.
#[derive(Debug, Clone, Copy)]
pub struct Stepper {
    pub scheme: Scheme,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
    h: f64,
    pub rejected: usize,
}

impl Stepper {
    pub fn new(scheme: Scheme, abs_tol: f64, rel_tol: f64, max_step: f64, span: f64) -> Self {
        let h = match scheme {
            Scheme::Rk4Fixed => max_step,
            Scheme::Rk45Adaptive => max_step.min(1e-3 * span.abs()).max(MIN_STEP),
        };
        Self {
            scheme,
            abs_tol,
            rel_tol,
            max_step,
            h,
            rejected: 0,
        }
    }

    /// Takes one accepted step from `(t, y)` with derivative `f0`, never past `t_end`.
    pub fn advance<const N: usize, E, F>(
        &mut self,
        f: &mut F,
        t: f64,
        y: &[f64; N],
        f0: &[f64; N],
        t_end: f64,
    ) -> Result<Step<N>, StepError<E>>
    where
        F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
    {
        let remaining = t_end - t;
        match self.scheme {
            Scheme::Rk4Fixed => {
                let h = self.max_step.min(remaining);
                let mut step = rk4_step(f, t, y, f0, h).map_err(StepError::Rhs)?;
                if h == remaining {
                    step.t1 = t_end;
                }
                Ok(step)
            }
            Scheme::Rk45Adaptive => loop {
                let mut h = self.h.min(self.max_step);
                // avoid leaving a sliver before the end
                let last = h >= remaining || remaining - h < 1e-3 * h;
                if last {
                    h = remaining;
                }
                if h < MIN_STEP {
                    return Err(StepError::Underflow { t, h });
                }
                let (mut step, err) = dopri_step(f, t, y, f0, h, self.abs_tol, self.rel_tol).map_err(StepError::Rhs)?;
                if !err.is_finite() {
                    self.rejected += 1;
                    self.h = 0.2 * h;
                    continue;
                }
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if err <= 1.0 {
                    if last {
                        step.t1 = t_end;
                    } else {
                        self.h = h * factor;
                    }
                    return Ok(step);
                }
                self.rejected += 1;
                self.h = h * factor.min(1.0);
            },
        }
    }

    /// Re-steps exactly from `(t, y)` to `t_target` with one step of the scheme.
    pub fn step_to<const N: usize, E, F>(
        &self,
        f: &mut F,
        t: f64,
        y: &[f64; N],
        f0: &[f64; N],
        t_target: f64,
    ) -> Result<Step<N>, E>
    where
        F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
    {
        let h = t_target - t;
        let mut step = match self.scheme {
            Scheme::Rk4Fixed => rk4_step(f, t, y, f0, h)?,
            Scheme::Rk45Adaptive => dopri_step(f, t, y, f0, h, self.abs_tol, self.rel_tol)?.0,
        };
        step.t1 = t_target;
        Ok(step)
    }
}

/// Integrates `y' = f(t, y)` from `t0` to `t1`, returning the final state.
pub fn solve<const N: usize, E, F>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    stepper: &mut Stepper,
) -> Result<[f64; N], StepError<E>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
{
    let (mut t, mut y) = (t0, y0);
    let mut dy = f(t, &y).map_err(StepError::Rhs)?;
    while t < t1 {
        let step = stepper.advance(&mut f, t, &y, &dy, t1)?;
        t = step.t1;
        y = step.y1;
        dy = step.f1;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(_t: f64, y: &[f64; 1]) -> Result<[f64; 1], ()> {
        Ok([-y[0]])
    }

    #[test]
    fn dopri_hits_tolerance() {
        let mut s = Stepper::new(Scheme::Rk45Adaptive, 1e-12, 1e-12, 1.0, 5.0);
        let y = solve(decay, 0.0, [1.0], 5.0, &mut s).unwrap();
        assert!((y[0] - (-5.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn rk4_fourth_order() {
        let run = |h: f64| {
            let mut s = Stepper::new(Scheme::Rk4Fixed, 1.0, 1.0, h, 2.0);
            (solve(decay, 0.0, [1.0], 2.0, &mut s).unwrap()[0] - (-2.0f64).exp()).abs()
        };
        let order = (run(0.1) / run(0.05)).log2();
        assert!(order > 3.8 && order < 4.2, "{order}");
    }

    #[test]
    fn hermite_reproduces_cubics() {
        // y = t^3, y' = 3t^2 on [1, 2]
        let step = Step {
            t0: 1.0,
            t1: 2.0,
            y0: [1.0],
            y1: [8.0],
            f0: [3.0],
            f1: [12.0],
        };
        for t in [1.1, 1.5, 1.9] {
            assert!((step.dense(0, t) - t * t * t).abs() < 1e-13);
        }
        assert!(step.interior_extrema(0).is_empty());
        // y = (t - 1.5)^2 has its minimum at 1.5
        let bowl = Step {
            t0: 1.0,
            t1: 2.0,
            y0: [0.25],
            y1: [0.25],
            f0: [-1.0],
            f1: [1.0],
        };
        let ext = bowl.interior_extrema(0);
        assert_eq!(ext.len(), 1);
        assert!((ext[0] - 1.5).abs() < 1e-14);
    }

    #[test]
    fn underflow_is_reported() {
        let mut s = Stepper::new(Scheme::Rk45Adaptive, 1e-300, 0.0, 1.0, 1.0);
        let f = |_t: f64, y: &[f64; 1]| -> Result<[f64; 1], ()> { Ok([1.0 / (1.0 - y[0]).max(1e-300)]) };
        let res = solve(f, 0.0, [0.0], 1.0, &mut s);
        assert!(matches!(res, Err(StepError::Underflow { .. })));
    }
}
