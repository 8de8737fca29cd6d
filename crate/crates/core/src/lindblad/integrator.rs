//! Dormand–Prince 5(4) with FSAL and an elementwise-scaled RMS error norm.
//!
//! The state is a dense complex matrix. The system is autonomous, so the
//! stage nodes `c_i` never enter.

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-8,
            atol: 1e-10,
        }
    }
}

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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// `y + h Σ cᵢ kᵢ`, evaluated elementwise over the column-major storage.
fn combine(y: &CMatrix, h: f64, terms: &[(f64, &CMatrix)]) -> CMatrix {
    let mut out = y.clone();
    let os = out.as_mut_slice();
    for &(c, k) in terms {
        let hc = h * c;
        for (o, x) in os.iter_mut().zip(k.as_slice()) {
            *o += x * hc;
        }
    }
    out
}

fn rms_scaled(x: &[C64], y: &[C64], y_new: Option<&[C64]>, tol: &Tolerances) -> f64 {
    let n = x.len().max(1) as f64;
    let sum: f64 = match y_new {
        Some(yn) => x
            .iter()
            .zip(y)
            .zip(yn)
            .map(|((e, a), b)| {
                let sc = tol.atol + tol.rtol * a.norm().max(b.norm());
                (e.norm() / sc).powi(2)
            })
            .sum(),
        None => x
            .iter()
            .zip(y)
            .map(|(e, a)| (e.norm() / (tol.atol + tol.rtol * a.norm())).powi(2))
            .sum(),
    };
    (sum / n).sqrt()
}

/// Adaptive stepper holding `(t, y, f(y))`.
pub struct Dopri5<F> {
    f: F,
    tol: Tolerances,
    t: f64,
    y: CMatrix,
    k1: CMatrix,
    h: f64,
    accepted: usize,
    rejected: usize,
    max_steps: usize,
}

impl<F: FnMut(&CMatrix) -> CMatrix> Dopri5<F> {
    pub fn new(mut f: F, t0: f64, y0: CMatrix, tol: Tolerances) -> Self {
        let k1 = f(&y0);
        let mut s = Dopri5 {
            f,
            tol,
            t: t0,
            y: y0,
            k1,
            h: 0.0,
            accepted: 0,
            rejected: 0,
            max_steps: 50_000_000,
        };
        s.h = s.initial_step();
        s
    }

    /// Hairer–Nørsett–Wanner starting step.
    fn initial_step(&mut self) -> f64 {
        let ys = self.y.as_slice();
        let d0 = rms_scaled(ys, ys, None, &self.tol);
        let d1 = rms_scaled(self.k1.as_slice(), ys, None, &self.tol);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let y1 = combine(&self.y, h0, &[(1.0, &self.k1)]);
        let k2 = (self.f)(&y1);
        let diff = &k2 - &self.k1;
        let d2 = rms_scaled(diff.as_slice(), ys, None, &self.tol) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &CMatrix {
        &self.y
    }

    /// `f(y)` at the current point (free thanks to FSAL).
    pub fn derivative(&self) -> &CMatrix {
        &self.k1
    }

    pub fn accepted_steps(&self) -> usize {
        self.accepted
    }

    pub fn rejected_steps(&self) -> usize {
        self.rejected
    }

    pub fn set_max_steps(&mut self, n: usize) {
        self.max_steps = n;
    }

    /// Replaces the state at the current time (e.g. after renormalization).
    pub fn replace_state(&mut self, y: CMatrix) {
        self.k1 = (self.f)(&y);
        self.y = y;
    }

    /// Takes one accepted step, never passing `t_max`.
    pub fn step(&mut self, t_max: f64) -> Result<()> {
        if self.t >= t_max {
            return Ok(());
        }
        loop {
            if self.accepted + self.rejected >= self.max_steps {
                return Err(Error::IntegrationFailure {
                    time: self.t,
                    reason: format!("step budget of {} exhausted", self.max_steps),
                });
            }
            let remaining = t_max - self.t;
            let mut h = self.h.min(remaining);
            // Land exactly on t_max instead of leaving a sliver.
            if remaining - h < 1e-12 * remaining {
                h = remaining;
            }
            let h_min = 16.0 * f64::EPSILON * self.t.abs().max(remaining).max(f64::MIN_POSITIVE);
            if !(h > h_min) && h < remaining {
                return Err(Error::IntegrationFailure {
                    time: self.t,
                    reason: format!("step size underflow (h = {h:e})"),
                });
            }

            let y = &self.y;
            let k1 = &self.k1;
            let k2 = (self.f)(&combine(y, h, &[(A21, k1)]));
            let k3 = (self.f)(&combine(y, h, &[(A31, k1), (A32, &k2)]));
            let k4 = (self.f)(&combine(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
            let k5 = (self.f)(&combine(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
            let k6 = (self.f)(&combine(
                y,
                h,
                &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ));
            let y_new = combine(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let k7 = (self.f)(&y_new);
            let zero = CMatrix::zeros(y.nrows(), y.ncols());
            let err_vec = combine(
                &zero,
                h,
                &[(E1, k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
            );
            let err = rms_scaled(err_vec.as_slice(), y.as_slice(), Some(y_new.as_slice()), &self.tol);

            if err.is_finite() && err <= 1.0 {
                let fac = if err == 0.0 {
                    FAC_MAX
                } else {
                    (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, FAC_MAX)
                };
                self.t = if h == remaining { t_max } else { self.t + h };
                self.y = y_new;
                self.k1 = k7;
                // A step truncated to hit t_max says nothing about the
                // natural step length, so keep the larger of the two.
                self.h = (h * fac).max(if h < self.h { self.h } else { 0.0 });
                self.accepted += 1;
                return Ok(());
            }
            self.rejected += 1;
            let fac = if err.is_finite() {
                (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0)
            } else {
                FAC_MIN
            };
            self.h = h * fac;
        }
    }

    /// Steps until `t == t_target`.
    pub fn advance_to(&mut self, t_target: f64) -> Result<()> {
        while self.t < t_target {
            self.step(t_target)?;
        }
        Ok(())
    }
}
