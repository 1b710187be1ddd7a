//! Adaptive Dormand–Prince 5(4) integrator on complex state vectors.

use crate::error::{DynamoError, Result};
use num_complex::Complex64;

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
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evals: usize,
}

/// Stateful integrator: keeps the step size and the FSAL stage between calls
/// to [`Dopri5::advance`], so observables can be sampled on a fixed grid.
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
    pub stats: OdeStats,
    h: f64,
    k: [Vec<Complex64>; 7],
    tmp: Vec<Complex64>,
    ynew: Vec<Complex64>,
    fsal_valid: bool,
}

impl Dopri5 {
    pub fn new(dim: usize, tol: f64) -> Self {
        let z = || vec![Complex64::new(0.0, 0.0); dim];
        Self {
            rtol: tol,
            atol: tol,
            h_max: f64::INFINITY,
            max_steps: 50_000_000,
            stats: OdeStats::default(),
            h: 0.0,
            k: [z(), z(), z(), z(), z(), z(), z()],
            tmp: z(),
            ynew: z(),
            fsal_valid: false,
        }
    }

    fn error_norm(&self, y: &[Complex64]) -> f64 {
        let n = y.len();
        let mut acc = 0.0;
        for i in 0..n {
            let e = self.k[0][i] * E1
                + self.k[2][i] * E3
                + self.k[3][i] * E4
                + self.k[4][i] * E5
                + self.k[5][i] * E6
                + self.k[6][i] * E7;
            let sc = self.atol + self.rtol * y[i].norm().max(self.ynew[i].norm());
            acc += (e.norm() / sc).powi(2);
        }
        (acc / n as f64).sqrt()
    }

    fn stage(&mut self, y: &[Complex64], h: f64, coeffs: &[f64]) {
        for i in 0..y.len() {
            let mut s = Complex64::new(0.0, 0.0);
            for (j, c) in coeffs.iter().enumerate() {
                if *c != 0.0 {
                    s += self.k[j][i] * *c;
                }
            }
            self.tmp[i] = y[i] + s * h;
        }
    }

    /// Integrate `y' = f(t, y)` from `t` to `t_end` in place.
    pub fn advance<F>(&mut self, mut f: F, t: f64, y: &mut [Complex64], t_end: f64) -> Result<()>
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        let mut t = t;
        if !self.fsal_valid {
            f(t, y, &mut self.k[0]);
            self.stats.evals += 1;
            self.fsal_valid = true;
        }
        if self.h <= 0.0 {
            let yn = norm_rms(y).max(1e-10);
            let fn_ = norm_rms(&self.k[0]).max(1e-10);
            self.h = (0.01 * yn / fn_).min(t_end - t);
        }
        let mut steps = 0usize;
        while t < t_end {
            let mut h = self.h.min(self.h_max);
            let last = t + h >= t_end - 1e-14 * t_end.abs().max(1.0);
            if last {
                h = t_end - t;
            }
            self.stage(y, h, &[A21]);
            f(t + C2 * h, &self.tmp, &mut self.k[1]);
            self.stage(y, h, &[A31, A32]);
            f(t + C3 * h, &self.tmp, &mut self.k[2]);
            self.stage(y, h, &[A41, A42, A43]);
            f(t + C4 * h, &self.tmp, &mut self.k[3]);
            self.stage(y, h, &[A51, A52, A53, A54]);
            f(t + C5 * h, &self.tmp, &mut self.k[4]);
            self.stage(y, h, &[A61, A62, A63, A64, A65]);
            f(t + h, &self.tmp, &mut self.k[5]);
            for i in 0..y.len() {
                self.ynew[i] = y[i]
                    + (self.k[0][i] * B1
                        + self.k[2][i] * B3
                        + self.k[3][i] * B4
                        + self.k[4][i] * B5
                        + self.k[5][i] * B6)
                        * h;
            }
            f(t + h, &self.ynew, &mut self.k[6]);
            self.stats.evals += 6;
            let err = self.error_norm(y);
            if !err.is_finite() {
                return Err(DynamoError::Integration(format!("non-finite state near t = {t}")));
            }
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
            if err <= 1.0 {
                t = if last { t_end } else { t + h };
                y.copy_from_slice(&self.ynew);
                self.k.swap(0, 6);
                self.stats.accepted += 1;
                // keep the free-running step, not the truncated one that hit t_end
                if !last || fac < 1.0 {
                    self.h = h * fac;
                }
            } else {
                self.stats.rejected += 1;
                self.h = h * fac.min(1.0);
            }
            steps += 1;
            if steps > self.max_steps || self.h < 1e-14 * t_end.abs().max(1.0) {
                return Err(DynamoError::Integration(format!("step size collapse near t = {t}")));
            }
        }
        Ok(())
    }

    /// Drop the cached FSAL stage after a discontinuous change of the right-hand side.
    pub fn reset(&mut self) {
        self.fsal_valid = false;
    }
}

fn norm_rms(y: &[Complex64]) -> f64 {
    (y.iter().map(|c| c.norm_sqr()).sum::<f64>() / y.len().max(1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_phase_is_exact_to_tolerance() {
        let mut y = vec![Complex64::new(1.0, 0.0)];
        let mut ode = Dopri5::new(1, 1e-11);
        let w = 3.0;
        for k in 1..=20 {
            let t0 = (k - 1) as f64 * 0.5;
            ode.advance(|_, y, dy| dy[0] = Complex64::new(0.0, -w) * y[0], t0, &mut y, k as f64 * 0.5).unwrap();
        }
        let exact = Complex64::from_polar(1.0, -w * 10.0);
        assert!((y[0] - exact).norm() < 1e-8);
    }

    #[test]
    fn time_dependent_rhs() {
        // y' = cos(t) y  →  y = exp(sin t)
        let mut y = vec![Complex64::new(1.0, 0.0)];
        let mut ode = Dopri5::new(1, 1e-12);
        ode.advance(|t, y, dy| dy[0] = y[0] * t.cos(), 0.0, &mut y, 7.0).unwrap();
        assert!((y[0].re - 7.0f64.sin().exp()).abs() < 1e-9);
    }
}
