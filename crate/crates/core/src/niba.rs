//! Non-interacting blip approximation for the driven spin.
//!
//! With Δ(t) = H sin(vt), ζ(t,t′) = (H/v)(sin vt − sin vt′), f = e^{−Q2/π}
//! and φ = Q1/π evaluated at τ = t − t′:
//!
//! ⟨σ̇z(t)⟩ = Δ(t) I(t),  I(t) = ∫₀ᵗ Δ(t′) f [sin φ sin ζ − cos φ cos ζ ⟨σz(t′)⟩] dt′,
//! ⟨σy(t)⟩ = −I(t),
//! ⟨σx(t)⟩ = ∫₀ᵗ Δ(t′) f [sin φ cos ζ + cos φ sin ζ ⟨σz(t′)⟩] dt′.

use crate::error::{DynamoError, Result};
use crate::model::{bath_phases, ModelParams, SpinTrajectory, TimeGrid};
use std::f64::consts::PI;

const GL8_X: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL8_W: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NibaOptions {
    /// Memory cells with t − t′ below `near_window / ω_c` use 8-point
    /// Gauss–Legendre instead of the trapezoid.
    pub near_window: f64,
    /// End of the trusted window; defaults to π/(4v).
    pub window_end: Option<f64>,
}

impl Default for NibaOptions {
    fn default() -> Self {
        Self { near_window: 30.0, window_end: None }
    }
}

#[derive(Debug, Clone)]
pub struct NibaRun {
    pub traj: SpinTrajectory,
    /// Samples inside the trusted window.
    pub in_window: Vec<bool>,
}

/// Tabulated kernel pieces: f, sin φ and cos φ as functions of the lag.
struct Lag {
    f: f64,
    s: f64,
    c: f64,
}

fn lag(tau: f64, p: &ModelParams) -> Lag {
    let (q1, q2) = bath_phases(tau, p);
    let (s, c) = (q1 / PI).sin_cos();
    Lag { f: (-q2 / PI).exp(), s, c }
}

pub fn solve_niba(p: &ModelParams, grid: &TimeGrid, opts: &NibaOptions) -> Result<NibaRun> {
    p.validate()?;
    if grid.t0 != 0.0 {
        return Err(DynamoError::Argument("NIBA grid must start at t = 0".into()));
    }
    let n = grid.len();
    let dt = grid.dt();
    let (h, v) = (p.h, p.v);
    let times = grid.times();
    let delta: Vec<f64> = times.iter().map(|t| h * (v * t).sin()).collect();
    // ζ(t, t′) = a(t) − a(t′)
    let a = |t: f64| if v > 0.0 { h / v * (v * t).sin() } else { h * t };
    let (sa, ca): (Vec<f64>, Vec<f64>) = times.iter().map(|&t| a(t).sin_cos()).unzip();
    let lags: Vec<Lag> = (0..n).map(|k| lag(k as f64 * dt, p)).collect();
    let n_near = if p.alpha == 0.0 { 0 } else { ((opts.near_window / p.omega_c) / dt).ceil() as usize };

    let mut sz = vec![0.0; n];
    let mut sx = vec![0.0; n];
    let mut sy = vec![0.0; n];
    let mut sd = vec![0.0; n];
    sz[0] = 1.0;

    for i in 1..n {
        let ti = times[i];
        // Terms not involving σz(t_i): b_z (for I), b_x; coefficients of σz(t_i): c_z, c_x.
        let (mut bz, mut bx, mut cz, mut cx) = (0.0, 0.0, 0.0, 0.0);
        for j in 0..i {
            let k = i - j;
            // cell [t_j, t_{j+1}] has lags in [(k − 1)dt, k dt]
            if k - 1 < n_near {
                let (t_lo, zl) = (times[j], sz[j]);
                for (x, w) in GL8_X.iter().zip(GL8_W) {
                    let u = 0.5 * (x + 1.0);
                    let tp = t_lo + u * dt;
                    let lg = lag(ti - tp, p);
                    let d = h * (v * tp).sin();
                    let (sz_, cz_) = (a(ti) - a(tp)).sin_cos();
                    let wq = 0.5 * dt * w * d * lg.f;
                    let (kz0, kz1) = (lg.s * sz_, -lg.c * cz_);
                    let (kx0, kx1) = (lg.s * cz_, lg.c * sz_);
                    bz += wq * kz0;
                    bx += wq * kx0;
                    // σz(t′) = (1 − u) σz_j + u σz_{j+1}
                    bz += wq * kz1 * (1.0 - u) * zl;
                    bx += wq * kx1 * (1.0 - u) * zl;
                    if j + 1 == i {
                        cz += wq * kz1 * u;
                        cx += wq * kx1 * u;
                    } else {
                        bz += wq * kz1 * u * sz[j + 1];
                        bx += wq * kx1 * u * sz[j + 1];
                    }
                }
            } else {
                // trapezoid: endpoint j with half weight, j+1 handled by its own cell
                for (jj, half) in [(j, 0.5), (j + 1, 0.5)] {
                    let kk = i - jj;
                    let lg = &lags[kk];
                    let s_z = sa[i] * ca[jj] - ca[i] * sa[jj];
                    let c_z = ca[i] * ca[jj] + sa[i] * sa[jj];
                    let wq = half * dt * delta[jj] * lg.f;
                    let (kz0, kz1) = (lg.s * s_z, -lg.c * c_z);
                    let (kx0, kx1) = (lg.s * c_z, lg.c * s_z);
                    bz += wq * kz0;
                    bx += wq * kx0;
                    if jj == i {
                        cz += wq * kz1;
                        cx += wq * kx1;
                    } else {
                        bz += wq * kz1 * sz[jj];
                        bx += wq * kx1 * sz[jj];
                    }
                }
            }
        }
        // implicit trapezoid in t: σz_i = σz_{i−1} + dt/2 (σ̇_{i−1} + Δ_i (b_z + c_z σz_i))
        let rhs = sz[i - 1] + 0.5 * dt * (sd[i - 1] + delta[i] * bz);
        let z = rhs / (1.0 - 0.5 * dt * delta[i] * cz);
        if !z.is_finite() {
            return Err(DynamoError::Integration(format!("NIBA march diverged at t = {ti}")));
        }
        sz[i] = z;
        let integral = bz + cz * z;
        sd[i] = delta[i] * integral;
        sy[i] = -integral;
        sx[i] = bx + cx * z;
    }

    let end = opts.window_end.unwrap_or(if v > 0.0 { PI / (4.0 * v) } else { f64::INFINITY });
    let in_window = times.iter().map(|t| *t <= end * (1.0 + 1e-12)).collect();
    let mut traj = SpinTrajectory::new(*grid, sx, sy, sz);
    traj.sz_dot = Some(sd);
    Ok(NibaRun { traj, in_window })
}
