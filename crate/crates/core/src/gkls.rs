//! Floquet–Markov master equation in the lab frame with dissipators built on
//! the periodic orbits |Ψ±(t)⟩ of the rotating drive.

use crate::analytic::{gkls_orbit, orbit_plus};
use crate::error::{DynamoError, Result};
use crate::model::{spectral_density, ModelParams, SpinTrajectory, TimeGrid};
use crate::ode::Dopri5;
use num_complex::Complex64;
use std::f64::consts::PI;

type M2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// 2×2 density matrix in the (↑, ↓) basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix2 {
    pub rho: M2,
}

impl DensityMatrix2 {
    pub fn from_bloch(x: f64, y: f64, z: f64) -> Result<Self> {
        let r2 = x * x + y * y + z * z;
        if r2 > 1.0 + 1e-12 {
            return Err(DynamoError::Argument(format!("Bloch vector of length {} > 1", r2.sqrt())));
        }
        let c = Complex64::new(x, -y) * 0.5;
        Ok(Self { rho: [[Complex64::new(0.5 * (1.0 + z), 0.0), c], [c.conj(), Complex64::new(0.5 * (1.0 - z), 0.0)]] })
    }

    pub fn pure(psi: [Complex64; 2]) -> Self {
        let n = (psi[0].norm_sqr() + psi[1].norm_sqr()).sqrt();
        let (a, b) = (psi[0] / n, psi[1] / n);
        Self { rho: [[a * a.conj(), a * b.conj()], [b * a.conj(), b * b.conj()]] }
    }

    pub fn bloch(&self) -> (f64, f64, f64) {
        let c = self.rho[1][0];
        (2.0 * c.re, 2.0 * c.im, (self.rho[0][0] - self.rho[1][1]).re)
    }

    pub fn trace(&self) -> Complex64 {
        self.rho[0][0] + self.rho[1][1]
    }

    /// Smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> f64 {
        let (x, y, z) = self.bloch();
        0.5 * (self.trace().re - (x * x + y * y + z * z).sqrt())
    }

    fn to_vec(self) -> Vec<Complex64> {
        vec![self.rho[0][0], self.rho[0][1], self.rho[1][0], self.rho[1][1]]
    }

    fn from_slice(y: &[Complex64]) -> Self {
        Self { rho: [[y[0], y[1]], [y[2], y[3]]] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GKLSRates {
    pub gamma_relax: f64,
    pub gamma_deph: f64,
    /// All of J(Ω±v), J(v) below a tenth of min(v, Ω).
    pub weak_coupling: bool,
}

pub fn build_rates(p: &ModelParams) -> Result<GKLSRates> {
    p.validate()?;
    let om = p.omega_rabi();
    let v = p.v;
    let j_plus = spectral_density(om + v, p)?;
    let j_minus = spectral_density((om - v).max(0.0), p)?;
    let j_v = spectral_density(v, p)?;
    let gamma_relax = ((om - v).powi(2) * j_plus + (om + v).powi(2) * j_minus) / (4.0 * om * om);
    let gamma_deph = j_v * p.h * p.h / (4.0 * om * om);
    let bound = 0.1 * v.min(om);
    let weak_coupling = [j_plus, j_minus, j_v].iter().all(|j| *j < bound);
    Ok(GKLSRates { gamma_relax, gamma_deph, weak_coupling })
}

fn mul(a: &M2, b: &M2) -> M2 {
    let mut c = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn dag(a: &M2) -> M2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

fn outer(a: [Complex64; 2], b: [Complex64; 2]) -> M2 {
    [[a[0] * b[0].conj(), a[0] * b[1].conj()], [a[1] * b[0].conj(), a[1] * b[1].conj()]]
}

fn add_scaled(acc: &mut M2, a: &M2, s: Complex64) {
    for i in 0..2 {
        for j in 0..2 {
            acc[i][j] += a[i][j] * s;
        }
    }
}

/// D[X]ρ = XρX† − ½{X†X, ρ}.
fn dissipator(x: &M2, rho: &M2, rate: f64, out: &mut M2) {
    if rate == 0.0 {
        return;
    }
    let xd = dag(x);
    let jump = mul(&mul(x, rho), &xd);
    let xdx = mul(&xd, x);
    let anti_l = mul(&xdx, rho);
    let anti_r = mul(rho, &xdx);
    let r = Complex64::new(rate, 0.0);
    add_scaled(out, &jump, r);
    add_scaled(out, &anti_l, -0.5 * r);
    add_scaled(out, &anti_r, -0.5 * r);
}

/// Generator of the master equation at time `t`.
pub struct Generator {
    pub p: ModelParams,
    pub rates: GKLSRates,
}

impl Generator {
    pub fn new(p: &ModelParams) -> Result<Self> {
        if p.m != 0.0 {
            return Err(DynamoError::Argument("orbit dissipators require m = 0".into()));
        }
        Ok(Self { p: *p, rates: build_rates(p)? })
    }

    fn hamiltonian(&self, t: f64) -> M2 {
        let (s, c) = (self.p.v * t).sin_cos();
        let hz = Complex64::new(-0.5 * (self.p.h * c + self.p.m), 0.0);
        let hx = Complex64::new(-0.5 * self.p.h * s, 0.0);
        [[hz, hx], [hx, -hz]]
    }

    pub fn apply(&self, t: f64, rho: &M2) -> M2 {
        let h = self.hamiltonian(t);
        let hr = mul(&h, rho);
        let rh = mul(rho, &h);
        let mut out = [[ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = -I * (hr[i][j] - rh[i][j]);
            }
        }
        let (_, minus) = gkls_orbit(t, self.p.h, self.p.v);
        let plus = orbit_plus(t, self.p.h, self.p.v);
        dissipator(&outer(minus, plus), rho, self.rates.gamma_relax, &mut out);
        let pp = outer(plus, plus);
        let pm = outer(minus, minus);
        let mut z = pp;
        add_scaled(&mut z, &pm, Complex64::new(-1.0, 0.0));
        dissipator(&z, rho, self.rates.gamma_deph, &mut out);
        out
    }
}

#[derive(Debug, Clone)]
pub struct GklsRun {
    pub traj: SpinTrajectory,
    pub rates: GKLSRates,
    pub final_state: DensityMatrix2,
    pub max_trace_error: f64,
    pub min_eigenvalue: f64,
}

/// Integrate from `grid.t0`; `sz_dot` is Tr(σz 𝓛ρ) at each sample.
pub fn propagate_gkls(rho0: &DensityMatrix2, p: &ModelParams, grid: &TimeGrid, tol: f64) -> Result<GklsRun> {
    let gen = Generator::new(p)?;
    let mut y = rho0.to_vec();
    let mut ode = Dopri5::new(4, tol);
    let n = grid.len();
    let (mut sx, mut sy, mut sz, mut sd) =
        (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    let mut max_trace_error: f64 = 0.0;
    let mut min_eigenvalue = f64::INFINITY;
    let rhs = |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
        let d = gen.apply(t, &DensityMatrix2::from_slice(y).rho);
        dy.copy_from_slice(&[d[0][0], d[0][1], d[1][0], d[1][1]]);
    };
    for i in 0..n {
        let t = grid.t(i);
        if i > 0 {
            ode.advance(rhs, grid.t(i - 1), &mut y, t)?;
        }
        let rho = DensityMatrix2::from_slice(&y);
        let (x, yy, z) = rho.bloch();
        sx.push(x);
        sy.push(yy);
        sz.push(z);
        let d = gen.apply(t, &rho.rho);
        sd.push((d[0][0] - d[1][1]).re);
        max_trace_error = max_trace_error.max((rho.trace() - 1.0).norm());
        min_eigenvalue = min_eigenvalue.min(rho.min_eigenvalue());
    }
    let mut traj = SpinTrajectory::new(*grid, sx, sy, sz);
    traj.sz_dot = Some(sd);
    Ok(GklsRun {
        traj,
        rates: gen.rates,
        final_state: DensityMatrix2::from_slice(&y),
        max_trace_error,
        min_eigenvalue,
    })
}

/// Largest Euclidean distance between the trajectory's Bloch vector and the
/// periodic orbit over samples with t ≥ `t_from`; NaN when there are none.
pub fn orbit_distance(traj: &SpinTrajectory, p: &ModelParams, t_from: f64) -> f64 {
    if traj.grid.tf < t_from {
        return f64::NAN;
    }
    (0..traj.len())
        .filter(|&i| traj.grid.t(i) >= t_from)
        .map(|i| {
            let ((x, y, z), _) = gkls_orbit(traj.grid.t(i), p.h, p.v);
            ((traj.sx[i] - x).powi(2) + (traj.sy[i] - y).powi(2) + (traj.sz[i] - z).powi(2)).sqrt()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryEnergetics {
    pub w_flow: f64,
    pub de_dyn_half: f64,
    pub eta_longtime: f64,
}

/// Ẇ∞, ΔE_dyn(π/v) and their ratio ΔE_dyn/(Ẇ∞·π/v); η is NaN when α = 0.
pub fn stationary_energetics(p: &ModelParams) -> Result<StationaryEnergetics> {
    p.validate()?;
    let om2 = p.h * p.h + p.v * p.v;
    let w_flow = p.v * p.h * p.h * spectral_density(p.v, p)? / (8.0 * om2);
    let de_dyn_half = p.alpha * PI * PI * p.v * p.h * p.h / (4.0 * om2);
    let denom = w_flow * PI / p.v;
    let eta_longtime = if denom > 0.0 { de_dyn_half / denom } else { f64::NAN };
    Ok(StationaryEnergetics { w_flow, de_dyn_half, eta_longtime })
}
