//! Model parameters, spectral densities, bath discretization and the
//! reconstruction of the induced field from the spin trajectory alone.

use crate::error::{DynamoError, Result};
use crate::special::{cin, sine_integral};
use num_complex::Complex64;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cutoff {
    Exponential,
    Hard,
}

/// P1: joint ground state at t = 0 (displaced bath). P2: spin up ⊗ vacuum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preparation {
    P1,
    P2,
}

impl Preparation {
    /// δ₁: 1 for P1, 0 for P2.
    pub fn delta1(self) -> f64 {
        match self {
            Preparation::P1 => 1.0,
            Preparation::P2 => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub h: f64,
    pub v: f64,
    pub m: f64,
    pub alpha: f64,
    pub omega_c: f64,
    pub cutoff: Cutoff,
    pub preparation: Preparation,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            h: 1.0,
            v: 0.04,
            m: 0.0,
            alpha: 0.0,
            omega_c: 100.0,
            cutoff: Cutoff::Exponential,
            preparation: Preparation::P1,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.h > 0.0) {
            bad.push("H".to_string());
        }
        if !(self.v > 0.0) {
            bad.push("v".to_string());
        }
        if !(self.alpha >= 0.0) {
            bad.push("alpha".to_string());
        }
        if !(self.omega_c > 0.0) {
            bad.push("omega_c".to_string());
        }
        if !self.m.is_finite() {
            bad.push("M".to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(DynamoError::Config { keys: bad })
        }
    }

    /// Ω = √(H² + v²).
    pub fn omega_rabi(&self) -> f64 {
        self.h.hypot(self.v)
    }

    pub fn scaling_limit(&self) -> bool {
        self.omega_c > self.h.max(self.v)
    }

    /// Σ_k g_k²/ω_k of the continuum, 2αω_c for both cutoffs.
    pub fn reorganization(&self) -> f64 {
        2.0 * self.alpha * self.omega_c
    }
}

/// J(ω).
pub fn spectral_density(omega: f64, p: &ModelParams) -> Result<f64> {
    if omega < 0.0 || omega.is_nan() {
        return Err(DynamoError::Domain(format!("negative frequency {omega}")));
    }
    Ok(match p.cutoff {
        Cutoff::Exponential => 2.0 * PI * p.alpha * omega * (-omega / p.omega_c).exp(),
        Cutoff::Hard if omega <= p.omega_c => 2.0 * PI * p.alpha * omega,
        Cutoff::Hard => 0.0,
    })
}

/// K(t) = −(2/π)∫J(ω) sin(ωt) dω.
pub fn memory_kernel(t: f64, p: &ModelParams) -> f64 {
    let (a, wc) = (p.alpha, p.omega_c);
    match p.cutoff {
        Cutoff::Exponential => {
            let x = wc * t;
            -8.0 * a * wc.powi(3) * t / (1.0 + x * x).powi(2)
        }
        Cutoff::Hard => {
            let x = wc * t;
            if x.abs() < 1e-4 {
                // series of (sin x − x cos x)/x² = x/3 − x³/30
                -4.0 * a * wc * wc * (x / 3.0 - x.powi(3) / 30.0)
            } else {
                -4.0 * a * (wc * wc * x.sin() - wc * wc * x * x.cos()) / (x * x)
            }
        }
    }
}

/// ∫₀^τ K.
fn kernel_g1(tau: f64, p: &ModelParams) -> f64 {
    let (a, wc) = (p.alpha, p.omega_c);
    match p.cutoff {
        Cutoff::Exponential => 4.0 * a * wc * (1.0 / (1.0 + (wc * tau).powi(2)) - 1.0),
        Cutoff::Hard => {
            if tau == 0.0 {
                0.0
            } else {
                -4.0 * a * (wc - (wc * tau).sin() / tau)
            }
        }
    }
}

/// ∫₀^τ∫₀^s K.
fn kernel_g2(tau: f64, p: &ModelParams) -> f64 {
    let (a, wc) = (p.alpha, p.omega_c);
    match p.cutoff {
        Cutoff::Exponential => 4.0 * a * ((wc * tau).atan() - wc * tau),
        Cutoff::Hard => -4.0 * a * (wc * tau - sine_integral(wc * tau)),
    }
}

/// Continuum free-field profile: Σ(g²/ω)cos(ωt) in the continuum.
pub fn free_profile(t: f64, p: &ModelParams) -> f64 {
    let (a, wc) = (p.alpha, p.omega_c);
    match p.cutoff {
        Cutoff::Exponential => 2.0 * a * wc / (1.0 + (wc * t).powi(2)),
        Cutoff::Hard => {
            if (wc * t).abs() < 1e-8 {
                2.0 * a * wc
            } else {
                2.0 * a * (wc * t).sin() / t
            }
        }
    }
}

/// (Q1, Q2) at zero temperature: Q1 = ∫J(ω)sin(ωt)/ω² dω and
/// Q2 = ∫J(ω)(1 − cos ωt)/ω² dω, in closed form per cutoff.
pub fn bath_phases(t: f64, p: &ModelParams) -> (f64, f64) {
    let x = p.omega_c * t;
    let a = 2.0 * PI * p.alpha;
    match p.cutoff {
        Cutoff::Exponential => (a * x.atan(), 0.5 * a * x.mul_add(x, 1.0).ln()),
        Cutoff::Hard => (a * sine_integral(x), a * cin(x)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub omega: f64,
    pub g: f64,
    pub delta_omega: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    pub modes: Vec<Mode>,
}

impl ModeSet {
    pub fn new(modes: Vec<Mode>) -> Result<Self> {
        for (k, m) in modes.iter().enumerate() {
            if !(m.omega > 0.0) || !(m.g >= 0.0) || !(m.delta_omega >= 0.0) {
                return Err(DynamoError::Argument(format!("mode {k} out of range: {m:?}")));
            }
            if k > 0 && modes[k - 1].omega >= m.omega {
                return Err(DynamoError::Argument("mode frequencies must increase strictly".into()));
            }
        }
        Ok(Self { modes })
    }

    pub fn single(omega: f64, g: f64) -> Result<Self> {
        Self::new(vec![Mode { omega, g, delta_omega: 0.0 }])
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn omega_max(&self) -> f64 {
        self.modes.iter().map(|m| m.omega).fold(0.0, f64::max)
    }

    /// Σ g_k²/ω_k.
    pub fn reorganization(&self) -> f64 {
        self.modes.iter().map(|m| m.g * m.g / m.omega).sum()
    }

    /// K(t) = −2Σ g_k² sin(ω_k t).
    pub fn kernel(&self, t: f64) -> f64 {
        -2.0 * self.modes.iter().map(|m| m.g * m.g * (m.omega * t).sin()).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Discretization {
    /// Equal-width bins on (0, ω_max], centers at the bin midpoints.
    Linear,
    /// One bin (0, 2v] centered on the drive frequency v, the remaining
    /// n − 1 bins geometrically spaced on (2v, ω_max] with geometric centers.
    Resonant,
}

impl Discretization {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "linear" => Some(Self::Linear),
            "resonant" => Some(Self::Resonant),
            _ => None,
        }
    }
}

/// Bins of the chosen scheme with g_k² = 2αω_kΔω_k.
pub fn discretize_bath(
    p: &ModelParams,
    n_modes: usize,
    omega_max: f64,
    scheme: Discretization,
) -> Result<ModeSet> {
    if n_modes == 0 {
        return Err(DynamoError::Argument("n_modes must be at least 1".into()));
    }
    if !(omega_max > 0.0) {
        return Err(DynamoError::Argument("omega_max must be positive".into()));
    }
    let bins: Vec<(f64, f64)> = match scheme {
        Discretization::Linear => {
            let dw = omega_max / n_modes as f64;
            (0..n_modes).map(|k| ((k as f64 + 0.5) * dw, dw)).collect()
        }
        Discretization::Resonant => {
            let lo = 2.0 * p.v;
            if n_modes < 2 || !(lo < omega_max) {
                return Err(DynamoError::Argument("resonant scheme needs n_modes ≥ 2 and 2v < omega_max".into()));
            }
            let r = (omega_max / lo).powf(1.0 / (n_modes - 1) as f64);
            let mut bins = vec![(p.v, lo)];
            bins.extend((0..n_modes - 1).map(|k| {
                let a = lo * r.powi(k as i32);
                ((a * a * r).sqrt(), a * (r - 1.0))
            }));
            bins
        }
    };
    let modes = bins
        .into_iter()
        .map(|(omega, dw)| Mode { omega, g: (2.0 * p.alpha * omega * dw).sqrt(), delta_omega: dw })
        .collect();
    ModeSet::new(modes)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub tf: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, tf: f64, n_steps: usize) -> Result<Self> {
        if !(tf > t0) || n_steps == 0 {
            return Err(DynamoError::Argument(format!("bad grid [{t0}, {tf}] with {n_steps} steps")));
        }
        Ok(Self { t0, tf, n_steps })
    }

    /// Grid on [0, tf] with spacing at most `dt_max`.
    pub fn with_max_step(tf: f64, dt_max: f64) -> Result<Self> {
        Self::new(0.0, tf, (tf / dt_max).ceil().max(1.0) as usize)
    }

    pub fn dt(&self) -> f64 {
        (self.tf - self.t0) / self.n_steps as f64
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.tf
        } else {
            self.t0 + i as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.t(i)).collect()
    }

    /// Index of the grid point nearest to `t`.
    pub fn index_of(&self, t: f64) -> usize {
        (((t - self.t0) / self.dt()).round().max(0.0) as usize).min(self.n_steps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinTrajectory {
    pub grid: TimeGrid,
    pub sx: Vec<f64>,
    pub sy: Vec<f64>,
    pub sz: Vec<f64>,
    pub sz_dot: Option<Vec<f64>>,
}

impl SpinTrajectory {
    pub fn new(grid: TimeGrid, sx: Vec<f64>, sy: Vec<f64>, sz: Vec<f64>) -> Self {
        Self { grid, sx, sy, sz, sz_dot: None }
    }

    pub fn len(&self) -> usize {
        self.sz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sz.is_empty()
    }

    /// ⟨σ̇z⟩ from the stored derivative, else central differences.
    pub fn sz_derivative(&self) -> Vec<f64> {
        match &self.sz_dot {
            Some(d) => d.clone(),
            None => central_difference(&self.sz, self.grid.dt()),
        }
    }

    /// Largest violation of the Bloch-ball bound sx²+sy²+sz² ≤ 1.
    pub fn bloch_excess(&self) -> f64 {
        (0..self.len())
            .map(|i| self.sx[i].powi(2) + self.sy[i].powi(2) + self.sz[i].powi(2) - 1.0)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Central differences, one-sided second order at the ends.
pub fn central_difference(y: &[f64], dt: f64) -> Vec<f64> {
    let n = y.len();
    if n < 2 {
        return vec![0.0; n];
    }
    if n == 2 {
        let d = (y[1] - y[0]) / dt;
        return vec![d, d];
    }
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        d[i] = (y[i + 1] - y[i - 1]) / (2.0 * dt);
    }
    d[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * dt);
    d[n - 1] = (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]) / (2.0 * dt);
    d
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldTrajectory {
    pub grid: TimeGrid,
    pub h_total: Vec<f64>,
    pub h_free: Option<Vec<f64>>,
    pub h_ad: Option<Vec<f64>>,
    pub h_dyn: Option<Vec<f64>>,
    /// dt · ω_max of the source, a quadrature-resolution diagnostic.
    pub dt_omega_max: f64,
    pub accuracy_warning: bool,
}

impl FieldTrajectory {
    pub fn total_only(grid: TimeGrid, h_total: Vec<f64>) -> Self {
        Self {
            grid,
            h_total,
            h_free: None,
            h_ad: None,
            h_dyn: None,
            dt_omega_max: 0.0,
            accuracy_warning: false,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum FieldSource<'a> {
    Modes(&'a ModeSet),
    Continuum(&'a ModelParams),
}

/// Induced field h(t) = ∫₀ᵗ K(t−t′)⟨S(t′)⟩dt′ plus the preparation-dependent free term.
///
/// Mode sources use product integration of e^{−iωt′} against a cubic Hermite
/// interpolant of ⟨S⟩, continuum sources integrate the kernel's antiderivatives
/// against a piecewise-linear ⟨S⟩. The split into free, adiabatic and dynamical
/// parts follows from integrating by parts once.
pub fn induced_field_from_sz(
    traj: &SpinTrajectory,
    source: FieldSource<'_>,
    prep: Preparation,
) -> Result<FieldTrajectory> {
    let n = traj.len();
    if n == 0 {
        return Err(DynamoError::Argument("empty trajectory".into()));
    }
    if traj.grid.t0 != 0.0 {
        return Err(DynamoError::Argument("convolution requires a grid starting at t = 0".into()));
    }
    let grid = traj.grid;
    let dt = grid.dt();
    let times = grid.times();
    let s: Vec<f64> = traj.sz.iter().map(|z| 0.5 * z).collect();
    let d1 = prep.delta1();
    let sz0 = traj.sz[0];

    let (conv, free_base, reorg, omega_max) = match source {
        FieldSource::Modes(ms) => {
            let sd: Vec<f64> = traj.sz_derivative().iter().map(|z| 0.5 * z).collect();
            let mut conv = vec![0.0; n];
            let mut free_base = vec![0.0; n];
            for m in &ms.modes {
                let w = hermite_weights(m.omega, dt);
                let rot = Complex64::from_polar(1.0, m.omega * dt);
                let mut acc = Complex64::new(0.0, 0.0);
                let c = -2.0 * m.g * m.g;
                for j in 0..n {
                    if j > 0 {
                        let x = w[0] * s[j - 1] + w[1] * s[j] + w[2] * sd[j - 1] + w[3] * sd[j];
                        acc = rot * (acc + x);
                    }
                    conv[j] += c * acc.im;
                    free_base[j] += m.g * m.g / m.omega * (m.omega * times[j]).cos();
                }
            }
            (conv, free_base, ms.reorganization(), ms.omega_max())
        }
        FieldSource::Continuum(p) => {
            let g1: Vec<f64> = (0..n).map(|k| kernel_g1(k as f64 * dt, p)).collect();
            let g2: Vec<f64> = (0..n).map(|k| kernel_g2(k as f64 * dt, p)).collect();
            let mut conv = vec![0.0; n];
            for (i, c) in conv.iter_mut().enumerate() {
                let mut acc = 0.0;
                for j in 0..i {
                    // interval [t_j, t_{j+1}] sits at lags a = (i−j−1)dt, b = a + dt
                    let (ka, kb) = (i - j - 1, i - j);
                    let ds = s[j + 1] - s[j];
                    acc += s[j] * (g1[kb] - g1[ka]) + ds / dt * (g2[kb] - g2[ka] - dt * g1[ka]);
                }
                *c = acc;
            }
            let free_base = times.iter().map(|&t| free_profile(t, p)).collect();
            (conv, free_base, p.reorganization(), p.omega_c)
        }
    };

    let h_free: Vec<f64> = free_base.iter().map(|f| (sz0 - d1) * f).collect();
    let h_total: Vec<f64> = (0..n).map(|j| conv[j] - d1 * free_base[j]).collect();
    let h_ad: Vec<f64> = traj.sz.iter().map(|z| -reorg * z).collect();
    let h_dyn: Vec<f64> = (0..n).map(|j| h_total[j] - h_free[j] - h_ad[j]).collect();
    Ok(FieldTrajectory {
        grid,
        h_total,
        h_free: Some(h_free),
        h_ad: Some(h_ad),
        h_dyn: Some(h_dyn),
        dt_omega_max: dt * omega_max,
        accuracy_warning: dt * omega_max > 1.0 && traj.sz_dot.is_none(),
    })
}

/// Weights (S_j, S_{j+1}, S′_j, S′_{j+1}) of ∫₀^d e^{−iωs} p(s) ds for the cubic
/// Hermite interpolant p on one interval of width d.
pub(crate) fn hermite_weights(omega: f64, d: f64) -> [Complex64; 4] {
    let mu = exp_moments(omega * d);
    [
        (mu[0] - 3.0 * mu[2] + 2.0 * mu[3]) * d,
        (3.0 * mu[2] - 2.0 * mu[3]) * d,
        (mu[1] - 2.0 * mu[2] + mu[3]) * d * d,
        (mu[3] - mu[2]) * d * d,
    ]
}

/// μ_n = ∫₀¹ uⁿ e^{−iθu} du for n = 0..3.
fn exp_moments(theta: f64) -> [Complex64; 4] {
    let mut mu = [Complex64::new(0.0, 0.0); 4];
    if theta.abs() < 1.0 {
        let z = Complex64::new(0.0, -theta);
        for (n, m) in mu.iter_mut().enumerate() {
            let mut term = Complex64::new(1.0, 0.0);
            let mut sum = Complex64::new(1.0 / (n as f64 + 1.0), 0.0);
            for k in 1..40 {
                term = term * z / k as f64;
                let c = term / (n + k + 1) as f64;
                sum += c;
                if c.norm() < 1e-18 {
                    break;
                }
            }
            *m = sum;
        }
    } else {
        let e = Complex64::from_polar(1.0, -theta);
        let z = Complex64::new(0.0, -theta);
        mu[0] = (e - 1.0) / z;
        for n in 1..4 {
            mu[n] = (e - mu[n - 1] * n as f64) / z;
        }
    }
    mu
}

/// Continuum split h = h_free + h_ad + h_dyn with h_dyn ≈ απ⟨σ̇z⟩.
pub fn decompose_field_continuum(traj: &SpinTrajectory, p: &ModelParams) -> Result<FieldTrajectory> {
    if traj.is_empty() {
        return Err(DynamoError::Argument("empty trajectory".into()));
    }
    let grid = traj.grid;
    let d1 = p.preparation.delta1();
    let h_free: Vec<f64> = grid.times().iter().map(|&t| (1.0 - d1) * free_profile(t, p)).collect();
    let h_ad: Vec<f64> = traj.sz.iter().map(|z| -p.reorganization() * z).collect();
    let h_dyn: Vec<f64> = traj.sz_derivative().iter().map(|d| p.alpha * PI * d).collect();
    let h_total = (0..traj.len()).map(|i| h_free[i] + h_ad[i] + h_dyn[i]).collect();
    Ok(FieldTrajectory {
        grid,
        h_total,
        h_free: Some(h_free),
        h_ad: Some(h_ad),
        h_dyn: Some(h_dyn),
        dt_omega_max: grid.dt() * p.omega_c,
        accuracy_warning: traj.sz_dot.is_none() && grid.dt() * p.h > 0.2,
    })
}
