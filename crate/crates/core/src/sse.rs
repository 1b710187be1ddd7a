//! Stochastic Schrödinger equation for the Ohmic continuum.
//!
//! The second-order influence term is unravelled by a Gaussian field h_s
//! with covariance Q2/π; the first-order term is taken at its plateau
//! Q1 → π²α. Each realization propagates a 4-component double-path
//! amplitude Φ with i∂tΦ = V(t)Φ; ρ entries follow from projections of Φ.

use crate::error::{DynamoError, Result};
use crate::model::{bath_phases, Cutoff, ModelParams, SpinTrajectory, TimeGrid};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

/// Trajectories whose amplitudes exceed this are flagged as overflowed.
const OVERFLOW: f64 = 1e100;
/// Trajectories summed per deterministic reduction block.
const BLOCK: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathCorrelation {
    pub alpha: f64,
    pub omega_c: f64,
    pub cutoff: Cutoff,
    pub use_q1_plateau: bool,
}

impl BathCorrelation {
    pub fn new(p: &ModelParams) -> Self {
        Self { alpha: p.alpha, omega_c: p.omega_c, cutoff: p.cutoff, use_q1_plateau: true }
    }

    fn params(&self) -> ModelParams {
        ModelParams { alpha: self.alpha, omega_c: self.omega_c, cutoff: self.cutoff, ..Default::default() }
    }

    pub fn q1(&self, t: f64) -> f64 {
        bath_phases(t, &self.params()).0
    }

    pub fn q2(&self, t: f64) -> f64 {
        bath_phases(t, &self.params()).1
    }

    pub fn q1_plateau(&self) -> f64 {
        PI * PI * self.alpha
    }
}

/// Cosine coefficients g_0..=g_M of the even 2-periodic extension of
/// Q2(τ t_f)/π on τ ∈ [−1, 1], by FFT on a 2M-point grid.
pub fn fourier_coefficients(corr: &BathCorrelation, t_f: f64, m: usize) -> Result<Vec<f64>> {
    if !(t_f > 0.0) || !t_f.is_finite() {
        return Err(DynamoError::Argument(format!("t_f must be positive, got {t_f}")));
    }
    if m == 0 {
        return Err(DynamoError::Argument("need at least one Fourier mode".into()));
    }
    let n = 2 * m;
    let mut buf: Vec<Complex64> = (0..n)
        .map(|j| {
            let tau = j.min(n - j) as f64 / m as f64;
            Complex64::new(corr.q2(tau * t_f) / PI, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    Ok(buf[..=m].iter().map(|c| c.re / m as f64).collect())
}

/// Amplitudes √g_m multiplying the Gaussian pair of mode m. The square root is
/// the complex principal one: negative coefficients give an imaginary field.
/// Mode 0 carries √(g_0/2) on a single variable, so the covariance is Q2/π
/// exactly (l₁ = 0).
pub fn field_amplitudes(coeffs: &[f64]) -> Vec<Complex64> {
    coeffs
        .iter()
        .enumerate()
        .map(|(k, &g)| Complex64::new(if k == 0 { 0.5 * g } else { g }, 0.0).sqrt())
        .collect()
}

/// One realization of h_s on the uniform grid τ_j = j/M, j = 0..=M.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticField {
    pub m: usize,
    pub t_f: f64,
    pub seed: u64,
    pub samples: Vec<Complex64>,
}

impl StochasticField {
    /// Linear interpolation; clamps to [0, t_f].
    pub fn at(&self, t: f64) -> Complex64 {
        let x = (t / self.t_f * self.m as f64).clamp(0.0, self.m as f64);
        let j = (x as usize).min(self.m - 1);
        let u = x - j as f64;
        self.samples[j] * (1.0 - u) + self.samples[j + 1] * u
    }
}

/// Reusable inverse FFT for field synthesis.
pub struct FieldSynth {
    m: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl FieldSynth {
    pub fn new(m: usize) -> Self {
        Self { m, fft: FftPlanner::new().plan_fft_inverse(2 * m) }
    }

    /// h_s(τ) = Σ_m a_m [s₁ cos(mπτ) − s₂ sin(mπτ)] with (s₁, s₂) drawn from
    /// ChaCha8 seeded by `seed`.
    pub fn sample(&self, amps: &[Complex64], t_f: f64, seed: u64) -> StochasticField {
        let m = self.m;
        assert_eq!(amps.len(), m + 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut re = vec![Complex64::new(0.0, 0.0); 2 * m];
        let mut im = vec![Complex64::new(0.0, 0.0); 2 * m];
        for (k, a) in amps.iter().enumerate() {
            let s1: f64 = StandardNormal.sample(&mut rng);
            let s2: f64 = if k == 0 { 0.0 } else { StandardNormal.sample(&mut rng) };
            let z = Complex64::new(s1, s2);
            re[k] = z * a.re;
            im[k] = z * a.im;
        }
        self.fft.process(&mut re);
        self.fft.process(&mut im);
        let samples = (0..=m).map(|j| Complex64::new(re[j].re, im[j].re)).collect();
        StochasticField { m, t_f, seed, samples }
    }
}

pub fn sample_field(coeffs: &[f64], t_f: f64, seed: u64) -> StochasticField {
    let m = coeffs.len() - 1;
    FieldSynth::new(m).sample(&field_amplitudes(coeffs), t_f, seed)
}

/// Density-matrix entries (ρ↑↑, ρ↑↓, ρ↓↑, ρ↓↓) of one realization per grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryOutput {
    pub rho: Vec<[Complex64; 4]>,
    pub flagged: bool,
}

struct Drive {
    h: f64,
    v: f64,
    phase: Complex64,
}

impl Drive {
    /// h(t) = h_s(t) − i∫₀ᵗ H cos(vt′)dt′.
    fn h_total(&self, field: &StochasticField, t: f64) -> Complex64 {
        let a = if self.v > 0.0 { self.h / self.v * (self.v * t).sin() } else { self.h * t };
        field.at(t) - Complex64::new(0.0, a)
    }

    /// −iV(t)Φ.
    fn rhs(&self, field: &StochasticField, t: f64, y: &[Complex64; 4]) -> [Complex64; 4] {
        let pre = 0.5 * self.h * (self.v * t).sin();
        let e = self.h_total(field, t).exp();
        let ei = 1.0 / e;
        let (ph, phc) = (self.phase, self.phase.conj());
        let d = [
            ei * y[1] - e * y[2],
            ph * e * y[0] - phc * e * y[3],
            -phc * ei * y[0] + ph * ei * y[3],
            -ei * y[1] + e * y[2],
        ];
        let f = Complex64::new(0.0, -pre);
        [f * d[0], f * d[1], f * d[2], f * d[3]]
    }
}

/// Fixed-step RK4 from Φ = (1, 0, 0, 0) at t = 0 with steps no larger than the
/// field spacing.
pub fn run_trajectory(p: &ModelParams, field: &StochasticField, grid: &TimeGrid) -> Result<TrajectoryOutput> {
    if grid.t0 != 0.0 {
        return Err(DynamoError::Argument("SSE grid must start at t = 0".into()));
    }
    if grid.tf > field.t_f * (1.0 + 1e-12) {
        return Err(DynamoError::Argument("field is shorter than the grid".into()));
    }
    let drive = Drive { h: p.h, v: p.v, phase: Complex64::from_polar(1.0, PI * p.alpha) };
    let n_sub = (grid.dt() / (field.t_f / field.m as f64)).ceil().max(1.0) as usize;
    let h = grid.dt() / n_sub as f64;
    let mut y = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)];
    let mut rho = Vec::with_capacity(grid.len());
    let mut flagged = false;
    let readout = |t: f64, y: &[Complex64; 4]| {
        let e = drive.h_total(field, t).exp();
        [y[0], y[1] / e, y[2] * e, y[3]]
    };
    rho.push(readout(0.0, &y));
    let add = |y: &[Complex64; 4], k: &[Complex64; 4], s: f64| [y[0] + k[0] * s, y[1] + k[1] * s, y[2] + k[2] * s, y[3] + k[3] * s];
    for i in 1..grid.len() {
        let t0 = grid.t(i - 1);
        if !flagged {
            for s in 0..n_sub {
                let t = t0 + s as f64 * h;
                let k1 = drive.rhs(field, t, &y);
                let k2 = drive.rhs(field, t + 0.5 * h, &add(&y, &k1, 0.5 * h));
                let k3 = drive.rhs(field, t + 0.5 * h, &add(&y, &k2, 0.5 * h));
                let k4 = drive.rhs(field, t + h, &add(&y, &k3, h));
                for c in 0..4 {
                    y[c] += (k1[c] + (k2[c] + k3[c]) * 2.0 + k4[c]) * (h / 6.0);
                }
            }
            flagged = y.iter().any(|c| !c.is_finite() || c.norm() > OVERFLOW);
        }
        rho.push(if flagged { [Complex64::new(f64::NAN, 0.0); 4] } else { readout(grid.t(i), &y) });
    }
    Ok(TrajectoryOutput { rho, flagged })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SseOptions {
    pub n_traj: usize,
    pub seed: u64,
    /// Fourier modes of the field; `None` picks a power of two with
    /// Mπ/t_f ≥ 4ω_c.
    pub fourier_modes: Option<usize>,
    pub use_q1_plateau: bool,
}

impl Default for SseOptions {
    fn default() -> Self {
        Self { n_traj: 10_000, seed: 0, fourier_modes: None, use_q1_plateau: true }
    }
}

pub fn default_fourier_modes(p: &ModelParams, t_f: f64) -> usize {
    ((4.0 * p.omega_c * t_f / PI).ceil() as usize).max(64).next_power_of_two()
}

#[derive(Debug, Clone)]
pub struct SseResult {
    pub traj: SpinTrajectory,
    pub se_sx: Vec<f64>,
    pub se_sy: Vec<f64>,
    pub se_sz: Vec<f64>,
    /// Mean of ρ↑↑ + ρ↓↓.
    pub trace: Vec<f64>,
    /// |ρ↑↓ − conj(ρ↓↑)| of the means.
    pub hermiticity: Vec<f64>,
    pub n_traj: usize,
    pub n_flagged: usize,
    pub seed: u64,
    pub fourier_modes: usize,
    /// More than 1% of trajectories flagged.
    pub degraded: bool,
}

#[derive(Clone)]
struct Acc {
    n: usize,
    flagged: usize,
    /// per time: Σsx, Σsx², Σsy, Σsy², Σsz, Σsz², Σtrace, Σρ↑↓, Σρ↓↑
    s: Vec<[f64; 7]>,
    c: Vec<[Complex64; 2]>,
}

impl Acc {
    fn new(len: usize) -> Self {
        Self { n: 0, flagged: 0, s: vec![[0.0; 7]; len], c: vec![[Complex64::new(0.0, 0.0); 2]; len] }
    }

    fn push(&mut self, out: &TrajectoryOutput) {
        if out.flagged {
            self.flagged += 1;
            return;
        }
        self.n += 1;
        for (i, r) in out.rho.iter().enumerate() {
            let (x, y, z) = (2.0 * r[2].re, 2.0 * r[2].im, (r[0] - r[3]).re);
            let a = &mut self.s[i];
            a[0] += x;
            a[1] += x * x;
            a[2] += y;
            a[3] += y * y;
            a[4] += z;
            a[5] += z * z;
            a[6] += (r[0] + r[3]).re;
            self.c[i][0] += r[1];
            self.c[i][1] += r[2];
        }
    }

    fn merge(&mut self, o: &Acc) {
        self.n += o.n;
        self.flagged += o.flagged;
        for i in 0..self.s.len() {
            for k in 0..7 {
                self.s[i][k] += o.s[i][k];
            }
            self.c[i][0] += o.c[i][0];
            self.c[i][1] += o.c[i][1];
        }
    }
}

/// Average `n_traj` realizations with seeds seed, seed+1, …; blocks of
/// trajectories are reduced in index order so the result does not depend on
/// the thread count.
pub fn average(p: &ModelParams, grid: &TimeGrid, opts: &SseOptions) -> Result<SseResult> {
    p.validate()?;
    if opts.n_traj == 0 {
        return Err(DynamoError::Argument("n_traj must be at least 1".into()));
    }
    if !opts.use_q1_plateau {
        return Err(DynamoError::Argument("only the Q1 plateau form is implemented".into()));
    }
    if p.alpha >= 0.5 {
        return Err(DynamoError::Domain(format!("stochastic unravelling needs α < 1/2, got {}", p.alpha)));
    }
    let t_f = grid.tf;
    let m = opts.fourier_modes.unwrap_or_else(|| default_fourier_modes(p, t_f));
    let corr = BathCorrelation::new(p);
    let amps = field_amplitudes(&fourier_coefficients(&corr, t_f, m)?);
    let synth = FieldSynth::new(m);
    let len = grid.len();
    let blocks: Vec<(usize, usize)> =
        (0..opts.n_traj).step_by(BLOCK).map(|s| (s, (s + BLOCK).min(opts.n_traj))).collect();
    let partial: Vec<Result<Acc>> = blocks
        .par_iter()
        .map(|&(a, b)| {
            let mut acc = Acc::new(len);
            for k in a..b {
                let field = synth.sample(&amps, t_f, opts.seed.wrapping_add(k as u64));
                acc.push(&run_trajectory(p, &field, grid)?);
            }
            Ok(acc)
        })
        .collect();
    let mut total = Acc::new(len);
    for part in partial {
        total.merge(&part?);
    }
    if total.n == 0 {
        return Err(DynamoError::Integration("every trajectory overflowed".into()));
    }
    let n = total.n as f64;
    let se = |sum: f64, sq: f64| {
        if total.n < 2 {
            return 0.0;
        }
        let mean = sum / n;
        ((sq / n - mean * mean).max(0.0) * n / (n - 1.0) / n).sqrt()
    };
    let mut cols: [Vec<f64>; 9] = Default::default();
    for (i, a) in total.s.iter().enumerate() {
        cols[0].push(a[0] / n);
        cols[1].push(a[2] / n);
        cols[2].push(a[4] / n);
        cols[3].push(se(a[0], a[1]));
        cols[4].push(se(a[2], a[3]));
        cols[5].push(se(a[4], a[5]));
        cols[6].push(a[6] / n);
        cols[7].push((total.c[i][0] / n - (total.c[i][1] / n).conj()).norm());
        cols[8].push(-p.h * (p.v * grid.t(i)).sin() * a[2] / n);
    }
    let [sx, sy, sz, se_sx, se_sy, se_sz, trace, hermiticity, sd] = cols;
    let mut traj = SpinTrajectory::new(*grid, sx, sy, sz);
    traj.sz_dot = Some(sd);
    Ok(SseResult {
        traj,
        se_sx,
        se_sy,
        se_sz,
        trace,
        hermiticity,
        n_traj: opts.n_traj,
        n_flagged: total.flagged,
        seed: opts.seed,
        fourier_modes: m,
        degraded: total.flagged * 100 > opts.n_traj,
    })
}
