//! Exact propagation of the spin ⊗ truncated-Fock state.
//!
//! Basis ordering is spin-major (↑ block first), then occupation vectors in
//! lexicographic order with mode 0 varying slowest. The state is integrated in
//! the interaction picture of the free bath, so mode frequencies enter only as
//! phases on the coupling; observables are rotated back to the lab frame.

use crate::error::{DynamoError, Result};
use crate::model::{FieldTrajectory, ModeSet, ModelParams, SpinTrajectory, TimeGrid};
use crate::ode::{Dopri5, OdeStats};
use num_complex::Complex64;
use std::collections::HashMap;
use std::sync::Arc;

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockTruncation {
    pub n_max: Vec<usize>,
    /// Optional cap on the total excitation number Σ n_k.
    pub max_total: Option<usize>,
    /// Modes left out of the total; only their own `n_max` bounds them.
    pub exempt: Vec<bool>,
}

impl FockTruncation {
    pub fn uniform(n_modes: usize, n: usize) -> Self {
        Self { n_max: vec![n; n_modes], max_total: None, exempt: vec![false; n_modes] }
    }

    pub fn total(n_modes: usize, n_tot: usize) -> Self {
        Self { n_max: vec![n_tot; n_modes], max_total: Some(n_tot), exempt: vec![false; n_modes] }
    }

    /// Per-mode cutoff admitting the displaced vacuum of a mode: 25(g/2ω)² + 10.
    pub fn required(g: f64, omega: f64) -> usize {
        (25.0 * (g / (2.0 * omega)).powi(2) + 10.0).ceil() as usize
    }

    /// Per-mode and total cutoffs at which the Poisson tails of the displaced
    /// vacua, mean (g/2ω)² per mode, drop below `eps`.
    pub fn poisson(ms: &ModeSet, eps: f64) -> Self {
        let means: Vec<f64> = ms.modes.iter().map(|m| (m.g / (2.0 * m.omega)).powi(2)).collect();
        let n_max = means.iter().map(|&mu| poisson_cutoff(mu, eps).max(2)).collect();
        let exempt = vec![false; means.len()];
        Self { n_max, max_total: Some(poisson_cutoff(means.iter().sum(), eps).max(2)), exempt }
    }

    /// The smallest uniform per-mode truncation satisfying [`Self::required`].
    pub fn admissible(ms: &ModeSet) -> Self {
        let n_max = ms.modes.iter().map(|m| Self::required(m.g, m.omega)).collect();
        Self { n_max, max_total: None, exempt: vec![false; ms.len()] }
    }

    /// Take mode `k` out of the total cap and bound it by `n` alone.
    pub fn with_exempt(mut self, k: usize, n: usize) -> Self {
        if k < self.n_max.len() {
            self.n_max[k] = n;
            self.exempt[k] = true;
        }
        self
    }

    /// Occupation limit of mode `k` under both caps.
    pub fn limit(&self, k: usize) -> usize {
        match self.max_total {
            Some(c) if !self.exempt[k] => c.min(self.n_max[k]),
            _ => self.n_max[k],
        }
    }
}

/// Smallest n with P(N > n) < eps for N ~ Poisson(mu).
fn poisson_cutoff(mu: f64, eps: f64) -> usize {
    let top = (mu + 20.0 * mu.sqrt() + 60.0).ceil() as usize;
    let mut terms = Vec::with_capacity(top + 1);
    let mut t = (-mu).exp();
    terms.push(t);
    for j in 1..=top {
        t *= mu / j as f64;
        terms.push(t);
    }
    let mut tail = 0.0;
    for n in (0..top).rev() {
        tail += terms[n + 1];
        if tail >= eps {
            return n + 1;
        }
    }
    0
}

/// Transition b_k: |…n_k…⟩ at `upper` → √n_k |…n_k−1…⟩ at `lower`.
#[derive(Debug, Clone, Copy)]
struct Ladder {
    lower: u32,
    upper: u32,
    sqrt_n: f64,
}

#[derive(Debug)]
pub struct FockBasis {
    n_modes: usize,
    occ: Vec<u16>,
    ladders: Vec<Vec<Ladder>>,
    truncation: FockTruncation,
}

impl FockBasis {
    pub fn new(tr: &FockTruncation) -> Result<Self> {
        let k = tr.n_max.len();
        if tr.n_max.iter().any(|&n| n == 0 || n > u16::MAX as usize) {
            return Err(DynamoError::Argument("per-mode truncation must be in 1..65535".into()));
        }
        let cap = tr.max_total.unwrap_or(usize::MAX);
        let mut occ = Vec::new();
        let mut cur = vec![0u16; k];
        if tr.exempt.len() != k {
            return Err(DynamoError::Argument("exempt flags and modes differ in length".into()));
        }
        enumerate(0, 0, tr, cap, &mut cur, &mut occ);
        let dim = if k == 0 { 1 } else { occ.len() / k };
        if dim > u32::MAX as usize / 2 {
            return Err(DynamoError::Argument(format!("basis of {dim} states is too large")));
        }
        let index: HashMap<&[u16], u32> = (0..dim).map(|j| (&occ[j * k..(j + 1) * k], j as u32)).collect();
        let mut ladders = vec![Vec::new(); k];
        let mut key = vec![0u16; k];
        for j in 0..dim {
            for m in 0..k {
                let n = occ[j * k + m];
                if n > 0 {
                    key.copy_from_slice(&occ[j * k..(j + 1) * k]);
                    key[m] -= 1;
                    let lower = index[key.as_slice()];
                    ladders[m].push(Ladder { lower, upper: j as u32, sqrt_n: (n as f64).sqrt() });
                }
            }
        }
        Ok(Self { n_modes: k, occ, ladders, truncation: tr.clone() })
    }

    /// Number of bath states.
    pub fn bath_dim(&self) -> usize {
        if self.n_modes == 0 {
            1
        } else {
            self.occ.len() / self.n_modes
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.bath_dim()
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn occupation(&self, j: usize) -> &[u16] {
        &self.occ[j * self.n_modes..(j + 1) * self.n_modes]
    }

    pub fn truncation(&self) -> &FockTruncation {
        &self.truncation
    }
}

fn enumerate(m: usize, used: usize, tr: &FockTruncation, cap: usize, cur: &mut [u16], out: &mut Vec<u16>) {
    if m == tr.n_max.len() {
        out.extend_from_slice(cur);
        return;
    }
    let top = if tr.exempt[m] { tr.n_max[m] } else { tr.n_max[m].min(cap - used) };
    for n in 0..=top {
        cur[m] = n as u16;
        let used = if tr.exempt[m] { used } else { used + n };
        enumerate(m + 1, used, tr, cap, cur, out);
    }
    cur[m] = 0;
}

#[derive(Debug, Clone)]
pub struct JointState {
    pub basis: Arc<FockBasis>,
    /// Amplitudes, ↑ block then ↓ block.
    pub psi: Vec<Complex64>,
}

impl JointState {
    pub fn norm(&self) -> f64 {
        self.psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Spin up times a product of coherent states ⟨b_k⟩ = −δ₁ g_k/(2ω_k).
pub fn prepare_state(p: &ModelParams, ms: &ModeSet, tr: &FockTruncation) -> Result<JointState> {
    if tr.n_max.len() != ms.len() {
        return Err(DynamoError::Argument("truncation and mode set differ in length".into()));
    }
    if tr.max_total.is_none() {
        for (k, m) in ms.modes.iter().enumerate() {
            let need = FockTruncation::required(m.g, m.omega);
            if tr.n_max[k] < need {
                return Err(DynamoError::Preparation { mode: k, have: tr.n_max[k], need });
            }
        }
    }
    let basis = Arc::new(FockBasis::new(tr)?);
    let beta: Vec<f64> = ms.modes.iter().map(|m| -p.preparation.delta1() * m.g / (2.0 * m.omega)).collect();
    let nb = basis.bath_dim();
    let mut psi = vec![Complex64::new(0.0, 0.0); 2 * nb];
    for (j, amp) in psi.iter_mut().take(nb).enumerate() {
        let mut a = 1.0;
        for (k, &n) in basis.occupation(j).iter().enumerate() {
            a *= coherent_amplitude(beta[k], n as usize);
        }
        *amp = Complex64::new(a, 0.0);
    }
    let kept: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
    if let Some(cap) = tr.max_total {
        if 1.0 - kept > 1e-10 {
            return Err(DynamoError::Preparation { mode: ms.len(), have: cap, need: cap + 1 });
        }
    }
    let s = kept.sqrt();
    psi.iter_mut().for_each(|c| *c /= s);
    Ok(JointState { basis, psi })
}

/// e^{−β²/2} βⁿ/√n! for real β.
fn coherent_amplitude(beta: f64, n: usize) -> f64 {
    let mut a = (-0.5 * beta * beta).exp();
    for i in 1..=n {
        a *= beta / (i as f64).sqrt();
    }
    a
}

#[derive(Debug, Clone, PartialEq)]
pub struct BathRecord {
    pub grid: TimeGrid,
    /// ⟨b_k⟩ in the lab frame, `[time][mode]`.
    pub b: Vec<Vec<Complex64>>,
    /// ⟨b_k†b_k⟩.
    pub n: Vec<Vec<f64>>,
    /// ⟨n_k²⟩, for the truncation audit.
    pub n2: Vec<Vec<f64>>,
    /// Re⟨S(b_k + b_k†)⟩.
    pub s_b: Vec<Vec<f64>>,
    /// ⟨S⟩.
    pub s: Vec<f64>,
    /// ⟨S²⟩, identically 1/4 for a spin-1/2.
    pub s2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationAudit {
    /// max_t (⟨n_k⟩ + 4σ_k) per mode.
    pub peak: Vec<f64>,
    pub limit: Vec<usize>,
    /// Largest weight found on states at the truncation edge.
    pub edge_weight: f64,
    pub valid: bool,
}

#[derive(Debug, Clone)]
pub struct EdRun {
    pub traj: SpinTrajectory,
    pub record: BathRecord,
    /// W_dr(t) integrated alongside the state.
    pub work: Vec<f64>,
    pub audit: TruncationAudit,
    pub norm_drift: f64,
    pub stats: OdeStats,
    pub final_state: JointState,
}

/// Integrates i∂t|ψ⟩ = H(t)|ψ⟩ and samples observables on `grid`.
pub fn propagate(state0: &JointState, p: &ModelParams, ms: &ModeSet, grid: &TimeGrid, tol: f64) -> Result<EdRun> {
    let basis = state0.basis.clone();
    if basis.n_modes() != ms.len() {
        return Err(DynamoError::Argument("state basis and mode set differ".into()));
    }
    let nb = basis.bath_dim();
    let mut y = state0.psi.clone();
    y.push(Complex64::new(0.0, 0.0));
    let rhs = Rhs { p: *p, ms, basis: &basis, nb };
    let mut ode = Dopri5::new(y.len(), tol);
    let n = grid.len();
    let kmodes = ms.len();
    let mut rec = BathRecord {
        grid: *grid,
        b: Vec::with_capacity(n),
        n: Vec::with_capacity(n),
        n2: Vec::with_capacity(n),
        s_b: Vec::with_capacity(n),
        s: Vec::with_capacity(n),
        s2: Vec::with_capacity(n),
    };
    let (mut sx, mut sy, mut sz, mut work) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    let mut peak = vec![0.0f64; kmodes];
    let mut edge_weight = 0.0f64;
    let mut norm_drift = 0.0f64;
    for i in 0..n {
        let t = grid.t(i);
        if i > 0 {
            ode.advance(|t, y, dy| rhs.eval(t, y, dy), grid.t(i - 1), &mut y, t)?;
        }
        let psi = &y[..2 * nb];
        let obs = measure(&basis, ms, psi, t);
        norm_drift = norm_drift.max((obs.norm - 1.0).abs());
        sx.push(obs.sx);
        sy.push(obs.sy);
        sz.push(obs.sz);
        work.push(y[2 * nb].re);
        for k in 0..kmodes {
            let sd = (obs.n2[k] - obs.n[k] * obs.n[k]).max(0.0).sqrt();
            peak[k] = peak[k].max(obs.n[k] + 4.0 * sd);
        }
        edge_weight = edge_weight.max(obs.edge);
        rec.b.push(obs.b);
        rec.n.push(obs.n);
        rec.n2.push(obs.n2);
        rec.s_b.push(obs.s_b);
        rec.s.push(0.5 * obs.sz);
        rec.s2.push(0.25);
        if !obs.norm.is_finite() {
            return Err(DynamoError::Integration(format!("NaN amplitudes at t = {t}")));
        }
    }
    let tr = basis.truncation();
    let limit: Vec<usize> = (0..kmodes).map(|k| tr.limit(k)).collect();
    let valid = peak.iter().zip(&limit).all(|(pk, &l)| *pk < l as f64) && edge_weight < 1e-6;
    let sz_dot: Vec<f64> = (0..n).map(|i| -p.h * (p.v * grid.t(i)).sin() * sy[i]).collect();
    let mut traj = SpinTrajectory::new(*grid, sx, sy, sz);
    traj.sz_dot = Some(sz_dot);
    let final_state = JointState { basis: basis.clone(), psi: lab_frame(&basis, ms, &y[..2 * nb], grid.tf) };
    Ok(EdRun {
        traj,
        record: rec,
        work,
        audit: TruncationAudit { peak, limit, edge_weight, valid },
        norm_drift,
        stats: ode.stats,
        final_state,
    })
}

struct Rhs<'a> {
    p: ModelParams,
    ms: &'a ModeSet,
    basis: &'a FockBasis,
    nb: usize,
}

impl Rhs<'_> {
    fn eval(&self, t: f64, y: &[Complex64], dy: &mut [Complex64]) {
        let nb = self.nb;
        let (up, dn) = y[..2 * nb].split_at(nb);
        let (dup, ddn) = dy[..2 * nb].split_at_mut(nb);
        let p = &self.p;
        let (s, c) = (p.v * t).sin_cos();
        let a = -0.5 * (p.h * c + p.m);
        let b = -0.5 * p.h * s;
        let mi = Complex64::new(0.0, -1.0);
        let (mut pz, mut px, mut w) = (0.0, 0.0, 0.0);
        for j in 0..nb {
            dup[j] = up[j] * a + dn[j] * b;
            ddn[j] = up[j] * b - dn[j] * a;
            pz += up[j].norm_sqr() - dn[j].norm_sqr();
            px += 2.0 * (up[j].conj() * dn[j]).re;
            w += up[j].norm_sqr() + dn[j].norm_sqr();
        }
        for (k, m) in self.ms.modes.iter().enumerate() {
            if m.g == 0.0 {
                continue;
            }
            let ck = Complex64::from_polar(0.5 * m.g, -m.omega * t);
            let cc = ck.conj();
            for l in &self.basis.ladders[k] {
                let (lo, hi) = (l.lower as usize, l.upper as usize);
                let f = ck * l.sqrt_n;
                let fc = cc * l.sqrt_n;
                dup[lo] += f * up[hi];
                dup[hi] += fc * up[lo];
                ddn[lo] -= f * dn[hi];
                ddn[hi] -= fc * dn[lo];
            }
        }
        for d in dy[..2 * nb].iter_mut() {
            *d *= mi;
        }
        dy[2 * nb] = Complex64::new(0.5 * p.h * p.v * (s * pz - c * px) / w, 0.0);
    }
}

struct Observables {
    sx: f64,
    sy: f64,
    sz: f64,
    norm: f64,
    b: Vec<Complex64>,
    n: Vec<f64>,
    n2: Vec<f64>,
    s_b: Vec<f64>,
    edge: f64,
}

/// Expectation values normalized by ⟨ψ|ψ⟩; `norm` is the unnormalized ⟨ψ|ψ⟩.
fn measure(basis: &FockBasis, ms: &ModeSet, psi: &[Complex64], t: f64) -> Observables {
    let nb = basis.bath_dim();
    let (up, dn) = psi.split_at(nb);
    let km = basis.n_modes();
    let (mut sz, mut norm) = (0.0, 0.0);
    let mut cross = Complex64::new(0.0, 0.0);
    let mut n = vec![0.0; km];
    let mut n2 = vec![0.0; km];
    let mut edge = 0.0;
    let tr = basis.truncation();
    for j in 0..nb {
        let (pu, pd) = (up[j].norm_sqr(), dn[j].norm_sqr());
        let w = pu + pd;
        norm += w;
        sz += pu - pd;
        cross += up[j].conj() * dn[j];
        let occ = basis.occupation(j);
        let mut tot = 0usize;
        let mut at_edge = false;
        for k in 0..km {
            let x = occ[k] as f64;
            n[k] += x * w;
            n2[k] += x * x * w;
            if !tr.exempt[k] {
                tot += occ[k] as usize;
            }
            at_edge |= occ[k] as usize == tr.n_max[k];
        }
        if tr.max_total == Some(tot) {
            at_edge = true;
        }
        if at_edge {
            edge += w;
        }
    }
    let mut b = vec![Complex64::new(0.0, 0.0); km];
    let mut s_b = vec![0.0; km];
    for k in 0..km {
        let (mut bu, mut bd) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for l in &basis.ladders[k] {
            let (lo, hi) = (l.lower as usize, l.upper as usize);
            bu += up[lo].conj() * up[hi] * l.sqrt_n;
            bd += dn[lo].conj() * dn[hi] * l.sqrt_n;
        }
        let rot = Complex64::from_polar(1.0, -ms.modes[k].omega * t);
        b[k] = (bu + bd) * rot;
        s_b[k] = ((bu - bd) * rot).re;
    }
    let inv = 1.0 / norm;
    n.iter_mut().chain(n2.iter_mut()).chain(s_b.iter_mut()).for_each(|x| *x *= inv);
    b.iter_mut().for_each(|x| *x *= inv);
    Observables {
        sx: 2.0 * cross.re * inv,
        sy: 2.0 * cross.im * inv,
        sz: sz * inv,
        norm,
        b,
        n,
        n2,
        s_b,
        edge: edge * inv,
    }
}

fn lab_frame(basis: &FockBasis, ms: &ModeSet, psi: &[Complex64], t: f64) -> Vec<Complex64> {
    let nb = basis.bath_dim();
    let mut out = psi.to_vec();
    for j in 0..nb {
        let e: f64 = basis.occupation(j).iter().zip(&ms.modes).map(|(&n, m)| n as f64 * m.omega).sum();
        let ph = Complex64::from_polar(1.0, -e * t);
        out[j] *= ph;
        out[nb + j] *= ph;
    }
    out
}

/// h(t) = Σ_k 2g_k Re⟨b_k(t)⟩.
pub fn measure_field(rec: &BathRecord, ms: &ModeSet) -> FieldTrajectory {
    let h = rec
        .b
        .iter()
        .map(|bs| bs.iter().zip(&ms.modes).map(|(b, m)| 2.0 * m.g * b.re).sum())
        .collect();
    let mut f = FieldTrajectory::total_only(rec.grid, h);
    f.dt_omega_max = rec.grid.dt() * ms.omega_max();
    f
}

/// Per-mode contributions 2g_k Re⟨b_k(t)⟩, `[mode][time]`.
pub fn mode_fields(rec: &BathRecord, ms: &ModeSet) -> Vec<Vec<f64>> {
    (0..ms.len())
        .map(|k| rec.b.iter().map(|bs| 2.0 * ms.modes[k].g * bs[k].re).collect())
        .collect()
}

/// Convenience: prepare and propagate in one call.
pub fn run(p: &ModelParams, ms: &ModeSet, tr: &FockTruncation, grid: &TimeGrid, tol: f64) -> Result<EdRun> {
    let s0 = prepare_state(p, ms, tr)?;
    propagate(&s0, p, ms, grid, tol)
}
