//! Closed-form references: free rotation, one-mode weak-coupling fields and
//! energies, frozen limit, Kondo-scale ⟨σx⟩, periodic orbit and dynamo
//! predictions.

use crate::error::{DynamoError, Result};
use crate::model::{spectral_density, ModelParams, Preparation};
use crate::special::gamma;
use num_complex::Complex64;
use std::f64::consts::PI;

/// (sx, sy, sz) of the decoupled spin starting along +z.
pub fn free_spin(t: f64, h: f64, v: f64) -> (f64, f64, f64) {
    let om = h.hypot(v);
    let (svt, cvt) = (v * t).sin_cos();
    let (sot, cot) = (om * t).sin_cos();
    let (a, b, c) = (h * h / (om * om), v / om, v * v / (om * om));
    let sx = a * svt - b * cvt * sot + c * svt * cot;
    let sy = 2.0 * v * h / (om * om) * (0.5 * om * t).sin().powi(2);
    let sz = a * cvt + b * svt * sot + c * cvt * cot;
    (sx, sy, sz)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneModeParams {
    pub omega: f64,
    pub g: f64,
    pub h: f64,
    pub v: f64,
    pub preparation: Preparation,
}

impl OneModeParams {
    pub fn is_resonant(&self) -> bool {
        (self.omega - self.v).abs() < 1e-9 * self.v
    }
}

/// Induced field of one mode assuming ⟨σz⟩ = cos(vt).
pub fn one_mode_weak_field(t: f64, pm: &OneModeParams) -> f64 {
    let (w, g, v) = (pm.omega, pm.g, pm.v);
    let d1 = pm.preparation.delta1();
    if pm.is_resonant() {
        return -0.5 * g * g * t * (v * t).sin() - d1 * g * g / v * (v * t).cos();
    }
    let pre = g * g * w / (w * w - v * v);
    match pm.preparation {
        Preparation::P1 => pre * (v * v / (w * w) * (w * t).cos() - (v * t).cos()),
        Preparation::P2 => pre * ((w * t).cos() - (v * t).cos()),
    }
}

/// (ΔE_dyn, W_dr, E_fluct) for the resonant mode in the weak-coupling regime.
pub fn one_mode_energies(t: f64, pm: &OneModeParams) -> (f64, f64, f64) {
    let (g, v) = (pm.g, pm.v);
    let d1 = pm.preparation.delta1();
    let pre = g * g / (32.0 * v);
    let osc = 1.0 - (2.0 * v * t).cos();
    let common = 2.0 * v * v * t * t - 2.0 * v * t * (2.0 * v * t).sin();
    let e_dyn = pre * ((4.0 * d1 - 3.0) * osc + common);
    let w_dr = pre * ((1.0 + 4.0 * d1) * osc + common);
    let e_fluct = g * g / (4.0 * v) * (v * t).sin().powi(2);
    (e_dyn, w_dr, e_fluct)
}

/// Induced field of a frozen spin, ⟨σz⟩ ≡ 1.
pub fn frozen_field(t: f64, pm: &OneModeParams) -> f64 {
    let d1 = pm.preparation.delta1();
    -(pm.g * pm.g / pm.omega) * (1.0 + (d1 - 1.0) * (pm.omega * t).cos())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KondoParams {
    pub delta: f64,
    pub alpha: f64,
    pub omega_c: f64,
}

impl KondoParams {
    fn check(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(DynamoError::Domain(format!("alpha = {} outside (0, 1/2)", self.alpha)));
        }
        if !(self.delta > 0.0) {
            return Err(DynamoError::Domain("tunneling element must be positive".into()));
        }
        Ok(())
    }

    /// b = α ln α + (1−α) ln(1−α).
    pub fn b(&self) -> f64 {
        let a = self.alpha;
        let x = if a > 0.0 { a * a.ln() } else { 0.0 };
        x + (1.0 - a) * (1.0 - a).ln()
    }

    /// High-energy scale D of the Kondo mapping.
    pub fn d(&self) -> Result<f64> {
        self.check()?;
        let a = self.alpha;
        let rhs = 2.0 * gamma(1.5 - a) * (-self.b()).exp()
            / (PI.sqrt() * (1.0 - 2.0 * a) * gamma(1.0 - 2.0 * a) * gamma(1.0 - a));
        Ok(self.omega_c * rhs.powf(1.0 / (2.0 * a)))
    }

    /// T_K = Δ(Δ/D)^{α/(1−α)}.
    pub fn t_k(&self) -> Result<f64> {
        let d = self.d()?;
        Ok(self.delta * (self.delta / d).powf(self.alpha / (1.0 - self.alpha)))
    }

    pub fn c1(&self) -> Result<f64> {
        self.check()?;
        let a = self.alpha;
        let q = 2.0 - 2.0 * a;
        Ok((-self.b() * q).exp() / (PI.sqrt() * (1.0 - a)) * gamma(1.0 - 1.0 / q) / gamma(1.0 - a / q))
    }
}

/// Δ_r = Δ(Δ/ω_c)^{α/(1−α)}.
pub fn renormalized_tunneling(k: &KondoParams) -> f64 {
    k.delta * (k.delta / k.omega_c).powf(k.alpha / (1.0 - k.alpha))
}

/// Small-bias ground-state ⟨σx⟩ from the Kondo mapping.
pub fn bethe_sx(k: &KondoParams) -> Result<f64> {
    let tk = k.t_k()?;
    Ok(k.delta / ((2.0 * k.alpha - 1.0) * k.omega_c) + k.c1()? * tk / k.delta)
}

/// Bloch coordinates of the periodic orbit and the amplitudes (↑, ↓) of |Ψ₋(t)⟩.
pub fn gkls_orbit(t: f64, h: f64, v: f64) -> ((f64, f64, f64), [Complex64; 2]) {
    let om = h.hypot(v);
    let (s, c) = (v * t).sin_cos();
    let bloch = (h / om * s, v / om, h / om * c);
    let (hs, hc) = (0.5 * v * t).sin_cos();
    let p = ((om + h) / (2.0 * om)).sqrt();
    let m = ((om - h) / (2.0 * om)).sqrt();
    let up = Complex64::new(p * hc, -m * hs);
    let dn = Complex64::new(p * hs, m * hc);
    (bloch, [up, dn])
}

/// |Ψ₊(t)⟩, orthogonal to |Ψ₋(t)⟩.
pub fn orbit_plus(t: f64, h: f64, v: f64) -> [Complex64; 2] {
    let (_, [a, b]) = gkls_orbit(t, h, v);
    [-b.conj(), a.conj()]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamoPredictions {
    /// Stationary work flow Ẇ∞.
    pub w_flow: f64,
    /// ΔE_dyn accumulated over a half period.
    pub de_dyn_half: f64,
    pub c_dyn: f64,
}

pub fn dynamo_predictions(p: &ModelParams) -> Result<DynamoPredictions> {
    let om2 = p.h * p.h + p.v * p.v;
    let j = spectral_density(p.v, p)?;
    Ok(DynamoPredictions {
        w_flow: p.v * p.h * p.h * j / (8.0 * om2),
        de_dyn_half: p.alpha * PI * PI * p.v * p.h * p.h / (4.0 * om2),
        c_dyn: if p.alpha == 0.0 { 0.0 } else { p.h / om2.sqrt() },
    })
}

/// ΔE_dyn = (απ²v/4) C_dyn².
pub fn continuum_topological_energy(alpha: f64, v: f64, c_dyn: f64) -> f64 {
    alpha * PI * PI * v / 4.0 * c_dyn * c_dyn
}

/// ΔE_dyn = (g²π²/16v) C_dyn².
pub fn one_mode_topological_energy(g: f64, v: f64, c_dyn: f64) -> f64 {
    g * g * PI * PI / (16.0 * v) * c_dyn * c_dyn
}

#[cfg(test)]
mod tests {
    use super::*;

    fn res(g: f64, prep: Preparation) -> OneModeParams {
        OneModeParams { omega: 0.04, g, h: 1.0, v: 0.04, preparation: prep }
    }

    #[test]
    fn free_spin_basics() {
        let (x0, y0, z0) = free_spin(0.0, 1.0, 0.3);
        assert!(x0.abs() < 1e-15 && y0 == 0.0 && (z0 - 1.0).abs() < 1e-15);
        let om = 2f64.sqrt();
        let (_, sy, _) = free_spin(PI / om, 1.0, 1.0);
        assert!((sy - 1.0).abs() < 1e-14);
        for t in [0.3, 2.0, 17.0] {
            let (x, y, z) = free_spin(t, 1.0, 0.37);
            assert!((x * x + y * y + z * z - 1.0).abs() < 1e-12);
        }
        let (x, y, z) = free_spin(10.0, 1.0, 1e-6);
        assert!((x - (1e-5f64).sin()).abs() < 1e-5 && y.abs() < 1e-5 && (z - 1.0).abs() < 1e-5);
    }

    #[test]
    fn resonant_field_marks() {
        let pm = res(0.01, Preparation::P1);
        let v = pm.v;
        let h = one_mode_weak_field(PI / v, &pm);
        assert!((h - pm.g * pm.g / v).abs() < 1e-15);
        // ΔE_dyn(nπ/v) = n²g²π²/(16v)
        for n in 1..4 {
            let (e, _, f) = one_mode_energies(n as f64 * PI / v, &pm);
            assert!((e - (n * n) as f64 * pm.g * pm.g * PI * PI / (16.0 * v)).abs() < 1e-12);
            assert!(f.abs() < 1e-15);
        }
    }

    #[test]
    fn near_resonance_is_continuous() {
        let a = OneModeParams { omega: 0.04 * (1.0 + 1e-6), ..res(0.02, Preparation::P2) };
        let b = res(0.02, Preparation::P2);
        for t in [10.0, 50.0] {
            assert!((one_mode_weak_field(t, &a) - one_mode_weak_field(t, &b)).abs() < 1e-6);
        }
    }

    #[test]
    fn frozen_field_values() {
        let pm = OneModeParams { omega: 1.0, g: 5.0, h: 1.0, v: 0.04, preparation: Preparation::P2 };
        assert_eq!(frozen_field(0.0, &pm), 0.0);
        assert!((frozen_field(PI, &pm) + 50.0).abs() < 1e-12);
        let p1 = OneModeParams { preparation: Preparation::P1, ..pm };
        assert_eq!(frozen_field(1.234, &p1), -25.0);
    }

    #[test]
    fn kondo_limits() {
        let k = KondoParams { delta: 1.0, alpha: 0.2, omega_c: 100.0 };
        assert!((renormalized_tunneling(&k) - 100f64.powf(-0.25)).abs() < 1e-14);
        let small = KondoParams { alpha: 1e-6, ..k };
        assert!((bethe_sx(&small).unwrap() - (1.0 - 0.01)).abs() < 1e-3);
        assert!(bethe_sx(&KondoParams { alpha: 0.5, ..k }).is_err());
    }

    #[test]
    fn orbit_state_matches_bloch() {
        for t in [0.0, 1.3, 40.0] {
            let ((x, y, z), [a, b]) = gkls_orbit(t, 1.0, 0.3);
            assert!(((a.norm_sqr() + b.norm_sqr()) - 1.0).abs() < 1e-14);
            let c = a.conj() * b;
            assert!((2.0 * c.re - x).abs() < 1e-13);
            assert!((2.0 * c.im - y).abs() < 1e-13);
            assert!((a.norm_sqr() - b.norm_sqr() - z).abs() < 1e-13);
        }
    }

    #[test]
    fn predictions_at_v_equal_h() {
        let p = ModelParams { v: 1.0, alpha: 0.05, ..Default::default() };
        let d = dynamo_predictions(&p).unwrap();
        assert!((d.c_dyn - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((d.de_dyn_half - 0.05 * PI * PI / 8.0).abs() < 1e-15);
        let z = dynamo_predictions(&ModelParams { alpha: 0.0, ..p }).unwrap();
        assert_eq!((z.w_flow, z.de_dyn_half, z.c_dyn), (0.0, 0.0, 0.0));
    }
}
