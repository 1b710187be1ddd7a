//! Work, dynamo and fluctuation energies, heat/work split of the bath,
//! efficiencies and Chern numbers.

use crate::ed::{measure_field, BathRecord, EdRun};
use crate::error::{DynamoError, Result};
use crate::model::{central_difference, ModeSet, ModelParams, SpinTrajectory, TimeGrid};
use std::f64::consts::PI;

/// Denominators at or below this leave η undefined.
pub const ETA_EPS: f64 = 1e-12;

pub const LEDGER_COLUMNS: [&str; 12] = [
    "t", "W_dr", "E_S", "E_dis", "E_dyn", "E_fluct", "E_fluct_bath", "E_fluct_int", "E_fluct_spin", "E_int", "Q_R",
    "W_R",
];

/// Energy time series; entries a source cannot provide are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLedger {
    pub grid: TimeGrid,
    pub w_dr: Vec<f64>,
    pub e_s: Vec<f64>,
    pub e_dis: Vec<f64>,
    pub e_dyn: Vec<f64>,
    pub e_fluct: Vec<f64>,
    pub e_fluct_bath: Vec<f64>,
    pub e_fluct_int: Vec<f64>,
    pub e_fluct_spin: Vec<f64>,
    pub e_int: Vec<f64>,
    pub q_r: Vec<f64>,
    pub w_r: Vec<f64>,
    /// Bath energy Σω_k⟨n_k⟩.
    pub e_r: Vec<f64>,
}

impl EnergyLedger {
    pub fn columns(&self) -> [&[f64]; 11] {
        [
            &self.w_dr,
            &self.e_s,
            &self.e_dis,
            &self.e_dyn,
            &self.e_fluct,
            &self.e_fluct_bath,
            &self.e_fluct_int,
            &self.e_fluct_spin,
            &self.e_int,
            &self.q_r,
            &self.w_r,
        ]
    }

    /// Largest |W_dr − ΔE_S − ΔE_dyn − ΔE_fluct| / max(|W_dr|, scale).
    pub fn balance_residual(&self, scale: f64) -> f64 {
        (0..self.w_dr.len())
            .map(|i| {
                let r = self.w_dr[i]
                    - (self.e_s[i] - self.e_s[0])
                    - (self.e_dyn[i] - self.e_dyn[0])
                    - (self.e_fluct[i] - self.e_fluct[0]);
                r.abs() / self.w_dr[i].abs().max(scale)
            })
            .fold(0.0, f64::max)
    }

    /// Largest |ΔE_R + ΔE_int − ΔE_dyn − ΔE_fluct| / max(|W_dr|, scale).
    pub fn bath_bookkeeping_residual(&self, scale: f64) -> f64 {
        (0..self.w_dr.len())
            .map(|i| {
                let lhs = (self.e_r[i] - self.e_r[0]) + (self.e_int[i] - self.e_int[0]);
                let rhs = (self.e_dyn[i] - self.e_dyn[0]) + (self.e_fluct[i] - self.e_fluct[0]);
                (lhs - rhs).abs() / self.w_dr[i].abs().max(scale)
            })
            .fold(0.0, f64::max)
    }
}

/// Cumulative trapezoid integral starting at 0.
pub fn cumulative_trapezoid(y: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(y.len());
    let mut acc = 0.0;
    for i in 0..y.len() {
        if i > 0 {
            acc += 0.5 * dt * (y[i] + y[i - 1]);
        }
        out.push(acc);
    }
    out
}

/// W_dr(t) = (Hv/2)∫₀ᵗ[sin(vt′)⟨σz⟩ − cos(vt′)⟨σx⟩]dt′.
pub fn work_drive(traj: &SpinTrajectory, p: &ModelParams) -> Vec<f64> {
    let integrand: Vec<f64> = (0..traj.len())
        .map(|i| {
            let (s, c) = (p.v * traj.grid.t(i)).sin_cos();
            0.5 * p.h * p.v * (s * traj.sz[i] - c * traj.sx[i])
        })
        .collect();
    cumulative_trapezoid(&integrand, traj.grid.dt())
}

/// E_S(t) = ⟨H_spin(t)⟩.
pub fn spin_energy(traj: &SpinTrajectory, p: &ModelParams) -> Vec<f64> {
    (0..traj.len())
        .map(|i| {
            let (s, c) = (p.v * traj.grid.t(i)).sin_cos();
            -0.5 * ((p.h * c + p.m) * traj.sz[i] + p.h * s * traj.sx[i])
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisEnergy {
    /// Σ_k ω_k|⟨b_k⟩|².
    pub e_dis: Vec<f64>,
    /// E_dis(0) − ∫ ḣ⟨S⟩ dt.
    pub e_dis_flow: Vec<f64>,
}

pub fn dis_energy(rec: &BathRecord, ms: &ModeSet) -> DisEnergy {
    let e_dis: Vec<f64> =
        rec.b.iter().map(|bs| bs.iter().zip(&ms.modes).map(|(b, m)| m.omega * b.norm_sqr()).sum()).collect();
    let h = measure_field(rec, ms).h_total;
    let hd = central_difference(&h, rec.grid.dt());
    let flow: Vec<f64> = hd.iter().zip(&rec.s).map(|(d, s)| -d * s).collect();
    let e_dis_flow = cumulative_trapezoid(&flow, rec.grid.dt()).iter().map(|x| x + e_dis[0]).collect();
    DisEnergy { e_dis, e_dis_flow }
}

/// Σ_k ω_k|⟨b_k⟩ + (g_k/ω_k)⟨S⟩|².
pub fn dynamo_energy_modes(rec: &BathRecord, ms: &ModeSet) -> Vec<f64> {
    rec.b
        .iter()
        .zip(&rec.s)
        .map(|(bs, s)| bs.iter().zip(&ms.modes).map(|(b, m)| m.omega * (b + m.g / m.omega * s).norm_sqr()).sum())
        .collect()
}

/// ΔE_dyn(t) = (απ/2)∫₀ᵗ⟨σ̇z⟩²dt′.
pub fn dynamo_energy_continuum(traj: &SpinTrajectory, p: &ModelParams) -> Vec<f64> {
    let d = traj.sz_derivative();
    let sq: Vec<f64> = d.iter().map(|x| 0.5 * p.alpha * PI * x * x).collect();
    cumulative_trapezoid(&sq, traj.grid.dt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluctEnergy {
    pub total: Vec<f64>,
    pub bath: Vec<f64>,
    pub int: Vec<f64>,
    pub spin: Vec<f64>,
}

pub fn fluct_energy(rec: &BathRecord, ms: &ModeSet) -> FluctEnergy {
    let n = rec.s.len();
    let (mut bath, mut int, mut spin) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for i in 0..n {
        let s = rec.s[i];
        for (k, m) in ms.modes.iter().enumerate() {
            let b = rec.b[i][k];
            bath[i] += m.omega * (rec.n[i][k] - b.norm_sqr());
            int[i] += m.g * (rec.s_b[i][k] - s * 2.0 * b.re);
            spin[i] += m.g * m.g / m.omega * (rec.s2[i] - s * s);
        }
    }
    let total = (0..n).map(|i| bath[i] + int[i] + spin[i]).collect();
    FluctEnergy { total, bath, int, spin }
}

/// (Q_R, W_R) relative to t = 0.
pub fn heat_work_split(rec: &BathRecord, ms: &ModeSet) -> (Vec<f64>, Vec<f64>) {
    let inc: Vec<f64> = rec
        .b
        .iter()
        .zip(&rec.n)
        .map(|(bs, ns)| ms.modes.iter().enumerate().map(|(k, m)| m.omega * (ns[k] - bs[k].norm_sqr())).sum())
        .collect();
    let coh: Vec<f64> =
        rec.b.iter().map(|bs| bs.iter().zip(&ms.modes).map(|(b, m)| m.omega * b.norm_sqr()).sum()).collect();
    let q = inc.iter().map(|x| -(x - inc[0])).collect();
    let w = coh.iter().map(|x| -(x - coh[0])).collect();
    (q, w)
}

/// Full ledger of an exact run. W_dr is the work integrated with the state.
pub fn ledger_from_ed(run: &EdRun, p: &ModelParams, ms: &ModeSet) -> EnergyLedger {
    let rec = &run.record;
    let fl = fluct_energy(rec, ms);
    let (q_r, w_r) = heat_work_split(rec, ms);
    let e_int = (0..rec.s.len())
        .map(|i| ms.modes.iter().enumerate().map(|(k, m)| m.g * rec.s_b[i][k]).sum())
        .collect();
    let e_r = rec.n.iter().map(|ns| ns.iter().zip(&ms.modes).map(|(n, m)| m.omega * n).sum()).collect();
    EnergyLedger {
        grid: rec.grid,
        w_dr: run.work.clone(),
        e_s: spin_energy(&run.traj, p),
        e_dis: dis_energy(rec, ms).e_dis,
        e_dyn: dynamo_energy_modes(rec, ms),
        e_fluct: fl.total,
        e_fluct_bath: fl.bath,
        e_fluct_int: fl.int,
        e_fluct_spin: fl.spin,
        e_int,
        q_r,
        w_r,
        e_r,
    }
}

/// Ledger from spin data alone (continuum solvers): bath-resolved columns are NaN.
pub fn ledger_from_traj(traj: &SpinTrajectory, p: &ModelParams) -> EnergyLedger {
    let n = traj.len();
    let nan = vec![f64::NAN; n];
    EnergyLedger {
        grid: traj.grid,
        w_dr: work_drive(traj, p),
        e_s: spin_energy(traj, p),
        e_dis: nan.clone(),
        e_dyn: dynamo_energy_continuum(traj, p),
        e_fluct: nan.clone(),
        e_fluct_bath: nan.clone(),
        e_fluct_int: nan.clone(),
        e_fluct_spin: nan.clone(),
        e_int: nan.clone(),
        q_r: nan.clone(),
        w_r: nan.clone(),
        e_r: nan,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Efficiencies {
    pub eta: Option<f64>,
    pub eta_m: Option<f64>,
}

/// η = ΔE_dyn/W_dr and η_M = ΔE_dyn/(W_dr − M) at grid index `i`.
pub fn efficiencies(ledger: &EnergyLedger, p: &ModelParams, i: usize) -> Efficiencies {
    let de = ledger.e_dyn[i] - ledger.e_dyn[0];
    let w = ledger.w_dr[i];
    let ratio = |d: f64| if d > ETA_EPS { Some(de / d) } else { None };
    Efficiencies { eta: ratio(w), eta_m: ratio(w - p.m) }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChernNumbers {
    pub c: f64,
    pub c_dyn: f64,
    /// (H/2)∫₀^{π/v} sin(vt)⟨σy⟩dt, the Heisenberg-equation form of C_dyn.
    pub c_dyn_integral: f64,
}

/// Ground-state Chern number from the poles of the field sphere.
pub fn ground_state_chern(p: &ModelParams) -> f64 {
    let north = (p.h + p.m).signum();
    let south = (-p.h + p.m).signum();
    0.5 * (north - south)
}

/// C and C_dyn over the half period [0, π/v]; the trajectory must reach π/v.
pub fn chern_numbers(traj: &SpinTrajectory, p: &ModelParams) -> Result<ChernNumbers> {
    let t_half = PI / p.v;
    if traj.grid.tf < t_half * (1.0 - 1e-9) || traj.grid.t0 != 0.0 {
        return Err(DynamoError::Argument("trajectory must span [0, π/v]".into()));
    }
    let i_end = traj.grid.index_of(t_half);
    let c_dyn = 0.5 * (traj.sz[0] - traj.sz[i_end]);
    let integrand: Vec<f64> =
        (0..=i_end).map(|i| 0.5 * p.h * (p.v * traj.grid.t(i)).sin() * traj.sy[i]).collect();
    let c_dyn_integral = *cumulative_trapezoid(&integrand, traj.grid.dt()).last().unwrap_or(&0.0);
    Ok(ChernNumbers { c: ground_state_chern(p), c_dyn, c_dyn_integral })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopologyReport {
    pub predicted: f64,
    pub measured: f64,
    pub rel_dev: f64,
}

/// Compare measured ΔE_dyn(π/v) with the Chern-number prediction.
pub fn topology_energy_relation(
    ledger: &EnergyLedger,
    traj: &SpinTrajectory,
    p: &ModelParams,
    one_mode_g: Option<f64>,
) -> Result<TopologyReport> {
    let ch = chern_numbers(traj, p)?;
    let predicted = match one_mode_g {
        Some(g) => crate::analytic::one_mode_topological_energy(g, p.v, ch.c_dyn),
        None => crate::analytic::continuum_topological_energy(p.alpha, p.v, ch.c_dyn),
    };
    let i = ledger.grid.index_of(PI / p.v);
    let measured = ledger.e_dyn[i] - ledger.e_dyn[0];
    let rel_dev = if predicted.abs() > 0.0 { (measured - predicted).abs() / predicted.abs() } else { measured.abs() };
    Ok(TopologyReport { predicted, measured, rel_dev })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TimeGrid;

    fn adiabatic(v: f64) -> SpinTrajectory {
        let grid = TimeGrid::new(0.0, PI / v, 4000).unwrap();
        let ts = grid.times();
        let mut tr = SpinTrajectory::new(
            grid,
            ts.iter().map(|t| (v * t).sin()).collect(),
            vec![0.0; ts.len()],
            ts.iter().map(|t| (v * t).cos()).collect(),
        );
        tr.sz_dot = Some(ts.iter().map(|t| -v * (v * t).sin()).collect());
        tr
    }

    #[test]
    fn adiabatic_spin_does_no_work() {
        let p = ModelParams { v: 0.1, ..Default::default() };
        let w = work_drive(&adiabatic(0.1), &p);
        assert!(w.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn continuum_dynamo_energy_half_period() {
        let p = ModelParams { v: 0.1, alpha: 0.02, ..Default::default() };
        let e = dynamo_energy_continuum(&adiabatic(0.1), &p);
        let want = p.alpha * PI * PI * p.v / 4.0;
        assert!((e.last().unwrap() - want).abs() < 1e-6 * want);
    }

    #[test]
    fn chern_values() {
        let p = ModelParams { m: 0.5, ..Default::default() };
        assert_eq!(ground_state_chern(&p), 1.0);
        assert_eq!(ground_state_chern(&ModelParams { m: 1.5, ..p }), 0.0);
        let frozen = SpinTrajectory::new(TimeGrid::new(0.0, PI / 0.04, 10).unwrap(), vec![0.0; 11], vec![0.0; 11], vec![1.0; 11]);
        assert_eq!(chern_numbers(&frozen, &ModelParams::default()).unwrap().c_dyn, 0.0);
    }

    #[test]
    fn efficiency_undefined_without_work() {
        let p = ModelParams { v: 0.1, ..Default::default() };
        let l = ledger_from_traj(&adiabatic(0.1), &p);
        let e = efficiencies(&l, &p, l.w_dr.len() - 1);
        assert_eq!(e.eta, None);
    }
}
