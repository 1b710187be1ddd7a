//! Configuration, solver dispatch, sweeps and CSV emission.

pub mod compare;
pub mod config;
pub mod manifest;
pub mod presets;

use crate::analytic::{dynamo_predictions, free_spin, one_mode_energies, one_mode_weak_field, OneModeParams};
use crate::ed;
use crate::energetics::{chern_numbers, efficiencies, ledger_from_ed, ledger_from_traj, topology_energy_relation, EnergyLedger};
use crate::error::{DynamoError, Result};
use crate::gkls::{orbit_distance, propagate_gkls, stationary_energetics, DensityMatrix2};
use crate::io;
use crate::model::{decompose_field_continuum, induced_field_from_sz, FieldSource, ModeSet, ModelParams, SpinTrajectory};
use crate::niba::solve_niba;
use crate::sse;
use config::{BathSpec, ExperimentConfig, Solver};
use manifest::{config_hash, unix_seconds, RunManifest, RunRecord, RunStatus, CODE_VERSION};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use toml::{Table, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Solver(Solver),
    Preset(String),
}

impl Target {
    pub fn parse(s: &str) -> Result<Self> {
        if let Some(sv) = Solver::parse(s) {
            return Ok(Target::Solver(sv));
        }
        if presets::PRESETS.contains(&s) {
            return Ok(Target::Preset(s.to_string()));
        }
        Err(DynamoError::Argument(format!(
            "unknown solver or preset {s:?}; expected one of {} or {}",
            Solver::ALL.map(|x| x.name()).join(", "),
            presets::PRESETS.join(", ")
        )))
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct Job {
    pub name: String,
    pub config: ExperimentConfig,
}

fn set_seed(raw: &mut Table, seed: u64) {
    let sse = raw.entry("sse").or_insert_with(|| Value::Table(Table::new()));
    if let Value::Table(t) = sse {
        t.insert("seed".into(), Value::Integer(seed as i64));
    }
}

/// Validated jobs for a target; every offending key of every run is reported
/// together, prefixed by the run name for presets.
pub fn build_jobs(target: &Target, user: Option<&Table>, seed: Option<u64>) -> Result<Vec<Job>> {
    let docs: Vec<(String, Table)> = match target {
        Target::Solver(sv) => {
            let mut t = user.cloned().ok_or_else(|| DynamoError::Config { keys: vec!["--config".into()] })?;
            match t.get("solver").and_then(Value::as_str) {
                Some(s) if s != sv.name() => return Err(DynamoError::Config { keys: vec!["solver".into()] }),
                _ => {
                    t.insert("solver".into(), Value::String(sv.name().into()));
                }
            }
            let name = t.get("label").and_then(Value::as_str).unwrap_or(sv.name()).to_string();
            vec![(name, t)]
        }
        Target::Preset(p) => presets::preset(p)?
            .into_iter()
            .map(|(run, mut t)| {
                if let Some(u) = user {
                    let mut u = u.clone();
                    u.remove("solver");
                    if u.contains_key("sweep") {
                        t.remove("sweep");
                    }
                    presets::merge(&mut t, &u);
                }
                (format!("{p}/{run}"), t)
            })
            .collect(),
    };
    let mut jobs = Vec::new();
    let mut bad = Vec::new();
    for (name, mut raw) in docs {
        if let Some(s) = seed {
            set_seed(&mut raw, s);
        }
        match ExperimentConfig::from_table(raw) {
            Ok(config) => jobs.push(Job { name, config }),
            Err(DynamoError::Config { keys }) => {
                let multi = matches!(target, Target::Preset(_));
                bad.extend(keys.into_iter().map(|k| if multi { format!("{name}:{k}") } else { k }));
            }
            Err(e) => return Err(e),
        }
    }
    if !bad.is_empty() {
        return Err(DynamoError::Config { keys: bad });
    }
    Ok(jobs)
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._=-".contains(c) { c } else { '_' })
        .collect()
}

/// Expand sweeps, run every point on a pool of `workers` threads, write the
/// per-point outputs under `<out>/<job>/<point>/` and the manifest at `<out>`.
pub fn run(jobs: &[Job], opts: &RunOptions) -> Result<RunManifest> {
    let started = unix_seconds();
    let root = opts
        .out
        .clone()
        .or_else(|| jobs.iter().find_map(|j| j.config.out.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut points = Vec::new();
    let mut all = Table::new();
    for job in jobs {
        all.insert(job.name.clone(), Value::Table(job.config.raw.clone()));
        for (label, cfg) in job.config.points()? {
            let dir = root.join(&job.name).join(sanitize(&label));
            points.push((job.name.clone(), label, cfg, dir));
        }
    }
    std::fs::create_dir_all(&root)?;
    let workers = opts.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| DynamoError::Construction(format!("thread pool: {e}")))?;
    let runs: Vec<RunRecord> = pool.install(|| {
        points
            .par_iter()
            .map(|(name, label, cfg, dir)| {
                let t0 = unix_seconds();
                let mut files = Vec::new();
                let outcome = catch_unwind(AssertUnwindSafe(|| run_point(cfg, dir, &mut files)))
                    .unwrap_or_else(|_| Err(DynamoError::Integration("solver panicked".into())));
                let status = match outcome {
                    Ok(()) => RunStatus::Ok,
                    Err(e) => RunStatus::Failed(e.to_string()),
                };
                RunRecord {
                    name: name.clone(),
                    point: label.clone(),
                    solver: cfg.solver.name().into(),
                    config_hash: config_hash(&cfg.raw),
                    status,
                    files,
                    elapsed_s: unix_seconds() - t0,
                }
            })
            .collect()
    });
    let manifest = RunManifest {
        config_hash: config_hash(&all),
        code_version: CODE_VERSION.into(),
        started,
        finished: unix_seconds(),
        workers,
        runs,
    };
    manifest.write(&root)?;
    Ok(manifest)
}

/// Run one configuration point (no sweeps) and write its outputs into `dir`;
/// every file written is appended to `files`, also when the run fails later.
pub fn run_point(cfg: &ExperimentConfig, dir: &Path, files: &mut Vec<PathBuf>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let cfg_path = dir.join("config.toml");
    std::fs::write(&cfg_path, toml::to_string(&cfg.raw).expect("tables always serialize"))?;
    files.push(cfg_path);
    let p = &cfg.model;
    let grid = &cfg.grid;
    let mut report: Vec<(String, String)> = vec![
        ("solver".into(), cfg.solver.name().into()),
        ("config_hash".into(), config_hash(&cfg.raw)),
    ];
    let (traj, ledger, one_mode_g) = match cfg.solver {
        Solver::Ed => {
            let ms = modes(cfg)?;
            let tr = cfg.ed.truncation(ms);
            let run = ed::run(p, ms, &tr, grid, cfg.ed.tol)?;
            let measured = ed::measure_field(&run.record, ms);
            let recon = induced_field_from_sz(&run.traj, FieldSource::Modes(ms), p.preparation)?;
            let field = crate::model::FieldTrajectory { h_total: measured.h_total.clone(), ..recon.clone() };
            let path = dir.join("trajectory.csv");
            io::write_trajectory(&path, &run.traj, &[])?;
            files.push(path);
            let path = dir.join("field.csv");
            io::write_field(&path, &field)?;
            files.push(path);
            let path = dir.join("bath.csv");
            io::write_bath_record(&path, &run.record, &ed::mode_fields(&run.record, ms))?;
            files.push(path);
            let dev = measured.h_total.iter().zip(&recon.h_total).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            report.push(("field_reconstruction_max_abs".into(), dev.to_string()));
            report.push(("truncation_valid".into(), run.audit.valid.to_string()));
            report.push(("truncation_edge_weight".into(), run.audit.edge_weight.to_string()));
            report.push(("norm_drift".into(), run.norm_drift.to_string()));
            let g = (ms.len() == 1).then(|| ms.modes[0].g);
            let ledger = ledger_from_ed(&run, p, ms);
            report.push(("balance_residual".into(), ledger.balance_residual(ms.reorganization()).to_string()));
            (run.traj, Some(ledger), g)
        }
        Solver::Sse => {
            continuum(cfg)?;
            let res = sse::average(p, grid, &cfg.sse)?;
            let path = dir.join("trajectory.csv");
            io::write_trajectory(
                &path,
                &res.traj,
                &[("se_sx", &res.se_sx), ("se_sy", &res.se_sy), ("se_sz", &res.se_sz), ("trace", &res.trace)],
            )?;
            files.push(path);
            for (k, v) in [
                ("n_traj", res.n_traj.to_string()),
                ("n_flagged", res.n_flagged.to_string()),
                ("seed", res.seed.to_string()),
                ("fourier_modes", res.fourier_modes.to_string()),
                ("degraded", res.degraded.to_string()),
            ] {
                report.push((k.into(), v));
            }
            (res.traj, None, None)
        }
        Solver::Niba => {
            continuum(cfg)?;
            let run = solve_niba(p, grid, &cfg.niba)?;
            let w: Vec<f64> = run.in_window.iter().map(|b| if *b { 1.0 } else { 0.0 }).collect();
            let path = dir.join("trajectory.csv");
            io::write_trajectory(&path, &run.traj, &[("in_window", &w)])?;
            files.push(path);
            (run.traj, None, None)
        }
        Solver::Gkls => {
            continuum(cfg)?;
            let [x, y, z] = cfg.gkls.initial;
            let run = propagate_gkls(&DensityMatrix2::from_bloch(x, y, z)?, p, grid, cfg.gkls.tol)?;
            let orbit: Vec<[f64; 3]> = grid
                .times()
                .iter()
                .map(|&t| {
                    let ((a, b, c), _) = crate::analytic::gkls_orbit(t, p.h, p.v);
                    [a, b, c]
                })
                .collect();
            let col = |k: usize| orbit.iter().map(|o| o[k]).collect::<Vec<_>>();
            let (ox, oy, oz) = (col(0), col(1), col(2));
            let path = dir.join("trajectory.csv");
            io::write_trajectory(&path, &run.traj, &[("orbit_sx", &ox), ("orbit_sy", &oy), ("orbit_sz", &oz)])?;
            files.push(path);
            let r = run.rates;
            let relax = if r.gamma_relax > 0.0 { 5.0 / r.gamma_relax } else { f64::INFINITY };
            let st = stationary_energetics(p)?;
            for (k, v) in [
                ("gamma_relax", r.gamma_relax),
                ("gamma_deph", r.gamma_deph),
                ("orbit_distance_after_5_relax_times", orbit_distance(&run.traj, p, relax)),
                ("w_flow_stationary", st.w_flow),
                ("de_dyn_half_stationary", st.de_dyn_half),
                ("eta_longtime", st.eta_longtime),
                ("max_trace_error", run.max_trace_error),
                ("min_eigenvalue", run.min_eigenvalue),
            ] {
                report.push((k.into(), v.to_string()));
            }
            report.push(("weak_coupling".into(), r.weak_coupling.to_string()));
            (run.traj, None, None)
        }
        Solver::Analytic => {
            let times = grid.times();
            let (mut sx, mut sy, mut sz) = (Vec::new(), Vec::new(), Vec::new());
            for &t in &times {
                let (x, y, z) = free_spin(t, p.h, p.v);
                sx.push(x);
                sy.push(y);
                sz.push(z);
            }
            let sd = times.iter().zip(&sy).map(|(t, y)| -p.h * (p.v * t).sin() * y).collect();
            let mut traj = SpinTrajectory::new(*grid, sx, sy, sz);
            traj.sz_dot = Some(sd);
            let path = dir.join("trajectory.csv");
            io::write_trajectory(&path, &traj, &[])?;
            files.push(path);
            match &cfg.bath {
                BathSpec::Modes(ms) if ms.len() == 1 => {
                    let m = ms.modes[0];
                    let pm = OneModeParams { omega: m.omega, g: m.g, h: p.h, v: p.v, preparation: p.preparation };
                    let h: Vec<f64> = times.iter().map(|&t| one_mode_weak_field(t, &pm)).collect();
                    let e: Vec<(f64, f64, f64)> = times.iter().map(|&t| one_mode_energies(t, &pm)).collect();
                    let col = |f: fn(&(f64, f64, f64)) -> f64| e.iter().map(f).collect::<Vec<_>>();
                    let (ed_, wd, ef) = (col(|x| x.0), col(|x| x.1), col(|x| x.2));
                    let path = dir.join("one_mode.csv");
                    let hdr = ["t", "h", "dE_dyn", "W_dr", "E_fluct"].map(String::from);
                    io::write_csv(&path, &hdr, &[&times, &h, &ed_, &wd, &ef])?;
                    files.push(path);
                }
                BathSpec::Modes(_) => {}
                BathSpec::Continuum => {
                    let d = dynamo_predictions(p)?;
                    report.push(("w_flow".into(), d.w_flow.to_string()));
                    report.push(("de_dyn_half".into(), d.de_dyn_half.to_string()));
                    report.push(("c_dyn".into(), d.c_dyn.to_string()));
                }
            }
            (traj, None, None)
        }
    };
    if matches!(cfg.bath, BathSpec::Continuum) && cfg.solver != Solver::Analytic {
        let field = decompose_field_continuum(&traj, p)?;
        let path = dir.join("field.csv");
        io::write_field(&path, &field)?;
        files.push(path);
    }
    let ledger = ledger.unwrap_or_else(|| ledger_from_traj(&traj, p));
    let path = dir.join("ledger.csv");
    io::write_ledger(&path, &ledger)?;
    files.push(path);
    summarize(&mut report, &traj, &ledger, p, one_mode_g);
    let path = dir.join("summary.txt");
    io::write_report(&path, &report)?;
    files.push(path);
    Ok(())
}

fn modes(cfg: &ExperimentConfig) -> Result<&ModeSet> {
    match &cfg.bath {
        BathSpec::Modes(ms) => Ok(ms),
        BathSpec::Continuum => Err(DynamoError::Argument("exact propagation needs a discrete bath".into())),
    }
}

fn continuum(cfg: &ExperimentConfig) -> Result<()> {
    match cfg.bath {
        BathSpec::Continuum => Ok(()),
        BathSpec::Modes(_) => {
            Err(DynamoError::Argument(format!("{} works with the continuum bath only", cfg.solver.name())))
        }
    }
}

/// ΔE_dyn, W_dr, η, η_M and the average power at every reached multiple of
/// π/v, plus Chern numbers when the run spans a half period.
fn summarize(
    report: &mut Vec<(String, String)>,
    traj: &SpinTrajectory,
    ledger: &EnergyLedger,
    p: &ModelParams,
    one_mode_g: Option<f64>,
) {
    let half = PI / p.v;
    let n_half = ((traj.grid.tf - traj.grid.t0) / half * (1.0 + 1e-9)).floor() as usize;
    for n in 1..=n_half {
        let t = n as f64 * half;
        let i = traj.grid.index_of(t);
        let de = ledger.e_dyn[i] - ledger.e_dyn[0];
        let eff = efficiencies(ledger, p, i);
        let fmt = |x: Option<f64>| x.map_or_else(|| "undefined".to_string(), |v| v.to_string());
        report.push((format!("dE_dyn_{n}"), de.to_string()));
        report.push((format!("W_dr_{n}"), ledger.w_dr[i].to_string()));
        report.push((format!("power_{n}"), (de / t).to_string()));
        report.push((format!("eta_{n}"), fmt(eff.eta)));
        report.push((format!("eta_M_{n}"), fmt(eff.eta_m)));
    }
    if let Ok(ch) = chern_numbers(traj, p) {
        report.push(("C".into(), ch.c.to_string()));
        report.push(("C_dyn".into(), ch.c_dyn.to_string()));
        report.push(("C_dyn_integral".into(), ch.c_dyn_integral.to_string()));
        if let Ok(top) = topology_energy_relation(ledger, traj, p, one_mode_g) {
            report.push(("topology_predicted".into(), top.predicted.to_string()));
            report.push(("topology_rel_dev".into(), top.rel_dev.to_string()));
        }
    }
}
