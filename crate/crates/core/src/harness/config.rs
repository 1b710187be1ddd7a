//! Experiment configuration: TOML with one table per concern.
//!
//! ```toml
//! solver = "ed"                 # ed | sse | niba | gkls | analytic
//! [model]
//! h = 1.0
//! v = 0.04
//! alpha = 0.01
//! [bath]
//! omega = 0.04                  # one mode (or omega_over_v); or n_modes + omega_max
//!                               # (+ discretization = linear | resonant); or modes = [[ω, g], …]
//! g_over_v = 0.5
//! [grid]
//! half_periods = 2              # or t_final
//! dt = 0.01                     # or n_steps
//! [[sweep]]
//! parameter = "bath.g_over_v"
//! values = [0.5, 1.0, 2.0]
//! ```

use crate::ed::{FockTruncation, DEFAULT_TOL};
use crate::error::{DynamoError, Result};
use crate::model::{discretize_bath, Cutoff, Discretization, Mode, ModeSet, ModelParams, Preparation, TimeGrid};
use crate::niba::NibaOptions;
use crate::sse::SseOptions;
use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::PathBuf;
use toml::{Table, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Ed,
    Sse,
    Niba,
    Gkls,
    Analytic,
}

impl Solver {
    pub const ALL: [Solver; 5] = [Solver::Ed, Solver::Sse, Solver::Niba, Solver::Gkls, Solver::Analytic];

    pub fn name(self) -> &'static str {
        match self {
            Solver::Ed => "ed",
            Solver::Sse => "sse",
            Solver::Niba => "niba",
            Solver::Gkls => "gkls",
            Solver::Analytic => "analytic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|x| x.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BathSpec {
    Continuum,
    Modes(ModeSet),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdOptions {
    /// Uniform per-mode cutoff; `None` uses the admissible one.
    pub n_max: Option<usize>,
    /// Cap on the total excitation number.
    pub max_total: Option<usize>,
    /// (mode, cap) pairs kept out of the total.
    pub exempt: Vec<(usize, usize)>,
    pub tol: f64,
}

impl EdOptions {
    pub fn truncation(&self, ms: &ModeSet) -> FockTruncation {
        match (self.max_total, self.n_max) {
            (Some(t), _) => self
                .exempt
                .iter()
                .fold(FockTruncation::total(ms.len(), t), |tr, &(k, n)| tr.with_exempt(k, n)),
            (None, Some(n)) => FockTruncation::uniform(ms.len(), n),
            (None, None) => FockTruncation::admissible(ms),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GklsOptions {
    /// Initial Bloch vector.
    pub initial: [f64; 3],
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub solver: Solver,
    pub label: Option<String>,
    pub model: ModelParams,
    pub bath: BathSpec,
    pub grid: TimeGrid,
    pub ed: EdOptions,
    pub sse: SseOptions,
    pub niba: NibaOptions,
    pub gkls: GklsOptions,
    pub sweeps: Vec<SweepAxis>,
    pub out: Option<PathBuf>,
    /// The parsed document, used for hashing and for applying sweep values.
    pub raw: Table,
}

const SECTIONS: [(&str, &[&str]); 8] = [
    ("", &["solver", "label", "out", "model", "bath", "grid", "ed", "sse", "niba", "gkls", "sweep"]),
    ("model", &["h", "v", "m", "alpha", "omega_c", "cutoff", "preparation"]),
    ("bath", &["continuum", "omega", "omega_over_v", "g", "g_over_v", "g2_over_omega", "n_modes", "omega_max", "discretization", "modes"]),
    ("grid", &["t_final", "half_periods", "dt", "n_steps"]),
    ("ed", &["n_max", "max_total", "exempt", "tol"]),
    ("sse", &["n_traj", "seed", "fourier_modes", "use_q1_plateau"]),
    ("niba", &["near_window", "window_end"]),
    ("gkls", &["initial", "tol"]),
];

const EXCLUSIVE: [(&str, &[&str]); 4] = [
    ("bath", &["g", "g_over_v", "g2_over_omega"]),
    ("bath", &["omega", "omega_over_v"]),
    ("grid", &["t_final", "half_periods"]),
    ("grid", &["dt", "n_steps"]),
];

/// Keys that setting `sec.key` must remove, since at most one of each group may be present.
pub fn exclusive_siblings(sec: &str, key: &str) -> Vec<&'static str> {
    EXCLUSIVE
        .iter()
        .filter(|(s, group)| *s == sec && group.contains(&key))
        .flat_map(|(_, group)| group.iter().copied().filter(|o| *o != key))
        .collect()
}

/// Collects offending keys while reading typed values.
struct Reader<'a> {
    root: &'a Table,
    bad: BTreeSet<String>,
}

impl<'a> Reader<'a> {
    fn section(&mut self, name: &str) -> Option<&'a Table> {
        match self.root.get(name) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => {
                self.bad.insert(name.to_string());
                None
            }
        }
    }

    fn get(&mut self, sec: &str, key: &str) -> Option<&'a Value> {
        if sec.is_empty() {
            self.root.get(key)
        } else {
            self.section(sec).and_then(|t| t.get(key))
        }
    }

    fn path(sec: &str, key: &str) -> String {
        if sec.is_empty() {
            key.to_string()
        } else {
            format!("{sec}.{key}")
        }
    }

    fn f64(&mut self, sec: &str, key: &str) -> Option<f64> {
        match self.get(sec, key)? {
            Value::Float(x) if x.is_finite() => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            _ => {
                self.bad.insert(Self::path(sec, key));
                None
            }
        }
    }

    fn usize(&mut self, sec: &str, key: &str) -> Option<usize> {
        match self.get(sec, key)? {
            Value::Integer(i) if *i >= 0 => Some(*i as usize),
            _ => {
                self.bad.insert(Self::path(sec, key));
                None
            }
        }
    }

    fn str(&mut self, sec: &str, key: &str) -> Option<&'a str> {
        match self.get(sec, key)? {
            Value::String(s) => Some(s.as_str()),
            _ => {
                self.bad.insert(Self::path(sec, key));
                None
            }
        }
    }

    fn bool(&mut self, sec: &str, key: &str) -> Option<bool> {
        match self.get(sec, key)? {
            Value::Boolean(b) => Some(*b),
            _ => {
                self.bad.insert(Self::path(sec, key));
                None
            }
        }
    }

    fn f64_list(&mut self, sec: &str, key: &str) -> Option<Vec<f64>> {
        let v = self.get(sec, key)?;
        let out: Option<Vec<f64>> = match v {
            Value::Array(a) => a
                .iter()
                .map(|x| match x {
                    Value::Float(f) if f.is_finite() => Some(*f),
                    Value::Integer(i) => Some(*i as f64),
                    _ => None,
                })
                .collect(),
            _ => None,
        };
        if out.is_none() {
            self.bad.insert(Self::path(sec, key));
        }
        out
    }

    /// A list of [mode, cap] pairs of non-negative integers.
    fn index_pairs(&mut self, sec: &str, key: &str) -> Vec<(usize, usize)> {
        let Some(v) = self.get(sec, key) else { return Vec::new() };
        let pair = |x: &Value| match x.as_array().map(|a| a.as_slice()) {
            Some([Value::Integer(a), Value::Integer(b)]) if *a >= 0 && *b > 0 => Some((*a as usize, *b as usize)),
            _ => None,
        };
        match v.as_array().and_then(|a| a.iter().map(pair).collect::<Option<Vec<_>>>()) {
            Some(p) => p,
            None => {
                self.bad.insert(Self::path(sec, key));
                Vec::new()
            }
        }
    }

    fn flag(&mut self, key: String) {
        self.bad.insert(key);
    }
}

fn unknown_keys(root: &Table, bad: &mut BTreeSet<String>) {
    for (sec, allowed) in SECTIONS {
        let table = if sec.is_empty() {
            Some(root)
        } else {
            match root.get(sec) {
                Some(Value::Table(t)) => Some(t),
                _ => None,
            }
        };
        if let Some(t) = table {
            for k in t.keys() {
                if !allowed.contains(&k.as_str()) {
                    bad.insert(if sec.is_empty() { k.clone() } else { format!("{sec}.{k}") });
                }
            }
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: Table = text.parse().map_err(|e: toml::de::Error| DynamoError::Config {
            keys: vec![format!("<syntax: {}>", e.message())],
        })?;
        Self::from_table(raw)
    }

    pub fn from_table(raw: Table) -> Result<Self> {
        let mut r = Reader { root: &raw, bad: BTreeSet::new() };
        unknown_keys(&raw, &mut r.bad);

        let solver = match r.str("", "solver") {
            Some(s) => Solver::parse(s).or_else(|| {
                r.flag("solver".into());
                None
            }),
            None => {
                r.flag("solver".into());
                None
            }
        };
        let label = r.str("", "label").map(str::to_string);
        let out = r.str("", "out").map(PathBuf::from);

        let d = ModelParams::default();
        let mut model = ModelParams {
            h: r.f64("model", "h").unwrap_or(d.h),
            v: r.f64("model", "v").unwrap_or(d.v),
            m: r.f64("model", "m").unwrap_or(d.m),
            alpha: r.f64("model", "alpha").unwrap_or(d.alpha),
            omega_c: r.f64("model", "omega_c").unwrap_or(d.omega_c),
            ..d
        };
        match r.str("model", "cutoff") {
            None => {}
            Some("exponential") => model.cutoff = Cutoff::Exponential,
            Some("hard") => model.cutoff = Cutoff::Hard,
            Some(_) => r.flag("model.cutoff".into()),
        }
        match r.str("model", "preparation") {
            None => {}
            Some("p1") => model.preparation = Preparation::P1,
            Some("p2") => model.preparation = Preparation::P2,
            Some(_) => r.flag("model.preparation".into()),
        }
        for (ok, key) in [
            (model.h > 0.0, "model.h"),
            (model.v > 0.0, "model.v"),
            (model.alpha >= 0.0, "model.alpha"),
            (model.omega_c > 0.0, "model.omega_c"),
        ] {
            if !ok {
                r.flag(key.into());
            }
        }

        let bath = parse_bath(&mut r, &model);

        let t_final = match (r.f64("grid", "t_final"), r.f64("grid", "half_periods")) {
            (Some(t), None) => Some(t),
            (None, Some(n)) => Some(n * PI / model.v),
            (None, None) => Some(PI / model.v),
            (Some(_), Some(_)) => {
                r.flag("grid.half_periods".into());
                None
            }
        };
        let grid = match (t_final, r.f64("grid", "dt"), r.usize("grid", "n_steps")) {
            (Some(t), Some(dt), None) if t > 0.0 && dt > 0.0 => TimeGrid::with_max_step(t, dt).ok(),
            (Some(t), None, Some(n)) if t > 0.0 && n > 0 => TimeGrid::new(0.0, t, n).ok(),
            (Some(t), None, None) if t > 0.0 => TimeGrid::with_max_step(t, 0.01).ok(),
            _ => None,
        };
        if grid.is_none() {
            r.flag("grid".into());
        }

        let ed = EdOptions {
            n_max: r.usize("ed", "n_max"),
            max_total: r.usize("ed", "max_total"),
            exempt: r.index_pairs("ed", "exempt"),
            tol: r.f64("ed", "tol").unwrap_or(DEFAULT_TOL),
        };
        let sd = SseOptions::default();
        let sse = SseOptions {
            n_traj: r.usize("sse", "n_traj").unwrap_or(sd.n_traj),
            seed: r.usize("sse", "seed").map(|s| s as u64).unwrap_or(sd.seed),
            fourier_modes: r.usize("sse", "fourier_modes"),
            use_q1_plateau: r.bool("sse", "use_q1_plateau").unwrap_or(true),
        };
        if sse.n_traj == 0 {
            r.flag("sse.n_traj".into());
        }
        let nd = NibaOptions::default();
        let niba = NibaOptions {
            near_window: r.f64("niba", "near_window").unwrap_or(nd.near_window),
            window_end: r.f64("niba", "window_end"),
        };
        let initial = match r.f64_list("gkls", "initial") {
            None => [0.0, 0.0, 1.0],
            Some(v) if v.len() == 3 && v.iter().map(|x| x * x).sum::<f64>() <= 1.0 + 1e-12 => [v[0], v[1], v[2]],
            Some(_) => {
                r.flag("gkls.initial".into());
                [0.0, 0.0, 1.0]
            }
        };
        let gkls = GklsOptions { initial, tol: r.f64("gkls", "tol").unwrap_or(1e-10) };

        let sweeps = parse_sweeps(&mut r);

        if !r.bad.is_empty() {
            return Err(DynamoError::Config { keys: r.bad.into_iter().collect() });
        }
        Ok(Self {
            solver: solver.expect("checked"),
            label,
            model,
            bath: bath.expect("checked"),
            grid: grid.expect("checked"),
            ed,
            sse,
            niba,
            gkls,
            sweeps,
            out,
            raw,
        })
    }

    /// One configuration per point of the cartesian product of the sweep
    /// axes, each paired with a label such as `bath.omega=0.04`.
    pub fn points(&self) -> Result<Vec<(String, ExperimentConfig)>> {
        if self.sweeps.is_empty() {
            let mut c = self.clone();
            c.sweeps.clear();
            return Ok(vec![("base".into(), c)]);
        }
        let mut combos: Vec<Vec<(String, f64)>> = vec![Vec::new()];
        for ax in &self.sweeps {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    ax.values.iter().map(move |v| {
                        let mut c = c.clone();
                        c.push((ax.parameter.clone(), *v));
                        c
                    })
                })
                .collect();
        }
        let mut out = Vec::with_capacity(combos.len());
        for combo in combos {
            let mut raw = self.raw.clone();
            raw.remove("sweep");
            for (param, v) in &combo {
                let (sec, key) = param.split_once('.').expect("validated");
                let t = raw.entry(sec.to_string()).or_insert_with(|| Value::Table(Table::new()));
                if let Value::Table(t) = t {
                    t.insert(key.to_string(), Value::Float(*v));
                    for other in exclusive_siblings(sec, key) {
                        t.remove(other);
                    }
                }
            }
            let label = combo.iter().map(|(p, v)| format!("{p}={v}")).collect::<Vec<_>>().join(",");
            out.push((label, Self::from_table(raw)?));
        }
        Ok(out)
    }
}

fn parse_bath(r: &mut Reader<'_>, model: &ModelParams) -> Option<BathSpec> {
    let continuum = r.bool("bath", "continuum").unwrap_or(false);
    let omega = match (r.f64("bath", "omega"), r.f64("bath", "omega_over_v")) {
        (Some(w), None) => Some(w),
        (None, Some(x)) => Some(x * model.v),
        (None, None) => None,
        (Some(_), Some(_)) => {
            r.flag("bath.omega_over_v".into());
            return None;
        }
    };
    let list = r.get("bath", "modes");
    let n_modes = r.usize("bath", "n_modes");
    let forms = [continuum, omega.is_some(), list.is_some(), n_modes.is_some()].iter().filter(|x| **x).count();
    if forms > 1 {
        r.flag("bath".into());
        return None;
    }
    if let Some(w) = omega {
        let g = match (r.f64("bath", "g"), r.f64("bath", "g_over_v"), r.f64("bath", "g2_over_omega")) {
            (Some(g), None, None) => Some(g),
            (None, Some(x), None) => Some(x * model.v),
            (None, None, Some(x)) if x >= 0.0 => Some((x * w).sqrt()),
            _ => None,
        };
        return match g.map(|g| ModeSet::single(w, g)) {
            Some(Ok(ms)) => Some(BathSpec::Modes(ms)),
            _ => {
                r.flag("bath.g".into());
                None
            }
        };
    }
    if let Some(v) = list {
        let modes: Option<Vec<Mode>> = match v {
            Value::Array(a) => a
                .iter()
                .map(|pair| match pair {
                    Value::Array(p) if p.len() == 2 => {
                        let num = |x: &Value| match x {
                            Value::Float(f) => Some(*f),
                            Value::Integer(i) => Some(*i as f64),
                            _ => None,
                        };
                        Some(Mode { omega: num(&p[0])?, g: num(&p[1])?, delta_omega: 0.0 })
                    }
                    _ => None,
                })
                .collect(),
            _ => None,
        };
        return match modes.map(ModeSet::new) {
            Some(Ok(ms)) => Some(BathSpec::Modes(ms)),
            _ => {
                r.flag("bath.modes".into());
                None
            }
        };
    }
    if let Some(n) = n_modes {
        let w = r.f64("bath", "omega_max").unwrap_or(model.omega_c);
        let scheme = match r.str("bath", "discretization") {
            None => Discretization::Linear,
            Some(s) => match Discretization::parse(s) {
                Some(d) => d,
                None => {
                    r.flag("bath.discretization".into());
                    return None;
                }
            },
        };
        return match discretize_bath(model, n, w, scheme) {
            Ok(ms) => Some(BathSpec::Modes(ms)),
            Err(_) => {
                r.flag("bath.n_modes".into());
                None
            }
        };
    }
    Some(BathSpec::Continuum)
}

fn parse_sweeps(r: &mut Reader<'_>) -> Vec<SweepAxis> {
    let mut out = Vec::new();
    let Some(v) = r.root.get("sweep") else { return out };
    let items: Vec<&Table> = match v {
        Value::Array(a) => a.iter().filter_map(|x| x.as_table()).collect(),
        Value::Table(t) => vec![t],
        _ => {
            r.flag("sweep".into());
            return out;
        }
    };
    for (i, t) in items.iter().enumerate() {
        for k in t.keys() {
            if k != "parameter" && k != "values" {
                r.flag(format!("sweep[{i}].{k}"));
            }
        }
        let param = t.get("parameter").and_then(|p| p.as_str()).map(str::to_string);
        let ok_param = param.as_deref().is_some_and(|p| {
            p.split_once('.').is_some_and(|(sec, key)| {
                SECTIONS.iter().any(|(s, keys)| *s == sec && !sec.is_empty() && keys.contains(&key))
            })
        });
        if !ok_param {
            r.flag(format!("sweep[{i}].parameter"));
        }
        let values: Option<Vec<f64>> = t.get("values").and_then(|v| v.as_array()).map(|a| {
            a.iter()
                .filter_map(|x| match x {
                    Value::Float(f) if f.is_finite() => Some(*f),
                    Value::Integer(i) => Some(*i as f64),
                    _ => None,
                })
                .collect::<Vec<_>>()
        });
        let n_raw = t.get("values").and_then(|v| v.as_array()).map_or(0, |a| a.len());
        match values {
            Some(vals) if !vals.is_empty() && vals.len() == n_raw => {
                if let (true, Some(p)) = (ok_param, param) {
                    out.push(SweepAxis { parameter: p, values: vals });
                }
            }
            _ => r.flag(format!("sweep[{i}].values")),
        }
    }
    out
}
