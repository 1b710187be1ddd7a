//! Named experiment bundles reproducing each figure's data.
//!
//! A preset is a list of runs, each a full configuration document. A user
//! configuration passed alongside a preset is merged into every run.

use crate::error::{DynamoError, Result};
use crate::harness::config::exclusive_siblings;
use toml::{Table, Value};

pub const PRESETS: [&str; 12] = [
    "fig2a", "fig2b", "fig3abc", "fig4ab", "fig5", "fig6ab", "fig7", "fig8", "fig9", "fig10", "fig11", "fig12",
];

const ONE_MODE_FIELD: &str = r#"
solver = "ed"
[model]
v = 0.04
preparation = "p1"
[bath]
omega_over_v = 1.0
g2_over_omega = 0.01
[grid]
half_periods = 6
dt = 0.25
[[sweep]]
parameter = "bath.omega_over_v"
values = [0.5, 1.0, 2.0]
"#;

const ONE_MODE_ENERGY: &str = r#"
solver = "ed"
[model]
v = 0.04
[bath]
omega_over_v = 1.0
g_over_v = 0.5
[grid]
half_periods = 6
dt = 0.25
[[sweep]]
parameter = "bath.g_over_v"
values = [0.25, 0.5, 1.0]
"#;

const ONE_MODE_PERFORMANCE: &str = r#"
solver = "ed"
[bath]
omega_over_v = 1.0
g_over_v = 1.0
[grid]
half_periods = 1
n_steps = 2000
[[sweep]]
parameter = "model.v"
values = [0.02, 0.04, 0.08]
[[sweep]]
parameter = "bath.g_over_v"
values = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0]
"#;

const TWELVE_MODES: &str = r#"
solver = "ed"
[model]
v = 0.04
alpha = 0.02
omega_c = 100.0
cutoff = "hard"
[bath]
n_modes = 12
omega_max = 100.0
discretization = "resonant"
[ed]
max_total = 6
exempt = [[0, 8]]
tol = 1e-7
[grid]
half_periods = 6
dt = 0.05
"#;

const BETHE: &str = r#"
solver = "sse"
[model]
v = 0.01
alpha = 0.2
omega_c = 100.0
[grid]
half_periods = 0.5
dt = 0.05
[[sweep]]
parameter = "model.alpha"
values = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45]
"#;

const CHERN_SWEEP: &str = r#"
solver = "ed"
[model]
v = 0.04
[bath]
omega_over_v = 1.0
g_over_v = 1.0
[grid]
half_periods = 1
n_steps = 2000
[[sweep]]
parameter = "bath.g_over_v"
values = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]
"#;

const METHODS: &str = r#"
[model]
alpha = 0.01
v = 0.04
omega_c = 100.0
[grid]
half_periods = 2
n_steps = 4000
[[sweep]]
parameter = "model.alpha"
values = [0.01, 0.2]
[[sweep]]
parameter = "model.v"
values = [0.04, 1.0]
"#;

const BIAS: &str = r#"
solver = "ed"
[model]
v = 0.04
preparation = "p1"
[bath]
omega_over_v = 1.0
g_over_v = 1.0
[grid]
half_periods = 1
n_steps = 2000
[[sweep]]
parameter = "model.m"
values = [-0.5, 0.0, 0.5]
[[sweep]]
parameter = "bath.g_over_v"
values = [0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0]
"#;

const CONTINUUM_ENERGY: &str = r#"
solver = "sse"
[model]
v = 0.04
omega_c = 100.0
[grid]
half_periods = 1
dt = 0.05
[[sweep]]
parameter = "model.v"
values = [0.04, 0.1, 0.3]
[[sweep]]
parameter = "model.alpha"
values = [0.02, 0.05, 0.1, 0.2, 0.3, 0.45]
"#;

const SSE_VS_ED: &str = r#"
[model]
alpha = 0.01
omega_c = 100.0
v = 0.04
[grid]
half_periods = 2
dt = 0.05
[[sweep]]
parameter = "model.v"
values = [0.04, 0.3]
"#;

const ONE_MODE_FLUCT: &str = r#"
solver = "ed"
[bath]
omega_over_v = 1.0
g_over_v = 1.0
[grid]
half_periods = 2
n_steps = 4000
[[sweep]]
parameter = "model.v"
values = [0.04, 0.3]
[[sweep]]
parameter = "bath.g_over_v"
values = [0.5, 2.0, 8.0]
"#;

const EIGHT_MODES: &str = r#"
solver = "ed"
[model]
v = 0.04
alpha = 0.02
omega_c = 100.0
cutoff = "hard"
[bath]
n_modes = 8
omega_max = 100.0
discretization = "resonant"
[ed]
max_total = 6
exempt = [[0, 8]]
tol = 1e-7
[grid]
half_periods = 2
dt = 0.05
"#;

const SSE_FLUCT: &str = r#"
solver = "sse"
[model]
omega_c = 100.0
v = 0.04
[grid]
half_periods = 1
dt = 0.05
[[sweep]]
parameter = "model.v"
values = [0.04, 0.3]
[[sweep]]
parameter = "model.alpha"
values = [0.05, 0.2]
"#;

fn parse(text: &str) -> Table {
    text.parse().expect("preset documents are valid TOML")
}

fn with_solver(text: &str, solver: &str) -> Table {
    let mut t = parse(text);
    t.insert("solver".into(), Value::String(solver.into()));
    t
}

fn with_bath(mut t: Table, bath: &str) -> Table {
    t.insert("bath".into(), Value::Table(parse(bath)));
    t
}

/// Runs of a preset as (run name, configuration document).
pub fn preset(name: &str) -> Result<Vec<(String, Table)>> {
    let runs = match name {
        "fig2a" => vec![("field".to_string(), parse(ONE_MODE_FIELD))],
        "fig2b" => vec![("energy".into(), parse(ONE_MODE_ENERGY))],
        "fig3abc" => vec![("performance".into(), parse(ONE_MODE_PERFORMANCE))],
        "fig4ab" => vec![("twelve_modes".into(), parse(TWELVE_MODES))],
        "fig5" => vec![("bethe".into(), parse(BETHE))],
        "fig6ab" => vec![("chern".into(), parse(CHERN_SWEEP))],
        "fig7" => ["sse", "gkls", "niba"].iter().map(|s| (s.to_string(), with_solver(METHODS, s))).collect(),
        "fig8" => vec![("bias".into(), parse(BIAS)), ("continuum".into(), parse(CONTINUUM_ENERGY))],
        "fig9" => vec![
            ("sse".into(), with_solver(SSE_VS_ED, "sse")),
            (
                "ed".into(),
                with_bath(with_solver(SSE_VS_ED, "ed"), "n_modes = 10\nomega_max = 100.0\n"),
            ),
        ],
        "fig10" => vec![("one_mode".into(), parse(ONE_MODE_FLUCT))],
        "fig11" => vec![("eight_modes".into(), parse(EIGHT_MODES))],
        "fig12" => vec![("sse".into(), parse(SSE_FLUCT))],
        _ => return Err(DynamoError::Argument(format!("unknown preset {name:?}"))),
    };
    Ok(runs)
}

/// Recursive merge: tables merge key by key, everything else in `overlay`
/// replaces the base value.
pub fn merge(base: &mut Table, overlay: &Table) {
    for (k, v) in overlay {
        match (base.get_mut(k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => {
                for key in o.keys() {
                    for other in exclusive_siblings(k, key) {
                        b.remove(other);
                    }
                }
                merge(b, o)
            }
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}
