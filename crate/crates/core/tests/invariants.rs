use dynamo_core::analytic::free_spin;
use dynamo_core::ed::{self, FockTruncation};
use dynamo_core::energetics::{self, ground_state_chern};
use dynamo_core::gkls::{self, DensityMatrix2};
use dynamo_core::harness::config::ExperimentConfig;
use dynamo_core::harness::manifest::config_hash;
use dynamo_core::io::{format_value, parse_value};
use dynamo_core::model::{
    bath_phases, decompose_field_continuum, discretize_bath, induced_field_from_sz, Discretization,
};
use dynamo_core::sse::{self, SseOptions};
use dynamo_core::{Cutoff, FieldSource, Mode, ModeSet, ModelParams, SpinTrajectory, TimeGrid};
use proptest::prelude::*;
use std::f64::consts::PI;
use toml::Table;

fn cutoff() -> impl Strategy<Value = Cutoff> {
    prop_oneof![Just(Cutoff::Exponential), Just(Cutoff::Hard)]
}

fn smooth_sz(grid: TimeGrid, a: f64, w: f64) -> SpinTrajectory {
    let ts = grid.times();
    let sz: Vec<f64> = ts.iter().map(|t| (1.0 - a) * (w * t).cos() + a).collect();
    SpinTrajectory::new(grid, vec![0.0; ts.len()], vec![0.0; ts.len()], sz)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn discretized_couplings_follow_ohmic_rule(alpha in 0.0..0.5f64, n in 1usize..40, w_max in 1.0..200.0f64) {
        let p = ModelParams { alpha, ..Default::default() };
        let ms = discretize_bath(&p, n, w_max, Discretization::Linear).unwrap();
        for pair in ms.modes.windows(2) {
            prop_assert!(pair[0].omega < pair[1].omega);
        }
        for m in &ms.modes {
            let want = 2.0 * alpha * m.omega * m.delta_omega;
            prop_assert!((m.g * m.g - want).abs() <= 4.0 * f64::EPSILON * want.max(f64::MIN_POSITIVE));
        }
    }

    #[test]
    fn unordered_modes_rejected(w in 0.1..10.0f64, g in 0.0..1.0f64) {
        let m = Mode { omega: w, g, delta_omega: 0.0 };
        prop_assert!(ModeSet::new(vec![m, m]).is_err());
    }

    #[test]
    fn time_grid_spacing(t0 in -10.0..10.0f64, span in 1e-3..1e3f64, n in 1usize..5000) {
        let g = TimeGrid::new(t0, t0 + span, n).unwrap();
        prop_assert!(g.dt() > 0.0);
        prop_assert_eq!(g.len(), n + 1);
        prop_assert!((g.t(n) - (t0 + span)).abs() <= 1e-12 * span.max(t0.abs()));
    }

    #[test]
    fn free_spin_stays_on_sphere(t in 0.0..1e3f64, h in 0.1..5.0f64, v in 1e-3..2.0f64) {
        let (x, y, z) = free_spin(t, h, v);
        prop_assert!((x * x + y * y + z * z - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bath_phase_symmetries(alpha in 0.0..0.5f64, wc in 1.0..200.0f64, t in 0.0..50.0f64, c in cutoff()) {
        let p = ModelParams { alpha, omega_c: wc, cutoff: c, ..Default::default() };
        let (q1, q2) = bath_phases(t, &p);
        let (q1m, q2m) = bath_phases(-t, &p);
        prop_assert!((q1 + q1m).abs() <= 1e-12 * (1.0 + q1.abs()));
        prop_assert!((q2 - q2m).abs() <= 1e-12 * (1.0 + q2.abs()));
        prop_assert_eq!(bath_phases(0.0, &p).1, 0.0);
    }

    #[test]
    fn field_parts_sum_to_total(a in -0.5..0.5f64, w in 0.01..1.0f64, alpha in 0.0..0.3f64, n in 1usize..4) {
        let grid = TimeGrid::new(0.0, 20.0, 400).unwrap();
        let traj = smooth_sz(grid, a, w);
        let p = ModelParams { alpha, ..Default::default() };
        let ms = discretize_bath(&p, n, 10.0, Discretization::Linear).unwrap();
        let fields = [
            induced_field_from_sz(&traj, FieldSource::Modes(&ms), p.preparation).unwrap(),
            induced_field_from_sz(&traj, FieldSource::Continuum(&p), p.preparation).unwrap(),
            decompose_field_continuum(&traj, &p).unwrap(),
        ];
        for f in fields {
            let (hf, ha, hd) = (f.h_free.unwrap(), f.h_ad.unwrap(), f.h_dyn.unwrap());
            for i in 0..f.h_total.len() {
                let sum = hf[i] + ha[i] + hd[i];
                prop_assert!((f.h_total[i] - sum).abs() <= 1e-10 * (1.0 + f.h_total[i].abs()));
            }
        }
    }

    #[test]
    fn gkls_keeps_a_density_matrix(
        x in -0.57..0.57f64, y in -0.57..0.57f64, z in -0.57..0.57f64,
        alpha in 0.0..0.05f64, v in 0.02..0.5f64,
    ) {
        let p = ModelParams { v, alpha, ..Default::default() };
        let rates = gkls::build_rates(&p).unwrap();
        prop_assert!(rates.gamma_relax >= 0.0 && rates.gamma_deph >= 0.0);
        let grid = TimeGrid::with_max_step(20.0, 0.5).unwrap();
        let run = gkls::propagate_gkls(&DensityMatrix2::from_bloch(x, y, z).unwrap(), &p, &grid, 1e-9).unwrap();
        prop_assert!(run.max_trace_error < 1e-9);
        prop_assert!(run.min_eigenvalue > -1e-9);
        prop_assert!(run.traj.bloch_excess() < 1e-9);
    }

    #[test]
    fn chern_is_zero_or_one(m in -3.0..3.0f64) {
        let c = ground_state_chern(&ModelParams { m, ..Default::default() });
        prop_assert_eq!(c, if m.abs() < 1.0 { 1.0 } else { 0.0 });
    }

    #[test]
    fn csv_values_round_trip(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        prop_assert_eq!(parse_value(&format_value(x)).unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn sweep_points_form_a_product(a in 1usize..5, b in 1usize..5) {
        let alphas: Vec<String> = (0..a).map(|i| format!("{}", 0.01 * (i + 1) as f64)).collect();
        let vs: Vec<String> = (0..b).map(|i| format!("{}", 0.04 * (i + 1) as f64)).collect();
        let text = format!(
            "solver = \"gkls\"\n[[sweep]]\nparameter = \"model.alpha\"\nvalues = [{}]\n[[sweep]]\nparameter = \"model.v\"\nvalues = [{}]\n",
            alphas.join(", "),
            vs.join(", ")
        );
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        prop_assert_eq!(cfg.points().unwrap().len(), a * b);
    }

    #[test]
    fn config_hash_ignores_key_order(keys in prop::collection::btree_map("[a-z]{1,6}", -1e3..1e3f64, 1..8)) {
        let mut forward = String::new();
        for (k, v) in &keys {
            forward.push_str(&format!("{k} = {v:?}\n"));
        }
        let mut backward = String::new();
        for (k, v) in keys.iter().rev() {
            backward.push_str(&format!("{k} = {v:?}\n"));
        }
        let a: Table = forward.parse().unwrap();
        let b: Table = backward.parse().unwrap();
        prop_assert_eq!(config_hash(&a), config_hash(&b));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn exact_run_respects_moment_bounds(gv in 0.1..2.0f64, wv in 0.5..2.0f64, m in -0.5..0.5f64) {
        let v = 0.3;
        let p = ModelParams { v, m, ..Default::default() };
        let ms = ModeSet::single(wv * v, gv * v).unwrap();
        let grid = TimeGrid::new(0.0, PI / v, 200).unwrap();
        let run = ed::run(&p, &ms, &FockTruncation::admissible(&ms), &grid, 1e-9).unwrap();
        prop_assert!(run.norm_drift < 1e-7);
        prop_assert!(run.traj.bloch_excess() < 1e-7);
        for (b, n) in run.record.b.iter().zip(&run.record.n) {
            prop_assert!(n[0] >= b[0].norm_sqr() - 1e-9);
        }
        let ledger = energetics::ledger_from_ed(&run, &p, &ms);
        prop_assert!(ledger.e_fluct.iter().all(|&e| e >= -1e-10));
        prop_assert!(ledger.balance_residual(gv * gv * v) < 1e-6);
    }

    #[test]
    fn sse_errors_are_nonnegative(alpha in 0.0..0.3f64, seed in 0u64..1000) {
        let p = ModelParams { v: 1.0, alpha, ..Default::default() };
        let grid = TimeGrid::new(0.0, 1.0, 50).unwrap();
        let r = sse::average(&p, &grid, &SseOptions { n_traj: 8, seed, ..Default::default() }).unwrap();
        for se in [&r.se_sx, &r.se_sy, &r.se_sz] {
            prop_assert!(se.iter().all(|&e| e >= 0.0 || e.is_nan()));
        }
    }
}
