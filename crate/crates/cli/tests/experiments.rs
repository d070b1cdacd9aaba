use isactrack_cli::config::{RawConfig, Scenario};
use isactrack_cli::experiments::{self, Experiment, RunSpec};
use isactrack_cli::table::ResultTable;

fn run_with(e: Experiment, overrides: &[(&str, f64)]) -> ResultTable {
    let mut raw = RawConfig::default();
    for (k, v) in overrides {
        raw.set(k, *v).unwrap();
    }
    experiments::run(&RunSpec::new(e, Scenario::from_raw(raw).unwrap())).unwrap()
}

#[test]
fn pareto_capacity_falls_with_eta_and_agility_costs() {
    let t = run_with(Experiment::Pareto, &[]);
    let (d, c) = (t.numbers("d"), t.numbers("c_hat"));
    for dv in [1.0, 5.0, 20.0, 50.0] {
        let ys: Vec<f64> = d.iter().zip(&c).filter(|(a, _)| **a == dv).map(|(_, y)| *y).collect();
        assert_eq!(ys.len(), 21);
        assert!(ys.windows(2).all(|w| w[1] <= w[0]), "D = {dv}: {ys:?}");
    }
    // at matched η, a faster target never costs less
    for i in 0..21 {
        let col: Vec<f64> = (0..4).map(|j| c[j * 21 + i]).collect();
        assert!(col.windows(2).all(|w| w[1] <= w[0]), "{col:?}");
    }
    let ratio = t.meta_f64("penalty_ratio_d20_over_d1_at_eta_1").unwrap();
    assert!((10f64.sqrt()..=10f64.powf(1.5)).contains(&ratio), "{ratio}");
}

#[test]
fn static_capacity_is_linear_then_flat() {
    let t = run_with(Experiment::CapacityStatic, &[]);
    let lam = t.numbers("lambda_b");
    // floored at K_rel = 3: ρ_max λ_b/(3ρ0) up to the crossover, then the ceiling
    let cap = t.numbers("lambda_t_max");
    let cross = t.meta_f64("static_crossover_per_km2").unwrap();
    let ceil = t.meta_f64("supercritical_ceiling_per_km2").unwrap();
    for (l, c) in lam.iter().zip(&cap) {
        if *l < 0.9 * cross {
            assert!((c / l - 10.0 / 3.0).abs() < 1e-9, "linear branch at {l}: {c}");
        } else if *l > 1.1 * cross {
            assert!((c - ceil).abs() < 1e-9 * ceil, "flat branch at {l}: {c}");
        }
    }
    let rising = |v: &[f64]| v.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12));
    assert!(rising(&cap));
    assert!(rising(&t.numbers("lambda_t_max_unfloored")));
}

#[test]
fn dynamic_ceiling_dominates_and_keeps_growing() {
    let t = run_with(Experiment::CapacityCompare, &[]);
    let lam = t.numbers("lambda_b");
    let (st, strict, dy) = (t.numbers("static"), t.numbers("static_strict"), t.numbers("dynamic"));
    for i in 0..lam.len() {
        assert!(dy[i] >= strict[i] * (1.0 - 1e-12), "at {}", lam[i]);
        if lam[i] <= 10.0 {
            assert!((dy[i] / st[i] - 1.0).abs() < 1e-9);
        }
    }
    let r = t.meta_f64("ratio_at_1000_per_km2").unwrap();
    assert!((10.0..=15.0).contains(&r), "{r}");
    let x = t.meta_f64("dynamic_crossover_per_km2").unwrap();
    assert!((1e5..=1e6).contains(&x), "{x}");
}

#[test]
fn dyn_plateau_then_blow_up() {
    let t = run_with(Experiment::MtltDyn, &[("n_trajectories", 2000.0)]);
    let (k, f, ratio) = (t.numbers("k"), t.numbers("nu_over_nu_c"), t.numbers("ratio_to_static"));
    for i in 0..k.len() {
        if f[i] <= 1e-2 {
            assert!(ratio[i] >= 1.0 && ratio[i] < 1.01, "plateau at {}: {}", f[i], ratio[i]);
        }
        // ratio depends on ν/ν_c only: 4(I0(√f) − 1)/f
        if f[i] >= 100.0 {
            assert!(ratio[i] > 10.0);
        }
    }
    let pick = |kk: f64, ff: f64| (0..k.len()).find(|&i| k[i] == kk && (f[i] / ff - 1.0).abs() < 1e-6).map(|i| ratio[i]).unwrap();
    assert!((pick(3.0, 1.0) - pick(100.0, 1.0)).abs() < 1e-9);
    let col = |name: &str| t.column(name).unwrap();
    let (c_mc, c_se, c_cf) = (col("mtlt_mc"), col("std_error"), col("mtlt_closed_form"));
    let mut n = 0;
    for row in &t.rows {
        if let (Some(m), Some(se), Some(cf)) = (row[c_mc].as_f64(), row[c_se].as_f64(), row[c_cf].as_f64()) {
            let z = (m - cf) / se;
            assert!(z.abs() < 5.0, "MC {m} vs closed form {cf}: z = {z}");
            n += 1;
        }
    }
    assert!(n > 40, "{n}");
}

#[test]
fn plan_row_is_consistent() {
    let t = run_with(Experiment::Plan, &[]);
    assert_eq!(t.rows.len(), 1);
    assert_eq!(t.texts("regime"), vec!["handover-rich".to_string()]);
    assert_eq!(t.numbers("k_star"), vec![3.0]);
    let tau = t.numbers("tau_req")[0];
    assert!((tau - 2985.0).abs() < 1.0, "{tau}");
}
