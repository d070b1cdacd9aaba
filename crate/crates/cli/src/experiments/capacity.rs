//! Capacity ceilings against BS density: the static phase-conditioned
//! ceiling and its comparison with the handover-enabled one.

use super::{log_grid, RunSpec};
use crate::config::KM2;
use crate::table::{Cell, ResultTable};
use anyhow::Result;
use isactrack::geometry::{percolation_parameter, Regime};
use isactrack::phy;
use isactrack::xlayer::{self, Crossover};

fn regime_label(r: Regime) -> &'static str {
    match r {
        Regime::Subcritical => "subcritical",
        Regime::Supercritical => "supercritical",
    }
}

pub fn run_static(spec: &RunSpec) -> Result<ResultTable> {
    let sc = &spec.scenario;
    let k_rel = sc.k_rel() as f64;
    let cols = [
        ("lambda_b", "1/km2"),
        ("r_max1", "m"),
        ("q", "1"),
        ("regime", "-"),
        ("k_star_pre_ceiling", "1"),
        ("k_star", "1"),
        ("lambda_t_max", "1/km2"),
        ("lambda_t_max_unfloored", "1/km2"),
        ("lambda_t_max_small_eps", "1/km2"),
        ("lambda_t_max_strict", "1/km2"),
        ("lambda_a_max", "1/(s km2)"),
        ("c_comm", "bit/s"),
        ("status", "-"),
    ];
    let mut t = ResultTable::new("capacity-static", &cols);
    for lam in log_grid(1.0, 1e4, 41) {
        let density = lam * KM2;
        let r1 = match phy::max_safe_range(sc.eps_0, density, &sc.radio, &sc.beam) {
            Ok(r) => r,
            Err(e) => {
                let mut row = vec![Cell::Missing; cols.len()];
                row[0] = lam.into();
                row[cols.len() - 1] = e.to_string().into();
                t.push(row);
                continue;
            }
        };
        let (q, _) = percolation_parameter(density, r1);
        let cap = xlayer::capacity_static(density, sc.d, &sc.qos, &sc.traffic, &sc.resources, Some(r1), k_rel)?;
        let k_used = (cap.k_star.k as f64).max(k_rel);
        let comm = xlayer::comm_capacity_surrogate(sc.resources.rho_0, sc.beam.theta_m, k_used, &sc.traffic, density, &sc.resources, &sc.rate);
        t.push(vec![
            lam.into(),
            r1.into(),
            q.into(),
            regime_label(cap.regime).into(),
            cap.k_star.pre_ceiling.into(),
            cap.k_star.k.into(),
            (cap.lambda_t_max_floored / KM2).into(),
            (cap.lambda_t_max / KM2).into(),
            (cap.lambda_t_max_small_eps / KM2).into(),
            (cap.lambda_t_max_strict / KM2).into(),
            (cap.lambda_a_max / KM2).into(),
            comm.as_ref().ok().copied().into(),
            match comm {
                Ok(_) => "ok".to_string(),
                Err(e) => e.to_string(),
            }
            .into(),
        ]);
    }
    let hi = xlayer::capacity_static(1e3 * KM2, sc.d, &sc.qos, &sc.traffic, &sc.resources, None, k_rel)?;
    t.meta_num("static_crossover_per_km2", xlayer::crossover_density_static(k_rel, sc.d, &sc.qos, &sc.traffic) / KM2);
    t.meta_num("supercritical_ceiling_per_km2", hi.lambda_t_max / KM2);
    t.meta_num("supercritical_ceiling_small_eps_per_km2", hi.lambda_t_max_small_eps / KM2);
    t.meta_num("tail_correction", hi.tail_correction);
    t.meta("k_rel", sc.k_rel());
    Ok(t)
}

pub fn run_compare(spec: &RunSpec) -> Result<ResultTable> {
    let sc = &spec.scenario;
    let k_rel = sc.k_rel() as f64;
    let mut t = ResultTable::new(
        "capacity-compare",
        &[
            ("lambda_b", "1/km2"),
            ("k_star_pre_ceiling", "1"),
            ("static", "1/km2"),
            ("static_strict", "1/km2"),
            ("dynamic", "1/km2"),
            ("dynamic_over_static", "1"),
            ("overhead_fraction", "1"),
            ("plan_regime", "-"),
            ("plan_k", "1"),
            ("plan_nu_h", "1/s"),
        ],
    );
    let ratio_at = |lam: f64| -> Result<(f64, f64, f64)> {
        let density = lam * KM2;
        let st = xlayer::capacity_static(density, sc.d, &sc.qos, &sc.traffic, &sc.resources, None, k_rel)?;
        let dy = xlayer::capacity_dynamic(density, sc.d, &sc.qos, &sc.traffic, &sc.resources, &sc.handover)?;
        Ok((st.lambda_t_max_floored, st.tail_correction, dy.lambda_t_max))
    };
    for lam in log_grid(1.0, 1e6, 49) {
        let density = lam * KM2;
        let (st, c, dy) = ratio_at(lam)?;
        let ovh = xlayer::capacity_dynamic(density, sc.d, &sc.qos, &sc.traffic, &sc.resources, &sc.handover)?;
        let plan = xlayer::optimum_dynamic(density, sc.d, &sc.qos, &sc.traffic, &sc.resources, &sc.handover, None)?;
        t.push(vec![
            lam.into(),
            plan.k_star_static.pre_ceiling.into(),
            (st / KM2).into(),
            (c * st / KM2).into(),
            (dy / KM2).into(),
            (dy / st).into(),
            ovh.overhead_fraction.into(),
            plan.regime.label().into(),
            plan.k_star.into(),
            plan.nu_h_star.into(),
        ]);
    }
    let (st, _, dy) = ratio_at(1e3)?;
    t.meta_num("ratio_at_1000_per_km2", dy / st);
    t.meta_num("static_crossover_per_km2", xlayer::crossover_density_static(k_rel, sc.d, &sc.qos, &sc.traffic) / KM2);
    match xlayer::crossover_density_dynamic(sc.d, &sc.qos, &sc.traffic, &sc.handover, k_rel)? {
        Crossover::At(x) => t.meta_num("dynamic_crossover_per_km2", x / KM2),
        Crossover::NeverSaturates => t.meta("dynamic_crossover_per_km2", "never"),
    }
    Ok(t)
}
