//! Capacity cost of the kinematic target: the three-stage solver over an η
//! grid for four diffusion coefficients.

use super::{log_grid, RunSpec};
use crate::config::KM2;
use crate::table::ResultTable;
use anyhow::Result;
use isactrack::xlayer::{pareto_sweep, BeamLimits, ParetoInputs};

pub const D_SET: [f64; 4] = [1.0, 5.0, 20.0, 50.0];

pub fn run(spec: &RunSpec) -> Result<ResultTable> {
    let sc = &spec.scenario;
    let inputs = ParetoInputs {
        density: sc.pareto_lambda_b,
        traffic: sc.traffic,
        qos: sc.qos,
        resources: sc.pareto_resources,
        radio: sc.radio,
        rate: sc.rate,
        beams: BeamLimits::default(),
    };
    let etas = log_grid(0.01, 1.0, 21);
    let rows = pareto_sweep(&etas, &D_SET, &inputs)?;
    let mut t = ResultTable::new(
        "pareto",
        &[
            ("d", "m2/s"),
            ("eta", "1"),
            ("tau_req", "s"),
            ("k_star", "1"),
            ("theta_m_star", "deg"),
            ("q", "1"),
            ("supercritical", "-"),
            ("rho0_star", "1"),
            ("rho0_feasible", "-"),
            ("c_hat", "bit/s"),
            ("c_cost", "bit/s"),
        ],
    );
    for r in &rows {
        t.push(vec![
            r.d.into(),
            r.eta.into(),
            r.tau_req.into(),
            r.k_star.into(),
            r.theta_m_star.to_degrees().into(),
            r.q.into(),
            r.supercritical.into(),
            r.rho0_star.into(),
            r.rho0_feasible.into(),
            r.c_hat.into(),
            r.c_cost.into(),
        ]);
    }
    let cost = |d: f64| rows.iter().rfind(|r| r.d == d).map(|r| r.c_cost).unwrap();
    t.meta_num("penalty_ratio_d20_over_d1_at_eta_1", cost(20.0) / cost(1.0));
    t.meta_num("lambda_b_per_km2", sc.pareto_lambda_b / KM2);
    t.meta_num("rho_0", sc.pareto_resources.rho_0);
    t.meta_num("rho_max", sc.pareto_resources.rho_max);
    Ok(t)
}
