//! MTLT against beamwidth for a target at range r0 in a sector of the
//! mean-field range R(θ). Four (D, r0) scenarios share one log grid in θ.

use super::RunSpec;
use crate::table::ResultTable;
use anyhow::Result;
use isactrack::kinematics::{beamtrap_sweep, theta_crit, WalkOptions};
use isactrack::phy;
use std::f64::consts::PI;

/// (D in m²/s, r0 in m)
pub const SCENARIOS: [(f64, f64); 4] = [(1.0, 20.0), (1.0, 30.0), (5.0, 20.0), (5.0, 30.0)];
/// grid ratio between neighbouring beamwidths
pub const STEP: f64 = 1.2599210498948732;

/// Common θ grid: from θ_crit(largest r0)/8 to 2 θ_crit(smallest r0), capped at 2π.
pub fn beamtrap_scenarios(spec: &RunSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    let sc = &spec.scenario;
    let noise = phy::mean_field_noise(sc.lambda_b, &sc.radio)?;
    let crit: Vec<f64> = SCENARIOS.iter().map(|&(_, r0)| theta_crit(r0, &sc.radio, noise).0).collect();
    let lo = crit.iter().cloned().fold(f64::MAX, f64::min) / 8.0;
    let hi = (crit.iter().cloned().fold(0.0, f64::max) * 2.0).min(2.0 * PI);
    let mut grid = vec![lo];
    while *grid.last().unwrap() * STEP <= hi {
        grid.push(grid.last().unwrap() * STEP);
    }
    Ok((grid, crit))
}

pub fn run(spec: &RunSpec) -> Result<ResultTable> {
    let sc = &spec.scenario;
    let (grid, crit) = beamtrap_scenarios(spec)?;
    let mut t = ResultTable::new(
        "beamtrap",
        &[
            ("scenario", "1"),
            ("d", "m2/s"),
            ("r0", "m"),
            ("theta_m", "deg"),
            ("theta_crit", "deg"),
            ("r_max", "m"),
            ("mtlt", "s"),
            ("std_error", "s"),
            ("decoupled_bound", "s"),
        ],
    );
    for (i, &(d, r0)) in SCENARIOS.iter().enumerate() {
        let pts = beamtrap_sweep(r0, &grid, &sc.radio, sc.lambda_b, d, spec.n_trajectories(), spec.seed_for(i as u64), WalkOptions::default())?;
        let peak = pts.iter().max_by(|a, b| a.mtlt.total_cmp(&b.mtlt)).unwrap();
        t.meta_num(&format!("scenario_{i}_peak_theta_deg"), peak.theta.to_degrees());
        t.meta_num(&format!("scenario_{i}_theta_crit_deg"), crit[i].to_degrees());
        for p in &pts {
            t.push(vec![
                i.into(),
                d.into(),
                r0.into(),
                p.theta.to_degrees().into(),
                crit[i].to_degrees().into(),
                p.r_max.into(),
                p.mtlt.into(),
                p.std_error.into(),
                p.bound.into(),
            ]);
        }
    }
    t.meta_num("grid_step_ratio", STEP);
    Ok(t)
}
