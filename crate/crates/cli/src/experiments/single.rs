//! Single-BS MTLT against BS density for four beamwidths.
//!
//! The safe zone is the disk of radius R_max,1(λ_b, θ) from the
//! interference-limited mean-gain coverage law; walkers start at its centre.
//! The safe zone does not depend on the realisation, so each point is one
//! pooled ensemble of `n_trajectories` walks.

use super::{log_grid, loglog_slope, status, RunSpec};
use crate::config::KM2;
use crate::table::{Cell, ResultTable};
use anyhow::Result;
use isactrack::kinematics::{mtlt_disk_analytic, simulate_fpt_disk, DiffusionParams};
use isactrack::phy::{self, CoverageModel};

pub const THETAS_DEG: [f64; 4] = [1.0, 5.0, 10.0, 30.0];

pub fn run(spec: &RunSpec) -> Result<ResultTable> {
    let sc = &spec.scenario;
    let lambdas = log_grid(1.0, 1000.0, 7);
    let mut t = ResultTable::new(
        "mtlt-single",
        &[
            ("theta_m", "deg"),
            ("lambda_b", "1/km2"),
            ("r_max", "m"),
            ("mtlt", "s"),
            ("std_error", "s"),
            ("mtlt_closed_form", "s"),
            ("r_max_full_model", "m"),
            ("mtlt_full_model", "s"),
            ("censored_fraction", "1"),
            ("status", "-"),
        ],
    );
    for (i, &deg) in THETAS_DEG.iter().enumerate() {
        let beam = phy::make_beam(deg.to_radians(), sc.zeta)?;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (j, &lam) in lambdas.iter().enumerate() {
            let density = lam * KM2;
            let full = phy::max_safe_range(sc.eps_0, density, &sc.radio, &beam).ok();
            let r = phy::max_safe_range_with(sc.eps_0, density, &sc.radio, &beam, CoverageModel::INTERFERENCE_LIMITED);
            let ens = r.as_ref().map_err(Clone::clone).and_then(|&r| {
                simulate_fpt_disk(r, 0.0, DiffusionParams::for_scale(sc.d, r), spec.n_trajectories(), spec.seed_for((i * 100 + j) as u64))
            });
            let (mean, se, cens) = match &ens {
                Ok(e) => (Some(e.mean), Some(e.std_error), Some(e.censored_fraction())),
                Err(_) => (None, None, None),
            };
            if let Some(m) = mean {
                xs.push(lam);
                ys.push(m);
            }
            let rv = r.as_ref().ok().copied();
            t.push(vec![
                deg.into(),
                lam.into(),
                rv.into(),
                mean.into(),
                se.into(),
                rv.map(|r| mtlt_disk_analytic(r, sc.d)).into(),
                full.into(),
                full.map(|r| mtlt_disk_analytic(r, sc.d)).into(),
                cens.into(),
                Cell::Text(status(&ens)),
            ]);
        }
        t.meta_num(&format!("slope_theta_{deg}deg"), loglog_slope(&xs, &ys));
    }
    Ok(t)
}
