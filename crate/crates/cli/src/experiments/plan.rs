//! The cross-layer plan for the configured scenario.

use super::RunSpec;
use crate::config::KM2;
use crate::table::ResultTable;
use anyhow::Result;
use isactrack::kinematics::theta_crit;
use isactrack::phy;
use isactrack::resetting::footprint_radius;
use isactrack::xlayer::{self, BeamLimits};

pub fn run(spec: &RunSpec) -> Result<ResultTable> {
    let sc = &spec.scenario;
    let r1 = phy::max_safe_range(sc.eps_0, sc.lambda_b, &sc.radio, &sc.beam).ok();
    let mut p = xlayer::optimum_dynamic(sc.lambda_b, sc.d, &sc.qos, &sc.traffic, &sc.resources, &sc.handover, r1)?;
    let noise = phy::mean_field_noise(sc.lambda_b, &sc.radio)?;
    let limits = BeamLimits::default();
    let (crit, _) = theta_crit(footprint_radius(p.k_star as f64, sc.lambda_b), &sc.radio, noise);
    p.theta_m_star = Some(limits.theta_max.min(crit).max(limits.theta_min));
    let tau = xlayer::tau_req(&sc.qos, &sc.traffic);
    let mut t = ResultTable::new(
        "plan",
        &[
            ("lambda_b", "1/km2"),
            ("regime", "-"),
            ("k_star", "1"),
            ("nu_h_star", "1/s"),
            ("rho0_star", "1"),
            ("theta_m_star", "deg"),
            ("k_star_static_pre_ceiling", "1"),
            ("k_star_static", "1"),
            ("k_rel", "1"),
            ("k_min", "1"),
            ("nu_min_single", "1/s"),
            ("nu_low", "1/s"),
            ("tau_req", "s"),
            ("r_max1", "m"),
            ("capacity_static", "1/km2"),
            ("capacity_dynamic", "1/km2"),
            ("auto_met", "-"),
            ("resource_feasible", "-"),
            ("kinematic_feasible", "-"),
        ],
    );
    t.push(vec![
        (sc.lambda_b / KM2).into(),
        p.regime.label().into(),
        p.k_star.into(),
        p.nu_h_star.into(),
        p.rho0_star.into(),
        p.theta_m_star.map(f64::to_degrees).into(),
        p.k_star_static.pre_ceiling.into(),
        p.k_star_static.k.into(),
        p.k_rel.into(),
        p.k_min.into(),
        p.nu_min_single.into(),
        p.nu_low.into(),
        tau.exact.into(),
        r1.into(),
        (p.capacity_static / KM2).into(),
        (p.capacity_dynamic / KM2).into(),
        p.auto_met.into(),
        p.resource_feasible.into(),
        p.kinematic_feasible.into(),
    ]);
    Ok(t)
}
