//! Cooperative MTLT against cluster size on either side of the percolation
//! threshold. R_max,1 is pinned by Q = λ_b π R_max,1².

use super::RunSpec;
use crate::config::KM2;
use crate::table::ResultTable;
use anyhow::Result;
use isactrack::coop::{coop_mtlt_sweep, mtlt_static, CoopSweep, CoopZone};
use isactrack::kinematics::WalkOptions;
use isactrack::mc;
use std::f64::consts::PI;

/// (label, λ_b in 1/km², Q, zones)
pub const PHASES: [(&str, f64, f64, &[CoopZone]); 2] = [
    ("subcritical", 0.5, 0.67, &[CoopZone::Island, CoopZone::KnnUnion]),
    ("supercritical", 10.0, 2.98, &[CoopZone::Footprint]),
];

pub const KS: std::ops::RangeInclusive<usize> = 1..=10;

fn zone_label(z: CoopZone) -> &'static str {
    match z {
        CoopZone::Footprint => "footprint",
        CoopZone::Island => "island",
        CoopZone::KnnUnion => "knn-union",
    }
}

pub fn run(spec: &RunSpec) -> Result<ResultTable> {
    let sc = &spec.scenario;
    let ks: Vec<usize> = KS.collect();
    let per_real = spec.n_trajectories().div_ceil(spec.n_realizations()).max(1);
    let mut t = ResultTable::new(
        "mtlt-coop",
        &[
            ("phase", "-"),
            ("q", "1"),
            ("lambda_b", "1/km2"),
            ("r_max1", "m"),
            ("zone", "-"),
            ("k", "1"),
            ("mtlt", "s"),
            ("std_error", "s"),
            ("mtlt_closed_form", "s"),
            ("footprint_mean", "s"),
            ("censored_fraction", "1"),
        ],
    );
    for (pi, (label, lam, q, zones)) in PHASES.iter().enumerate() {
        let density = lam * KM2;
        let r_max1 = (q / (PI * density)).sqrt();
        for &zone in zones.iter() {
            let cfg = CoopSweep {
                density,
                r_max1,
                ks: ks.clone(),
                zone,
                d: sc.d,
                n_realizations: spec.n_realizations(),
                n_trajectories: per_real,
                side: sc.side,
                central: 0.8,
                // zones of one phase share the seed: common random numbers
                seed: spec.seed_for(pi as u64),
            };
            let points = coop_mtlt_sweep(&cfg, WalkOptions::default())?;
            let means: Vec<f64> = points.iter().map(|p| p.mean).collect();
            for p in &points {
                let theory = mtlt_static(p.k, density, sc.d, r_max1)?;
                t.push(vec![
                    (*label).into(),
                    (*q).into(),
                    (*lam).into(),
                    r_max1.into(),
                    zone_label(zone).into(),
                    p.k.into(),
                    p.mean.into(),
                    p.std_error.into(),
                    theory.mtlt.into(),
                    p.footprint_mean.into(),
                    p.censored_fraction.into(),
                ]);
            }
            let tag = format!("{label}_{}", zone_label(zone));
            let max = means.iter().cloned().fold(f64::MIN, f64::max);
            let min = means.iter().cloned().fold(f64::MAX, f64::min);
            t.meta_num(&format!("{tag}_max_over_min"), max / min);
            let kx: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
            let (slope, _) = mc::linear_fit(&kx, &means);
            t.meta_num(&format!("{tag}_slope_s_per_k"), slope);
        }
        t.meta_num(&format!("{label}_expected_slope_s_per_k"), 1.0 / (4.0 * PI * density * sc.d));
    }
    Ok(t)
}
